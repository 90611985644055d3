//! Triangulations of the unit disk with a tagged Dirichlet/Neumann boundary.
//!
//! A [`Mesh`] stores counter-clockwise triangles and the closed loop of
//! boundary edges, each tagged [`BoundaryTag::Dirichlet`] or
//! [`BoundaryTag::Neumann`]. Nodes that touch both parts (the two junction
//! points of a disk split into two arcs) count as Dirichlet nodes for the
//! displacement, but still belong to the Neumann node list so that surface
//! loads and boundary inner products see the full closed Neumann arc.

mod generate;
mod io;

pub use generate::{generate_disk_mesh, rings_for, MAX_EDGE_FACTOR};
pub use io::{mesh_from_str, mesh_to_string, read_mesh, write_mesh};

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// Angular interval `[start, end)` (radians) of the boundary held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPartitionSpec {
    pub dirichlet_arc: (f64, f64),
}

impl Default for BoundaryPartitionSpec {
    /// Lower half circle fixed, upper half loaded.
    fn default() -> Self {
        Self {
            dirichlet_arc: (std::f64::consts::PI, TAU),
        }
    }
}

impl BoundaryPartitionSpec {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        let spec = Self {
            dirichlet_arc: (start, end),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (start, end) = self.dirichlet_arc;
        let width = end - start;
        if !(start.is_finite() && end.is_finite()) || !(width > 0.0 && width < TAU) {
            return Err(Error::Partition(format!(
                "dirichlet arc [{start}, {end}) must have width in (0, 2pi)"
            )));
        }
        Ok(())
    }

    /// Whether the polar angle `theta` falls inside the Dirichlet arc.
    pub fn contains(&self, theta: f64) -> bool {
        let (start, end) = self.dirichlet_arc;
        (theta - start).rem_euclid(TAU) < end - start
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    node_elements: OnceLock<Vec<Vec<usize>>>,
    neumann_nodes: OnceLock<Vec<usize>>,
    dirichlet_nodes: OnceLock<Vec<usize>>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.triangles == other.triangles
            && self.boundary_edges == other.boundary_edges
    }
}

impl Mesh {
    /// Builds a mesh and checks the structural invariants.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mesh = Self::from_parts_unchecked(nodes, triangles, boundary_edges);
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Self {
        Self {
            nodes,
            triangles,
            boundary_edges,
            node_elements: OnceLock::new(),
            neumann_nodes: OnceLock::new(),
            dirichlet_nodes: OnceLock::new(),
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, element: usize) -> f64 {
        let [a, b, c] = self.triangles[element];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn areas(&self) -> Vec<f64> {
        (0..self.num_elements()).map(|e| self.signed_area(e)).collect()
    }

    pub fn centroid(&self, element: usize) -> Point {
        let [a, b, c] = self.triangles[element];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn centroids(&self) -> Vec<Point> {
        (0..self.num_elements()).map(|e| self.centroid(e)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.areas().iter().sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| distance(self.nodes[a], self.nodes[b]))
            .fold(0.0, f64::max)
    }

    pub fn count_edges(&self, tag: BoundaryTag) -> usize {
        self.boundary_edges.iter().filter(|e| e.tag == tag).count()
    }

    /// Elements incident to each node, built on first use.
    pub fn node_elements(&self) -> &[Vec<usize>] {
        self.node_elements.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.nodes.len()];
            for (e, tri) in self.triangles.iter().enumerate() {
                for &n in tri {
                    adj[n].push(e);
                }
            }
            adj
        })
    }

    /// Sorted nodes lying on at least one Neumann edge, junctions included.
    pub fn neumann_nodes(&self) -> &[usize] {
        self.neumann_nodes
            .get_or_init(|| self.tagged_nodes(BoundaryTag::Neumann))
    }

    /// Sorted nodes lying on at least one Dirichlet edge; their displacement is zero.
    pub fn dirichlet_nodes(&self) -> &[usize] {
        self.dirichlet_nodes
            .get_or_init(|| self.tagged_nodes(BoundaryTag::Dirichlet))
    }

    fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| [e.a, e.b])
            .collect();
        set.into_iter().collect()
    }

    /// Retags every boundary edge by the polar angle of its midpoint.
    pub fn partition_boundary(&self, spec: &BoundaryPartitionSpec) -> Result<Mesh> {
        spec.validate()?;
        let edges: Vec<BoundaryEdge> = self
            .boundary_edges
            .iter()
            .map(|e| {
                let (pa, pb) = (self.nodes[e.a], self.nodes[e.b]);
                let theta = (0.5 * (pa[1] + pb[1])).atan2(0.5 * (pa[0] + pb[0]));
                let tag = if spec.contains(theta) {
                    BoundaryTag::Dirichlet
                } else {
                    BoundaryTag::Neumann
                };
                BoundaryEdge { a: e.a, b: e.b, tag }
            })
            .collect();
        let dirichlet = edges.iter().filter(|e| e.tag == BoundaryTag::Dirichlet).count();
        if dirichlet == 0 {
            return Err(Error::Partition("no boundary edge is Dirichlet".into()));
        }
        if dirichlet == edges.len() {
            return Err(Error::Partition("no boundary edge is Neumann".into()));
        }
        Ok(Mesh::from_parts_unchecked(
            self.nodes.clone(),
            self.triangles.clone(),
            edges,
        ))
    }

    /// Structural invariants: index ranges, positive orientation, a single
    /// closed boundary loop matching the triangulation, and both tags present.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        if self.nodes.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Mesh("non-finite node coordinate".into()));
        }
        for (e, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("triangle {e} references a missing node")));
            }
            if self.signed_area(e) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {e} is not counter-clockwise")));
            }
        }
        if self.boundary_edges.iter().any(|e| e.a >= n || e.b >= n) {
            return Err(Error::Mesh("boundary edge references a missing node".into()));
        }

        // Edges used by exactly one triangle form the geometric boundary.
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if edge_count.values().any(|&c| c > 2) {
            return Err(Error::Mesh("edge shared by more than two triangles".into()));
        }
        let geometric: BTreeSet<(usize, usize)> = edge_count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&k, _)| k)
            .collect();
        let listed: BTreeSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.a.min(e.b), e.a.max(e.b)))
            .collect();
        if listed.len() != self.boundary_edges.len() || listed != geometric {
            return Err(Error::Mesh(
                "boundary edge table does not match the triangulation boundary".into(),
            ));
        }

        // Single closed loop: every boundary node has degree two and a walk
        // from any edge visits all of them.
        let mut neighbours: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in &self.boundary_edges {
            neighbours.entry(e.a).or_default().push(e.b);
            neighbours.entry(e.b).or_default().push(e.a);
        }
        if neighbours.values().any(|v| v.len() != 2) {
            return Err(Error::Mesh("boundary is not a simple loop".into()));
        }
        let start = self.boundary_edges[0].a;
        let (mut prev, mut cur, mut steps) = (start, self.boundary_edges[0].b, 1);
        while cur != start {
            let nb = &neighbours[&cur];
            let next = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = next;
            steps += 1;
            if steps > self.boundary_edges.len() {
                break;
            }
        }
        if steps != self.boundary_edges.len() {
            return Err(Error::Mesh("boundary consists of more than one loop".into()));
        }

        if self.count_edges(BoundaryTag::Dirichlet) == 0 || self.count_edges(BoundaryTag::Neumann) == 0
        {
            return Err(Error::Mesh("both Dirichlet and Neumann parts must be non-empty".into()));
        }
        Ok(())
    }

    /// Disk-specific check: every boundary node within `tol` of the unit circle.
    pub fn validate_disk(&self, tol: f64) -> Result<()> {
        for e in &self.boundary_edges {
            for v in [e.a, e.b] {
                let p = self.nodes[v];
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if (r - 1.0).abs() > tol {
                    return Err(Error::Mesh(format!(
                        "boundary node {v} at radius {r} is off the unit circle"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
