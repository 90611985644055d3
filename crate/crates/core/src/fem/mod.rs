//! Piecewise-linear vector finite elements for 2D isotropic elasticity.
//!
//! Unknowns are the two displacement components at every node that is not
//! on the Dirichlet boundary; Dirichlet nodes are eliminated and carry zero
//! displacement. Strains are constant per element, so every volume integral
//! in this crate is an exact `area * value` sum.
//!
//! Two boundary value problems share one bilinear form:
//!
//! * the Neumann problem, traction `g` on the loaded boundary, and
//! * the Dirichlet problem, displacement `f` prescribed on the loaded
//!   boundary (its solution is what the Dirichlet-to-Neumann map acts on).
//!
//! [`ForwardSolver`] factors the stiffness matrix once per field and reuses
//! the factorization for any number of loads.

mod field;
pub mod solver;
pub mod sparse;

pub use field::{LameBounds, LameField};
pub use solver::{Factorization, SolverKind, SolverOptions};
pub use sparse::CsrMatrix;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Symmetric 2x2 tensor stored as a full matrix.
pub type Tensor2 = [[f64; 2]; 2];

/// Returns `lambda * tr(strain) * I + 2 * mu * strain`.
pub fn isotropic_stress(lambda: f64, mu: f64, strain: &Tensor2) -> Tensor2 {
    let tr = strain[0][0] + strain[1][1];
    [
        [lambda * tr + 2.0 * mu * strain[0][0], 2.0 * mu * strain[0][1]],
        [2.0 * mu * strain[1][0], lambda * tr + 2.0 * mu * strain[1][1]],
    ]
}

/// Frobenius contraction `A : B`.
pub fn contract(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Strain energy density `C(lambda, mu) e : e = lambda tr(e)^2 + 2 mu e:e`.
pub fn energy_density(lambda: f64, mu: f64, strain: &Tensor2) -> f64 {
    let tr = strain[0][0] + strain[1][1];
    lambda * tr * tr + 2.0 * mu * contract(strain, strain)
}

/// Surface traction on the Neumann boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceLoad {
    /// Same vector on the whole Neumann boundary.
    Constant([f64; 2]),
    /// Nodal values of a piecewise-linear traction, ordered like
    /// [`Mesh::neumann_nodes`].
    Nodal(Vec<[f64; 2]>),
}

impl SurfaceLoad {
    pub fn nodal_values(&self, mesh: &Mesh) -> Result<Vec<[f64; 2]>> {
        let count = mesh.neumann_nodes().len();
        let values = match self {
            SurfaceLoad::Constant(v) => vec![*v; count],
            SurfaceLoad::Nodal(v) => {
                if v.len() != count {
                    return Err(Error::Parameter(format!(
                        "nodal load has {} values, mesh has {count} Neumann nodes",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("load has non-finite entries".into()));
        }
        Ok(values)
    }

    /// Hat function at Neumann node `index` in direction `component`.
    pub fn hat(mesh: &Mesh, index: usize, component: usize) -> Self {
        let mut v = vec![[0.0; 2]; mesh.neumann_nodes().len()];
        v[index][component] = 1.0;
        SurfaceLoad::Nodal(v)
    }
}

/// Shape-function gradients and area of one linear triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub area: f64,
    /// `grads[a] = (d phi_a / dx, d phi_a / dy)`.
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn of(mesh: &Mesh, element: usize) -> Self {
        let [i, j, k] = mesh.triangles()[element];
        let p = [mesh.nodes()[i], mesh.nodes()[j], mesh.nodes()[k]];
        let area = mesh.signed_area(element);
        let mut grads = [[0.0; 2]; 3];
        for a in 0..3 {
            let (b, c) = (p[(a + 1) % 3], p[(a + 2) % 3]);
            grads[a] = [(b[1] - c[1]) / (2.0 * area), (c[0] - b[0]) / (2.0 * area)];
        }
        Self { area, grads }
    }

    /// Linearized strain of the nodal displacements `u` of this element.
    pub fn strain(&self, u: &[[f64; 2]; 3]) -> Tensor2 {
        let mut grad_u = [[0.0; 2]; 2];
        for a in 0..3 {
            for c in 0..2 {
                for d in 0..2 {
                    grad_u[c][d] += u[a][c] * self.grads[a][d];
                }
            }
        }
        let off = 0.5 * (grad_u[0][1] + grad_u[1][0]);
        [[grad_u[0][0], off], [off, grad_u[1][1]]]
    }
}

pub fn element_geometry(mesh: &Mesh) -> Vec<ElementGeometry> {
    (0..mesh.num_elements()).map(|e| ElementGeometry::of(mesh, e)).collect()
}

/// Numbering of displacement unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    /// Free node index per mesh node, `None` on the Dirichlet boundary.
    node_to_free: Vec<Option<usize>>,
    free_count: usize,
    /// Mesh node per free node.
    free_nodes: Vec<usize>,
    neumann_nodes: Vec<usize>,
    /// Free dofs on the Neumann boundary, ordered by Neumann node then component.
    boundary_dofs: Vec<usize>,
    /// Position of each boundary dof inside the Neumann trace vector.
    boundary_slots: Vec<(usize, usize)>,
    /// Free dofs away from the Neumann boundary.
    interior_dofs: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut is_dirichlet = vec![false; mesh.num_nodes()];
        for &n in mesh.dirichlet_nodes() {
            is_dirichlet[n] = true;
        }
        let mut node_to_free = vec![None; mesh.num_nodes()];
        let mut free_nodes = Vec::new();
        for n in 0..mesh.num_nodes() {
            if !is_dirichlet[n] {
                node_to_free[n] = Some(free_nodes.len());
                free_nodes.push(n);
            }
        }
        let neumann_nodes = mesh.neumann_nodes().to_vec();
        let mut on_neumann = vec![false; mesh.num_nodes()];
        let mut boundary_dofs = Vec::new();
        let mut boundary_slots = Vec::new();
        for (slot, &n) in neumann_nodes.iter().enumerate() {
            on_neumann[n] = true;
            if let Some(f) = node_to_free[n] {
                for c in 0..2 {
                    boundary_dofs.push(2 * f + c);
                    boundary_slots.push((slot, c));
                }
            }
        }
        let interior_dofs = free_nodes
            .iter()
            .enumerate()
            .filter(|(_, &n)| !on_neumann[n])
            .flat_map(|(f, _)| [2 * f, 2 * f + 1])
            .collect();
        Self {
            node_to_free,
            free_count: free_nodes.len(),
            free_nodes,
            neumann_nodes,
            boundary_dofs,
            boundary_slots,
            interior_dofs,
        }
    }

    pub fn num_free_dofs(&self) -> usize {
        2 * self.free_count
    }

    pub fn dof(&self, node: usize, component: usize) -> Option<usize> {
        self.node_to_free[node].map(|f| 2 * f + component)
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior_dofs
    }

    pub fn neumann_nodes(&self) -> &[usize] {
        &self.neumann_nodes
    }

    /// Expands a free-dof vector to per-node displacements (zero on Dirichlet nodes).
    pub fn expand(&self, free: &[f64], num_nodes: usize) -> Vec<[f64; 2]> {
        let mut u = vec![[0.0; 2]; num_nodes];
        for (f, &n) in self.free_nodes.iter().enumerate() {
            u[n] = [free[2 * f], free[2 * f + 1]];
        }
        u
    }

    /// Restriction of per-node displacements to the Neumann nodes.
    pub fn trace(&self, displacement: &[[f64; 2]]) -> Vec<[f64; 2]> {
        self.neumann_nodes.iter().map(|&n| displacement[n]).collect()
    }
}

/// Scalar P1 mass matrix of the Neumann boundary, indexed like
/// [`Mesh::neumann_nodes`]. Exact for products of linear traces.
pub fn boundary_mass(mesh: &Mesh) -> CsrMatrix {
    let nodes = mesh.neumann_nodes();
    let slot = |n: usize| nodes.binary_search(&n).expect("Neumann edge node");
    let mut t = Vec::new();
    for e in mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::Neumann) {
        let len = crate::mesh::distance(mesh.nodes()[e.a], mesh.nodes()[e.b]);
        let (i, j) = (slot(e.a), slot(e.b));
        t.push((i, i, len / 3.0));
        t.push((j, j, len / 3.0));
        t.push((i, j, len / 6.0));
        t.push((j, i, len / 6.0));
    }
    CsrMatrix::from_triplets(nodes.len(), t)
}

/// `M v` componentwise for per-node vectors on the Neumann boundary.
pub fn apply_boundary_mass(mass: &CsrMatrix, values: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let x: Vec<f64> = values.iter().map(|v| v[0]).collect();
    let y: Vec<f64> = values.iter().map(|v| v[1]).collect();
    mass.mul_vec(&x)
        .into_iter()
        .zip(mass.mul_vec(&y))
        .map(|(a, b)| [a, b])
        .collect()
}

/// `L^2` inner product of two piecewise-linear traces on the Neumann boundary.
pub fn boundary_inner(mass: &CsrMatrix, a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    apply_boundary_mass(mass, a)
        .iter()
        .zip(b)
        .map(|(m, v)| m[0] * v[0] + m[1] * v[1])
        .sum()
}

/// Stiffness on free dofs, load vector and dof numbering.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub stiffness: CsrMatrix,
    pub load: Vec<f64>,
    pub dof_map: DofMap,
}

fn stiffness_matrix(
    mesh: &Mesh,
    geometry: &[ElementGeometry],
    field: &LameField,
    dofs: &DofMap,
) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(36 * mesh.num_elements());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let g = &geometry[e];
        let (lambda, mu) = (field.lambda()[e], field.mu()[e]);
        // unit strain and divergence of each local basis function
        let mut basis = [([[0.0; 2]; 2], 0.0); 6];
        for a in 0..3 {
            for c in 0..2 {
                let mut u = [[0.0; 2]; 3];
                u[a][c] = 1.0;
                let s = g.strain(&u);
                basis[2 * a + c] = (s, s[0][0] + s[1][1]);
            }
        }
        let mut local = [[0.0; 6]; 6];
        for p in 0..6 {
            for q in p..6 {
                let (sp, dp) = basis[p];
                let (sq, dq) = basis[q];
                let v = g.area * (lambda * dp * dq + 2.0 * mu * contract(&sp, &sq));
                local[p][q] = v;
                local[q][p] = v;
            }
        }
        for p in 0..6 {
            let Some(row) = dofs.dof(tri[p / 2], p % 2) else {
                continue;
            };
            for q in 0..6 {
                if let Some(col) = dofs.dof(tri[q / 2], q % 2) {
                    triplets.push((row, col, local[p][q]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.num_free_dofs(), triplets)
}

fn load_vector(mesh: &Mesh, mass: &CsrMatrix, dofs: &DofMap, load: &SurfaceLoad) -> Result<Vec<f64>> {
    let g = load.nodal_values(mesh)?;
    let weighted = apply_boundary_mass(mass, &g);
    let mut b = vec![0.0; dofs.num_free_dofs()];
    for (slot, &n) in dofs.neumann_nodes().iter().enumerate() {
        for c in 0..2 {
            if let Some(d) = dofs.dof(n, c) {
                b[d] = weighted[slot][c];
            }
        }
    }
    Ok(b)
}

/// Assembles the Neumann problem: stiffness with Dirichlet dofs eliminated
/// and the consistent load of `load`.
pub fn assemble(mesh: &Mesh, field: &LameField, load: &SurfaceLoad) -> Result<AssembledSystem> {
    field.check_mesh(mesh)?;
    let dofs = DofMap::new(mesh);
    let geometry = element_geometry(mesh);
    let stiffness = stiffness_matrix(mesh, &geometry, field, &dofs);
    let load = load_vector(mesh, &boundary_mass(mesh), &dofs, load)?;
    Ok(AssembledSystem {
        stiffness,
        load,
        dof_map: dofs,
    })
}

/// Discrete displacement field with its element strains.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardSolution {
    pub displacement: Vec<[f64; 2]>,
    pub trace_on_neumann: Vec<[f64; 2]>,
    pub per_element_strain: Vec<Tensor2>,
    pub per_element_div: Vec<f64>,
}

impl ForwardSolution {
    fn from_displacement(
        mesh: &Mesh,
        geometry: &[ElementGeometry],
        dofs: &DofMap,
        displacement: Vec<[f64; 2]>,
    ) -> Self {
        let per_element_strain: Vec<Tensor2> = mesh
            .triangles()
            .iter()
            .zip(geometry)
            .map(|(tri, g)| g.strain(&[displacement[tri[0]], displacement[tri[1]], displacement[tri[2]]]))
            .collect();
        let per_element_div = per_element_strain.iter().map(|s| s[0][0] + s[1][1]).collect();
        Self {
            trace_on_neumann: dofs.trace(&displacement),
            displacement,
            per_element_strain,
            per_element_div,
        }
    }

    /// `sum_e area_e * C_e strain_e : strain_e`.
    pub fn strain_energy(&self, areas: &[f64], field: &LameField) -> f64 {
        self.per_element_strain
            .iter()
            .enumerate()
            .map(|(e, s)| areas[e] * energy_density(field.lambda()[e], field.mu()[e], s))
            .sum()
    }

    /// Displacement as a flat vector over the free dofs.
    pub fn free_vector(&self, dofs: &DofMap) -> Vec<f64> {
        let mut v = vec![0.0; dofs.num_free_dofs()];
        for (n, u) in self.displacement.iter().enumerate() {
            for c in 0..2 {
                if let Some(d) = dofs.dof(n, c) {
                    v[d] = u[c];
                }
            }
        }
        v
    }
}

/// Stiffness factorizations for one mesh and field.
///
/// The Neumann factorization covers all free dofs; the Dirichlet one covers
/// the interior block and is built on first use.
pub struct ForwardSolver<'m> {
    mesh: &'m Mesh,
    field: LameField,
    geometry: Vec<ElementGeometry>,
    dofs: DofMap,
    mass: CsrMatrix,
    options: SolverOptions,
    neumann: Factorization,
    dirichlet: OnceLock<(Factorization, CsrMatrix)>,
}

impl<'m> ForwardSolver<'m> {
    pub fn new(mesh: &'m Mesh, field: &LameField, options: SolverOptions) -> Result<Self> {
        field.check_mesh(mesh)?;
        let dofs = DofMap::new(mesh);
        let geometry = element_geometry(mesh);
        let stiffness = stiffness_matrix(mesh, &geometry, field, &dofs);
        let neumann = Factorization::new(stiffness, options)?;
        Ok(Self {
            mesh,
            field: field.clone(),
            geometry,
            dofs,
            mass: boundary_mass(mesh),
            options,
            neumann,
            dirichlet: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn field(&self) -> &LameField {
        &self.field
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn areas(&self) -> Vec<f64> {
        self.geometry.iter().map(|g| g.area).collect()
    }

    pub fn boundary_mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        self.neumann.matrix()
    }

    pub fn load_vector(&self, load: &SurfaceLoad) -> Result<Vec<f64>> {
        load_vector(self.mesh, &self.mass, &self.dofs, load)
    }

    pub fn solve_neumann(&self, load: &SurfaceLoad) -> Result<ForwardSolution> {
        let b = self.load_vector(load)?;
        let u = self.neumann.solve(&b)?;
        let displacement = self.dofs.expand(&u, self.mesh.num_nodes());
        Ok(ForwardSolution::from_displacement(
            self.mesh,
            &self.geometry,
            &self.dofs,
            displacement,
        ))
    }

    fn dirichlet_parts(&self) -> Result<&(Factorization, CsrMatrix)> {
        if let Some(parts) = self.dirichlet.get() {
            return Ok(parts);
        }
        let k = self.neumann.matrix();
        let interior = self.dofs.interior_dofs();
        let k_ii = k.submatrix(interior, interior);
        let k_ib = k.submatrix(interior, self.dofs.boundary_dofs());
        let fact = Factorization::new(k_ii, self.options)?;
        let _ = self.dirichlet.set((fact, k_ib));
        Ok(self.dirichlet.get().expect("just initialised"))
    }

    /// Solves with displacement `trace` on the Neumann nodes and zero on the
    /// Dirichlet nodes. Values given at junction nodes are overridden by zero.
    pub fn solve_dirichlet(&self, trace: &[[f64; 2]]) -> Result<ForwardSolution> {
        if trace.len() != self.dofs.neumann_nodes().len() {
            return Err(Error::Parameter(format!(
                "trace has {} values, mesh has {} Neumann nodes",
                trace.len(),
                self.dofs.neumann_nodes().len()
            )));
        }
        if trace.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("trace has non-finite entries".into()));
        }
        let (fact, k_ib) = self.dirichlet_parts()?;
        let u_b: Vec<f64> = self
            .dofs
            .boundary_slots
            .iter()
            .map(|&(slot, c)| trace[slot][c])
            .collect();
        let rhs: Vec<f64> = k_ib.mul_rect(&u_b).into_iter().map(|v| -v).collect();
        let u_i = fact.solve(&rhs)?;
        let mut free = vec![0.0; self.dofs.num_free_dofs()];
        for (k, &d) in self.dofs.interior_dofs().iter().enumerate() {
            free[d] = u_i[k];
        }
        for (k, &d) in self.dofs.boundary_dofs().iter().enumerate() {
            free[d] = u_b[k];
        }
        let displacement = self.dofs.expand(&free, self.mesh.num_nodes());
        Ok(ForwardSolution::from_displacement(
            self.mesh,
            &self.geometry,
            &self.dofs,
            displacement,
        ))
    }

    pub fn strain_energy(&self, solution: &ForwardSolution) -> f64 {
        solution.strain_energy(&self.areas(), &self.field)
    }
}

pub fn solve_neumann(
    mesh: &Mesh,
    field: &LameField,
    load: &SurfaceLoad,
    options: SolverOptions,
) -> Result<ForwardSolution> {
    ForwardSolver::new(mesh, field, options)?.solve_neumann(load)
}

pub fn solve_dirichlet(
    mesh: &Mesh,
    field: &LameField,
    trace: &[[f64; 2]],
    options: SolverOptions,
) -> Result<ForwardSolution> {
    ForwardSolver::new(mesh, field, options)?.solve_dirichlet(trace)
}

#[cfg(test)]
mod tests;
