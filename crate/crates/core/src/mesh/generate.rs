//! Structured disk mesher: concentric rings of `6k` nodes zipped into
//! annular strips, then cleaned up with Lawson edge flips until the
//! triangulation is Delaunay.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{signed_area, BoundaryEdge, BoundaryPartitionSpec, BoundaryTag, Mesh, Point};
use crate::error::{Error, Result};

/// Every edge of a generated mesh is at most `MAX_EDGE_FACTOR * target_h`.
pub const MAX_EDGE_FACTOR: f64 = 2.2;

/// Number of rings used for `target_h`; `floor(1/h)` so that halving `h`
/// at least doubles the ring count (and hence the boundary edge count).
pub fn rings_for(target_h: f64) -> usize {
    ((1.0 / target_h).floor() as usize).max(1)
}

/// Triangulates the unit disk with roughly uniform edge length `target_h`.
///
/// Ring `k` (radius `k/n`) carries `6k` equally spaced nodes starting at
/// angle zero, so the boundary has `6n` edges. The returned mesh carries the
/// default boundary partition (lower half Dirichlet).
pub fn generate_disk_mesh(target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h < 1.0) {
        return Err(Error::Parameter(format!(
            "target_h must lie in (0, 1), got {target_h}"
        )));
    }
    let n = rings_for(target_h);

    let mut nodes: Vec<Point> = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=n {
        ring_start.push(nodes.len());
        let r = k as f64 / n as f64;
        let m = 6 * k;
        for j in 0..m {
            let theta = TAU * j as f64 / m as f64;
            nodes.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    // the outer ring must sit exactly on the circle
    for p in nodes.iter_mut().skip(ring_start[n]) {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        p[0] /= r;
        p[1] /= r;
    }

    let mut triangles: Vec<[usize; 3]> = Vec::with_capacity(6 * n * n);
    for j in 0..6 {
        triangles.push([1 + j, 1 + (j + 1) % 6, 0]);
    }
    for k in 2..=n {
        zip_rings(
            ring_start[k - 1],
            6 * (k - 1),
            ring_start[k],
            6 * k,
            &mut triangles,
        );
    }

    lawson_flips(&nodes, &mut triangles);

    let outer = ring_start[n];
    let m = 6 * n;
    let boundary_edges = (0..m)
        .map(|j| BoundaryEdge {
            a: outer + j,
            b: outer + (j + 1) % m,
            tag: BoundaryTag::Neumann,
        })
        .collect();

    let mesh = Mesh::from_parts_unchecked(nodes, triangles, boundary_edges);
    let mesh = mesh.partition_boundary(&BoundaryPartitionSpec::default())?;
    mesh.validate()?;
    Ok(mesh)
}

fn angle_of(index: usize, count: usize) -> f64 {
    TAU * index as f64 / count as f64
}

/// Fills the strip between an inner ring and an outer ring, walking both in
/// angular order and always advancing the ring whose next node comes first.
fn zip_rings(
    inner_start: usize,
    inner_count: usize,
    outer_start: usize,
    outer_count: usize,
    out: &mut Vec<[usize; 3]>,
) {
    let inner = |i: usize| inner_start + i % inner_count;
    let outer = |j: usize| outer_start + j % outer_count;
    let (mut i, mut j) = (0usize, 0usize);
    while i < inner_count || j < outer_count {
        let next_inner = angle_of(i + 1, inner_count);
        let next_outer = angle_of(j + 1, outer_count);
        let advance_outer = j < outer_count && (i >= inner_count || next_outer <= next_inner);
        if advance_outer {
            out.push([outer(j), outer(j + 1), inner(i)]);
            j += 1;
        } else {
            out.push([inner(i + 1), inner(i), outer(j)]);
            i += 1;
        }
    }
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn lawson_flips(nodes: &[Point], triangles: &mut [[usize; 3]]) {
    const MAX_SWEEPS: usize = 200;
    for _ in 0..MAX_SWEEPS {
        let mut edge_owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut flipped = false;
        let mut touched = vec![false; triangles.len()];
        for t in 0..triangles.len() {
            for local in 0..3 {
                let tri = triangles[t];
                let (p, q) = (tri[local], tri[(local + 1) % 3]);
                edge_owner.insert((p, q), (t, local));
            }
        }
        // Deterministic sweep order: by triangle index then local edge.
        for t in 0..triangles.len() {
            if touched[t] {
                continue;
            }
            for local in 0..3 {
                let tri = triangles[t];
                let (p, q, r) = (tri[local], tri[(local + 1) % 3], tri[(local + 2) % 3]);
                let Some(&(u, ulocal)) = edge_owner.get(&(q, p)) else {
                    continue;
                };
                if touched[u] || u == t {
                    continue;
                }
                let other = triangles[u];
                if other[ulocal] != q || other[(ulocal + 1) % 3] != p {
                    continue;
                }
                let s = other[(ulocal + 2) % 3];
                let (pp, pq, pr, ps) = (nodes[p], nodes[q], nodes[r], nodes[s]);
                let scale = [pp, pq, pr]
                    .iter()
                    .map(|x| (x[0] - ps[0]).powi(2) + (x[1] - ps[1]).powi(2))
                    .fold(0.0, f64::max);
                if incircle(pp, pq, pr, ps) <= 1e-10 * scale * scale {
                    continue;
                }
                // new diagonal r-s; both halves must stay positively oriented
                if signed_area(pr, pp, ps) <= 0.0 || signed_area(ps, pq, pr) <= 0.0 {
                    continue;
                }
                triangles[t] = [r, p, s];
                triangles[u] = [s, q, r];
                touched[t] = true;
                touched[u] = true;
                flipped = true;
                break;
            }
        }
        if !flipped {
            return;
        }
    }
}
