//! Linear solvers for the SPD stiffness systems.
//!
//! The default path is an envelope (skyline) Cholesky factorization after a
//! reverse Cuthill-McKee reordering. A Jacobi-preconditioned conjugate
//! gradient solver is used when requested, or when the factorization hits a
//! non-positive pivot. Every solve checks its relative residual against the
//! configured tolerance and applies iterative refinement when needed.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Cholesky,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual `|Ku - b| / |b|` every solve must reach.
    pub tolerance: f64,
    pub max_cg_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Cholesky,
            tolerance: 1e-12,
            max_cg_iterations: 20_000,
        }
    }
}

/// Reverse Cuthill-McKee ordering: `perm[new] = old`.
pub fn reverse_cuthill_mckee(matrix: &CsrMatrix) -> Vec<usize> {
    let n = matrix.dim();
    let degree: Vec<usize> = (0..n).map(|i| matrix.row(i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from its minimum-degree node
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = matrix
                .row(v)
                .map(|(j, _)| j)
                .filter(|&j| !visited[j])
                .collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor `L` of `P A P^T` stored by rows from the first nonzero
/// column of each row to the diagonal.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first_col: Vec<usize>,
    row_start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.dim();
        let perm = reverse_cuthill_mckee(matrix);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first_col: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in matrix.row(old) {
                first_col[new] = first_col[new].min(inv[j]);
            }
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - first_col[i] + 1);
        }
        let mut values = vec![0.0; row_start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in matrix.row(old) {
                let col = inv[j];
                if col <= new {
                    values[row_start[new] + col - first_col[new]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first_col[i];
            let ri = row_start[i];
            for j in fi..i {
                let fj = first_col[j];
                let rj = row_start[j];
                let k0 = fi.max(fj);
                let mut s = values[ri + j - fi];
                for k in k0..j {
                    s -= values[ri + k - fi] * values[rj + k - fj];
                }
                values[ri + j - fi] = s / values[rj + j - fj];
            }
            let mut d = values[ri + i - fi];
            for k in fi..i {
                let l = values[ri + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numeric(format!(
                    "non-positive pivot {d:e} at row {i} of {n}: matrix is not SPD"
                )));
            }
            values[ri + i - fi] = d.sqrt();
        }
        Ok(Self {
            perm,
            first_col,
            row_start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.values[self.row_start[i] + j - self.first_col[i]]
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| rhs[old]).collect();
        for i in 0..n {
            let fi = self.first_col[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            y[i] /= self.l(i, i);
            let yi = y[i];
            let fi = self.first_col[i];
            for k in fi..i {
                y[k] -= self.l(i, k) * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients; returns the solution and the
/// number of iterations used.
pub fn conjugate_gradient(
    matrix: &CsrMatrix,
    rhs: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = matrix.dim();
    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = matrix
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iterations {
        let ap = matrix.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::numeric(format!(
                "conjugate gradient found non-positive curvature {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tolerance * b_norm {
            return Ok((x, it + 1));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::numeric(format!(
        "conjugate gradient did not reach relative residual {tolerance:e} in {max_iterations} iterations"
    )))
}

/// A reusable solver for one SPD matrix.
#[derive(Clone, Debug)]
pub struct Factorization {
    matrix: CsrMatrix,
    cholesky: Option<EnvelopeCholesky>,
    options: SolverOptions,
}

impl Factorization {
    pub fn new(matrix: CsrMatrix, options: SolverOptions) -> Result<Self> {
        let cholesky = match options.kind {
            SolverKind::Cholesky => match EnvelopeCholesky::factor(&matrix) {
                Ok(f) => Some(f),
                // fall back to CG, which reports its own failure if the
                // matrix really is indefinite
                Err(_) => None,
            },
            SolverKind::ConjugateGradient => None,
        };
        Ok(Self {
            matrix,
            cholesky,
            options,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn uses_cholesky(&self) -> bool {
        self.cholesky.is_some()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.matrix.dim() {
            return Err(Error::Parameter(format!(
                "right-hand side has length {}, expected {}",
                rhs.len(),
                self.matrix.dim()
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite right-hand side"));
        }
        let b_norm = norm(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let tol = self.options.tolerance;
        match &self.cholesky {
            Some(chol) => {
                let mut x = chol.solve(rhs);
                let mut res = self.residual(&x, rhs);
                // iterative refinement
                for _ in 0..3 {
                    if norm(&res) <= tol * b_norm {
                        break;
                    }
                    let dx = chol.solve(&res);
                    x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
                    res = self.residual(&x, rhs);
                }
                let rel = norm(&res) / b_norm;
                if rel > tol {
                    return Err(Error::numeric(format!(
                        "Cholesky solve stalled at relative residual {rel:e} > {tol:e}"
                    )));
                }
                Ok(x)
            }
            None => {
                let (x, _) =
                    conjugate_gradient(&self.matrix, rhs, tol, self.options.max_cg_iterations)?;
                Ok(x)
            }
        }
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    fn grid_laplacian(m: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * m + j;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                t.push((idx(i, j), idx(i, j), 4.0 + 0.1));
                if i + 1 < m {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < m {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(m * m, t)
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_laplacian(7);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn cholesky_solves_grid_problem() {
        let a = grid_laplacian(12);
        let x_true: Vec<f64> = (0..144).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = EnvelopeCholesky::factor(&a).unwrap().solve(&b);
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::Numeric { .. })));
    }

    #[test]
    fn cg_matches_cholesky() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + i as f64).collect();
        let (x_cg, _) = conjugate_gradient(&a, &b, 1e-13, 1000).unwrap();
        let x_ch = EnvelopeCholesky::factor(&a).unwrap().solve(&b);
        let err = x_cg.iter().zip(&x_ch).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn factorization_falls_back_and_reports_failure() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let f = Factorization::new(a, SolverOptions::default()).unwrap();
        assert!(!f.uses_cholesky());
        assert!(f.solve(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let f = Factorization::new(laplacian_1d(5), SolverOptions::default()).unwrap();
        assert_eq!(f.solve(&[0.0; 5]).unwrap(), vec![0.0; 5]);
    }
}
