//! The discrete Neumann-to-Dirichlet map and numerical checks of its
//! monotonicity and stability.
//!
//! Boundary data live in the nodal basis of piecewise-linear vector traces on
//! the Neumann boundary, coefficient `2 * slot + c` for Neumann node `slot`
//! and component `c`. The `L^2` inner product in that basis is the block mass
//! matrix `M (x) I_2`; every form and norm below is taken with it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    boundary_inner, boundary_mass, ForwardSolver, LameBounds, LameField, SolverOptions, SurfaceLoad,
};
use crate::mesh::Mesh;

/// Matrix of the discrete NtD map together with the boundary mass.
#[derive(Clone, Debug, PartialEq)]
pub struct NtDOperator {
    /// Maps nodal load coefficients to nodal trace coefficients.
    pub matrix: DMatrix<f64>,
    /// Vector boundary mass `M (x) I_2`.
    pub boundary_mass: DMatrix<f64>,
    pub num_elements: usize,
}

fn vector_mass(mesh: &Mesh) -> DMatrix<f64> {
    let m = boundary_mass(mesh);
    let n = m.dim();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for (j, v) in m.row(i) {
            out[(2 * i, 2 * j)] = v;
            out[(2 * i + 1, 2 * j + 1)] = v;
        }
    }
    out
}

fn flatten(values: &[[f64; 2]]) -> DVector<f64> {
    DVector::from_iterator(2 * values.len(), values.iter().flatten().copied())
}

/// Assembles the NtD matrix column by column from hat-function loads.
pub fn build_ntd(mesh: &Mesh, field: &LameField, options: SolverOptions) -> Result<NtDOperator> {
    let solver = ForwardSolver::new(mesh, field, options)?;
    let dim = 2 * mesh.neumann_nodes().len();
    let columns: Vec<DVector<f64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let s = solver.solve_neumann(&SurfaceLoad::hat(mesh, j / 2, j % 2))?;
            Ok(flatten(&s.trace_on_neumann))
        })
        .collect::<Result<_>>()?;
    Ok(NtDOperator {
        matrix: DMatrix::from_columns(&columns),
        boundary_mass: vector_mass(mesh),
        num_elements: mesh.num_elements(),
    })
}

impl NtDOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `M Lambda`, the matrix of the bilinear form `<g, Lambda h>`.
    pub fn form_matrix(&self) -> DMatrix<f64> {
        &self.boundary_mass * &self.matrix
    }

    /// `max |MA - (MA)^T| / max |MA|`.
    pub fn self_adjointness_defect(&self) -> f64 {
        let f = self.form_matrix();
        let scale = f.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&f - f.transpose()).amax() / scale
    }

    pub fn apply(&self, mesh: &Mesh, load: &SurfaceLoad) -> Result<Vec<[f64; 2]>> {
        let g = flatten(&load.nodal_values(mesh)?);
        self.check_dim(g.len())?;
        let t = &self.matrix * g;
        Ok(t.as_slice().chunks(2).map(|c| [c[0], c[1]]).collect())
    }

    /// `<g, Lambda g>` in the boundary `L^2` product.
    pub fn energy(&self, mesh: &Mesh, load: &SurfaceLoad) -> Result<f64> {
        let g = flatten(&load.nodal_values(mesh)?);
        self.check_dim(g.len())?;
        Ok(g.dot(&(&self.boundary_mass * (&self.matrix * &g))))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Parameter(format!(
                "boundary vector has length {n}, operator acts on {}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_same_space(&self, other: &NtDOperator) -> Result<()> {
        if self.dim() != other.dim()
            || self.num_elements != other.num_elements
            || self.boundary_mass != other.boundary_mass
        {
            return Err(Error::Parameter("operators live on different meshes".into()));
        }
        Ok(())
    }
}

/// Eigenvalues of `Lambda_1 - Lambda_2` as a self-adjoint operator on
/// `L^2(Gamma_N)`, in ascending order.
///
/// With `M = L L^T` these are the eigenvalues of the symmetric matrix
/// `L^{-1} M (Lambda_1 - Lambda_2) L^{-T}`.
pub fn difference_spectrum(a: &NtDOperator, b: &NtDOperator) -> Result<Vec<f64>> {
    a.check_same_space(b)?;
    let form = a.form_matrix() - b.form_matrix();
    let form = (&form + form.transpose()) * 0.5;
    let chol = a
        .boundary_mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("boundary mass is not positive definite"))?;
    let l = chol.l();
    let left = l
        .solve_lower_triangular(&form)
        .ok_or_else(|| Error::numeric("singular boundary mass factor"))?;
    let sym = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::numeric("singular boundary mass factor"))?;
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `|<g, (Lambda_1 - Lambda_2) g>| / <g, g>`, bounded by the operator distance.
pub fn rayleigh_quotient(a: &NtDOperator, b: &NtDOperator, g: &[[f64; 2]]) -> Result<f64> {
    a.check_same_space(b)?;
    let g = flatten(g);
    a.check_dim(g.len())?;
    let mg = &a.boundary_mass * &g;
    let num = mg.dot(&((&a.matrix - &b.matrix) * &g));
    Ok(num.abs() / mg.dot(&g))
}

/// Pointwise order between the two fields of an [`OrderedPair`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrder {
    /// `lambda_1 <= lambda_2` and `mu_1 <= mu_2` everywhere.
    Leq,
    /// `lambda_1 >= lambda_2` and `mu_1 >= mu_2` everywhere.
    Geq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedPair {
    field_1: LameField,
    field_2: LameField,
    order: PairOrder,
}

impl OrderedPair {
    pub fn new(field_1: LameField, field_2: LameField, order: PairOrder) -> Result<Self> {
        if field_1.len() != field_2.len() {
            return Err(Error::Parameter("pair fields have different lengths".into()));
        }
        let le = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        let (lo, hi) = match order {
            PairOrder::Leq => (&field_1, &field_2),
            PairOrder::Geq => (&field_2, &field_1),
        };
        if !le(lo.lambda(), hi.lambda()) || !le(lo.mu(), hi.mu()) {
            return Err(Error::Precondition(format!(
                "fields are not pointwise ordered as {order:?}"
            )));
        }
        Ok(Self {
            field_1,
            field_2,
            order,
        })
    }

    /// Orders two fields if they are comparable, preferring `Leq`.
    pub fn try_order(field_1: LameField, field_2: LameField) -> Result<Self> {
        match Self::new(field_1.clone(), field_2.clone(), PairOrder::Leq) {
            Ok(p) => Ok(p),
            Err(_) => Self::new(field_1, field_2, PairOrder::Geq),
        }
    }

    pub fn field_1(&self) -> &LameField {
        &self.field_1
    }

    pub fn field_2(&self) -> &LameField {
        &self.field_2
    }

    pub fn order(&self) -> PairOrder {
        self.order
    }

    pub fn swapped(&self) -> Self {
        Self {
            field_1: self.field_2.clone(),
            field_2: self.field_1.clone(),
            order: match self.order {
                PairOrder::Leq => PairOrder::Geq,
                PairOrder::Geq => PairOrder::Leq,
            },
        }
    }

    /// `(softer, stiffer)`.
    fn softer_stiffer(&self) -> (&LameField, &LameField) {
        match self.order {
            PairOrder::Leq => (&self.field_1, &self.field_2),
            PairOrder::Geq => (&self.field_2, &self.field_1),
        }
    }
}

/// The three terms of the monotonicity estimate for one load.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// `int (C_1 - C_2) e(u_2) : e(u_2)`.
    pub lhs: f64,
    /// `<g, Lambda_2 g> - <g, Lambda_1 g>`.
    pub mid: f64,
    /// `int (C_1 - C_2) e(u_1) : e(u_1)`.
    pub rhs: f64,
}

impl Sandwich {
    /// Largest violation of `lhs >= mid >= rhs`, zero when both hold.
    pub fn violation(&self) -> f64 {
        (self.mid - self.lhs).max(self.rhs - self.mid).max(0.0)
    }

    pub fn holds(&self, rel_slack: f64) -> bool {
        let scale = self.lhs.abs().max(self.mid.abs()).max(self.rhs.abs());
        self.violation() <= rel_slack * scale
    }
}

/// Evaluates both sides of the monotonicity estimate for `field_1`,
/// `field_2` and load `g`. The estimate holds for any pair, ordered or not.
pub fn monotonicity_sandwich(
    mesh: &Mesh,
    field_1: &LameField,
    field_2: &LameField,
    load: &SurfaceLoad,
    options: SolverOptions,
) -> Result<Sandwich> {
    let s1 = ForwardSolver::new(mesh, field_1, options)?;
    let s2 = ForwardSolver::new(mesh, field_2, options)?;
    let u1 = s1.solve_neumann(load)?;
    let u2 = s2.solve_neumann(load)?;
    let areas = mesh.areas();
    let weighted = |strain: &[crate::fem::Tensor2], div: &[f64]| -> f64 {
        (0..mesh.num_elements())
            .map(|e| {
                let dl = field_1.lambda()[e] - field_2.lambda()[e];
                let dm = field_1.mu()[e] - field_2.mu()[e];
                let s = &strain[e];
                areas[e] * (dl * div[e] * div[e] + 2.0 * dm * crate::fem::contract(s, s))
            })
            .sum()
    };
    let g = load.nodal_values(mesh)?;
    let diff: Vec<[f64; 2]> = u2
        .trace_on_neumann
        .iter()
        .zip(&u1.trace_on_neumann)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
        .collect();
    Ok(Sandwich {
        lhs: weighted(&u2.per_element_strain, &u2.per_element_div),
        mid: boundary_inner(s1.boundary_mass(), &g, &diff),
        rhs: weighted(&u1.per_element_strain, &u1.per_element_div),
    })
}

/// Smallest eigenvalue of `Lambda(softer) - Lambda(stiffer)`. Monotonicity
/// predicts it is non-negative up to rounding.
pub fn loewner_gap(mesh: &Mesh, pair: &OrderedPair, options: SolverOptions) -> Result<f64> {
    let (soft, stiff) = pair.softer_stiffer();
    let a = build_ntd(mesh, soft, options)?;
    let b = build_ntd(mesh, stiff, options)?;
    loewner_gap_of(&a, &b)
}

pub fn loewner_gap_of(soft: &NtDOperator, stiff: &NtDOperator) -> Result<f64> {
    Ok(difference_spectrum(soft, stiff)?[0])
}

/// `||Lambda_1 - Lambda_2||` as an operator on `L^2(Gamma_N)`.
pub fn operator_distance(
    mesh: &Mesh,
    field_1: &LameField,
    field_2: &LameField,
    options: SolverOptions,
) -> Result<f64> {
    let a = build_ntd(mesh, field_1, options)?;
    let b = build_ntd(mesh, field_2, options)?;
    operator_distance_of(&a, &b)
}

pub fn operator_distance_of(a: &NtDOperator, b: &NtDOperator) -> Result<f64> {
    let eig = difference_spectrum(a, b)?;
    Ok(eig.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `max(sup |lambda_1 - lambda_2|, sup |mu_1 - mu_2|)`.
pub fn parameter_distance(field_1: &LameField, field_2: &LameField) -> Result<f64> {
    if field_1.len() != field_2.len() {
        return Err(Error::Parameter("fields have different lengths".into()));
    }
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(sup(field_1.lambda(), field_2.lambda()).max(sup(field_1.mu(), field_2.mu())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub pair: usize,
    pub parameter_distance: f64,
    pub operator_distance: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub entries: Vec<StabilityEntry>,
    /// Pairs with identical parameters.
    pub skipped: Vec<usize>,
    /// Empirical Lipschitz constant over the family.
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

impl StabilityReport {
    /// Pairs with `d >= threshold` whose operators coincide.
    pub fn uniqueness_violations(&self, threshold: f64) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.parameter_distance >= threshold && !(e.operator_distance > 0.0))
            .map(|e| e.pair)
            .collect()
    }

    pub fn all_ratios_finite(&self) -> bool {
        self.entries.iter().all(|e| e.ratio.is_finite() && e.ratio > 0.0)
    }
}

/// Ratio `d(C_1, C_2) / ||Lambda_1 - Lambda_2||` for every pair of the
/// family. Pairs with `d = 0` are skipped.
pub fn stability_ratio_experiment(
    mesh: &Mesh,
    family: &[OrderedPair],
    bins: usize,
    options: SolverOptions,
) -> Result<StabilityReport> {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (i, pair) in family.iter().enumerate() {
        let d = parameter_distance(pair.field_1(), pair.field_2())?;
        if d == 0.0 {
            skipped.push(i);
            continue;
        }
        let op = operator_distance(mesh, pair.field_1(), pair.field_2(), options)?;
        entries.push(StabilityEntry {
            pair: i,
            parameter_distance: d,
            operator_distance: op,
            ratio: d / op,
        });
    }
    let finite: Vec<f64> = entries.iter().map(|e| e.ratio).filter(|r| r.is_finite()).collect();
    let max_ratio = finite.iter().copied().reduce(f64::max);
    let min_ratio = finite.iter().copied().reduce(f64::min);
    Ok(StabilityReport {
        histogram: histogram(&finite, bins),
        entries,
        skipped,
        max_ratio,
        min_ratio,
    })
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            count,
        })
        .collect()
}

/// Quadrant index `0..4` of each element centroid, counter-clockwise from
/// the first quadrant.
pub fn quadrant_regions(mesh: &Mesh) -> Vec<usize> {
    mesh.centroids()
        .iter()
        .map(|c| match (c[0] >= 0.0, c[1] >= 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        })
        .collect()
}

/// Seeded pairs of region-wise constant fields, ordered `Leq`: two values per
/// region are drawn uniformly in `bounds` and split into min and max
/// envelopes.
pub fn ordered_family(
    regions: &[usize],
    bounds: LameBounds,
    count: usize,
    seed: u64,
) -> Result<Vec<OrderedPair>> {
    let num_regions = regions.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut lo = vec![(0.0, 0.0); num_regions];
            let mut hi = vec![(0.0, 0.0); num_regions];
            for r in 0..num_regions {
                let l = [
                    rng.random_range(bounds.lambda_min..=bounds.lambda_max),
                    rng.random_range(bounds.lambda_min..=bounds.lambda_max),
                ];
                let m = [
                    rng.random_range(bounds.mu_min..=bounds.mu_max),
                    rng.random_range(bounds.mu_min..=bounds.mu_max),
                ];
                lo[r] = (l[0].min(l[1]), m[0].min(m[1]));
                hi[r] = (l[0].max(l[1]), m[0].max(m[1]));
            }
            let field = |v: &[(f64, f64)]| {
                LameField::new(
                    regions.iter().map(|&r| v[r].0).collect(),
                    regions.iter().map(|&r| v[r].1).collect(),
                    bounds,
                )
            };
            OrderedPair::new(field(&lo)?, field(&hi)?, PairOrder::Leq)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solve_neumann;
    use crate::mesh::generate_disk_mesh;

    fn constant(mesh: &Mesh, l: f64, m: f64) -> LameField {
        LameField::constant(mesh.num_elements(), l, m, LameBounds::default()).unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn build_is_deterministic() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let f = constant(&mesh, 3.0, 7.0);
        assert_eq!(build_ntd(&mesh, &f, opts()).unwrap(), build_ntd(&mesh, &f, opts()).unwrap());
    }

    #[test]
    fn operator_is_self_adjoint_and_nonnegative() {
        let mesh = generate_disk_mesh(0.2).unwrap();
        let op = build_ntd(&mesh, &constant(&mesh, 2.0, 3.0), opts()).unwrap();
        assert!(op.self_adjointness_defect() <= 1e-10);
        let zero = NtDOperator {
            matrix: DMatrix::zeros(op.dim(), op.dim()),
            ..op.clone()
        };
        // spectrum of Lambda - 0
        assert!(difference_spectrum(&op, &zero).unwrap()[0] >= -1e-12);
    }

    #[test]
    fn energy_matches_strain_energy() {
        let mesh = generate_disk_mesh(0.2).unwrap();
        let f = constant(&mesh, 3.0, 7.0);
        let op = build_ntd(&mesh, &f, opts()).unwrap();
        let load = SurfaceLoad::Constant([0.3, 0.5]);
        let e = op.energy(&mesh, &load).unwrap();
        let s = solve_neumann(&mesh, &f, &load, opts()).unwrap();
        let w = s.strain_energy(&mesh.areas(), &f);
        assert!((e - w).abs() <= 1e-10 * w);
    }

    #[test]
    fn scaling_field_scales_operator_inversely() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let f = constant(&mesh, 3.0, 7.0);
        let a = build_ntd(&mesh, &f, opts()).unwrap();
        let b = build_ntd(&mesh, &f.scaled(4.0).unwrap(), opts()).unwrap();
        let diff = (&a.matrix * 0.25 - &b.matrix).amax();
        assert!(diff <= 1e-12 * a.matrix.amax());
    }

    #[test]
    fn identical_fields_give_zero_sandwich_and_distance() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let f = constant(&mesh, 3.0, 7.0);
        let s = monotonicity_sandwich(&mesh, &f, &f, &SurfaceLoad::Constant([0.1, 0.1]), opts()).unwrap();
        assert_eq!(s, Sandwich { lhs: 0.0, mid: 0.0, rhs: 0.0 });
        assert!(operator_distance(&mesh, &f, &f, opts()).unwrap() <= 1e-12);
        let pair = OrderedPair::new(f.clone(), f.clone(), PairOrder::Leq).unwrap();
        assert!(loewner_gap(&mesh, &pair, opts()).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn sandwich_swaps_under_exchange() {
        let mesh = generate_disk_mesh(0.2).unwrap();
        let a = constant(&mesh, 3.0, 7.0);
        let b = constant(&mesh, 1.0, 1.0);
        let g = SurfaceLoad::Constant([0.1, 0.1]);
        let s = monotonicity_sandwich(&mesh, &a, &b, &g, opts()).unwrap();
        let t = monotonicity_sandwich(&mesh, &b, &a, &g, opts()).unwrap();
        assert!(s.lhs > s.mid && s.mid > s.rhs && s.rhs > 0.0);
        assert!((s.mid + t.mid).abs() <= 1e-14 * s.mid.abs());
        assert!((s.lhs + t.rhs).abs() <= 1e-12 * s.lhs.abs());
        assert!((s.rhs + t.lhs).abs() <= 1e-12 * s.rhs.abs());
    }

    #[test]
    fn unordered_pair_is_rejected() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let a = constant(&mesh, 3.0, 1.0);
        let b = constant(&mesh, 1.0, 3.0);
        assert!(matches!(
            OrderedPair::new(a.clone(), b.clone(), PairOrder::Leq),
            Err(Error::Precondition(_))
        ));
        assert!(OrderedPair::try_order(a, b).is_err());
    }

    #[test]
    fn distance_is_symmetric() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let a = constant(&mesh, 3.0, 7.0);
        let b = constant(&mesh, 1.0, 1.0);
        let ab = operator_distance(&mesh, &a, &b, opts()).unwrap();
        let ba = operator_distance(&mesh, &b, &a, opts()).unwrap();
        assert!(ab > 0.0);
        assert!((ab - ba).abs() <= 1e-12 * ab);
        assert_eq!(parameter_distance(&a, &b).unwrap(), 6.0);
    }

    #[test]
    fn rayleigh_quotient_is_bounded_by_distance() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let a = build_ntd(&mesh, &constant(&mesh, 3.0, 7.0), opts()).unwrap();
        let b = build_ntd(&mesh, &constant(&mesh, 1.0, 2.0), opts()).unwrap();
        let d = operator_distance_of(&a, &b).unwrap();
        for load in [[0.1, 0.1], [0.1, 0.2], [0.2, 0.1], [0.3, 0.5]] {
            let g = SurfaceLoad::Constant(load).nodal_values(&mesh).unwrap();
            assert!(rayleigh_quotient(&a, &b, &g).unwrap() <= d * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_identical_pair_is_skipped() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let f = constant(&mesh, 2.0, 2.0);
        let pair = OrderedPair::new(f.clone(), f, PairOrder::Geq).unwrap();
        let r = stability_ratio_experiment(&mesh, &[pair], 5, opts()).unwrap();
        assert!(r.entries.is_empty());
        assert_eq!(r.skipped, vec![0]);
        assert_eq!(r.max_ratio, None);
        assert!(r.histogram.is_empty());
    }

    #[test]
    fn quadrant_family_is_ordered_and_seeded() {
        let mesh = generate_disk_mesh(0.25).unwrap();
        let regions = quadrant_regions(&mesh);
        assert_eq!(regions.iter().max(), Some(&3));
        let b = LameBounds::new(1.0, 5.0, 1.0, 10.0).unwrap();
        let a = ordered_family(&regions, b, 3, 7).unwrap();
        assert_eq!(a, ordered_family(&regions, b, 3, 7).unwrap());
        assert_ne!(a, ordered_family(&regions, b, 3, 8).unwrap());
    }

    #[test]
    fn histogram_counts_every_value() {
        let h = histogram(&[1.0, 2.0, 2.5, 4.0], 3);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 4);
        assert_eq!(h[2].count, 1);
        assert_eq!(histogram(&[3.0, 3.0], 4)[0].count, 2);
    }
}
