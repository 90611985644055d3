//! Declarative experiments and their result bundles.
//!
//! A bundle is a pure function of its config: it carries no timings or
//! paths beyond what the config names, so reruns are byte-identical.

mod config;

pub use config::{
    bump_lambda, parse_field_table, CampaignSpec, DataMesh, ExperimentConfig, ExperimentKind,
    FieldSpec, MeshSpec, NoiseRow, SearchSpace, SCHEMA_VERSION,
};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{boundary_inner, ForwardSolver, LameField, SurfaceLoad};
use crate::inversion::{
    reconstruct, ConstantParameterization, ElementParameterization, InversionRun, MeasurementSet,
    NoiseSpec, StopReason,
};
use crate::mesh::{mesh_to_string, Mesh, Point};
use crate::ntd::{
    build_ntd, loewner_gap_of, monotonicity_sandwich, ordered_family, quadrant_regions,
    stability_ratio_experiment, Sandwich, StabilityReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub target_h: f64,
    pub nodes: usize,
    pub elements: usize,
    pub boundary_edges: usize,
    pub neumann_nodes: usize,
}

impl MeshSummary {
    fn of(mesh: &Mesh, target_h: f64) -> Self {
        Self {
            target_h,
            nodes: mesh.num_nodes(),
            elements: mesh.num_elements(),
            boundary_edges: mesh.boundary_edges().len(),
            neumann_nodes: mesh.neumann_nodes().len(),
        }
    }
}

/// Centroids of the two groups of top-decile `lambda` elements, split by the
/// sign of `x + y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpReport {
    pub truth: [Option<Point>; 2],
    pub recovered: [Option<Point>; 2],
    /// Distance of each recovered centroid to `(1/2, 1/2)` and `(-1/2, -1/2)`.
    pub distance: [Option<f64>; 2],
}

pub const BUMP_CENTERS: [Point; 2] = [[0.5, 0.5], [-0.5, -0.5]];

pub fn bump_centroids(mesh: &Mesh, lambda: &[f64]) -> [Option<Point>; 2] {
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]).then(a.cmp(&b)));
    let top = lambda.len().div_ceil(10);
    let centroids = mesh.centroids();
    let areas = mesh.areas();
    let mut acc = [[0.0; 3]; 2];
    for &e in &order[..top] {
        let c = centroids[e];
        let k = usize::from(c[0] + c[1] < 0.0);
        acc[k][0] += areas[e] * c[0];
        acc[k][1] += areas[e] * c[1];
        acc[k][2] += areas[e];
    }
    acc.map(|a| (a[2] > 0.0).then(|| [a[0] / a[2], a[1] / a[2]]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub epsilon: f64,
    pub rho: f64,
    pub seed: u64,
    pub initial: Option<[f64; 2]>,
    pub computed: Option<[f64; 2]>,
    pub exact: Option<[f64; 2]>,
    /// Area-weighted relative `L^2` errors of `(lambda, mu)`; for constant
    /// fields this is `|computed - exact| / exact`.
    pub relative_error: [f64; 2],
    pub initial_relative_error: [f64; 2],
    pub initial_value: f64,
    pub final_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    pub converged: bool,
    pub bumps: Option<BumpReport>,
    pub history_file: String,
    pub field_file: String,
}

impl RunSummary {
    /// `initial J / final J`.
    pub fn reduction(&self) -> f64 {
        self.initial_value / self.final_value
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardRecord {
    pub load: [f64; 2],
    pub boundary_energy: f64,
    pub interior_energy: f64,
    pub max_displacement: f64,
    pub displacement_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pair: usize,
    pub sandwiches: Vec<Sandwich>,
    pub loewner_gap: f64,
    /// Worst relative energy identity defect over both fields and all loads.
    pub energy_identity_defect: f64,
    pub self_adjointness_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs: Vec<PairCheck>,
    pub sandwich_violations: usize,
    pub loewner_violations: usize,
    pub min_loewner_gap: Option<f64>,
    pub max_energy_identity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub mesh: Option<MeshSummary>,
    /// False when a stage failed; `error` then says which.
    pub complete: bool,
    pub error: Option<String>,
    pub runs: Vec<RunSummary>,
    pub forward: Vec<ForwardRecord>,
    pub monotonicity: Option<MonotonicityReport>,
    pub stability: Option<StabilityReport>,
    pub violations: Vec<String>,
    /// Side files written next to `bundle.json`, as `(name, contents)`.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

impl ResultBundle {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            mesh: None,
            complete: false,
            error: None,
            runs: Vec::new(),
            forward: Vec::new(),
            monotonicity: None,
            stability: None,
            violations: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// Writes `bundle.json` and every artifact into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("bundle.json"), self.to_json())?;
        for (name, contents) in &self.artifacts {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }

    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }
}

/// Runs `config`. The bundle is returned even on failure, marked incomplete.
pub fn run_experiment(config: &ExperimentConfig) -> (ResultBundle, Result<()>) {
    let mut bundle = ResultBundle::new(config);
    let result = config.validate().and_then(|()| match config.kind {
        ExperimentKind::Example1
        | ExperimentKind::Example2
        | ExperimentKind::Example3
        | ExperimentKind::Custom => run_reconstructions(config, &mut bundle),
        ExperimentKind::Monotonicity => run_monotonicity(config, &mut bundle),
        ExperimentKind::Stability => run_stability(config, &mut bundle),
        ExperimentKind::Forward => run_forward(config, &mut bundle),
    });
    match &result {
        Ok(()) => bundle.complete = true,
        Err(e) => bundle.error = Some(e.to_string()),
    }
    (bundle, result)
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ResultBundle> {
    if config.kind != kind {
        return Err(Error::Config(format!(
            "config is for {:?}, not {kind:?}",
            config.kind
        )));
    }
    let (bundle, result) = run_experiment(config);
    result.map(|()| bundle)
}

pub fn run_example1(config: &ExperimentConfig) -> Result<ResultBundle> {
    expect_kind(config, ExperimentKind::Example1)
}

pub fn run_example2(config: &ExperimentConfig) -> Result<ResultBundle> {
    expect_kind(config, ExperimentKind::Example2)
}

pub fn run_example3(config: &ExperimentConfig) -> Result<ResultBundle> {
    expect_kind(config, ExperimentKind::Example3)
}

pub fn run_property_campaigns(config: &ExperimentConfig) -> Result<ResultBundle> {
    match config.kind {
        ExperimentKind::Monotonicity | ExperimentKind::Stability => {
            let (bundle, result) = run_experiment(config);
            result.map(|()| bundle)
        }
        k => Err(Error::Config(format!("{k:?} is not a property campaign"))),
    }
}

fn build_mesh(config: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<Mesh> {
    let mesh = config.mesh.build(config.mesh.target_h)?;
    bundle.mesh = Some(MeshSummary::of(&mesh, config.mesh.target_h));
    bundle.artifacts.push(("mesh.txt".into(), mesh_to_string(&mesh)));
    Ok(mesh)
}

fn loads(config: &ExperimentConfig) -> Vec<SurfaceLoad> {
    config.loads.iter().map(|&g| SurfaceLoad::Constant(g)).collect()
}

/// Area-weighted relative `L^2` distance of `a` from `b`.
pub fn relative_l2(areas: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = areas.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y).powi(2)).sum();
    let den: f64 = areas.iter().zip(b).map(|(w, y)| w * y * y).sum();
    (num / den).sqrt()
}

pub fn relative_errors(areas: &[f64], field: &LameField, truth: &LameField) -> [f64; 2] {
    [
        relative_l2(areas, field.lambda(), truth.lambda()),
        relative_l2(areas, field.mu(), truth.mu()),
    ]
}

/// `element cx cy lambda mu` rows with round-trip precision.
pub fn field_table(mesh: &Mesh, field: &LameField) -> String {
    let mut out = String::from("# element cx cy lambda mu\n");
    for (e, c) in mesh.centroids().iter().enumerate() {
        let _ = writeln!(
            out,
            "{e} {:?} {:?} {:?} {:?}",
            c[0],
            c[1],
            field.lambda()[e],
            field.mu()[e]
        );
    }
    out
}

fn constant_value(field: &LameField) -> Option<[f64; 2]> {
    let (l, m) = (field.lambda()[0], field.mu()[0]);
    let same = field.lambda().iter().all(|&v| v == l) && field.mu().iter().all(|&v| v == m);
    same.then_some([l, m])
}

fn measurements(config: &ExperimentConfig, mesh: &Mesh) -> Result<MeasurementSet> {
    let solver = config.solver();
    match config.data_mesh {
        DataMesh::Same => {
            let truth = config.truth.sample(mesh, config.bounds)?;
            MeasurementSet::synthesize(mesh, &truth, &loads(config), solver)
        }
        DataMesh::Refine => {
            let fine = config.mesh.build(0.5 * config.mesh.target_h)?;
            let truth = config.truth.sample(&fine, config.bounds)?;
            MeasurementSet::synthesize(&fine, &truth, &loads(config), solver)?.transfer(&fine, mesh)
        }
    }
}

fn run_reconstructions(config: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let mesh = build_mesh(config, bundle)?;
    let truth = config.truth.sample(&mesh, config.bounds)?;
    let initial = config.initial.sample(&mesh, config.bounds)?;
    let clean = measurements(config, &mesh)?;
    let areas = mesh.areas();
    let with_bumps = config.kind == ExperimentKind::Example3
        || matches!(config.truth, FieldSpec::GaussianBumpsLambda);

    for (row_index, row) in config.noise_rows.iter().enumerate() {
        let seeds: &[u64] = if row.epsilon == 0.0 {
            &config.seeds[..1]
        } else {
            &config.seeds
        };
        for &seed in seeds {
            let noise = NoiseSpec {
                epsilon: row.epsilon,
                seed,
                centered: config.centered_noise,
            };
            let data = clean.with_noise(&noise)?;
            let mut inv = config.inversion.clone();
            inv.rho = row.rho;
            let run = match config.search {
                SearchSpace::Constant => {
                    let p = ConstantParameterization {
                        elements: mesh.num_elements(),
                        bounds: config.bounds,
                    };
                    reconstruct(&mesh, &data, &p, &initial, &inv)?
                }
                SearchSpace::PerElement => {
                    let p = ElementParameterization {
                        elements: mesh.num_elements(),
                        bounds: config.bounds,
                    };
                    reconstruct(&mesh, &data, &p, &initial, &inv)?
                }
            };
            let label = format!("row{row_index}_seed{seed}");
            bundle.runs.push(summarize(&mesh, &areas, &label, row, seed, &truth, &initial, &run, with_bumps));
            bundle
                .artifacts
                .push((format!("{label}_history.csv"), run.history_csv()));
            bundle
                .artifacts
                .push((format!("{label}_field.txt"), field_table(&mesh, &run.final_field)));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    mesh: &Mesh,
    areas: &[f64],
    label: &str,
    row: &NoiseRow,
    seed: u64,
    truth: &LameField,
    initial: &LameField,
    run: &InversionRun,
    with_bumps: bool,
) -> RunSummary {
    let constant = constant_value(&run.final_field).filter(|_| constant_value(truth).is_some());
    let bumps = with_bumps.then(|| {
        let recovered = bump_centroids(mesh, run.final_field.lambda());
        let distance = [0, 1].map(|k| {
            recovered[k].map(|c| (c[0] - BUMP_CENTERS[k][0]).hypot(c[1] - BUMP_CENTERS[k][1]))
        });
        BumpReport {
            truth: bump_centroids(mesh, truth.lambda()),
            recovered,
            distance,
        }
    });
    RunSummary {
        label: label.to_string(),
        epsilon: row.epsilon,
        rho: row.rho,
        seed,
        initial: constant_value(initial),
        computed: constant,
        exact: constant_value(truth),
        relative_error: relative_errors(areas, &run.final_field, truth),
        initial_relative_error: relative_errors(areas, initial, truth),
        initial_value: run.initial_value,
        final_value: run.final_value,
        iterations: run.iterations(),
        evaluations: run.evaluations,
        stop: run.stop,
        converged: run.converged,
        bumps,
        history_file: format!("{label}_history.csv"),
        field_file: format!("{label}_field.txt"),
    }
}

fn run_forward(config: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let mesh = build_mesh(config, bundle)?;
    let truth = config.truth.sample(&mesh, config.bounds)?;
    let solver = ForwardSolver::new(&mesh, &truth, config.solver())?;
    for (k, load) in loads(config).iter().enumerate() {
        let u = solver.solve_neumann(load)?;
        let g = load.nodal_values(&mesh)?;
        let name = format!("load{k}_displacement.txt");
        let mut table = String::from("# node x y ux uy\n");
        for (n, (p, d)) in mesh.nodes().iter().zip(&u.displacement).enumerate() {
            let _ = writeln!(table, "{n} {:?} {:?} {:?} {:?}", p[0], p[1], d[0], d[1]);
        }
        bundle.forward.push(ForwardRecord {
            load: config.loads[k],
            boundary_energy: boundary_inner(solver.boundary_mass(), &g, &u.trace_on_neumann),
            interior_energy: solver.strain_energy(&u),
            max_displacement: u.displacement.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
            displacement_file: name.clone(),
        });
        bundle.artifacts.push((name, table));
    }
    bundle
        .artifacts
        .push(("truth_field.txt".into(), field_table(&mesh, &truth)));
    Ok(())
}

fn run_monotonicity(config: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let mesh = build_mesh(config, bundle)?;
    let c = &config.campaign;
    let regions: Vec<usize> = (0..mesh.num_elements()).collect();
    let family = ordered_family(&regions, c.bounds, c.pairs, c.seed)?;
    let solver = config.solver();
    let loads = loads(config);
    let mut pairs = Vec::with_capacity(family.len());
    for (i, pair) in family.iter().enumerate() {
        let (f1, f2) = (pair.field_1(), pair.field_2());
        let sandwiches = loads
            .iter()
            .map(|g| monotonicity_sandwich(&mesh, f1, f2, g, solver))
            .collect::<Result<Vec<_>>>()?;
        let a = build_ntd(&mesh, f1, solver)?;
        let b = build_ntd(&mesh, f2, solver)?;
        let mut energy_defect = 0.0f64;
        for (field, op) in [(f1, &a), (f2, &b)] {
            let fs = ForwardSolver::new(&mesh, field, solver)?;
            for g in &loads {
                let boundary = op.energy(&mesh, g)?;
                let interior = fs.strain_energy(&fs.solve_neumann(g)?);
                energy_defect = energy_defect.max((boundary - interior).abs() / interior.abs());
            }
        }
        pairs.push(PairCheck {
            pair: i,
            sandwiches,
            loewner_gap: loewner_gap_of(&a, &b)?,
            energy_identity_defect: energy_defect,
            self_adjointness_defect: a.self_adjointness_defect().max(b.self_adjointness_defect()),
        });
    }
    let mut report = MonotonicityReport {
        sandwich_violations: 0,
        loewner_violations: 0,
        min_loewner_gap: pairs.iter().map(|p| p.loewner_gap).reduce(f64::min),
        max_energy_identity_defect: pairs.iter().map(|p| p.energy_identity_defect).fold(0.0, f64::max),
        pairs,
    };
    for p in &report.pairs {
        for (k, s) in p.sandwiches.iter().enumerate() {
            if !s.holds(c.sandwich_slack) {
                report.sandwich_violations += 1;
                bundle
                    .violations
                    .push(format!("pair {} load {k}: sandwich {s:?}", p.pair));
            }
        }
        if p.loewner_gap < -c.loewner_tolerance {
            report.loewner_violations += 1;
            bundle
                .violations
                .push(format!("pair {}: Loewner gap {:e}", p.pair, p.loewner_gap));
        }
        if p.energy_identity_defect > 1e-10 {
            bundle.violations.push(format!(
                "pair {}: energy identity defect {:e}",
                p.pair, p.energy_identity_defect
            ));
        }
        if p.self_adjointness_defect > 1e-10 {
            bundle.violations.push(format!(
                "pair {}: self-adjointness defect {:e}",
                p.pair, p.self_adjointness_defect
            ));
        }
    }
    bundle.monotonicity = Some(report);
    Ok(())
}

fn run_stability(config: &ExperimentConfig, bundle: &mut ResultBundle) -> Result<()> {
    let mesh = build_mesh(config, bundle)?;
    let c = &config.campaign;
    let family = ordered_family(&quadrant_regions(&mesh), c.bounds, c.pairs, c.seed)?;
    let report = stability_ratio_experiment(&mesh, &family, c.histogram_bins, config.solver())?;
    for p in report.uniqueness_violations(c.uniqueness_threshold) {
        bundle
            .violations
            .push(format!("pair {p}: distinct parameters but equal operators"));
    }
    for e in report.entries.iter().filter(|e| !(e.ratio.is_finite() && e.ratio > 0.0)) {
        bundle
            .violations
            .push(format!("pair {}: ratio {}", e.pair, e.ratio));
    }
    bundle.stability = Some(report);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn truth_bumps_sit_at_the_centres() {
        let mesh = generate_disk_mesh(0.08).unwrap();
        let truth = FieldSpec::GaussianBumpsLambda
            .sample(&mesh, crate::fem::LameBounds::default())
            .unwrap();
        let c = bump_centroids(&mesh, truth.lambda());
        for k in 0..2 {
            let p = c[k].unwrap();
            assert!((p[0] - BUMP_CENTERS[k][0]).hypot(p[1] - BUMP_CENTERS[k][1]) < 0.1, "{p:?}");
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        for kind in [
            ExperimentKind::Example1,
            ExperimentKind::Example2,
            ExperimentKind::Example3,
            ExperimentKind::Monotonicity,
            ExperimentKind::Stability,
            ExperimentKind::Forward,
            ExperimentKind::Custom,
        ] {
            let c = ExperimentConfig::for_kind(kind);
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(c, back);
            assert_eq!(back.to_json(), c.to_json());
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = ExperimentConfig::default();
        c.schema_version = 99;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ExperimentConfig::default();
        c.mesh.target_h = 1.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.truth = FieldSpec::File {
            path: "/nonexistent/field.txt".into(),
        };
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"kind\": \"nope\"}").is_err());
    }

    #[test]
    fn field_table_round_trips() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let f = FieldSpec::RadialMu { lambda: 1.0 }
            .sample(&mesh, crate::fem::LameBounds::default())
            .unwrap();
        let (l, m) = parse_field_table(&field_table(&mesh, &f)).unwrap();
        assert_eq!(l, f.lambda());
        assert_eq!(m, f.mu());
    }

    #[test]
    fn empty_campaign_reports_nothing() {
        let mut c = ExperimentConfig::for_kind(ExperimentKind::Stability);
        c.mesh.target_h = 0.3;
        c.campaign.pairs = 0;
        let b = run_property_campaigns(&c).unwrap();
        assert!(b.complete && b.violations.is_empty());
        assert!(b.stability.unwrap().entries.is_empty());
    }

    #[test]
    fn wrong_kind_is_a_config_error() {
        let c = ExperimentConfig::for_kind(ExperimentKind::Forward);
        assert!(matches!(run_example1(&c), Err(Error::Config(_))));
        assert!(run_property_campaigns(&c).is_err());
    }
}
