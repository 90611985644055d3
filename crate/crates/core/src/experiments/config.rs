use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{LameBounds, LameField, SolverOptions};
use crate::inversion::{BfgsSettings, InversionConfig, STANDARD_LOADS};
use crate::mesh::{BoundaryPartitionSpec, Mesh, Point};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Example1,
    Example2,
    Example3,
    Monotonicity,
    Stability,
    Forward,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshSpec {
    pub target_h: f64,
    /// Half-open angular interval `[start, end)` of the Dirichlet arc.
    pub dirichlet_arc: (f64, f64),
}

impl Default for MeshSpec {
    fn default() -> Self {
        let d = BoundaryPartitionSpec::default();
        Self {
            target_h: 0.08,
            dirichlet_arc: d.dirichlet_arc,
        }
    }
}

impl MeshSpec {
    pub fn partition(&self) -> Result<BoundaryPartitionSpec> {
        BoundaryPartitionSpec::new(self.dirichlet_arc.0, self.dirichlet_arc.1)
    }

    pub fn build(&self, target_h: f64) -> Result<Mesh> {
        crate::mesh::generate_disk_mesh(target_h)?.partition_boundary(&self.partition()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant { lambda: f64, mu: f64 },
    /// `mu = |x|`, constant `lambda`.
    RadialMu { lambda: f64 },
    /// `mu = |x|`, `lambda` two Gaussian bumps centred at `(1/2, 1/2)` and `(-1/2, -1/2)`.
    GaussianBumpsLambda,
    /// Per-element `lambda mu` rows, one per line.
    File { path: PathBuf },
}

pub fn bump_lambda(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    (-5.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp()
        + (-5.0 * ((x + 0.5).powi(2) + (y + 0.5).powi(2))).exp()
}

impl FieldSpec {
    pub fn sample(&self, mesh: &Mesh, bounds: LameBounds) -> Result<LameField> {
        let radius = |p: Point| p[0].hypot(p[1]);
        match self {
            FieldSpec::Constant { lambda, mu } => {
                LameField::constant(mesh.num_elements(), *lambda, *mu, bounds)
            }
            FieldSpec::RadialMu { lambda } => LameField::from_fn(mesh, bounds, |p| (*lambda, radius(p))),
            FieldSpec::GaussianBumpsLambda => {
                LameField::from_fn(mesh, bounds, |p| (bump_lambda(p), radius(p)))
            }
            FieldSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let (lambda, mu) = parse_field_table(&text)?;
                let f = LameField::new(lambda, mu, bounds)?;
                f.check_mesh(mesh)?;
                Ok(f)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::File { path } if !path.exists() => Err(Error::Config(format!(
                "field file {} does not exist",
                path.display()
            ))),
            _ => Ok(()),
        }
    }
}

/// Reads `lambda mu` rows, or the `element cx cy lambda mu` rows written by
/// the field dumps. Blank lines and `#` comments are skipped.
pub fn parse_field_table(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lambda = Vec::new();
    let mut mu = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let (l, m) = match cols.len() {
            2 => (cols[0], cols[1]),
            5 => (cols[3], cols[4]),
            _ => return Err(Error::Config(format!("field table line {}: expected 2 or 5 columns", i + 1))),
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("field table line {}: {e}", i + 1)))
        };
        lambda.push(parse(l)?);
        mu.push(parse(m)?);
    }
    Ok((lambda, mu))
}

/// One `(epsilon, rho)` setting of a reconstruction experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub epsilon: f64,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMesh {
    /// Data generated on the inversion mesh.
    Same,
    /// Data generated on a mesh with half the target size, then interpolated.
    Refine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchSpace {
    Constant,
    PerElement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignSpec {
    pub pairs: usize,
    pub seed: u64,
    /// Box the random pair values are drawn from.
    pub bounds: LameBounds,
    /// Relative slack of the sandwich inequality.
    pub sandwich_slack: f64,
    /// Lower bound accepted for the smallest eigenvalue of an ordered difference.
    pub loewner_tolerance: f64,
    /// Pairs closer than this in parameter distance are not checked for uniqueness.
    pub uniqueness_threshold: f64,
    pub histogram_bins: usize,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            pairs: 20,
            seed: 2024,
            bounds: LameBounds {
                lambda_min: 0.5,
                lambda_max: 5.0,
                mu_min: 0.5,
                mu_max: 10.0,
            },
            sandwich_slack: 1e-8,
            loewner_tolerance: 1e-8,
            uniqueness_threshold: 1e-6,
            histogram_bins: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub mesh: MeshSpec,
    pub truth: FieldSpec,
    pub initial: FieldSpec,
    pub bounds: LameBounds,
    pub search: SearchSpace,
    pub loads: Vec<[f64; 2]>,
    pub noise_rows: Vec<NoiseRow>,
    /// Noise seeds; every noisy row is run once per seed.
    pub seeds: Vec<u64>,
    pub centered_noise: bool,
    pub data_mesh: DataMesh,
    pub inversion: InversionConfig,
    pub campaign: CampaignSpec,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_kind(ExperimentKind::Example1)
    }
}

impl ExperimentConfig {
    /// Defaults reproducing the named experiment.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c = Self {
            schema_version: SCHEMA_VERSION,
            kind,
            mesh: MeshSpec::default(),
            truth: FieldSpec::Constant { lambda: 3.0, mu: 7.0 },
            initial: FieldSpec::Constant { lambda: 1.0, mu: 1.0 },
            bounds: LameBounds::default(),
            search: SearchSpace::Constant,
            loads: STANDARD_LOADS.to_vec(),
            noise_rows: vec![
                NoiseRow { epsilon: 0.0, rho: 0.0 },
                NoiseRow { epsilon: 0.03, rho: 1e-5 },
                NoiseRow { epsilon: 0.05, rho: 1e-5 },
            ],
            seeds: vec![1],
            centered_noise: false,
            data_mesh: DataMesh::Same,
            inversion: InversionConfig::default(),
            campaign: CampaignSpec::default(),
            output_dir: None,
        };
        match kind {
            ExperimentKind::Example2 | ExperimentKind::Example3 => {
                c.truth = if kind == ExperimentKind::Example2 {
                    FieldSpec::RadialMu { lambda: 1.0 }
                } else {
                    FieldSpec::GaussianBumpsLambda
                };
                c.initial = FieldSpec::Constant { lambda: 0.3, mu: 0.5 };
                c.search = SearchSpace::PerElement;
                c.noise_rows = vec![
                    NoiseRow { epsilon: 0.0, rho: 0.0 },
                    NoiseRow { epsilon: 0.03, rho: 1e-4 },
                ];
                if kind == ExperimentKind::Example3 {
                    // bumps at the two junctions; with the lower half clamped
                    // only the bump facing the loaded arc is resolved
                    c.mesh.dirichlet_arc = (1.25 * PI, 2.25 * PI);
                }
                c.inversion.project = true;
                c.inversion.bfgs = BfgsSettings {
                    max_iterations: 3000,
                    gradient_tolerance: 1e-12,
                    initial_step: 0.1,
                    ..BfgsSettings::default()
                };
            }
            ExperimentKind::Stability => {
                c.campaign.pairs = 30;
            }
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.mesh.target_h > 0.0 && self.mesh.target_h < 1.0) {
            return bad(format!("mesh.target_h = {} outside (0, 1)", self.mesh.target_h));
        }
        self.mesh.partition().map_err(|e| Error::Config(e.to_string()))?;
        self.bounds.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.campaign.bounds.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.inversion.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.truth.validate()?;
        self.initial.validate()?;
        if self.loads.is_empty() {
            return bad("at least one load is required".into());
        }
        if self.loads.iter().flatten().any(|v| !v.is_finite()) {
            return bad("loads must be finite".into());
        }
        for r in &self.noise_rows {
            if !(0.0..1.0).contains(&r.epsilon) || !(r.rho >= 0.0 && r.rho.is_finite()) {
                return bad(format!("invalid noise row {r:?}"));
            }
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        self.inversion.solver
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
