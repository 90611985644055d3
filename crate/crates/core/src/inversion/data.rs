use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{ForwardSolver, LameField, SolverOptions, SurfaceLoad};
use crate::mesh::Mesh;

/// Constant tractions used in all reconstruction experiments.
pub const STANDARD_LOADS: [[f64; 2]; 4] = [[0.1, 0.1], [0.1, 0.2], [0.2, 0.1], [0.3, 0.5]];

pub fn standard_loads() -> Vec<SurfaceLoad> {
    STANDARD_LOADS.iter().map(|&g| SurfaceLoad::Constant(g)).collect()
}

/// Multiplicative noise `f (1 + epsilon * delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub epsilon: f64,
    pub seed: u64,
    /// Draw `delta` from `[-1, 1]` instead of `[0, 1]`.
    #[serde(default)]
    pub centered: bool,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            epsilon: 0.0,
            seed: 0,
            centered: false,
        }
    }

    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        let s = Self {
            epsilon,
            seed,
            centered: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Parameter(format!(
                "noise level {} outside [0, 1)",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Perturbs every component independently. The generator is restarted from
/// `spec.seed` on each call.
pub fn add_noise(trace: &[[f64; 2]], spec: &NoiseSpec) -> Result<Vec<[f64; 2]>> {
    spec.validate()?;
    if spec.epsilon == 0.0 {
        return Ok(trace.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(perturb(trace, spec, &mut rng))
}

fn perturb(trace: &[[f64; 2]], spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let lo = if spec.centered { -1.0 } else { 0.0 };
    trace
        .iter()
        .map(|v| v.map(|x| x * (1.0 + spec.epsilon * rng.random_range(lo..=1.0))))
        .collect()
}

/// One load and the observed displacement trace on the Neumann nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub load: SurfaceLoad,
    pub trace: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pairs: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn new(pairs: Vec<Measurement>) -> Result<Self> {
        let Some(first) = pairs.first() else {
            return Err(Error::Parameter("at least one measurement is required".into()));
        };
        let n = first.trace.len();
        if pairs.iter().any(|p| p.trace.len() != n) {
            return Err(Error::Parameter("measurement traces differ in length".into()));
        }
        if pairs.iter().flat_map(|p| p.trace.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("measurement has non-finite entries".into()));
        }
        Ok(Self { pairs })
    }

    /// Noise-free data `f_k = Lambda(field) g_k` computed on `mesh`.
    pub fn synthesize(
        mesh: &Mesh,
        field: &LameField,
        loads: &[SurfaceLoad],
        options: SolverOptions,
    ) -> Result<Self> {
        let solver = ForwardSolver::new(mesh, field, options)?;
        let pairs = loads
            .iter()
            .map(|g| {
                Ok(Measurement {
                    load: g.clone(),
                    trace: solver.solve_neumann(g)?.trace_on_neumann,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[Measurement] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.neumann_nodes().len();
        if self.pairs[0].trace.len() != n {
            return Err(Error::Parameter(format!(
                "measurements have {} trace values, mesh has {n} Neumann nodes",
                self.pairs[0].trace.len()
            )));
        }
        for p in &self.pairs {
            p.load.nodal_values(mesh)?;
        }
        Ok(())
    }

    /// Applies noise to all traces from one seeded stream, in load order.
    pub fn with_noise(&self, spec: &NoiseSpec) -> Result<Self> {
        spec.validate()?;
        if spec.epsilon == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let pairs = self
            .pairs
            .iter()
            .map(|p| Measurement {
                load: p.load.clone(),
                trace: perturb(&p.trace, spec, &mut rng),
            })
            .collect();
        Self::new(pairs)
    }

    /// Moves data recorded on `from` to the Neumann nodes of `to` by linear
    /// interpolation along the boundary. Constant loads carry over unchanged.
    pub fn transfer(&self, from: &Mesh, to: &Mesh) -> Result<Self> {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                let load = match &p.load {
                    SurfaceLoad::Constant(v) => SurfaceLoad::Constant(*v),
                    SurfaceLoad::Nodal(v) => SurfaceLoad::Nodal(transfer_trace(from, to, v)?),
                };
                Ok(Measurement {
                    load,
                    trace: transfer_trace(from, to, &p.trace)?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(pairs)
    }
}

fn angle(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0])
}

fn wrap(d: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let d = d.rem_euclid(t);
    if d > std::f64::consts::PI {
        d - t
    } else {
        d
    }
}

/// Piecewise-linear interpolation of a Neumann trace by polar angle.
pub fn transfer_trace(from: &Mesh, to: &Mesh, values: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let src = from.neumann_nodes();
    if values.len() != src.len() {
        return Err(Error::Parameter("trace does not match source mesh".into()));
    }
    let slot = |n: usize| src.binary_search(&n).expect("Neumann node");
    let edges: Vec<(usize, usize)> = from
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == crate::mesh::BoundaryTag::Neumann)
        .map(|e| (e.a, e.b))
        .collect();
    to.neumann_nodes()
        .iter()
        .map(|&n| {
            let theta = angle(to.nodes()[n]);
            for &(a, b) in &edges {
                let ta = angle(from.nodes()[a]);
                let span = wrap(angle(from.nodes()[b]) - ta);
                let t = wrap(theta - ta) / span;
                if (-1e-9..=1.0 + 1e-9).contains(&t) {
                    let t = t.clamp(0.0, 1.0);
                    let (va, vb) = (values[slot(a)], values[slot(b)]);
                    return Ok([
                        (1.0 - t) * va[0] + t * vb[0],
                        (1.0 - t) * va[1] + t * vb[1],
                    ]);
                }
            }
            Err(Error::Parameter(format!(
                "node {n} at angle {theta} is not on the source Neumann boundary"
            )))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::LameBounds;
    use crate::mesh::generate_disk_mesh;

    #[test]
    fn zero_noise_is_identity() {
        let t = vec![[0.5, -1.0], [2.0, 3.0]];
        assert_eq!(add_noise(&t, &NoiseSpec::new(0.0, 9).unwrap()).unwrap(), t);
    }

    #[test]
    fn noise_is_bounded_and_seeded() {
        let t: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 + 1.0, -(i as f64) - 0.5]).collect();
        let spec = NoiseSpec::new(0.03, 4).unwrap();
        let a = add_noise(&t, &spec).unwrap();
        assert_eq!(a, add_noise(&t, &spec).unwrap());
        for (x, y) in t.iter().zip(&a) {
            for c in 0..2 {
                let r = y[c] / x[c] - 1.0;
                assert!((0.0..=0.03 + 1e-15).contains(&r));
            }
        }
        let centered = NoiseSpec { centered: true, ..spec };
        let b = add_noise(&t, &centered).unwrap();
        assert!(t.iter().zip(&b).any(|(x, y)| y[0] / x[0] < 1.0));
    }

    #[test]
    fn invalid_noise_is_rejected() {
        assert!(NoiseSpec::new(1.0, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 0).is_err());
    }

    #[test]
    fn empty_measurement_set_is_rejected() {
        assert!(MeasurementSet::new(Vec::new()).is_err());
    }

    #[test]
    fn transfer_from_refined_mesh_hits_shared_nodes() {
        let coarse = generate_disk_mesh(0.2).unwrap();
        let fine = generate_disk_mesh(0.1).unwrap();
        let f = |m: &Mesh| -> Vec<[f64; 2]> {
            m.neumann_nodes()
                .iter()
                .map(|&n| {
                    let t = angle(m.nodes()[n]);
                    [t.sin(), t.cos() * t]
                })
                .collect()
        };
        let moved = transfer_trace(&fine, &coarse, &f(&fine)).unwrap();
        for (a, b) in moved.iter().zip(f(&coarse)) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        let field = LameField::constant(fine.num_elements(), 3.0, 7.0, LameBounds::default()).unwrap();
        let data = MeasurementSet::synthesize(&fine, &field, &standard_loads(), SolverOptions::default())
            .unwrap()
            .transfer(&fine, &coarse)
            .unwrap();
        data.check_mesh(&coarse).unwrap();
    }
}
