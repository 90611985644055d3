//! Lame parameter reconstruction from boundary data.
//!
//! For each measured pair `(g_k, f_k)` the misfit compares the solution with
//! traction `g_k` against the one with displacement `f_k`; both share the
//! current field's bilinear form. Its derivative in the direction of an
//! element indicator is
//!
//! ```text
//! dJ/dlambda_e = sum_k area_e ((div u_D)^2 - (div u_N)^2)
//! dJ/dmu_e     = sum_k area_e (2 e(u_D):e(u_D) - 2 e(u_N):e(u_N))
//! ```
//!
//! which is exact for the discrete problem, since `a(u_N, u_D)` only depends
//! on the data and `u_D` minimizes energy for its boundary values.

mod bfgs;
mod data;
mod functional;
mod param;

pub use bfgs::{bfgs_minimize, BfgsSettings, Evaluation, IterationRecord, Minimum, StopReason};
pub use data::{
    add_noise, standard_loads, transfer_trace, Measurement, MeasurementSet, NoiseSpec, STANDARD_LOADS,
};
pub use functional::{kohn_vogelius, kv_gradient, KohnVogelius, KvEvaluation, KvGradient};
pub use param::{ConstantParameterization, ElementParameterization, Parameterization};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{LameField, SolverOptions};
use crate::mesh::Mesh;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InversionConfig {
    pub rho: f64,
    pub bfgs: BfgsSettings,
    /// Clamp every trial point into the field's bounds.
    pub project: bool,
    pub solver: SolverOptions,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            rho: 0.0,
            bfgs: BfgsSettings::default(),
            project: false,
            solver: SolverOptions::default(),
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Parameter(format!("rho = {} must be non-negative", self.rho)));
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(Error::Parameter("solver tolerance must be positive".into()));
        }
        self.bfgs.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InversionRun {
    pub history: Vec<IterationRecord>,
    pub final_field: LameField,
    pub initial_value: f64,
    pub final_value: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub evaluations: usize,
}

impl InversionRun {
    /// `iteration,J,grad_sup,step,evaluations` rows.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,J,grad_sup,step,evaluations\n");
        for r in &self.history {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                r.iteration, r.value, r.gradient_sup_norm, r.step_length, r.evaluations
            );
        }
        out
    }

    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }
}

/// Minimizes the regularized misfit over `param`, starting from `initial`.
pub fn reconstruct<P: Parameterization + Sync>(
    mesh: &Mesh,
    data: &MeasurementSet,
    param: &P,
    initial: &LameField,
    config: &InversionConfig,
) -> Result<InversionRun> {
    config.validate()?;
    initial.check_mesh(mesh)?;
    let kv = KohnVogelius::new(mesh, data, config.rho, config.solver)?;
    let objective = |x: &[f64]| -> Result<Evaluation> {
        let Ok(field) = param.to_field(x) else {
            return Ok(Evaluation::Inadmissible);
        };
        let ev = kv.evaluate(&field, true)?;
        let g = param.pull_back(ev.gradient.as_ref().expect("gradient requested"));
        Ok(Evaluation::Value(ev.value, g))
    };
    let project = |x: &mut [f64]| param.project(x);
    let min = bfgs_minimize(
        param.from_field(initial),
        &config.bfgs,
        config.project.then_some(&project as &dyn Fn(&mut [f64])),
        objective,
    )?;
    Ok(InversionRun {
        initial_value: min.history[0].value,
        final_value: min.value,
        final_field: param.to_field(&min.x)?,
        converged: min.stop == StopReason::GradientTolerance,
        stop: min.stop,
        evaluations: min.evaluations,
        history: min.history,
    })
}

#[cfg(test)]
mod tests;
