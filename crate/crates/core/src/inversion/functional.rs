use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::MeasurementSet;
use crate::error::{Error, Result};
use crate::fem::{contract, energy_density, ForwardSolver, LameField, SolverOptions, Tensor2};
use crate::mesh::Mesh;

/// Per-element partial derivatives of the misfit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KvGradient {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl KvGradient {
    pub fn sup_norm(&self) -> f64 {
        self.lambda
            .iter()
            .chain(&self.mu)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `[d/dlambda..., d/dmu...]`, matching [`LameField::to_stacked`].
    pub fn to_stacked(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KvEvaluation {
    /// Misfit plus regularization.
    pub value: f64,
    pub misfit: f64,
    pub regularization: f64,
    pub gradient: Option<KvGradient>,
}

/// Regularized Kohn-Vogelius misfit
/// `sum_k int C e(u_N^k - u_D^k) : e(u_N^k - u_D^k) + rho/2 int (lambda^2 + mu^2)`
/// for a fixed mesh and data set.
#[derive(Clone, Copy, Debug)]
pub struct KohnVogelius<'a> {
    mesh: &'a Mesh,
    data: &'a MeasurementSet,
    rho: f64,
    options: SolverOptions,
}

struct LoadTerms {
    misfit: f64,
    d_lambda: Vec<f64>,
    d_mu: Vec<f64>,
}

impl<'a> KohnVogelius<'a> {
    pub fn new(
        mesh: &'a Mesh,
        data: &'a MeasurementSet,
        rho: f64,
        options: SolverOptions,
    ) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho = {rho} must be non-negative")));
        }
        data.check_mesh(mesh)?;
        Ok(Self {
            mesh,
            data,
            rho,
            options,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn evaluate(&self, field: &LameField, with_gradient: bool) -> Result<KvEvaluation> {
        let solver = ForwardSolver::new(self.mesh, field, self.options)?;
        let areas = solver.areas();
        let (lambda, mu) = (field.lambda(), field.mu());
        let per_load: Vec<LoadTerms> = self
            .data
            .pairs()
            .par_iter()
            .map(|m| {
                let un = solver.solve_neumann(&m.load)?;
                let ud = solver.solve_dirichlet(&m.trace)?;
                let mut misfit = 0.0;
                let n = if with_gradient { areas.len() } else { 0 };
                let (mut d_lambda, mut d_mu) = (vec![0.0; n], vec![0.0; n]);
                for e in 0..areas.len() {
                    let (sn, sd) = (&un.per_element_strain[e], &ud.per_element_strain[e]);
                    let w: Tensor2 = [
                        [sn[0][0] - sd[0][0], sn[0][1] - sd[0][1]],
                        [sn[1][0] - sd[1][0], sn[1][1] - sd[1][1]],
                    ];
                    misfit += areas[e] * energy_density(lambda[e], mu[e], &w);
                    if with_gradient {
                        let (dn, dd) = (un.per_element_div[e], ud.per_element_div[e]);
                        d_lambda[e] = areas[e] * (dd * dd - dn * dn);
                        d_mu[e] = areas[e] * 2.0 * (contract(sd, sd) - contract(sn, sn));
                    }
                }
                Ok(LoadTerms {
                    misfit,
                    d_lambda,
                    d_mu,
                })
            })
            .collect::<Result<_>>()?;

        // sums run in load order so results do not depend on scheduling
        let misfit: f64 = per_load.iter().map(|t| t.misfit).sum();
        let regularization = 0.5
            * self.rho
            * (0..areas.len())
                .map(|e| areas[e] * (lambda[e] * lambda[e] + mu[e] * mu[e]))
                .sum::<f64>();
        let value = misfit + regularization;
        if !value.is_finite() {
            return Err(Error::numeric(format!("misfit evaluated to {value}")));
        }
        let gradient = with_gradient.then(|| {
            let mut g = KvGradient {
                lambda: (0..areas.len()).map(|e| self.rho * lambda[e] * areas[e]).collect(),
                mu: (0..areas.len()).map(|e| self.rho * mu[e] * areas[e]).collect(),
            };
            for t in &per_load {
                g.lambda.iter_mut().zip(&t.d_lambda).for_each(|(a, b)| *a += b);
                g.mu.iter_mut().zip(&t.d_mu).for_each(|(a, b)| *a += b);
            }
            g
        });
        Ok(KvEvaluation {
            value,
            misfit,
            regularization,
            gradient,
        })
    }
}

pub fn kohn_vogelius(
    mesh: &Mesh,
    field: &LameField,
    data: &MeasurementSet,
    rho: f64,
    options: SolverOptions,
) -> Result<f64> {
    Ok(KohnVogelius::new(mesh, data, rho, options)?
        .evaluate(field, false)?
        .value)
}

pub fn kv_gradient(
    mesh: &Mesh,
    field: &LameField,
    data: &MeasurementSet,
    rho: f64,
    options: SolverOptions,
) -> Result<KvGradient> {
    Ok(KohnVogelius::new(mesh, data, rho, options)?
        .evaluate(field, true)?
        .gradient
        .expect("gradient requested"))
}
