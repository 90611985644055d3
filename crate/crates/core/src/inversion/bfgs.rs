//! Quasi-Newton minimization with Armijo backtracking.
//!
//! Small problems keep a dense inverse Hessian; larger ones use the
//! two-loop recursion over the last `memory` pairs.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BfgsSettings {
    pub max_iterations: usize,
    /// Stop once `max |grad| <= gradient_tolerance`.
    pub gradient_tolerance: f64,
    /// Sufficient decrease constant `c1`.
    pub armijo: f64,
    /// Step shrink factor per backtrack.
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Sup-norm length of the first trial step.
    pub initial_step: f64,
    /// Pairs kept by the limited-memory variant.
    pub memory: usize,
    /// Problems up to this size use a dense inverse Hessian.
    pub dense_up_to: usize,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            initial_step: 1.0,
            memory: 10,
            dense_up_to: 64,
        }
    }
}

impl BfgsSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gradient_tolerance > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.initial_step > 0.0
            && self.memory > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid BFGS settings {self:?}")))
        }
    }
}

/// Objective value at a point, or a signal that the point is inadmissible
/// (treated as `+inf` by the line search).
pub enum Evaluation {
    Value(f64, Vec<f64>),
    Inadmissible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub gradient_sup_norm: f64,
    /// Step multiplier accepted by the line search; zero for the start point.
    pub step_length: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
    pub evaluations: usize,
}

enum InverseHessian {
    Dense(Option<DMatrix<f64>>),
    Limited(VecDeque<(DVector<f64>, DVector<f64>, f64)>),
}

impl InverseHessian {
    fn new(dim: usize, settings: &BfgsSettings) -> Self {
        if dim <= settings.dense_up_to {
            InverseHessian::Dense(None)
        } else {
            InverseHessian::Limited(VecDeque::with_capacity(settings.memory))
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            InverseHessian::Dense(h) => h.is_none(),
            InverseHessian::Limited(pairs) => pairs.is_empty(),
        }
    }

    fn apply(&self, g: &DVector<f64>) -> DVector<f64> {
        match self {
            InverseHessian::Dense(Some(h)) => h * g,
            InverseHessian::Dense(None) => g.clone(),
            InverseHessian::Limited(pairs) => {
                let mut q = g.clone();
                let mut alpha = Vec::with_capacity(pairs.len());
                for (s, y, rho) in pairs.iter().rev() {
                    let a = rho * s.dot(&q);
                    q.axpy(-a, y, 1.0);
                    alpha.push(a);
                }
                if let Some((s, y, _)) = pairs.back() {
                    q *= s.dot(y) / y.dot(y);
                }
                for ((s, y, rho), a) in pairs.iter().zip(alpha.into_iter().rev()) {
                    let b = rho * y.dot(&q);
                    q.axpy(a - b, s, 1.0);
                }
                q
            }
        }
    }

    /// Returns false when the curvature safeguard skips the update.
    fn update(&mut self, s: DVector<f64>, y: DVector<f64>, memory: usize) -> bool {
        let sy = s.dot(&y);
        if !(sy > 1e-12 * s.norm() * y.norm()) {
            return false;
        }
        let rho = 1.0 / sy;
        match self {
            InverseHessian::Dense(h) => {
                let n = s.len();
                let h0 = h.take().unwrap_or_else(|| DMatrix::identity(n, n) * (sy / y.dot(&y)));
                let left = DMatrix::identity(n, n) - &s * y.transpose() * rho;
                let next = &left * h0 * left.transpose() + &s * s.transpose() * rho;
                *h = Some((&next + next.transpose()) * 0.5);
            }
            InverseHessian::Limited(pairs) => {
                if pairs.len() == memory {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, rho));
            }
        }
        true
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0`. `project`, when given, maps every trial point
/// back into a feasible set.
pub fn bfgs_minimize<F>(
    x0: Vec<f64>,
    settings: &BfgsSettings,
    project: Option<&dyn Fn(&mut [f64])>,
    mut f: F,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    settings.validate()?;
    let mut evaluations = 1;
    let (mut value, mut grad) = match f(&x0)? {
        Evaluation::Value(v, g) => (v, g),
        Evaluation::Inadmissible => {
            return Err(Error::Parameter("starting point is inadmissible".into()))
        }
    };
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric("non-finite objective at the starting point"));
    }
    let mut x = x0;
    let mut hess = InverseHessian::new(x.len(), settings);
    let mut history = vec![IterationRecord {
        iteration: 0,
        value,
        gradient_sup_norm: sup(&grad),
        step_length: 0.0,
        evaluations,
    }];

    let stop = loop {
        let iteration = history.len() - 1;
        if sup(&grad) <= settings.gradient_tolerance {
            break StopReason::GradientTolerance;
        }
        if iteration >= settings.max_iterations {
            break StopReason::MaxIterations;
        }
        let g = DVector::from_column_slice(&grad);
        let mut d = -hess.apply(&g);
        if hess.is_empty() {
            d *= settings.initial_step / sup(&grad);
        }
        if !(d.dot(&g) < 0.0) {
            // lost descent, restart from scaled steepest descent
            hess = InverseHessian::new(x.len(), settings);
            d = -&g * (settings.initial_step / sup(&grad));
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let mut trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + alpha * b).collect();
            if let Some(p) = project {
                p(&mut trial);
            }
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let predicted: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
            if !(predicted < 0.0) {
                break;
            }
            evaluations += 1;
            if let Evaluation::Value(v, gt) = f(&trial)? {
                if !v.is_finite() || gt.iter().any(|g| !g.is_finite()) {
                    return Err(Error::numeric(format!("objective evaluated to {v}")));
                }
                if v <= value + settings.armijo * predicted && v < value {
                    accepted = Some((trial, v, gt));
                    break;
                }
            }
            alpha *= settings.backtrack;
        }
        let Some((trial, v, gt)) = accepted else {
            if hess.is_empty() {
                break StopReason::LineSearchFailure;
            }
            // curvature pairs may be stale, retry once from steepest descent
            hess = InverseHessian::new(x.len(), settings);
            continue;
        };
        let s = DVector::from_iterator(x.len(), trial.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(x.len(), gt.iter().zip(&grad).map(|(a, b)| a - b));
        hess.update(s, y, settings.memory);
        x = trial;
        value = v;
        grad = gt;
        history.push(IterationRecord {
            iteration: iteration + 1,
            value,
            gradient_sup_norm: sup(&grad),
            step_length: alpha,
            evaluations,
        });
    };

    Ok(Minimum {
        x,
        value,
        gradient: grad,
        history,
        stop,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<Evaluation> {
        let (a, b) = (x[0], x[1]);
        Ok(Evaluation::Value(
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2),
            vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)],
        ))
    }

    #[test]
    fn dense_solves_rosenbrock() {
        let s = BfgsSettings {
            max_iterations: 500,
            ..Default::default()
        };
        let m = bfgs_minimize(vec![-1.2, 1.0], &s, None, rosenbrock).unwrap();
        assert_eq!(m.stop, StopReason::GradientTolerance);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8);
        assert!(m.history.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn limited_memory_solves_quadratic() {
        let n = 100;
        let f = |x: &[f64]| -> Result<Evaluation> {
            let v = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * (v - 1.0).powi(2)).sum();
            let g = x.iter().enumerate().map(|(i, v)| 2.0 * (i + 1) as f64 * (v - 1.0)).collect();
            Ok(Evaluation::Value(v, g))
        };
        let s = BfgsSettings {
            max_iterations: 1000,
            dense_up_to: 10,
            ..Default::default()
        };
        let m = bfgs_minimize(vec![0.0; n], &s, None, f).unwrap();
        assert_eq!(m.stop, StopReason::GradientTolerance);
        assert!(m.x.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let m = bfgs_minimize(vec![1.0, 1.0], &BfgsSettings::default(), None, rosenbrock).unwrap();
        assert_eq!(m.stop, StopReason::GradientTolerance);
        assert_eq!(m.history.len(), 1);
    }

    #[test]
    fn inadmissible_region_is_avoided() {
        // minimum of (x+1)^2 lies outside x > 0
        let f = |x: &[f64]| -> Result<Evaluation> {
            if x[0] <= 0.0 {
                return Ok(Evaluation::Inadmissible);
            }
            Ok(Evaluation::Value((x[0] + 1.0).powi(2), vec![2.0 * (x[0] + 1.0)]))
        };
        let s = BfgsSettings {
            max_iterations: 100,
            ..Default::default()
        };
        let m = bfgs_minimize(vec![2.0], &s, None, f).unwrap();
        assert!(m.x[0] > 0.0 && m.x[0] < 1e-3);
        assert!(m.history.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn projection_keeps_iterates_feasible() {
        let f = |x: &[f64]| -> Result<Evaluation> {
            Ok(Evaluation::Value((x[0] + 1.0).powi(2), vec![2.0 * (x[0] + 1.0)]))
        };
        let clamp = |x: &mut [f64]| x[0] = x[0].max(0.5);
        let m = bfgs_minimize(vec![2.0], &BfgsSettings::default(), Some(&clamp), f).unwrap();
        assert_eq!(m.x[0], 0.5);
        assert_eq!(m.stop, StopReason::LineSearchFailure);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let f = |_: &[f64]| -> Result<Evaluation> { Ok(Evaluation::Value(f64::NAN, vec![1.0])) };
        assert!(bfgs_minimize(vec![0.0], &BfgsSettings::default(), None, f).is_err());
    }
}
