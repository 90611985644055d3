use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Admissible box `a <= lambda <= b`, `c <= mu <= d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl LameBounds {
    pub fn new(lambda_min: f64, lambda_max: f64, mu_min: f64, mu_max: f64) -> Result<Self> {
        let b = Self {
            lambda_min,
            lambda_max,
            mu_min,
            mu_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_min > 0.0
            && self.lambda_min <= self.lambda_max
            && self.mu_min > 0.0
            && self.mu_min <= self.mu_max
            && self.lambda_max.is_finite()
            && self.mu_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid Lame bounds {self:?}")))
        }
    }

    pub fn contains(&self, lambda: f64, mu: f64) -> bool {
        (self.lambda_min..=self.lambda_max).contains(&lambda) && (self.mu_min..=self.mu_max).contains(&mu)
    }

    pub fn clamp(&self, lambda: f64, mu: f64) -> (f64, f64) {
        (
            lambda.clamp(self.lambda_min, self.lambda_max),
            mu.clamp(self.mu_min, self.mu_max),
        )
    }
}

impl Default for LameBounds {
    /// A wide box that only rules out non-positive parameters.
    fn default() -> Self {
        Self {
            lambda_min: 1e-6,
            lambda_max: 1e6,
            mu_min: 1e-6,
            mu_max: 1e6,
        }
    }
}

/// Piecewise-constant Lame parameters, one `(lambda, mu)` pair per element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameField {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    bounds: LameBounds,
}

impl LameField {
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>, bounds: LameBounds) -> Result<Self> {
        bounds.validate()?;
        if lambda.len() != mu.len() {
            return Err(Error::Parameter(format!(
                "lambda has {} entries but mu has {}",
                lambda.len(),
                mu.len()
            )));
        }
        if lambda.is_empty() {
            return Err(Error::Parameter("empty Lame field".into()));
        }
        for (e, (&l, &m)) in lambda.iter().zip(&mu).enumerate() {
            if !bounds.contains(l, m) {
                return Err(Error::Parameter(format!(
                    "element {e}: (lambda, mu) = ({l}, {m}) outside admissible bounds"
                )));
            }
        }
        Ok(Self { lambda, mu, bounds })
    }

    pub fn constant(elements: usize, lambda: f64, mu: f64, bounds: LameBounds) -> Result<Self> {
        Self::new(vec![lambda; elements], vec![mu; elements], bounds)
    }

    /// Samples `f` at element centroids.
    pub fn from_fn(
        mesh: &Mesh,
        bounds: LameBounds,
        f: impl Fn(Point) -> (f64, f64),
    ) -> Result<Self> {
        let (lambda, mu) = mesh.centroids().into_iter().map(f).unzip();
        Self::new(lambda, mu, bounds)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn bounds(&self) -> LameBounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.num_elements() {
            return Err(Error::Parameter(format!(
                "field has {} elements, mesh has {}",
                self.len(),
                mesh.num_elements()
            )));
        }
        Ok(())
    }

    /// Multiplies both parameters by `alpha`, widening the bounds to match.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("scale factor {alpha} must be positive")));
        }
        let b = self.bounds;
        let bounds = LameBounds::new(
            b.lambda_min * alpha,
            b.lambda_max * alpha,
            b.mu_min * alpha,
            b.mu_max * alpha,
        )?;
        Self::new(
            self.lambda.iter().map(|v| v * alpha).collect(),
            self.mu.iter().map(|v| v * alpha).collect(),
            bounds,
        )
    }

    pub fn with_bounds(&self, bounds: LameBounds) -> Result<Self> {
        Self::new(self.lambda.clone(), self.mu.clone(), bounds)
    }

    /// Stacked `[lambda..., mu...]` vector.
    pub fn to_stacked(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }

    pub fn from_stacked(stacked: &[f64], bounds: LameBounds) -> Result<Self> {
        if stacked.len() % 2 != 0 {
            return Err(Error::Parameter("stacked field has odd length".into()));
        }
        let half = stacked.len() / 2;
        Self::new(stacked[..half].to_vec(), stacked[half..].to_vec(), bounds)
    }

    /// Renumbers elements: entry `i` of the result is entry `perm[i]` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(
            perm.iter().map(|&p| self.lambda[p]).collect(),
            perm.iter().map(|&p| self.mu[p]).collect(),
            self.bounds,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_are_rejected() {
        assert!(LameField::constant(4, 0.0, 0.0, LameBounds::default()).is_err());
        assert!(LameBounds::new(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(LameBounds::new(2.0, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn out_of_box_values_are_rejected() {
        let b = LameBounds::new(1.0, 4.0, 1.0, 8.0).unwrap();
        assert!(LameField::constant(3, 3.0, 7.0, b).is_ok());
        assert!(LameField::constant(3, 5.0, 7.0, b).is_err());
        assert!(LameField::new(vec![1.0], vec![1.0, 2.0], b).is_err());
    }

    #[test]
    fn stacked_round_trip() {
        let f = LameField::new(vec![1.0, 2.0], vec![3.0, 4.0], LameBounds::default()).unwrap();
        let back = LameField::from_stacked(&f.to_stacked(), f.bounds()).unwrap();
        assert_eq!(f, back);
    }
}
