use super::functional::KvGradient;
use crate::error::Result;
use crate::fem::{LameBounds, LameField};

/// Maps an optimizer vector to a per-element field and pulls element
/// gradients back by the chain rule.
pub trait Parameterization {
    fn dim(&self) -> usize;
    fn bounds(&self) -> LameBounds;
    /// Fails when `x` leaves the admissible box.
    fn to_field(&self, x: &[f64]) -> Result<LameField>;
    fn from_field(&self, field: &LameField) -> Vec<f64>;
    fn pull_back(&self, gradient: &KvGradient) -> Vec<f64>;

    fn project(&self, x: &mut [f64]) {
        let b = self.bounds();
        let half = x.len() / 2;
        for (i, v) in x.iter_mut().enumerate() {
            *v = if i < half {
                v.clamp(b.lambda_min, b.lambda_max)
            } else {
                v.clamp(b.mu_min, b.mu_max)
            };
        }
    }
}

/// One `(lambda, mu)` pair shared by all elements; `x = [lambda, mu]`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantParameterization {
    pub elements: usize,
    pub bounds: LameBounds,
}

impl Parameterization for ConstantParameterization {
    fn dim(&self) -> usize {
        2
    }

    fn bounds(&self) -> LameBounds {
        self.bounds
    }

    fn to_field(&self, x: &[f64]) -> Result<LameField> {
        LameField::constant(self.elements, x[0], x[1], self.bounds)
    }

    /// Area-unweighted mean, exact for constant fields.
    fn from_field(&self, field: &LameField) -> Vec<f64> {
        let n = field.len() as f64;
        vec![
            field.lambda().iter().sum::<f64>() / n,
            field.mu().iter().sum::<f64>() / n,
        ]
    }

    fn pull_back(&self, g: &KvGradient) -> Vec<f64> {
        vec![g.lambda.iter().sum(), g.mu.iter().sum()]
    }
}

/// Independent values per element; `x = [lambda..., mu...]`.
#[derive(Clone, Copy, Debug)]
pub struct ElementParameterization {
    pub elements: usize,
    pub bounds: LameBounds,
}

impl Parameterization for ElementParameterization {
    fn dim(&self) -> usize {
        2 * self.elements
    }

    fn bounds(&self) -> LameBounds {
        self.bounds
    }

    fn to_field(&self, x: &[f64]) -> Result<LameField> {
        LameField::from_stacked(x, self.bounds)
    }

    fn from_field(&self, field: &LameField) -> Vec<f64> {
        field.to_stacked()
    }

    fn pull_back(&self, g: &KvGradient) -> Vec<f64> {
        g.to_stacked()
    }
}
