//! Forward and inverse problems for 2D isotropic linear elasticity.
//!
//! * [`mesh`]: unit disk triangulations with a Dirichlet/Neumann boundary split.
//! * [`fem`]: P1 vector elements, Neumann and Dirichlet solves.
//! * [`ntd`]: the discrete Neumann-to-Dirichlet operator and numerical checks
//!   of its monotonicity and stability properties.
//! * [`inversion`]: Kohn-Vogelius misfit, its gradient and a BFGS driver for
//!   recovering Lame parameters from boundary data.
//! * [`experiments`]: declarative experiment configs and result bundles used
//!   by the `lamerecon` binary.

pub mod error;
pub mod experiments;
pub mod fem;
pub mod inversion;
pub mod mesh;
pub mod ntd;

pub use error::{Error, Result};
