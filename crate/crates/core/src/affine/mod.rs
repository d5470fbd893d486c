//! Model parameters, the Riccati solver and exponential-affine bond formulas.

mod bonds;
mod params;
mod riccati;

pub(crate) use bonds::finite;
pub use bonds::{AffineModel, BondCoeffs, Curve, RatioCoeffs};
pub use params::{FactorKind, FactorSpec, FactorState, ModelParams, KAPPA_LIMIT};
pub(crate) use riccati::check_interval;
pub use riccati::{AffineTransform, FactorCoeffs, RiccatiSolver};
