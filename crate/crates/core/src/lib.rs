//! Two-curve affine short-rate pricing.
//!
//! The risk-free short rate and the LIBOR spread are driven by three
//! independent affine factors,
//!
//! ```text
//! r_t = Ψ²_t − Ψ¹_t
//! s_t = κ Ψ¹_t + Ψ³_t
//! ```
//!
//! where Ψ¹ is Gaussian (Vasicek) and Ψ², Ψ³ are square-root diffusions.
//! Bond prices on the OIS curve discount at `r`, the fictitious "risky"
//! bonds that generate LIBOR discount at `r + s`.
//!
//! * [`affine`] holds the model parameters, the Riccati solver and bond formulas.
//! * [`pricing`] computes FRA fair rates, the multiplicative adjustment factor
//!   between single-curve and two-curve quantities, and Fourier caplet prices.
//! * [`montecarlo`] simulates the factors and provides independent estimators
//!   for every analytic quantity.
//! * [`calibration`] generates synthetic quotes and fits the model back to them.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod calibration;
pub mod error;
pub mod montecarlo;
pub mod pricing;
pub mod quadrature;

pub use affine::{
    AffineModel, AffineTransform, BondCoeffs, Curve, FactorKind, FactorSpec, FactorState,
    ModelParams, RatioCoeffs, RiccatiSolver,
};
pub use calibration::{CalibrationResult, QuoteSet};
pub use error::{Error, Result};
pub use montecarlo::{McEstimate, PathSet, Scheme, SimConfig};
pub use pricing::{CapletContract, FraContract, FraDecomposition, QuadratureConfig};
