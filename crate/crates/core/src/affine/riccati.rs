//! Exponential-affine transforms of the factors.
//!
//! For a single factor with dynamics dΨ = (a − bΨ)dt + σ Ψ^γ dw (γ = 0 or ½),
//!
//! ```text
//! E[ exp(−q ∫_t^T Ψ_u du − w Ψ_T) | F_t ] = exp(α(τ) − β(τ) Ψ_t),   τ = T − t,
//! ```
//!
//! where, in time-to-maturity,
//!
//! ```text
//! dβ/dτ = −bβ − ½σ²β²·[square-root] + q,      β(0) = w
//! dα/dτ = −aβ + ½σ²β²·[Gaussian],             α(0) = 0
//! ```
//!
//! The system is integrated with classical RK4 and step doubling until two
//! successive levels agree, then Richardson-extrapolated. The same path is used
//! for real and complex data so closed forms only ever serve as cross-checks.

use num_complex::Complex64;

use super::params::{FactorKind, FactorSpec, ModelParams};
use crate::error::{Error, Result};

/// Step-doubling RK4 integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiSolver {
    /// Agreement required between successive refinement levels, scaled by max(1, |y|).
    pub tol: f64,
    /// Upper bound on the number of RK4 steps of the finest level.
    pub max_steps: usize,
    /// |β| above this value counts as a Riccati explosion.
    pub explosion_bound: f64,
}

impl Default for RiccatiSolver {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_steps: 1 << 20,
            explosion_bound: 1e8,
        }
    }
}

/// (α, β) for a single factor.
pub type FactorCoeffs = (Complex64, Complex64);

/// Coefficients of E[·|F_t] = exp(α − β₁Ψ¹_t − β₂Ψ²_t − β₃Ψ³_t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub alpha: Complex64,
    pub beta: [Complex64; 3],
}

impl AffineTransform {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            alpha: z,
            beta: [z; 3],
        }
    }

    /// Exponent α − β·Ψ.
    pub fn exponent(&self, psi: [f64; 3]) -> Complex64 {
        self.alpha - self.beta[0] * psi[0] - self.beta[1] * psi[1] - self.beta[2] * psi[2]
    }

    pub fn evaluate(&self, psi: [f64; 3]) -> Complex64 {
        self.exponent(psi).exp()
    }

    pub fn is_real(&self) -> bool {
        self.alpha.im == 0.0 && self.beta.iter().all(|b| b.im == 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct FactorOde {
    kind: FactorKind,
    a: f64,
    b: f64,
    half_var: f64,
    q: f64,
}

impl FactorOde {
    fn new(spec: &FactorSpec, q: f64) -> Self {
        Self {
            kind: spec.kind,
            a: spec.a,
            b: spec.b,
            half_var: 0.5 * spec.sigma * spec.sigma,
            q,
        }
    }

    /// (dα/dτ, dβ/dτ)
    #[inline]
    fn rhs(&self, beta: Complex64) -> (Complex64, Complex64) {
        let sq = beta * beta;
        match self.kind {
            FactorKind::Gaussian => (-self.a * beta + self.half_var * sq, -self.b * beta + self.q),
            FactorKind::SquareRoot => {
                (-self.a * beta, -self.b * beta - self.half_var * sq + self.q)
            }
        }
    }
}

enum Integration {
    Done(FactorCoeffs),
    /// Bound exceeded at this time-to-maturity.
    Blowup(f64),
}

fn rk4_fixed(ode: &FactorOde, w: Complex64, tau: f64, n: usize, bound: f64) -> Integration {
    let h = tau / n as f64;
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut beta = w;
    for k in 0..n {
        let (a1, b1) = ode.rhs(beta);
        let (a2, b2) = ode.rhs(beta + b1 * (0.5 * h));
        let (a3, b3) = ode.rhs(beta + b2 * (0.5 * h));
        let (a4, b4) = ode.rhs(beta + b3 * h);
        alpha += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        beta += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
        if !(beta.norm() <= bound) || !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Integration::Blowup((k + 1) as f64 * h);
        }
    }
    Integration::Done((alpha, beta))
}

fn initial_steps(spec: &FactorSpec, tau: f64) -> usize {
    let rate = spec.b.max(1.0);
    ((4.0 * tau * rate).ceil() as usize).max(8)
}

fn close(fine: Complex64, coarse: Complex64, tol: f64) -> bool {
    (fine - coarse).norm() <= tol * fine.norm().max(1.0)
}

impl RiccatiSolver {
    /// Transform of one factor over [t, T] with running weight `q` and
    /// terminal coefficient `w`. `factor` is the 0-based index used in errors.
    pub fn factor_transform(
        &self,
        factor: usize,
        spec: &FactorSpec,
        q: f64,
        w: Complex64,
        t: f64,
        maturity: f64,
    ) -> Result<FactorCoeffs> {
        check_interval(t, maturity)?;
        let tau = maturity - t;
        if tau == 0.0 || (q == 0.0 && w == Complex64::new(0.0, 0.0)) {
            return Ok((Complex64::new(0.0, 0.0), w));
        }
        let ode = FactorOde::new(spec, q);
        let mut n = initial_steps(spec, tau);
        let mut coarse = rk4_fixed(&ode, w, tau, n, self.explosion_bound);
        loop {
            if 2 * n > self.max_steps {
                return match coarse {
                    Integration::Blowup(at) => self.blowup(factor, spec, maturity - at),
                    Integration::Done(_) => Err(Error::SolverNotConverged {
                        max_steps: self.max_steps,
                    }),
                };
            }
            n *= 2;
            let fine = rk4_fixed(&ode, w, tau, n, self.explosion_bound);
            match (&coarse, &fine) {
                (Integration::Done((ac, bc)), Integration::Done((af, bf))) => {
                    if close(*af, *ac, self.tol) && close(*bf, *bc, self.tol) {
                        let alpha = *af + (*af - *ac) / 15.0;
                        let beta = *bf + (*bf - *bc) / 15.0;
                        return Ok((alpha, beta));
                    }
                }
                // Confirmed at two successive levels.
                (Integration::Blowup(_), Integration::Blowup(at)) => {
                    return self.blowup(factor, spec, maturity - at);
                }
                _ => {}
            }
            coarse = fine;
        }
    }

    fn blowup(&self, factor: usize, spec: &FactorSpec, time: f64) -> Result<FactorCoeffs> {
        match spec.kind {
            FactorKind::SquareRoot => Err(Error::RiccatiExplosion {
                factor: factor + 1,
                time,
            }),
            FactorKind::Gaussian => Err(Error::NonFinite(format!(
                "Gaussian factor {} transform",
                factor + 1
            ))),
        }
    }

    /// Same as [`factor_transform`](Self::factor_transform) with exactly `n`
    /// RK4 steps and no refinement or extrapolation.
    pub fn factor_transform_fixed(
        &self,
        spec: &FactorSpec,
        q: f64,
        w: Complex64,
        tau: f64,
        n: usize,
    ) -> Result<FactorCoeffs> {
        match rk4_fixed(
            &FactorOde::new(spec, q),
            w,
            tau,
            n.max(1),
            self.explosion_bound,
        ) {
            Integration::Done(c) => Ok(c),
            Integration::Blowup(_) => Err(Error::NonFinite("fixed-step Riccati".into())),
        }
    }

    /// Joint transform of all three (independent) factors:
    /// E[exp(−∫_t^T q·Ψ du − w·Ψ_T) | F_t].
    pub fn solve(
        &self,
        params: &ModelParams,
        q: [f64; 3],
        w: [Complex64; 3],
        t: f64,
        maturity: f64,
    ) -> Result<AffineTransform> {
        let mut out = AffineTransform::zero();
        for (i, spec) in params.factors().iter().enumerate() {
            let (alpha, beta) = self.factor_transform(i, spec, q[i], w[i], t, maturity)?;
            out.alpha += alpha;
            out.beta[i] = beta;
        }
        Ok(out)
    }
}

pub(crate) fn check_interval(t: f64, maturity: f64) -> Result<()> {
    if !(t.is_finite() && maturity.is_finite()) || t > maturity || t < 0.0 {
        return Err(Error::InvalidContract(format!(
            "need 0 <= t <= T, got t = {t}, T = {maturity}"
        )));
    }
    Ok(())
}
