use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bound on |κ| accepted by validation.
pub const KAPPA_LIMIT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// Ornstein–Uhlenbeck: dΨ = (a − bΨ)dt + σ dw.
    Gaussian,
    /// Square-root diffusion: dΨ = (a − bΨ)dt + σ√Ψ dw.
    SquareRoot,
}

/// One affine factor: its dynamics and its value at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub psi0: f64,
}

impl FactorSpec {
    pub fn gaussian(a: f64, b: f64, sigma: f64, psi0: f64) -> Self {
        Self {
            kind: FactorKind::Gaussian,
            a,
            b,
            sigma,
            psi0,
        }
    }

    pub fn square_root(a: f64, b: f64, sigma: f64, psi0: f64) -> Self {
        Self {
            kind: FactorKind::SquareRoot,
            a,
            b,
            sigma,
            psi0,
        }
    }

    /// Long-run mean a/b.
    pub fn mean_level(&self) -> f64 {
        self.a / self.b
    }

    fn validate(&self, index: usize) -> Result<()> {
        let name = |field: &str| format!("factor{} {}", index + 1, field);
        for (field, value) in [("a", self.a), ("b", self.b), ("sigma", self.sigma)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "positivity: {} = {value} must be finite and > 0",
                    name(field)
                )));
            }
        }
        if !self.psi0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "{} is not finite",
                name("psi0")
            )));
        }
        if self.kind == FactorKind::SquareRoot {
            let feller = 0.5 * self.sigma * self.sigma;
            if self.a < feller {
                return Err(Error::InvalidParams(format!(
                    "Feller: factor{} has a = {} < sigma^2/2 = {}",
                    index + 1,
                    self.a,
                    feller
                )));
            }
            if self.psi0 < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{} = {} must be >= 0 for a square-root factor",
                    name("psi0"),
                    self.psi0
                )));
            }
        }
        Ok(())
    }
}

/// Parameters of the three-factor model: factor 1 Gaussian, factors 2 and 3
/// square-root, and the loading κ of factor 1 in the spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub factor1: FactorSpec,
    pub factor2: FactorSpec,
    pub factor3: FactorSpec,
    pub kappa: f64,
}

impl ModelParams {
    pub fn factors(&self) -> [FactorSpec; 3] {
        [self.factor1, self.factor2, self.factor3]
    }

    pub fn factor(&self, index: usize) -> &FactorSpec {
        match index {
            0 => &self.factor1,
            1 => &self.factor2,
            2 => &self.factor3,
            _ => panic!("factor index {index} out of range"),
        }
    }

    pub fn factor_mut(&mut self, index: usize) -> &mut FactorSpec {
        match index {
            0 => &mut self.factor1,
            1 => &mut self.factor2,
            2 => &mut self.factor3,
            _ => panic!("factor index {index} out of range"),
        }
    }

    /// Initial state Ψ_0 at t = 0.
    pub fn initial_state(&self) -> FactorState {
        FactorState::new(0.0, self.factor1.psi0, self.factor2.psi0, self.factor3.psi0)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Returns the parameters unchanged if every model constraint holds.
    pub fn validate(self) -> Result<Self> {
        let expected = [
            FactorKind::Gaussian,
            FactorKind::SquareRoot,
            FactorKind::SquareRoot,
        ];
        for (i, (spec, kind)) in self.factors().iter().zip(expected).enumerate() {
            if spec.kind != kind {
                return Err(Error::InvalidParams(format!(
                    "factor{} must be {:?}, got {:?}",
                    i + 1,
                    kind,
                    spec.kind
                )));
            }
            spec.validate(i)?;
        }
        if !self.kappa.is_finite() || self.kappa.abs() > KAPPA_LIMIT {
            return Err(Error::InvalidParams(format!(
                "kappa = {} outside [-{KAPPA_LIMIT}, {KAPPA_LIMIT}]",
                self.kappa
            )));
        }
        Ok(self)
    }
}

/// Markov state of the model at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorState {
    pub t: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
}

impl FactorState {
    pub fn new(t: f64, psi1: f64, psi2: f64, psi3: f64) -> Self {
        Self {
            t,
            psi1,
            psi2,
            psi3,
        }
    }

    pub fn psi(&self) -> [f64; 3] {
        [self.psi1, self.psi2, self.psi3]
    }

    /// Risk-free short rate r = Ψ² − Ψ¹.
    pub fn short_rate(&self) -> f64 {
        self.psi2 - self.psi1
    }

    /// Short-rate spread s = κΨ¹ + Ψ³.
    pub fn spread(&self, kappa: f64) -> f64 {
        kappa * self.psi1 + self.psi3
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t, self.psi1, self.psi2, self.psi3]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.t < 0.0 || self.psi2 < 0.0 || self.psi3 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "state {self:?} requires t >= 0, psi2 >= 0, psi3 >= 0"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams {
            factor1: FactorSpec::gaussian(0.01, 0.5, 0.01, 0.0),
            factor2: FactorSpec::square_root(0.02, 0.5, 0.1, 0.03),
            factor3: FactorSpec::square_root(0.005, 0.8, 0.05, 0.004),
            kappa: 0.3,
        }
    }

    #[test]
    fn feller_boundary() {
        let mut p = base();
        p.factor2 = FactorSpec::square_root(0.02, 0.5, 0.1, 0.0);
        assert!(p.validate().is_ok());
        p.factor3 = FactorSpec::square_root(0.004, 0.5, 0.1, 0.0);
        match p.validate() {
            Err(Error::InvalidParams(msg)) => {
                assert!(msg.contains("Feller") && msg.contains("factor3"), "{msg}")
            }
            other => panic!("expected Feller violation, got {other:?}"),
        }
    }

    #[test]
    fn zero_speed_rejected() {
        for i in 0..3 {
            let mut p = base();
            p.factor_mut(i).b = 0.0;
            match p.validate() {
                Err(Error::InvalidParams(msg)) => assert!(msg.contains("positivity"), "{msg}"),
                other => panic!("expected positivity error, got {other:?}"),
            }
        }
    }

    #[test]
    fn kinds_and_kappa() {
        let mut p = base();
        p.factor1.kind = FactorKind::SquareRoot;
        assert!(p.validate().is_err());
        assert!(base().with_kappa(-1.5).validate().is_ok());
        assert!(base().with_kappa(5.5).validate().is_err());
        assert!(base().with_kappa(f64::NAN).validate().is_err());
        let mut p = base();
        p.factor3.psi0 = -1e-3;
        assert!(p.validate().is_err());
        let mut p = base();
        p.factor1.psi0 = -0.2;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn state_accessors() {
        let s = FactorState::new(0.0, 0.01, 0.03, 0.002);
        assert!((s.short_rate() - 0.02).abs() < 1e-15);
        assert!((s.spread(0.5) - 0.007).abs() < 1e-15);
        assert!(FactorState::new(0.0, -1.0, 0.0, 0.0).validate().is_ok());
        assert!(FactorState::new(0.0, 0.0, -1e-9, 0.0).validate().is_err());
    }
}
