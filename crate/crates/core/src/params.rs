//! Equation parameters for `i u_t + Δu + μ|x|^{-b}|u|^α u = 0` and the
//! exponents derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Relative tolerance used to decide that `alpha` sits exactly on a critical exponent.
const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    MassSubcritical,
    MassCritical,
    Intercritical,
    EnergyCriticalOrBeyond,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::MassSubcritical => "mass-subcritical",
            Regime::MassCritical => "mass-critical",
            Regime::Intercritical => "intercritical",
            Regime::EnergyCriticalOrBeyond => "energy-critical or beyond",
        };
        f.write_str(s)
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub d: usize,
    pub b: f64,
    pub alpha: f64,
    /// +1 focusing, -1 defocusing.
    pub mu: f64,
    pub gamma_crit: f64,
    /// `(1 - gamma_crit) / gamma_crit`; absent when `gamma_crit <= 0`.
    pub sigma: Option<f64>,
    pub alpha_low: f64,
    /// `+inf` for `d <= 2`; serialized as `null`.
    #[serde(with = "infinite_as_null")]
    pub alpha_high: f64,
    pub regime: Regime,
    /// Set when `b = 0` was admitted for closed-form comparisons.
    pub b_zero_test_mode: bool,
}

impl PhysParams {
    /// Validated parameters with `0 < b < min(2, d)`.
    pub fn new(d: usize, b: f64, alpha: f64, mu: f64) -> Result<Self> {
        if d == 0 {
            return param("dimension must be at least 1");
        }
        if !(b > 0.0 && b < 2.0_f64.min(d as f64)) {
            return param(format!("b = {b} outside (0, min(2, d)) for d = {d}"));
        }
        Self::build(d, b, alpha, mu, false)
    }

    /// Same as [`PhysParams::new`] but admits `b = 0` (the classical NLS). Only
    /// meant for closed-form comparisons; the flag is carried into every output.
    pub fn with_b_zero_test_mode(d: usize, alpha: f64, mu: f64) -> Result<Self> {
        if d == 0 {
            return param("dimension must be at least 1");
        }
        Self::build(d, 0.0, alpha, mu, true)
    }

    /// Accepts `b = 0` in test mode, otherwise defers to [`PhysParams::new`].
    pub fn new_allow_b_zero(d: usize, b: f64, alpha: f64, mu: f64) -> Result<Self> {
        if b == 0.0 {
            Self::with_b_zero_test_mode(d, alpha, mu)
        } else {
            Self::new(d, b, alpha, mu)
        }
    }

    /// Focusing mass-critical parameters `alpha = (4 - 2b)/d`.
    pub fn mass_critical(d: usize, b: f64) -> Result<Self> {
        Self::new(d, b, (4.0 - 2.0 * b) / d as f64, 1.0)
    }

    fn build(d: usize, b: f64, alpha: f64, mu: f64, b_zero_test_mode: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return param(format!("alpha = {alpha} must be positive and finite"));
        }
        if mu != 1.0 && mu != -1.0 {
            return param(format!("mu = {mu} must be +1 or -1"));
        }
        let df = d as f64;
        let alpha_low = (4.0 - 2.0 * b) / df;
        let alpha_high = if d >= 3 { (4.0 - 2.0 * b) / (df - 2.0) } else { f64::INFINITY };
        let gamma_crit = df / 2.0 - (2.0 - b) / alpha;
        let near = |x: f64| (alpha - x).abs() <= CRITICAL_TOL * x.abs().max(1.0);
        let regime = if near(alpha_low) {
            Regime::MassCritical
        } else if alpha < alpha_low {
            Regime::MassSubcritical
        } else if alpha_high.is_finite() && (near(alpha_high) || alpha > alpha_high) {
            Regime::EnergyCriticalOrBeyond
        } else {
            Regime::Intercritical
        };
        let sigma = if gamma_crit > 0.0 && regime != Regime::MassCritical {
            Some((1.0 - gamma_crit) / gamma_crit)
        } else {
            None
        };
        Ok(Self { d, b, alpha, mu, gamma_crit, sigma, alpha_low, alpha_high, regime, b_zero_test_mode })
    }

    pub fn is_focusing(&self) -> bool {
        self.mu > 0.0
    }

    pub fn is_mass_critical(&self) -> bool {
        self.regime == Regime::MassCritical
    }

    /// `d α + 2b`, the exponent combination that recurs in every virial formula.
    pub fn d_alpha_2b(&self) -> f64 {
        self.d as f64 * self.alpha + 2.0 * self.b
    }

    /// `4 - 2b - (d - 2) α`, the L² exponent in the Gagliardo–Nirenberg inequality (times 2).
    pub fn gn_mass_exponent(&self) -> f64 {
        4.0 - 2.0 * self.b - (self.d as f64 - 2.0) * self.alpha
    }

    /// Same parameters with the opposite sign of the nonlinearity.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::build(self.d, self.b, self.alpha, mu, self.b_zero_test_mode)
    }

    /// Parameters for which a ground state exists: `0 < alpha < alpha_high`.
    pub fn check_subcritical_energy(&self) -> Result<()> {
        if self.regime == Regime::EnergyCriticalOrBeyond {
            return param(format!(
                "alpha = {} is energy-critical or beyond (alpha_high = {})",
                self.alpha, self.alpha_high
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_exponents() {
        let p = PhysParams::new(3, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.alpha_low, 2.0 / 3.0);
        assert_eq!(p.alpha_high, 2.0);
        assert!((p.gamma_crit - 0.5).abs() < 1e-15);
        assert!((p.sigma.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.regime, Regime::Intercritical);
    }

    #[test]
    fn regimes() {
        assert_eq!(PhysParams::mass_critical(2, 0.5).unwrap().regime, Regime::MassCritical);
        assert!(PhysParams::mass_critical(2, 0.5).unwrap().sigma.is_none());
        assert_eq!(PhysParams::new(3, 0.5, 0.5, 1.0).unwrap().regime, Regime::MassSubcritical);
        assert_eq!(PhysParams::new(3, 0.5, 3.0, 1.0).unwrap().regime, Regime::EnergyCriticalOrBeyond);
        assert_eq!(PhysParams::new(3, 0.5, 3.0, 1.0).unwrap().alpha_high, 3.0);
        assert!(PhysParams::new(1, 0.5, 100.0, 1.0).unwrap().alpha_high.is_infinite());
    }

    #[test]
    fn rejects_bad_b() {
        assert!(PhysParams::new(1, 1.0, 2.0, 1.0).is_err());
        assert!(PhysParams::new(3, 2.0, 1.0, 1.0).is_err());
        assert!(PhysParams::new(3, 0.0, 1.0, 1.0).is_err());
        assert!(PhysParams::new(3, 0.5, 1.0, 0.5).is_err());
        let p = PhysParams::with_b_zero_test_mode(1, 4.0, 1.0).unwrap();
        assert!(p.b_zero_test_mode);
        assert!(p.is_mass_critical());
    }
}
