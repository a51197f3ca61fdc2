//! Candidate rules `f` mapping an amplitude to a probability.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A candidate probability rule.
///
/// `Classical` is the identity on nonnegative real propensities. It is kept for
/// contrast: it cannot express interference. `GammaModulus(g)` is
/// `f(x) = |x|^(2g)`, which is multiplicative for every `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "gamma", rename_all = "snake_case")]
pub enum ProbabilityRule {
    Classical,
    GammaModulus(f64),
}

impl ProbabilityRule {
    /// `f(x) = |x|^2`.
    pub const BORN: ProbabilityRule = ProbabilityRule::GammaModulus(1.0);

    pub fn gamma(gamma: f64) -> Result<Self> {
        let rule = ProbabilityRule::GammaModulus(gamma);
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProbabilityRule::Classical => Ok(()),
            ProbabilityRule::GammaModulus(g) if g.is_finite() && g > 0.0 => Ok(()),
            ProbabilityRule::GammaModulus(g) => Err(Error::UnsupportedRule(format!(
                "gamma must be a positive finite real, got {g}"
            ))),
        }
    }

    pub fn is_born(&self) -> bool {
        matches!(self, ProbabilityRule::GammaModulus(g) if *g == 1.0)
    }

    pub fn gamma_value(&self) -> Option<f64> {
        match *self {
            ProbabilityRule::Classical => None,
            ProbabilityRule::GammaModulus(g) => Some(g),
        }
    }

    /// The exponent `g` when `f` is a polynomial in `x` and `x*`, i.e. when `g`
    /// is a positive integer.
    pub fn polynomial_degree(&self) -> Option<u32> {
        match *self {
            ProbabilityRule::GammaModulus(g) if g >= 1.0 && g.fract() == 0.0 && g <= 16.0 => {
                Some(g as u32)
            }
            _ => None,
        }
    }

    /// Evaluates `f(x)`.
    ///
    /// The classical rule reads the real part; contexts built under it are
    /// validated to carry real nonnegative propensities only.
    pub fn apply(&self, x: Complex64) -> f64 {
        match *self {
            ProbabilityRule::Classical => x.re,
            ProbabilityRule::GammaModulus(g) => modulus_power(x, g),
        }
    }
}

/// `|x|^(2g)` through the modulus, so no branch cut is involved.
pub(crate) fn modulus_power(x: Complex64, g: f64) -> f64 {
    let sq = x.norm_sqr();
    if g == 1.0 {
        sq
    } else if g.fract() == 0.0 && g <= 64.0 {
        sq.powi(g as i32)
    } else {
        x.norm().powf(2.0 * g)
    }
}

impl fmt::Display for ProbabilityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ProbabilityRule::Classical => write!(f, "identity"),
            ProbabilityRule::GammaModulus(g) => write!(f, "|x|^{}", 2.0 * g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn born_is_squared_modulus() {
        let x = Complex64::new(0.6, 0.8);
        assert_eq!(ProbabilityRule::BORN.apply(x), x.norm_sqr());
        assert!((ProbabilityRule::BORN.apply(x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_rules_are_multiplicative() {
        let x = Complex64::new(0.3, -1.2);
        let y = Complex64::new(-0.7, 0.4);
        for g in [0.5, 1.0, 1.5, 2.0, 2.7] {
            let f = ProbabilityRule::gamma(g).unwrap();
            let lhs = f.apply(x * y);
            let rhs = f.apply(x) * f.apply(y);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "g={g}");
        }
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        assert!(ProbabilityRule::gamma(0.0).is_err());
        assert!(ProbabilityRule::gamma(-1.0).is_err());
        assert!(ProbabilityRule::gamma(f64::NAN).is_err());
    }

    #[test]
    fn polynomial_degree_only_for_integer_gamma() {
        assert_eq!(ProbabilityRule::BORN.polynomial_degree(), Some(1));
        assert_eq!(ProbabilityRule::GammaModulus(2.0).polynomial_degree(), Some(2));
        assert_eq!(ProbabilityRule::GammaModulus(1.5).polynomial_degree(), None);
        assert_eq!(ProbabilityRule::Classical.polynomial_degree(), None);
    }

    #[test]
    fn display() {
        assert_eq!(ProbabilityRule::BORN.to_string(), "|x|^2");
        assert_eq!(ProbabilityRule::GammaModulus(1.5).to_string(), "|x|^3");
        assert_eq!(ProbabilityRule::Classical.to_string(), "identity");
    }
}
