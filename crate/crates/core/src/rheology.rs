//! Glen's flow law.
//!
//! The effective viscosity is written as a function of the strain-rate
//! invariant `q = |ε|²/2`, regularized as `q + δ` so that it stays finite at
//! zero strain rate when `n > 1`.

use crate::error::{Error, Result};

/// Default regularization added to the strain-rate invariant.
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;

/// Power-law rheology parameters (nondimensional).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlenRheology {
    /// Rate factor `A`.
    pub rate_factor: f64,
    /// Flow exponent `n`.
    pub exponent: f64,
    /// Regularization `δ` added to `|ε|²/2`.
    pub regularization: f64,
}

impl Default for GlenRheology {
    fn default() -> Self {
        Self {
            rate_factor: 0.5,
            exponent: 1.0,
            regularization: DEFAULT_REGULARIZATION,
        }
    }
}

impl GlenRheology {
    pub fn new(rate_factor: f64, exponent: f64, regularization: f64) -> Result<Self> {
        let rheo = Self {
            rate_factor,
            exponent,
            regularization,
        };
        rheo.validate()?;
        Ok(rheo)
    }

    pub fn newtonian(rate_factor: f64) -> Self {
        Self {
            rate_factor,
            exponent: 1.0,
            regularization: DEFAULT_REGULARIZATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_factor > 0.0 && self.rate_factor.is_finite()) {
            return Err(Error::Config(format!(
                "rate factor must be positive, got {}",
                self.rate_factor
            )));
        }
        if !(self.exponent >= 1.0 && self.exponent.is_finite()) {
            return Err(Error::Config(format!(
                "flow exponent must be >= 1, got {}",
                self.exponent
            )));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config(format!(
                "regularization must be >= 0, got {}",
                self.regularization
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.exponent == 1.0
    }

    /// The same law with `n = 1` (used as a continuation start).
    pub fn linearized(&self) -> Self {
        Self {
            exponent: 1.0,
            ..*self
        }
    }

    #[inline]
    fn prefactor(&self) -> f64 {
        0.5 * self.rate_factor.powf(-1.0 / self.exponent)
    }

    #[inline]
    fn power(&self) -> f64 {
        (1.0 - self.exponent) / (2.0 * self.exponent)
    }

    /// Viscosity and its derivative with respect to the invariant `q = |ε|²/2`.
    ///
    /// This is the form used inside assembly loops.
    #[inline]
    pub fn eval_invariant(&self, q: f64) -> (f64, f64) {
        if self.is_linear() {
            return (self.prefactor(), 0.0);
        }
        let base = q + self.regularization;
        let p = self.power();
        let eta = self.prefactor() * base.powf(p);
        (eta, p * eta / base)
    }

    /// Effective viscosity `η(|ε|)` for the Frobenius norm `s = |ε|`.
    pub fn viscosity(&self, s: f64) -> Result<f64> {
        let q = invariant(s)?;
        let (eta, _) = self.eval_invariant(q);
        check_finite(eta, "viscosity")
    }

    /// `dη/d(s²/2)`, the derivative entering the Newton tangent.
    pub fn viscosity_derivative(&self, s: f64) -> Result<f64> {
        let q = invariant(s)?;
        let (_, deta) = self.eval_invariant(q);
        check_finite(deta, "viscosity derivative")
    }
}

fn invariant(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Numeric {
            cell: usize::MAX,
            what: format!("strain-rate norm must be nonnegative, got {s}"),
        });
    }
    let q = 0.5 * s * s;
    if !q.is_finite() {
        return Err(Error::Numeric {
            cell: usize::MAX,
            what: format!("strain-rate invariant overflows for |ε| = {s}"),
        });
    }
    Ok(q)
}

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric {
            cell: usize::MAX,
            what: format!("{what} is not finite"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glen(n: f64, delta: f64) -> GlenRheology {
        GlenRheology::new(0.5, n, delta).unwrap()
    }

    #[test]
    fn newtonian_is_constant() {
        let r = glen(1.0, 1e-10);
        assert_eq!(r.viscosity(7.3).unwrap(), 1.0);
        assert_eq!(r.viscosity(0.0).unwrap(), 1.0);
        assert_eq!(r.viscosity_derivative(3.0).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_values() {
        // ½·0.5^(-1/3)·(½·2)^(-1/3) = ½·2^(1/3)
        let expected = 0.5 * 2f64.cbrt();
        let got = glen(3.0, 0.0).viscosity(2f64.sqrt()).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.62996).abs() < 1e-5);

        // zero strain rate with floor 1e-6: (1e-6)^(-1/3) = 100
        let got = glen(3.0, 1e-6).viscosity(0.0).unwrap();
        assert!((got - 100.0 * expected).abs() < 1e-9);
        assert!((got - 62.996).abs() < 1e-3);
    }

    fn centered_difference(r: &GlenRheology, s: f64) -> f64 {
        // derivative with respect to q = s²/2, stepping in q
        let q = 0.5 * s * s;
        let h = 1e-6 * q.max(1e-12);
        let eta = |q: f64| r.viscosity((2.0 * q).sqrt()).unwrap();
        (eta(q + h) - eta(q - h)) / (2.0 * h)
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &(n, s) in &[(3.0, 2f64.sqrt()), (5.0, 1.0), (3.0, 1e-3), (3.0, 10.0), (1.5, 1.0)] {
            let r = glen(n, 1e-10);
            let exact = r.viscosity_derivative(s).unwrap();
            let fd = centered_difference(&r, s);
            let rel = (exact - fd).abs() / exact.abs();
            assert!(rel < 1e-6, "n={n} s={s}: {exact} vs {fd} ({rel:e})");
        }
    }

    #[test]
    fn regularization_is_negligible_at_moderate_strain() {
        let a = glen(3.0, 1e-10);
        let b = glen(3.0, 0.0);
        for &s in &[1e-2, 0.1, 1.0, 10.0] {
            let va = a.viscosity(s).unwrap();
            let vb = b.viscosity(s).unwrap();
            assert!((va - vb).abs() / vb < 1e-6);
        }
    }

    #[test]
    fn monotone_nonincreasing_for_shear_thinning() {
        let r = glen(3.0, 1e-10);
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let s = 1e-6 * 1.4f64.powi(k);
            let v = r.viscosity(s).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GlenRheology::new(0.0, 3.0, 0.0).is_err());
        assert!(GlenRheology::new(0.5, 0.5, 0.0).is_err());
        assert!(GlenRheology::new(0.5, 3.0, -1.0).is_err());
        assert!(glen(3.0, 0.0).viscosity(-1.0).is_err());
        assert!(glen(3.0, 0.0).viscosity(1e200).is_err());
        // singular without regularization
        assert!(glen(3.0, 0.0).viscosity(0.0).is_err());
    }
}
