//! Element-wise non-linearities applied to the layered item features, and
//! their exact derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    /// `max(x, 0)`.
    Relu,
    /// `ln(1 + e^x)`, computed in an overflow-safe form.
    Softplus,
    /// `x`. Degenerate kind that reduces the model to a biased semi-linear
    /// factorization; useful for diagnostics and oracle comparisons.
    Identity,
}

impl ActivationKind {
    /// g(x). Infallible core used by the training and prediction loops,
    /// which guard finiteness at their own boundaries.
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Softplus => {
                // ln(1+e^x) = x + ln(1+e^-x) for large x, avoiding overflow.
                if x > 0.0 {
                    x + (-x).exp().ln_1p()
                } else {
                    x.exp().ln_1p()
                }
            }
            ActivationKind::Identity => x,
        }
    }

    /// g'(x). relu'(0) is defined as 0 (subgradient choice).
    #[inline]
    pub fn eval_derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Softplus => {
                // Logistic sigmoid, evaluated on the stable side.
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    /// Checked g(x): rejects non-finite input.
    pub fn apply(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: format!("activation input {x}"),
            });
        }
        Ok(self.eval(x))
    }

    /// Checked g'(x): rejects non-finite input.
    pub fn derivative(self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: format!("activation input {x}"),
            });
        }
        Ok(self.eval_derivative(x))
    }

    /// Whether g(x) > 0 for every finite x. Softplus is strictly positive,
    /// which makes the conditional weight update vacuous for it.
    pub fn always_positive(self) -> bool {
        matches!(self, ActivationKind::Softplus)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Softplus => "softplus",
            ActivationKind::Identity => "identity",
        }
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(ActivationKind::Relu),
            "softplus" => Ok(ActivationKind::Softplus),
            "identity" => Ok(ActivationKind::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::ActivationKind::*;
    use crate::rng::SplitMix64;

    #[test]
    fn relu_definition() {
        assert_eq!(Relu.apply(-1.5).unwrap(), 0.0);
        assert_eq!(Relu.apply(2.5).unwrap(), 2.5);
        assert_eq!(Relu.derivative(3.2).unwrap(), 1.0);
        assert_eq!(Relu.derivative(-0.1).unwrap(), 0.0);
        assert_eq!(Relu.derivative(0.0).unwrap(), 0.0); // subgradient choice
    }

    #[test]
    fn softplus_analytic_values() {
        let v = Softplus.apply(0.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15, "{v}");
        assert!((Softplus.derivative(0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softplus_large_argument_is_stable() {
        // Extended-precision value: softplus(40) = 40 + ln(1 + e^-40), where
        // e^-40 ~ 4.2483e-18, so ln1p(e^-40) ~ 4.2483e-18 -- far below the
        // f64 ulp at 40 (~7.1e-15). The exact f64 result is therefore 40.
        let v = Softplus.apply(40.0).unwrap();
        assert!((v - 40.0).abs() <= 1e-12, "{v}");
        // No overflow far beyond the naive exp() range.
        let big = Softplus.apply(1000.0).unwrap();
        assert!((big - 1000.0).abs() <= 1e-9);
        assert!(Softplus.apply(-1000.0).unwrap() >= 0.0);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        for kind in [Relu, Softplus, Identity] {
            assert!(kind.apply(f64::NAN).is_err());
            assert!(kind.apply(f64::INFINITY).is_err());
            assert!(kind.derivative(f64::NEG_INFINITY).is_err());
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = SplitMix64::new(17);
        let h = 1e-5;
        for kind in [Relu, Softplus, Identity] {
            for _ in 0..50 {
                let x = rng.next_f64() * 10.0 - 5.0;
                if kind == Relu && x.abs() < 1e-4 {
                    continue; // kink
                }
                let fd = (kind.eval(x + h) - kind.eval(x - h)) / (2.0 * h);
                let d = kind.eval_derivative(x);
                assert!((d - fd).abs() <= 1e-5, "{kind:?} x={x} d={d} fd={fd}");
                if kind == Softplus {
                    let rel = (d - fd).abs() / d.abs().max(1e-12);
                    assert!(rel <= 1e-6, "softplus x={x} rel={rel}");
                }
            }
        }
    }

    #[test]
    fn softplus_positive_and_increasing() {
        let mut prev = Softplus.eval(-30.0);
        assert!(prev > 0.0);
        let mut x = -30.0;
        while x < 30.0 {
            x += 0.25;
            let v = Softplus.eval(x);
            assert!(v > prev, "softplus not increasing at {x}");
            prev = v;
        }
    }
}
