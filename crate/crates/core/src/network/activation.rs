use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::C64;

/// One-variable activation functions on the complex plane.
///
/// `Scaled { base, tau }` is the conjugated function `z ↦ tau · base(z / tau)`
/// produced by a change of basis. Use [`Activation::scaled`] rather than the
/// variant directly so the result is normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    /// `z` when `Re z < 0`, else 0. On the real line this is `min(0, x)`.
    FlippedRelu,
    Sigmoid,
    Tanh,
    Scaled {
        base: Box<Activation>,
        tau: C64,
    },
}

fn is_positive_real(z: C64) -> bool {
    z.im == 0.0 && z.re > 0.0
}

fn is_negative_real(z: C64) -> bool {
    z.im == 0.0 && z.re < 0.0
}

impl Activation {
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => {
                if z.re > 0.0 {
                    z
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Activation::FlippedRelu => {
                if z.re < 0.0 {
                    z
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Activation::Sigmoid => C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Scaled { base, tau } => tau * base.eval(z / tau),
        }
    }

    /// The activation `z ↦ tau · self(z / tau)`, normalized:
    /// identity is fixed by every scale, ReLU and its flip are fixed by positive
    /// real scales and swapped by negative ones, nested scales multiply, and a
    /// unit scale disappears.
    pub fn scaled(&self, tau: C64) -> Activation {
        if tau == C64::new(1.0, 0.0) {
            return self.clone();
        }
        match self {
            Activation::Identity => Activation::Identity,
            Activation::Relu | Activation::FlippedRelu if is_positive_real(tau) => self.clone(),
            Activation::Relu if is_negative_real(tau) => Activation::FlippedRelu,
            Activation::FlippedRelu if is_negative_real(tau) => Activation::Relu,
            Activation::Scaled { base, tau: inner } => base.scaled(inner * tau),
            _ => Activation::Scaled {
                base: Box::new(self.clone()),
                tau,
            },
        }
    }

    /// Derivative on the real line; `None` when a scale is not real.
    pub fn derivative_real(&self, x: f64) -> Option<f64> {
        Some(match self {
            Activation::Identity => 1.0,
            Activation::Relu => f64::from(u8::from(x > 0.0)),
            Activation::FlippedRelu => f64::from(u8::from(x < 0.0)),
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Scaled { base, tau } => {
                if tau.im != 0.0 {
                    return None;
                }
                base.derivative_real(x / tau.re)?
            }
        })
    }

    pub fn is_real(&self) -> bool {
        match self {
            Activation::Scaled { base, tau } => tau.im == 0.0 && base.is_real(),
            _ => true,
        }
    }

    /// Short name used in model files for the unscaled variants.
    pub fn name(&self) -> Option<&'static str> {
        Some(match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::FlippedRelu => "flipped_relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Scaled { .. } => return None,
        })
    }

    pub fn from_name(name: &str) -> Option<Activation> {
        Some(match name {
            "identity" => Activation::Identity,
            "relu" => Activation::Relu,
            "flipped_relu" | "min0" => Activation::FlippedRelu,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            _ => return None,
        })
    }
}

/// Computation rule of a max-pooling vertex. A change of basis with negative
/// real part turns a max into a min.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolRule {
    #[default]
    Max,
    Min,
}

impl PoolRule {
    pub fn after_scale(self, tau: Complex64) -> PoolRule {
        match (self, tau.re < 0.0) {
            (r, false) => r,
            (PoolRule::Max, true) => PoolRule::Min,
            (PoolRule::Min, true) => PoolRule::Max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn relu_gates_on_real_part() {
        assert_eq!(Activation::Relu.eval(c(2.0, -1.0)), c(2.0, -1.0));
        assert_eq!(Activation::Relu.eval(c(-2.0, 5.0)), c(0.0, 0.0));
        assert_eq!(Activation::FlippedRelu.eval(c(-2.0, 5.0)), c(-2.0, 5.0));
        assert_eq!(Activation::FlippedRelu.eval(c(0.0, 5.0)), c(0.0, 0.0));
    }

    #[test]
    fn relu_normalization_under_real_scales() {
        assert_eq!(Activation::Relu.scaled(c(3.0, 0.0)), Activation::Relu);
        assert_eq!(
            Activation::Relu.scaled(c(-0.2, 0.0)),
            Activation::FlippedRelu
        );
        assert_eq!(
            Activation::FlippedRelu.scaled(c(-1.0, 0.0)),
            Activation::Relu
        );
        assert_eq!(
            Activation::Identity.scaled(c(0.3, 2.0)),
            Activation::Identity
        );
    }

    #[test]
    fn nested_scales_compose() {
        let s = Activation::Tanh.scaled(c(2.0, 1.0)).scaled(c(0.5, 0.0));
        let expected = Activation::Tanh.scaled(c(1.0, 0.5));
        assert_eq!(s, expected);
        // scaling back by the inverse removes the wrapper entirely
        let back = Activation::Sigmoid.scaled(c(0.0, 2.0)).scaled(c(0.0, -0.5));
        assert_eq!(back, Activation::Sigmoid);
    }

    #[test]
    fn scaled_evaluation_matches_conjugation() {
        let tau = c(-1.1, 0.4);
        for f in [Activation::Tanh, Activation::Sigmoid, Activation::Relu] {
            let g = f.scaled(tau);
            for z in [c(0.3, -0.2), c(-1.5, 0.1), c(2.0, 0.0)] {
                let lhs = g.eval(tau * z);
                let rhs = tau * f.eval(z);
                assert!((lhs - rhs).norm() < 1e-12, "{f:?} at {z}");
            }
        }
    }

    #[test]
    fn pool_rule_flips_on_negative_scale() {
        assert_eq!(PoolRule::Max.after_scale(c(-2.0, 0.0)), PoolRule::Min);
        assert_eq!(PoolRule::Min.after_scale(c(-2.0, 0.0)), PoolRule::Max);
        assert_eq!(PoolRule::Max.after_scale(c(0.5, 0.0)), PoolRule::Max);
    }

    #[test]
    fn real_derivatives() {
        assert_eq!(Activation::Relu.derivative_real(0.0), Some(0.0));
        let t = Activation::Tanh.scaled(c(-2.0, 0.0));
        let h = 1e-6;
        let fd = (t.eval(c(0.7 + h, 0.0)).re - t.eval(c(0.7 - h, 0.0)).re) / (2.0 * h);
        assert!((t.derivative_real(0.7).unwrap() - fd).abs() < 1e-8);
        assert_eq!(
            Activation::Tanh.scaled(c(0.0, 1.0)).derivative_real(0.1),
            None
        );
    }
}
