use serde::{Deserialize, Serialize};

/// Closed-form scalar functions of time used for coefficients and kernels.
///
/// A node that falls exactly on a discontinuity takes the midpoint value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `offset + amplitude * atan((t - center) / scale)`
    Arctan {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `offset + amplitude * tanh((t - center) / width)`
    Tanh {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `low` before `at`, `high` after.
    Jump {
        #[serde(default)]
        low: f64,
        #[serde(default = "one")]
        high: f64,
        #[serde(default)]
        at: f64,
    },
    /// `value` on `[start, end)`, zero elsewhere.
    Indicator {
        start: f64,
        end: f64,
        #[serde(default = "one")]
        value: f64,
    },
    /// Causal kernel `kappa * exp(-rate t)` for `t >= 0`.
    ExpKernel {
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    /// Forward average `(1 / eps) int_t^{t + eps} inner(s) ds`.
    #[serde(skip)]
    Regularized { inner: Box<Profile>, eps: f64 },
}

fn one() -> f64 {
    1.0
}

fn near(t: f64, at: f64) -> bool {
    (t - at).abs() <= 1e-12 * (1.0 + at.abs())
}

fn step(t: f64, at: f64) -> f64 {
    if near(t, at) {
        0.5
    } else if t > at {
        1.0
    } else {
        0.0
    }
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Arctan {
                offset,
                amplitude,
                center,
                scale,
            } => offset + amplitude * ((t - center) / scale).atan(),
            Profile::Tanh {
                offset,
                amplitude,
                center,
                width,
            } => offset + amplitude * ((t - center) / width).tanh(),
            Profile::Jump { low, high, at } => low + (high - low) * step(t, *at),
            Profile::Indicator { start, end, value } => value * (step(t, *start) - step(t, *end)),
            Profile::ExpKernel { kappa, rate } => {
                if t >= 0.0 {
                    kappa * (-rate * t).exp()
                } else {
                    0.0
                }
            }
            Profile::Regularized { inner, eps } => match inner.antiderivative(t + eps).zip(inner.antiderivative(t)) {
                Some((hi, lo)) => (hi - lo) / eps,
                None => average(inner, t, *eps),
            },
        }
    }

    /// A fixed antiderivative, when known in closed form.
    pub fn antiderivative(&self, t: f64) -> Option<f64> {
        Some(match self {
            Profile::Constant { value } => value * t,
            Profile::Arctan {
                offset,
                amplitude,
                center,
                scale,
            } => {
                let x = (t - center) / scale;
                offset * t + amplitude * scale * (x * x.atan() - 0.5 * x.mul_add(x, 1.0).ln())
            }
            Profile::Tanh {
                offset,
                amplitude,
                center,
                width,
            } => offset * t + amplitude * width * ln_cosh((t - center) / width),
            Profile::Jump { low, high, at } => low * t + (high - low) * (t - at).max(0.0),
            Profile::Indicator { start, end, value } => value * (t.clamp(*start, *end) - start),
            Profile::ExpKernel { kappa, rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    kappa * (-(-rate * t).exp_m1()) / rate
                }
            }
            Profile::Regularized { .. } => return None,
        })
    }

    /// Pointwise derivative, when the profile is Lipschitz.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        Some(match self {
            Profile::Constant { .. } => 0.0,
            Profile::Arctan {
                amplitude,
                center,
                scale,
                ..
            } => {
                let x = (t - center) / scale;
                amplitude / scale / x.mul_add(x, 1.0)
            }
            Profile::Tanh {
                amplitude,
                center,
                width,
                ..
            } => {
                let c = ((t - center) / width).cosh();
                amplitude / width / (c * c)
            }
            Profile::Jump { low, high, .. } if low == high => 0.0,
            Profile::Indicator { value, .. } if *value == 0.0 => 0.0,
            Profile::Jump { .. } | Profile::Indicator { .. } | Profile::ExpKernel { .. } => return None,
            Profile::Regularized { inner, eps } => (inner.value(t + eps) - inner.value(t)) / eps,
        })
    }

    /// Global Lipschitz constant, for Lipschitz profiles.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Profile::Constant { .. } => Some(0.0),
            Profile::Arctan { amplitude, scale, .. } => Some((amplitude / scale).abs()),
            Profile::Tanh { amplitude, width, .. } => Some((amplitude / width).abs()),
            Profile::Regularized { inner, eps } => match inner.lipschitz() {
                Some(l) => Some(l),
                None => Some(2.0 * inner.sup_abs()? / eps),
            },
            _ => None,
        }
    }

    /// `sup |value|`, when bounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Profile::Constant { value } => Some(value.abs()),
            Profile::Arctan { offset, amplitude, .. } => Some(offset.abs() + amplitude.abs() * std::f64::consts::FRAC_PI_2),
            Profile::Tanh { offset, amplitude, .. } => Some(offset.abs() + amplitude.abs()),
            Profile::Jump { low, high, .. } => Some(low.abs().max(high.abs())),
            Profile::Indicator { value, .. } => Some(value.abs()),
            Profile::ExpKernel { kappa, rate } if *rate >= 0.0 => Some(kappa.abs()),
            Profile::ExpKernel { .. } => None,
            Profile::Regularized { inner, .. } => inner.sup_abs(),
        }
    }

    pub fn regularized(&self, eps: f64) -> Profile {
        Profile::Regularized {
            inner: Box::new(self.clone()),
            eps,
        }
    }
}

fn average(inner: &Profile, t: f64, eps: f64) -> f64 {
    crate::quadrature::integrate(|s| inner.value(s), t, t + eps, 1e-12)
        .map(|v| v / eps)
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivatives_differentiate_back() {
        let profiles = [
            Profile::Arctan {
                offset: 0.5,
                amplitude: 2.0,
                center: 1.0,
                scale: 0.7,
            },
            Profile::Tanh {
                offset: 1.0,
                amplitude: 0.5,
                center: -1.0,
                width: 0.3,
            },
            Profile::ExpKernel { kappa: 0.5, rate: 2.0 },
        ];
        let h = 1e-5;
        for p in &profiles {
            for t in [-2.0, -0.3, 0.4, 1.7, 35.0] {
                let fd = (p.antiderivative(t + h).unwrap() - p.antiderivative(t - h).unwrap()) / (2.0 * h);
                assert!((fd - p.value(t)).abs() < 1e-7, "{p:?} at {t}");
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let p = Profile::Tanh {
            offset: 0.0,
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let h = 1e-6;
        for t in [-1.0, 0.0, 2.0] {
            let fd = (p.value(t + h) - p.value(t - h)) / (2.0 * h);
            assert!((fd - p.derivative(t).unwrap()).abs() < 1e-8);
        }
        assert_eq!(p.lipschitz(), Some(1.0));
    }

    #[test]
    fn regularized_indicator_spot_values() {
        let p = Profile::Indicator {
            start: 0.0,
            end: 1.0,
            value: 1.0,
        }
        .regularized(0.5);
        for (t, v) in [(-0.25, 0.5), (0.25, 1.0), (0.9, 0.2)] {
            assert!((p.value(t) - v).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn jumps_take_midpoint_values() {
        let p = Profile::Jump {
            low: 0.0,
            high: 1.0,
            at: 0.0,
        };
        assert_eq!(p.value(0.0), 0.5);
        assert_eq!(p.value(-1e-3), 0.0);
        assert_eq!(p.value(1e-3), 1.0);
        let k = Profile::ExpKernel { kappa: 1.0, rate: 1.0 };
        assert_eq!(k.value(-0.1), 0.0);
        assert_eq!(k.value(0.0), 1.0);
    }
}
