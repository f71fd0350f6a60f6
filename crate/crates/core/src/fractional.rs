//! Fractional powers of the weighted time derivative.
//!
//! The production path is the spectral multiplier `(i xi + rho)^alpha`.
//! [`rl_integral`] and [`half_derivative_singular`] evaluate the same
//! operators directly in time by product integration and serve as
//! independent checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use statrs::function::gamma::gamma;

use crate::fourier_laplace::{SpectralEngine, DEFAULT_PAD};
use crate::toeplitz;
use crate::weighted_space::Signal;
use crate::{Error, Result};

/// Largest admissible share of output energy above 0.9 Nyquist.
pub const HIGH_FREQUENCY_LIMIT: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalOrder {
    pub alpha: f64,
}

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Parameter("fractional order must be finite".into()));
        }
        Ok(Self { alpha })
    }

    /// Principal branch of `(i xi + rho)^alpha`; the base has positive real
    /// part so no branch cut is crossed.
    #[inline]
    pub fn symbol(&self, xi: f64, rho: f64) -> C64 {
        if self.alpha == 0.0 {
            return C64::new(1.0, 0.0);
        }
        C64::new(rho, xi).powf(self.alpha)
    }

    /// `|i xi + rho|^alpha`.
    #[inline]
    pub fn modulus(&self, xi: f64, rho: f64) -> f64 {
        (rho * rho + xi * xi).powf(0.5 * self.alpha)
    }
}

/// How a signal continues before the start of its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum History {
    Zero,
    /// Held at the first sample.
    Hold,
}

pub fn frac_derivative(u: &Signal, alpha: f64) -> Result<Signal> {
    u.check_resolved()?;
    let engine = SpectralEngine::new(*u.grid(), DEFAULT_PAD)?;
    frac_derivative_with(&engine, u, alpha)
}

/// Spectral fractional derivative on a prepared engine, with the resolution
/// post-check for positive orders.
pub fn frac_derivative_with(engine: &SpectralEngine, u: &Signal, alpha: f64) -> Result<Signal> {
    let order = FractionalOrder::new(alpha)?;
    let rho = u.grid().rho;
    if alpha <= 0.0 {
        return engine.apply(u, |xi| order.symbol(xi, rho));
    }
    let (out, fraction) = engine.apply_with_high_fraction(u, |xi| order.symbol(xi, rho))?;
    if fraction >= HIGH_FREQUENCY_LIMIT {
        return Err(Error::Regularity { fraction });
    }
    Ok(out)
}

/// `(1 / Gamma(alpha)) int_{-inf}^t (t - s)^{alpha - 1} u(s) ds` for
/// `0 < alpha <= 1`, exact for piecewise-linear `u`.
pub fn rl_integral(u: &Signal, alpha: f64) -> Result<Signal> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!("order must lie in (0, 1], got {alpha}")));
    }
    let grid = *u.grid();
    let n = grid.n;
    let scale = grid.dt.powf(alpha) / gamma(alpha + 2.0);
    let a1 = alpha + 1.0;
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let k = k as f64;
                scale * ((k + 1.0).powf(a1) - 2.0 * k.powf(a1) + (k - 1.0).powf(a1))
            }
        })
        .collect();
    Ok(apply_columns(u, &weights))
}

/// Singular-integral form of the half derivative,
/// `(1 / (2 sqrt(pi))) int_{-inf}^t (t - s)^{-3/2} (u(t) - u(s)) ds`,
/// for zero history before the window.
pub fn half_derivative_singular(u: &Signal) -> Result<Signal> {
    half_derivative_singular_with(u, History::Zero)
}

pub fn half_derivative_singular_with(u: &Signal, history: History) -> Result<Signal> {
    let grid = *u.grid();
    let n = grid.n;
    let root_dt = grid.dt.sqrt();
    // Piecewise-linear u integrated exactly against r^{-3/2}: the hat at lag
    // k carries 4 (2 sqrt k - sqrt(k+1) - sqrt(k-1)) / sqrt(dt).
    let lag = |k: f64| {
        let a = (k + 1.0).sqrt();
        let b = (k - 1.0).sqrt();
        let c = k.sqrt();
        8.0 / ((a + b) * (c + b) * (a + c))
    };
    let norm = 1.0 / (2.0 * PI.sqrt());
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                4.0 / root_dt * norm
            } else {
                -lag(k as f64) / root_dt * norm
            }
        })
        .collect();
    let mut out = apply_columns(u, &weights);
    if history == History::Hold {
        let m = u.m();
        for i in 0..n {
            let k = (i + 1) as f64;
            let tail = 4.0 * (k.sqrt() - (k - 1.0).sqrt()) / root_dt * norm;
            for c in 0..m {
                out.row_mut(i)[c] -= u.value(0, c) * tail;
            }
        }
    }
    Ok(out)
}

fn apply_columns(u: &Signal, weights: &[f64]) -> Signal {
    let m = u.m();
    let n = u.n();
    let mut out = Signal::zeros(*u.grid(), m);
    for c in 0..m {
        let y = toeplitz::causal(weights, &u.column(c));
        for (j, v) in y.into_iter().enumerate() {
            out.row_mut(j)[c] = v;
        }
    }
    debug_assert_eq!(out.n(), n);
    out
}

/// `(1 + eps (i xi + rho))^{-1} u`, a contraction approximating the identity.
pub fn smoothing_resolvent(u: &Signal, eps: f64) -> Result<Signal> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    u.check_resolved()?;
    let rho = u.grid().rho;
    SpectralEngine::new(*u.grid(), DEFAULT_PAD)?.apply(u, |xi| (C64::new(1.0 + eps * rho, eps * xi)).inv())
}

/// `|| |i xi + rho|^alpha U ||` in Plancherel form.
pub fn sobolev_norm(u: &Signal, alpha: f64) -> Result<f64> {
    let engine = SpectralEngine::new(*u.grid(), DEFAULT_PAD)?;
    sobolev_norm_with(&engine, u, alpha)
}

pub fn sobolev_norm_with(engine: &SpectralEngine, u: &Signal, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("order must be nonnegative, got {alpha}")));
    }
    let rho = u.grid().rho;
    let order = FractionalOrder::new(2.0 * alpha)?;
    engine.weighted_spectral_norm(u, |xi| order.modulus(xi, rho))
}

/// `<u, v>_{rho, alpha}` in Plancherel form.
pub fn sobolev_inner_with(engine: &SpectralEngine, u: &Signal, v: &Signal, alpha: f64) -> Result<C64> {
    let rho = u.grid().rho;
    let order = FractionalOrder::new(2.0 * alpha)?;
    engine.weighted_spectral_inner(u, v, |xi| order.modulus(xi, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighted_space::{weighted_inner, weighted_norm, TemporalGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_grid() -> TemporalGrid {
        TemporalGrid::new(-2.0, 1.0 / 128.0, 4096, 1.0).unwrap()
    }

    fn bump(g: TemporalGrid) -> Signal {
        Signal::scalar_fn(g, |t| (-(t - 3.0) * (t - 3.0)).exp()).unwrap()
    }

    fn rel(a: &Signal, b: &Signal) -> f64 {
        weighted_norm(&a.sub(b).unwrap()) / weighted_norm(b)
    }

    #[test]
    fn order_zero_is_identity() {
        let u = bump(bump_grid());
        assert!(rel(&frac_derivative(&u, 0.0).unwrap(), &u) < 1e-12);
    }

    #[test]
    fn minus_one_on_indicator_is_ramp() {
        let g = TemporalGrid::new(-2.0, 1.0 / 4096.0, 32 * 4096, 1.0).unwrap();
        let u = Signal::indicator(g, 0.0, 1.0);
        let v = frac_derivative(&u, -1.0).unwrap();
        let exact = Signal::scalar_fn(g, |t| t.clamp(0.0, 1.0)).unwrap();
        assert!(weighted_norm(&v.sub(&exact).unwrap()) < 1e-6);
    }

    #[test]
    fn two_half_derivatives_make_one() {
        let u = bump(bump_grid());
        let half = frac_derivative(&frac_derivative(&u, 0.5).unwrap(), 0.5).unwrap();
        let one = frac_derivative(&u, 1.0).unwrap();
        assert!(rel(&half, &one) < 1e-8);
    }

    #[test]
    fn rough_signal_fails_resolution_post_check() {
        let g = TemporalGrid::new(0.0, 0.01, 4096, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Signal::scalar_fn(g, |t| if t < 4.0 { rng.random_range(-1.0..1.0) } else { 0.0 }).unwrap();
        assert!(matches!(frac_derivative(&u, 1.0), Err(Error::Regularity { .. })));
        assert!(frac_derivative(&u, -0.5).is_ok());
    }

    #[test]
    fn rl_half_on_heaviside() {
        let g = TemporalGrid::new(-1.0, 1.0 / 1024.0, 8 * 1024, 1.0).unwrap();
        let u = Signal::indicator(g, 0.0, 100.0);
        let v = rl_integral(&u, 0.5).unwrap();
        for j in 0..g.n {
            let t = g.time(j);
            if t >= 0.1 {
                let exact = 2.0 * t.sqrt() / PI.sqrt();
                assert!((v.value(j, 0).re - exact).abs() < 1e-4 * exact, "t = {t}");
            } else if t < -g.dt / 2.0 {
                assert!(v.value(j, 0).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rl_one_on_indicator_is_exact_off_the_jumps() {
        let g = TemporalGrid::new(-2.0, 1.0 / 256.0, 2048, 1.0).unwrap();
        let u = Signal::indicator(g, 0.0, 1.0);
        let v = rl_integral(&u, 1.0).unwrap();
        let jumps = [g.nearest(0.0), g.nearest(1.0)];
        for j in 0..g.n {
            if jumps.contains(&j) {
                continue;
            }
            let exact = g.time(j).clamp(0.0, 1.0);
            assert!((v.value(j, 0).re - exact).abs() < 1e-8, "t = {}", g.time(j));
        }
    }

    #[test]
    fn rl_rejects_bad_orders() {
        let u = bump(bump_grid());
        assert!(rl_integral(&u, 0.0).is_err());
        assert!(rl_integral(&u, 1.5).is_err());
    }

    #[test]
    fn rl_matches_spectral_negative_powers() {
        for alpha in [0.25, 0.5, 1.0] {
            let mut g = bump_grid();
            let mut last = f64::INFINITY;
            for level in 0..3 {
                let u = bump(g);
                let e = rel(&rl_integral(&u, alpha).unwrap(), &frac_derivative(&u, -alpha).unwrap());
                assert!(e < 1e-4 && e < last, "alpha {alpha}, level {level}: {e}");
                last = e;
                g = g.refined();
            }
        }
    }

    #[test]
    fn singular_half_derivative_matches_spectral() {
        let mut last = f64::INFINITY;
        let mut g = bump_grid();
        for _ in 0..3 {
            let u = bump(g);
            let a = half_derivative_singular(&u).unwrap();
            let b = frac_derivative(&u, 0.5).unwrap();
            let e = rel(&a, &b);
            assert!(e < 1e-3 && e < last, "{e}");
            last = e;
            g = g.refined();
        }
    }

    #[test]
    fn singular_half_derivative_of_constants() {
        let g = bump_grid();
        assert!(half_derivative_singular(&Signal::zeros(g, 1)).unwrap().is_zero());
        let c = Signal::scalar_fn(g, |_| 2.5).unwrap();
        let held = half_derivative_singular_with(&c, History::Hold).unwrap();
        for j in g.n / 8..g.n - g.n / 8 {
            assert!(held.value(j, 0).norm() < 1e-3);
        }
    }

    #[test]
    fn resolvent_is_a_contraction_close_to_identity() {
        let u = bump(bump_grid());
        let norm0 = weighted_norm(&u);
        let norm1 = sobolev_norm(&u, 1.0).unwrap();
        for eps in [1.0, 0.1, 0.01] {
            let r = smoothing_resolvent(&u, eps).unwrap();
            assert!(weighted_norm(&r) <= norm0 + 1e-12);
            let defect = weighted_norm(&r.sub(&u).unwrap());
            assert!(defect <= 1.1 * eps * norm1);
        }
        let tiny = smoothing_resolvent(&u, 1e-8).unwrap();
        assert!(rel(&tiny, &u) < 1e-4);
        assert!(smoothing_resolvent(&u, 0.0).is_err());
    }

    #[test]
    fn sobolev_norm_of_order_zero_is_l2() {
        let u = bump(bump_grid());
        let a = sobolev_norm(&u, 0.0).unwrap();
        let b = weighted_inner(&u, &u).unwrap().re.sqrt();
        assert!((a - b).abs() < 1e-10 * b);
        assert!(sobolev_norm(&u, -0.5).is_err());
    }

    #[test]
    fn positivity_of_symbol_real_part() {
        let g = bump_grid();
        let engine = SpectralEngine::new(g, 2).unwrap();
        for alpha in [0.25, 0.5, 0.75, 1.0] {
            let order = FractionalOrder::new(alpha).unwrap();
            let floor = g.rho.powf(alpha);
            for k in 0..engine.size() {
                assert!(order.symbol(engine.freq(k), g.rho).re >= floor - 1e-12);
            }
        }
    }
}
