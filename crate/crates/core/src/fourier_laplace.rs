//! The Fourier–Laplace transform on a zero-padded window and the
//! application of frequency multipliers.
//!
//! With `N = pad * n` and `xi_k = 2 pi k / (N dt)`, the discrete transform is
//!
//! ```text
//! U_k = dt / sqrt(2 pi) * sum_j exp(-(i xi_k + rho) t_j) u_j
//! ```
//!
//! which makes `dxi * sum |U_k|^2` equal to the node-rule weighted norm
//! exactly. Multipliers act on the padded sequence and the result is cut back
//! to the original window.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::weighted_space::{Signal, TemporalGrid};
use crate::{Error, Result};

pub const DEFAULT_PAD: usize = 2;

/// Spectrum in centered, increasing frequency order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSignal {
    pub freqs: Vec<f64>,
    /// Row-major `N x m`: `values[k * m + c]`.
    pub values: Vec<C64>,
    pub rho: f64,
    pub m: usize,
    t0: f64,
    dt: f64,
    n_window: usize,
}

impl SpectralSignal {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.freqs.len() as f64 * self.dt)
    }

    /// `sqrt(dxi * sum |U_k|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.dxi() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn scaled_by(&self, symbol: impl Fn(f64) -> C64) -> Result<SpectralSignal> {
        let mut out = self.clone();
        for (k, &xi) in self.freqs.iter().enumerate() {
            let s = finite_symbol(&symbol, xi)?;
            for z in &mut out.values[k * self.m..(k + 1) * self.m] {
                *z *= s;
            }
        }
        Ok(out)
    }
}

fn finite_symbol(symbol: &impl Fn(f64) -> C64, xi: f64) -> Result<C64> {
    let s = symbol(xi);
    if s.re.is_finite() && s.im.is_finite() {
        Ok(s)
    } else {
        Err(Error::Symbol { xi })
    }
}

/// Precomputed FFT plans and frequency layout for one grid and padding.
#[derive(Clone)]
pub struct SpectralEngine {
    grid: TemporalGrid,
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralEngine")
            .field("grid", &self.grid)
            .field("size", &self.size)
            .finish()
    }
}

impl SpectralEngine {
    pub fn new(grid: TemporalGrid, pad: usize) -> Result<Self> {
        if pad < 2 {
            return Err(Error::Parameter(format!("pad factor must be at least 2, got {pad}")));
        }
        Ok(Self::with_size(grid, pad * grid.n))
    }

    /// Transform on the window itself, treating `e^{-rho t} u` as periodic.
    /// Exact inverse of the solver's frequency discretization; only sound for
    /// signals whose weighted tail is negligible.
    pub(crate) fn periodic(grid: TemporalGrid) -> Self {
        Self::with_size(grid, grid.n)
    }

    fn with_size(grid: TemporalGrid, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            size,
            fwd: planner.plan_fft_forward(size),
            inv: planner.plan_fft_inverse(size),
        }
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.size as f64 * self.grid.dt)
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.grid.dt
    }

    /// Frequency of FFT bin `k` (natural order, negative half wrapped).
    #[inline]
    pub fn freq(&self, k: usize) -> f64 {
        let kk = if k < self.size / 2 { k as i64 } else { k as i64 - self.size as i64 };
        kk as f64 * self.dxi()
    }

    pub fn symbol_values(&self, symbol: impl Fn(f64) -> C64) -> Result<Vec<C64>> {
        (0..self.size).map(|k| finite_symbol(&symbol, self.freq(k))).collect()
    }

    fn check_grid(&self, u: &Signal) -> Result<()> {
        if !self.grid.compatible(u.grid()) {
            return Err(Error::Dimension("signal grid differs from the transform grid".into()));
        }
        Ok(())
    }

    /// Raw FFT of `e^{-rho t} u` per column, zero padded, natural order.
    fn raw_columns(&self, u: &Signal) -> Vec<Vec<C64>> {
        let n = self.grid.n;
        let weights: Vec<f64> = (0..n).map(|j| self.grid.weight(j)).collect();
        (0..u.m())
            .map(|c| {
                let mut buf = vec![C64::new(0.0, 0.0); self.size];
                for j in 0..n {
                    buf[j] = u.value(j, c) * weights[j];
                }
                self.fwd.process(&mut buf);
                buf
            })
            .collect()
    }

    fn from_raw_columns(&self, cols: Vec<Vec<C64>>) -> Signal {
        let n = self.grid.n;
        let m = cols.len();
        let scale = 1.0 / self.size as f64;
        let mut values = vec![C64::new(0.0, 0.0); n * m];
        for (c, mut buf) in cols.into_iter().enumerate() {
            self.inv.process(&mut buf);
            for j in 0..n {
                values[j * m + c] = buf[j] * (scale / self.grid.weight(j));
            }
        }
        Signal::from_parts(self.grid, m, values)
    }

    /// Scaled transform, columns in natural FFT order.
    pub(crate) fn spectrum(&self, u: &Signal) -> Result<Vec<Vec<C64>>> {
        self.check_grid(u)?;
        let mut cols = self.raw_columns(u);
        let scale = self.grid.dt / (2.0 * PI).sqrt();
        let phases: Vec<C64> = (0..self.size)
            .map(|k| C64::from_polar(scale, -self.freq(k) * self.grid.t0))
            .collect();
        for col in &mut cols {
            for (z, p) in col.iter_mut().zip(&phases) {
                *z *= p;
            }
        }
        Ok(cols)
    }

    /// Inverse of [`Self::spectrum`], truncated to the window.
    pub(crate) fn synthesize(&self, mut cols: Vec<Vec<C64>>) -> Signal {
        let scale = (2.0 * PI).sqrt() / self.grid.dt;
        let phases: Vec<C64> = (0..self.size)
            .map(|k| C64::from_polar(scale, self.freq(k) * self.grid.t0))
            .collect();
        for col in &mut cols {
            for (z, p) in col.iter_mut().zip(&phases) {
                *z *= p;
            }
        }
        self.from_raw_columns(cols)
    }

    /// `inverse(symbol * forward(u))` without the truncation audit.
    pub fn apply(&self, u: &Signal, symbol: impl Fn(f64) -> C64) -> Result<Signal> {
        self.check_grid(u)?;
        let sym = self.symbol_values(symbol)?;
        Ok(self.apply_values(u, &sym))
    }

    pub(crate) fn apply_values(&self, u: &Signal, sym: &[C64]) -> Signal {
        let mut cols = self.raw_columns(u);
        for col in &mut cols {
            for (z, s) in col.iter_mut().zip(sym) {
                *z *= s;
            }
        }
        self.from_raw_columns(cols)
    }

    /// Like [`Self::apply`], also returning the fraction of the output energy
    /// above 0.9 Nyquist.
    pub fn apply_with_high_fraction(&self, u: &Signal, symbol: impl Fn(f64) -> C64) -> Result<(Signal, f64)> {
        self.check_grid(u)?;
        let sym = self.symbol_values(symbol)?;
        let mut cols = self.raw_columns(u);
        let cut = 0.9 * self.nyquist();
        let (mut high, mut total) = (0.0, 0.0);
        for col in &mut cols {
            for (k, (z, s)) in col.iter_mut().zip(&sym).enumerate() {
                *z *= s;
                let e = z.norm_sqr();
                total += e;
                if self.freq(k).abs() > cut {
                    high += e;
                }
            }
        }
        let fraction = if total > 0.0 { high / total } else { 0.0 };
        Ok((self.from_raw_columns(cols), fraction))
    }

    /// `sqrt(dxi * sum_k weight(xi_k) |U_k|^2)`.
    pub fn weighted_spectral_norm(&self, u: &Signal, weight: impl Fn(f64) -> f64) -> Result<f64> {
        self.check_grid(u)?;
        let cols = self.raw_columns(u);
        let w: Vec<f64> = (0..self.size).map(|k| weight(self.freq(k))).collect();
        // |U_k|^2 dxi = |raw_k|^2 dt / N
        let mut acc = 0.0;
        for col in &cols {
            acc += col.iter().zip(&w).map(|(z, w)| z.norm_sqr() * w).sum::<f64>();
        }
        Ok((acc * self.grid.dt / self.size as f64).sqrt())
    }

    /// `dxi * sum_k weight(xi_k) U_k conj(V_k)`.
    pub fn weighted_spectral_inner(&self, u: &Signal, v: &Signal, weight: impl Fn(f64) -> f64) -> Result<C64> {
        self.check_grid(u)?;
        self.check_grid(v)?;
        if u.m() != v.m() {
            return Err(Error::Dimension("component counts differ".into()));
        }
        let a = self.raw_columns(u);
        let b = self.raw_columns(v);
        let w: Vec<f64> = (0..self.size).map(|k| weight(self.freq(k))).collect();
        let mut acc = C64::new(0.0, 0.0);
        for (ca, cb) in a.iter().zip(&b) {
            for k in 0..self.size {
                acc += ca[k] * cb[k].conj() * w[k];
            }
        }
        Ok(acc * (self.grid.dt / self.size as f64))
    }
}

/// Fourier–Laplace transform of a resolved signal.
pub fn forward(u: &Signal, pad_factor: usize) -> Result<SpectralSignal> {
    u.check_resolved()?;
    let engine = SpectralEngine::new(*u.grid(), pad_factor)?;
    let cols = engine.spectrum(u)?;
    let size = engine.size();
    let m = u.m();
    let half = size / 2;
    let mut freqs = Vec::with_capacity(size);
    let mut values = vec![C64::new(0.0, 0.0); size * m];
    for pos in 0..size {
        let k = (pos + size - half) % size;
        freqs.push(engine.freq(k));
        for c in 0..m {
            values[pos * m + c] = cols[c][k];
        }
    }
    Ok(SpectralSignal {
        freqs,
        values,
        rho: u.grid().rho,
        m,
        t0: u.grid().t0,
        dt: u.grid().dt,
        n_window: u.grid().n,
    })
}

/// Inverse transform back onto `grid`.
pub fn inverse(spec: &SpectralSignal, grid: &TemporalGrid) -> Result<Signal> {
    let size = spec.freqs.len();
    let compatible = spec.n_window == grid.n
        && (spec.dt - grid.dt).abs() <= 1e-12 * grid.dt
        && (spec.t0 - grid.t0).abs() <= 1e-9 * grid.dt
        && (spec.rho - grid.rho).abs() <= 1e-12 * grid.rho
        && size % grid.n == 0
        && size >= 2 * grid.n
        && spec.values.len() == size * spec.m;
    if !compatible {
        return Err(Error::Dimension("spectrum does not belong to this grid".into()));
    }
    let engine = SpectralEngine::new(*grid, size / grid.n)?;
    let half = size / 2;
    let mut cols = vec![vec![C64::new(0.0, 0.0); size]; spec.m];
    for pos in 0..size {
        let k = (pos + size - half) % size;
        for (c, col) in cols.iter_mut().enumerate() {
            col[k] = spec.values[pos * spec.m + c];
        }
    }
    Ok(engine.synthesize(cols))
}

/// `inverse(symbol * forward(u))` with the default padding.
pub fn apply_multiplier(u: &Signal, symbol: impl Fn(f64) -> C64) -> Result<Signal> {
    apply_multiplier_padded(u, DEFAULT_PAD, symbol)
}

pub fn apply_multiplier_padded(u: &Signal, pad: usize, symbol: impl Fn(f64) -> C64) -> Result<Signal> {
    u.check_resolved()?;
    SpectralEngine::new(*u.grid(), pad)?.apply(u, symbol)
}

/// The symbol `i xi + rho` of the weighted time derivative.
#[inline]
pub fn derivative_symbol(xi: f64, rho: f64) -> C64 {
    C64::new(rho, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighted_space::{weighted_inner, weighted_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_grid() -> TemporalGrid {
        TemporalGrid::new(-2.0, 1.0 / 128.0, 4096, 1.0).unwrap()
    }

    fn bump(g: TemporalGrid) -> Signal {
        Signal::scalar_fn(g, |t| (-(t - 3.0) * (t - 3.0)).exp()).unwrap()
    }

    fn random_smooth(rng: &mut ChaCha8Rng, g: TemporalGrid, m: usize) -> Signal {
        let bumps: Vec<(f64, f64, C64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(0.0..6.0),
                    rng.random_range(0.5..1.5),
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        Signal::from_fn(g, m, |t, c| {
            bumps
                .iter()
                .map(|(c0, w, a)| a * (-((t - c0 - c as f64 * 0.3) / w).powi(2)).exp())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let z = Signal::zeros(bump_grid(), 2);
        let s = forward(&z, 2).unwrap();
        assert!(s.values.iter().all(|v| v.norm() == 0.0));
        assert!(inverse(&s, &bump_grid()).unwrap().is_zero());
    }

    #[test]
    fn frequencies_are_centered_and_increasing() {
        let s = forward(&bump(bump_grid()), 2).unwrap();
        assert_eq!(s.len(), 8192);
        assert!(s.freqs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s.freqs[4096], 0.0);
    }

    #[test]
    fn matches_direct_summation_of_defining_integral() {
        let g = bump_grid();
        let u = bump(g);
        let s = forward(&u, 2).unwrap();
        for pos in [4096, 4100, 4000, 4500, 3000] {
            let xi = s.freqs[pos];
            let direct: C64 = (0..g.n)
                .map(|j| {
                    let t = g.time(j);
                    C64::from_polar((-g.rho * t).exp(), -xi * t) * u.value(j, 0)
                })
                .sum::<C64>()
                * (g.dt / (2.0 * PI).sqrt());
            let rel = (s.values[pos] - direct).norm() / direct.norm().max(1e-300);
            assert!(rel < 1e-8 || (s.values[pos] - direct).norm() < 1e-14, "pos {pos}: {rel}");
        }
    }

    #[test]
    fn parseval_and_round_trip_on_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = TemporalGrid::new(-2.0, 1.0 / 64.0, 2048, 1.0).unwrap();
        for _ in 0..20 {
            let u = random_smooth(&mut rng, g, 2);
            let s = forward(&u, 2).unwrap();
            let norm = weighted_norm(&u);
            assert!((s.l2_norm() - norm).abs() / norm < 1e-10);
            let back = inverse(&s, &g).unwrap();
            // pointwise error grows like e^{rho t} at late times, so compare weighted
            let err = weighted_norm(&back.sub(&u).unwrap());
            assert!(err < 1e-10 * norm, "{err}");
        }
    }

    #[test]
    fn round_trip_keeps_causal_support() {
        let g = TemporalGrid::new(-2.0, 1.0 / 64.0, 2048, 1.0).unwrap();
        let u = Signal::scalar_fn(g, |t| if t > 1.0 { (t - 1.0).powi(2) * (-(t - 1.0) * 2.0).exp() } else { 0.0 })
            .unwrap()
            .with_support_start(1.0)
            .unwrap();
        let back = inverse(&forward(&u, 2).unwrap(), &g).unwrap();
        for j in 0..g.n {
            if g.time(j) < 1.0 {
                assert!(back.value(j, 0).norm() <= 1e-9 * u.max_abs());
            }
        }
    }

    #[test]
    fn inverse_rejects_foreign_grid() {
        let s = forward(&bump(bump_grid()), 2).unwrap();
        assert!(matches!(inverse(&s, &bump_grid().refined()), Err(Error::Dimension(_))));
    }

    #[test]
    fn unit_symbol_is_identity() {
        let u = bump(bump_grid());
        let v = apply_multiplier(&u, |_| C64::new(1.0, 0.0)).unwrap();
        assert!(weighted_norm(&v.sub(&u).unwrap()) < 1e-10 * weighted_norm(&u));
    }

    #[test]
    fn nonfinite_symbol_is_reported() {
        let u = bump(bump_grid());
        let r = apply_multiplier(&u, |xi| if xi == 0.0 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) });
        assert!(matches!(r, Err(Error::Symbol { xi }) if xi == 0.0));
    }

    fn derivative_error(g: TemporalGrid) -> f64 {
        // d/dt of the bump against the exact derivative, which the centered
        // difference approximates to second order
        let u = bump(g);
        let d = apply_multiplier(&u, |xi| derivative_symbol(xi, g.rho)).unwrap();
        let values = u.real_parts();
        let fd = Signal::from_values(
            g,
            1,
            (0..g.n)
                .map(|j| {
                    let lo = if j == 0 { 0.0 } else { values[j - 1] };
                    let hi = if j + 1 == g.n { 0.0 } else { values[j + 1] };
                    C64::new((hi - lo) / (2.0 * g.dt), 0.0)
                })
                .collect(),
        )
        .unwrap();
        weighted_norm(&d.sub(&fd).unwrap()) / weighted_norm(&fd)
    }

    #[test]
    fn derivative_symbol_matches_centered_differences() {
        let g = bump_grid();
        let e0 = derivative_error(g);
        let e1 = derivative_error(g.refined());
        assert!(e0 < 1e-3, "{e0}");
        assert!(e1 < e0 / 3.0, "{e0} {e1}");
    }

    #[test]
    fn inverse_derivative_of_indicator_is_ramp() {
        let g = TemporalGrid::new(-2.0, 1.0 / 4096.0, 32 * 4096, 1.0).unwrap();
        let u = Signal::indicator(g, 0.0, 1.0);
        let v = apply_multiplier(&u, |xi| derivative_symbol(xi, g.rho).inv()).unwrap();
        let exact = Signal::scalar_fn(g, |t| t.clamp(0.0, 1.0)).unwrap();
        let err = weighted_norm(&v.sub(&exact).unwrap());
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn adjoint_of_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = TemporalGrid::new(-2.0, 1.0 / 64.0, 2048, 1.0).unwrap();
        for _ in 0..10 {
            let u = random_smooth(&mut rng, g, 1);
            let v = random_smooth(&mut rng, g, 1);
            let du = apply_multiplier(&u, |xi| derivative_symbol(xi, g.rho)).unwrap();
            let dv = apply_multiplier(&v, |xi| derivative_symbol(xi, g.rho)).unwrap();
            let adj = dv.scaled(C64::new(-1.0, 0.0)).axpy(C64::new(2.0 * g.rho, 0.0), &v).unwrap();
            let lhs = weighted_inner(&du, &v).unwrap();
            let rhs = weighted_inner(&u, &adj).unwrap();
            let scale = weighted_norm(&du) * weighted_norm(&v);
            assert!((lhs - rhs).norm() < 1e-8 * scale);
        }
    }
}
