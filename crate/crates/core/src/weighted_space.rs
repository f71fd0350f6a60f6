//! Time grids, sampled signals and the `rho`-weighted inner products.
//!
//! A [`Signal`] holds `n` time samples of an `m`-dimensional complex vector.
//! Outside its window the signal is zero, so the trapezoid rule on the
//! zero-extended samples reduces to a plain weighted sum over the nodes.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::{Error, Result};

/// Relative tail mass accepted by [`Signal::check_resolved`].
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TemporalGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
    pub rho: f64,
}

impl TemporalGrid {
    pub fn new(t0: f64, dt: f64, n: usize, rho: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 samples, got {n}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
        }
        if !t0.is_finite() {
            return Err(Error::Parameter("t0 must be finite".into()));
        }
        Ok(Self { t0, dt, n, rho })
    }

    /// Grid with `n` cells covering `[t0, t_end)`.
    pub fn over(t0: f64, t_end: f64, n: usize, rho: f64) -> Result<Self> {
        if t_end <= t0 {
            return Err(Error::Parameter(format!("empty window [{t0}, {t_end})")));
        }
        Self::new(t0, (t_end - t0) / n as f64, n, rho)
    }

    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.n as f64 * self.dt
    }

    /// Square root of the quadrature weight at node `j`, i.e. `e^{-rho t_j}`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        (-self.rho * self.time(j)).exp()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.time(j)).collect()
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.t0, self.dt, self.n, rho)
    }

    /// Same window with half the step.
    pub fn refined(&self) -> Self {
        Self {
            dt: self.dt / 2.0,
            n: self.n * 2,
            ..*self
        }
    }

    /// Index of the node closest to `t`, clamped to the window.
    pub fn nearest(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn compatible(&self, other: &TemporalGrid) -> bool {
        self.n == other.n
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
            && (self.rho - other.rho).abs() <= 1e-12 * self.rho
    }
}

/// Result of the truncation audit of a signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub tail: f64,
    pub norm: f64,
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    grid: TemporalGrid,
    m: usize,
    values: Vec<C64>,
    support_start: Option<f64>,
}

impl Signal {
    pub fn zeros(grid: TemporalGrid, m: usize) -> Self {
        Self {
            grid,
            m,
            values: vec![C64::new(0.0, 0.0); grid.n * m],
            support_start: None,
        }
    }

    /// Row-major samples: `values[j * m + c]` is component `c` at node `j`.
    pub fn from_values(grid: TemporalGrid, m: usize, values: Vec<C64>) -> Result<Self> {
        if m == 0 || values.len() != grid.n * m {
            return Err(Error::Dimension(format!(
                "expected {} x {} samples, got {}",
                grid.n,
                m,
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter("signal samples must be finite".into()));
        }
        Ok(Self {
            grid,
            m,
            values,
            support_start: None,
        })
    }

    pub fn from_fn(grid: TemporalGrid, m: usize, mut f: impl FnMut(f64, usize) -> C64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.n * m);
        for j in 0..grid.n {
            let t = grid.time(j);
            for c in 0..m {
                values.push(f(t, c));
            }
        }
        Self::from_values(grid, m, values)
    }

    pub fn scalar_fn(grid: TemporalGrid, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, 1, |t, _| C64::new(f(t), 0.0))
    }

    /// Scalar indicator of `[a, b)`. A node sitting exactly on a jump gets the
    /// midpoint value 1/2, which keeps the transform of the sampled step
    /// second-order accurate.
    pub fn indicator(grid: TemporalGrid, a: f64, b: f64) -> Self {
        let tol = 1e-9 * grid.dt;
        let step = |t: f64, at: f64| {
            if (t - at).abs() <= tol {
                0.5
            } else if t > at {
                1.0
            } else {
                0.0
            }
        };
        let values = (0..grid.n)
            .map(|j| {
                let t = grid.time(j);
                C64::new(step(t, a) - step(t, b), 0.0)
            })
            .collect();
        Self {
            grid,
            m: 1,
            values,
            support_start: None,
        }
    }

    pub(crate) fn from_parts(grid: TemporalGrid, m: usize, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.n * m);
        Self {
            grid,
            m,
            values,
            support_start: None,
        }
    }

    /// Marks the signal as vanishing before `t`; fails if a sample before `t`
    /// is nonzero.
    pub fn with_support_start(mut self, t: f64) -> Result<Self> {
        let tol = 1e-9 * self.grid.dt;
        for j in 0..self.grid.n {
            if self.grid.time(j) < t - tol && self.row(j).iter().any(|z| *z != C64::new(0.0, 0.0)) {
                return Err(Error::Parameter(format!(
                    "sample at t = {} is nonzero before the declared support start {t}",
                    self.grid.time(j)
                )));
            }
        }
        self.support_start = Some(t);
        Ok(self)
    }

    pub fn grid(&self) -> &TemporalGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn support_start(&self) -> Option<f64> {
        self.support_start
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    #[inline]
    pub fn value(&self, j: usize, c: usize) -> C64 {
        self.values[j * self.m + c]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[C64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.values[j * self.m..(j + 1) * self.m]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.grid.n).map(|j| self.value(j, c)).collect()
    }

    /// Real parts of a scalar signal.
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn scaled(&self, alpha: C64) -> Signal {
        Signal::from_parts(self.grid, self.m, self.values.iter().map(|z| z * alpha).collect())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: C64, other: &Signal) -> Result<Signal> {
        same_shape(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Signal::from_parts(self.grid, self.m, values))
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    /// Same samples on a grid with a different weight.
    pub fn reweighted(&self, rho: f64) -> Result<Signal> {
        let grid = self.grid.with_rho(rho)?;
        Ok(Signal {
            grid,
            ..self.clone()
        })
    }

    /// Samples restricted to the nodes with `t < t_cut`, the rest zeroed.
    pub fn truncated_after(&self, t_cut: f64) -> Signal {
        let mut out = self.clone();
        for j in 0..self.grid.n {
            if self.grid.time(j) >= t_cut {
                out.row_mut(j).fill(C64::new(0.0, 0.0));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    /// Compares the weight at the window end against the norm, as in
    /// `e^{-2 rho t_end} max|u| <= tol * norm(u)`.
    pub fn tail_report(&self, tol: f64) -> TailReport {
        let norm = weighted_norm(self);
        let tail = (-2.0 * self.grid.rho * self.grid.t_end()).exp() * self.max_abs();
        TailReport {
            tail,
            norm,
            resolved: tail <= tol * norm || self.is_zero(),
        }
    }

    pub fn check_resolved(&self) -> Result<()> {
        let report = self.tail_report(TAIL_TOLERANCE);
        if report.resolved {
            Ok(())
        } else {
            Err(Error::Truncation {
                tail: report.tail,
                limit: TAIL_TOLERANCE * report.norm,
            })
        }
    }
}

fn same_shape(u: &Signal, v: &Signal) -> Result<()> {
    if !u.grid.compatible(&v.grid) {
        return Err(Error::Dimension("signals live on different grids".into()));
    }
    if u.m != v.m {
        return Err(Error::Dimension(format!(
            "signals have {} and {} components",
            u.m, v.m
        )));
    }
    Ok(())
}

/// `<u, v>_rho = int <u(t), v(t)> e^{-2 rho t} dt`, linear in `u`.
pub fn weighted_inner(u: &Signal, v: &Signal) -> Result<C64> {
    same_shape(u, v)?;
    let grid = u.grid;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..grid.n {
        let w = grid.weight(j);
        let row: C64 = u.row(j).iter().zip(v.row(j)).map(|(a, b)| a * b.conj()).sum();
        acc += row * (w * w);
    }
    Ok(acc * grid.dt)
}

pub fn weighted_norm(u: &Signal) -> f64 {
    let grid = u.grid;
    let mut acc = 0.0;
    for j in 0..grid.n {
        let w = grid.weight(j);
        let row: f64 = u.row(j).iter().map(|z| z.norm_sqr()).sum();
        acc += row * w * w;
    }
    (acc * grid.dt).sqrt()
}

/// `(int |u(t)|^p e^{-p rho t} dt)^{1/p}` for `p >= 2`.
pub fn weighted_lp_norm(u: &Signal, p: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must be finite and at least 2, got {p}")));
    }
    let grid = u.grid;
    let mut acc = 0.0;
    for j in 0..grid.n {
        let w = grid.weight(j);
        let r: f64 = u.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        acc += (r * w).powf(p);
    }
    Ok((acc * grid.dt).powf(1.0 / p))
}
