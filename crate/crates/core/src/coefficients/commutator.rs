use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{LawKind, MaterialLaw};
use crate::fourier_laplace::{SpectralEngine, DEFAULT_PAD};
use crate::fractional::{frac_derivative_with, sobolev_norm_with, FractionalOrder};
use crate::weighted_space::{weighted_norm, Signal, TemporalGrid};
use crate::{Error, Result};

/// Fitted constants of `||[d^{1/2}, N] u|| <= c_tilde ||u||_{1/2} + d ||u||_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorEstimate {
    pub c_tilde: f64,
    pub d: f64,
    pub empirical: bool,
    /// Largest observed `||[d^{1/2}, N] u|| / ||u||_0` over the probes.
    pub max_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `d^{1/2}(N u) - N(d^{1/2} u)`.
pub fn commutator_half(law: &MaterialLaw, u: &Signal) -> Result<Signal> {
    u.check_resolved()?;
    let engine = SpectralEngine::new(*u.grid(), DEFAULT_PAD)?;
    let nu = law.apply(u)?;
    let dnu = frac_derivative_with(&engine, &nu, 0.5)?;
    let du = frac_derivative_with(&engine, u, 0.5)?;
    dnu.sub(&law.apply(&du)?)
}

struct HalfCommutator<'a> {
    law: &'a MaterialLaw,
    engine: SpectralEngine,
    symbol: Vec<C64>,
    adjoint_symbol: Vec<C64>,
}

impl<'a> HalfCommutator<'a> {
    fn new(law: &'a MaterialLaw, grid: TemporalGrid) -> Result<Self> {
        let engine = SpectralEngine::new(grid, DEFAULT_PAD)?;
        let half = FractionalOrder::new(0.5)?;
        let symbol = engine.symbol_values(|xi| half.symbol(xi, grid.rho))?;
        let adjoint_symbol = symbol.iter().map(|s| s.conj()).collect();
        Ok(Self {
            law,
            engine,
            symbol,
            adjoint_symbol,
        })
    }

    fn apply(&self, u: &Signal) -> Result<Signal> {
        let a = self.engine.apply_values(&self.law.apply(u)?, &self.symbol);
        let b = self.law.apply(&self.engine.apply_values(u, &self.symbol))?;
        a.sub(&b)
    }

    fn apply_adjoint(&self, u: &Signal) -> Result<Signal> {
        let a = self.law.apply_adjoint(&self.engine.apply_values(u, &self.adjoint_symbol))?;
        let b = self.engine.apply_values(&self.law.apply_adjoint(u)?, &self.adjoint_symbol);
        a.sub(&b)
    }
}

/// Power iteration on `B* B` for `B = [d^{1/2}, N]` on `L2_rho(grid)`.
pub fn commutator_norm(law: &MaterialLaw, grid: TemporalGrid, m: usize, iterations: usize, seed: u64) -> Result<NormEstimate> {
    let op = HalfCommutator::new(law, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Signal::from_fn(grid, m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))?;
    let mut nx = weighted_norm(&x);
    if nx == 0.0 {
        return Ok(NormEstimate {
            norm: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    x = x.scaled(C64::new(1.0 / nx, 0.0));
    let mut estimate = 0.0;
    for it in 1..=iterations {
        let y = op.apply_adjoint(&op.apply(&x)?)?;
        nx = weighted_norm(&y);
        if nx == 0.0 {
            return Ok(NormEstimate {
                norm: 0.0,
                iterations: it,
                converged: true,
            });
        }
        let next = nx.sqrt();
        x = y.scaled(C64::new(1.0 / nx, 0.0));
        if (next - estimate).abs() <= 1e-10 * next {
            return Ok(NormEstimate {
                norm: next,
                iterations: it,
                converged: true,
            });
        }
        estimate = next;
    }
    Ok(NormEstimate {
        norm: estimate,
        iterations,
        converged: false,
    })
}

/// Time interval where a multiplication coefficient varies; the whole
/// middle of the window otherwise.
fn active_interval(law: &MaterialLaw, grid: &TemporalGrid) -> (f64, f64) {
    let fallback = (grid.time(grid.n / 4), grid.time(grid.n / 2));
    let LawKind::Multiplication(x) = law.kind() else {
        return fallback;
    };
    let slopes: Vec<f64> = x.coeff.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let peak = slopes.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return fallback;
    }
    let first = slopes.iter().position(|s| *s >= 0.05 * peak).unwrap_or(0);
    let last = slopes.iter().rposition(|s| *s >= 0.05 * peak).unwrap_or(first);
    (grid.time(first), grid.time(last + 1))
}

/// Modulated Gaussian probes normalized in `H^{1/2}`.
pub(crate) fn commutator_probes(
    law: &MaterialLaw,
    grid: TemporalGrid,
    m: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Signal>> {
    let engine = SpectralEngine::new(grid, DEFAULT_PAD)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = active_interval(law, &grid);
    let span = grid.n as f64 * grid.dt;
    let omega_max = engine.nyquist() / 4.0;
    let omega_min = (4.0 * grid.rho).min(omega_max / 2.0);
    let mut probes = Vec::with_capacity(count);
    for _ in 0..count {
        let omega = omega_min * (omega_max / omega_min).powf(rng.random::<f64>());
        let sigma = (4.0 / omega).max(8.0 * grid.dt).min(span / 16.0);
        let center = lo + (hi - lo) * rng.random::<f64>();
        let dir: Vec<C64> = (0..m)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let u = Signal::from_fn(grid, m, |t, c| {
            let x = (t - center) / sigma;
            dir[c] * C64::from_polar((-0.5 * x * x).exp(), omega * t)
        })?;
        let h = sobolev_norm_with(&engine, &u, 0.5)?;
        probes.push(u.scaled(C64::new(1.0 / h, 0.0)));
    }
    Ok(probes)
}

/// Least-squares fit of the commutator bound over random probes.
pub fn estimate_commutator_bound(
    law: &MaterialLaw,
    grid: TemporalGrid,
    m: usize,
    probes: usize,
    seed: u64,
) -> Result<CommutatorEstimate> {
    if probes < 10 {
        return Err(Error::Parameter(format!("need at least 10 probes, got {probes}")));
    }
    let engine = SpectralEngine::new(grid, DEFAULT_PAD)?;
    let op = HalfCommutator::new(law, grid)?;
    let mut xs = Vec::with_capacity(probes);
    let mut zs = Vec::with_capacity(probes);
    let mut ys = Vec::with_capacity(probes);
    for u in commutator_probes(law, grid, m, probes, seed)? {
        xs.push(sobolev_norm_with(&engine, &u, 0.5)?);
        zs.push(weighted_norm(&u));
        ys.push(weighted_norm(&op.apply(&u)?));
    }
    let (c_tilde, d) = nonnegative_fit(&xs, &zs, &ys);
    let max_ratio = ys.iter().zip(&zs).map(|(y, z)| y / z).fold(0.0, f64::max);
    Ok(CommutatorEstimate {
        c_tilde,
        d,
        empirical: true,
        max_ratio,
    })
}

/// Minimizes `sum (y - a x - b z)^2` over `a, b >= 0`.
fn nonnegative_fit(x: &[f64], z: &[f64], y: &[f64]) -> (f64, f64) {
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
    let (xx, zz, xz, xy, zy) = (dot(x, x), dot(z, z), dot(x, z), dot(x, y), dot(z, y));
    let sse = |a: f64, b: f64| {
        x.iter()
            .zip(z)
            .zip(y)
            .map(|((xi, zi), yi)| (yi - a * xi - b * zi).powi(2))
            .sum::<f64>()
    };
    let mut candidates = vec![(0.0, 0.0)];
    if xx > 0.0 {
        candidates.push(((xy / xx).max(0.0), 0.0));
    }
    if zz > 0.0 {
        candidates.push((0.0, (zy / zz).max(0.0)));
    }
    let det = xx * zz - xz * xz;
    if det > 1e-14 * xx * zz {
        let a = (xy * zz - zy * xz) / det;
        let b = (zy * xx - xy * xz) / det;
        if a >= 0.0 && b >= 0.0 {
            candidates.push((a, b));
        }
    }
    candidates
        .into_iter()
        .min_by(|p, q| sse(p.0, p.1).total_cmp(&sse(q.0, q.1)))
        .unwrap_or((0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{PointOp, Profile};

    fn grid(rho: f64) -> TemporalGrid {
        TemporalGrid::new(-8.0, 1.0 / 32.0, 1024, rho).unwrap()
    }

    fn arctan() -> Profile {
        Profile::Arctan {
            offset: 0.0,
            amplitude: 1.0,
            center: 0.0,
            scale: 1.0,
        }
    }

    #[test]
    fn fit_recovers_planted_coefficients() {
        let x = [1.0, 1.0, 1.0, 1.0];
        let z = [0.1, 0.2, 0.5, 1.0];
        let y: Vec<f64> = z.iter().map(|zi| 0.3 + 2.0 * zi).collect();
        let (a, b) = nonnegative_fit(&x, &z, &y);
        assert!((a - 0.3).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        let y: Vec<f64> = z.iter().map(|zi| 1.0 - zi).collect();
        let (a, b) = nonnegative_fit(&x, &z, &y);
        assert!(a > 0.0 && b == 0.0);
    }

    #[test]
    fn constant_law_commutes() {
        let g = grid(1.0);
        let u = Signal::scalar_fn(g, |t| (-(t - 1.0).powi(2)).exp()).unwrap();
        let c = commutator_half(&MaterialLaw::scalar(2.5), &u).unwrap();
        assert!(weighted_norm(&c) <= 1e-9 * weighted_norm(&u));
    }

    #[test]
    fn convolution_law_commutes() {
        let g = grid(1.0);
        let law = MaterialLaw::convolution(g, Profile::ExpKernel { kappa: 1.0, rate: 1.0 }, PointOp::identity(), 1.0).unwrap();
        let u = Signal::scalar_fn(g, |t| (-(t - 1.0).powi(2)).exp()).unwrap();
        let c = commutator_half(&law, &u).unwrap();
        assert!(weighted_norm(&c) <= 1e-8 * weighted_norm(&u), "{}", weighted_norm(&c));
    }

    #[test]
    fn arctan_commutator_is_nonzero_and_bounded() {
        let g = grid(1.0);
        let law = MaterialLaw::multiplication(g, arctan(), PointOp::identity()).unwrap();
        let u = Signal::scalar_fn(g, |t| (-(t - 1.0).powi(2)).exp()).unwrap();
        let c = commutator_half(&law, &u).unwrap();
        let norm = commutator_norm(&law, g, 1, 200, 5).unwrap();
        let ratio = weighted_norm(&c) / weighted_norm(&u);
        assert!(ratio > 1e-3);
        assert!(ratio <= norm.norm * (1.0 + 1e-9));
    }

    #[test]
    fn power_iteration_adjoint_is_consistent() {
        use crate::weighted_space::weighted_inner;
        let g = grid(1.5);
        let law = MaterialLaw::multiplication(g, arctan(), PointOp::identity()).unwrap();
        let op = HalfCommutator::new(&law, g).unwrap();
        let u = Signal::scalar_fn(g, |t| (-(t - 1.0).powi(2)).exp() * (3.0 * t).cos()).unwrap();
        let v = Signal::scalar_fn(g, |t| (-(t + 1.0).powi(2)).exp()).unwrap();
        let lhs = weighted_inner(&op.apply(&u).unwrap(), &v).unwrap();
        let rhs = weighted_inner(&u, &op.apply_adjoint(&v).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn probe_count_is_validated() {
        let g = grid(1.0);
        assert!(estimate_commutator_bound(&MaterialLaw::identity(), g, 1, 5, 1).is_err());
        let e = estimate_commutator_bound(&MaterialLaw::identity(), g, 1, 12, 1).unwrap();
        assert!(e.c_tilde <= 1e-8 && e.d <= 1e-8 && e.empirical);
    }

    #[test]
    fn tanh_relative_bound_does_not_grow_under_refinement() {
        let tanh = Profile::Tanh {
            offset: 0.0,
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let mut g = grid(1.0);
        let mut fits = Vec::new();
        for _ in 0..3 {
            let law = MaterialLaw::multiplication(g, tanh.clone(), PointOp::identity()).unwrap();
            fits.push(estimate_commutator_bound(&law, g, 1, 40, 7).unwrap());
            g = g.refined();
        }
        assert!(fits[0].c_tilde < 0.1);
        for w in fits.windows(2) {
            assert!(w[1].c_tilde <= w[0].c_tilde && w[1].d <= 1.1 * w[0].d, "{fits:?}");
        }
    }

    #[test]
    fn arctan_norm_growth_in_rho_is_dominated() {
        let mut base = None;
        for rho in [1.0, 2.0, 4.0] {
            let g = grid(rho);
            let law = MaterialLaw::multiplication(g, arctan(), PointOp::identity()).unwrap();
            let n = commutator_norm(&law, g, 1, 200, 5).unwrap();
            assert!(n.converged);
            let n1 = *base.get_or_insert(n.norm);
            assert!(n.norm <= (n1 + 2.0 * law.sup_norm() * (rho.sqrt() - 1.0)) * 1.1);
        }
    }
}
