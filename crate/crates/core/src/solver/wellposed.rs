use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::EvoProblem;
use crate::coefficients::MaterialLaw;
use crate::fourier_laplace::{SpectralEngine, DEFAULT_PAD};
use crate::weighted_space::{Signal, TemporalGrid};
use crate::{Error, Result};

/// Empirical positivity constants over random probes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WellPosednessReport {
    /// `min Re <M00 phi, phi> / |phi|^2`
    pub c_m: f64,
    /// `min Re <(dM + N) phi, phi>_{rho,0} / |phi|^2_{rho,0}`
    pub c0: f64,
    /// Same in the `H^{1/2}` inner product.
    pub c_half: f64,
    pub probes: usize,
}

impl WellPosednessReport {
    /// Fails with the first non-positive constant.
    pub fn require(&self) -> Result<()> {
        for (condition, value) in [("m00_positive", self.c_m), ("l2_positive", self.c0), ("half_positive", self.c_half)] {
            if !(value > 0.0) {
                return Err(Error::WellPosedness {
                    condition: condition.into(),
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Smooth random probe: a few Gaussian bumps with random spatial profiles.
fn probe(rng: &mut ChaCha8Rng, grid: TemporalGrid, m: usize) -> Result<Signal> {
    let len = grid.n as f64 * grid.dt;
    let bumps: Vec<(f64, f64, Vec<f64>)> = (0..3)
        .map(|_| {
            let center = grid.t0 + len * rng.random_range(0.15..0.5);
            let lo = (8.0 * grid.dt).max(len / 40.0);
            let width = rng.random_range(lo..(len / 10.0).max(lo * 1.5));
            let profile = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            (center, width, profile)
        })
        .collect();
    Signal::from_fn(grid, m, |t, c| {
        let v: f64 = bumps
            .iter()
            .map(|(center, width, p)| p[c] * (-((t - center) / width).powi(2)).exp())
            .sum();
        C64::new(v, 0.0)
    })
}

fn plus_law(acc: Signal, law: &MaterialLaw, x: &Signal) -> Result<Signal> {
    if law.is_zero() {
        Ok(acc)
    } else {
        acc.add(&law.apply(x)?)
    }
}

/// `dxi * sum_k w(xi_k) A_k conj(B_k)` summed over columns.
fn spectral_form(engine: &SpectralEngine, a: &[Vec<C64>], b: &[Vec<C64>], w: impl Fn(f64) -> C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (ca, cb) in a.iter().zip(b) {
        for k in 0..engine.size() {
            acc += w(engine.freq(k)) * ca[k] * cb[k].conj();
        }
    }
    acc * engine.dxi()
}

pub fn check_wellposedness(problem: &EvoProblem, probes: usize, seed: u64) -> Result<WellPosednessReport> {
    if probes < 10 {
        return Err(Error::Parameter(format!("need at least 10 probes, got {probes}")));
    }
    let grid = *problem.grid();
    let rho = grid.rho;
    let laws = problem.laws();
    let (m0, m1) = (problem.m0(), problem.m1());
    let engine = SpectralEngine::new(grid, DEFAULT_PAD)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut c_m, mut c0, mut c_half) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for p in 0..probes {
        // cycle through coupled, first-block-only and second-block-only probes
        let phi0 = if p % 3 == 2 { Signal::zeros(grid, m0) } else { probe(&mut rng, grid, m0)? };
        let phi1 = if p % 3 == 1 { Signal::zeros(grid, m1) } else { probe(&mut rng, grid, m1)? };

        let m_phi = plus_law(Signal::zeros(grid, m0), &laws.m00, &phi0)?;
        let top = plus_law(plus_law(Signal::zeros(grid, m0), &laws.n00, &phi0)?, &laws.n01, &phi1)?;
        let bottom = plus_law(plus_law(Signal::zeros(grid, m1), &laws.n10, &phi0)?, &laws.n11, &phi1)?;

        let [s0, s1, sm, st, sb] = [&phi0, &phi1, &m_phi, &top, &bottom].map(|s| engine.spectrum(s));
        let (s0, s1, sm, st, sb) = (s0?, s1?, sm?, st?, sb?);

        for (half, slot) in [(false, &mut c0), (true, &mut c_half)] {
            let w = |xi: f64| {
                if half {
                    C64::new(rho, xi).norm()
                } else {
                    1.0
                }
            };
            let num = spectral_form(&engine, &sm, &s0, |xi| C64::new(rho, xi) * w(xi))
                + spectral_form(&engine, &st, &s0, |xi| C64::new(w(xi), 0.0))
                + spectral_form(&engine, &sb, &s1, |xi| C64::new(w(xi), 0.0));
            let den = spectral_form(&engine, &s0, &s0, |xi| C64::new(w(xi), 0.0)).re
                + spectral_form(&engine, &s1, &s1, |xi| C64::new(w(xi), 0.0)).re;
            *slot = slot.min(num.re / den);
        }
        if p % 3 != 2 {
            let num = spectral_form(&engine, &sm, &s0, |_| C64::new(1.0, 0.0)).re;
            let den = spectral_form(&engine, &s0, &s0, |_| C64::new(1.0, 0.0)).re;
            c_m = c_m.min(num / den);
        }
    }
    Ok(WellPosednessReport { c_m, c0, c_half, probes })
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoScan {
    pub rows: Vec<(f64, WellPosednessReport)>,
    /// Smallest scanned weight passing every positivity check.
    pub smallest: Option<f64>,
}

/// Checks well-posedness at each candidate weight in increasing order.
pub fn smallest_wellposed_rho(
    build: impl Fn(f64) -> Result<EvoProblem>,
    candidates: &[f64],
    probes: usize,
    seed: u64,
) -> Result<RhoScan> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut smallest = None;
    for rho in sorted {
        let report = check_wellposedness(&build(rho)?, probes, seed)?;
        if smallest.is_none() && report.require().is_ok() {
            smallest = Some(rho);
        }
        rows.push((rho, report));
    }
    Ok(RhoScan { rows, smallest })
}
