//! Norms of the maximal regularity estimate
//! `|u|_1 + |Cu|_{1/2} + |C*v|_0 + |v|_{1/2} <= kappa (|f|_0 + |g|_{1/2})`,
//! refinement studies and the root bound used to close it.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::fourier_laplace::{derivative_symbol, SpectralEngine, DEFAULT_PAD};
use crate::fractional::{sobolev_norm_with, HIGH_FREQUENCY_LIMIT};
use crate::solver::{apply_c, apply_cstar, solve_frequency, solve_time_stepping, EvoProblem, Scheme, SolveResult};
use crate::{Error, Result};

/// Largest residual accepted before norms are computed.
pub const RESIDUAL_LIMIT: f64 = 1e-6;
/// Calibrated stability factor across refinement levels.
pub const STABILITY_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub u_1: f64,
    pub cu_half: f64,
    pub cstar_v_0: f64,
    pub v_half: f64,
    pub f_0: f64,
    pub g_half: f64,
}

impl Norms {
    /// `None` when the data vanish.
    pub fn kappa(&self) -> Option<f64> {
        let data = self.f_0 + self.g_half;
        (data > 0.0).then(|| (self.u_1 + self.cu_half + self.cstar_v_0 + self.v_half) / data)
    }

    fn all_finite(&self) -> bool {
        [self.u_1, self.cu_half, self.cstar_v_0, self.v_half, self.f_0, self.g_half]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub n_t: usize,
    pub n_x: usize,
    pub norms: Norms,
    pub kappa: Option<f64>,
    /// `|Cu|_{rho,1}`, not part of the estimate.
    pub cu_1: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub norms: Norms,
    pub kappa: Option<f64>,
    pub cu_1: f64,
    pub refinement: Vec<LevelRecord>,
    /// `max kappa / min kappa` over the levels.
    pub kappa_ratio: Option<f64>,
    /// `|Cu|_{rho,1}` at the finest level over the coarsest.
    pub cu_1_growth: Option<f64>,
    pub flags: BTreeMap<String, bool>,
}

/// A scenario at a ladder of resolutions.
pub trait ProblemFamily: Sync {
    fn problem(&self, level: usize) -> Result<EvoProblem>;
    /// `(n_t, n_x)` at `level`.
    fn resolution(&self, level: usize) -> (usize, usize);
}

pub fn regularity_norms(result: &SolveResult, problem: &EvoProblem) -> Result<DiagnosticsReport> {
    if !(result.residual <= RESIDUAL_LIMIT) {
        return Err(Error::Precondition(format!(
            "solution residual {:.3e} exceeds {RESIDUAL_LIMIT:.0e}",
            result.residual
        )));
    }
    let engine = SpectralEngine::new(*problem.grid(), DEFAULT_PAD)?;
    let cx = problem.complex();
    let w = problem.cell_volume().sqrt();
    let cu = apply_c(cx, &result.u)?;
    let sv = apply_cstar(cx, &result.v)?;
    let norm = |s: &crate::Signal, alpha: f64| sobolev_norm_with(&engine, s, alpha).map(|x| x * w);
    let norms = Norms {
        u_1: norm(&result.u, 1.0)?,
        cu_half: norm(&cu, 0.5)?,
        cstar_v_0: norm(&sv, 0.0)?,
        v_half: norm(&result.v, 0.5)?,
        f_0: norm(problem.f(), 0.0)?,
        g_half: norm(problem.g(), 0.5)?,
    };
    let u_half = norm(&result.u, 0.5)?;
    let u_0 = norm(&result.u, 0.0)?;
    let (_, high) = engine.apply_with_high_fraction(&result.u, |xi| derivative_symbol(xi, problem.rho()))?;

    let mut flags = BTreeMap::new();
    flags.insert("norms_finite".to_string(), norms.all_finite());
    flags.insert("derivative_resolved".to_string(), high < HIGH_FREQUENCY_LIMIT);
    flags.insert("interpolation".to_string(), u_half * u_half <= norms.u_1 * u_0 * (1.0 + 1e-9) + f64::MIN_POSITIVE);
    Ok(DiagnosticsReport {
        kappa: norms.kappa(),
        cu_1: norm(&cu, 1.0)?,
        norms,
        refinement: Vec::new(),
        kappa_ratio: None,
        cu_1_growth: None,
        flags,
    })
}

fn solve(problem: &EvoProblem, scheme: Scheme) -> Result<SolveResult> {
    match scheme {
        Scheme::Frequency => solve_frequency(problem),
        s => solve_time_stepping(problem, s),
    }
}

fn level_record(family: &dyn ProblemFamily, level: usize, scheme: Scheme) -> Result<(LevelRecord, BTreeMap<String, bool>)> {
    let tag = |e: Error| Error::Level {
        level,
        source: Box::new(e),
    };
    let problem = family.problem(level).map_err(tag)?;
    let result = solve(&problem, scheme).map_err(tag)?;
    let report = regularity_norms(&result, &problem).map_err(tag)?;
    let (n_t, n_x) = family.resolution(level);
    Ok((
        LevelRecord {
            level,
            n_t,
            n_x,
            kappa: report.kappa,
            norms: report.norms,
            cu_1: report.cu_1,
            residual: result.residual,
        },
        report.flags,
    ))
}

/// Solves every level concurrently; results are ordered by level.
fn run_levels(family: &dyn ProblemFamily, levels: usize, scheme: Scheme) -> Result<Vec<(LevelRecord, BTreeMap<String, bool>)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..levels)
            .map(|level| scope.spawn(move || level_record(family, level, scheme)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Precondition("level worker panicked".into()))))
            .collect()
    })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Solves a family at `levels` dyadic resolutions and records the norms.
pub fn refinement_study(family: &dyn ProblemFamily, levels: usize, scheme: Scheme) -> Result<DiagnosticsReport> {
    if levels < 3 {
        return Err(Error::Parameter(format!("need at least 3 levels, got {levels}")));
    }
    let rows = run_levels(family, levels, scheme)?;
    let mut flags = BTreeMap::new();
    for (key, _) in rows[0].1.iter() {
        flags.insert(key.clone(), rows.iter().all(|(_, f)| f.get(key).copied().unwrap_or(false)));
    }
    let records: Vec<LevelRecord> = rows.into_iter().map(|(r, _)| r).collect();
    let kappas: Option<Vec<f64>> = records.iter().map(|r| r.kappa).collect();
    let kappa_ratio = kappas.as_deref().map(spread);
    flags.insert(
        "kappa_stable".to_string(),
        kappa_ratio.is_some_and(|r| r.is_finite() && r < STABILITY_FACTOR),
    );
    let first = &records[0];
    let last = &records[records.len() - 1];
    let cu_1_growth = (first.cu_1 > 0.0).then(|| last.cu_1 / first.cu_1);
    Ok(DiagnosticsReport {
        norms: last.norms.clone(),
        kappa: last.kappa,
        cu_1: last.cu_1,
        kappa_ratio,
        cu_1_growth,
        refinement: records,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhenomenonReport {
    pub levels: Vec<LevelRecord>,
    /// `|Cu|_{1/2}` at each level over level 0.
    pub cu_half_ratios: Vec<f64>,
    /// `|v|_{1/2}` at each level over level 0.
    pub v_half_ratios: Vec<f64>,
    /// `|Cu|_1` at the finest level over the coarsest; informational.
    pub cu_1_growth: f64,
    pub cu_half_stable: bool,
    pub v_half_stable: bool,
}

/// Tracks the half-order norms of `Cu` and `v` under refinement.
pub fn phenomenon_probe(family: &dyn ProblemFamily, levels: usize, scheme: Scheme) -> Result<PhenomenonReport> {
    if levels < 2 {
        return Err(Error::Parameter(format!("need at least 2 levels, got {levels}")));
    }
    let records: Vec<LevelRecord> = run_levels(family, levels, scheme)?.into_iter().map(|(r, _)| r).collect();
    let ratios = |get: fn(&Norms) -> f64| -> Vec<f64> {
        let base = get(&records[0].norms);
        records.iter().map(|r| get(&r.norms) / base).collect()
    };
    let cu_half_ratios = ratios(|n| n.cu_half);
    let v_half_ratios = ratios(|n| n.v_half);
    let stable = |r: &[f64]| r.iter().all(|x| x.is_finite() && *x <= STABILITY_FACTOR && *x >= 1.0 / STABILITY_FACTOR);
    Ok(PhenomenonReport {
        cu_1_growth: records[records.len() - 1].cu_1 / records[0].cu_1,
        cu_half_stable: stable(&cu_half_ratios),
        v_half_stable: stable(&v_half_ratios),
        cu_half_ratios,
        v_half_ratios,
        levels: records,
    })
}

/// Bound `max(S, S^{1/ell})`, `S = sum |a_i|`, on every `x >= 0` with
/// `x^ell <= a_0 + a_1 x + ... + a_k x^k`, valid for `ell > k`.
pub fn polynomial_root_bound(coeffs: &[f64], ell: u32) -> Result<f64> {
    let Some(&lead) = coeffs.last() else {
        return Err(Error::Parameter("polynomial needs at least one coefficient".into()));
    };
    if lead == 0.0 {
        return Err(Error::Parameter("leading coefficient must be nonzero".into()));
    }
    let k = coeffs.len() - 1;
    if (ell as usize) <= k {
        return Err(Error::Parameter(format!("exponent {ell} must exceed the degree {k}")));
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::Parameter("coefficients must be finite".into()));
    }
    let s: f64 = coeffs.iter().map(|a| a.abs()).sum();
    Ok(s.max(s.powf(1.0 / ell as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Largest root of `x^ell - P(x)` on `[0, inf)` by sign scan and bisection.
    fn largest_root(coeffs: &[f64], ell: u32) -> Option<f64> {
        let q = |x: f64| x.powi(ell as i32) - coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a);
        let s: f64 = coeffs.iter().map(|a| a.abs()).sum::<f64>() + 2.0;
        let steps = 20000;
        let mut best = None;
        for i in (0..steps).rev() {
            let (a, b) = (s * i as f64 / steps as f64, s * (i + 1) as f64 / steps as f64);
            if q(a) == 0.0 {
                return Some(a);
            }
            if q(a).signum() != q(b).signum() {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if q(mid).signum() == q(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = Some(hi);
                break;
            }
        }
        best
    }

    #[test]
    fn quadratic_example() {
        assert_eq!(polynomial_root_bound(&[3.0, 2.0], 2).unwrap(), 5.0);
        let r = largest_root(&[3.0, 2.0], 2).unwrap();
        assert!((r - 3.0).abs() < 1e-9);
        assert_eq!(polynomial_root_bound(&[1.0], 1).unwrap(), 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(polynomial_root_bound(&[1.0, 2.0], 1).is_err());
        assert!(polynomial_root_bound(&[1.0, 0.0], 3).is_err());
        assert!(polynomial_root_bound(&[], 3).is_err());
    }

    #[test]
    fn bound_dominates_random_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let k = rng.random_range(0..4usize);
            let ell = rng.random_range(k as u32 + 1..k as u32 + 4);
            let mut coeffs: Vec<f64> = (0..=k).map(|_| rng.random_range(-3.0..3.0)).collect();
            if coeffs[k] == 0.0 {
                coeffs[k] = 1.0;
            }
            let bound = polynomial_root_bound(&coeffs, ell).unwrap();
            if let Some(r) = largest_root(&coeffs, ell) {
                assert!(r <= bound + 1e-9, "{coeffs:?} {ell}: {r} > {bound}");
            }
        }
    }

    #[test]
    fn kappa_is_undefined_for_zero_data() {
        let n = Norms {
            u_1: 0.0,
            cu_half: 0.0,
            cstar_v_0: 0.0,
            v_half: 0.0,
            f_0: 0.0,
            g_half: 0.0,
        };
        assert_eq!(n.kappa(), None);
    }
}
