use num_complex::Complex64 as C64;

use super::ops::{Factor, NodeOps, DENSE_LIMIT};
use super::{residual, EvoProblem, Scheme, SolveResult};
use crate::fourier_laplace::SpectralEngine;
use crate::{Error, Result};

/// Solves `((i xi + rho) M + N + A) U = F` frequency by frequency. Requires
/// every law to be autonomous.
pub fn solve_frequency(problem: &EvoProblem) -> Result<SolveResult> {
    if !problem.is_autonomous() {
        return Err(Error::Applicability(
            "the frequency solver needs constant or convolution laws; use the time stepper".into(),
        ));
    }
    // the periodic transform wraps the weighted tail onto the start
    problem.f().check_resolved()?;
    problem.g().check_resolved()?;
    let engine = SpectralEngine::periodic(*problem.grid());
    let cx = problem.complex();
    let (m0, m1) = (problem.m0(), problem.m1());
    let rho = problem.rho();
    let f_cols = engine.spectrum(problem.f())?;
    let g_cols = engine.spectrum(problem.g())?;
    let size = engine.size();
    let mut u_cols = vec![vec![C64::new(0.0, 0.0); size]; m0];
    let mut v_cols = vec![vec![C64::new(0.0, 0.0); size]; m1];
    let mut n11_condition = 1.0f64;
    let one = C64::new(1.0, 0.0);

    for k in 0..size {
        let f: Vec<C64> = f_cols.iter().map(|c| c[k]).collect();
        let g: Vec<C64> = g_cols.iter().map(|c| c[k]).collect();
        if f.iter().chain(&g).all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        let ops = NodeOps::at_frequency(problem.laws(), engine.freq(k), rho)?;
        n11_condition = n11_condition.max(ops.n11_condition);
        let mut rhs = f;
        rhs.iter_mut().zip(ops.lift(cx, &g)).for_each(|(r, l)| *r += l);
        let factor = Factor::new(&ops, cx, one, 1.0, DENSE_LIMIT)?;
        let u = factor.solve(&ops, cx, one, 1.0, &rhs, None)?;
        let v = ops.reconstruct_v(cx, &u, &g);
        for (col, z) in u_cols.iter_mut().zip(&u) {
            col[k] = *z;
        }
        for (col, z) in v_cols.iter_mut().zip(&v) {
            col[k] = *z;
        }
    }

    let mut result = SolveResult {
        u: engine.synthesize(u_cols),
        v: engine.synthesize(v_cols),
        residual: f64::NAN,
        scheme: Scheme::Frequency,
        n11_condition,
    };
    result.residual = residual(problem, &result)?;
    Ok(result)
}
