use num_complex::Complex64 as C64;

use super::ops::CxOp;
use super::{apply_c, apply_cstar, EvoProblem, Scheme, SolveResult};
use crate::coefficients::MaterialLaw;
use crate::fourier_laplace::SpectralEngine;
use crate::weighted_space::{weighted_norm, Signal};
use crate::{Error, Result};

/// Relative residual `||op(u, v) - (f, g)|| / ||(f, g)||` of the block
/// system, measured in the discretization that produced `result`.
pub fn residual(problem: &EvoProblem, result: &SolveResult) -> Result<f64> {
    let grid = problem.grid();
    if !grid.compatible(result.u.grid()) || !grid.compatible(result.v.grid()) {
        return Err(Error::Dimension("solution and problem use different grids".into()));
    }
    if result.u.m() != problem.m0() || result.v.m() != problem.m1() {
        return Err(Error::Dimension("solution does not match the spatial complex".into()));
    }
    match result.scheme {
        Scheme::Frequency => spectral_residual(problem, &result.u, &result.v),
        scheme => stepping_residual(problem, &result.u, &result.v, scheme.theta()),
    }
}

fn ratio(num_sq: f64, den_sq: f64) -> f64 {
    if den_sq == 0.0 {
        num_sq.sqrt()
    } else {
        (num_sq / den_sq).sqrt()
    }
}

/// `law u` added into `acc`, skipping zero laws.
fn add_law(acc: &mut Signal, law: &MaterialLaw, u: &Signal) -> Result<()> {
    if !law.is_zero() {
        *acc = acc.add(&law.apply(u)?)?;
    }
    Ok(())
}

fn stepping_residual(problem: &EvoProblem, u: &Signal, v: &Signal, theta: f64) -> Result<f64> {
    let laws = problem.laws();
    let cx = problem.complex();
    let grid = *problem.grid();
    let (n, m0) = (grid.n, problem.m0());

    let mut mu = Signal::zeros(grid, m0);
    add_law(&mut mu, &laws.m00, u)?;
    let mut y = apply_cstar(cx, v)?.scaled(C64::new(-1.0, 0.0));
    add_law(&mut y, &laws.n00, u)?;
    add_law(&mut y, &laws.n01, v)?;
    let mut bottom = apply_c(cx, u)?.sub(problem.g())?;
    add_law(&mut bottom, &laws.n10, u)?;
    add_law(&mut bottom, &laws.n11, v)?;

    let f = problem.f();
    let zero = vec![C64::new(0.0, 0.0); m0];
    let mut top = Vec::with_capacity(n * m0);
    let mut rhs = Vec::with_capacity(n * m0);
    for i in 0..n {
        let (mu_prev, y_prev, f_prev) = if i == 0 {
            (&zero[..], &zero[..], &zero[..])
        } else {
            (mu.row(i - 1), y.row(i - 1), f.row(i - 1))
        };
        for k in 0..m0 {
            let rhs_k = theta * f.row(i)[k] + (1.0 - theta) * f_prev[k];
            let lhs = (mu.row(i)[k] - mu_prev[k]) / grid.dt + theta * y.row(i)[k] + (1.0 - theta) * y_prev[k];
            top.push(lhs - rhs_k);
            rhs.push(rhs_k);
        }
    }
    let top = Signal::from_values(grid, m0, top)?;
    let rhs = Signal::from_values(grid, m0, rhs)?;
    let num = weighted_norm(&top).powi(2) + weighted_norm(&bottom).powi(2);
    let den = weighted_norm(&rhs).powi(2) + weighted_norm(problem.g()).powi(2);
    Ok(ratio(num, den))
}

fn spectral_residual(problem: &EvoProblem, u: &Signal, v: &Signal) -> Result<f64> {
    let laws = problem.laws();
    let cx = problem.complex();
    let (m0, m1) = (problem.m0(), problem.m1());
    let engine = SpectralEngine::periodic(*problem.grid());
    let [uc, vc, fc, gc] = [u, v, problem.f(), problem.g()].map(|s| engine.spectrum(s));
    let (uc, vc, fc, gc) = (uc?, vc?, fc?, gc?);
    let rho = problem.rho();
    let symbol = |law: &MaterialLaw, xi: f64| -> Result<CxOp> { Ok(CxOp::from_terms(law.symbol_terms(xi)?)) };
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..engine.size() {
        let xi = engine.freq(k);
        let s = C64::new(rho, xi);
        let uk: Vec<C64> = uc.iter().map(|c| c[k]).collect();
        let vk: Vec<C64> = vc.iter().map(|c| c[k]).collect();

        let mut top: Vec<C64> = cx.cstar().matvec(&vk).into_iter().map(|z| -z).collect();
        symbol(&laws.m00, xi)?.apply(&uk, m0).into_iter().zip(top.iter_mut()).for_each(|(a, t)| *t += s * a);
        symbol(&laws.n00, xi)?.apply_add(&uk, &mut top);
        symbol(&laws.n01, xi)?.apply_add(&vk, &mut top);
        let mut bottom = cx.c().matvec(&uk);
        symbol(&laws.n10, xi)?.apply_add(&uk, &mut bottom);
        symbol(&laws.n11, xi)?.apply_add(&vk, &mut bottom);

        for (c, t) in top.iter().enumerate() {
            num += (t - fc[c][k]).norm_sqr();
            den += fc[c][k].norm_sqr();
        }
        for (c, b) in bottom.iter().enumerate().take(m1) {
            num += (b - gc[c][k]).norm_sqr();
            den += gc[c][k].norm_sqr();
        }
    }
    Ok(ratio(num, den))
}
