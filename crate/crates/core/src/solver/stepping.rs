use num_complex::Complex64 as C64;

use super::ops::{Factor, NodeOps, DENSE_LIMIT, VARYING_DENSE_LIMIT};
use super::{residual, EvoProblem, Scheme, SolveResult};
use crate::weighted_space::Signal;
use crate::{Error, Result};

/// Steps the reduced equation
/// `d/dt M00 u + N00 u + (C* - N01) N11^{-1} (C + N10) u = f + (C* - N01) N11^{-1} g`
/// from zero history and reconstructs `v = N11^{-1} (g - C u - N10 u)`.
pub fn solve_time_stepping(problem: &EvoProblem, scheme: Scheme) -> Result<SolveResult> {
    if scheme == Scheme::Frequency {
        return Err(Error::Parameter("the frequency scheme is not a time stepper".into()));
    }
    let grid = *problem.grid();
    let cx = problem.complex();
    let laws = problem.laws();
    let (n, m0, m1) = (grid.n, problem.m0(), problem.m1());
    let theta = scheme.theta();
    let a = C64::new(1.0 / grid.dt, 0.0);
    let zero = C64::new(0.0, 0.0);

    let mut us: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut vs: Vec<C64> = Vec::with_capacity(n * m1);
    let mut w_prev = vec![zero; m0];
    let mut kf_prev = vec![zero; m0];
    let mut cached: Option<(NodeOps, Factor)> = None;
    let dense_limit = if problem.is_autonomous() { DENSE_LIMIT } else { VARYING_DENSE_LIMIT };
    let mut n11_condition = 1.0f64;

    for i in 0..n {
        let ops = NodeOps::at_node(laws, i, grid.time(i))?;
        n11_condition = n11_condition.max(ops.n11_condition);
        let mut m_hist = vec![zero; m0];
        laws.m00.add_history(i, &us, &mut m_hist);
        let mut n_hist = vec![zero; m0];
        laws.n00.add_history(i, &us, &mut n_hist);

        // reduced right-hand side at node i
        let mut forcing = problem.f().row(i).to_vec();
        let lifted = ops.lift(cx, problem.g().row(i));
        forcing.iter_mut().zip(&lifted).for_each(|(f, l)| *f += l);

        let rhs: Vec<C64> = (0..m0)
            .map(|k| a * (w_prev[k] - m_hist[k]) + theta * (forcing[k] - n_hist[k]) - (1.0 - theta) * kf_prev[k])
            .collect();

        let reuse = matches!(&cached, Some((prev, _)) if *prev == ops);
        if !reuse {
            let factor = Factor::new(&ops, cx, a, theta, dense_limit)?;
            cached = Some((ops.clone(), factor));
        }
        let (_, factor) = cached.as_ref().expect("factor cached above");
        let u_i = factor.solve(&ops, cx, a, theta, &rhs, us.last().map(|r| r.as_slice()))?;
        if u_i.iter().any(|z| !z.is_finite()) {
            return Err(Error::Solver {
                iterations: 0,
                residual: f64::NAN,
                trace: vec![],
            });
        }

        let mut w = ops.m.apply(&u_i, m0);
        w.iter_mut().zip(&m_hist).for_each(|(w, h)| *w += h);
        let k = ops.reduced(cx, &u_i);
        kf_prev = (0..m0).map(|j| k[j] + n_hist[j] - forcing[j]).collect();
        w_prev = w;
        vs.extend(ops.reconstruct_v(cx, &u_i, problem.g().row(i)));
        us.push(u_i);
    }

    let u = Signal::from_values(grid, m0, us.into_iter().flatten().collect())?;
    let v = Signal::from_values(grid, m1, vs)?;
    let mut result = SolveResult {
        u,
        v,
        residual: f64::NAN,
        scheme,
        n11_condition,
    };
    result.residual = residual(problem, &result)?;
    Ok(result)
}
