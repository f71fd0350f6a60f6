//! Sufficient conditions for bounded half-derivative commutators, checked
//! on the sampled coefficients.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{LawKind, MaterialLaw};
use crate::quadrature::integrate_to_infinity;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BmoSweep {
    /// Smallest interval of the dyadic sweep, in nodes.
    pub min_nodes: usize,
}

impl Default for BmoSweep {
    fn default() -> Self {
        Self { min_nodes: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmoReport {
    pub constant: f64,
    /// `(interval length, largest normalized value at that length)`.
    pub per_scale: Vec<(f64, f64)>,
    pub worst_interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevConditionReport {
    pub value: f64,
    pub diverged: bool,
    /// Exponent `beta` of the near-diagonal strip sum `~ h^beta`.
    pub strip_exponent: f64,
    /// Strip sums at spacing `h`, `2h`, `4h`.
    pub strip_sums: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub d: f64,
    pub ok: bool,
}

/// Scalar samples and the largest spatial weight of a multiplication law;
/// `None` for constant laws, which never vary.
fn scalar_samples(law: &MaterialLaw) -> Result<Option<(&[f64], f64, f64)>> {
    match law.kind() {
        LawKind::Zero | LawKind::Constant(_) => Ok(None),
        LawKind::Multiplication(x) => {
            let w = x.op.point_norms().into_iter().fold(0.0, f64::max);
            Ok(Some((&x.coeff, x.grid.dt, w)))
        }
        _ => Err(Error::Material("condition checks apply to multiplication laws".into())),
    }
}

/// `int_0^1 int_0^1 |x - y + k|^{-delta} dx dy` for lags 0 and 1.
fn cell_moment(lag: usize, delta: f64) -> f64 {
    let (a, b) = (1.0 - delta, 2.0 - delta);
    match lag {
        0 => 2.0 / (a * b),
        _ => 1.0 / b + 2.0 * (2f64.powf(a) - 1.0) / a - (2f64.powf(b) - 1.0) / b,
    }
}

fn slopes(a: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (a[hi] - a[lo]) / ((hi - lo) as f64 * h)
        })
        .collect()
}

/// `sum_{i, j in [i0, i1)} cell(i, j)` for the kernel `|t - s|^{-(2 + delta)}`
/// weighted by `|a(t) - a(s)|^2`. Returns `(total, strip)` where `strip`
/// holds the cells with `|i - j| <= 1`.
fn double_sum(a: &[f64], h: f64, delta: f64, i0: usize, i1: usize) -> (f64, f64) {
    let q = slopes(a, h);
    let diag = cell_moment(0, delta) * h.powf(2.0 - delta);
    let near = cell_moment(1, delta) * h.powf(2.0 - delta);
    let mut strip = 0.0;
    for i in i0..i1 {
        strip += q[i] * q[i] * diag;
        if i + 1 < i1 {
            let s = (a[i + 1] - a[i]) / h;
            strip += 2.0 * s * s * near;
        }
    }
    let mut far = 0.0;
    for k in 2..(i1 - i0) {
        let w = h * h / (k as f64 * h).powf(2.0 + delta);
        let mut acc = 0.0;
        for i in i0..(i1 - k) {
            let d = a[i + k] - a[i];
            acc += d * d;
        }
        far += 2.0 * w * acc;
    }
    (far + strip, strip)
}

/// Normalized double integral `(1/l) int_I int_I |N(t) - N(s)|^2 / |t - s|^2`
/// over the node range `[i0, i1)`.
pub fn bmo_interval_value(law: &MaterialLaw, i0: usize, i1: usize) -> Result<f64> {
    let Some((a, h, w)) = scalar_samples(law)? else {
        return Ok(0.0);
    };
    if i1 > a.len() || i1 < i0 + 2 {
        return Err(Error::Parameter(format!("bad node range [{i0}, {i1})")));
    }
    let (total, _) = double_sum(a, h, 0.0, i0, i1);
    Ok(w * w * total / ((i1 - i0) as f64 * h))
}

/// Largest normalized double integral over a dyadic sweep of half-overlapping
/// intervals.
pub fn check_bmo_condition(law: &MaterialLaw, sweep: BmoSweep) -> Result<BmoReport> {
    let Some((a, h, _)) = scalar_samples(law)? else {
        return Ok(BmoReport {
            constant: 0.0,
            per_scale: vec![],
            worst_interval: (0.0, 0.0),
        });
    };
    let LawKind::Multiplication(x) = law.kind() else {
        unreachable!()
    };
    let n = a.len();
    let min_nodes = sweep.min_nodes.max(2);
    if n < min_nodes {
        return Err(Error::Parameter(format!("window holds {n} nodes, fewer than {min_nodes}")));
    }
    let mut per_scale = Vec::new();
    let mut constant = 0.0;
    let mut worst = (0.0, 0.0);
    let mut len = n;
    while len >= min_nodes {
        let step = (len / 2).max(1);
        let mut best = 0.0;
        let mut i0 = 0;
        while i0 + len <= n {
            let v = bmo_interval_value(law, i0, i0 + len)?;
            if v > best {
                best = v;
            }
            if v > constant {
                constant = v;
                worst = (x.grid.time(i0), x.grid.time(i0) + len as f64 * h);
            }
            i0 += step;
        }
        per_scale.push((len as f64 * h, best));
        len /= 2;
    }
    Ok(BmoReport {
        constant,
        per_scale,
        worst_interval: worst,
    })
}

/// `int int |N(t) - N(s)|^2 / |t - s|^{2 + delta}` over the window, with a
/// divergence check on the near-diagonal strip under coarsening.
pub fn check_frac_sobolev_condition(law: &MaterialLaw, delta: f64) -> Result<SobolevConditionReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let Some((a, h, w)) = scalar_samples(law)? else {
        return Ok(SobolevConditionReport {
            value: 0.0,
            diverged: false,
            strip_exponent: f64::INFINITY,
            strip_sums: [0.0; 3],
        });
    };
    let (total, strip) = double_sum(a, h, delta, 0, a.len());
    let mut strips = [strip, 0.0, 0.0];
    for (level, slot) in strips.iter_mut().enumerate().skip(1) {
        let stride = 1 << level;
        let coarse: Vec<f64> = a.iter().step_by(stride).copied().collect();
        if coarse.len() < 3 {
            return Err(Error::Parameter("window too short to coarsen".into()));
        }
        *slot = double_sum(&coarse, h * stride as f64, delta, 0, coarse.len()).1;
    }
    let scale = w * w;
    let (diverged, exponent) = if strips[0] <= f64::MIN_POSITIVE {
        (false, f64::INFINITY)
    } else {
        let beta = (strips[2] / strips[0]).log2() / 2.0;
        (!(beta > 0.0), beta)
    };
    Ok(SobolevConditionReport {
        value: scale * total,
        diverged,
        strip_exponent: exponent,
        strip_sums: strips.map(|s| s * scale),
    })
}

/// `d = max_xi xi Im T^(xi - i rho0)` for a selfadjoint convolution kernel.
pub fn check_admissible(kernel: &MaterialLaw, rho0: f64) -> Result<Admissibility> {
    let conv = match kernel.kind() {
        LawKind::Zero => return Ok(Admissibility { d: 0.0, ok: true }),
        LawKind::Convolution(c) => c,
        _ => return Err(Error::Material("admissibility applies to convolution kernels".into())),
    };
    if !(rho0 >= conv.decay) || !rho0.is_finite() {
        return Err(Error::Parameter(format!(
            "rho0 = {rho0} must be at least the kernel decay rate {}",
            conv.decay
        )));
    }
    if !conv.op.is_symmetric(1e-12) {
        return Err(Error::Admissibility("kernel values are not selfadjoint".into()));
    }
    let g = &conv.grid;
    let size = 2 * g.n;
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); size];
    for (k, w) in conv.weights().into_iter().enumerate() {
        buf[k] = C64::new(w * (-rho0 * k as f64 * g.dt).exp(), 0.0);
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let eig: Vec<f64> = match &conv.op {
        super::PointOp::Scalar(c) => vec![*c],
        super::PointOp::Diagonal(d) => d.clone(),
        super::PointOp::Dense(m) => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    };
    let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let dxi = 2.0 * PI / (size as f64 * g.dt);
    let mut d = f64::NEG_INFINITY;
    for (k, z) in buf.iter().enumerate() {
        let kk = if k < size / 2 { k as f64 } else { k as f64 - size as f64 };
        let xi = kk * dxi;
        let s = xi * z.im / (2.0 * PI).sqrt();
        d = d.max(s * lo).max(s * hi);
    }
    Ok(Admissibility { d, ok: d.is_finite() })
}

/// `int_0^inf k(t) e^{-rho0 t} dt` with
/// `k(t) = t^{-3/2} (1 - e^{(rho0 - rho) t}) / (2 sqrt(pi))`.
pub fn shift_commutator_kernel_integral(rho: f64, rho0: f64) -> Result<f64> {
    if !(rho0 > 0.0 && rho0 <= rho && rho.is_finite()) {
        return Err(Error::Parameter(format!("need 0 < rho0 <= rho, got rho = {rho}, rho0 = {rho0}")));
    }
    if rho == rho0 {
        return Ok(0.0);
    }
    let mu = rho0 - rho;
    // t = u^2 removes the t^{-1/2} singularity at the origin
    let integrand = |u: f64| {
        let s = u * u;
        let ratio = if s < 1e-300 { -mu } else { -(mu * s).exp_m1() / s };
        ratio * (-rho0 * s).exp()
    };
    Ok(integrate_to_infinity(integrand, 0.0, 1e-13)? / PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{PointOp, Profile};
    use crate::quadrature::integrate;
    use crate::weighted_space::TemporalGrid;
    use nalgebra::DMatrix;

    fn grid() -> TemporalGrid {
        TemporalGrid::new(-8.0, 1.0 / 32.0, 1024, 1.0).unwrap()
    }

    fn arctan() -> Profile {
        Profile::Arctan {
            offset: 0.0,
            amplitude: 1.0,
            center: 0.0,
            scale: 1.0,
        }
    }

    fn tanh() -> Profile {
        Profile::Tanh {
            offset: 0.0,
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    fn jump() -> Profile {
        Profile::Jump {
            low: 0.0,
            high: 1.0,
            at: 0.0,
        }
    }

    /// `(1/l) int_I int_I (a(t) - a(s))^2 / |t - s|^{2 + delta}` by nested
    /// adaptive quadrature; `t - s = u^2` tames the diagonal.
    fn oracle(p: &Profile, s0: f64, s1: f64, delta: f64) -> f64 {
        let inner = |t: f64| {
            let top = (t - s0).sqrt();
            integrate(
                |u: f64| {
                    if u == 0.0 {
                        return 0.0;
                    }
                    let r = u * u;
                    let diff = p.value(t) - p.value(t - r);
                    2.0 * u * diff * diff / r.powf(2.0 + delta)
                },
                0.0,
                top,
                1e-11,
            )
            .unwrap()
        };
        2.0 * integrate(inner, s0, s1, 1e-9).unwrap()
    }

    #[test]
    fn constant_laws_give_zero() {
        let law = MaterialLaw::scalar(2.0);
        assert_eq!(check_bmo_condition(&law, BmoSweep::default()).unwrap().constant, 0.0);
        assert_eq!(check_frac_sobolev_condition(&law, 0.5).unwrap().value, 0.0);
        let flat = MaterialLaw::multiplication(grid(), Profile::constant(3.0), PointOp::identity()).unwrap();
        assert_eq!(check_bmo_condition(&flat, BmoSweep::default()).unwrap().constant, 0.0);
    }

    #[test]
    fn bmo_intervals_match_dense_quadrature() {
        let g = grid();
        let law = MaterialLaw::multiplication(g, arctan(), PointOp::identity()).unwrap();
        for (i0, i1) in [(224, 288), (256, 512), (0, 1024)] {
            let got = bmo_interval_value(&law, i0, i1).unwrap();
            let (s0, s1) = (g.time(i0) - 0.5 * g.dt, g.time(i1) - 0.5 * g.dt);
            let want = oracle(&arctan(), s0, s1, 0.0) / (s1 - s0);
            assert!((got - want).abs() < 0.05 * want, "[{i0}, {i1}): {got} vs {want}");
        }
    }

    #[test]
    fn bmo_separates_jump_from_arctan() {
        let smooth_at = |g| {
            let law = MaterialLaw::multiplication(g, arctan(), PointOp::identity()).unwrap();
            check_bmo_condition(&law, BmoSweep::default()).unwrap().constant
        };
        let rough_at = |g| {
            let law = MaterialLaw::multiplication(g, jump(), PointOp::identity()).unwrap();
            check_bmo_condition(&law, BmoSweep::default()).unwrap().constant
        };
        let (coarse, fine) = (grid().refined(), grid().refined().refined());
        // the smooth constant settles while the jump keeps growing like 1/dt
        assert!((smooth_at(fine) - smooth_at(coarse)).abs() < 1e-3 * smooth_at(coarse));
        assert!(rough_at(fine) > 1.9 * rough_at(coarse));
        assert!(rough_at(fine) >= 10.0 * smooth_at(fine));
    }

    #[test]
    fn frac_sobolev_matches_dense_quadrature_for_tanh() {
        let g = grid();
        let law = MaterialLaw::multiplication(g, tanh(), PointOp::identity()).unwrap();
        let r = check_frac_sobolev_condition(&law, 0.5).unwrap();
        let (s0, s1) = (g.t0 - 0.5 * g.dt, g.t_end() - 0.5 * g.dt);
        let want = oracle(&tanh(), s0, s1, 0.5);
        assert!(!r.diverged);
        assert!((r.value - want).abs() < 0.05 * want, "{} vs {want}", r.value);
    }

    #[test]
    fn frac_sobolev_flags_jump() {
        let g = grid();
        let law = MaterialLaw::multiplication(g, jump(), PointOp::identity()).unwrap();
        let r = check_frac_sobolev_condition(&law, 0.5).unwrap();
        assert!(r.diverged, "{r:?}");
        assert!(check_frac_sobolev_condition(&law, 1.0).is_err());
    }

    #[test]
    fn admissibility_of_exponential_kernel() {
        let g = TemporalGrid::new(0.0, 1.0 / 64.0, 4096, 1.0).unwrap();
        let law = MaterialLaw::convolution(g, Profile::ExpKernel { kappa: 1.0, rate: 1.0 }, PointOp::identity(), 0.0).unwrap();
        let a = check_admissible(&law, 0.0).unwrap();
        assert!(a.ok && a.d.abs() < 1e-8, "{a:?}");
        assert_eq!(check_admissible(&MaterialLaw::zero(), 0.0).unwrap(), Admissibility { d: 0.0, ok: true });
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let bad = MaterialLaw::convolution(g, Profile::ExpKernel { kappa: 1.0, rate: 1.0 }, PointOp::Dense(m), 0.0).unwrap();
        assert!(matches!(check_admissible(&bad, 0.0), Err(Error::Admissibility(_))));
    }

    #[test]
    fn kernel_integral_closed_form() {
        assert_eq!(shift_commutator_kernel_integral(2.0, 2.0).unwrap(), 0.0);
        for (rho, rho0) in [(1.0, 0.25), (4.0, 1.0), (3.0, 0.1)] {
            let v = shift_commutator_kernel_integral(rho, rho0).unwrap();
            assert!((v - (f64::sqrt(rho) - f64::sqrt(rho0))).abs() < 1e-6, "{v}");
        }
        assert!(shift_commutator_kernel_integral(1.0, 2.0).is_err());
        assert!(shift_commutator_kernel_integral(1.0, 0.0).is_err());
    }

    #[test]
    fn cell_moments_reduce_to_unit_cells() {
        assert!((cell_moment(0, 0.0) - 1.0).abs() < 1e-15);
        assert!((cell_moment(1, 0.0) - 1.0).abs() < 1e-15);
        let m = integrate(|r| (1.0 - (r - 1.0f64).abs()) * r.powf(-0.5), 0.0, 2.0, 1e-12).unwrap();
        assert!((cell_moment(1, 0.5) - m).abs() < 1e-8);
    }
}
