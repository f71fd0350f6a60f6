//! Coefficient operators acting on signals: constants, time-dependent
//! multiplications and causal convolutions, plus their commutators with the
//! half derivative and the sufficient conditions that bound them.

mod commutator;
mod conditions;
mod profile;

pub use commutator::{commutator_half, commutator_norm, estimate_commutator_bound, CommutatorEstimate, NormEstimate};
pub use conditions::{
    bmo_interval_value, check_admissible, check_bmo_condition, check_frac_sobolev_condition, shift_commutator_kernel_integral,
    Admissibility, BmoReport, BmoSweep, SobolevConditionReport,
};
pub use profile::Profile;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::toeplitz;
use crate::weighted_space::{Signal, TemporalGrid};
use crate::{Error, Result};

/// Operator applied at a single time node.
#[derive(Clone, Debug, PartialEq)]
pub enum PointOp {
    /// Multiple of the identity on any dimension.
    Scalar(f64),
    Diagonal(Vec<f64>),
    /// Possibly rectangular, `rows x cols`.
    Dense(DMatrix<f64>),
}

impl PointOp {
    pub fn identity() -> Self {
        PointOp::Scalar(1.0)
    }

    /// `(rows, cols)` when the operator has a fixed size.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match self {
            PointOp::Scalar(_) => None,
            PointOp::Diagonal(d) => Some((d.len(), d.len())),
            PointOp::Dense(a) => Some((a.nrows(), a.ncols())),
        }
    }

    /// Output dimension for an input of dimension `m`.
    pub fn output_dim(&self, m: usize) -> Result<usize> {
        match self.shape() {
            None => Ok(m),
            Some((rows, cols)) if cols == m => Ok(rows),
            Some((_, cols)) => Err(Error::Dimension(format!("operator expects {cols} components, got {m}"))),
        }
    }

    /// `out += scale * op * x`.
    pub fn apply_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        match self {
            PointOp::Scalar(c) => {
                let s = scale * c;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += s * xi;
                }
            }
            PointOp::Diagonal(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o += scale * di * xi;
                }
            }
            PointOp::Dense(a) => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, xc) in x.iter().enumerate() {
                        acc += a[(r, c)] * xc;
                    }
                    *o += scale * acc;
                }
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(0.0, 0.0); self.output_dim(x.len())?];
        self.apply_add(C64::new(1.0, 0.0), x, &mut out);
        Ok(out)
    }

    pub fn transpose(&self) -> PointOp {
        match self {
            PointOp::Dense(a) => PointOp::Dense(a.transpose()),
            other => other.clone(),
        }
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        match self {
            PointOp::Scalar(c) => c.abs(),
            PointOp::Diagonal(d) => d.iter().fold(0.0, |acc, v| acc.max(v.abs())),
            PointOp::Dense(a) => a.clone().singular_values().max(),
        }
    }

    pub fn try_inverse(&self) -> Result<PointOp> {
        let singular = || Error::Material("pointwise operator is singular".into());
        match self {
            PointOp::Scalar(c) if *c != 0.0 => Ok(PointOp::Scalar(1.0 / c)),
            PointOp::Diagonal(d) if d.iter().all(|v| *v != 0.0) => Ok(PointOp::Diagonal(d.iter().map(|v| 1.0 / v).collect())),
            PointOp::Dense(a) if a.is_square() => a.clone().try_inverse().map(PointOp::Dense).ok_or_else(singular),
            _ => Err(singular()),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        match self {
            PointOp::Dense(a) => a.is_square() && (a - a.transpose()).amax() <= tol * (1.0 + a.amax()),
            _ => true,
        }
    }

    /// Norm of the operator seen from each spatial point: one entry per
    /// diagonal coefficient, a single entry otherwise.
    pub fn point_norms(&self) -> Vec<f64> {
        match self {
            PointOp::Diagonal(d) => d.iter().map(|v| v.abs()).collect(),
            other => vec![other.norm()],
        }
    }

    /// Dense real matrix for dimension `m`.
    pub fn to_dense(&self, m: usize) -> DMatrix<f64> {
        match self {
            PointOp::Scalar(c) => DMatrix::from_diagonal_element(m, m, *c),
            PointOp::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            PointOp::Dense(a) => a.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multiplication {
    pub grid: TemporalGrid,
    /// Scalar coefficient at each node.
    pub coeff: Vec<f64>,
    pub op: PointOp,
    pub profile: Option<Profile>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Convolution {
    pub grid: TemporalGrid,
    /// Kernel samples `k(j dt)`, `j = 0..n`.
    pub kernel: Vec<f64>,
    pub op: PointOp,
    /// Exponential rate against which the kernel is integrable.
    pub decay: f64,
    pub profile: Option<Profile>,
}

impl Convolution {
    /// Trapezoid weights: half weight on the current node.
    pub fn weights(&self) -> Vec<f64> {
        let dt = self.grid.dt;
        self.kernel
            .iter()
            .enumerate()
            .map(|(k, v)| if k == 0 { 0.5 * dt * v } else { dt * v })
            .collect()
    }

    /// Multiplier of the discrete convolution at frequency `xi`.
    pub fn symbol(&self, xi: f64) -> C64 {
        let g = &self.grid;
        let z = C64::new(-g.rho * g.dt, -xi * g.dt).exp();
        let mut acc = C64::new(0.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        for w in self.weights() {
            acc += p * w;
            p *= z;
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawKind {
    Zero,
    Constant(PointOp),
    Multiplication(Multiplication),
    Convolution(Convolution),
    Sum(Vec<MaterialLaw>),
}

/// A coefficient operator `M` or `N` acting on signals.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialLaw {
    kind: LawKind,
}

fn finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Material(format!("{what} has non-finite samples")))
    }
}

impl MaterialLaw {
    pub fn zero() -> Self {
        Self { kind: LawKind::Zero }
    }

    pub fn identity() -> Self {
        Self::constant(PointOp::identity())
    }

    pub fn scalar(c: f64) -> Self {
        Self::constant(PointOp::Scalar(c))
    }

    pub fn constant(op: PointOp) -> Self {
        Self {
            kind: LawKind::Constant(op),
        }
    }

    /// `t -> profile(t) * op`, sampled on `grid`.
    pub fn multiplication(grid: TemporalGrid, profile: Profile, op: PointOp) -> Result<Self> {
        let coeff: Vec<f64> = (0..grid.n).map(|j| profile.value(grid.time(j))).collect();
        let mut law = Self::multiplication_samples(grid, coeff, op)?;
        if let LawKind::Multiplication(m) = &mut law.kind {
            m.profile = Some(profile);
        }
        Ok(law)
    }

    pub fn multiplication_samples(grid: TemporalGrid, coeff: Vec<f64>, op: PointOp) -> Result<Self> {
        if coeff.len() != grid.n {
            return Err(Error::Dimension(format!("{} coefficients for {} nodes", coeff.len(), grid.n)));
        }
        finite(&coeff, "multiplication coefficient")?;
        Ok(Self {
            kind: LawKind::Multiplication(Multiplication {
                grid,
                coeff,
                op,
                profile: None,
            }),
        })
    }

    /// Causal convolution with `t -> kernel(t) * op`, `t >= 0`.
    pub fn convolution(grid: TemporalGrid, kernel: Profile, op: PointOp, decay: f64) -> Result<Self> {
        let samples: Vec<f64> = (0..grid.n).map(|j| kernel.value(j as f64 * grid.dt)).collect();
        finite(&samples, "convolution kernel")?;
        if !decay.is_finite() {
            return Err(Error::Material("kernel decay rate must be finite".into()));
        }
        Ok(Self {
            kind: LawKind::Convolution(Convolution {
                grid,
                kernel: samples,
                op,
                decay,
                profile: Some(kernel),
            }),
        })
    }

    pub fn sum(parts: Vec<MaterialLaw>) -> Self {
        let parts: Vec<MaterialLaw> = parts.into_iter().filter(|p| !p.is_zero()).collect();
        match parts.len() {
            0 => Self::zero(),
            1 => parts.into_iter().next().unwrap_or_else(Self::zero),
            _ => Self {
                kind: LawKind::Sum(parts),
            },
        }
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, LawKind::Zero)
    }

    /// No time dependence: commutes with time shifts and with `d/dt`.
    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            LawKind::Zero | LawKind::Constant(_) | LawKind::Convolution(_) => true,
            LawKind::Multiplication(m) => m.coeff.windows(2).all(|w| w[0] == w[1]),
            LawKind::Sum(parts) => parts.iter().all(|p| p.is_autonomous()),
        }
    }

    /// Acts pointwise in time, without memory.
    pub fn is_instantaneous(&self) -> bool {
        match &self.kind {
            LawKind::Zero | LawKind::Constant(_) | LawKind::Multiplication(_) => true,
            LawKind::Convolution(_) => false,
            LawKind::Sum(parts) => parts.iter().all(|p| p.is_instantaneous()),
        }
    }

    fn grid(&self) -> Option<&TemporalGrid> {
        match &self.kind {
            LawKind::Multiplication(m) => Some(&m.grid),
            LawKind::Convolution(c) => Some(&c.grid),
            LawKind::Sum(parts) => parts.iter().find_map(|p| p.grid()),
            _ => None,
        }
    }

    fn check_grid(&self, g: &TemporalGrid) -> Result<()> {
        match self.grid() {
            Some(own) if !own.compatible(g) => Err(Error::Dimension("law and signal use different grids".into())),
            _ => Ok(()),
        }
    }

    /// Output dimension for `m` input components.
    pub fn output_dim(&self, m: usize) -> Result<usize> {
        match &self.kind {
            LawKind::Zero => Ok(m),
            LawKind::Constant(op) => op.output_dim(m),
            LawKind::Multiplication(x) => x.op.output_dim(m),
            LawKind::Convolution(x) => x.op.output_dim(m),
            LawKind::Sum(parts) => {
                let dims: Result<Vec<usize>> = parts.iter().map(|p| p.output_dim(m)).collect();
                let dims = dims?;
                if dims.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::Dimension("summands disagree on output size".into()));
                }
                Ok(dims.first().copied().unwrap_or(m))
            }
        }
    }

    pub fn apply(&self, u: &Signal) -> Result<Signal> {
        self.check_grid(u.grid())?;
        let grid = *u.grid();
        let m_out = self.output_dim(u.m())?;
        let mut out = Signal::zeros(grid, m_out);
        self.apply_add(u, &mut out, false);
        Ok(out)
    }

    /// Adjoint with respect to the weighted inner product.
    pub fn apply_adjoint(&self, u: &Signal) -> Result<Signal> {
        self.check_grid(u.grid())?;
        let m_out = self.transposed_dim(u.m())?;
        let mut out = Signal::zeros(*u.grid(), m_out);
        self.apply_add(u, &mut out, true);
        Ok(out)
    }

    fn transposed_dim(&self, m: usize) -> Result<usize> {
        let op_dim = |op: &PointOp| match op.shape() {
            None => Ok(m),
            Some((rows, cols)) if rows == m => Ok(cols),
            Some((rows, _)) => Err(Error::Dimension(format!("adjoint expects {rows} components, got {m}"))),
        };
        match &self.kind {
            LawKind::Zero => Ok(m),
            LawKind::Constant(op) => op_dim(op),
            LawKind::Multiplication(x) => op_dim(&x.op),
            LawKind::Convolution(x) => op_dim(&x.op),
            LawKind::Sum(parts) => parts.first().map_or(Ok(m), |p| p.transposed_dim(m)),
        }
    }

    fn apply_add(&self, u: &Signal, out: &mut Signal, adjoint: bool) {
        let one = C64::new(1.0, 0.0);
        let n = u.n();
        match &self.kind {
            LawKind::Zero => {}
            LawKind::Constant(op) => {
                let op = if adjoint { op.transpose() } else { op.clone() };
                for j in 0..n {
                    op.apply_add(one, u.row(j), out.row_mut(j));
                }
            }
            LawKind::Multiplication(x) => {
                let op = if adjoint { x.op.transpose() } else { x.op.clone() };
                for j in 0..n {
                    op.apply_add(C64::new(x.coeff[j], 0.0), u.row(j), out.row_mut(j));
                }
            }
            LawKind::Convolution(x) => {
                let mut w = x.weights();
                let mut conv = Signal::zeros(*u.grid(), u.m());
                if adjoint {
                    let g = &x.grid;
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk *= (-2.0 * g.rho * g.dt * k as f64).exp();
                    }
                }
                for c in 0..u.m() {
                    let col = u.column(c);
                    let y = if adjoint {
                        toeplitz::anticausal(&w, &col)
                    } else {
                        toeplitz::causal(&w, &col)
                    };
                    for (j, v) in y.into_iter().enumerate() {
                        conv.row_mut(j)[c] = v;
                    }
                }
                let op = if adjoint { x.op.transpose() } else { x.op.clone() };
                for j in 0..n {
                    op.apply_add(one, conv.row(j), out.row_mut(j));
                }
            }
            LawKind::Sum(parts) => {
                for p in parts {
                    p.apply_add(u, out, adjoint);
                }
            }
        }
    }

    /// `||N||_inf`-type bound of the operator norm on `L2_rho`.
    pub fn sup_norm(&self) -> f64 {
        match &self.kind {
            LawKind::Zero => 0.0,
            LawKind::Constant(op) => op.norm(),
            LawKind::Multiplication(x) => x.coeff.iter().fold(0.0f64, |a, v| a.max(v.abs())) * x.op.norm(),
            LawKind::Convolution(x) => {
                let g = &x.grid;
                let l1: f64 = x
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w.abs() * (-g.rho * g.dt * k as f64).exp())
                    .sum();
                l1 * x.op.norm()
            }
            LawKind::Sum(parts) => parts.iter().map(|p| p.sup_norm()).sum(),
        }
    }

    /// `M' = [d/dt, M]` when known in closed form.
    pub fn derivative_law(&self) -> Option<MaterialLaw> {
        match &self.kind {
            LawKind::Zero | LawKind::Constant(_) | LawKind::Convolution(_) => Some(Self::zero()),
            LawKind::Multiplication(x) => {
                let p = x.profile.as_ref()?;
                let coeff: Option<Vec<f64>> = (0..x.grid.n).map(|j| p.derivative(x.grid.time(j))).collect();
                Self::multiplication_samples(x.grid, coeff?, x.op.clone()).ok()
            }
            LawKind::Sum(parts) => {
                let ds: Option<Vec<MaterialLaw>> = parts.iter().map(|p| p.derivative_law()).collect();
                Some(Self::sum(ds?))
            }
        }
    }

    /// Pointwise inverse `t -> N(t)^{-1}` of an instantaneous law.
    pub fn pointwise_inverse(&self) -> Result<MaterialLaw> {
        match &self.kind {
            LawKind::Constant(op) => Ok(Self::constant(op.try_inverse()?)),
            LawKind::Multiplication(x) => {
                if let Some(j) = x.coeff.iter().position(|a| *a == 0.0) {
                    return Err(Error::Material(format!("coefficient vanishes at t = {}", x.grid.time(j))));
                }
                let coeff = x.coeff.iter().map(|a| 1.0 / a).collect();
                Self::multiplication_samples(x.grid, coeff, x.op.try_inverse()?)
            }
            _ => Err(Error::Material("only constant and multiplication laws have pointwise inverses".into())),
        }
    }

    /// Forward average `N_eps(t) = (1 / eps) int_t^{t + eps} N(s) ds`.
    pub fn regularize(&self, eps: f64) -> Result<MaterialLaw> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
        }
        match &self.kind {
            LawKind::Constant(_) => Ok(self.clone()),
            LawKind::Multiplication(x) => match &x.profile {
                Some(p) => Self::multiplication(x.grid, p.regularized(eps), x.op.clone()),
                None => {
                    let coeff = (0..x.grid.n)
                        .map(|j| sample_average(&x.grid, &x.coeff, x.grid.time(j), eps))
                        .collect();
                    Self::multiplication_samples(x.grid, coeff, x.op.clone())
                }
            },
            _ => Err(Error::Material("regularization applies to multiplication laws".into())),
        }
    }

    /// Instantaneous terms at node `i`: the multiplication and constant parts
    /// plus the current-node weight of every convolution.
    pub(crate) fn instantaneous_terms(&self, i: usize) -> Vec<(f64, &PointOp)> {
        let mut terms = Vec::new();
        self.collect_instantaneous(i, &mut terms);
        terms
    }

    fn collect_instantaneous<'a>(&'a self, i: usize, terms: &mut Vec<(f64, &'a PointOp)>) {
        match &self.kind {
            LawKind::Zero => {}
            LawKind::Constant(op) => terms.push((1.0, op)),
            LawKind::Multiplication(x) => terms.push((x.coeff[i], &x.op)),
            LawKind::Convolution(x) => terms.push((0.5 * x.grid.dt * x.kernel[0], &x.op)),
            LawKind::Sum(parts) => parts.iter().for_each(|p| p.collect_instantaneous(i, terms)),
        }
    }

    /// Adds the memory part `sum_{k >= 1} c_k op u_{i-k}` at node `i`, using
    /// the rows `past[0..i]`.
    pub(crate) fn add_history(&self, i: usize, past: &[Vec<C64>], out: &mut [C64]) {
        match &self.kind {
            LawKind::Convolution(x) => {
                let dt = x.grid.dt;
                let m = past.first().map_or(0, |r| r.len());
                let mut acc = vec![C64::new(0.0, 0.0); m];
                for k in 1..=i {
                    let w = dt * x.kernel[k];
                    if w == 0.0 {
                        continue;
                    }
                    for (a, v) in acc.iter_mut().zip(&past[i - k]) {
                        *a += w * v;
                    }
                }
                x.op.apply_add(C64::new(1.0, 0.0), &acc, out);
            }
            LawKind::Sum(parts) => parts.iter().for_each(|p| p.add_history(i, past, out)),
            _ => {}
        }
    }

    /// Frequency-domain terms of an autonomous law.
    pub(crate) fn symbol_terms(&self, xi: f64) -> Result<Vec<(C64, &PointOp)>> {
        let mut terms = Vec::new();
        self.collect_symbol(xi, &mut terms)?;
        Ok(terms)
    }

    fn collect_symbol<'a>(&'a self, xi: f64, terms: &mut Vec<(C64, &'a PointOp)>) -> Result<()> {
        match &self.kind {
            LawKind::Zero => {}
            LawKind::Constant(op) => terms.push((C64::new(1.0, 0.0), op)),
            LawKind::Multiplication(x) if self.is_autonomous() => terms.push((C64::new(x.coeff[0], 0.0), &x.op)),
            LawKind::Multiplication(_) => {
                return Err(Error::Applicability("time-dependent multiplication has no frequency symbol".into()))
            }
            LawKind::Convolution(x) => terms.push((x.symbol(xi), &x.op)),
            LawKind::Sum(parts) => {
                for p in parts {
                    p.collect_symbol(xi, terms)?;
                }
            }
        }
        Ok(())
    }
}

/// Forward average of the piecewise-linear interpolant of `coeff`, held
/// constant after the last node.
fn sample_average(grid: &TemporalGrid, coeff: &[f64], t: f64, eps: f64) -> f64 {
    let value = |s: f64| {
        let x = ((s - grid.t0) / grid.dt).max(0.0);
        let j = x.floor() as usize;
        if j + 1 >= coeff.len() {
            return coeff[coeff.len() - 1];
        }
        let f = x - j as f64;
        coeff[j] * (1.0 - f) + coeff[j + 1] * f
    };
    crate::quadrature::integrate(value, t, t + eps, 1e-12)
        .map(|v| v / eps)
        .unwrap_or(f64::NAN)
}
