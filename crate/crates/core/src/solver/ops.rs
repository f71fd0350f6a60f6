//! Pointwise (in time or in frequency) block operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::Laws;
use crate::coefficients::PointOp;
use crate::spatial::SpatialComplex;
use crate::{Error, Result};

/// Complex pointwise operator accumulated from law terms.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum CxOp {
    Zero,
    Scalar(C64),
    Diagonal(Vec<C64>),
    Dense(DMatrix<C64>),
}

fn dense_of(op: &PointOp, dim: usize) -> DMatrix<C64> {
    op.to_dense(dim).map(|v| C64::new(v, 0.0))
}

impl CxOp {
    pub(crate) fn from_terms<'a>(terms: impl IntoIterator<Item = (C64, &'a PointOp)>) -> CxOp {
        terms.into_iter().fold(CxOp::Zero, |acc, (s, op)| acc.plus(s, op))
    }

    fn plus(self, s: C64, op: &PointOp) -> CxOp {
        if s == C64::new(0.0, 0.0) {
            return self;
        }
        match (self, op) {
            (CxOp::Zero, PointOp::Scalar(c)) => CxOp::Scalar(s * c),
            (CxOp::Zero, PointOp::Diagonal(d)) => CxOp::Diagonal(d.iter().map(|v| s * v).collect()),
            (CxOp::Zero, PointOp::Dense(a)) => CxOp::Dense(a.map(|v| s * v)),
            (CxOp::Scalar(a), PointOp::Scalar(c)) => CxOp::Scalar(a + s * c),
            (CxOp::Scalar(a), PointOp::Diagonal(d)) => CxOp::Diagonal(d.iter().map(|v| a + s * v).collect()),
            (CxOp::Diagonal(mut d), PointOp::Scalar(c)) => {
                d.iter_mut().for_each(|x| *x += s * c);
                CxOp::Diagonal(d)
            }
            (CxOp::Diagonal(mut d), PointOp::Diagonal(e)) => {
                d.iter_mut().zip(e).for_each(|(x, v)| *x += s * v);
                CxOp::Diagonal(d)
            }
            (CxOp::Dense(mut a), op) => {
                a += dense_of(op, a.nrows()) * s;
                CxOp::Dense(a)
            }
            (acc, PointOp::Dense(b)) => {
                let mut a = acc.to_dense(b.nrows());
                a += b.map(|v| s * v);
                CxOp::Dense(a)
            }
        }
    }

    fn to_dense(&self, dim: usize) -> DMatrix<C64> {
        match self {
            CxOp::Zero => DMatrix::zeros(dim, dim),
            CxOp::Scalar(c) => DMatrix::from_diagonal_element(dim, dim, *c),
            CxOp::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            CxOp::Dense(a) => a.clone(),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, CxOp::Zero)
    }

    pub(crate) fn is_hermitian(&self) -> bool {
        match self {
            CxOp::Zero => true,
            CxOp::Scalar(c) => c.im == 0.0,
            CxOp::Diagonal(d) => d.iter().all(|c| c.im == 0.0),
            CxOp::Dense(a) => a.is_square() && (a - a.adjoint()).iter().all(|z| z.norm() <= 1e-14 * (1.0 + z.norm())),
        }
    }

    /// `out += op * x`.
    pub(crate) fn apply_add(&self, x: &[C64], out: &mut [C64]) {
        match self {
            CxOp::Zero => {}
            CxOp::Scalar(c) => out.iter_mut().zip(x).for_each(|(o, v)| *o += c * v),
            CxOp::Diagonal(d) => out.iter_mut().zip(x).zip(d).for_each(|((o, v), c)| *o += c * v),
            CxOp::Dense(a) => {
                for (r, o) in out.iter_mut().enumerate() {
                    *o += (0..x.len()).map(|c| a[(r, c)] * x[c]).sum::<C64>();
                }
            }
        }
    }

    pub(crate) fn apply(&self, x: &[C64], m_out: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); m_out];
        self.apply_add(x, &mut out);
        out
    }

    pub(crate) fn inverse(&self) -> Result<CxOp> {
        let singular = || Error::Material("N11 is singular".into());
        match self {
            CxOp::Zero => Err(singular()),
            CxOp::Scalar(c) if c.norm() > 0.0 => Ok(CxOp::Scalar(c.inv())),
            CxOp::Diagonal(d) if d.iter().all(|c| c.norm() > 0.0) => Ok(CxOp::Diagonal(d.iter().map(|c| c.inv()).collect())),
            CxOp::Dense(a) if a.is_square() => a.clone().try_inverse().map(CxOp::Dense).ok_or_else(singular),
            _ => Err(singular()),
        }
    }

    pub(crate) fn condition(&self) -> f64 {
        match self {
            CxOp::Zero => f64::INFINITY,
            CxOp::Scalar(_) => 1.0,
            CxOp::Diagonal(d) => {
                let (lo, hi) = d
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c.norm()), hi.max(c.norm())));
                hi / lo
            }
            CxOp::Dense(a) => {
                let s = a.clone().singular_values();
                s.max() / s.min()
            }
        }
    }
}

/// Largest condition number tolerated for `N11` at a node.
pub(crate) const N11_CONDITION_LIMIT: f64 = 1e12;

/// The blocks at one time node or one frequency.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct NodeOps {
    /// `M00` at a node; `(i xi + rho) M00` at a frequency.
    pub m: CxOp,
    pub n00: CxOp,
    pub n01: CxOp,
    pub n10: CxOp,
    pub n11_inv: CxOp,
    pub n11_condition: f64,
}

fn with_n11(m: CxOp, n00: CxOp, n01: CxOp, n10: CxOp, n11: CxOp, at: impl Fn() -> String) -> Result<NodeOps> {
    let n11_condition = n11.condition();
    if !(n11_condition <= N11_CONDITION_LIMIT) {
        return Err(Error::Material(format!(
            "N11 is numerically singular at {} (condition {n11_condition:.3e})",
            at()
        )));
    }
    Ok(NodeOps {
        m,
        n00,
        n01,
        n10,
        n11_inv: n11.inverse()?,
        n11_condition,
    })
}

fn real_terms<'a>(terms: Vec<(f64, &'a PointOp)>) -> impl Iterator<Item = (C64, &'a PointOp)> {
    terms.into_iter().map(|(s, op)| (C64::new(s, 0.0), op))
}

impl NodeOps {
    /// Instantaneous parts at time node `i`.
    pub(crate) fn at_node(laws: &Laws, i: usize, t: f64) -> Result<Self> {
        for (law, name) in [(&laws.n01, "N01"), (&laws.n10, "N10"), (&laws.n11, "N11")] {
            if !law.is_instantaneous() {
                return Err(Error::Applicability(format!("{name} must act pointwise in time for the time stepper")));
            }
        }
        let op = |law: &crate::coefficients::MaterialLaw| CxOp::from_terms(real_terms(law.instantaneous_terms(i)));
        with_n11(op(&laws.m00), op(&laws.n00), op(&laws.n01), op(&laws.n10), op(&laws.n11), || format!("t = {t}"))
    }

    /// Symbols at frequency `xi`, with the derivative folded into `m`.
    pub(crate) fn at_frequency(laws: &Laws, xi: f64, rho: f64) -> Result<Self> {
        let op = |law: &crate::coefficients::MaterialLaw| -> Result<CxOp> { Ok(CxOp::from_terms(law.symbol_terms(xi)?)) };
        let s = C64::new(rho, xi);
        let m = CxOp::from_terms(laws.m00.symbol_terms(xi)?.into_iter().map(|(c, op)| (c * s, op)));
        with_n11(m, op(&laws.n00)?, op(&laws.n01)?, op(&laws.n10)?, op(&laws.n11)?, || format!("xi = {xi}"))
    }

    /// `(C* - N01) N11^{-1} y` for `y` in the second space.
    pub(crate) fn lift(&self, cx: &SpatialComplex, y: &[C64]) -> Vec<C64> {
        let z = self.n11_inv.apply(y, cx.m1());
        let mut out = cx.cstar().matvec(&z);
        if !self.n01.is_zero() {
            let w = self.n01.apply(&z, cx.m0());
            out.iter_mut().zip(w).for_each(|(o, w)| *o -= w);
        }
        out
    }

    /// `(C + N10) x`.
    pub(crate) fn coupling(&self, cx: &SpatialComplex, x: &[C64]) -> Vec<C64> {
        let mut y = cx.c().matvec(x);
        self.n10.apply_add(x, &mut y);
        y
    }

    /// Reduced operator `N00 x + (C* - N01) N11^{-1} (C + N10) x`.
    pub(crate) fn reduced(&self, cx: &SpatialComplex, x: &[C64]) -> Vec<C64> {
        let mut out = self.lift(cx, &self.coupling(cx, x));
        self.n00.apply_add(x, &mut out);
        out
    }

    /// `N11^{-1} (g - (C + N10) u)`.
    pub(crate) fn reconstruct_v(&self, cx: &SpatialComplex, u: &[C64], g: &[C64]) -> Vec<C64> {
        let y: Vec<C64> = g.iter().zip(self.coupling(cx, u)).map(|(g, c)| g - c).collect();
        self.n11_inv.apply(&y, cx.m1())
    }

    /// Whether `a M + b * reduced` is Hermitian for real `a, b`.
    pub(crate) fn hermitian(&self) -> bool {
        self.n01.is_zero() && self.n10.is_zero() && self.m.is_hermitian() && self.n00.is_hermitian() && self.n11_inv.is_hermitian()
    }
}

/// Dense below this size, Krylov above.
pub(crate) const DENSE_LIMIT: usize = 256;
/// Dense limit when the operator changes at every node, so no factorization is reused.
pub(crate) const VARYING_DENSE_LIMIT: usize = 64;
pub(crate) const KRYLOV_TOL: f64 = 1e-12;
pub(crate) const KRYLOV_MAX_ITER: usize = 5000;

/// Solver for `(a M + b reduced) x = rhs` at one node or frequency.
pub(crate) enum Factor {
    Dense(crate::linalg::DenseLu),
    Krylov { hermitian: bool },
}

impl Factor {
    pub(crate) fn new(ops: &NodeOps, cx: &SpatialComplex, a: C64, b: f64, dense_limit: usize) -> Result<Self> {
        let m0 = cx.m0();
        if m0 <= dense_limit {
            let lu = crate::linalg::DenseLu::from_operator(m0, |x| system_apply(ops, cx, a, b, x)).map_err(|_| Error::Solver {
                iterations: 0,
                residual: f64::INFINITY,
                trace: vec![],
            })?;
            Ok(Factor::Dense(lu))
        } else {
            Ok(Factor::Krylov {
                hermitian: ops.hermitian() && a.im == 0.0,
            })
        }
    }

    pub(crate) fn solve(&self, ops: &NodeOps, cx: &SpatialComplex, a: C64, b: f64, rhs: &[C64], guess: Option<&[C64]>) -> Result<Vec<C64>> {
        match self {
            Factor::Dense(lu) => Ok(lu.solve(rhs)),
            Factor::Krylov { hermitian } => {
                let op = |x: &[C64]| system_apply(ops, cx, a, b, x);
                if *hermitian {
                    if let Ok((x, _)) = crate::linalg::cg(op, rhs, guess, KRYLOV_TOL, KRYLOV_MAX_ITER) {
                        return Ok(x);
                    }
                }
                crate::linalg::gmres(op, rhs, guess, KRYLOV_TOL, 60, KRYLOV_MAX_ITER).map(|(x, _)| x)
            }
        }
    }
}

/// `a M x + b reduced(x)`.
pub(crate) fn system_apply(ops: &NodeOps, cx: &SpatialComplex, a: C64, b: f64, x: &[C64]) -> Vec<C64> {
    let mut out: Vec<C64> = ops.reduced(cx, x).into_iter().map(|z| z * b).collect();
    let mx = ops.m.apply(x, cx.m0());
    out.iter_mut().zip(mx).for_each(|(o, v)| *o += a * v);
    out
}
