//! Small linear solvers over complex vectors: dense LU and matrix-free
//! CG/GMRES.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// LU factorization of a square dense operator.
pub struct DenseLu {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl DenseLu {
    pub fn new(a: DMatrix<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("LU of a {} x {} matrix", a.nrows(), a.ncols())));
        }
        let dim = a.nrows();
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Solver {
                iterations: 0,
                residual: f64::INFINITY,
                trace: Vec::new(),
            });
        }
        Ok(Self { lu, dim })
    }

    /// Assembles the matrix by applying `op` to unit vectors.
    pub fn from_operator(dim: usize, op: impl Fn(&[C64]) -> Vec<C64>) -> Result<Self> {
        let mut a = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            let col = op(&e);
            for (i, z) in col.into_iter().enumerate() {
                a[(i, j)] = z;
            }
            e[j] = C64::new(0.0, 0.0);
        }
        Self::new(a)
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        debug_assert_eq!(b.len(), self.dim);
        let rhs = DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .unwrap_or_else(|| vec![C64::new(f64::NAN, 0.0); self.dim])
    }
}

/// Conjugate gradients for a Hermitian positive definite operator.
pub fn cg(op: impl Fn(&[C64]) -> Vec<C64>, b: &[C64], x0: Option<&[C64]>, tol: f64, max_iter: usize) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); n], 0));
    }
    let mut x = x0.map_or_else(|| vec![C64::new(0.0, 0.0); n], |x| x.to_vec());
    let ax = op(&x);
    let mut r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let mut trace = Vec::new();
    for it in 0..max_iter {
        let res = rr.sqrt() / bnorm;
        trace.push(res);
        if res <= tol {
            return Ok((x, it));
        }
        let ap = op(&p);
        let pap = dot(&ap, &p).re;
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let residual = rr.sqrt() / bnorm;
    if residual <= tol {
        return Ok((x, max_iter));
    }
    Err(Error::Solver {
        iterations: trace.len(),
        residual,
        trace,
    })
}

/// Restarted GMRES with modified Gram-Schmidt.
pub fn gmres(
    op: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    x0: Option<&[C64]>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let bnorm = norm(b);
    let zero = C64::new(0.0, 0.0);
    if bnorm == 0.0 {
        return Ok((vec![zero; n], 0));
    }
    let mut x = x0.map_or_else(|| vec![zero; n], |x| x.to_vec());
    let mut trace = Vec::new();
    let mut total = 0;
    while total < max_iter {
        let ax = op(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        trace.push(beta / bnorm);
        if beta / bnorm <= tol {
            return Ok((x, total));
        }
        let m = restart.min(max_iter - total).max(1);
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hess = vec![vec![zero; m]; m + 1];
        let (mut cs, mut sn) = (vec![zero; m], vec![zero; m]);
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = op(&basis[k]);
            for (j, q) in basis.iter().enumerate() {
                let hjk = dot(&w, q);
                hess[j][k] = hjk;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= hjk * qi;
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = C64::new(wn, 0.0);
            for j in 0..k {
                let (a, b2) = (hess[j][k], hess[j + 1][k]);
                hess[j][k] = cs[j].conj() * a + sn[j].conj() * b2;
                hess[j + 1][k] = -sn[j] * a + cs[j] * b2;
            }
            let (a, b2) = (hess[k][k], hess[k + 1][k]);
            let rnorm = (a.norm_sqr() + b2.norm_sqr()).sqrt();
            if rnorm == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = zero;
            } else {
                cs[k] = a / rnorm;
                sn[k] = b2 / rnorm;
            }
            hess[k][k] = C64::new(rnorm, 0.0);
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            total += 1;
            trace.push(g[k + 1].norm() / bnorm);
            if g[k + 1].norm() / bnorm <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * qi;
            }
        }
    }
    let ax = op(&x);
    let residual = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
    if residual <= tol {
        return Ok((x, total));
    }
    Err(Error::Solver {
        iterations: total,
        residual,
        trace,
    })
}
