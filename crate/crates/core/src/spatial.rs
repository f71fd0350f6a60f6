//! Discrete spatial complexes `(C, C*)` on the unit box.
//!
//! The gradient pair is vertex centered: `u` lives on grid nodes, `C u` on
//! the edges between them. The curl pair maps edge fields to face fields.
//! All degrees of freedom carry the same quadrature weight `h^d`, so the
//! adjoint `C*` is exactly the transpose of `C`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows} x {ncols}");
            if last == Some((r, c)) {
                *data.last_mut().expect("duplicate follows an entry") += v;
            } else {
                rows.push(r);
                indices.push(c);
                data.push(v);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = data.iter().map(|v| *v != 0.0).collect();
        let mut k = 0;
        let (mut idx2, mut data2) = (Vec::new(), Vec::new());
        for (i, r) in rows.iter().enumerate() {
            if keep[i] {
                indptr[r + 1] += 1;
                idx2.push(indices[i]);
                data2.push(data[i]);
                k += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        debug_assert_eq!(indptr[nrows], k);
        Self {
            nrows,
            ncols,
            indptr,
            indices: idx2,
            data: data2,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.data[span].iter().copied())
    }

    /// `out += scale * A x`.
    pub fn matvec_add(&self, scale: C64, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *o += scale * acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec_add(C64::new(1.0, 0.0), x, &mut out);
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut triplets = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    triplets.push((r, c, a * b));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return f64::INFINITY;
        }
        (&self.to_dense() - &other.to_dense()).amax()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    DirichletOnU,
    NeumannOnU,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexKind {
    Gradient,
    Curl,
    /// The curl pair with the roles of the two spaces exchanged.
    CurlDual,
}

/// Location of a degree of freedom; `axis` is the edge direction or face
/// normal, `None` for nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site {
    pub pos: [f64; 3],
    pub axis: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialComplex {
    c: CsrMatrix,
    cstar: CsrMatrix,
    dims: Vec<usize>,
    h: f64,
    boundary: Boundary,
    kind: ComplexKind,
    u_sites: Vec<Site>,
    v_sites: Vec<Site>,
}

/// Lexicographic index over a box of per-axis ranges.
struct BoxIndex {
    lo: [usize; 3],
    len: [usize; 3],
}

impl BoxIndex {
    fn new(ranges: [(usize, usize); 3]) -> Self {
        Self {
            lo: ranges.map(|r| r.0),
            len: ranges.map(|r| r.1.saturating_sub(r.0)),
        }
    }

    fn count(&self) -> usize {
        self.len.iter().product()
    }

    fn index(&self, p: [i64; 3]) -> Option<usize> {
        let mut idx = 0;
        for a in 0..3 {
            let q = p[a] - self.lo[a] as i64;
            if q < 0 || q >= self.len[a] as i64 {
                return None;
            }
            idx = idx * self.len[a] + q as usize;
        }
        Some(idx)
    }

    fn points(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        (0..self.count()).map(move |mut k| {
            let mut p = [0i64; 3];
            for a in (0..3).rev() {
                p[a] = (self.lo[a] + k % self.len[a]) as i64;
                k /= self.len[a];
            }
            p
        })
    }
}

/// Degrees of freedom grouped by axis, each group a box of index ranges.
struct Family {
    groups: Vec<BoxIndex>,
    offsets: Vec<usize>,
}

impl Family {
    fn new(groups: Vec<BoxIndex>) -> Self {
        let mut offsets = vec![0];
        for g in &groups {
            offsets.push(offsets.last().copied().unwrap_or(0) + g.count());
        }
        Self { groups, offsets }
    }

    fn count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn index(&self, group: usize, p: [i64; 3]) -> Option<usize> {
        self.groups[group].index(p).map(|i| i + self.offsets[group])
    }
}

fn unit(a: usize) -> [i64; 3] {
    let mut e = [0; 3];
    e[a] = 1;
    e
}

fn add(p: [i64; 3], q: [i64; 3]) -> [i64; 3] {
    [p[0] + q[0], p[1] + q[1], p[2] + q[2]]
}

impl SpatialComplex {
    /// Gradient on `(0,1)^d` with `n` cells per axis.
    pub fn build_grad_pair(n: usize, d: usize, boundary: Boundary) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("need at least 3 cells per axis, got {n}")));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::Parameter(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        let h = 1.0 / n as f64;
        let (node_lo, node_hi) = match boundary {
            Boundary::DirichletOnU => (1, n),
            Boundary::NeumannOnU => (0, n + 1),
        };
        let active = |a: usize, r: (usize, usize)| if a < d { r } else { (0, 1) };
        let nodes = BoxIndex::new([0, 1, 2].map(|a| active(a, (node_lo, node_hi))));
        let edges = Family::new(
            (0..d)
                .map(|axis| BoxIndex::new([0, 1, 2].map(|a| if a == axis { (0, n) } else { active(a, (node_lo, node_hi)) })))
                .collect(),
        );
        let mut triplets = Vec::new();
        let mut v_sites = Vec::with_capacity(edges.count());
        for axis in 0..d {
            for p in edges.groups[axis].points() {
                let row = edges.index(axis, p).expect("edge inside its own box");
                if let Some(col) = nodes.index(add(p, unit(axis))) {
                    triplets.push((row, col, 1.0 / h));
                }
                if let Some(col) = nodes.index(p) {
                    triplets.push((row, col, -1.0 / h));
                }
                let mut pos = p.map(|x| x as f64 * h);
                pos[axis] += 0.5 * h;
                v_sites.push(Site { pos, axis: Some(axis) });
            }
        }
        let u_sites = nodes
            .points()
            .map(|p| Site {
                pos: p.map(|x| x as f64 * h),
                axis: None,
            })
            .collect();
        let c = CsrMatrix::from_triplets(edges.count(), nodes.count(), triplets);
        Ok(Self {
            cstar: c.transpose(),
            c,
            dims: vec![n; d],
            h,
            boundary,
            kind: ComplexKind::Gradient,
            u_sites,
            v_sites,
        })
    }

    /// Curl from tangential-zero edge fields to face fields on `(0,1)^3`.
    pub fn build_curl_pair(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parameter(format!("need at least 3 cells per axis, got {n}")));
        }
        let h = 1.0 / n as f64;
        // edge along `axis` at (p + e_axis / 2), interior in the other axes
        let edges = Family::new(
            (0..3)
                .map(|axis| BoxIndex::new([0, 1, 2].map(|a| if a == axis { (0, n) } else { (1, n) })))
                .collect(),
        );
        // face with normal `axis` at p + (sum of the other half steps)
        let faces = Family::new(
            (0..3)
                .map(|axis| BoxIndex::new([0, 1, 2].map(|a| if a == axis { (0, n + 1) } else { (0, n) })))
                .collect(),
        );
        let mut triplets = Vec::new();
        let mut v_sites = Vec::with_capacity(faces.count());
        for axis in 0..3 {
            let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
            for p in faces.groups[axis].points() {
                let row = faces.index(axis, p).expect("face inside its own box");
                // (curl E)_axis = d_b E_c - d_c E_b
                for (edge_axis, diff_axis, sign) in [(c, b, 1.0), (b, c, -1.0)] {
                    if let Some(col) = edges.index(edge_axis, add(p, unit(diff_axis))) {
                        triplets.push((row, col, sign / h));
                    }
                    if let Some(col) = edges.index(edge_axis, p) {
                        triplets.push((row, col, -sign / h));
                    }
                }
                let mut pos = p.map(|x| x as f64 * h);
                pos[b] += 0.5 * h;
                pos[c] += 0.5 * h;
                v_sites.push(Site { pos, axis: Some(axis) });
            }
        }
        let mut u_sites = Vec::with_capacity(edges.count());
        for axis in 0..3 {
            for p in edges.groups[axis].points() {
                let mut pos = p.map(|x| x as f64 * h);
                pos[axis] += 0.5 * h;
                u_sites.push(Site { pos, axis: Some(axis) });
            }
        }
        let cm = CsrMatrix::from_triplets(faces.count(), edges.count(), triplets);
        Ok(Self {
            cstar: cm.transpose(),
            c: cm,
            dims: vec![n; 3],
            h,
            boundary: Boundary::DirichletOnU,
            kind: ComplexKind::Curl,
            u_sites,
            v_sites,
        })
    }

    /// The pair `(-C*, -C)`, which swaps the roles of the two spaces.
    pub fn dual(&self) -> SpatialComplex {
        let boundary = match self.boundary {
            Boundary::DirichletOnU => Boundary::NeumannOnU,
            Boundary::NeumannOnU => Boundary::DirichletOnU,
        };
        let kind = match self.kind {
            ComplexKind::Curl => ComplexKind::CurlDual,
            ComplexKind::CurlDual => ComplexKind::Curl,
            ComplexKind::Gradient => ComplexKind::Gradient,
        };
        SpatialComplex {
            c: self.cstar.scaled(-1.0),
            cstar: self.c.scaled(-1.0),
            dims: self.dims.clone(),
            h: self.h,
            boundary,
            kind,
            u_sites: self.v_sites.clone(),
            v_sites: self.u_sites.clone(),
        }
    }

    pub fn c(&self) -> &CsrMatrix {
        &self.c
    }

    pub fn cstar(&self) -> &CsrMatrix {
        &self.cstar
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn kind(&self) -> ComplexKind {
        self.kind
    }

    /// Dimension of the `u` space.
    pub fn m0(&self) -> usize {
        self.c.ncols()
    }

    /// Dimension of the `v` space.
    pub fn m1(&self) -> usize {
        self.c.nrows()
    }

    /// Quadrature weight of every degree of freedom.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dims.len() as i32)
    }

    pub fn u_sites(&self) -> &[Site] {
        &self.u_sites
    }

    pub fn v_sites(&self) -> &[Site] {
        &self.v_sites
    }

    /// `(-C* v, C u)`.
    pub fn block_apply(&self, u: &[C64], v: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        if u.len() != self.m0() || v.len() != self.m1() {
            return Err(Error::Dimension(format!(
                "block expects ({}, {}) components, got ({}, {})",
                self.m0(),
                self.m1(),
                u.len(),
                v.len()
            )));
        }
        let top = self.cstar.matvec(v).into_iter().map(|z| -z).collect();
        Ok((top, self.c.matvec(u)))
    }

    /// `max |C* - W_u^{-1} C^T W_q|` entrywise.
    pub fn adjointness_defect(&self) -> f64 {
        self.cstar.max_abs_diff(&self.c.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|x| C64::new(*x, 0.0)).collect()
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn dot(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    #[test]
    fn hat_function_in_one_dimension() {
        let cx = SpatialComplex::build_grad_pair(4, 1, Boundary::DirichletOnU).unwrap();
        assert_eq!((cx.m0(), cx.m1()), (3, 4));
        let h = cx.h();
        let q = cx.c().matvec(&real(&[0.0, 1.0, 0.0]));
        let want = [0.0, 1.0 / h, -1.0 / h, 0.0];
        for (a, b) in q.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-12);
        }
        let lap = cx.cstar().matmul(cx.c()).to_dense() * (h * h);
        assert_eq!(lap[(1, 0)], -1.0);
        assert_eq!(lap[(1, 1)], 2.0);
        assert_eq!(lap[(1, 2)], -1.0);
    }

    #[test]
    fn constants_and_boundary_rows() {
        for d in 1..=3 {
            let neu = SpatialComplex::build_grad_pair(5, d, Boundary::NeumannOnU).unwrap();
            assert!(neu.c().matvec(&vec![C64::new(1.0, 0.0); neu.m0()]).iter().all(|z| z.norm() == 0.0));
            let dir = SpatialComplex::build_grad_pair(5, d, Boundary::DirichletOnU).unwrap();
            let q = dir.c().matvec(&vec![C64::new(1.0, 0.0); dir.m0()]);
            let nonzero: Vec<usize> = (0..q.len()).filter(|&i| q[i].norm() > 0.0).collect();
            assert!(!nonzero.is_empty());
            for i in nonzero {
                let s = dir.v_sites()[i];
                let a = s.axis.unwrap();
                assert!(s.pos[a] < dir.h() || s.pos[a] > 1.0 - dir.h(), "{s:?}");
            }
        }
    }

    #[test]
    fn interior_rows_agree_between_boundary_variants() {
        let dir = SpatialComplex::build_grad_pair(6, 2, Boundary::DirichletOnU).unwrap();
        let neu = SpatialComplex::build_grad_pair(6, 2, Boundary::NeumannOnU).unwrap();
        // Dirichlet values extended by zero to all nodes
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inner = random(&mut rng, dir.m0());
        let mut full = vec![C64::new(0.0, 0.0); neu.m0()];
        for (k, s) in dir.u_sites().iter().enumerate() {
            let j = neu.u_sites().iter().position(|t| t.pos == s.pos).unwrap();
            full[j] = inner[k];
        }
        let qd = dir.c().matvec(&inner);
        let qn = neu.c().matvec(&full);
        for (k, s) in dir.v_sites().iter().enumerate() {
            let j = neu.v_sites().iter().position(|t| t.pos == s.pos && t.axis == s.axis).unwrap();
            assert!((qd[k] - qn[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn smallest_dirichlet_eigenvalue_in_two_dimensions() {
        let cx = SpatialComplex::build_grad_pair(8, 2, Boundary::DirichletOnU).unwrap();
        let lap = cx.cstar().matmul(cx.c()).to_dense();
        let eig = lap.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let h = cx.h();
        let want = 2.0 * (2.0 / (h * h)) * (1.0 - (std::f64::consts::PI * h).cos());
        assert!((min - want).abs() < 1e-8 * want, "{min} vs {want}");
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let curl = SpatialComplex::build_curl_pair(5).unwrap();
        let grad = SpatialComplex::build_grad_pair(5, 3, Boundary::DirichletOnU).unwrap();
        assert_eq!(grad.m1(), curl.m0());
        for (a, b) in grad.v_sites().iter().zip(curl.u_sites()) {
            assert_eq!(a.axis, b.axis);
            assert!((0..3).all(|k| (a.pos[k] - b.pos[k]).abs() < 1e-15));
        }
        let prod = curl.c().matmul(grad.c());
        assert_eq!(prod.nnz(), 0);
    }

    #[test]
    fn constant_field_has_no_interior_curl() {
        let curl = SpatialComplex::build_curl_pair(6).unwrap();
        let e: Vec<C64> = curl
            .u_sites()
            .iter()
            .map(|s| C64::new(if s.axis == Some(0) { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let b = curl.c().matvec(&e);
        let h = curl.h();
        for (k, s) in curl.v_sites().iter().enumerate() {
            let interior = s.pos.iter().all(|&x| x > 1.5 * h && x < 1.0 - 1.5 * h);
            if interior {
                assert_eq!(b[k].norm(), 0.0);
            }
        }
    }

    #[test]
    fn maxwell_sizes_and_exact_skew_adjointness() {
        let cx = SpatialComplex::build_curl_pair(8).unwrap().dual();
        assert_eq!((cx.m0(), cx.m1()), (1728, 1176));
        assert_eq!(cx.adjointness_defect(), 0.0);
        // A + A^T as a sparse block
        let top = cx.cstar().scaled(-1.0);
        assert_eq!(top.transpose().max_abs_diff(&cx.c().scaled(-1.0).scaled(-1.0).scaled(-1.0)), 0.0);
    }

    #[test]
    fn block_operator_is_skew() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let complexes = [
            SpatialComplex::build_grad_pair(6, 2, Boundary::DirichletOnU).unwrap(),
            SpatialComplex::build_grad_pair(4, 3, Boundary::NeumannOnU).unwrap(),
            SpatialComplex::build_curl_pair(4).unwrap(),
            SpatialComplex::build_curl_pair(4).unwrap().dual(),
        ];
        for cx in &complexes {
            assert_eq!(cx.adjointness_defect(), 0.0);
            for _ in 0..100 {
                let u = random(&mut rng, cx.m0());
                let v = random(&mut rng, cx.m1());
                let (au, av) = cx.block_apply(&u, &v).unwrap();
                let form = dot(&au, &u) + dot(&av, &v);
                let scale = (dot(&au, &au) + dot(&av, &av)).norm().sqrt() * (dot(&u, &u) + dot(&v, &v)).norm().sqrt();
                assert!(form.re.abs() <= 1e-13 * scale);
            }
            let (zu, zv) = cx.block_apply(&vec![C64::new(0.0, 0.0); cx.m0()], &vec![C64::new(0.0, 0.0); cx.m1()]).unwrap();
            assert!(zu.iter().chain(&zv).all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn block_squared_matches_sparse_products() {
        let cx = SpatialComplex::build_grad_pair(5, 2, Boundary::NeumannOnU).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random(&mut rng, cx.m0());
        let v = random(&mut rng, cx.m1());
        let (a, b) = cx.block_apply(&u, &v).unwrap();
        let (aa, bb) = cx.block_apply(&a, &b).unwrap();
        let want_u = cx.cstar().matmul(cx.c()).matvec(&u);
        let want_v = cx.c().matmul(cx.cstar()).matvec(&v);
        let scale = want_u.iter().chain(&want_v).fold(0.0f64, |m, z| m.max(z.norm()));
        for (x, y) in aa.iter().zip(&want_u).chain(bb.iter().zip(&want_v)) {
            assert!((x + y).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn small_grids_are_rejected() {
        assert!(SpatialComplex::build_grad_pair(2, 1, Boundary::DirichletOnU).is_err());
        assert!(SpatialComplex::build_grad_pair(4, 4, Boundary::DirichletOnU).is_err());
        assert!(SpatialComplex::build_curl_pair(2).is_err());
        let cx = SpatialComplex::build_grad_pair(4, 1, Boundary::DirichletOnU).unwrap();
        assert!(cx.block_apply(&[C64::new(0.0, 0.0)], &[]).is_err());
    }
}
