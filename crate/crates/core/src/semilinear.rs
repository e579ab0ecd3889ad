//! σ^a-linear matrix algebra over a truncated Witt ring.
//!
//! A [`SigmaMatrix`] holds a square matrix `A` together with a Frobenius
//! twist `a` and represents the map `v ↦ A·σ^a(v)`. This module provides
//! composition, elementary divisors by valuation-pivot Smith reduction (Hodge
//! polygons), linearization of semilinear maps, Newton polygons via the lower
//! convex hull of characteristic-polynomial valuations, and the saturated
//! slope-sublattice primitive used by Hodge-Newton decompositions.
//!
//! Precision discipline: Smith eliminations are exact modulo `p^N` (dividing
//! an entry by its pivot's `p`-power is exact on representatives), so
//! transform matrices are honest unimodular matrices of the working ring.
//! Divisor exponents are trusted only when strictly below `N`; anything else
//! surfaces as `PrecisionInsufficient`.

use crate::error::{Error, Result};
use crate::polygon::{Polygon, Rat};
use crate::witt::{Val, WittElem, WittRing};
use num::{BigInt, BigRational, ToPrimitive};
use std::sync::Arc;

/// Dense matrix over a shared [`WittRing`].
#[derive(Clone, Debug)]
pub struct Mat {
    ring: Arc<WittRing>,
    nrows: usize,
    ncols: usize,
    data: Vec<WittElem>,
}

impl Mat {
    pub fn zero(ring: Arc<WittRing>, nrows: usize, ncols: usize) -> Mat {
        let z = ring.zero();
        Mat {
            ring,
            nrows,
            ncols,
            data: vec![z; nrows * ncols],
        }
    }

    pub fn identity(ring: Arc<WittRing>, n: usize) -> Mat {
        let mut m = Mat::zero(ring, n, n);
        for i in 0..n {
            let one = m.ring.one();
            m.set(i, i, one);
        }
        m
    }

    pub fn from_fn(
        ring: Arc<WittRing>,
        nrows: usize,
        ncols: usize,
        mut f: impl FnMut(usize, usize) -> WittElem,
    ) -> Mat {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Mat {
            ring,
            nrows,
            ncols,
            data,
        }
    }

    pub fn ring(&self) -> &Arc<WittRing> {
        &self.ring
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> &WittElem {
        &self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: WittElem) {
        self.data[i * self.ncols + j] = v;
    }

    fn check_ring(&self, other: &Mat) -> Result<()> {
        if !self.ring.same_ring(&other.ring) {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        self.check_ring(other)?;
        if self.ncols != other.nrows {
            return Err(Error::domain("matrix dimension mismatch"));
        }
        let mut out = Mat::zero(self.ring.clone(), self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self.get(i, k);
                if self.ring.is_zero(a) {
                    continue;
                }
                for j in 0..other.ncols {
                    let b = other.get(k, j);
                    if self.ring.is_zero(b) {
                        continue;
                    }
                    let prod = self.ring.mul(a, b);
                    let sum = self.ring.add(out.get(i, j), &prod);
                    out.set(i, j, sum);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_ring(other)?;
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::domain("matrix dimension mismatch"));
        }
        let mut out = self.clone();
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(i, j, self.ring.add(self.get(i, j), other.get(i, j)));
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_ring(other)?;
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::domain("matrix dimension mismatch"));
        }
        let mut out = self.clone();
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(i, j, self.ring.sub(self.get(i, j), other.get(i, j)));
            }
        }
        Ok(out)
    }

    /// Entrywise `σ^k`.
    pub fn frobenius(&self, k: i64) -> Mat {
        let ring = self.ring.clone();
        Mat {
            data: self.data.iter().map(|e| ring.frobenius(e, k)).collect(),
            ring,
            nrows: self.nrows,
            ncols: self.ncols,
        }
    }

    pub fn pow(&self, e: u64) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::domain("pow of non-square matrix"));
        }
        let mut result = Mat::identity(self.ring.clone(), self.nrows);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &Mat) -> Result<Mat> {
        self.check_ring(other)?;
        if self.nrows != other.nrows {
            return Err(Error::domain("hstack row mismatch"));
        }
        let mut out = Mat::zero(self.ring.clone(), self.nrows, self.ncols + other.ncols);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.ncols {
                out.set(i, self.ncols + j, other.get(i, j).clone());
            }
        }
        Ok(out)
    }

    /// Column selection in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Mat {
        Mat::from_fn(self.ring.clone(), self.nrows, cols.len(), |i, j| {
            self.get(i, cols[j]).clone()
        })
    }

    /// Row selection in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Mat {
        Mat::from_fn(self.ring.clone(), rows.len(), self.ncols, |i, j| {
            self.get(rows[i], j).clone()
        })
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        Mat::from_fn(self.ring.clone(), r1 - r0, c1 - c0, |i, j| {
            self.get(r0 + i, c0 + j).clone()
        })
    }

    /// All entries have valuation at least `prec`.
    pub fn is_zero_mod(&self, prec: u32) -> bool {
        self.data.iter().all(|e| self.ring.valuation(e).at_least(prec))
    }

    pub fn min_valuation(&self) -> Val {
        let mut best = Val::AtLeast(self.ring.precision());
        for e in &self.data {
            let v = self.ring.valuation(e);
            if v < best {
                best = v;
            }
        }
        best
    }

    /// Canonical re-embedding into a ring of the same structure at another
    /// precision (representatives are exact integers).
    pub fn transport_to(&self, ring: &Arc<WittRing>) -> Result<Mat> {
        if !self.ring.same_structure(ring) {
            return Err(Error::RingMismatch);
        }
        Ok(Mat {
            data: self.data.iter().map(|e| ring.lift_elem(e)).collect(),
            ring: ring.clone(),
            nrows: self.nrows,
            ncols: self.ncols,
        })
    }
}

/// Smith-style reduction data: `u · a · v = d` with `u, v` unimodular and
/// `d` diagonal with entries exactly `p^{e_k}` (sorted ascending).
pub struct Smith {
    pub exponents: Vec<Val>,
    pub d: Mat,
    pub u: Mat,
    pub u_inv: Mat,
    pub v: Mat,
    pub v_inv: Mat,
}

impl Smith {
    /// Elementary divisor exponents as plain integers; errors if any divisor
    /// is indistinguishable from `p^N`.
    pub fn finite_exponents(&self, ring: &WittRing) -> Result<Vec<u32>> {
        let have = ring.precision();
        self.exponents
            .iter()
            .map(|v| {
                v.finite().ok_or(Error::PrecisionInsufficient {
                    needed: 2 * have,
                    have,
                })
            })
            .collect()
    }

    /// Number of divisors with valuation at least `bound`.
    pub fn rank_at_least(&self, bound: u32) -> usize {
        self.exponents.iter().filter(|v| v.at_least(bound)).count()
    }
}

/// Valuation-pivot Smith reduction with full transform tracking. Pivots are
/// minimum-valuation entries, ties broken by lowest (row, column) index.
pub fn smith(a: &Mat) -> Result<Smith> {
    let ring = a.ring().clone();
    let n = a.nrows();
    let m = a.ncols();
    let steps = n.min(m);
    let prec = ring.precision();

    let mut d = a.clone();
    let mut u = Mat::identity(ring.clone(), n);
    let mut u_inv = Mat::identity(ring.clone(), n);
    let mut v = Mat::identity(ring.clone(), m);
    let mut v_inv = Mat::identity(ring.clone(), m);
    let mut exponents: Vec<Val> = Vec::with_capacity(steps);

    for k in 0..steps {
        // pivot search
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..n {
            for j in k..m {
                if let Val::Finite(val) = ring.valuation(d.get(i, j)) {
                    if best.map_or(true, |(bv, _, _)| val < bv) {
                        best = Some((val, i, j));
                    }
                }
            }
        }
        let (pval, pi, pj) = match best {
            Some(b) => b,
            None => {
                // everything left is zero at this precision
                for _ in k..steps {
                    exponents.push(Val::AtLeast(prec));
                }
                return Ok(Smith {
                    exponents,
                    d,
                    u,
                    u_inv,
                    v,
                    v_inv,
                });
            }
        };

        if pi != k {
            swap_rows(&mut d, k, pi);
            swap_rows(&mut u, k, pi);
            swap_cols(&mut u_inv, k, pi);
        }
        if pj != k {
            swap_cols(&mut d, k, pj);
            swap_cols(&mut v, k, pj);
            swap_rows(&mut v_inv, k, pj);
        }

        // normalize the pivot to exactly p^pval by scaling its row with the
        // inverse of the unit part
        let unit = ring.div_exact_p(d.get(k, k), pval)?;
        let unit_inv = ring.inv(&unit)?;
        scale_row(&mut d, k, &unit_inv, &ring);
        scale_row(&mut u, k, &unit_inv, &ring);
        scale_col(&mut u_inv, k, &unit, &ring);
        debug_assert_eq!(*d.get(k, k), ring.p_pow(pval));

        // clear the pivot column with row operations: row_i -= q row_k, so
        // the inverse transform gains q times column i on column k
        for i in k + 1..n {
            if ring.is_zero(d.get(i, k)) {
                continue;
            }
            let q = ring.div_exact_p(d.get(i, k), pval)?;
            row_sub(&mut d, i, k, &q, &ring);
            row_sub(&mut u, i, k, &q, &ring);
            col_add(&mut u_inv, k, i, &q, &ring);
        }
        // clear the pivot row with column operations: col_j -= q col_k, so
        // the inverse transform gains q times row j on row k
        for j in k + 1..m {
            if ring.is_zero(d.get(k, j)) {
                continue;
            }
            let q = ring.div_exact_p(d.get(k, j), pval)?;
            col_sub(&mut d, j, k, &q, &ring);
            col_sub(&mut v, j, k, &q, &ring);
            row_add(&mut v_inv, k, j, &q, &ring);
        }
        exponents.push(Val::Finite(pval));
    }

    Ok(Smith {
        exponents,
        d,
        u,
        u_inv,
        v,
        v_inv,
    })
}

fn swap_rows(m: &mut Mat, a: usize, b: usize) {
    for j in 0..m.ncols() {
        let x = m.get(a, j).clone();
        let y = m.get(b, j).clone();
        m.set(a, j, y);
        m.set(b, j, x);
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    for i in 0..m.nrows() {
        let x = m.get(i, a).clone();
        let y = m.get(i, b).clone();
        m.set(i, a, y);
        m.set(i, b, x);
    }
}

fn scale_row(m: &mut Mat, row: usize, factor: &WittElem, ring: &WittRing) {
    for j in 0..m.ncols() {
        let x = ring.mul(m.get(row, j), factor);
        m.set(row, j, x);
    }
}

fn scale_col(m: &mut Mat, col: usize, factor: &WittElem, ring: &WittRing) {
    for i in 0..m.nrows() {
        let x = ring.mul(m.get(i, col), factor);
        m.set(i, col, x);
    }
}

/// `row_a -= q * row_b`
fn row_sub(m: &mut Mat, a: usize, b: usize, q: &WittElem, ring: &WittRing) {
    for j in 0..m.ncols() {
        let t = ring.mul(q, m.get(b, j));
        let x = ring.sub(m.get(a, j), &t);
        m.set(a, j, x);
    }
}

/// `col_a += q * col_b`
fn col_add(m: &mut Mat, a: usize, b: usize, q: &WittElem, ring: &WittRing) {
    for i in 0..m.nrows() {
        let t = ring.mul(q, m.get(i, b));
        let x = ring.add(m.get(i, a), &t);
        m.set(i, a, x);
    }
}

/// `col_a -= q * col_b`
fn col_sub(m: &mut Mat, a: usize, b: usize, q: &WittElem, ring: &WittRing) {
    for i in 0..m.nrows() {
        let t = ring.mul(q, m.get(i, b));
        let x = ring.sub(m.get(i, a), &t);
        m.set(i, a, x);
    }
}

/// `row_a += q * row_b`
fn row_add(m: &mut Mat, a: usize, b: usize, q: &WittElem, ring: &WittRing) {
    for j in 0..m.ncols() {
        let t = ring.mul(q, m.get(b, j));
        let x = ring.add(m.get(a, j), &t);
        m.set(a, j, x);
    }
}

/// Inverse of a unimodular matrix via the Smith transforms.
pub fn inverse_unimodular(a: &Mat) -> Result<Mat> {
    let s = smith(a)?;
    if !s.exponents.iter().all(|e| *e == Val::Finite(0)) {
        return Err(Error::domain("matrix is not unimodular"));
    }
    // a = u_inv · I · v_inv, so a^{-1} = v · u
    s.v.mul(&s.u)
}

/// `(p^e · a^{-1}, e)` with `e` the largest elementary divisor exponent, so
/// the result is integral. Slopes of the result are `e` minus the slopes of
/// `a`, reversed.
pub fn scaled_inverse(a: &Mat) -> Result<(Mat, u32)> {
    let ring = a.ring().clone();
    let s = smith(a)?;
    let exps = s.finite_exponents(&ring)?;
    let e = exps.iter().copied().max().unwrap_or(0);
    // a^{-1} = v d^{-1} u, so p^e a^{-1} = v diag(p^{e - e_k}) u
    let n = a.nrows();
    let mut mid = Mat::zero(ring.clone(), n, n);
    for k in 0..n {
        mid.set(k, k, ring.p_pow(e - exps[k]));
    }
    let out = s.v.mul(&mid)?.mul(&s.u)?;
    Ok((out, e))
}

/// A square matrix together with a Frobenius twist: the map `v ↦ A·σ^a(v)`.
#[derive(Clone, Debug)]
pub struct SigmaMatrix {
    pub mat: Mat,
    pub twist: u32,
}

impl SigmaMatrix {
    pub fn new(mat: Mat, twist: u32) -> Result<SigmaMatrix> {
        if !mat.is_square() {
            return Err(Error::domain("semilinear map must be square"));
        }
        Ok(SigmaMatrix { mat, twist })
    }

    pub fn size(&self) -> usize {
        self.mat.nrows()
    }

    pub fn ring(&self) -> &Arc<WittRing> {
        self.mat.ring()
    }
}

/// Composition `G ∘ H`: matrix `A_G · σ^{a_G}(A_H)` with twist `a_G + a_H`.
pub fn compose(g: &SigmaMatrix, h: &SigmaMatrix) -> Result<SigmaMatrix> {
    if g.size() != h.size() {
        return Err(Error::domain("size mismatch in composition"));
    }
    let mat = g.mat.mul(&h.mat.frobenius(g.twist as i64))?;
    Ok(SigmaMatrix {
        mat,
        twist: g.twist + h.twist,
    })
}

/// Hodge polygon: elementary-divisor exponents of the matrix. The twist is
/// irrelevant because σ is a ring automorphism.
pub fn hodge(f: &SigmaMatrix) -> Result<Polygon> {
    hodge_of_mat(&f.mat)
}

pub fn hodge_of_mat(mat: &Mat) -> Result<Polygon> {
    let s = smith(mat)?;
    let exps = s.finite_exponents(mat.ring())?;
    Polygon::from_segments(exps.iter().map(|&e| (Rat::from(BigInt::from(e)), 1)).collect())
}

/// Linearization: `t = m / gcd(a, m)` is minimal with `σ^{a t} = id`, and
/// `B = A · σ^a(A) · σ^{2a}(A) ⋯ σ^{a(t-1)}(A)` is the matrix of the linear
/// map obtained by iterating the semilinear map `t` times.
pub fn linearize(f: &SigmaMatrix) -> Result<(Mat, u32)> {
    let m = f.ring().degree() as u64;
    let a = f.twist as u64;
    let t = if a == 0 { 1 } else { m / gcd(a, m) };
    let mut b = f.mat.clone();
    for k in 1..t {
        b = b.mul(&f.mat.frobenius((a * k) as i64))?;
    }
    Ok((b, t as u32))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Minimum working precision for a trustworthy Newton polygon of `f`:
/// `t · (sum of Hodge slopes) + n + 8`. The characteristic polynomial's
/// constant term has valuation `t · (slope sum)`; the slack covers interior
/// hull coefficients.
pub fn newton_policy_min(f: &SigmaMatrix) -> Result<u32> {
    let h = hodge(f)?;
    let total = h
        .total()
        .to_integer()
        .to_u32()
        .ok_or_else(|| Error::domain("hodge total out of range"))?;
    let m = f.ring().degree() as u64;
    let a = f.twist as u64;
    let t = if a == 0 { 1 } else { m / gcd(a, m) } as u32;
    Ok(t * total + f.size() as u32 + 8)
}

/// Newton polygon of the semilinear map: `(1/t)` times the Newton polygon of
/// the characteristic polynomial of the linearization.
pub fn newton(f: &SigmaMatrix) -> Result<Polygon> {
    let needed = newton_policy_min(f)?;
    let have = f.ring().precision();
    if have < needed {
        return Err(Error::PrecisionInsufficient { needed, have });
    }
    let (b, t) = linearize(f)?;
    let poly = newton_of_linear(&b)?;
    poly.r_reduce_slopes_by(t)
}

impl Polygon {
    /// Divides every slope by `t` keeping multiplicities (the height is
    /// unchanged). Used to undo linearization.
    fn r_reduce_slopes_by(&self, t: u32) -> Result<Polygon> {
        let tt = Rat::from(BigInt::from(t));
        Polygon::from_segments(
            self.segments()
                .iter()
                .map(|(s, m)| (s / &tt, *m))
                .collect(),
        )
    }
}

/// Newton polygon of a linear (untwisted) matrix: the lower convex hull of
/// `(i, val(c_i))` over the characteristic polynomial `Σ c_i T^i`, read as
/// root valuations.
pub fn newton_of_linear(b: &Mat) -> Result<Polygon> {
    let ring = b.ring();
    let n = b.nrows();
    if n == 0 {
        return Ok(Polygon::empty());
    }
    let coeffs = charpoly(b)?;
    let mut pts: Vec<(i64, i64)> = Vec::with_capacity(n + 1);
    for (i, c) in coeffs.iter().enumerate() {
        match ring.valuation(c) {
            Val::Finite(v) => pts.push((i as i64, v as i64)),
            Val::AtLeast(_) => {
                if i == 0 {
                    // determinant indistinguishable from zero
                    return Err(Error::PrecisionInsufficient {
                        needed: 2 * ring.precision(),
                        have: ring.precision(),
                    });
                }
                // interior points at >= N can never join the hull: the hull is
                // bounded above by max(val(c_0), 0) < N under the policy
            }
        }
    }
    debug_assert_eq!(pts.last().map(|p| p.0), Some(n as i64));
    let hull = lower_hull(&pts);
    let mut segs: Vec<(Rat, u64)> = Vec::new();
    for w in hull.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        let mult = (x1 - x0) as u64;
        // hull slope is (y1-y0)/(x1-x0); root valuations are its negative
        let slope = Rat::new(BigInt::from(y0 - y1), BigInt::from(x1 - x0));
        segs.push((slope, mult));
    }
    Polygon::from_segments(segs)
}

fn lower_hull(pts: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) as i128 * (p.1 - a.1) as i128
                - (b.1 - a.1) as i128 * (p.0 - a.0) as i128;
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Characteristic polynomial `det(T·I - B)` by the division-free Berkowitz
/// expansion; returns ascending coefficients `c_0, ..., c_n` with `c_n = 1`.
/// Division-free keeps small primes (`p <= n`) exact.
pub fn charpoly(b: &Mat) -> Result<Vec<WittElem>> {
    if !b.is_square() {
        return Err(Error::domain("characteristic polynomial of non-square matrix"));
    }
    let ring = b.ring().clone();
    let n = b.nrows();
    if n == 0 {
        return Ok(vec![ring.one()]);
    }
    // coefficients highest-first for the leading principal r x r submatrix
    let mut c: Vec<WittElem> = vec![ring.one(), ring.neg(b.get(0, 0))];
    for r in 2..=n {
        // q_0 = 1, q_1 = -a_rr, q_k = -(R · M^{k-2} · S) for k >= 2
        let mut q: Vec<WittElem> = Vec::with_capacity(r + 1);
        q.push(ring.one());
        q.push(ring.neg(b.get(r - 1, r - 1)));
        // s = S, iteratively multiplied by M
        let mut s: Vec<WittElem> = (0..r - 1).map(|i| b.get(i, r - 1).clone()).collect();
        for _ in 2..=r {
            // dot = R · s
            let mut dot = ring.zero();
            for (i, si) in s.iter().enumerate() {
                let t = ring.mul(b.get(r - 1, i), si);
                dot = ring.add(&dot, &t);
            }
            q.push(ring.neg(&dot));
            // s = M · s
            let mut next = vec![ring.zero(); r - 1];
            for (i, nx) in next.iter_mut().enumerate() {
                for (j, sj) in s.iter().enumerate() {
                    let t = ring.mul(b.get(i, j), sj);
                    *nx = ring.add(nx, &t);
                }
            }
            s = next;
        }
        // c_new[i] = Σ_j q[i-j] c[j] (Toeplitz product)
        let mut cn: Vec<WittElem> = vec![ring.zero(); r + 1];
        for (i, ci) in cn.iter_mut().enumerate() {
            for (j, cj) in c.iter().enumerate() {
                if i >= j && i - j <= r {
                    let t = ring.mul(&q[i - j], cj);
                    *ci = ring.add(ci, &t);
                }
            }
        }
        c = cn;
    }
    c.reverse();
    Ok(c)
}

/// A saturated invariant sublattice: `basis` spans it, `complement` completes
/// the basis to a unimodular matrix, and `restricted` is the matrix of the
/// map on the sublattice in basis coordinates.
#[derive(Clone, Debug)]
pub struct SlopeSublattice {
    pub basis: Mat,
    pub complement: Mat,
    pub restricted: Mat,
}

const SLOPE_CAP_FACTOR: u64 = 64;

/// The saturated sublattice on which the linear map `b` acts with all Newton
/// slopes `> c`, of the stated rank, found by kernel stabilization: solutions
/// of `b^k v = 0 mod p^(ceil(c k) - γ)` stabilize onto the high-slope part as
/// `k` grows. The result is verified (b-stability of the lattice and Newton
/// polygon of the restriction, both at `verify_prec` digits) before being
/// returned; verification failure is an error, never a silent wrong answer.
pub fn slope_sublattice(
    b: &Mat,
    c: &BigRational,
    target_rank: usize,
    verify_prec: u32,
) -> Result<SlopeSublattice> {
    let nu = newton_of_linear(b)?;
    let (_, expected_high) = split_slopes(&nu, c)?;
    if expected_high.height() as usize != target_rank {
        return Err(Error::domain(format!(
            "target rank {target_rank} does not match the {} slopes above {c}",
            expected_high.height()
        )));
    }
    slope_lattice_impl(b, c, b, &expected_high, target_rank, verify_prec)
}

/// The complementary primitive: slopes `< c`, computed as the high-slope
/// sublattice of `p^e · b^{-1}` with threshold `e - c`, then verified
/// directly against `b`.
pub fn low_slope_sublattice(
    b: &Mat,
    c: &BigRational,
    target_rank: usize,
    verify_prec: u32,
) -> Result<SlopeSublattice> {
    let nu = newton_of_linear(b)?;
    let (expected_low, _) = split_slopes(&nu, c)?;
    if expected_low.height() as usize != target_rank {
        return Err(Error::domain(format!(
            "target rank {target_rank} does not match the {} slopes below {c}",
            expected_low.height()
        )));
    }
    let (inv, e) = scaled_inverse(b)?;
    let threshold = Rat::from(BigInt::from(e)) - c;
    slope_lattice_impl(&inv, &threshold, b, &expected_low, target_rank, verify_prec)
}

fn split_slopes(nu: &Polygon, c: &BigRational) -> Result<(Polygon, Polygon)> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (s, m) in nu.segments() {
        if s == c {
            return Err(Error::domain(format!("threshold {c} equals a Newton slope")));
        }
        if s < c {
            low.push((s.clone(), *m));
        } else {
            high.push((s.clone(), *m));
        }
    }
    Ok((Polygon::from_segments(low)?, Polygon::from_segments(high)?))
}

fn slope_lattice_impl(
    kernel_mat: &Mat,
    kernel_threshold: &Rat,
    b: &Mat,
    expected: &Polygon,
    target_rank: usize,
    verify_prec: u32,
) -> Result<SlopeSublattice> {
    let ring = b.ring().clone();
    let n = b.nrows();
    let prec = ring.precision();

    if target_rank == 0 {
        return Ok(SlopeSublattice {
            basis: Mat::zero(ring.clone(), n, 0),
            complement: Mat::identity(ring.clone(), n),
            restricted: Mat::zero(ring, 0, 0),
        });
    }
    if target_rank == n {
        return Ok(SlopeSublattice {
            basis: Mat::identity(ring.clone(), n),
            complement: Mat::zero(ring.clone(), n, 0),
            restricted: b.clone(),
        });
    }

    // slack constant absorbing lattice distortion
    let hodge_exps = smith(kernel_mat)?.finite_exponents(&ring)?;
    let max_exp = hodge_exps.iter().copied().max().unwrap_or(0);
    let gamma = (n as u32) * max_exp + 4;
    let kernel_nu = newton_of_linear(kernel_mat)?;
    // largest slope below and smallest slope above the threshold
    let mut below: Option<Rat> = None;
    let mut above: Option<Rat> = None;
    for (s, _) in kernel_nu.segments() {
        if s < kernel_threshold {
            below = Some(s.clone());
        } else if above.is_none() {
            above = Some(s.clone());
        }
    }
    let (slope_below, slope_above) = match (below, above) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::domain("threshold does not separate two slope groups")),
    };
    let gap = &slope_above - &slope_below;

    // stabilization estimate plus the iterate count needed so that the kernel
    // pins the lattice to verify_prec digits: contamination of the
    // complementary directions shrinks like (threshold - slope_below)·k
    // minus one γ for the congruence slack and one for basis distortion
    let k_stab = ceil_div_rat(&Rat::from(BigInt::from(2 * gamma as u64)), &gap);
    let denom = kernel_threshold - &slope_below;
    let k_acc = ceil_div_rat(
        &Rat::from(BigInt::from(verify_prec as u64 + 2 * gamma as u64 + 4)),
        &denom,
    );
    let mut k = k_stab.max(k_acc).max(1);
    let cap = (SLOPE_CAP_FACTOR * n as u64).max(4 * k);
    let mut last_failure: Option<Error> = None;

    loop {
        let e_req = (kernel_threshold * Rat::from(BigInt::from(k)))
            .ceil()
            .to_integer()
            .to_i64()
            .unwrap_or(i64::MAX)
            - gamma as i64;
        if e_req >= 1 {
            if e_req as u64 >= prec as u64 {
                return Err(Error::PrecisionInsufficient {
                    needed: (e_req as u64 + 9).min(u32::MAX as u64) as u32,
                    have: prec,
                });
            }
            let e_req = e_req as u32;
            let s = smith(&kernel_mat.pow(k)?)?;
            if s.rank_at_least(e_req) == target_rank {
                // columns of v whose divisor is >= E span the stabilized
                // kernel; they are saturated since v is unimodular
                let mut basis_cols = Vec::new();
                let mut comp_cols = Vec::new();
                for (idx, exp) in s.exponents.iter().enumerate() {
                    if exp.at_least(e_req) {
                        basis_cols.push(idx);
                    } else {
                        comp_cols.push(idx);
                    }
                }
                let basis = s.v.select_columns(&basis_cols);
                let complement = s.v.select_columns(&comp_cols);
                let mut order = basis_cols.clone();
                order.extend_from_slice(&comp_cols);
                let p_inv = s.v_inv.select_rows(&order);
                match verify_invariant_lattice(b, &basis, &p_inv, expected, verify_prec) {
                    Ok(restricted) => {
                        return Ok(SlopeSublattice {
                            basis,
                            complement,
                            restricted,
                        })
                    }
                    Err(e @ Error::PrecisionInsufficient { .. }) => return Err(e),
                    Err(e) => last_failure = Some(e),
                }
            }
        }
        if k >= cap {
            return Err(match last_failure {
                Some(e) => e,
                None => Error::NonStabilizing(format!(
                    "kernel rank did not stabilize at {target_rank} within k <= {cap}"
                )),
            });
        }
        k = (2 * k).min(cap);
    }
}

fn ceil_div_rat(num: &Rat, den: &Rat) -> u64 {
    let q = num / den;
    q.ceil().to_integer().to_u64().unwrap_or(1).max(1)
}

/// Checks that `span(basis)` is `b`-stable and that the restriction of `b`
/// has the expected Newton polygon, both at `verify_prec` digits. `p_inv` is
/// the inverse of `[basis | complement]`. Returns the restricted matrix.
fn verify_invariant_lattice(
    b: &Mat,
    basis: &Mat,
    p_inv: &Mat,
    expected: &Polygon,
    verify_prec: u32,
) -> Result<Mat> {
    let rank = basis.ncols();
    let coords = p_inv.mul(&b.mul(basis)?)?;
    let bottom = coords.block(rank, coords.nrows(), 0, rank);
    if !bottom.is_zero_mod(verify_prec) {
        return Err(Error::Verification(format!(
            "sublattice is not stable at precision {verify_prec}"
        )));
    }
    let restricted = coords.block(0, rank, 0, rank);
    let actual = newton_of_linear(&restricted)?;
    if actual != *expected {
        return Err(Error::Verification(format!(
            "restricted Newton polygon {actual} differs from expected {expected}"
        )));
    }
    Ok(restricted)
}

/// Saturation of the column span: the smallest direct summand containing it.
/// Requires full column rank at the working precision.
pub fn saturate(x: &Mat) -> Result<Mat> {
    let ring = x.ring().clone();
    let s = smith(x)?;
    s.finite_exponents(&ring)?;
    let cols: Vec<usize> = (0..x.ncols()).collect();
    Ok(s.u_inv.select_columns(&cols))
}

/// Whether `span(inner) ⊆ span(outer)` at the stated precision; `outer` must
/// be saturated with full column rank.
pub fn lattice_contains(outer: &Mat, inner: &Mat, prec: u32) -> Result<bool> {
    let s = smith(outer)?;
    let exps = s.finite_exponents(outer.ring())?;
    if exps.iter().any(|&e| e != 0) {
        return Err(Error::domain("outer lattice is not saturated"));
    }
    let coords = s.u.mul(inner)?;
    let bottom = coords.block(outer.ncols(), coords.nrows(), 0, inner.ncols());
    Ok(bottom.is_zero_mod(prec))
}

/// Lattice equality (mutual containment of saturated spans) at a precision.
pub fn lattice_eq(a: &Mat, b: &Mat, prec: u32) -> Result<bool> {
    if a.ncols() != b.ncols() {
        return Ok(false);
    }
    Ok(lattice_contains(a, b, prec)? && lattice_contains(b, a, prec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::{rat, rat_int};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(p: u64, m: usize, n: u32) -> Arc<WittRing> {
        WittRing::with_default_poly(p, m, n).unwrap()
    }

    fn mat_from_ints(r: &Arc<WittRing>, rows: &[&[i64]]) -> Mat {
        Mat::from_fn(r.clone(), rows.len(), rows[0].len(), |i, j| {
            r.from_int(rows[i][j])
        })
    }

    fn pg(pairs: &[(i64, i64, u64)]) -> Polygon {
        Polygon::from_segments(pairs.iter().map(|(n, d, m)| (rat(*n, *d), *m)).collect()).unwrap()
    }

    /// Random matrix with controlled elementary divisors: unit lower
    /// triangular x diag(p^exps) x unit upper triangular.
    fn random_with_divisors(r: &Arc<WittRing>, exps: &[u32], rng: &mut ChaCha8Rng) -> Mat {
        let n = exps.len();
        let mut lo = Mat::identity(r.clone(), n);
        let mut up = Mat::identity(r.clone(), n);
        for i in 0..n {
            for j in 0..i {
                lo.set(i, j, r.random(rng));
                up.set(j, i, r.random(rng));
            }
        }
        let mut d = Mat::zero(r.clone(), n, n);
        for i in 0..n {
            d.set(i, i, r.p_pow(exps[i]));
        }
        lo.mul(&d).unwrap().mul(&up).unwrap()
    }

    fn random_unimodular(r: &Arc<WittRing>, n: usize, rng: &mut ChaCha8Rng) -> Mat {
        random_with_divisors(r, &vec![0; n], rng)
    }

    #[test]
    fn smith_reduces_and_tracks_transforms() {
        let r = ring(3, 2, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let a = random_with_divisors(&r, &[0, 1, 3], &mut rng);
            let s = smith(&a).unwrap();
            assert_eq!(s.finite_exponents(&r).unwrap(), vec![0, 1, 3]);
            // u a v = d
            let lhs = s.u.mul(&a).unwrap().mul(&s.v).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(lhs.get(i, j), s.d.get(i, j));
                }
            }
            // transforms invert each other
            let uu = s.u.mul(&s.u_inv).unwrap();
            let vv = s.v_inv.mul(&s.v).unwrap();
            let id = Mat::identity(r.clone(), 3);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(uu.get(i, j), id.get(i, j));
                    assert_eq!(vv.get(i, j), id.get(i, j));
                }
            }
        }
    }

    #[test]
    fn hodge_examples() {
        let r = ring(5, 1, 16);
        let a = mat_from_ints(&r, &[&[1, 0, 0], &[0, 5, 0], &[0, 0, 25]]);
        let f = SigmaMatrix::new(a, 1).unwrap();
        assert_eq!(hodge(&f).unwrap(), pg(&[(0, 1, 1), (1, 1, 1), (2, 1, 1)]));

        let b = mat_from_ints(&r, &[&[0, 5], &[1, 0]]);
        let f = SigmaMatrix::new(b, 1).unwrap();
        assert_eq!(hodge(&f).unwrap(), pg(&[(0, 1, 1), (1, 1, 1)]));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unimodular(&r, 3, &mut rng);
        let f = SigmaMatrix::new(u, 1).unwrap();
        assert_eq!(hodge(&f).unwrap(), pg(&[(0, 1, 3)]));
    }

    #[test]
    fn compose_examples() {
        let r = ring(5, 1, 16);
        let a = mat_from_ints(&r, &[&[1, 0], &[0, 5]]);
        let b = mat_from_ints(&r, &[&[5, 0], &[0, 5]]);
        let fa = SigmaMatrix::new(a.clone(), 1).unwrap();
        let fb = SigmaMatrix::new(b, 1).unwrap();
        // apply diag(1,p) first, then diag(p,p)
        let c = compose(&fb, &fa).unwrap();
        assert_eq!(c.twist, 2);
        let expected = mat_from_ints(&r, &[&[5, 0], &[0, 25]]);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c.mat.get(i, j), expected.get(i, j));
            }
        }
        // identity with twist 0 is neutral
        let id = SigmaMatrix::new(Mat::identity(r.clone(), 2), 0).unwrap();
        let d = compose(&fa, &id).unwrap();
        assert_eq!(d.twist, 1);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(d.mat.get(i, j), a.get(i, j));
            }
        }
    }

    #[test]
    fn linearize_examples() {
        let r1 = ring(5, 1, 16);
        let a = mat_from_ints(&r1, &[&[2, 1], &[0, 3]]);
        let (b, t) = linearize(&SigmaMatrix::new(a.clone(), 1).unwrap()).unwrap();
        assert_eq!(t, 1);
        assert_eq!(b.get(0, 0), a.get(0, 0));

        let r2 = ring(3, 2, 16);
        let f = SigmaMatrix::new(Mat::identity(r2.clone(), 2), 1).unwrap();
        let (_, t) = linearize(&f).unwrap();
        assert_eq!(t, 2);

        let r4 = ring(3, 4, 16);
        let f = SigmaMatrix::new(Mat::identity(r4, 2), 2).unwrap();
        let (_, t) = linearize(&f).unwrap();
        assert_eq!(t, 2);
    }

    #[test]
    fn newton_supersingular_matrix() {
        let r = ring(5, 1, 16);
        let a = mat_from_ints(&r, &[&[0, 5], &[1, 0]]);
        let f = SigmaMatrix::new(a, 1).unwrap();
        assert_eq!(newton(&f).unwrap(), pg(&[(1, 2, 2)]));
    }

    #[test]
    fn newton_diagonal_linear() {
        let r = ring(3, 1, 16);
        let a = mat_from_ints(&r, &[&[9, 0], &[0, 3]]);
        let f = SigmaMatrix::new(a, 1).unwrap();
        assert_eq!(newton(&f).unwrap(), pg(&[(1, 1, 1), (2, 1, 1)]));
    }

    #[test]
    fn newton_gaussian_unit_example() {
        // over x^2+1 at p=3: A = diag(x, 1) with twist 1 linearizes to
        // diag(x·σ(x), 1) = diag(1, 1), so the polygon is zero
        let r = WittRing::new(
            3,
            2,
            16,
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)],
        )
        .unwrap();
        let x = r.generator();
        let mut a = Mat::zero(r.clone(), 2, 2);
        a.set(0, 0, x);
        a.set(1, 1, r.one());
        let f = SigmaMatrix::new(a, 1).unwrap();
        assert_eq!(newton(&f).unwrap(), pg(&[(0, 1, 2)]));
    }

    #[test]
    fn charpoly_matches_leibniz_expansion() {
        // oracle: direct expansion of det(T I - A) over permutations
        fn leibniz(b: &Mat) -> Vec<WittElem> {
            let ring = b.ring().clone();
            let n = b.nrows();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut coeffs = vec![ring.zero(); n + 1];
            permute(&mut perm, 0, &mut |perm, sign| {
                // product of linear polynomials Π (δ_{i,perm(i)} T - a_{i,perm(i)})
                let mut poly = vec![ring.one()];
                for i in 0..n {
                    let diag = i == perm[i];
                    let a = b.get(i, perm[i]).clone();
                    let mut next = vec![ring.zero(); poly.len() + 1];
                    for (k, c) in poly.iter().enumerate() {
                        // times (-a)
                        let t = ring.mul(c, &ring.neg(&a));
                        next[k] = ring.add(&next[k], &t);
                        if diag {
                            next[k + 1] = ring.add(&next[k + 1], c);
                        }
                    }
                    poly = next;
                }
                for (k, c) in poly.iter().enumerate() {
                    let term = if sign { c.clone() } else { ring.neg(c) };
                    coeffs[k] = ring.add(&coeffs[k], &term);
                }
            });
            coeffs
        }
        fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize], bool)) {
            let n = perm.len();
            if k == n {
                // parity by counting inversions
                let mut inv = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if perm[i] > perm[j] {
                            inv += 1;
                        }
                    }
                }
                f(perm, inv % 2 == 0);
                return;
            }
            for i in k..n {
                perm.swap(k, i);
                permute(perm, k + 1, f);
                perm.swap(k, i);
            }
        }

        let r = ring(2, 2, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4usize {
            for _ in 0..5 {
                let a = Mat::from_fn(r.clone(), n, n, |_, _| {
                    let e = r.random(&mut rng);
                    if rng.gen_bool(0.3) {
                        r.mul_p_pow(&e, 1)
                    } else {
                        e
                    }
                });
                let fast = charpoly(&a).unwrap();
                let slow = leibniz(&a);
                assert_eq!(fast.len(), slow.len());
                for (x, y) in fast.iter().zip(&slow) {
                    assert_eq!(x, y, "charpoly mismatch at n={n}");
                }
            }
        }
    }

    #[test]
    fn slope_sublattice_diagonal() {
        let r = ring(3, 1, 40);
        let b = mat_from_ints(&r, &[&[1, 0], &[0, 9]]);
        let s = slope_sublattice(&b, &rat_int(1), 1, 20).unwrap();
        // span of the second basis vector
        let e2 = mat_from_ints(&r, &[&[0], &[1]]);
        assert!(lattice_eq(&s.basis, &e2, 20).unwrap());
        let lo = low_slope_sublattice(&b, &rat_int(1), 1, 20).unwrap();
        let e1 = mat_from_ints(&r, &[&[1], &[0]]);
        assert!(lattice_eq(&lo.basis, &e1, 20).unwrap());
    }

    #[test]
    fn slope_sublattice_conjugated() {
        let r = ring(3, 1, 60);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let u = random_unimodular(&r, 2, &mut rng);
            let uinv = inverse_unimodular(&u).unwrap();
            let d = mat_from_ints(&r, &[&[1, 0], &[0, 9]]);
            let b = u.mul(&d).unwrap().mul(&uinv).unwrap();
            let s = slope_sublattice(&b, &rat_int(1), 1, 30).unwrap();
            let expected = u.select_columns(&[1]);
            let expected = saturate(&expected).unwrap();
            assert!(lattice_eq(&s.basis, &expected, 30).unwrap());
            let lo = low_slope_sublattice(&b, &rat_int(1), 1, 30).unwrap();
            let expected_lo = saturate(&u.select_columns(&[0])).unwrap();
            assert!(lattice_eq(&lo.basis, &expected_lo, 30).unwrap());
        }
    }

    #[test]
    fn slope_sublattice_mixed_block() {
        // 3x3 with slopes {0, 1/2, 1/2}: block diag(1, [[0,p],[1,0]]).
        // The congruence modulus grows ~3x faster than the verification
        // precision here, hence the generous ring precision.
        let r = ring(3, 1, 160);
        let b = mat_from_ints(&r, &[&[1, 0, 0], &[0, 0, 3], &[0, 1, 0]]);
        let s = slope_sublattice(&b, &rat(1, 4), 2, 25).unwrap();
        let expected = mat_from_ints(&r, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert!(lattice_eq(&s.basis, &expected, 25).unwrap());
        assert_eq!(newton_of_linear(&s.restricted).unwrap(), pg(&[(1, 2, 2)]));
        let lo = low_slope_sublattice(&b, &rat(1, 4), 1, 25).unwrap();
        let e1 = mat_from_ints(&r, &[&[1], &[0], &[0]]);
        assert!(lattice_eq(&lo.basis, &e1, 25).unwrap());
    }

    #[test]
    fn hodge_composition_bound_randomized() {
        let r = ring(3, 2, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let exps1: Vec<u32> = (0..3).map(|_| rng.gen_range(0..3)).collect();
            let exps2: Vec<u32> = (0..3).map(|_| rng.gen_range(0..3)).collect();
            let g = SigmaMatrix::new(random_with_divisors(&r, &exps1, &mut rng), 1).unwrap();
            let h = SigmaMatrix::new(random_with_divisors(&r, &exps2, &mut rng), 1).unwrap();
            let gh = compose(&g, &h).unwrap();
            let bound = hodge(&g)
                .unwrap()
                .pointwise_sum(&hodge(&h).unwrap())
                .unwrap();
            assert!(hodge(&gh).unwrap().preceq(&bound).unwrap());
        }
    }

    #[test]
    fn newton_below_hodge_and_conjugation_invariant() {
        let r = ring(3, 2, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let exps: Vec<u32> = (0..3).map(|_| rng.gen_range(0..2)).collect();
            let a = random_with_divisors(&r, &exps, &mut rng);
            let f = SigmaMatrix::new(a.clone(), 1).unwrap();
            let nu = newton(&f).unwrap();
            let mu = hodge(&f).unwrap();
            assert!(nu.preceq(&mu).unwrap(), "Mazur inequality");
            // σ-conjugation invariance of the Newton polygon
            let u = random_unimodular(&r, 3, &mut rng);
            let uinv = inverse_unimodular(&u).unwrap();
            let conj = uinv.mul(&a).unwrap().mul(&u.frobenius(1)).unwrap();
            let fc = SigmaMatrix::new(conj, 1).unwrap();
            assert_eq!(newton(&fc).unwrap(), nu);
        }
    }

    #[test]
    fn saturate_divides_out_p_powers() {
        let r = ring(3, 1, 20);
        let x = mat_from_ints(&r, &[&[3, 0], &[0, 9], &[0, 0]]);
        let s = saturate(&x).unwrap();
        let expected = mat_from_ints(&r, &[&[1, 0], &[0, 1], &[0, 0]]);
        assert!(lattice_eq(&s, &expected, 20).unwrap());
    }
}
