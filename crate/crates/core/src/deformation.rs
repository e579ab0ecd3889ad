//! Universal-deformation data over a truncated multivariate power-series
//! ring, and the lifting criterion for Hodge-Newton filtrations.
//!
//! For a minuscule type the universal deformation of the diagonal model is
//! `F = g_univ ∘ (F_base ⊗ φ)`, where `g_univ` is a tuple of block matrices
//! that are the identity except for one corner of formal variables, and `φ`
//! acts as the Frobenius on coefficients and as `u ↦ u^p` on variables.
//!
//! Conventions fixed here (the stability analysis forces them):
//! the base crystal of type `(d, f)` is the diagonal model whose block-`i`
//! Hodge filtration occupies the *last* `f(i)` coordinates, i.e.
//! `A_i = diag(p^{[j > d-f(i)]})`; the deformation matrix `g^{(i)}` fixes the
//! first `d - f(i)` coordinates pointwise and adds variable multiples of them
//! to the filtration coordinates (so the variable block sits in rows
//! `<= d-f(i)`, columns `> d-f(i)`). Under these conventions a constant type
//! is trivially stable, and the filtration spanned by the first `d'`
//! coordinates per block survives the deformation exactly when every block
//! satisfies `d' <= d - f(i)` or `f(i) = d`.
//!
//! "Survives" means two things, both checked: the span of the first `d'`
//! coordinates stays F-stable, and the restriction of `F` to it is the
//! *undeformed* map (the lifted filtration must have constant polygons). The
//! failure witness is a matrix entry carrying a formal variable inside the
//! restricted block.

use crate::crystal::{ObCrystal, TypeDF};
use crate::error::{Error, Result};
use crate::hodge_newton::hn_eligible;
use crate::polygon::LatticePoint;
use crate::semilinear::Mat;
use crate::witt::{WittElem, WittRing};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub const MAX_VARIABLES: usize = 12;
pub const MAX_SERIES_DEGREE: u32 = 4;

/// A formal variable `u^{(block)}_{l,m}` with `1 <= m <= d-f(block) < l <= d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId {
    pub block: usize,
    pub l: usize,
    pub m: usize,
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u^({})_{{{},{}}}", self.block, self.l, self.m)
    }
}

/// Multivariate power-series ring over a Witt ring, truncated in total
/// degree, with dense exponent-vector storage.
pub struct SeriesRing {
    base: Arc<WittRing>,
    vars: Vec<VarId>,
    max_degree: u32,
    monomials: Vec<Vec<u8>>,
    index: BTreeMap<Vec<u8>, usize>,
}

impl SeriesRing {
    pub fn new(base: Arc<WittRing>, vars: Vec<VarId>, max_degree: u32) -> Result<SeriesRing> {
        if vars.len() > MAX_VARIABLES {
            return Err(Error::domain(format!(
                "{} variables exceed the desk-scale bound {MAX_VARIABLES}",
                vars.len()
            )));
        }
        if max_degree == 0 || max_degree > MAX_SERIES_DEGREE {
            return Err(Error::domain(format!(
                "truncation degree {max_degree} outside 1..={MAX_SERIES_DEGREE}"
            )));
        }
        let mut monomials = Vec::new();
        let mut current = vec![0u8; vars.len()];
        enumerate_monomials(&mut current, 0, max_degree, &mut monomials);
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Ok(SeriesRing {
            base,
            vars,
            max_degree,
            monomials,
            index,
        })
    }

    /// The variable family demanded by a minuscule type.
    pub fn for_type(base: Arc<WittRing>, t: &TypeDF, max_degree: u32) -> Result<SeriesRing> {
        let mut vars = Vec::new();
        for (i, &fi) in t.f.iter().enumerate() {
            for l in (t.d - fi + 1)..=t.d {
                for m in 1..=(t.d - fi) {
                    vars.push(VarId { block: i, l, m });
                }
            }
        }
        SeriesRing::new(base, vars, max_degree)
    }

    pub fn base(&self) -> &Arc<WittRing> {
        &self.base
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn zero(&self) -> Series {
        Series {
            coeffs: vec![self.base.zero(); self.monomials.len()],
        }
    }

    pub fn one(&self) -> Series {
        self.from_elem(self.base.one())
    }

    pub fn from_elem(&self, c: WittElem) -> Series {
        let mut s = self.zero();
        s.coeffs[0] = c;
        s
    }

    pub fn var(&self, idx: usize) -> Series {
        let mut e = vec![0u8; self.vars.len()];
        e[idx] = 1;
        let mono = self.index[&e];
        let mut s = self.zero();
        s.coeffs[mono] = self.base.one();
        s
    }

    pub fn var_by_id(&self, id: &VarId) -> Result<Series> {
        let idx = self
            .vars
            .iter()
            .position(|v| v == id)
            .ok_or_else(|| Error::domain(format!("unknown variable {id}")))?;
        Ok(self.var(idx))
    }

    pub fn add(&self, a: &Series, b: &Series) -> Series {
        Series {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| self.base.add(x, y))
                .collect(),
        }
    }

    pub fn mul(&self, a: &Series, b: &Series) -> Series {
        let mut out = self.zero();
        for (i, ca) in a.coeffs.iter().enumerate() {
            if self.base.is_zero(ca) {
                continue;
            }
            let ma = &self.monomials[i];
            let da: u32 = ma.iter().map(|&e| e as u32).sum();
            for (k, cb) in b.coeffs.iter().enumerate() {
                if self.base.is_zero(cb) {
                    continue;
                }
                let mb = &self.monomials[k];
                let db: u32 = mb.iter().map(|&e| e as u32).sum();
                if da + db > self.max_degree {
                    continue;
                }
                let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                let idx = self.index[&sum];
                let prod = self.base.mul(ca, cb);
                out.coeffs[idx] = self.base.add(&out.coeffs[idx], &prod);
            }
        }
        out
    }

    pub fn scale(&self, a: &Series, c: &WittElem) -> Series {
        Series {
            coeffs: a.coeffs.iter().map(|x| self.base.mul(x, c)).collect(),
        }
    }

    /// The Frobenius lift: σ on coefficients, `u ↦ u^p` on variables.
    pub fn phi(&self, a: &Series) -> Series {
        let p = self.base.p() as u32;
        let mut out = self.zero();
        for (i, c) in a.coeffs.iter().enumerate() {
            if self.base.is_zero(c) {
                continue;
            }
            let mono = &self.monomials[i];
            let deg: u32 = mono.iter().map(|&e| e as u32).sum();
            let fc = self.base.frobenius(c, 1);
            if deg == 0 {
                out.coeffs[0] = self.base.add(&out.coeffs[0], &fc);
                continue;
            }
            if deg * p > self.max_degree {
                continue; // truncated away
            }
            let scaled: Vec<u8> = mono.iter().map(|&e| e * p as u8).collect();
            let idx = self.index[&scaled];
            out.coeffs[idx] = self.base.add(&out.coeffs[idx], &fc);
        }
        out
    }

    pub fn is_zero(&self, a: &Series) -> bool {
        a.coeffs.iter().all(|c| self.base.is_zero(c))
    }

    /// No monomial of positive degree has a nonzero coefficient.
    pub fn is_constant(&self, a: &Series) -> bool {
        a.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| i == 0 || self.base.is_zero(c))
    }

    pub fn constant_term<'a>(&self, a: &'a Series) -> &'a WittElem {
        &a.coeffs[0]
    }

    /// First positive-degree monomial with a nonzero coefficient, rendered
    /// as a witness string.
    pub fn leading_variable_term(&self, a: &Series) -> Option<String> {
        for (i, c) in a.coeffs.iter().enumerate() {
            if i == 0 || self.base.is_zero(c) {
                continue;
            }
            let mono = &self.monomials[i];
            let parts: Vec<String> = mono
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        format!("{}", self.vars[v])
                    } else {
                        format!("{}^{}", self.vars[v], e)
                    }
                })
                .collect();
            return Some(format!(
                "{} * {}",
                self.base.format_elem(c),
                parts.join(" * ")
            ));
        }
        None
    }

    pub fn format_series(&self, a: &Series) -> String {
        let mut parts = Vec::new();
        for (i, c) in a.coeffs.iter().enumerate() {
            if self.base.is_zero(c) {
                continue;
            }
            let coeff = self.base.format_elem(c);
            if i == 0 {
                parts.push(coeff);
                continue;
            }
            let mono: Vec<String> = self.monomials[i]
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        format!("{}", self.vars[v])
                    } else {
                        format!("{}^{}", self.vars[v], e)
                    }
                })
                .collect();
            parts.push(format!("({coeff})*{}", mono.join("*")));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn enumerate_monomials(current: &mut Vec<u8>, pos: usize, budget: u32, out: &mut Vec<Vec<u8>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for e in 0..=budget {
        current[pos] = e as u8;
        enumerate_monomials(current, pos + 1, budget - e, out);
    }
    current[pos] = 0;
}

/// A truncated power series: dense coefficients over the monomial table of
/// its ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<WittElem>,
}

/// Matrix with series entries; context-passing style like the scalar rings.
#[derive(Clone, Debug)]
pub struct SeriesMat {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<Series>,
}

impl SeriesMat {
    pub fn identity(ring: &SeriesRing, n: usize) -> SeriesMat {
        let mut data = vec![ring.zero(); n * n];
        for (i, item) in data.iter_mut().enumerate().take(n * n) {
            if i % (n + 1) == 0 {
                *item = ring.one();
            }
        }
        SeriesMat {
            nrows: n,
            ncols: n,
            data,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Series) {
        self.data[i * self.ncols + j] = v;
    }

    /// Product with a constant matrix on the right.
    pub fn mul_const(&self, ring: &SeriesRing, rhs: &Mat) -> SeriesMat {
        let mut out = SeriesMat {
            nrows: self.nrows,
            ncols: rhs.ncols(),
            data: vec![ring.zero(); self.nrows * rhs.ncols()],
        };
        for i in 0..self.nrows {
            for j in 0..rhs.ncols() {
                let mut acc = ring.zero();
                for k in 0..self.ncols {
                    let term = ring.scale(self.get(i, k), rhs.get(k, j));
                    acc = ring.add(&acc, &term);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// The deformation data of a minuscule type: base crystal in the diagonal
/// normal form, the deformation matrices, and the composed family.
pub struct UniversalData {
    pub type_df: TypeDF,
    pub series: SeriesRing,
    pub base_crystal: ObCrystal,
    /// `g^{(i)}` per block.
    pub g_univ: Vec<SeriesMat>,
    /// Block `i` of the deformed Frobenius: `g^{(i+1)} · A_i`, σ-linear via
    /// the series Frobenius.
    pub f_univ: Vec<SeriesMat>,
}

/// Builds the deformation matrices over the given series ring; the ring's
/// variable family must match the type exactly.
pub fn build_g_univ(t: &TypeDF, series: SeriesRing) -> Result<UniversalData> {
    let mut expected = Vec::new();
    for (i, &fi) in t.f.iter().enumerate() {
        for l in (t.d - fi + 1)..=t.d {
            for m in 1..=(t.d - fi) {
                expected.push(VarId { block: i, l, m });
            }
        }
    }
    if series.vars() != expected.as_slice() {
        return Err(Error::domain(
            "series ring variables do not match the type's index family",
        ));
    }

    let base_ring = series.base().clone();
    let base_crystal = base_crystal_for(&base_ring, t)?;

    let d = t.d;
    let mut g_univ = Vec::with_capacity(t.r);
    for (i, &fi) in t.f.iter().enumerate() {
        let mut g = SeriesMat::identity(&series, d);
        // variable corner: rows m <= d-f(i), columns l > d-f(i); the
        // complement of the filtration is fixed pointwise
        for l in (d - fi + 1)..=d {
            for m in 1..=(d - fi) {
                let v = series.var_by_id(&VarId { block: i, l, m })?;
                g.set(m - 1, l - 1, v);
            }
        }
        g_univ.push(g);
    }

    let mut f_univ = Vec::with_capacity(t.r);
    for i in 0..t.r {
        let a_i = base_crystal.block(i);
        let g_next = &g_univ[(i + 1) % t.r];
        f_univ.push(g_next.mul_const(&series, a_i));
    }

    Ok(UniversalData {
        type_df: t.clone(),
        series,
        base_crystal,
        g_univ,
        f_univ,
    })
}

/// The diagonal model whose block-`i` filtration occupies the last `f(i)`
/// coordinates: `A_i = diag(p^{[j > d - f(i)]})`.
fn base_crystal_for(ring: &Arc<WittRing>, t: &TypeDF) -> Result<ObCrystal> {
    let blocks = (0..t.r)
        .map(|i| {
            let fi = t.f[i];
            let mut b = Mat::zero(ring.clone(), t.d, t.d);
            for j in 1..=t.d {
                let exp = if j > t.d - fi { 1 } else { 0 };
                b.set(j - 1, j - 1, ring.p_pow(exp));
            }
            b
        })
        .collect();
    ObCrystal::new(ring.clone(), 1, blocks)
}

/// The first-breakpoint rank forced by the type when the lifting theorem's
/// slope hypothesis holds: the minimum of `d - f(i)` over blocks with
/// `f(i) < d`. `None` when `f` is constantly `d`.
pub fn canonical_first_break(t: &TypeDF) -> Option<usize> {
    t.f.iter()
        .filter(|&&fi| fi < t.d)
        .map(|&fi| t.d - fi)
        .min()
}

/// The structural criterion extracted from the lifting theorem's proof: for
/// every block, either the candidate filtration fits inside the fixed
/// complement (`d' <= d - f(i)`) or the complement is trivial (`f(i) = d`).
pub fn check_structural_criterion(t: &TypeDF, d_prime: usize) -> bool {
    t.f.iter().all(|&fi| d_prime <= t.d - fi || fi == t.d)
}

/// Outcome of the deformation stability check.
#[derive(Clone, Debug)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// `(block, row, col, offending term)` of the first entry that either
    /// leaks outside the filtration span or deforms the restricted map.
    pub witness: Option<(usize, usize, usize, String)>,
}

/// Whether the span of the first `d'` coordinates per block survives the
/// deformed Frobenius: the span must stay stable and the restriction must be
/// the undeformed map (constant entries). The obstruction is linear in the
/// variables, so the verdict is insensitive to the truncation degree.
pub fn check_f_stability(u: &UniversalData, d_prime: usize) -> Result<StabilityVerdict> {
    let d = u.type_df.d;
    if d_prime == 0 || d_prime > d {
        return Err(Error::domain(format!("filtration rank {d_prime} outside 1..={d}")));
    }
    let series = &u.series;
    for (i, g) in u.f_univ.iter().enumerate() {
        // leakage below the span
        for row in d_prime..d {
            for col in 0..d_prime {
                if !series.is_zero(g.get(row, col)) {
                    let term = series.format_series(g.get(row, col));
                    return Ok(StabilityVerdict {
                        stable: false,
                        witness: Some((i, row + 1, col + 1, term)),
                    });
                }
            }
        }
        // restricted map must stay undeformed
        for row in 0..d_prime {
            for col in 0..d_prime {
                if !series.is_constant(g.get(row, col)) {
                    let term = series
                        .leading_variable_term(g.get(row, col))
                        .unwrap_or_else(|| "variable term".into());
                    return Ok(StabilityVerdict {
                        stable: false,
                        witness: Some((i, row + 1, col + 1, term)),
                    });
                }
            }
        }
    }
    Ok(StabilityVerdict {
        stable: true,
        witness: None,
    })
}

/// The lifting hypothesis at a breakpoint: the low parts of the Newton and
/// averaged Hodge polygons coincide. Degenerate cuts at the endpoints are
/// vacuously liftable.
pub fn check_theorem3_hypothesis(c: &ObCrystal, x: &LatticePoint) -> Result<bool> {
    let h = c.height();
    if x.x1 == 0 || x.x1 == h {
        return Ok(true);
    }
    if !hn_eligible(c, x)? {
        return Err(Error::domain(format!(
            "point {x} is not an eligible breakpoint"
        )));
    }
    let nu1 = c.newton()?.split_at(x.x1)?.0;
    let mu1 = c.sigma_hodge()?.split_at(x.x1)?.0;
    Ok(nu1 == mu1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::build_mu_ordinary;

    fn base(m: usize) -> Arc<WittRing> {
        WittRing::with_default_poly(3, m, 16).unwrap()
    }

    fn universal(d: usize, r: usize, f: &[usize], k: u32) -> UniversalData {
        let t = TypeDF::new(d, r, f.to_vec()).unwrap();
        let s = SeriesRing::for_type(base(r), &t, k).unwrap();
        build_g_univ(&t, s).unwrap()
    }

    #[test]
    fn series_arithmetic_basics() {
        let t = TypeDF::new(2, 1, vec![1]).unwrap();
        let s = SeriesRing::for_type(base(1), &t, 3).unwrap();
        assert_eq!(s.vars().len(), 1);
        let u = s.var(0);
        let prod = s.mul(&u, &u);
        assert!(!s.is_zero(&prod));
        // truncation: u^3 * u = 0 at degree 3
        let cube = s.mul(&prod, &u);
        assert!(s.is_zero(&s.mul(&cube, &u)));
        // φ sends u to u^p = u^3 (degree 3 survives)
        let phi_u = s.phi(&u);
        assert_eq!(phi_u, cube);
        // φ is multiplicative on constants
        let c = s.from_elem(s.base().from_int(7));
        let phic = s.phi(&c);
        assert_eq!(phic, c);
    }

    #[test]
    fn g_univ_shape() {
        // d = 2, r = 1, f = 1: one variable u_{2,1}, placed so that the
        // non-filtration coordinate is fixed: g = [[1, u],[0, 1]]
        let u = universal(2, 1, &[1], 3);
        let s = &u.series;
        let g = &u.g_univ[0];
        assert!(s.is_constant(g.get(0, 0)));
        assert!(s.is_zero(g.get(1, 0)));
        assert!(s.is_constant(g.get(1, 1)));
        assert!(!s.is_constant(g.get(0, 1)));
        // specializing the variables to zero recovers the base crystal
        for (i, fm) in u.f_univ.iter().enumerate() {
            let a = u.base_crystal.block(i);
            for row in 0..2 {
                for col in 0..2 {
                    assert_eq!(s.constant_term(fm.get(row, col)), a.get(row, col));
                }
            }
        }
    }

    #[test]
    fn trivial_types_have_no_variables() {
        for f in [[0usize, 0], [2, 2]] {
            let u = universal(2, 2, &f, 2);
            assert!(u.series.vars().is_empty());
            for d_prime in 1..=2 {
                assert!(check_f_stability(&u, d_prime).unwrap().stable);
            }
        }
    }

    #[test]
    fn structural_criterion_examples() {
        let t = TypeDF::new(2, 3, vec![2, 1, 0]).unwrap();
        assert_eq!(canonical_first_break(&t), Some(1));
        assert!(check_structural_criterion(&t, 1));
        assert!(!check_structural_criterion(&t, 2));
        let t2 = TypeDF::new(3, 2, vec![1, 1]).unwrap();
        assert!(check_structural_criterion(&t2, 2));
        assert!(!check_structural_criterion(&t2, 3));
    }

    #[test]
    fn stability_matches_structural_criterion_exhaustively() {
        for d in 1..=3usize {
            for r in 1..=3usize {
                let mut f = vec![0usize; r];
                loop {
                    let t = TypeDF::new(d, r, f.clone()).unwrap();
                    let s = SeriesRing::for_type(base(r), &t, 3).unwrap();
                    let u = build_g_univ(&t, s).unwrap();
                    for d_prime in 1..=d {
                        let verdict = check_f_stability(&u, d_prime).unwrap();
                        assert_eq!(
                            verdict.stable,
                            check_structural_criterion(&t, d_prime),
                            "d={d} r={r} f={f:?} d'={d_prime}"
                        );
                        assert_eq!(verdict.stable, verdict.witness.is_none());
                    }
                    // next type function
                    let mut pos = 0;
                    loop {
                        if pos == r {
                            break;
                        }
                        f[pos] += 1;
                        if f[pos] <= d {
                            break;
                        }
                        f[pos] = 0;
                        pos += 1;
                    }
                    if pos == r {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn stability_insensitive_to_truncation_degree() {
        let t = TypeDF::new(3, 2, vec![2, 1]).unwrap();
        let mut verdicts = Vec::new();
        for k in 1..=3 {
            let s = SeriesRing::for_type(base(2), &t, k).unwrap();
            let u = build_g_univ(&t, s).unwrap();
            verdicts.push((
                check_f_stability(&u, 1).unwrap().stable,
                check_f_stability(&u, 2).unwrap().stable,
                check_f_stability(&u, 3).unwrap().stable,
            ));
        }
        assert!(verdicts.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn violating_type_produces_witness() {
        // d = 3, f = 2 everywhere: the cut at 2 exceeds d - f = 1
        let u = universal(3, 1, &[2], 3);
        let verdict = check_f_stability(&u, 2).unwrap();
        assert!(!verdict.stable);
        let (block, row, col, term) = verdict.witness.unwrap();
        assert_eq!(block, 0);
        assert!(row <= 2 && col <= 2, "witness sits in the restricted block");
        assert!(term.contains('u'), "witness carries a formal variable: {term}");
    }

    #[test]
    fn lifting_hypothesis_on_polygons() {
        use crate::polygon::rat_int;
        let rg = WittRing::with_default_poly(3, 2, 48).unwrap();
        // ordinary-shaped type: first breakpoint shares the low part
        let t = TypeDF::new(2, 2, vec![1, 1]).unwrap();
        let c = build_mu_ordinary(rg, &t, 1).unwrap();
        let x = LatticePoint::new(2, rat_int(0));
        assert!(check_theorem3_hypothesis(&c, &x).unwrap());
        // endpoint cut is vacuously liftable
        assert!(check_theorem3_hypothesis(&c, &LatticePoint::new(0, rat_int(0))).unwrap());
    }
}
