//! Truncated unramified Witt-vector arithmetic `W(F_{p^m}) / p^N` with an
//! exactly computed Frobenius lift.
//!
//! The ring is presented as `Z[x] / (f(x), p^N)` for a monic degree-`m`
//! polynomial `f` that is irreducible mod `p`. The Frobenius lift `σ` is the
//! unique ring automorphism reducing to the `p`-power map mod `p`; its value
//! on the generator is computed once by Newton iteration (a Hensel lift of the
//! simple root `x^p` of `f` mod `p`) and then applied by substitution.
//! Elements are coefficient vectors in the power basis of the generator,
//! reduced into `[0, p^N)`, so equality is representation equality.
//!
//! Precision is a ring-level constant. Mixed-precision arithmetic is an
//! error; moving between precisions is explicit via [`WittRing::lift_elem`]
//! and [`WittRing::truncate_elem`], which treat coefficient representatives
//! as exact integers.

use crate::error::{Error, Result};
use num::{BigInt, Integer as NumInteger, One, Zero};
use rand::Rng;
use std::fmt;
use std::sync::Arc;

/// Desk-scale bounds; constructors reject parameters beyond these.
pub const MAX_PRIME: u64 = 97;
pub const MAX_DEGREE: usize = 12;
pub const MAX_PRECISION: u32 = 4096;

/// A `p`-adic valuation truncated at the ring precision `N`: either an exact
/// value `< N`, or the sentinel "at least `N`" for elements indistinguishable
/// from zero. Consumers must treat the sentinel as "unknown beyond `N`".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Val {
    Finite(u32),
    AtLeast(u32),
}

impl Val {
    pub fn is_finite(&self) -> bool {
        matches!(self, Val::Finite(_))
    }

    pub fn finite(&self) -> Option<u32> {
        match self {
            Val::Finite(v) => Some(*v),
            Val::AtLeast(_) => None,
        }
    }

    /// True when the valuation is certainly `>= bound`.
    pub fn at_least(&self, bound: u32) -> bool {
        match self {
            Val::Finite(v) => *v >= bound,
            Val::AtLeast(n) => *n >= bound,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Finite(v) => write!(f, "{v}"),
            Val::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// An element of a [`WittRing`]: power-basis coefficients in `[0, p^N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WittElem {
    coeffs: Vec<BigInt>,
}

impl WittElem {
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }
}

/// The truncated unramified extension `W(F_{p^m}) / p^N`.
pub struct WittRing {
    p: u64,
    m: usize,
    precision: u32,
    p_big: BigInt,
    modulus: BigInt,
    /// Original (unreduced) integer coefficients of the defining polynomial.
    defining_raw: Vec<BigInt>,
    /// Defining polynomial reduced into `[0, p^N)`.
    defining: Vec<BigInt>,
    /// `sigma_images[k]` is `σ^k(generator)` for `k = 0 .. m-1`.
    sigma_images: Vec<Vec<BigInt>>,
}

impl fmt::Debug for WittRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WittRing(p={}, m={}, precision={})",
            self.p, self.m, self.precision
        )
    }
}

impl WittRing {
    /// Builds the ring, checking primality and irreducibility, and computing
    /// the Frobenius lift to full precision.
    pub fn new(p: u64, m: usize, precision: u32, defining: Vec<BigInt>) -> Result<Arc<WittRing>> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        if p > MAX_PRIME {
            return Err(Error::domain(format!("prime {p} exceeds desk-scale bound {MAX_PRIME}")));
        }
        if m == 0 || m > MAX_DEGREE {
            return Err(Error::domain(format!(
                "residue degree {m} outside [1, {MAX_DEGREE}]"
            )));
        }
        if precision == 0 || precision > MAX_PRECISION {
            return Err(Error::domain(format!(
                "precision {precision} outside [1, {MAX_PRECISION}]"
            )));
        }
        if defining.len() != m + 1 {
            return Err(Error::domain(format!(
                "defining polynomial must have degree {m} (got {} coefficients)",
                defining.len()
            )));
        }
        if !defining[m].is_one() {
            return Err(Error::domain("defining polynomial must be monic"));
        }
        let fp: Vec<u64> = defining.iter().map(|c| big_to_u64_mod(c, p)).collect();
        if !fp_is_irreducible(&fp, p) {
            return Err(Error::domain("defining polynomial is reducible mod p"));
        }

        let p_big = BigInt::from(p);
        let modulus = p_big.pow(precision);
        let defining_reduced: Vec<BigInt> =
            defining.iter().map(|c| c.mod_floor(&modulus)).collect();

        let mut ring = WittRing {
            p,
            m,
            precision,
            p_big,
            modulus,
            defining_raw: defining,
            defining: defining_reduced,
            sigma_images: Vec::new(),
        };
        ring.compute_sigma()?;
        Ok(Arc::new(ring))
    }

    /// Canonical defining polynomial: the lexicographically first monic
    /// degree-`m` polynomial irreducible mod `p`.
    pub fn find_defining_poly(p: u64, m: usize) -> Vec<BigInt> {
        assert!(is_prime(p) && m >= 1 && m <= MAX_DEGREE);
        let mut coeffs = vec![0u64; m];
        loop {
            let mut f: Vec<u64> = coeffs.clone();
            f.push(1);
            if fp_is_irreducible(&f, p) {
                let mut out: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
                out.push(BigInt::one());
                return out;
            }
            // increment the coefficient vector base p
            let mut i = 0;
            loop {
                coeffs[i] += 1;
                if coeffs[i] < p {
                    break;
                }
                coeffs[i] = 0;
                i += 1;
                assert!(i < m, "no irreducible polynomial found (impossible)");
            }
        }
    }

    pub fn with_default_poly(p: u64, m: usize, precision: u32) -> Result<Arc<WittRing>> {
        WittRing::new(p, m, precision, Self::find_defining_poly(p, m))
    }

    fn compute_sigma(&mut self) -> Result<()> {
        // start: x^p mod (f, p), a simple root of f mod p since f is separable
        let fp: Vec<u64> = self
            .defining
            .iter()
            .map(|c| big_to_u64_mod(c, self.p))
            .collect();
        let x = vec![0, 1];
        let s0 = fp_powmod(&x, self.p, &fp, self.p);
        let mut s: Vec<BigInt> = (0..self.m)
            .map(|i| BigInt::from(*s0.get(i).unwrap_or(&0)))
            .collect();

        // f'(x)
        let mut deriv: Vec<BigInt> = Vec::with_capacity(self.m);
        for i in 1..=self.m {
            deriv.push(&self.defining_raw[i] * BigInt::from(i as u64));
        }

        let mut e: u32 = 1;
        while e < self.precision {
            e = (2 * e).min(self.precision);
            let modulus = self.p_big.pow(e);
            let def: Vec<BigInt> = self.defining_raw.iter().map(|c| c.mod_floor(&modulus)).collect();
            let fs = bp_eval_elem(&self.defining_raw, &s, &def, &modulus, self.m);
            let dfs = bp_eval_elem(&deriv, &s, &def, &modulus, self.m);
            let inv = bp_inv(&dfs, &def, self.p, e, self.m)
                .ok_or_else(|| Error::domain("defining polynomial not separable mod p"))?;
            let delta = bp_mul(&fs, &inv, &def, &modulus, self.m);
            s = bp_sub(&s, &delta, &modulus);
        }

        // sanity: f(σ(x)) = 0 at full precision, σ(x) = x^p mod p
        let fs = bp_eval_elem(&self.defining_raw, &s, &self.defining, &self.modulus, self.m);
        if !fs.iter().all(|c| c.is_zero()) {
            return Err(Error::domain("Frobenius lift failed to converge"));
        }

        let mut images: Vec<Vec<BigInt>> = Vec::with_capacity(self.m);
        let mut gen = vec![BigInt::zero(); self.m];
        if self.m > 1 {
            gen[1] = BigInt::one();
        } else {
            // m = 1: the generator is the root of the linear polynomial
            gen[0] = (-&self.defining_raw[0]).mod_floor(&self.modulus);
        }
        images.push(gen);
        for k in 1..self.m {
            let prev = images[k - 1].clone();
            images.push(bp_eval_elem(&prev, &s, &self.defining, &self.modulus, self.m));
        }
        self.sigma_images = images;
        Ok(())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn defining_poly(&self) -> &[BigInt] {
        &self.defining_raw
    }

    /// Same `(p, m, defining)` data, possibly at a different precision.
    pub fn same_structure(&self, other: &WittRing) -> bool {
        self.p == other.p && self.m == other.m && self.defining_raw == other.defining_raw
    }

    /// Identical ring for arithmetic purposes (structure and precision).
    pub fn same_ring(&self, other: &WittRing) -> bool {
        self.same_structure(other) && self.precision == other.precision
    }

    pub fn zero(&self) -> WittElem {
        WittElem {
            coeffs: vec![BigInt::zero(); self.m],
        }
    }

    pub fn one(&self) -> WittElem {
        self.from_int(1)
    }

    pub fn generator(&self) -> WittElem {
        WittElem {
            coeffs: self.sigma_images[0].clone(),
        }
    }

    pub fn from_int(&self, n: i64) -> WittElem {
        let mut coeffs = vec![BigInt::zero(); self.m];
        coeffs[0] = BigInt::from(n).mod_floor(&self.modulus);
        WittElem { coeffs }
    }

    /// Builds an element from power-basis coefficients (at most `m`).
    pub fn from_coeffs(&self, raw: Vec<BigInt>) -> Result<WittElem> {
        if raw.len() > self.m {
            return Err(Error::domain(format!(
                "element has {} coefficients, ring degree is {}",
                raw.len(),
                self.m
            )));
        }
        let mut coeffs: Vec<BigInt> = raw.iter().map(|c| c.mod_floor(&self.modulus)).collect();
        coeffs.resize(self.m, BigInt::zero());
        Ok(WittElem { coeffs })
    }

    pub fn is_zero(&self, a: &WittElem) -> bool {
        a.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_unit(&self, a: &WittElem) -> bool {
        matches!(self.valuation(a), Val::Finite(0))
    }

    pub fn add(&self, a: &WittElem, b: &WittElem) -> WittElem {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x + y).mod_floor(&self.modulus))
            .collect();
        WittElem { coeffs }
    }

    pub fn sub(&self, a: &WittElem, b: &WittElem) -> WittElem {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x - y).mod_floor(&self.modulus))
            .collect();
        WittElem { coeffs }
    }

    pub fn neg(&self, a: &WittElem) -> WittElem {
        let coeffs = a
            .coeffs
            .iter()
            .map(|x| (-x).mod_floor(&self.modulus))
            .collect();
        WittElem { coeffs }
    }

    pub fn mul(&self, a: &WittElem, b: &WittElem) -> WittElem {
        WittElem {
            coeffs: bp_mul(&a.coeffs, &b.coeffs, &self.defining, &self.modulus, self.m),
        }
    }

    /// `p^k` as a ring element.
    pub fn p_pow(&self, k: u32) -> WittElem {
        let mut coeffs = vec![BigInt::zero(); self.m];
        coeffs[0] = self.p_big.pow(k).mod_floor(&self.modulus);
        WittElem { coeffs }
    }

    pub fn mul_p_pow(&self, a: &WittElem, k: u32) -> WittElem {
        let f = self.p_big.pow(k);
        let coeffs = a
            .coeffs
            .iter()
            .map(|c| (c * &f).mod_floor(&self.modulus))
            .collect();
        WittElem { coeffs }
    }

    /// Inverse of a unit found by Hensel lifting its mod-`p` inverse.
    pub fn inv(&self, a: &WittElem) -> Result<WittElem> {
        bp_inv(&a.coeffs, &self.defining, self.p, self.precision, self.m)
            .map(|coeffs| WittElem { coeffs })
            .ok_or_else(|| Error::domain("element is not a unit"))
    }

    /// Applies `σ^k`; `k` is normalized mod `m`.
    pub fn frobenius(&self, a: &WittElem, k: i64) -> WittElem {
        let k = k.rem_euclid(self.m as i64) as usize;
        if k == 0 || self.m == 1 {
            return a.clone();
        }
        WittElem {
            coeffs: bp_eval_elem(
                &a.coeffs,
                &self.sigma_images[k],
                &self.defining,
                &self.modulus,
                self.m,
            ),
        }
    }

    /// Max `v` with all coefficients divisible by `p^v`, truncated at `N`.
    pub fn valuation(&self, a: &WittElem) -> Val {
        let mut best: Option<u32> = None;
        for c in &a.coeffs {
            if c.is_zero() {
                continue;
            }
            let mut v = 0u32;
            let mut tmp = c.clone();
            loop {
                let (q, r) = tmp.div_rem(&self.p_big);
                if !r.is_zero() {
                    break;
                }
                v += 1;
                tmp = q;
                if v >= self.precision {
                    break;
                }
            }
            best = Some(best.map_or(v, |b| b.min(v)));
            if best == Some(0) {
                return Val::Finite(0);
            }
        }
        match best {
            Some(v) if v < self.precision => Val::Finite(v),
            _ => Val::AtLeast(self.precision),
        }
    }

    /// Exact division by `p^k`; errors when some coefficient is not divisible.
    /// The result is well-defined modulo `p^(N-k)`.
    pub fn div_exact_p(&self, a: &WittElem, k: u32) -> Result<WittElem> {
        if k == 0 {
            return Ok(a.clone());
        }
        let f = self.p_big.pow(k);
        let mut coeffs = Vec::with_capacity(self.m);
        for c in &a.coeffs {
            let (q, r) = c.div_rem(&f);
            if !r.is_zero() {
                return Err(Error::domain("element not divisible by requested p-power"));
            }
            coeffs.push(q);
        }
        Ok(WittElem { coeffs })
    }

    /// Canonical lift of an element of a lower-precision ring with the same
    /// structure: representatives are reused as exact integers.
    pub fn lift_elem(&self, a: &WittElem) -> WittElem {
        WittElem {
            coeffs: a.coeffs.iter().map(|c| c.mod_floor(&self.modulus)).collect(),
        }
    }

    /// Reduction of an element of a higher-precision ring with the same
    /// structure.
    pub fn truncate_elem(&self, a: &WittElem) -> WittElem {
        self.lift_elem(a)
    }

    /// Uniformly random element (deterministic given the generator state).
    pub fn random(&self, rng: &mut impl Rng) -> WittElem {
        let coeffs = (0..self.m).map(|_| random_below(rng, &self.modulus)).collect();
        WittElem { coeffs }
    }

    pub fn random_unit(&self, rng: &mut impl Rng) -> WittElem {
        loop {
            let a = self.random(rng);
            if self.is_unit(&a) {
                return a;
            }
        }
    }

    pub fn format_elem(&self, a: &WittElem) -> String {
        let mut parts = Vec::new();
        for (i, c) in a.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match i {
                0 => parts.push(format!("{c}")),
                1 => parts.push(format!("{c}*x")),
                _ => parts.push(format!("{c}*x^{i}")),
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

fn random_below(rng: &mut impl Rng, bound: &BigInt) -> BigInt {
    let bytes = ((bound.bits() + 7) / 8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        let candidate = BigInt::from_bytes_le(num::bigint::Sign::Plus, &buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn big_to_u64_mod(c: &BigInt, p: u64) -> u64 {
    let r = c.mod_floor(&BigInt::from(p));
    let (_, digits) = r.to_u64_digits();
    *digits.first().unwrap_or(&0)
}

// ---- BigInt polynomial arithmetic mod (defining, modulus) ----

fn bp_reduce(mut v: Vec<BigInt>, defining: &[BigInt], modulus: &BigInt, m: usize) -> Vec<BigInt> {
    for deg in (m..v.len()).rev() {
        if v[deg].is_zero() {
            continue;
        }
        let c = std::mem::take(&mut v[deg]);
        for i in 0..m {
            let t = &c * &defining[i];
            v[deg - m + i] -= t;
        }
        // defining[m] = 1, so the leading term cancels exactly
    }
    v.truncate(m);
    v.resize(m, BigInt::zero());
    for c in v.iter_mut() {
        *c = c.mod_floor(modulus);
    }
    v
}

fn bp_mul(a: &[BigInt], b: &[BigInt], defining: &[BigInt], modulus: &BigInt, m: usize) -> Vec<BigInt> {
    let mut prod = vec![BigInt::zero(); a.len() + b.len()];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            prod[i + j] += x * y;
        }
    }
    bp_reduce(prod, defining, modulus, m)
}

fn bp_sub(a: &[BigInt], b: &[BigInt], modulus: &BigInt) -> Vec<BigInt> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).mod_floor(modulus))
        .collect()
}

/// Horner evaluation of an integer-coefficient polynomial at a ring element.
/// Used both for σ-substitution (coefficients of an element in the generator
/// power basis) and for the Newton iteration on the defining polynomial.
fn bp_eval_elem(
    poly: &[BigInt],
    point: &[BigInt],
    defining: &[BigInt],
    modulus: &BigInt,
    m: usize,
) -> Vec<BigInt> {
    let mut acc = vec![BigInt::zero(); m];
    for c in poly.iter().rev() {
        acc = bp_mul(&acc, point, defining, modulus, m);
        acc[0] += c;
        acc[0] = acc[0].mod_floor(modulus);
    }
    acc
}

/// Inverse of a unit in `Z[x]/(f, p^e)`: mod-`p` inverse by extended Euclid,
/// then Newton doubling `y <- y(2 - ay)`.
fn bp_inv(a: &[BigInt], defining: &[BigInt], p: u64, target: u32, m: usize) -> Option<Vec<BigInt>> {
    let fp_def: Vec<u64> = defining.iter().map(|c| big_to_u64_mod(c, p)).collect();
    let fp_a: Vec<u64> = a.iter().map(|c| big_to_u64_mod(c, p)).collect();
    let inv0 = fp_inv_mod(&fp_a, &fp_def, p)?;
    let mut y: Vec<BigInt> = (0..m)
        .map(|i| BigInt::from(*inv0.get(i).unwrap_or(&0)))
        .collect();
    let p_big = BigInt::from(p);
    let mut e: u32 = 1;
    while e < target {
        e = (2 * e).min(target);
        let modulus = p_big.pow(e);
        let def: Vec<BigInt> = defining.iter().map(|c| c.mod_floor(&modulus)).collect();
        let ay = bp_mul(a, &y, &def, &modulus, m);
        let mut two_minus = vec![BigInt::zero(); m];
        two_minus[0] = BigInt::from(2);
        let two_minus = bp_sub(&two_minus, &ay, &modulus);
        y = bp_mul(&y, &two_minus, &def, &modulus, m);
    }
    Some(y)
}

// ---- F_p[x] helpers on small coefficient vectors ----

fn fp_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    fp_trim(&mut out);
    out
}

fn fp_rem(mut a: Vec<u64>, f: &[u64], p: u64) -> Vec<u64> {
    // f monic after normalization by the caller
    let df = f.len() - 1;
    while a.len() > df {
        let lead = a[a.len() - 1];
        if lead != 0 {
            let shift = a.len() - 1 - df;
            for i in 0..=df {
                let idx = shift + i;
                let sub = (lead * f[i]) % p;
                a[idx] = (a[idx] + p - sub) % p;
            }
        }
        a.pop();
        fp_trim(&mut a);
        if a.is_empty() {
            break;
        }
    }
    a
}

fn fp_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    fp_rem(fp_mul(a, b, p), f, p)
}

fn fp_powmod(base: &[u64], exp: u64, f: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut base = fp_rem(base.to_vec(), f, p);
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = fp_mulmod(&result, &base, f, p);
        }
        base = fp_mulmod(&base, &base, f, p);
        e >>= 1;
    }
    result
}

fn fp_scalar_inv(a: u64, p: u64) -> u64 {
    // Fermat: a^(p-2) mod p
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

fn fp_make_monic(mut a: Vec<u64>, p: u64) -> Vec<u64> {
    fp_trim(&mut a);
    if let Some(&lead) = a.last() {
        if lead != 1 {
            let inv = fp_scalar_inv(lead, p);
            for c in a.iter_mut() {
                *c = *c * inv % p;
            }
        }
    }
    a
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = fp_make_monic(a.to_vec(), p);
    let mut b = fp_make_monic(b.to_vec(), p);
    while !b.is_empty() {
        let r = fp_rem(a.clone(), &b, p);
        a = b;
        b = fp_make_monic(r, p);
    }
    a
}

/// Extended Euclid in `F_p[x]` giving the inverse of `a` mod the monic
/// irreducible `f`; `None` when `a ≡ 0`.
fn fp_inv_mod(a: &[u64], f: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut a = fp_rem(a.to_vec(), f, p);
    fp_trim(&mut a);
    if a.is_empty() {
        return None;
    }
    // invariants: r0 = s0*a mod f, r1 = s1*a mod f
    let mut r0 = f.to_vec();
    let mut r1 = a;
    let mut s0: Vec<u64> = Vec::new();
    let mut s1: Vec<u64> = vec![1];
    while !r1.is_empty() {
        let (q, r) = fp_divmod(&r0, &r1, p);
        let qs1 = fp_mul(&q, &s1, p);
        let s2 = fp_sub(&s0, &qs1, p);
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s2;
    }
    // r0 = gcd, a nonzero constant for irreducible f
    if r0.len() != 1 {
        return None;
    }
    let scale = fp_scalar_inv(r0[0], p);
    let mut out: Vec<u64> = s0.iter().map(|&c| c * scale % p).collect();
    out = fp_rem(out, f, p);
    Some(out)
}

fn fp_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = *a.get(i).unwrap_or(&0);
        let y = *b.get(i).unwrap_or(&0);
        out[i] = (x + p - y % p) % p;
    }
    fp_trim(&mut out);
    out
}

fn fp_divmod(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut rem = a.to_vec();
    fp_trim(&mut rem);
    let db = b.len() - 1;
    let lead_inv = fp_scalar_inv(b[db], p);
    if rem.len() <= db {
        return (Vec::new(), rem);
    }
    let mut quot = vec![0u64; rem.len() - db];
    while rem.len() > db {
        let lead = rem[rem.len() - 1];
        let shift = rem.len() - 1 - db;
        let q = lead * lead_inv % p;
        if q != 0 {
            quot[shift] = q;
            for i in 0..=db {
                let sub = q * b[i] % p;
                rem[shift + i] = (rem[shift + i] + p - sub) % p;
            }
        }
        rem.pop();
        fp_trim(&mut rem);
        if rem.is_empty() {
            break;
        }
    }
    fp_trim(&mut quot);
    (quot, rem)
}

/// Rabin test: `f` of degree `m` is irreducible over `F_p` iff
/// `x^(p^m) = x mod f` and `gcd(x^(p^(m/q)) - x, f) = 1` for every prime
/// divisor `q` of `m`.
fn fp_is_irreducible(f: &[u64], p: u64) -> bool {
    let mut f = f.to_vec();
    fp_trim(&mut f);
    if f.len() < 2 {
        return false;
    }
    let f = fp_make_monic(f, p);
    let m = f.len() - 1;
    if m == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    // x^(p^k) by iterated p-powering
    let frob = |k: usize| -> Vec<u64> {
        let mut h = x.clone();
        for _ in 0..k {
            h = fp_powmod(&h, p, &f, p);
        }
        h
    };
    if fp_sub(&frob(m), &x, p) != Vec::<u64>::new() {
        return false;
    }
    let mut mm = m;
    let mut primes = Vec::new();
    let mut d = 2;
    while d * d <= mm {
        if mm % d == 0 {
            primes.push(d);
            while mm % d == 0 {
                mm /= d;
            }
        }
        d += 1;
    }
    if mm > 1 {
        primes.push(mm);
    }
    for q in primes {
        let h = frob(m / q);
        let g = fp_sub(&h, &x, p);
        let gcd = fp_gcd(&g, &f, p);
        if gcd.len() != 1 {
            return false;
        }
    }
    true
}
