//! Deterministic random generators for crystals, matrices and polygons.
//!
//! Everything here is driven by a caller-supplied RNG so that suites are
//! reproducible from a seed. Generated crystals are embedded at a precision
//! that already satisfies the Newton-polygon policy, computed from the exact
//! divisor exponents chosen during generation.

use crate::crystal::ObCrystal;
use crate::error::Result;
use crate::polygon::{Polygon, Rat};
use crate::semilinear::Mat;
use crate::witt::WittRing;
use num::BigInt;
use rand::Rng;
use std::sync::Arc;

/// Unit lower-triangular times diagonal `p`-powers times unit
/// upper-triangular: a random matrix with the prescribed elementary divisor
/// exponents.
pub fn random_with_divisors(ring: &Arc<WittRing>, exps: &[u32], rng: &mut impl Rng) -> Mat {
    let n = exps.len();
    let mut lo = Mat::identity(ring.clone(), n);
    let mut up = Mat::identity(ring.clone(), n);
    for i in 0..n {
        for j in 0..i {
            lo.set(i, j, ring.random(rng));
            up.set(j, i, ring.random(rng));
        }
    }
    let mut d = Mat::zero(ring.clone(), n, n);
    for i in 0..n {
        d.set(i, i, ring.p_pow(exps[i]));
    }
    lo.mul(&d).unwrap().mul(&up).unwrap()
}

pub fn random_unimodular(ring: &Arc<WittRing>, n: usize, rng: &mut impl Rng) -> Mat {
    random_with_divisors(ring, &vec![0; n], rng)
}


/// A random crystal with controlled block divisor exponents (each in
/// `0..=max_exp`), embedded at a precision meeting the Newton policy.
pub fn random_crystal(
    p: u64,
    r: usize,
    d: usize,
    m: usize,
    twist: u32,
    max_exp: u32,
    rng: &mut impl Rng,
) -> Result<ObCrystal> {
    assert!(m % r == 0, "residue degree must be a multiple of r");
    let mut all_exps: Vec<Vec<u32>> = Vec::with_capacity(r);
    let mut total: u32 = 0;
    for _ in 0..r {
        let exps: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=max_exp)).collect();
        total += exps.iter().sum::<u32>();
        all_exps.push(exps);
    }
    // φ_0 linearizes after t = m / gcd(r·a, m) steps; its determinant has
    // valuation `total`, so this precision satisfies the policy with slack
    let t = {
        let a = (r as u64) * twist as u64;
        let m64 = m as u64;
        m64 / gcd(a, m64)
    } as u32;
    let precision = t * total + d as u32 + 16;
    let ring = WittRing::with_default_poly(p, m, precision.max(16))?;
    let blocks = all_exps
        .iter()
        .map(|exps| random_with_divisors(&ring, exps, rng))
        .collect();
    ObCrystal::new(ring, twist, blocks)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A random polygon with slopes in `[0,1]` invariant under `λ ↦ 1-λ`, of
/// height `2n` with `n <= n_max`; returns `(polygon, n)`.
pub fn random_self_dual_polygon(n_max: u64, rng: &mut impl Rng) -> (Polygon, u64) {
    loop {
        let mut pairs: Vec<(Rat, u64)> = Vec::new();
        let mut half_height = 0u64;
        // paired slopes strictly below 1/2
        let candidates: [(i64, i64); 6] = [(0, 1), (1, 4), (1, 3), (1, 2), (2, 5), (3, 8)];
        for _ in 0..rng.gen_range(0..=3) {
            if half_height >= n_max {
                break;
            }
            let (num, den) = candidates[rng.gen_range(0..candidates.len())];
            if 2 * num >= den {
                continue;
            }
            let mult = rng.gen_range(1..=(n_max - half_height).min(3));
            let s = Rat::new(BigInt::from(num), BigInt::from(den));
            let t = Rat::from(BigInt::from(1)) - &s;
            pairs.push((s, mult));
            pairs.push((t, mult));
            half_height += mult;
        }
        // central slope 1/2 in even multiplicity
        if half_height < n_max && rng.gen_bool(0.5) {
            let mult = rng.gen_range(1..=(n_max - half_height).min(3));
            pairs.push((Rat::new(BigInt::from(1), BigInt::from(2)), 2 * mult));
            half_height += mult;
        }
        if half_height == 0 {
            continue;
        }
        let poly = Polygon::from_segments(pairs).unwrap();
        debug_assert!(poly.is_self_dual());
        return (poly, half_height);
    }
}
