//! Graded F-crystals with endomorphism structure over a point.
//!
//! An [`ObCrystal`] is a free module of rank `h = r·d` over a truncated Witt
//! ring, split by the action of the maximal order of an unramified degree-`r`
//! extension into `r` blocks of rank `d`, together with a σ^a-linear map `F`
//! sending block `i` into block `i+1` (indices mod `r`). Block `i`'s incoming
//! map is `F_{i-1}`, and the residue field must contain `F_{p^r}` (`r | m`)
//! for the block decomposition to exist.
//!
//! Index conventions: `blocks[i]` is the matrix of `F_i : M^(i) → M^(i+1)`.
//! The relative-position polygon list ([`ObCrystal::hodge_blocks`]) is
//! indexed by *target* block: entry `i` is the elementary divisor polygon of
//! `F_{i-1}`, measuring `M^(i)` against `F_{i-1} M^(i-1)`.

use crate::error::{Error, Result};
use crate::polygon::{Polygon, Rat};
use crate::semilinear::{self, hodge_of_mat, inverse_unimodular, Mat, SigmaMatrix};
use crate::witt::WittRing;
use num::{BigInt, ToPrimitive};
use std::sync::Arc;

/// A σ^a-F-crystal with an unramified endomorphism grading. See module docs.
#[derive(Clone, Debug)]
pub struct ObCrystal {
    ring: Arc<WittRing>,
    r: usize,
    d: usize,
    twist: u32,
    blocks: Vec<Mat>,
}

impl ObCrystal {
    /// Validates the grading constraint `r | m` and injectivity of every
    /// block map at the working precision.
    pub fn new(ring: Arc<WittRing>, twist: u32, blocks: Vec<Mat>) -> Result<ObCrystal> {
        let r = blocks.len();
        if r == 0 {
            return Err(Error::domain("a crystal needs at least one block"));
        }
        if ring.degree() % r != 0 {
            return Err(Error::domain(format!(
                "residue degree {} is not a multiple of the block count {r}",
                ring.degree()
            )));
        }
        if twist == 0 {
            return Err(Error::domain("twist must be at least 1"));
        }
        let d = blocks[0].nrows();
        for b in &blocks {
            if !b.is_square() || b.nrows() != d {
                return Err(Error::domain("all blocks must be square of equal size"));
            }
            if !b.ring().same_ring(&ring) {
                return Err(Error::RingMismatch);
            }
            // injectivity modulo precision: every elementary divisor visible
            let s = semilinear::smith(b)?;
            s.finite_exponents(&ring)?;
        }
        Ok(ObCrystal {
            ring,
            r,
            d,
            twist,
            blocks,
        })
    }

    pub fn ring(&self) -> &Arc<WittRing> {
        &self.ring
    }

    pub fn block_count(&self) -> usize {
        self.r
    }

    pub fn block_rank(&self) -> usize {
        self.d
    }

    /// Total module rank `h = r·d`.
    pub fn height(&self) -> u64 {
        (self.r * self.d) as u64
    }

    pub fn twist(&self) -> u32 {
        self.twist
    }

    pub fn blocks(&self) -> &[Mat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Mat {
        &self.blocks[i % self.r]
    }

    /// `F_i` as a semilinear map.
    pub fn sigma_block(&self, i: usize) -> SigmaMatrix {
        SigmaMatrix {
            mat: self.blocks[i % self.r].clone(),
            twist: self.twist,
        }
    }

    /// The composite `φ_i = F_{i+r-1} ∘ ⋯ ∘ F_{i+1} ∘ F_i` on block `i`,
    /// a σ^{r·a}-linear endomorphism of `M^(i)`.
    pub fn phi(&self, i: usize) -> Result<SigmaMatrix> {
        let mut acc = self.sigma_block(i);
        for k in 1..self.r {
            acc = semilinear::compose(&self.sigma_block(i + k), &acc)?;
        }
        Ok(acc)
    }

    /// Relative-position polygons `m_i`, indexed by target block:
    /// entry `i` is the elementary divisor polygon of `F_{i-1}`.
    pub fn hodge_blocks(&self) -> Result<Vec<Polygon>> {
        (0..self.r)
            .map(|i| hodge_of_mat(&self.blocks[(i + self.r - 1) % self.r]))
            .collect()
    }

    /// Hodge polygon of the whole module: the sorted multiset union of all
    /// block relative positions.
    pub fn hodge(&self) -> Result<Polygon> {
        let mut acc = Polygon::empty();
        for m in self.hodge_blocks()? {
            acc = acc.concat(&m);
        }
        Ok(acc)
    }

    /// Reduced Galois-averaged Hodge polygon: the pointwise sum of all block
    /// relative positions (height `d`).
    pub fn sigma_hodge_reduced(&self) -> Result<Polygon> {
        let ms = self.hodge_blocks()?;
        let mut acc = ms[0].clone();
        for m in &ms[1..] {
            acc = acc.pointwise_sum(m)?;
        }
        Ok(acc)
    }

    /// Galois-averaged Hodge polygon of height `h`; its multiplicities are
    /// all divisible by `r`.
    pub fn sigma_hodge(&self) -> Result<Polygon> {
        self.sigma_hodge_reduced()?.r_inflate(self.r as u64)
    }

    /// Hodge polygon of each composite `φ_i`.
    pub fn per_block_hodge_of_phi(&self) -> Result<Vec<Polygon>> {
        (0..self.r).map(|i| semilinear::hodge(&self.phi(i)?)).collect()
    }

    /// Reduced Newton polygon (height `d`): the Newton polygon of `φ_0`. The
    /// blocks are mutually isogenous, so the choice of block is immaterial;
    /// [`ObCrystal::newton_reduced_all_blocks`] checks that on demand.
    pub fn newton_reduced(&self) -> Result<Polygon> {
        semilinear::newton(&self.phi(0)?)
    }

    /// Newton polygons of every `φ_i`, for cross-validation.
    pub fn newton_reduced_all_blocks(&self) -> Result<Vec<Polygon>> {
        (0..self.r).map(|i| semilinear::newton(&self.phi(i)?)).collect()
    }

    /// Newton polygon of height `h`: slope `λ` appears with multiplicity `m`
    /// iff `rλ` appears in the reduced polygon with multiplicity `m/r`.
    pub fn newton(&self) -> Result<Polygon> {
        self.newton_reduced()?.r_inflate(self.r as u64)
    }

    /// `ν = μ̄`: the Newton polygon meets its upper bound.
    pub fn is_mu_ordinary(&self) -> Result<bool> {
        Ok(self.newton()? == self.sigma_hodge()?)
    }

    /// The combinatorial type of a minuscule crystal: `f(i)` counts the
    /// slope-1 entries of the relative position at target block `i`.
    pub fn type_of(&self) -> Result<TypeDF> {
        let one = Rat::from(BigInt::from(1));
        let mut f = Vec::with_capacity(self.r);
        for (i, m) in self.hodge_blocks()?.iter().enumerate() {
            let mut ones = 0u64;
            for (s, mult) in m.segments() {
                if s.is_integer() && (*s == one || s.to_integer().to_u64() == Some(0)) {
                    if *s == one {
                        ones += mult;
                    }
                } else {
                    return Err(Error::NonMinuscule(format!(
                        "block {i} has relative position slope {s} outside {{0, 1}}"
                    )));
                }
            }
            f.push(ones as usize);
        }
        TypeDF::new(self.d, self.r, f)
    }

    /// Block-diagonal direct sum; both summands must share the ring, block
    /// count and twist.
    pub fn direct_sum(&self, other: &ObCrystal) -> Result<ObCrystal> {
        if self.r != other.r || self.twist != other.twist {
            return Err(Error::domain("direct sum requires matching grading and twist"));
        }
        if !self.ring.same_ring(&other.ring) {
            return Err(Error::RingMismatch);
        }
        let d1 = self.d;
        let d2 = other.d;
        let blocks = (0..self.r)
            .map(|i| {
                let a = &self.blocks[i];
                let b = &other.blocks[i];
                Mat::from_fn(self.ring.clone(), d1 + d2, d1 + d2, |row, col| {
                    if row < d1 && col < d1 {
                        a.get(row, col).clone()
                    } else if row >= d1 && col >= d1 {
                        b.get(row - d1, col - d1).clone()
                    } else {
                        self.ring.zero()
                    }
                })
            })
            .collect();
        ObCrystal::new(self.ring.clone(), self.twist, blocks)
    }

    /// Equivariant change of basis `F_i ↦ g_{i+1}^{-1} · F_i · σ^a(g_i)` for
    /// a tuple of unimodular block matrices. Newton and averaged Hodge data
    /// are invariant under this.
    pub fn base_change(&self, g: &[Mat]) -> Result<ObCrystal> {
        if g.len() != self.r {
            return Err(Error::domain("need one basis matrix per block"));
        }
        let mut blocks = Vec::with_capacity(self.r);
        for i in 0..self.r {
            let gi_next_inv = inverse_unimodular(&g[(i + 1) % self.r])?;
            let new_block = gi_next_inv
                .mul(&self.blocks[i])?
                .mul(&g[i].frobenius(self.twist as i64))?;
            blocks.push(new_block);
        }
        ObCrystal::new(self.ring.clone(), self.twist, blocks)
    }

    /// Minimum working precision for a trustworthy Newton polygon.
    pub fn newton_policy_min(&self) -> Result<u32> {
        semilinear::newton_policy_min(&self.phi(0)?)
    }

    /// Minimum working precision for decomposition work: saturation and
    /// unimodularity checks consume extra digits beyond the Newton policy.
    pub fn decomposition_policy_min(&self) -> Result<u32> {
        let newton = self.newton_policy_min()?;
        let total = self
            .hodge()?
            .total()
            .to_integer()
            .to_u32()
            .ok_or_else(|| Error::domain("hodge total out of range"))?;
        Ok(newton.max(2 * total + 16))
    }

    /// Re-embeds the crystal in a ring of the same structure at precision
    /// `n`, treating entry representatives as exact integers.
    pub fn lift_to_precision(&self, n: u32) -> Result<ObCrystal> {
        if n == self.ring.precision() {
            return Ok(self.clone());
        }
        let ring = WittRing::new(
            self.ring.p(),
            self.ring.degree(),
            n,
            self.ring.defining_poly().to_vec(),
        )?;
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.transport_to(&ring))
            .collect::<Result<Vec<_>>>()?;
        ObCrystal::new(ring, self.twist, blocks)
    }

    /// No-op when already at least at precision `n`.
    pub fn lift_to_at_least(&self, n: u32) -> Result<ObCrystal> {
        if self.ring.precision() >= n {
            Ok(self.clone())
        } else {
            self.lift_to_precision(n)
        }
    }
}

/// The combinatorial type `(d, f)` of a minuscule crystal, optionally with
/// the exponent function of an elementary isoclinic building block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDF {
    pub d: usize,
    pub r: usize,
    pub f: Vec<usize>,
    /// Exponents of an elementary module (`F` multiplies strand coordinates
    /// by `p^{a(i)}` while shifting blocks); optional.
    pub a: Option<Vec<u32>>,
}

impl TypeDF {
    pub fn new(d: usize, r: usize, f: Vec<usize>) -> Result<TypeDF> {
        if f.len() != r {
            return Err(Error::domain(format!(
                "type function has {} values for {r} blocks",
                f.len()
            )));
        }
        if f.iter().any(|&v| v > d) {
            return Err(Error::domain(format!("type values must lie in 0..={d}")));
        }
        Ok(TypeDF { d, r, f, a: None })
    }

    pub fn distinct_f_values(&self) -> usize {
        let mut vals: Vec<usize> = self.f.clone();
        vals.sort_unstable();
        vals.dedup();
        vals.len()
    }
}

/// Closed form for the reduced averaged Hodge polygon of a minuscule type:
/// entry `a_j` counts the blocks with `f(i) > d - j`.
pub fn mu_ordinary_polygon(t: &TypeDF) -> Polygon {
    let entries: Vec<(Rat, u64)> = (1..=t.d)
        .map(|j| {
            let aj = t.f.iter().filter(|&&fi| fi > t.d - j).count();
            (Rat::from(BigInt::from(aj as u64)), 1)
        })
        .collect();
    Polygon::from_segments(entries).expect("counts are nonnegative")
}

/// The elementary isoclinic crystal: `r` blocks of rank `d'` with
/// `F_i = p^{a(i)} · Id`, of slope `Σ a(i) / r`.
pub fn build_elementary(
    ring: Arc<WittRing>,
    r: usize,
    d_prime: usize,
    a: &[u32],
    twist: u32,
) -> Result<ObCrystal> {
    if a.len() != r {
        return Err(Error::domain("need one exponent per block"));
    }
    let blocks = (0..r)
        .map(|i| {
            let mut b = Mat::zero(ring.clone(), d_prime, d_prime);
            for k in 0..d_prime {
                b.set(k, k, ring.p_pow(a[i]));
            }
            b
        })
        .collect();
    ObCrystal::new(ring, twist, blocks)
}

/// The diagonal model of the crystal with extremal Newton polygon for a
/// minuscule type: strand `j` of block `i` is multiplied by `p` exactly when
/// the incoming map at block `i+1` has a slope-1 divisor there. Exponents are
/// indexed by the *target* block so that [`ObCrystal::type_of`] returns `t`.
pub fn build_mu_ordinary(ring: Arc<WittRing>, t: &TypeDF, twist: u32) -> Result<ObCrystal> {
    let blocks = (0..t.r)
        .map(|i| {
            let f_target = t.f[(i + 1) % t.r];
            let mut b = Mat::zero(ring.clone(), t.d, t.d);
            for j in 1..=t.d {
                let exp = if f_target > t.d - j { 1 } else { 0 };
                b.set(j - 1, j - 1, ring.p_pow(exp));
            }
            b
        })
        .collect();
    ObCrystal::new(ring, twist, blocks)
}
