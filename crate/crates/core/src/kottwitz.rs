//! Slope-vector criteria in the general-linear case: dominance of Newton
//! below Hodge data, block-sum matching at a parabolic cut, and strict slope
//! separation across the cut. For graded crystals the vectors live on the
//! reduced side (length `d`), where the Newton point is the reduced Newton
//! polygon and the Hodge point is the reduced averaged Hodge polygon.

use crate::crystal::ObCrystal;
use crate::error::{Error, Result};
use crate::polygon::{LatticePoint, Polygon, Rat};
use num::Zero;

/// Newton/Hodge slope vectors with a parabolic cut `0 < j < n`.
#[derive(Clone, Debug)]
pub struct GroupData {
    pub n: usize,
    pub nu: Vec<Rat>,
    pub mu: Vec<Rat>,
    pub j: usize,
    /// `1` means the split general-linear case; larger values record the
    /// residue degree of the descended datum.
    pub res_degree: usize,
    /// Set when some Hodge entry is not an integer (possible for
    /// non-minuscule data on the reduced side).
    pub non_minuscule: bool,
}

impl GroupData {
    pub fn new(nu: Vec<Rat>, mu: Vec<Rat>, j: usize, res_degree: usize) -> Result<GroupData> {
        let n = nu.len();
        if mu.len() != n {
            return Err(Error::domain("nu and mu must have equal length"));
        }
        if n == 0 || j == 0 || j >= n {
            return Err(Error::domain(format!("cut {j} not interior to 1..{n}")));
        }
        if res_degree == 0 {
            return Err(Error::domain("residue degree must be positive"));
        }
        for v in [&nu, &mu] {
            if v.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::domain("slope vectors must be nondecreasing"));
            }
        }
        let non_minuscule = mu.iter().any(|x| !x.is_integer());
        Ok(GroupData {
            n,
            nu,
            mu,
            j,
            res_degree,
            non_minuscule,
        })
    }
}

/// Dominance: partial sums of `nu - mu` are nonnegative, with equality at
/// the full length.
pub fn preceq_vec(nu: &[Rat], mu: &[Rat]) -> Result<bool> {
    if nu.len() != mu.len() {
        return Err(Error::HeightMismatch(nu.len() as u64, mu.len() as u64));
    }
    let mut acc = Rat::zero();
    for (a, b) in nu.iter().zip(mu) {
        acc += a - b;
        if acc < Rat::zero() {
            return Ok(false);
        }
    }
    Ok(acc.is_zero())
}

/// Strict slope separation across the cut: every entry after position `j`
/// strictly exceeds every entry up to it. For a nondecreasing vector this is
/// `nu[j] > nu[j-1]` (1-based: `ν_{j+1} > ν_j`), i.e. `j` is a breakpoint.
pub fn in_y_m_plus(nu: &[Rat], j: usize) -> Result<bool> {
    if j == 0 || j >= nu.len() {
        return Err(Error::domain(format!("cut {j} out of range")));
    }
    Ok(nu[j] > nu[j - 1])
}

/// Block-sum matching: the first `j` entries of `nu` and `mu` have equal
/// sums, and so do the remaining ones.
pub fn kappa_match(nu: &[Rat], mu: &[Rat], j: usize) -> Result<bool> {
    if nu.len() != mu.len() {
        return Err(Error::HeightMismatch(nu.len() as u64, mu.len() as u64));
    }
    if j == 0 || j >= nu.len() {
        return Err(Error::domain(format!("cut {j} out of range")));
    }
    let sum = |v: &[Rat]| -> Rat { v.iter().sum() };
    Ok(sum(&nu[..j]) == sum(&mu[..j]) && sum(&nu[j..]) == sum(&mu[j..]))
}

/// The three named hypotheses and their conjunction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HypothesesVerdict {
    /// Blockwise dominance for the Levi factor cut at `j` (partial sums
    /// within each block, equality at the block ends).
    pub dominance_in_levi: bool,
    pub kappa_match: bool,
    pub strict_separation: bool,
}

impl HypothesesVerdict {
    pub fn all(&self) -> bool {
        self.dominance_in_levi && self.kappa_match && self.strict_separation
    }
}

pub fn theorem_hypotheses(g: &GroupData) -> Result<HypothesesVerdict> {
    let dominance_in_levi =
        preceq_vec(&g.nu[..g.j], &g.mu[..g.j])? && preceq_vec(&g.nu[g.j..], &g.mu[g.j..])?;
    Ok(HypothesesVerdict {
        dominance_in_levi,
        kappa_match: kappa_match(&g.nu, &g.mu, g.j)?,
        strict_separation: in_y_m_plus(&g.nu, g.j)?,
    })
}

/// Extracts the reduced slope data of a crystal at a candidate breakpoint
/// whose abscissa on the full polygon is `x.x1` (must be divisible by the
/// block count).
pub fn crystal_bridge(c: &ObCrystal, x: &LatticePoint) -> Result<GroupData> {
    let r = c.block_count() as u64;
    if x.x1 % r != 0 {
        return Err(Error::domain(format!(
            "abscissa {} does not reduce by the block count {r}",
            x.x1
        )));
    }
    let j = (x.x1 / r) as usize;
    let nu = c.newton_reduced()?.expanded();
    let mu = c.sigma_hodge_reduced()?.expanded();
    GroupData::new(nu, mu, j, c.block_count())
}

/// Vector-side dominance agrees with polygon dominance under the evident
/// identification.
pub fn preceq_as_polygons(nu: &[Rat], mu: &[Rat]) -> Result<bool> {
    let pn = Polygon::from_slopes(nu)?;
    let pm = Polygon::from_slopes(mu)?;
    pn.preceq(&pm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::{rat, rat_int};

    fn v(xs: &[(i64, i64)]) -> Vec<Rat> {
        xs.iter().map(|(n, d)| rat(*n, *d)).collect()
    }

    #[test]
    fn dominance_examples() {
        let a = v(&[(1, 2), (1, 2)]);
        let b = v(&[(0, 1), (1, 1)]);
        assert!(preceq_vec(&a, &b).unwrap());
        assert!(preceq_vec(&a, &a).unwrap());
        assert!(!preceq_vec(&b, &a).unwrap());
        assert!(preceq_as_polygons(&a, &b).unwrap());
    }

    #[test]
    fn separation_examples() {
        let nu = v(&[(0, 1), (0, 1), (1, 1), (1, 1)]);
        assert!(in_y_m_plus(&nu, 2).unwrap());
        let flat = v(&[(1, 2), (1, 2), (1, 2)]);
        assert!(!in_y_m_plus(&flat, 1).unwrap());
        let nu2 = v(&[(0, 1), (1, 2), (1, 2)]);
        assert!(!in_y_m_plus(&nu2, 2).unwrap());
        assert!(in_y_m_plus(&nu2, 1).unwrap());
    }

    #[test]
    fn kappa_examples() {
        let nu = v(&[(1, 2), (1, 2), (1, 1), (1, 1)]);
        let mu = v(&[(0, 1), (1, 1), (1, 1), (1, 1)]);
        assert!(kappa_match(&nu, &nu, 2).unwrap());
        assert!(kappa_match(&nu, &mu, 2).unwrap());
        assert!(!kappa_match(&nu, &mu, 1).unwrap());
    }

    #[test]
    fn verdict_examples() {
        // ordinary-shaped data: all three hypotheses hold
        let nu = v(&[(0, 1), (1, 1)]);
        let g = GroupData::new(nu.clone(), nu.clone(), 1, 1).unwrap();
        let verdict = theorem_hypotheses(&g).unwrap();
        assert!(verdict.all());
        // isoclinic Newton point: separation fails
        let iso = v(&[(1, 2), (1, 2)]);
        let mu = v(&[(0, 1), (1, 1)]);
        let g = GroupData::new(iso, mu, 1, 1).unwrap();
        let verdict = theorem_hypotheses(&g).unwrap();
        assert!(!verdict.strict_separation);
        assert!(!verdict.all());
    }

    #[test]
    fn bridge_on_split_crystal() {
        use crate::crystal::build_elementary;
        use crate::witt::WittRing;
        let rg = WittRing::with_default_poly(3, 2, 32).unwrap();
        let e0 = build_elementary(rg.clone(), 2, 1, &[0, 0], 1).unwrap();
        let e1 = build_elementary(rg, 2, 1, &[1, 1], 1).unwrap();
        let c = e0.direct_sum(&e1).unwrap();
        let g = crystal_bridge(&c, &LatticePoint::new(2, rat_int(0))).unwrap();
        assert_eq!(g.n, 2);
        assert_eq!(g.j, 1);
        assert_eq!(g.nu, v(&[(0, 1), (2, 1)]));
        assert_eq!(g.mu, v(&[(0, 1), (2, 1)]));
        assert!(theorem_hypotheses(&g).unwrap().all());
        // identity crystal: zero vectors
        let rg = WittRing::with_default_poly(3, 2, 16).unwrap();
        let id = build_elementary(rg, 2, 2, &[0, 0], 1).unwrap();
        let g = crystal_bridge(&id, &LatticePoint::new(2, rat_int(0))).unwrap();
        assert!(g.nu.iter().all(|x| x.is_zero()));
    }
}
