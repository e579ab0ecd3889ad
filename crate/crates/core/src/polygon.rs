//! Exact rational polygon calculus.
//!
//! A [`Polygon`] is a finite multiset of nonnegative rational slopes stored in
//! normalized form: strictly increasing slopes, each with a positive
//! multiplicity. It is identified with the convex piecewise-linear function on
//! `[0, h]` (`h` = sum of multiplicities) that starts at the origin and whose
//! sorted slope sequence is the multiset. All arithmetic is exact; there is no
//! floating point anywhere in this module.

use crate::error::{Error, Result};
use num::{BigInt, BigRational, One, Signed, Zero};
use std::fmt;

/// Shorthand used throughout the crate.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> Rat {
    Rat::from(BigInt::from(num))
}

/// A point `(x1, x2)` with integral abscissa, tested against polygons of
/// matching height. The ordinate may be any rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePoint {
    pub x1: u64,
    pub x2: Rat,
}

impl LatticePoint {
    pub fn new(x1: u64, x2: Rat) -> Self {
        LatticePoint { x1, x2 }
    }

    /// Both coordinates integral, i.e. a genuine point of `Z^2`.
    pub fn is_integral(&self) -> bool {
        self.x2.is_integer()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Normalized convex slope polygon. See the module docs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon {
    /// Strictly increasing slopes with positive multiplicities.
    segments: Vec<(Rat, u64)>,
}

impl Polygon {
    /// The empty polygon (height 0).
    pub fn empty() -> Self {
        Polygon { segments: Vec::new() }
    }

    /// Builds a polygon from an arbitrary list of nonnegative rational slopes.
    pub fn from_slopes(raw: &[Rat]) -> Result<Self> {
        let pairs: Vec<(Rat, u64)> = raw.iter().map(|s| (s.clone(), 1)).collect();
        Self::from_segments(pairs)
    }

    /// Builds a polygon from (slope, multiplicity) pairs; sorts and merges.
    pub fn from_segments(pairs: Vec<(Rat, u64)>) -> Result<Self> {
        for (s, _) in &pairs {
            if s.is_negative() {
                return Err(Error::domain(format!("negative slope {s}")));
            }
        }
        let mut pairs: Vec<(Rat, u64)> = pairs.into_iter().filter(|(_, m)| *m > 0).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut segments: Vec<(Rat, u64)> = Vec::with_capacity(pairs.len());
        for (s, m) in pairs {
            match segments.last_mut() {
                Some((last, mult)) if *last == s => *mult += m,
                _ => segments.push((s, m)),
            }
        }
        let poly = Polygon { segments };
        debug_assert!(poly.check_convex());
        Ok(poly)
    }

    /// Normalized representation: asserted after every constructor.
    fn check_convex(&self) -> bool {
        self.segments.windows(2).all(|w| w[0].0 < w[1].0)
            && self.segments.iter().all(|(_, m)| *m >= 1)
    }

    pub fn segments(&self) -> &[(Rat, u64)] {
        &self.segments
    }

    pub fn height(&self) -> u64 {
        self.segments.iter().map(|(_, m)| m).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// All slopes zero (or the polygon is empty).
    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|(s, _)| s.is_zero())
    }

    /// Constant-slope polygon.
    pub fn is_isoclinic(&self) -> bool {
        self.segments.len() <= 1
    }

    /// Sum of all slopes, i.e. the value at the right endpoint.
    pub fn total(&self) -> Rat {
        self.segments
            .iter()
            .map(|(s, m)| s * Rat::from(BigInt::from(*m)))
            .sum()
    }

    /// Slope sequence expanded to length `h`.
    pub fn expanded(&self) -> Vec<Rat> {
        let mut out = Vec::with_capacity(self.height() as usize);
        for (s, m) in &self.segments {
            for _ in 0..*m {
                out.push(s.clone());
            }
        }
        out
    }

    /// Value of the piecewise-linear function at rational `t` in `[0, h]`.
    pub fn value_at(&self, t: &Rat) -> Result<Rat> {
        let h = Rat::from(BigInt::from(self.height()));
        if t.is_negative() || *t > h {
            return Err(Error::domain(format!(
                "abscissa {t} outside [0, {}]",
                self.height()
            )));
        }
        let mut acc = Rat::zero();
        let mut consumed = Rat::zero();
        for (s, m) in &self.segments {
            let width = Rat::from(BigInt::from(*m));
            let remaining = t - &consumed;
            if remaining <= width {
                return Ok(acc + s * remaining);
            }
            acc += s * &width;
            consumed += width;
        }
        Ok(acc)
    }

    /// Value at an integral abscissa.
    pub fn value_at_int(&self, x1: u64) -> Result<Rat> {
        self.value_at(&Rat::from(BigInt::from(x1)))
    }

    /// Dominance `self ⪯ other`: partial sums of `self` dominate those of
    /// `other` at every abscissa, with equality at the right endpoint.
    /// Geometrically `self` lies on or above `other` with the same endpoints.
    pub fn preceq(&self, other: &Polygon) -> Result<bool> {
        if self.height() != other.height() {
            return Err(Error::HeightMismatch(self.height(), other.height()));
        }
        if self.total() != other.total() {
            return Ok(false);
        }
        // The difference of two piecewise-linear functions attains its minimum
        // at a kink of one of them, so checking the merged kink abscissas is
        // exact.
        let mut cuts: Vec<u64> = Vec::new();
        for p in [self, other] {
            let mut x = 0u64;
            for (_, m) in &p.segments {
                x += m;
                cuts.push(x);
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        for x in cuts {
            if self.value_at_int(x)? < other.value_at_int(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the point lies on the polygon graph.
    pub fn lies_on(&self, x: &LatticePoint) -> Result<bool> {
        Ok(self.value_at_int(x.x1)? == x.x2)
    }

    /// Breakpoint test per the convex-polygon definition: `x` must lie on the
    /// polygon at an interior integral abscissa; true iff the slope strictly
    /// increases there.
    pub fn is_breakpoint(&self, x: &LatticePoint) -> Result<bool> {
        let h = self.height();
        if x.x1 == 0 || x.x1 >= h {
            return Err(Error::domain(format!(
                "breakpoint abscissa {} not interior to [0, {h}]",
                x.x1
            )));
        }
        if !self.lies_on(x)? {
            return Err(Error::NotOnPolygon);
        }
        Ok(self.slope_left(x.x1) < self.slope_right(x.x1))
    }

    fn slope_left(&self, x1: u64) -> &Rat {
        debug_assert!(x1 >= 1 && x1 <= self.height());
        let mut acc = 0u64;
        for (s, m) in &self.segments {
            acc += m;
            if x1 <= acc {
                return s;
            }
        }
        unreachable!("abscissa within height")
    }

    fn slope_right(&self, x1: u64) -> &Rat {
        debug_assert!(x1 < self.height());
        let mut acc = 0u64;
        for (s, m) in &self.segments {
            acc += m;
            if x1 < acc {
                return s;
            }
        }
        unreachable!("abscissa within height")
    }

    /// All interior breakpoints with both coordinates integral.
    pub fn breakpoints(&self) -> Vec<LatticePoint> {
        let mut out = Vec::new();
        let mut x = 0u64;
        let mut y = Rat::zero();
        for (i, (s, m)) in self.segments.iter().enumerate() {
            if i > 0 && y.is_integer() {
                out.push(LatticePoint::new(x, y.clone()));
            }
            x += m;
            y += s * Rat::from(BigInt::from(*m));
        }
        out
    }

    /// Counts slope increases including the virtual boundary slopes
    /// `left` before 0 and `right` after `h`. With bounds (0, 1) this is the
    /// breakpoint count in the minuscule normalization, where the polygon is
    /// extended by a slope-0 ray on the left and a slope-1 ray on the right.
    pub fn breakpoint_count_bounded(&self, left: &Rat, right: &Rat) -> usize {
        if self.segments.is_empty() {
            return 0;
        }
        let mut count = self.segments.len() - 1;
        if self.segments[0].0 > *left {
            count += 1;
        }
        if self.segments[self.segments.len() - 1].0 < *right {
            count += 1;
        }
        count
    }

    /// Splits into the first `x1` slopes and the rest.
    pub fn split_at(&self, x1: u64) -> Result<(Polygon, Polygon)> {
        let h = self.height();
        if x1 > h {
            return Err(Error::domain(format!("split abscissa {x1} exceeds height {h}")));
        }
        let mut first = Vec::new();
        let mut second = Vec::new();
        let mut remaining = x1;
        for (s, m) in &self.segments {
            if remaining >= *m {
                first.push((s.clone(), *m));
                remaining -= m;
            } else {
                if remaining > 0 {
                    first.push((s.clone(), remaining));
                }
                second.push((s.clone(), m - remaining));
                remaining = 0;
            }
        }
        Ok((Polygon { segments: first }, Polygon { segments: second }))
    }

    /// Merges the slope multisets (re-sorted); inverse of `split_at`.
    pub fn concat(&self, other: &Polygon) -> Polygon {
        let mut pairs = self.segments.clone();
        pairs.extend(other.segments.iter().cloned());
        Polygon::from_segments(pairs).expect("multiset merge of valid polygons")
    }

    /// Segmentwise sum of the expanded slope sequences. Both inputs are
    /// sorted, so the termwise sum is sorted too and convexity is preserved.
    pub fn pointwise_sum(&self, other: &Polygon) -> Result<Polygon> {
        if self.height() != other.height() {
            return Err(Error::HeightMismatch(self.height(), other.height()));
        }
        let a = self.expanded();
        let b = other.expanded();
        let pairs: Vec<(Rat, u64)> = a
            .into_iter()
            .zip(b)
            .map(|(x, y)| (x + y, 1))
            .collect();
        Polygon::from_segments(pairs)
    }

    /// Multiplies slopes by `r` and divides multiplicities by `r`. Requires
    /// every multiplicity divisible by `r`.
    pub fn r_reduce(&self, r: u64) -> Result<Polygon> {
        if r == 0 {
            return Err(Error::domain("reduction factor must be positive"));
        }
        let rr = Rat::from(BigInt::from(r));
        let mut pairs = Vec::with_capacity(self.segments.len());
        for (s, m) in &self.segments {
            if m % r != 0 {
                return Err(Error::domain(format!(
                    "multiplicity {m} of slope {s} not divisible by {r}"
                )));
            }
            pairs.push((s * &rr, m / r));
        }
        Polygon::from_segments(pairs)
    }

    /// Exact inverse of [`Polygon::r_reduce`]: divides slopes by `r`,
    /// multiplies multiplicities by `r`.
    pub fn r_inflate(&self, r: u64) -> Result<Polygon> {
        if r == 0 {
            return Err(Error::domain("inflation factor must be positive"));
        }
        let rr = Rat::from(BigInt::from(r));
        let pairs = self
            .segments
            .iter()
            .map(|(s, m)| (s / &rr, m * r))
            .collect();
        Polygon::from_segments(pairs)
    }

    /// Slope involution `λ ↦ 1 − λ` for polygons with slopes in `[0, 1]`.
    pub fn dual(&self) -> Result<Polygon> {
        let one = Rat::one();
        for (s, _) in &self.segments {
            if *s > one {
                return Err(Error::domain(format!("slope {s} outside [0, 1]")));
            }
        }
        let pairs = self
            .segments
            .iter()
            .map(|(s, m)| (&one - s, *m))
            .collect();
        Polygon::from_segments(pairs)
    }

    pub fn is_self_dual(&self) -> bool {
        match self.dual() {
            Ok(d) => d == *self,
            Err(_) => false,
        }
    }
}

impl fmt::Display for Polygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return write!(f, "(empty)");
        }
        let parts: Vec<String> = self
            .segments
            .iter()
            .map(|(s, m)| format!("{s} x{m}"))
            .collect();
        write!(f, "{}", parts.join(" | "))
    }
}

/// Breakpoint pairing on a self-dual polygon of height `2n`: the point with
/// abscissa `x1` pairs with abscissa `2n − x1`, and the ordinates satisfy
/// `x2' = x2 + n − x1`. This map is an involution and carries breakpoints of a
/// self-dual polygon to breakpoints.
pub fn dual_point(x: &LatticePoint, n: u64) -> LatticePoint {
    assert!(x.x1 <= 2 * n, "abscissa {} exceeds height {}", x.x1, 2 * n);
    let shift = Rat::from(BigInt::from(n as i64 - x.x1 as i64));
    LatticePoint::new(2 * n - x.x1, &x.x2 + shift)
}
