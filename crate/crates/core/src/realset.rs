//! Finite-gap compact subsets of ℝ: a union of disjoint closed intervals and the
//! open gaps between them.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Open-interval membership, used for gaps.
    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `K^(ε)`: the gap shrunk about its midpoint to length `(1-ε)|K|`.
pub fn gap_shrink(gap: Interval, eps: f64) -> Result<Interval> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!(
            "gap shrink eps = {eps} not in (0,1)"
        )));
    }
    let half = 0.5 * (1.0 - eps) * gap.len();
    let mid = gap.mid();
    let (lo, hi) = (mid - half, mid + half);
    if lo < hi {
        Ok(Interval { lo, hi })
    } else {
        // half underflowed against mid; keep the smallest representable interval
        Ok(Interval {
            lo: mid,
            hi: next_up(mid),
        })
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

/// A union of `ℓ+1` disjoint closed intervals, sorted, with the `ℓ` gaps derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct RealFiniteGapSet {
    bands: Vec<Interval>,
    gaps: Vec<Interval>,
}

/// Build a set from a list of intervals in any order.
pub fn make_set(intervals: &[Interval]) -> Result<RealFiniteGapSet> {
    RealFiniteGapSet::new(intervals.to_vec())
}

impl RealFiniteGapSet {
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut order: Vec<usize> = (0..intervals.len()).collect();
        order.sort_by(|&a, &b| intervals[a].lo.total_cmp(&intervals[b].lo));
        for w in order.windows(2) {
            let (a, b) = (intervals[w[0]], intervals[w[1]]);
            if a.hi >= b.lo {
                return Err(Error::Overlap {
                    first: w[0].min(w[1]),
                    second: w[0].max(w[1]),
                    a: (a.lo, a.hi),
                    b: (b.lo, b.hi),
                });
            }
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let gaps = intervals
            .windows(2)
            .map(|w| Interval {
                lo: w[0].hi,
                hi: w[1].lo,
            })
            .collect();
        Ok(RealFiniteGapSet {
            bands: intervals,
            gaps,
        })
    }

    /// Convenience constructor from `(lo, hi)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let ivs = pairs
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ivs)
    }

    pub fn bands(&self) -> &[Interval] {
        &self.bands
    }

    pub fn gaps(&self) -> &[Interval] {
        &self.gaps
    }

    /// Number of gaps `ℓ`.
    pub fn gap_count(&self) -> usize {
        self.gaps.len()
    }

    pub fn hull(&self) -> Interval {
        Interval {
            lo: self.bands[0].lo,
            hi: self.bands[self.bands.len() - 1].hi,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.band_of(x).is_some()
    }

    pub fn band_of(&self, x: f64) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(x))
    }

    pub fn gap_of(&self, x: f64) -> Option<usize> {
        self.gaps.iter().position(|g| g.contains_open(x))
    }

    /// Endpoints `a_0 < b_0 < a_1 < … < b_ℓ`.
    pub fn endpoints(&self) -> Vec<f64> {
        self.bands.iter().flat_map(|b| [b.lo, b.hi]).collect()
    }

    /// Total length of the bands.
    pub fn measure(&self) -> f64 {
        self.bands.iter().map(Interval::len).sum()
    }

    /// Image under `x ↦ scale·x + shift` with `scale > 0`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "affine scale {scale} must be positive"
            )));
        }
        let ivs = self
            .bands
            .iter()
            .map(|b| Interval::new(scale * b.lo + shift, scale * b.hi + shift))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ivs)
    }

    /// Whether `-E = E` up to `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let e = self.endpoints();
        let n = e.len();
        (0..n).all(|i| (e[i] + e[n - 1 - i]).abs() <= tol)
    }
}

impl TryFrom<Vec<Interval>> for RealFiniteGapSet {
    type Error = Error;
    fn try_from(v: Vec<Interval>) -> Result<Self> {
        RealFiniteGapSet::new(v)
    }
}

impl From<RealFiniteGapSet> for Vec<Interval> {
    fn from(s: RealFiniteGapSet) -> Self {
        s.bands
    }
}

impl fmt::Display for RealFiniteGapSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bands.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A pseudo-random set of `bands` intervals filling `[-1, 1]`, every band and gap at
/// least `min_frac` of the hull length.
pub fn random_set<R: Rng + ?Sized>(
    rng: &mut R,
    bands: usize,
    min_frac: f64,
) -> Result<RealFiniteGapSet> {
    let pieces = 2 * bands.max(1) - 1;
    if min_frac <= 0.0 || min_frac * pieces as f64 >= 1.0 {
        return Err(Error::OutOfRange(format!(
            "minimum fraction {min_frac} for {pieces} pieces"
        )));
    }
    let w: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = w.iter().sum();
    let free = 1.0 - min_frac * pieces as f64;
    let mut x = -1.0;
    let mut ends = vec![x];
    for (i, wi) in w.iter().enumerate() {
        x += 2.0 * (min_frac + free * wi / total);
        ends.push(if i + 1 == pieces { 1.0 } else { x });
    }
    let intervals = ends
        .chunks(2)
        .map(|c| Interval::new(c[0], c[1]))
        .collect::<Result<Vec<_>>>()?;
    RealFiniteGapSet::new(intervals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn single_interval_has_no_gaps() {
        let s = make_set(&[iv(-1.0, 1.0)]).unwrap();
        assert_eq!(s.gap_count(), 0);
        assert_eq!(s.hull(), iv(-1.0, 1.0));
    }

    #[test]
    fn sorts_and_derives_gap() {
        let s = make_set(&[iv(0.6, 1.0), iv(-1.0, -0.6)]).unwrap();
        assert_eq!(s.bands()[0], iv(-1.0, -0.6));
        assert_eq!(s.gaps(), &[iv(-0.6, 0.6)]);
    }

    #[test]
    fn overlap_is_rejected_with_pair() {
        match make_set(&[iv(-1.0, 0.0), iv(-0.5, 1.0)]) {
            Err(Error::Overlap { first, second, .. }) => assert_eq!((first, second), (0, 1)),
            other => panic!("expected overlap, got {other:?}"),
        }
    }

    #[test]
    fn touching_is_rejected() {
        assert!(make_set(&[iv(-1.0, 0.0), iv(0.0, 1.0)]).is_err());
    }

    #[test]
    fn empty_and_degenerate_rejected() {
        assert!(matches!(make_set(&[]), Err(Error::EmptySet)));
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn contains_closed_endpoints() {
        let one = make_set(&[iv(-1.0, 1.0)]).unwrap();
        assert!(one.contains(0.0));
        let e = RealFiniteGapSet::from_pairs(&[(-1.0, -0.6), (0.6, 1.0)]).unwrap();
        assert!(!e.contains(0.0));
        assert!(e.contains(-0.6));
        assert_eq!(e.gap_of(0.0), Some(0));
        assert_eq!(e.gap_of(0.6), None);
    }

    #[test]
    fn shrink_examples() {
        let g = gap_shrink(iv(-0.6, 0.6), 0.5).unwrap();
        assert!((g.lo() + 0.3).abs() < 1e-15 && (g.hi() - 0.3).abs() < 1e-15);
        let g = gap_shrink(iv(0.0, 1.0), 0.2).unwrap();
        assert!((g.lo() - 0.1).abs() < 1e-15 && (g.hi() - 0.9).abs() < 1e-15);
        let g = gap_shrink(iv(-1.0, 1.0), 1.0 - 1e-12).unwrap();
        assert!(g.lo() < g.hi() && g.lo().abs() < 1e-11 && g.hi().abs() < 1e-11);
        assert!(gap_shrink(iv(0.0, 1.0), 1.0).is_err());
        assert!(gap_shrink(iv(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn json_literal_round_trip() {
        let s: RealFiniteGapSet = serde_json::from_str("[[0.6, 1], [-1, -0.6]]").unwrap();
        assert_eq!(s.gap_count(), 1);
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, "[[-1.0,-0.6],[0.6,1.0]]");
        assert!(serde_json::from_str::<RealFiniteGapSet>("[[-1, 0], [-0.5, 1]]").is_err());
    }
}
