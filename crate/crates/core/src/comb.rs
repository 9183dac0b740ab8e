//! Comb parameters of a finite-gap set and a rational-relation scan on its band measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{bisect, EquilibriumData};
use crate::realset::RealFiniteGapSet;

/// A multiple of the band measures closer than this to an integer counts as a relation.
pub const RELATION_TOL: f64 = 1e-9;

/// Upper bound on the number of integer vectors tried when there are several gaps.
pub const SCAN_BUDGET: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombParameters {
    /// tooth positions `ω_k`, the equilibrium measure left of gap `k`
    pub omegas: Vec<f64>,
    /// tooth heights `h_k = G(c_k)`
    pub heights: Vec<f64>,
}

pub fn comb_parameters(eq: &EquilibriumData) -> CombParameters {
    let rho = eq.band_measures();
    let mut acc = 0.0;
    let omegas = rho[..eq.gap_count()]
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    CombParameters {
        omegas,
        heights: eq.pw_contributions(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ScanVerdict {
    /// No gaps, so the character group is trivial.
    Trivial,
    /// `Σ q_j ρ(𝔢_j) = integer` over the first `ℓ` bands.
    Relation {
        coefficients: Vec<i64>,
        integer: i64,
        defect: f64,
    },
    /// No relation with `|q_j| ≤ bound`; evidence for, not proof of, a canonical generator.
    NoRelationFound { bound: u64 },
}

/// Looks for a nonzero integer vector `q` with `|q_j| ≤ q_max` and `Σ q_j ρ(𝔢_j) ∈ ℤ`.
///
/// With several gaps the per-coordinate bound is lowered so the search stays within
/// [`SCAN_BUDGET`] vectors; the verdict reports the bound actually used.
pub fn canonical_generator_scan(eq: &EquilibriumData, q_max: u64) -> Result<ScanVerdict> {
    if q_max == 0 || q_max > 10_000 {
        return Err(Error::OutOfRange(format!(
            "q_max = {q_max} must lie in 1..=10000"
        )));
    }
    let l = eq.gap_count();
    if l == 0 {
        return Ok(ScanVerdict::Trivial);
    }
    let rho = &eq.band_measures()[..l];
    let mut bound = q_max;
    while (2 * bound + 1).pow(l as u32) > SCAN_BUDGET && bound > 1 {
        bound -= 1;
    }
    let b = bound as i64;
    // enumerate by increasing max |q_j| so the smallest relation wins
    for m in 1..=b {
        let mut q = vec![-m; l];
        loop {
            if q.iter().any(|c| c.abs() == m) && first_nonzero_positive(&q) {
                let s: f64 = q.iter().zip(rho).map(|(&c, r)| c as f64 * r).sum();
                let k = s.round();
                if (s - k).abs() < RELATION_TOL {
                    return Ok(ScanVerdict::Relation {
                        coefficients: q,
                        integer: k as i64,
                        defect: (s - k).abs(),
                    });
                }
            }
            if !advance(&mut q, m) {
                break;
            }
        }
    }
    Ok(ScanVerdict::NoRelationFound { bound })
}

fn first_nonzero_positive(q: &[i64]) -> bool {
    q.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn advance(q: &mut [i64], m: i64) -> bool {
    for c in q.iter_mut() {
        if *c < m {
            *c += 1;
            return true;
        }
        *c = -m;
    }
    false
}

/// `[-1, 0] ∪ [β, 1]` with `β` chosen so the left band carries measure `target`.
pub fn two_interval_with_measure(target: f64, tol: f64) -> Result<RealFiniteGapSet> {
    if !(0.5..1.0).contains(&target) {
        return Err(Error::OutOfRange(format!(
            "left band measure {target} not reachable"
        )));
    }
    let measure = |beta: f64| -> f64 {
        let s = RealFiniteGapSet::from_pairs(&[(-1.0, 0.0), (beta, 1.0)]).expect("valid pair");
        EquilibriumData::solve(&s, tol).map_or(f64::NAN, |eq| eq.band_measures()[0]) - target
    };
    // the left band loses measure as the gap closes
    let beta = bisect(measure, 1e-9, 1.0 - 1e-9)
        .ok_or_else(|| Error::OutOfRange(format!("no gap gives left band measure {target}")))?;
    RealFiniteGapSet::from_pairs(&[(-1.0, 0.0), (beta, 1.0)])
}

/// The two-interval set whose left band has measure `1/φ`.
pub fn golden_set() -> Result<RealFiniteGapSet> {
    two_interval_with_measure((5f64.sqrt() - 1.0) / 2.0, crate::potential::DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::DEFAULT_TOL;

    fn eq_of(pairs: &[(f64, f64)]) -> EquilibriumData {
        EquilibriumData::solve(&RealFiniteGapSet::from_pairs(pairs).unwrap(), DEFAULT_TOL).unwrap()
    }

    #[test]
    fn estar_comb() {
        let c = comb_parameters(&eq_of(&[(-1.0, -0.6), (0.6, 1.0)]));
        assert!((c.omegas[0] - 0.5).abs() < 1e-12);
        assert!((c.heights[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn interval_comb_is_empty() {
        let c = comb_parameters(&eq_of(&[(-1.0, 1.0)]));
        assert!(c.omegas.is_empty() && c.heights.is_empty());
    }

    #[test]
    fn skew_comb_matches_oracle() {
        let c = comb_parameters(&eq_of(&[(-1.0, 0.0), (0.5, 1.0)]));
        assert!((c.omegas[0] - 0.584_833_592_922_758_9).abs() < 1e-12);
        assert!((c.heights[0] - 0.265_012_304_990_290_9).abs() < 1e-12);
    }

    #[test]
    fn comb_is_affine_invariant() {
        let e = eq_of(&[(-2.0, -1.1), (-0.3, 0.4), (1.0, 3.5)]);
        let a = comb_parameters(&e);
        let moved =
            EquilibriumData::solve(&e.set().affine(0.3, 7.0).unwrap(), DEFAULT_TOL).unwrap();
        let b = comb_parameters(&moved);
        for k in 0..2 {
            assert!((a.omegas[k] - b.omegas[k]).abs() < 1e-11);
            assert!((a.heights[k] - b.heights[k]).abs() < 1e-11);
        }
        assert!(a.omegas.windows(2).all(|w| w[0] < w[1]));
        assert!((a.heights.iter().sum::<f64>() - e.pw_sum()).abs() < 1e-15);
    }

    #[test]
    fn scan_verdicts() {
        let e = eq_of(&[(-1.0, -0.6), (0.6, 1.0)]);
        match canonical_generator_scan(&e, 100).unwrap() {
            ScanVerdict::Relation {
                coefficients,
                integer,
                ..
            } => {
                assert_eq!((coefficients, integer), (vec![2], 1));
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(
            canonical_generator_scan(&eq_of(&[(-1.0, 1.0)]), 10).unwrap(),
            ScanVerdict::Trivial
        );
        assert!(canonical_generator_scan(&e, 0).is_err());
        let sym = eq_of(&[(-3.0, -2.0), (-1.0, 1.0), (2.0, 3.0)]);
        // ρ_1 = ρ_3, so ρ_1 + ρ_2 = 1 - ρ_1 gives 2ρ_1 + ρ_2 = 1
        match canonical_generator_scan(&sym, 20).unwrap() {
            ScanVerdict::Relation {
                coefficients,
                integer,
                ..
            } => {
                let r = sym.band_measures();
                let s = coefficients[0] as f64 * r[0] + coefficients[1] as f64 * r[1];
                assert!((s - integer as f64).abs() < RELATION_TOL);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn golden_set_has_no_small_relation() {
        let s = golden_set().unwrap();
        let e = EquilibriumData::solve(&s, DEFAULT_TOL).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((e.band_measures()[0] - 1.0 / phi).abs() < 1e-12);
        assert_eq!(
            canonical_generator_scan(&e, 1000).unwrap(),
            ScanVerdict::NoRelationFound { bound: 1000 }
        );
    }
}
