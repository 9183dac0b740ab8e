//! Widom factors, the `h_n` representation, and modulus-level Szegő–Widom diagnostics.
//!
//! Every power (`t_n`, `C^n`, `e^{-nG}`) is handled as a logarithm.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::EquilibriumData;
use crate::quad::{self, QuadTol};
use crate::realset::RealFiniteGapSet;
use crate::remez::{
    self, alternation_certificate, capacity_en, green_n, BandDecomposition, BandDensity,
    ChebyshevSolution, LevelBand, TOUCH_TOL,
};
use crate::widom::{Blaschke, GapSet, WidomSolution};

/// Slack on the lower and upper Widom factor bounds.
pub const BOUND_TOL: f64 = 1e-8;

/// Grid points closer than this (relative to the hull length) to a gap zero are skipped.
pub const ZERO_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub n: usize,
    pub log10_t_n: f64,
    pub widom_factor: f64,
    pub f_norm: f64,
    pub ratio: f64,
    pub sup_deviation: f64,
    pub h_residual: f64,
    pub cert_pass: bool,
    /// `max |ρ_n(band) - 1/n|` over the bands of `𝔢_n`
    pub mass_error: f64,
}

/// `W_n = t_n / C^n`, checked against `2 ≤ W_n ≤ 2 e^{PW}`.
pub fn widom_factor(eq: &EquilibriumData, sol: &ChebyshevSolution) -> Result<f64> {
    let w = (sol.log_t - sol.n as f64 * eq.log_capacity()).exp();
    let upper = 2.0 * eq.pw_sum().exp();
    if w < 2.0 - BOUND_TOL || w > upper + BOUND_TOL {
        return Err(Error::Invariant(format!(
            "n = {}: Widom factor {w} outside [2, {upper}]",
            sol.n
        )));
    }
    Ok(w)
}

/// `log |L_n(x)| = log |T_n(x)| - n G(x) - n log C`.
pub fn l_n_log_modulus(eq: &EquilibriumData, sol: &ChebyshevSolution, x: f64) -> f64 {
    let n = sol.n as f64;
    sol.poly.log_abs(x) - n * eq.green_real(x) - n * eq.log_capacity()
}

pub fn l_n_modulus(eq: &EquilibriumData, sol: &ChebyshevSolution, x: f64) -> f64 {
    l_n_log_modulus(eq, sol, x).exp()
}

/// Four points per gap at 1/8, 3/8, 5/8, 7/8 of its length, and four outside the
/// hull at 0.5, 1, 2 and 4 hull lengths (alternating right and left).
pub fn default_grid(set: &RealFiniteGapSet) -> Vec<f64> {
    let mut g = Vec::new();
    for gap in set.gaps() {
        for f in [0.125, 0.375, 0.625, 0.875] {
            g.push(gap.lo() + f * gap.len());
        }
    }
    g.extend(outer_points(set));
    g
}

fn outer_points(set: &RealFiniteGapSet) -> [f64; 4] {
    let h = set.hull();
    [
        h.hi() + 0.5 * h.len(),
        h.lo() - h.len(),
        h.hi() + 2.0 * h.len(),
        h.lo() - 4.0 * h.len(),
    ]
}

/// The gap set of `T_n`'s zeros in the gaps of `𝔢`.
pub fn gap_set_of(eq: &EquilibriumData, sol: &ChebyshevSolution) -> Result<GapSet> {
    GapSet::new(eq.set(), remez::gap_zeros(sol, eq.set())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub sup: f64,
    pub used: usize,
    pub skipped: Vec<f64>,
}

/// `max | |L_n(x)| - |F_n(x)| |` over grid points outside `𝔢`, with `F_n` built from
/// the gap zeros of `T_n`.
pub fn szego_widom_deviation(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    grid: &[f64],
) -> Result<Deviation> {
    let s = gap_set_of(eq, sol)?;
    let b = Blaschke::new(eq, &s)?;
    deviation_with(eq, sol, &b, &s, grid)
}

fn deviation_with(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    b: &Blaschke<'_>,
    s: &GapSet,
    grid: &[f64],
) -> Result<Deviation> {
    let near = ZERO_EXCLUSION * eq.set().hull().len();
    let mut out = Deviation {
        sup: 0.0,
        used: 0,
        skipped: Vec::new(),
    };
    for &x in grid {
        if eq.set().contains(x) {
            return Err(Error::OutOfRange(format!("grid point {x} lies on the set")));
        }
        if s.points().values().any(|&z| (x - z).abs() < near) {
            warn!(
                "n = {}: grid point {x} skipped, too close to a gap zero",
                sol.n
            );
            out.skipped.push(x);
            continue;
        }
        let d = (l_n_modulus(eq, sol, x) - b.minimizer_modulus(x)?).abs();
        out.sup = out.sup.max(d);
        out.used += 1;
    }
    Ok(out)
}

/// `W_n / ‖F_n‖_∞`.
pub fn ratio_check(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    widom: &WidomSolution,
) -> Result<f64> {
    Ok(widom_factor(eq, sol)? / widom.f_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HCheck {
    /// `G_𝔢(z) - G_n(z)`
    pub lhs: f64,
    /// `Σ ∫_{𝔢_n ∖ 𝔢} G_𝔢(x, z) dρ_n(x)`
    pub rhs: f64,
    pub residual: f64,
}

/// Compares `G_𝔢(z) - G_n(z)` with the integral of `G_𝔢(·, z)` against `ρ_n` over the
/// parts of `𝔢_n` lying in gaps of `𝔢`. `z = None` is the point at infinity.
pub fn h_n_check(eq: &EquilibriumData, sol: &ChebyshevSolution, z: Option<f64>) -> Result<HCheck> {
    let bands = remez::bands(sol, eq.set(), TOUCH_TOL)?;
    h_n_check_with(eq, sol, &bands, z)
}

pub fn h_n_check_with(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    bands: &BandDecomposition,
    z: Option<f64>,
) -> Result<HCheck> {
    let lhs = match z {
        None => (sol.log_t - 2f64.ln()) / sol.n as f64 - eq.log_capacity(),
        Some(z) => {
            if bands.bands.iter().any(|b| b.lo <= z && z <= b.hi) {
                return Err(Error::OutOfRange(format!(
                    "test point {z} lies on the level set"
                )));
            }
            eq.green_real(z) - green_n(sol, z)
        }
    };
    let pole = match z {
        Some(z) => Some(eq.pole(z)?),
        None => None,
    };
    let weight = |x: f64| -> f64 {
        match &pole {
            None => eq.green_real(x),
            Some(p) => p.green_real(x).unwrap_or(0.0),
        }
    };
    let mut rhs = 0.0;
    for band in &bands.bands {
        rhs += gap_part_integral(eq, sol, band, &weight)?;
    }
    Ok(HCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// `∫ w dρ_n` over the parts of one band of `𝔢_n` inside gaps of `𝔢`.
fn gap_part_integral<W: Fn(f64) -> f64>(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    band: &LevelBand,
    w: &W,
) -> Result<f64> {
    let d = BandDensity::new(sol, band);
    let qt = QuadTol {
        abs: 1e-13,
        rel: 1e-10,
        ..QuadTol::default()
    };
    let mut total = 0.0;
    for gap in eq.set().gaps() {
        let a = gap.lo().max(band.lo);
        let b = gap.hi().min(band.hi);
        if a >= b {
            continue;
        }
        let ta = if a == band.lo { 0.0 } else { d.angle(a) };
        let tb = if b == band.hi { PI } else { d.angle(b) };
        let f = |th: f64| w(d.point(th)) * d.at(th);
        // square-root behaviour at both ends is removed by θ = end ± (len) v²
        let mid = 0.5 * (ta + tb);
        for (end, len) in [(ta, mid - ta), (tb, mid - tb)] {
            let est = quad::adaptive_panels(0.0, 1.0, qt, |v| 2.0 * len * v * f(end + len * v * v));
            if !est.value.is_finite() {
                return Err(Error::Quadrature(format!(
                    "gap part [{a}, {b}] of band [{}, {}]",
                    band.lo, band.hi
                )));
            }
            total += est.value.abs();
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n: usize,
    pub capacity_en: f64,
    pub capacity_equilibrium: f64,
    pub capacity_diff: f64,
    pub green_diff: f64,
    pub points: Vec<f64>,
}

/// Solves the equilibrium problem on `𝔢_n` directly and compares with the closed
/// forms `C(𝔢_n) = (t_n/2)^{1/n}` and `G_n = arccosh(|T_n|/t_n)/n` at ten points.
pub fn cross_validate_en(sol: &ChebyshevSolution, tol: f64) -> Result<CrossValidation> {
    let bands = remez::bands(sol, &sol.set, TOUCH_TOL)?;
    let en = bands.union()?;
    let eq_n = EquilibriumData::solve(&en, tol)?;
    let mut points = Vec::new();
    for gap in en.gaps() {
        points.push(gap.lo() + gap.len() / 3.0);
        points.push(gap.lo() + 2.0 * gap.len() / 3.0);
    }
    points.truncate(6);
    let h = en.hull();
    let mut k = 0;
    while points.len() < 10 {
        let d = h.len() * [0.1, 0.5, 1.0, 3.0, 10.0][k / 2 % 5] * (1.0 + (k / 10) as f64);
        points.push(if k % 2 == 0 { h.hi() + d } else { h.lo() - d });
        k += 1;
    }
    let green_diff = points
        .iter()
        .map(|&x| (eq_n.green(Complex64::new(x, 0.0)) - green_n(sol, x)).abs())
        .fold(0.0, f64::max);
    let a = capacity_en(sol);
    let b = eq_n.capacity();
    Ok(CrossValidation {
        n: sol.n,
        capacity_en: a,
        capacity_equilibrium: b,
        capacity_diff: (a - b).abs(),
        green_diff,
        points,
    })
}

/// Shifts `p` with `max_n |f_norm(n + p) - f_norm(n)| < eps` over rows with
/// consecutive `n`.
pub fn almost_period_probe(rows: &[DiagnosticsRow], eps: f64) -> Result<Vec<usize>> {
    if rows.len() < 20 {
        return Err(Error::OutOfRange(format!(
            "{} rows, at least 20 needed",
            rows.len()
        )));
    }
    if rows.windows(2).any(|w| w[1].n != w[0].n + 1) {
        return Err(Error::OutOfRange("rows must have consecutive n".into()));
    }
    let f: Vec<f64> = rows.iter().map(|r| r.f_norm).collect();
    Ok((1..=f.len() / 2)
        .filter(|&p| (0..f.len() - p).all(|i| (f[i + p] - f[i]).abs() < eps))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<DiagnosticsRow>,
    pub window: usize,
    pub first_median: f64,
    pub last_median: f64,
    /// least-squares slope of `ln sup_deviation` against `n`
    pub slope: f64,
}

impl ConvergenceReport {
    pub fn new(rows: Vec<DiagnosticsRow>, window: usize) -> Self {
        let devs: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
        let w = window.clamp(1, devs.len().max(1));
        let first_median = median(devs.iter().take(w).copied());
        let last_median = median(devs.iter().rev().take(w).copied());
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.sup_deviation > 0.0)
            .map(|r| (r.n as f64, r.sup_deviation.ln()))
            .collect();
        ConvergenceReport {
            rows,
            window: w,
            first_median,
            last_median,
            slope: ls_slope(&pts),
        }
    }
}

fn median(it: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = it.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Ordinary least-squares slope; NaN with fewer than two points.
pub fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Everything the diagnostics table needs for one degree.
pub fn diagnostics_row(
    eq: &EquilibriumData,
    sol: &ChebyshevSolution,
    grid: &[f64],
) -> Result<DiagnosticsRow> {
    let w = widom_factor(eq, sol)?;
    let s = gap_set_of(eq, sol)?;
    let b = Blaschke::new(eq, &s)?;
    let f_norm = b.f_norm();
    let dev = deviation_with(eq, sol, &b, &s, grid)?;
    let bands = remez::bands(sol, eq.set(), TOUCH_TOL)?;
    let n = sol.n as f64;
    let mass_error = bands
        .masses
        .iter()
        .map(|m| (m - 1.0 / n).abs())
        .fold(0.0, f64::max);
    let mut h_residual = h_n_check_with(eq, sol, &bands, None)?.residual;
    for z in outer_points(eq.set()) {
        h_residual = h_residual.max(h_n_check_with(eq, sol, &bands, Some(z))?.residual);
    }
    let cert = alternation_certificate(sol, eq.set());
    Ok(DiagnosticsRow {
        n: sol.n,
        log10_t_n: sol.log_t / std::f64::consts::LN_10,
        widom_factor: w,
        f_norm,
        ratio: w / f_norm,
        sup_deviation: dev.sup,
        h_residual,
        cert_pass: cert.pass,
        mass_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::DEFAULT_TOL;
    use crate::remez::{chebyshev_with, RemezOptions};
    use crate::widom::widom_from_gap_set;

    fn eq_of(pairs: &[(f64, f64)]) -> EquilibriumData {
        let s = RealFiniteGapSet::from_pairs(pairs).unwrap();
        EquilibriumData::solve(&s, DEFAULT_TOL).unwrap()
    }

    fn sol(eq: &EquilibriumData, n: usize) -> ChebyshevSolution {
        chebyshev_with(eq, n, &RemezOptions::default()).unwrap()
    }

    const ESTAR: [(f64, f64); 2] = [(-1.0, -0.6), (0.6, 1.0)];

    #[test]
    fn widom_factor_examples() {
        let unit = eq_of(&[(-1.0, 1.0)]);
        for n in [1, 4, 17] {
            assert!((widom_factor(&unit, &sol(&unit, n)).unwrap() - 2.0).abs() < 1e-9);
        }
        let e = eq_of(&ESTAR);
        assert!((widom_factor(&e, &sol(&e, 2)).unwrap() - 2.0).abs() < 1e-9);
        assert!((widom_factor(&e, &sol(&e, 1)).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn l_n_closed_forms() {
        let unit = eq_of(&[(-1.0, 1.0)]);
        let zeta = 2.0 + 3f64.sqrt();
        let l = l_n_modulus(&unit, &sol(&unit, 3), 2.0);
        assert!((l - (1.0 + zeta.powi(-6))).abs() < 1e-12, "{l}");
        let e = eq_of(&ESTAR);
        let s2 = sol(&e, 2);
        let g = e.green_real(2.0);
        let direct = (4.0f64 - 0.68) * (-2.0 * g).exp() / 0.16;
        assert!((l_n_modulus(&e, &s2, 2.0) - direct).abs() < 1e-12);
        assert!((l_n_modulus(&e, &sol(&e, 1), 1e8) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deviation_closed_forms() {
        let unit = eq_of(&[(-1.0, 1.0)]);
        let d = szego_widom_deviation(&unit, &sol(&unit, 5), &[2.0]).unwrap();
        let zeta = 2.0 + 3f64.sqrt();
        assert!((d.sup - zeta.powi(-10)).abs() < 1e-12, "{}", d.sup);
        let e = eq_of(&ESTAR);
        let s2 = sol(&e, 2);
        let grid = default_grid(e.set());
        let d = szego_widom_deviation(&e, &s2, &grid).unwrap();
        let expected = grid
            .iter()
            .map(|&x| (l_n_modulus(&e, &s2, x) - 1.0).abs())
            .fold(0.0, f64::max);
        assert_eq!(d.used, 8);
        assert!((d.sup - expected).abs() < 1e-14);
    }

    #[test]
    fn deviation_skips_gap_zero() {
        let e = eq_of(&ESTAR);
        let d = szego_widom_deviation(&e, &sol(&e, 3), &[0.0, 0.3]).unwrap();
        assert_eq!(d.skipped, vec![0.0]);
        assert_eq!(d.used, 1);
    }

    #[test]
    fn ratio_examples() {
        let e = eq_of(&ESTAR);
        let s1 = sol(&e, 1);
        let w1 = widom_from_gap_set(&e, &gap_set_of(&e, &s1).unwrap()).unwrap();
        assert!((ratio_check(&e, &s1, &w1).unwrap() - 1.25).abs() < 1e-9);
        let s4 = sol(&e, 4);
        let w4 = widom_from_gap_set(&e, &gap_set_of(&e, &s4).unwrap()).unwrap();
        assert!((ratio_check(&e, &s4, &w4).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn h_n_closed_case() {
        let e = eq_of(&ESTAR);
        let h = h_n_check(&e, &sol(&e, 1), None).unwrap();
        assert!((h.lhs - 1.25f64.ln()).abs() < 1e-10);
        assert!(h.residual < 1e-7, "{h:?}");
        for z in [1.5, -3.0] {
            assert!(h_n_check(&e, &sol(&e, 1), Some(z)).unwrap().residual < 1e-7);
        }
        let h2 = h_n_check(&e, &sol(&e, 2), Some(2.0)).unwrap();
        assert!(h2.lhs.abs() < 1e-9 && h2.rhs.abs() < 1e-9, "{h2:?}");
        let unit = eq_of(&[(-1.0, 1.0)]);
        assert!(h_n_check(&unit, &sol(&unit, 6), None).unwrap().residual < 1e-9);
    }

    #[test]
    fn h_n_on_three_bands() {
        let e = eq_of(&[(-2.0, -1.1), (-0.3, 0.4), (1.0, 3.5)]);
        for n in [3, 7, 12] {
            let s = sol(&e, n);
            let h = h_n_check(&e, &s, None).unwrap();
            assert!(h.residual < 1e-8, "n = {n}: {h:?}");
            // M_n(∞)^{-1} = (C(𝔢_n)/C(𝔢))^n
            let m = (n as f64 * h.lhs).exp();
            assert!((m - (capacity_en(&s) / e.capacity()).powi(n as i32)).abs() < 1e-9 * m);
            let h = h_n_check(&e, &s, Some(5.0)).unwrap();
            assert!(h.residual < 1e-8, "n = {n}: {h:?}");
        }
    }

    #[test]
    fn cross_validation() {
        let e = eq_of(&ESTAR);
        let c = cross_validate_en(&sol(&e, 1), DEFAULT_TOL).unwrap();
        assert!(
            (c.capacity_en - 0.5).abs() < 1e-12 && c.capacity_diff < 1e-9 && c.green_diff < 1e-6
        );
        let c = cross_validate_en(&sol(&e, 2), DEFAULT_TOL).unwrap();
        assert!((c.capacity_equilibrium - 0.4).abs() < 1e-9 && c.green_diff < 1e-6);
        let unit = eq_of(&[(-1.0, 1.0)]);
        let c = cross_validate_en(&sol(&unit, 4), DEFAULT_TOL).unwrap();
        assert!((c.capacity_equilibrium - 0.5).abs() < 1e-9 && c.green_diff < 1e-6);
        assert_eq!(c.points.len(), 10);
    }

    #[test]
    fn estar_period_two() {
        let e = eq_of(&ESTAR);
        let grid = default_grid(e.set());
        let rows: Vec<DiagnosticsRow> = (1..=20)
            .map(|n| diagnostics_row(&e, &sol(&e, n), &grid).unwrap())
            .collect();
        for r in &rows {
            let f = if r.n % 2 == 1 { 2.0 } else { 1.0 };
            assert!((r.f_norm - f).abs() < 1e-9, "{r:?}");
            assert!(
                r.cert_pass && r.mass_error < 1e-8 && r.h_residual < 1e-6,
                "{r:?}"
            );
        }
        let p = almost_period_probe(&rows, 1e-6).unwrap();
        assert_eq!(p, (1..=10).filter(|p| p % 2 == 0).collect::<Vec<_>>());
        assert!(almost_period_probe(&rows[..10], 1e-6).is_err());
    }

    #[test]
    fn report_statistics() {
        assert!((ls_slope(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]) - 2.0).abs() < 1e-14);
        assert_eq!(median([3.0, 1.0, 2.0].into_iter()), 2.0);
        assert_eq!(median([4.0, 1.0, 2.0, 3.0].into_iter()), 2.5);
    }
}
