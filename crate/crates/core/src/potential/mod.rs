//! Equilibrium measure, capacity and Green's functions of a finite-gap set.
//!
//! The equilibrium density is `|Q(x)| / (π √|R(x)|)` on the bands, where
//! `R(x) = ∏ (x - a_j)(x - b_j)` runs over all band endpoints and `Q` is the monic
//! polynomial of degree `ℓ` whose roots are the critical points of `G_𝔢`, one in
//! each gap. The roots are fixed by the `ℓ` conditions `∫_gap Q/√|R| = 0`, which
//! say that `G_𝔢` returns to zero across every gap.
//!
//! All internal work happens on the affinely normalized copy of the set whose hull
//! is `[-1, 1]`; Green's functions and measures are invariant under that map and
//! the capacity scales with it.

mod pole;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, arc_angle, arc_point, QuadTol};
use crate::realset::RealFiniteGapSet;

pub use pole::PoleGreen;

/// Default tolerance for the equilibrium solve.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Beyond this normalized distance from the origin real points use the far-field expansion.
const FAR: f64 = 3.0;

/// Character of a multiplicative function in cumulative band-measure coordinates.
///
/// Entry `j` is the phase (in turns, mod 1) picked up around a loop enclosing the
/// first `j` bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterVector {
    entries: Vec<f64>,
}

impl CharacterVector {
    pub fn new(entries: Vec<f64>) -> Self {
        CharacterVector {
            entries: entries.into_iter().map(wrap_unit).collect(),
        }
    }

    pub fn trivial(dim: usize) -> Self {
        CharacterVector {
            entries: vec![0.0; dim],
        }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Largest circular distance between corresponding entries.
    pub fn distance(&self, other: &CharacterVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "character dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| circle_dist(*a, *b))
            .fold(0.0, f64::max)
    }

    /// Pointwise product of characters (sum of phases).
    pub fn compose(&self, other: &CharacterVector) -> CharacterVector {
        CharacterVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Reduce to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x` mod 1 in `[-1/2, 1/2)`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = wrap_unit(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}

pub fn circle_dist(a: f64, b: f64) -> f64 {
    wrap_signed(a - b).abs()
}

/// Residuals recorded by the equilibrium solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResiduals {
    /// `|∫_gap Q/√|R|| / ∫_gap |Q|/√|R|` per gap.
    pub gap_conditions: Vec<f64>,
    /// `|Σ ρ(𝔢_j) - 1|`.
    pub normalization: f64,
    /// Largest `|G|` found on a sample grid of band points (log-potential route).
    pub max_green_on_set: f64,
    /// Difference between the interior-point and far-field values of `log C`.
    pub capacity_routes: f64,
}

impl EquilibriumResiduals {
    pub fn max(&self) -> f64 {
        self.gap_conditions
            .iter()
            .copied()
            .chain([
                self.normalization,
                self.max_green_on_set,
                self.capacity_routes,
            ])
            .fold(0.0, f64::max)
    }
}

/// Solved equilibrium problem for a finite-gap set.
#[derive(Debug, Clone)]
pub struct EquilibriumData {
    set: RealFiniteGapSet,
    center: f64,
    scale: f64,
    /// Normalized endpoints `e_0 < … < e_{2ℓ+1}`, hull `[-1, 1]`.
    ends: Vec<f64>,
    /// Normalized critical points, one per gap.
    crit: Vec<f64>,
    /// `log C` of the normalized set.
    log_cap_norm: f64,
    band_measures: Vec<f64>,
    residuals: EquilibriumResiduals,
    tol: f64,
    qtol: QuadTol,
}

/// Solve the equilibrium problem on `set`.
pub fn solve_equilibrium(set: &RealFiniteGapSet, tol: f64) -> Result<EquilibriumData> {
    EquilibriumData::solve(set, tol)
}

impl EquilibriumData {
    pub fn solve(set: &RealFiniteGapSet, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(Error::OutOfRange(format!(
                "equilibrium tolerance {tol} not in (0, 1e-4]"
            )));
        }
        let hull = set.hull();
        let center = hull.mid();
        let scale = 0.5 * hull.len();
        let mut ends: Vec<f64> = set
            .endpoints()
            .into_iter()
            .map(|x| (x - center) / scale)
            .collect();
        let last = ends.len() - 1;
        ends[0] = -1.0;
        ends[last] = 1.0;

        let mut eq = EquilibriumData {
            set: set.clone(),
            center,
            scale,
            ends,
            crit: Vec::new(),
            log_cap_norm: 0.0,
            band_measures: Vec::new(),
            residuals: EquilibriumResiduals {
                gap_conditions: Vec::new(),
                normalization: 0.0,
                max_green_on_set: 0.0,
                capacity_routes: 0.0,
            },
            tol,
            qtol: QuadTol::default(),
        };

        eq.crit = eq.solve_critical_points()?;
        eq.band_measures = (0..eq.band_count())
            .map(|j| eq.interval_integral(2 * j, |u| eq.q_norm(u).abs()).value / PI)
            .collect();
        let log_cap_a = eq.log_capacity_interior();
        let log_cap_b = eq.log_capacity_far_field();
        eq.log_cap_norm = log_cap_a;

        let gap_conditions = (0..eq.gap_count())
            .map(|i| {
                let signed = eq.interval_integral(2 * i + 1, |u| eq.q_norm(u)).value;
                let abs = eq
                    .interval_integral(2 * i + 1, |u| eq.q_norm(u).abs())
                    .value;
                (signed / abs).abs()
            })
            .collect();
        let normalization = (eq.band_measures.iter().sum::<f64>() - 1.0).abs();
        let max_green_on_set = eq.green_on_set_sample();
        eq.residuals = EquilibriumResiduals {
            gap_conditions,
            normalization,
            max_green_on_set,
            capacity_routes: (log_cap_a - log_cap_b).abs(),
        };
        if eq.residuals.max() > tol || !eq.log_cap_norm.is_finite() {
            return Err(Error::EquilibriumNonConvergence(format!(
                "{:?}",
                eq.residuals
            )));
        }
        Ok(eq)
    }

    pub fn set(&self) -> &RealFiniteGapSet {
        &self.set
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn residuals(&self) -> &EquilibriumResiduals {
        &self.residuals
    }

    pub fn gap_count(&self) -> usize {
        self.crit_len_from_ends()
    }

    fn crit_len_from_ends(&self) -> usize {
        self.ends.len() / 2 - 1
    }

    pub fn band_count(&self) -> usize {
        self.ends.len() / 2
    }

    /// Critical points `c_j` of `G_𝔢`, one per gap.
    pub fn critical_points(&self) -> Vec<f64> {
        self.crit.iter().map(|&c| self.denorm(c)).collect()
    }

    pub fn log_capacity(&self) -> f64 {
        self.log_cap_norm + self.scale.ln()
    }

    pub fn capacity(&self) -> f64 {
        self.log_capacity().exp()
    }

    /// `ρ_𝔢(𝔢_j)` for each band.
    pub fn band_measures(&self) -> &[f64] {
        &self.band_measures
    }

    /// `PW(𝔢) = Σ_j G_𝔢(c_j)`.
    pub fn pw_sum(&self) -> f64 {
        self.pw_contributions().iter().sum()
    }

    /// The individual terms `G_𝔢(c_j)` of the PW sum.
    pub fn pw_contributions(&self) -> Vec<f64> {
        self.crit.iter().map(|&c| self.green_real_norm(c)).collect()
    }

    /// `χ_𝔢ⁿ` in cumulative band-measure coordinates.
    pub fn character_power(&self, n: i64) -> CharacterVector {
        let mut cum = 0.0;
        let mut entries = Vec::with_capacity(self.gap_count());
        for j in 0..self.gap_count() {
            cum += self.band_measures[j];
            entries.push(n as f64 * cum);
        }
        CharacterVector::new(entries)
    }

    /// Green's function with pole at infinity, `z` real.
    pub fn green_real(&self, x: f64) -> f64 {
        self.green_real_norm(self.norm(x))
    }

    /// Green's function with pole at infinity at a complex point.
    pub fn green(&self, z: Complex64) -> f64 {
        if z.im == 0.0 {
            return self.green_real(z.re);
        }
        let u = (z - self.center) / self.scale;
        (self.log_potential_off(u) - self.log_cap_norm).max(0.0)
    }

    /// Green's function evaluated through `G = -log C + ∫ log|z-x| dρ`, used as an
    /// independent route for real points as well.
    pub fn green_log_potential(&self, z: Complex64) -> f64 {
        let u = (z - self.center) / self.scale;
        if u.im == 0.0 {
            if let Some(j) = self.band_of_norm(u.re) {
                return self.log_potential_on_band(u.re, j) - self.log_cap_norm;
            }
        }
        self.log_potential_off(u) - self.log_cap_norm
    }

    /// Green's function with a finite real pole.
    pub fn pole(&self, w: f64) -> Result<PoleGreen<'_>> {
        PoleGreen::new(self, self.norm(w))
    }

    // ---------------------------------------------------------------- internals

    #[inline]
    pub(crate) fn norm(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    #[inline]
    pub(crate) fn denorm(&self, u: f64) -> f64 {
        self.center + self.scale * u
    }

    pub(crate) fn ends(&self) -> &[f64] {
        &self.ends
    }

    pub(crate) fn qtol(&self) -> QuadTol {
        self.qtol
    }

    pub(crate) fn band_of_norm(&self, u: f64) -> Option<usize> {
        (0..self.band_count()).find(|&j| self.ends[2 * j] <= u && u <= self.ends[2 * j + 1])
    }

    pub(crate) fn gap_of_norm(&self, u: f64) -> Option<usize> {
        (0..self.gap_count()).find(|&i| self.ends[2 * i + 1] < u && u < self.ends[2 * i + 2])
    }

    /// `Q(u) = ∏ (u - c_j)`.
    pub(crate) fn q_norm(&self, u: f64) -> f64 {
        self.crit.iter().map(|&c| u - c).product()
    }

    /// `∏_{k ∉ {i, i+1}} |u - e_k|` for the interval `[e_i, e_{i+1}]`.
    pub(crate) fn abs_rtilde(&self, u: f64, i: usize) -> f64 {
        self.ends
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != i + 1)
            .map(|(_, &e)| (u - e).abs())
            .product()
    }

    /// `∏_{k ≠ m} |u - e_k|`.
    pub(crate) fn abs_r_without(&self, u: f64, m: usize) -> f64 {
        self.ends
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != m)
            .map(|(_, &e)| (u - e).abs())
            .product()
    }

    pub(crate) fn abs_r(&self, u: f64) -> f64 {
        self.ends.iter().map(|&e| (u - e).abs()).product()
    }

    /// `∫_{e_i}^{e_{i+1}} num(u)/√|R(u)| du` in cosine coordinates.
    pub(crate) fn interval_integral<F: Fn(f64) -> f64>(&self, i: usize, num: F) -> quad::Estimate {
        let (lo, hi) = (self.ends[i], self.ends[i + 1]);
        quad::arc_integral(lo, hi, self.qtol, |u| num(u) / self.abs_rtilde(u, i).sqrt())
    }

    fn solve_critical_points(&self) -> Result<Vec<f64>> {
        let l = self.gap_count();
        if l == 0 {
            return Ok(Vec::new());
        }
        // Q = 2^{1-ℓ} T_ℓ + Σ_{k<ℓ} q_k T_k; the gap conditions are linear in q.
        let lead = 2f64.powi(1 - l as i32);
        let mut m = DMatrix::<f64>::zeros(l, l);
        let mut rhs = DVector::<f64>::zeros(l);
        for i in 0..l {
            for k in 0..l {
                m[(i, k)] = self.interval_integral(2 * i + 1, |u| cheb(k, u)).value;
            }
            rhs[i] = -lead * self.interval_integral(2 * i + 1, |u| cheb(l, u)).value;
        }
        let q = m.lu().solve(&rhs).ok_or_else(|| {
            Error::EquilibriumNonConvergence("singular gap-condition system".into())
        })?;
        let qpoly = |u: f64| {
            let mut s = lead * cheb(l, u);
            for k in 0..l {
                s += q[k] * cheb(k, u);
            }
            s
        };
        let mut crit = Vec::with_capacity(l);
        for i in 0..l {
            let (lo, hi) = (self.ends[2 * i + 1], self.ends[2 * i + 2]);
            let c = bisect(qpoly, lo, hi).ok_or_else(|| {
                Error::EquilibriumNonConvergence(format!("no sign change of Q in gap {i}"))
            })?;
            crit.push(c);
        }
        self.polish_critical_points(&mut crit);
        Ok(crit)
    }

    /// Newton steps on the gap conditions in product form, kept inside each gap.
    fn polish_critical_points(&self, crit: &mut [f64]) {
        let l = crit.len();
        for _ in 0..3 {
            let mut f = DVector::<f64>::zeros(l);
            let mut jac = DMatrix::<f64>::zeros(l, l);
            for i in 0..l {
                let c = crit.to_vec();
                f[i] = self
                    .interval_integral(2 * i + 1, |u| c.iter().map(|&cj| u - cj).product())
                    .value;
                for j in 0..l {
                    let c = crit.to_vec();
                    jac[(i, j)] = -self
                        .interval_integral(2 * i + 1, |u| {
                            c.iter()
                                .enumerate()
                                .filter(|(k, _)| *k != j)
                                .map(|(_, &ck)| u - ck)
                                .product()
                        })
                        .value;
                }
            }
            let Some(step) = jac.lu().solve(&f) else {
                return;
            };
            let mut small = true;
            for j in 0..l {
                let (lo, hi) = (self.ends[2 * j + 1], self.ends[2 * j + 2]);
                let cand = crit[j] - step[j];
                if cand > lo && cand < hi {
                    if step[j].abs() > 1e-15 * (hi - lo) {
                        small = false;
                    }
                    crit[j] = cand;
                }
            }
            if small {
                return;
            }
        }
    }

    /// `log C` from `∫ log|x₀ - x| dρ(x)` at the midpoint `x₀` of the widest band.
    fn log_capacity_interior(&self) -> f64 {
        let widest = (0..self.band_count())
            .max_by(|&a, &b| {
                let la = self.ends[2 * a + 1] - self.ends[2 * a];
                let lb = self.ends[2 * b + 1] - self.ends[2 * b];
                la.total_cmp(&lb)
            })
            .unwrap_or(0);
        let x0 = 0.5 * (self.ends[2 * widest] + self.ends[2 * widest + 1]);
        self.log_capacity_at(x0)
    }

    /// `∫ log|x₀ - x| dρ(x)` for a band point `x₀`; equals `log C` for every such point.
    pub(crate) fn log_capacity_at(&self, x0: f64) -> f64 {
        match self.band_of_norm(x0) {
            Some(j) => self.log_potential_on_band(x0, j),
            None => f64::NAN,
        }
    }

    /// `log C = log 3 - G(3) + ∫_0^{1/3} [1 - Q/√R(1/s)·(1/s)]/s ds`.
    fn log_capacity_far_field(&self) -> f64 {
        FAR.ln() - self.green_outer_near(FAR) + self.far_tail(1.0 / FAR, 1.0)
    }

    /// `∫_0^σ [1 - ∏(1 - d s c_j)/∏√(1 - d s e_k)] / s ds`, the far-field remainder
    /// on the side `d = ±1`.
    fn far_tail(&self, sigma: f64, d: f64) -> f64 {
        let integrand = |s: f64| {
            if s == 0.0 {
                // derivative of the bracket at s = 0
                let c: f64 = self.crit.iter().sum();
                let e: f64 = self.ends.iter().sum();
                return d * (c - 0.5 * e);
            }
            let mut lg = 0.0;
            for &c in &self.crit {
                lg += (-d * s * c).ln_1p();
            }
            for &e in &self.ends {
                lg -= 0.5 * (-d * s * e).ln_1p();
            }
            -lg.exp_m1() / s
        };
        quad::adaptive(0.0, sigma, self.qtol, integrand).value
    }

    pub(crate) fn green_real_norm(&self, u: f64) -> f64 {
        let l = self.gap_count();
        if u.abs() > FAR {
            let d = u.signum();
            return (u.abs().ln() - self.log_cap_norm + self.far_tail(1.0 / u.abs(), d)).max(0.0);
        }
        if !(-1.0..=1.0).contains(&u) {
            return self.green_outer_near(u);
        }
        for i in 0..l {
            let (lo, hi) = (self.ends[2 * i + 1], self.ends[2 * i + 2]);
            if lo < u && u < hi {
                let th = arc_angle(lo, hi, u);
                let th_e = if th <= 0.5 * PI { 0.0 } else { PI };
                let v = quad::arc_partial(lo, hi, th_e, th, self.qtol, |t| {
                    self.q_norm(t) / self.abs_rtilde(t, 2 * i + 1).sqrt()
                });
                return v.value.abs();
            }
        }
        0.0
    }

    /// `|∫_e^u Q/√R|` for `1 < |u| ≤ FAR`, with `u = e ± v²` to absorb the endpoint.
    fn green_outer_near(&self, u: f64) -> f64 {
        let (m, e) = if u > 0.0 {
            (self.ends.len() - 1, 1.0)
        } else {
            (0, -1.0)
        };
        let d = (u - e).signum();
        let top = (u - e).abs().sqrt();
        let v = quad::adaptive(0.0, top, self.qtol, |v| {
            let t = e + d * v * v;
            2.0 * self.q_norm(t) / self.abs_r_without(t, m).sqrt()
        });
        v.value.abs()
    }

    /// `∫ log|u - x| dρ(x)` for `u` off the set (complex or real).
    fn log_potential_off(&self, u: Complex64) -> f64 {
        self.log_moment(u, |t| self.q_norm(t).abs()) / PI
    }

    /// `∫ log|x₀ - x| dρ(x)` for `x₀` on the set.
    fn log_potential_on_band(&self, x0: f64, _jb: usize) -> f64 {
        self.log_moment(Complex64::new(x0, 0.0), |t| self.q_norm(t).abs()) / PI
    }

    /// `Σ_bands ∫ log|u - t| num(t)/√|R(t)| dt`. A real `u` on a band has its log
    /// singularity split off and graded.
    pub(crate) fn log_moment<F: Fn(f64) -> f64>(&self, u: Complex64, num: F) -> f64 {
        let on_band = if u.im == 0.0 {
            self.band_of_norm(u.re)
        } else {
            None
        };
        let mut total = 0.0;
        for j in 0..self.band_count() {
            let i = 2 * j;
            if on_band != Some(j) {
                total += self
                    .interval_integral(i, |t| (u - t).norm().ln() * num(t))
                    .value;
                continue;
            }
            let x0 = u.re;
            let (lo, hi) = (self.ends[i], self.ends[i + 1]);
            let th0 = arc_angle(lo, hi, x0);
            let half = 0.5 * (hi - lo);
            let f = |th: f64| {
                let t = arc_point(lo, hi, th);
                // x0 - t = -2·half·sin((θ+θ0)/2)·sin((θ-θ0)/2), exact near θ0
                let dist =
                    2.0 * half * (0.5 * (th + th0)).sin().abs() * (0.5 * (th - th0)).sin().abs();
                if dist == 0.0 {
                    return 0.0;
                }
                dist.ln() * num(t) / self.abs_rtilde(t, i).sqrt()
            };
            if th0 > 0.0 {
                total -= quad::graded(th0, 0.0, self.qtol, f).value;
            }
            if th0 < PI {
                total += quad::graded(th0, PI, self.qtol, f).value;
            }
        }
        total
    }

    /// Sample `|G|` on the bands through the log-potential route.
    fn green_on_set_sample(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.band_count() {
            let (lo, hi) = (self.ends[2 * j], self.ends[2 * j + 1]);
            for th in [0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI] {
                let x = match th {
                    0.0 => lo,
                    PI => hi,
                    _ => arc_point(lo, hi, th),
                };
                let g = self.log_potential_on_band(x, j) - self.log_cap_norm;
                worst = worst.max(g.abs());
            }
        }
        worst
    }
}

/// Chebyshev polynomial of the first kind `T_k(u)`.
pub(crate) fn cheb(k: usize, u: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => u,
        _ => {
            let (mut a, mut b) = (1.0, u);
            for _ in 1..k {
                let c = 2.0 * u * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to machine resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// `C(𝔢)` of a solved set.
pub fn capacity(eq: &EquilibriumData) -> f64 {
    eq.capacity()
}

/// `G_𝔢(z)`; `z` may be complex.
pub fn green_at(eq: &EquilibriumData, z: Complex64) -> f64 {
    eq.green(z)
}

/// `G_𝔢(z, w)` for a real pole `w ∉ 𝔢`.
pub fn green_two(eq: &EquilibriumData, z: Complex64, w: f64) -> Result<f64> {
    eq.pole(w)?.green(z)
}

pub fn pw_sum(eq: &EquilibriumData) -> f64 {
    eq.pw_sum()
}

pub fn band_measures(eq: &EquilibriumData) -> Vec<f64> {
    eq.band_measures().to_vec()
}

pub fn character_power(eq: &EquilibriumData, n: i64) -> CharacterVector {
    eq.character_power(n)
}

/// `|B_𝔢(z, x)| = exp(-G_𝔢(z, x))`; zero at the pole.
pub fn blaschke_modulus(eq: &EquilibriumData, z: Complex64, x: f64) -> Result<f64> {
    let pole = eq.pole(x)?;
    if z.im == 0.0 && z.re == x {
        return Ok(0.0);
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Ok((-pole.green_at_infinity()).exp());
    }
    Ok((-pole.green(z)?).exp())
}
