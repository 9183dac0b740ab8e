//! Chebyshev polynomials of a finite-gap set by multi-interval Remez exchange.
//!
//! The exchange runs on the hull-normalized set with the reference interpolant in
//! barycentric form. Once converged, the polynomial is stored through its zeros,
//! which is the only representation that keeps relative accuracy inside the gaps,
//! where `|T_n|` grows like `t_n e^{n G}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{bisect, EquilibriumData, DEFAULT_TOL};
use crate::quad::{self, arc_point, QuadTol};
use crate::realset::{Interval, RealFiniteGapSet};

pub const DEFAULT_DEGREE_CAP: usize = 60;

/// Zeros closer than this to a gap endpoint are not counted as gap zeros.
pub const GAP_ZERO_EDGE: f64 = 1e-10;

/// Critical values with `|T|/t_n - 1` below this make adjacent bands touch.
pub const TOUCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemezOptions {
    /// Relative gap between the sup norm and the levelled error at which the exchange stops.
    pub tol: f64,
    /// Candidate points per band, per unit of degree.
    pub grid_per_degree: usize,
    pub max_iter: usize,
    pub degree_cap: usize,
}

impl Default for RemezOptions {
    fn default() -> Self {
        RemezOptions {
            tol: 1e-12,
            grid_per_degree: 50,
            max_iter: 100,
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

/// A monic polynomial `∏ (x - z_k)` kept as its zeros in hull coordinates
/// `u = (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonicPolynomial {
    center: f64,
    scale: f64,
    /// zeros in hull coordinates, increasing
    zeros: Vec<f64>,
}

impl MonicPolynomial {
    /// From zeros in original coordinates, using the hull of `set` as the frame.
    pub fn from_zeros(set: &RealFiniteGapSet, zeros: &[f64]) -> Self {
        let (center, scale) = frame(set);
        let mut z: Vec<f64> = zeros.iter().map(|&x| (x - center) / scale).collect();
        z.sort_by(f64::total_cmp);
        MonicPolynomial {
            center,
            scale,
            zeros: z,
        }
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> Vec<f64> {
        self.zeros
            .iter()
            .map(|&u| self.center + self.scale * u)
            .collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale.powi(self.degree() as i32) * self.eval_norm(self.norm(x))
    }

    /// `log |P(x)|`.
    pub fn log_abs(&self, x: f64) -> f64 {
        let u = self.norm(x);
        self.degree() as f64 * self.scale.ln()
            + self.zeros.iter().map(|&z| (u - z).abs().ln()).sum::<f64>()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.scale.powi(self.degree() as i32 - 1) * self.deriv_norm(self.norm(x))
    }

    /// Coefficients of `1, x, …, x^n` (monomial basis; for output only).
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        let mut c = vec![1.0];
        for z in self.zeros() {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= z * ck;
            }
            c = next;
        }
        c
    }

    /// Coefficients `a_k` with `∏(u - z_k) = Σ a_k T_k(u)` in the hull variable.
    pub fn hull_chebyshev_coefficients(&self) -> Vec<f64> {
        let n = self.degree();
        let m = n + 1;
        let vals: Vec<f64> = (0..m)
            .map(|j| self.eval_norm((PI * (j as f64 + 0.5) / m as f64).cos()))
            .collect();
        (0..m)
            .map(|k| {
                let s: f64 = (0..m)
                    .map(|j| vals[j] * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                    .sum();
                if k == 0 {
                    s / m as f64
                } else {
                    2.0 * s / m as f64
                }
            })
            .collect()
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn norm(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    #[inline]
    fn denorm(&self, u: f64) -> f64 {
        self.center + self.scale * u
    }

    pub(crate) fn eval_norm(&self, u: f64) -> f64 {
        self.zeros.iter().map(|&z| u - z).product()
    }

    pub(crate) fn deriv_norm(&self, u: f64) -> f64 {
        let (mut p, mut dp) = (1.0, 0.0);
        for &z in &self.zeros {
            dp = dp * (u - z) + p;
            p *= u - z;
        }
        dp
    }

    /// Second divided difference `P[u, a, a]`, built factor by factor.
    pub(crate) fn second_divided_diff_norm(&self, u: f64, a: f64) -> f64 {
        // Leibniz rule with g = x - z: (pg)[u,a] = p(u) + p[u,a](a-z),
        // (pg)[u,a,a] = p[u,a] + p[u,a,a](a-z)
        let (mut pu, mut d1, mut d2) = (1.0, 0.0, 0.0);
        for &z in &self.zeros {
            d2 = d1 + d2 * (a - z);
            d1 = pu + d1 * (a - z);
            pu *= u - z;
        }
        d2
    }
}

/// Center and half-length of the hull.
fn frame(set: &RealFiniteGapSet) -> (f64, f64) {
    let h = set.hull();
    (h.mid(), 0.5 * h.len())
}

fn norm_bands(set: &RealFiniteGapSet) -> Vec<(f64, f64)> {
    let (c, s) = frame(set);
    let nb = set.bands().len();
    set.bands()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let lo = if j == 0 { -1.0 } else { (b.lo() - c) / s };
            let hi = if j + 1 == nb { 1.0 } else { (b.hi() - c) / s };
            (lo, hi)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternationPoint {
    pub x: f64,
    /// `T_n(x)`
    pub value: f64,
}

/// Output of the exchange for one degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChebyshevSolution {
    pub set: RealFiniteGapSet,
    pub n: usize,
    pub poly: MonicPolynomial,
    /// `log t_n`
    pub log_t: f64,
    pub alternation: Vec<AlternationPoint>,
    pub gap_zeros: BTreeMap<usize, f64>,
    pub iterations: usize,
    /// Final relative gap between the sup norm and the levelled error.
    pub level_gap: f64,
}

impl ChebyshevSolution {
    pub fn t_n(&self) -> f64 {
        self.log_t.exp()
    }

    /// `log t_n` of the hull-normalized problem.
    fn log_t_norm(&self) -> f64 {
        self.log_t - self.n as f64 * self.poly.scale.ln()
    }

    pub fn zeros(&self) -> Vec<f64> {
        self.poly.zeros()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }
}

/// `T_n` for `set` with default options.
pub fn chebyshev(
    set: &RealFiniteGapSet,
    n: usize,
    opts: &RemezOptions,
) -> Result<ChebyshevSolution> {
    let eq = EquilibriumData::solve(set, DEFAULT_TOL)?;
    chebyshev_with(&eq, n, opts)
}

/// `T_n` reusing a solved equilibrium problem (its band measures seed the reference).
pub fn chebyshev_with(
    eq: &EquilibriumData,
    n: usize,
    opts: &RemezOptions,
) -> Result<ChebyshevSolution> {
    check_degree(n, opts)?;
    let bands = norm_bands(eq.set());
    let reference = initial_reference(&bands, eq.band_measures(), n);
    exchange(eq.set(), &bands, n, opts, reference)
}

/// `T_n` from a caller-supplied starting reference of `n + 1` points of the set.
pub fn chebyshev_from_reference(
    set: &RealFiniteGapSet,
    n: usize,
    opts: &RemezOptions,
    reference: &[f64],
) -> Result<ChebyshevSolution> {
    check_degree(n, opts)?;
    if reference.len() != n + 1 {
        return Err(Error::OutOfRange(format!(
            "reference has {} points, need {}",
            reference.len(),
            n + 1
        )));
    }
    let (c, s) = frame(set);
    let mut r: Vec<f64> = reference.iter().map(|&x| (x - c) / s).collect();
    r.sort_by(f64::total_cmp);
    if r.windows(2).any(|w| w[0] >= w[1]) || reference.iter().any(|&x| !set.contains(x)) {
        return Err(Error::OutOfRange(
            "reference points must be distinct points of the set".into(),
        ));
    }
    exchange(set, &norm_bands(set), n, opts, r)
}

fn check_degree(n: usize, opts: &RemezOptions) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange("degree must be at least 1".into()));
    }
    if n > opts.degree_cap {
        return Err(Error::DegreeCap {
            n,
            cap: opts.degree_cap,
        });
    }
    Ok(())
}

/// `n + 1` points spread over the bands roughly in proportion to their equilibrium
/// measure, Chebyshev-extrema-like inside each band.
fn initial_reference(bands: &[(f64, f64)], measures: &[f64], n: usize) -> Vec<f64> {
    let total = n + 1;
    let want: Vec<f64> = measures.iter().map(|m| m * total as f64).collect();
    let mut counts: Vec<usize> = want.iter().map(|w| w.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..bands.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = want[a] - want[a].floor();
        let fb = want[b] - want[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &j in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[j] += 1;
        rest -= 1;
    }
    let mut r = Vec::with_capacity(total);
    for (j, &(lo, hi)) in bands.iter().enumerate() {
        let k = counts[j];
        if k == 1 {
            r.push(0.5 * (lo + hi));
        } else {
            for i in 0..k {
                r.push(arc_point(lo, hi, PI * i as f64 / (k - 1) as f64));
            }
        }
    }
    r
}

/// Barycentric interpolant of `(-1)^i h` on the reference, `h` fixed by monicity.
struct Levelled {
    x: Vec<f64>,
    /// scaled weights, `w_i / max|w|`
    w: Vec<f64>,
    /// `Σ (-1)^i w_i` with the scaled weights
    s: f64,
    /// `log |h|`
    log_h: f64,
}

impl Levelled {
    fn new(x: &[f64]) -> Levelled {
        let m = x.len();
        let mut logw = vec![0.0; m];
        let mut sign = vec![1.0; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let d = x[i] - x[j];
                    logw[i] -= d.abs().ln();
                    if d < 0.0 {
                        sign[i] = -sign[i];
                    }
                }
            }
        }
        let big = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = (0..m).map(|i| sign[i] * (logw[i] - big).exp()).collect();
        let s: f64 = w
            .iter()
            .enumerate()
            .map(|(i, wi)| if i % 2 == 0 { *wi } else { -*wi })
            .sum();
        Levelled {
            x: x.to_vec(),
            w,
            s,
            log_h: -big - s.abs().ln(),
        }
    }

    fn h(&self) -> f64 {
        self.log_h.exp() * self.s.signum()
    }

    fn eval(&self, u: f64) -> f64 {
        let mut ell = 1.0;
        let mut sum = 0.0;
        for (i, (&xi, &wi)) in self.x.iter().zip(&self.w).enumerate() {
            let d = u - xi;
            if d == 0.0 {
                return if i % 2 == 0 { self.h() } else { -self.h() };
            }
            ell *= d;
            sum += if i % 2 == 0 { wi / d } else { -wi / d };
        }
        ell * sum / self.s
    }
}

/// Local extrema of `|f|` on the bands: a cosine grid of `m + 1` points per band,
/// golden-section refinement of interior maxima, band endpoints always kept.
fn band_extrema<F: Fn(f64) -> f64>(bands: &[(f64, f64)], m: usize, f: &F) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(lo, hi) in bands {
        let xs: Vec<f64> = (0..=m)
            .map(|k| match k {
                0 => lo,
                k if k == m => hi,
                _ => arc_point(lo, hi, PI * k as f64 / m as f64),
            })
            .collect();
        let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        out.push((lo, vs[0]));
        for k in 1..m {
            let a = vs[k].abs();
            if a >= vs[k - 1].abs() && a >= vs[k + 1].abs() && a > 0.0 {
                let x = golden_max(|x| f(x).abs(), xs[k - 1], xs[k + 1]);
                let (x, v) = if f(x).abs() >= a {
                    (x, f(x))
                } else {
                    (xs[k], vs[k])
                };
                out.push((x, v));
            }
        }
        out.push((hi, vs[m]));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if b - a <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Collapse to an alternating sequence of `keep` points: same-sign runs keep their
/// largest `|value|` (leftmost on ties), then the weakest points are dropped.
fn alternating_subset(mut pts: Vec<(f64, f64)>, keep: usize) -> Vec<(f64, f64)> {
    pts.retain(|p| p.1 != 0.0);
    let merge = |pts: Vec<(f64, f64)>| {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            match out.last_mut() {
                Some(last) if last.1.signum() == p.1.signum() => {
                    if p.1.abs() > last.1.abs() {
                        *last = p;
                    }
                }
                _ => out.push(p),
            }
        }
        out
    };
    let mut pts = merge(pts);
    while pts.len() > keep {
        if pts.len() == keep + 1 {
            if pts[0].1.abs() <= pts[pts.len() - 1].1.abs() {
                pts.remove(0);
            } else {
                pts.pop();
            }
            continue;
        }
        let mut weakest = 0;
        for i in 1..pts.len() {
            if pts[i].1.abs() < pts[weakest].1.abs() {
                weakest = i;
            }
        }
        pts.remove(weakest);
        pts = merge(pts);
    }
    pts
}

fn exchange(
    set: &RealFiniteGapSet,
    bands: &[(f64, f64)],
    n: usize,
    opts: &RemezOptions,
    mut reference: Vec<f64>,
) -> Result<ChebyshevSolution> {
    let m = (opts.grid_per_degree * n).max(16);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut lev = Levelled::new(&reference);
    while iterations < opts.max_iter {
        iterations += 1;
        lev = Levelled::new(&reference);
        let h = lev.h().abs();
        let f = |u: f64| lev.eval(u);
        let mut cand = band_extrema(bands, m, &f);
        cand.extend(reference.iter().map(|&x| (x, lev.eval(x))));
        cand.sort_by(|a, b| a.0.total_cmp(&b.0));
        let top = cand.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        gap = (top - h) / top;
        if gap < opts.tol {
            break;
        }
        cand.retain(|p| p.1.abs() >= h * (1.0 - 1e-12));
        let next = alternating_subset(cand, n + 1);
        if next.len() < n + 1 {
            return Err(Error::RemezNonConvergence {
                n,
                iterations,
                gap,
                reference: denorm_all(set, &reference),
            });
        }
        reference = next.iter().map(|p| p.0).collect();
    }
    if gap >= opts.tol {
        return Err(Error::RemezNonConvergence {
            n,
            iterations,
            gap,
            reference: denorm_all(set, &reference),
        });
    }

    // zeros: one sign change between consecutive reference points
    let f = |u: f64| lev.eval(u);
    let mut zeros = Vec::with_capacity(n);
    for w in reference.windows(2) {
        let z = bisect(f, w[0], w[1]).ok_or_else(|| {
            Error::RootIsolation(format!("no sign change on [{}, {}]", w[0], w[1]))
        })?;
        zeros.push(z);
    }
    let (center, scale) = frame(set);
    let poly = MonicPolynomial {
        center,
        scale,
        zeros,
    };
    let g = |u: f64| poly.eval_norm(u);
    let ext = band_extrema(bands, m, &g);
    let t_norm = ext.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let log_t = t_norm.ln() + n as f64 * scale.ln();
    let alternation = reference
        .iter()
        .map(|&u| AlternationPoint {
            x: center + scale * u,
            value: scale.powi(n as i32) * poly.eval_norm(u),
        })
        .collect();
    let mut sol = ChebyshevSolution {
        set: set.clone(),
        n,
        poly,
        log_t,
        alternation,
        gap_zeros: BTreeMap::new(),
        iterations,
        level_gap: gap,
    };
    sol.gap_zeros = gap_zeros(&sol, set)?;
    Ok(sol)
}

fn denorm_all(set: &RealFiniteGapSet, u: &[f64]) -> Vec<f64> {
    let (c, s) = frame(set);
    u.iter().map(|&v| c + s * v).collect()
}

/// Pass/fail report of the equioscillation property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternationCertificate {
    pub pass: bool,
    /// Sup norm found on the set.
    pub sup_norm: f64,
    /// Level the alternation was checked against.
    pub level: f64,
    pub points: Vec<AlternationPoint>,
    pub message: String,
}

/// Checks `sol` against its own reported `t_n`.
pub fn alternation_certificate(
    sol: &ChebyshevSolution,
    set: &RealFiniteGapSet,
) -> AlternationCertificate {
    let p = sol.poly.clone();
    certify(|x| p.eval(x), sol.n, set, Some(sol.t_n()), 1e-9)
}

/// Looks for `n + 1` points of `set` where `f` alternates at the level of its sup
/// norm (or of `level`, if given) within relative tolerance `tol`.
pub fn certify<F: Fn(f64) -> f64>(
    f: F,
    n: usize,
    set: &RealFiniteGapSet,
    level: Option<f64>,
    tol: f64,
) -> AlternationCertificate {
    let (c, s) = frame(set);
    let bands = norm_bands(set);
    let g = |u: f64| f(c + s * u);
    let ext = band_extrema(&bands, (50 * n).max(64), &g);
    let sup = ext.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let level = level.unwrap_or(sup);
    let strong: Vec<(f64, f64)> = ext
        .iter()
        .copied()
        .filter(|p| p.1.abs() >= level * (1.0 - tol))
        .collect();
    let alt = alternating_subset(strong, n + 1);
    let points: Vec<AlternationPoint> = alt
        .iter()
        .map(|p| AlternationPoint {
            x: c + s * p.0,
            value: p.1,
        })
        .collect();
    let mut msgs = Vec::new();
    if sup > level * (1.0 + tol) {
        msgs.push(format!("sup norm {sup:.6e} exceeds level {level:.6e}"));
    }
    if points.len() < n + 1 {
        msgs.push(format!(
            "only {} alternating extrema at level {level:.6e}, need {}",
            points.len(),
            n + 1
        ));
    }
    AlternationCertificate {
        pass: msgs.is_empty(),
        sup_norm: sup,
        level,
        points,
        message: if msgs.is_empty() {
            "ok".into()
        } else {
            msgs.join("; ")
        },
    }
}

/// One band of `𝔢_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelBand {
    pub lo: f64,
    pub hi: f64,
    /// The left endpoint is shared with the previous band.
    pub touches_left: bool,
    pub touches_right: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDecomposition {
    pub bands: Vec<LevelBand>,
    pub masses: Vec<f64>,
}

impl BandDecomposition {
    /// `𝔢_n` as a set, touching bands merged.
    pub fn union(&self) -> Result<RealFiniteGapSet> {
        let mut ivs: Vec<(f64, f64)> = Vec::new();
        for b in &self.bands {
            match ivs.last_mut() {
                Some(last) if b.touches_left => last.1 = b.hi,
                _ => ivs.push((b.lo, b.hi)),
            }
        }
        RealFiniteGapSet::from_pairs(&ivs)
    }

    /// Whether `set ⊆ 𝔢_n` up to `tol` at the endpoints.
    pub fn contains_set(&self, set: &RealFiniteGapSet, tol: f64) -> bool {
        let Ok(u) = self.union() else { return false };
        set.bands().iter().all(|b| {
            u.bands()
                .iter()
                .any(|e| e.lo() <= b.lo() + tol && b.hi() <= e.hi() + tol)
        })
    }
}

/// `𝔢_n = T_n^{-1}([-t_n, t_n])` split into its `n` monotone branches.
pub fn bands(
    sol: &ChebyshevSolution,
    _set: &RealFiniteGapSet,
    _tol: f64,
) -> Result<BandDecomposition> {
    let n = sol.n;
    let p = &sol.poly;
    let t = sol.log_t_norm().exp();
    let z = &p.zeros;
    // critical points between consecutive zeros: roots of Σ 1/(u - z_k)
    let mut crit = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let (a, b) = (z[k], z[k + 1]);
        let f = |u: f64| z.iter().map(|&zk| 1.0 / (u - zk)).sum::<f64>();
        let lo = a + (b - a) * 1e-12;
        let hi = b - (b - a) * 1e-12;
        let y = bisect(f, lo, hi).ok_or_else(|| {
            Error::RootIsolation(format!("critical point between zeros {a} and {b}"))
        })?;
        crit.push(y);
    }
    let touching: Vec<bool> = crit
        .iter()
        .map(|&y| p.eval_norm(y).abs() / t - 1.0 < TOUCH_TOL)
        .collect();

    let level = |u: f64, s: f64| p.eval_norm(u) / t - s;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let left = if k == 0 { None } else { Some(crit[k - 1]) };
        let right = if k + 1 == n { None } else { Some(crit[k]) };
        let zk = z[k];
        // on this branch T runs monotonically through zero at z_k
        let slope = p.deriv_norm(zk).signum();
        let lo = match left {
            Some(y) if touching[k - 1] => y,
            Some(y) => bisect(|u| level(u, -slope), y, zk)
                .ok_or_else(|| Error::RootIsolation(format!("band {k} left edge")))?,
            None => {
                let mut a = -1.0;
                while level(a, -slope) * level(zk, -slope) > 0.0 {
                    a = zk - 2.0 * (zk - a);
                }
                bisect(|u| level(u, -slope), a, zk)
                    .ok_or_else(|| Error::RootIsolation("first band left edge".into()))?
            }
        };
        let hi = match right {
            Some(y) if touching[k] => y,
            Some(y) => bisect(|u| level(u, slope), zk, y)
                .ok_or_else(|| Error::RootIsolation(format!("band {k} right edge")))?,
            None => {
                let mut b = 1.0;
                while level(b, slope) * level(zk, slope) > 0.0 {
                    b = zk + 2.0 * (b - zk);
                }
                bisect(|u| level(u, slope), zk, b)
                    .ok_or_else(|| Error::RootIsolation("last band right edge".into()))?
            }
        };
        out.push(LevelBand {
            lo: p.center + p.scale * lo,
            hi: p.center + p.scale * hi,
            touches_left: left.is_some() && touching[k - 1],
            touches_right: right.is_some() && touching[k],
        });
    }
    let mut dec = BandDecomposition {
        bands: out,
        masses: Vec::new(),
    };
    dec.masses = dec
        .bands
        .iter()
        .map(|b| rho_n_mass(sol, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(dec)
}

/// `ρ_n(band) = ∫ |T_n'| / (nπ √(t_n² - T_n²)) dx`.
///
/// `t_n ∓ T_n` is formed as the distance of `T_n(band edge)` from `±t_n` plus a
/// divided difference, which keeps it accurate next to the band edges.
pub fn rho_n_mass(sol: &ChebyshevSolution, band: &LevelBand) -> Result<f64> {
    let qt = QuadTol {
        abs: 1e-14,
        rel: 1e-11,
        ..QuadTol::default()
    };
    let d = BandDensity::new(sol, band);
    let est = quad::adaptive_panels(0.0, PI, qt, |th| d.at(th));
    if !est.converged || !est.value.is_finite() {
        return Err(Error::Quadrature(format!(
            "band [{}, {}]: estimate {:?}",
            band.lo, band.hi, est
        )));
    }
    Ok(est.value)
}

/// `dρ_n/dθ` on one band of `𝔢_n` in the cosine coordinate `x = mid - half·cos θ`.
pub struct BandDensity<'a> {
    p: &'a MonicPolynomial,
    n: f64,
    lo: f64,
    hi: f64,
    slo: f64,
    shi: f64,
    dlo: f64,
    dhi: f64,
}

impl<'a> BandDensity<'a> {
    pub fn new(sol: &'a ChebyshevSolution, band: &LevelBand) -> Self {
        let p = &sol.poly;
        let t = sol.log_t_norm().exp();
        let lo = p.norm(band.lo);
        let hi = p.norm(band.hi);
        let (tlo, thi) = (p.eval_norm(lo), p.eval_norm(hi));
        let (slo, shi) = (p.deriv_norm(lo), p.deriv_norm(hi));
        // A shared edge is a critical point where |T_n| meets t_n to second order. An
        // edge whose level defect is within one rounding of x is on the level: on a
        // narrow band that rounding alone moves T_n/t_n by ~1e-12.
        let defect = |touch: bool, v: f64, s: f64| {
            let d = (t - v.abs()).max(0.0);
            if touch || d <= 8.0 * f64::EPSILON * s.abs() {
                0.0
            } else {
                d
            }
        };
        BandDensity {
            p,
            n: sol.n as f64,
            lo,
            hi,
            slo,
            shi,
            dlo: defect(band.touches_left, tlo, slo),
            dhi: defect(band.touches_right, thi, shi),
        }
    }

    /// The point at angle `θ`, in original coordinates.
    pub fn point(&self, th: f64) -> f64 {
        self.p.denorm(arc_point(self.lo, self.hi, th))
    }

    /// The angle of an original-coordinate point of the band.
    pub fn angle(&self, x: f64) -> f64 {
        quad::arc_angle(self.lo, self.hi, self.p.norm(x))
    }

    pub fn at(&self, th: f64) -> f64 {
        let p = self.p;
        let (lo, hi) = (self.lo, self.hi);
        let u = arc_point(lo, hi, th);
        let half = 0.5 * (hi - lo);
        // edge distances from the angle, not from the rounded u
        let ulo = 2.0 * half * (0.5 * th).sin().powi(2);
        let uhi = 2.0 * half * (0.5 * th).cos().powi(2);
        // |T(u) - T(a)| = |u - a|·|T'(a) + (u - a) T[u, a, a]|
        let gl = self.dlo + ulo * (self.slo + ulo * p.second_divided_diff_norm(u, lo)).abs();
        let gh = self.dhi + uhi * (self.shi - uhi * p.second_divided_diff_norm(u, hi)).abs();
        let v = p.deriv_norm(u).abs() * half * th.sin() / (gl * gh).sqrt() / (self.n * PI);
        // nodes that round onto an edge carry no weight worth keeping
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

/// `C(𝔢_n) = (t_n / 2)^{1/n}`.
pub fn capacity_en(sol: &ChebyshevSolution) -> f64 {
    ((sol.log_t - 2f64.ln()) / sol.n as f64).exp()
}

/// `G_n(x) = arccosh(|T_n(x)| / t_n) / n`, zero on `𝔢_n`.
pub fn green_n(sol: &ChebyshevSolution, x: f64) -> f64 {
    let l = sol.poly.log_abs(x) - sol.log_t;
    if l <= 0.0 {
        return 0.0;
    }
    // arccosh(e^l) = l + log(1 + √(1 - e^{-2l}))
    (l + (-(-2.0 * l).exp_m1()).sqrt().ln_1p()) / sol.n as f64
}

/// Zeros of `T_n` strictly inside gaps of `set`, at most one per gap.
pub fn gap_zeros(sol: &ChebyshevSolution, set: &RealFiniteGapSet) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    for z in sol.zeros() {
        let Some(k) = set.gap_of(z) else { continue };
        let g: Interval = set.gaps()[k];
        if z - g.lo() <= GAP_ZERO_EDGE || g.hi() - z <= GAP_ZERO_EDGE {
            continue;
        }
        if out.insert(k, z).is_some() {
            return Err(Error::Invariant(format!(
                "two zeros of T_{} in gap {k}",
                sol.n
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> RealFiniteGapSet {
        RealFiniteGapSet::from_pairs(&[(-1.0, 1.0)]).unwrap()
    }

    fn estar() -> RealFiniteGapSet {
        RealFiniteGapSet::from_pairs(&[(-1.0, -0.6), (0.6, 1.0)]).unwrap()
    }

    fn three() -> RealFiniteGapSet {
        RealFiniteGapSet::from_pairs(&[(-2.0, -1.1), (-0.3, 0.4), (1.0, 3.5)]).unwrap()
    }

    fn solve(s: &RealFiniteGapSet, n: usize) -> ChebyshevSolution {
        chebyshev(s, n, &RemezOptions::default()).unwrap()
    }

    #[test]
    fn classical_cubic() {
        let sol = solve(&unit(), 3);
        assert!((sol.t_n() - 0.25).abs() < 1e-14);
        let c = sol.poly.monomial_coefficients();
        let want = [0.0, -0.75, 0.0, 1.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-13, "{c:?}");
        }
        let cert = alternation_certificate(&sol, &unit());
        assert!(cert.pass, "{}", cert.message);
        let xs: Vec<f64> = cert.points.iter().map(|p| p.x).collect();
        for (a, b) in xs.iter().zip([-1.0, -0.5, 0.5, 1.0]) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn estar_quadratic_and_linear() {
        let s = estar();
        let sol = solve(&s, 2);
        assert!((sol.t_n() - 0.32).abs() < 1e-14);
        let c = sol.poly.monomial_coefficients();
        assert!((c[0] + 0.68).abs() < 1e-13 && c[1].abs() < 1e-13 && c[2] == 1.0);
        assert!(sol.gap_zeros.is_empty());
        let cert = alternation_certificate(&sol, &s);
        assert!(cert.pass && cert.points.len() == 3);
        assert!((cert.points[0].x + 1.0).abs() < 1e-12 && cert.points[0].value > 0.0);
        assert!((cert.points[2].x - 1.0).abs() < 1e-12);

        let sol = solve(&s, 1);
        assert!((sol.t_n() - 1.0).abs() < 1e-14);
        assert!(sol.zeros()[0].abs() < 1e-14);
        assert_eq!(sol.gap_zeros.len(), 1);
        assert!(sol.gap_zeros[&0].abs() < 1e-14);
        let b = bands(&sol, &s, 1e-12).unwrap();
        assert_eq!(b.bands.len(), 1);
        assert!((b.bands[0].lo + 1.0).abs() < 1e-14 && (b.bands[0].hi - 1.0).abs() < 1e-14);
        assert!((b.masses[0] - 1.0).abs() < 1e-12);
        assert!((capacity_en(&sol) - 0.5).abs() < 1e-14);
        assert!((green_n(&sol, 2.0) - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-13);
    }

    #[test]
    fn estar_period_two_bands() {
        let s = estar();
        let sol = solve(&s, 2);
        let b = bands(&sol, &s, 1e-12).unwrap();
        let e = [(-1.0, -0.6), (0.6, 1.0)];
        for (lb, (lo, hi)) in b.bands.iter().zip(e) {
            assert!((lb.lo - lo).abs() < 1e-12 && (lb.hi - hi).abs() < 1e-12);
            assert!(!lb.touches_left && !lb.touches_right);
        }
        for m in &b.masses {
            assert!((m - 0.5).abs() < 1e-12);
        }
        assert!((capacity_en(&sol) - 0.4).abs() < 1e-14);
        let sol3 = solve(&s, 3);
        assert!(sol3.gap_zeros[&0].abs() < 1e-12);
    }

    #[test]
    fn interval_bands_touch() {
        let s = unit();
        let sol = solve(&s, 2);
        let b = bands(&sol, &s, 1e-12).unwrap();
        assert_eq!(b.bands.len(), 2);
        assert!(b.bands[0].touches_right && b.bands[1].touches_left);
        assert!(b.bands[0].hi.abs() < 1e-12 && b.bands[1].lo.abs() < 1e-12);
        assert_eq!(b.union().unwrap().bands().len(), 1);
        let sol = solve(&s, 3);
        let b = bands(&sol, &s, 1e-12).unwrap();
        for m in &b.masses {
            assert!((m - 1.0 / 3.0).abs() < 1e-10, "{m}");
        }
        assert!((green_n(&sol, 2.0) - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-12);
        assert_eq!(green_n(&sol, 0.3), 0.0);
    }

    #[test]
    fn classical_norms_to_thirty() {
        let s = unit();
        for n in 1..=30 {
            let sol = solve(&s, n);
            let want = 2f64.powi(1 - n as i32);
            assert!(((sol.t_n() - want) / want).abs() < 1e-12, "n = {n}");
            assert!((capacity_en(&sol) - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn perturbed_cubic_fails_certificate() {
        let cert = certify(|x| x * x * x - 0.7 * x, 3, &unit(), None, 1e-9);
        assert!(!cert.pass);
        let cert = certify(|x| x * x * x - 0.75 * x, 3, &unit(), None, 1e-9);
        assert!(cert.pass);
    }

    #[test]
    fn three_band_solution_invariants() {
        let s = three();
        for n in [1, 2, 5, 11, 24] {
            let sol = solve(&s, n);
            let cert = alternation_certificate(&sol, &s);
            assert!(cert.pass, "n = {n}: {}", cert.message);
            assert!(sol.zeros().iter().all(|&z| s.hull().contains(z)));
            let b = bands(&sol, &s, 1e-12).unwrap();
            assert_eq!(b.bands.len(), n);
            assert!(b.contains_set(&s, 1e-10), "n = {n}: {:?}", b.bands);
            for m in &b.masses {
                assert!((m - 1.0 / n as f64).abs() < 1e-10, "n = {n}: {m}");
            }
        }
    }

    #[test]
    fn minimax_spot_check_and_uniqueness() {
        let s = three();
        let n = 6;
        let sol = solve(&s, n);
        let t = sol.t_n();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let eps: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
            let p = sol.poly.clone();
            let f = |x: f64| {
                p.eval(x)
                    + eps
                        .iter()
                        .enumerate()
                        .map(|(k, e)| e * x.powi(k as i32))
                        .sum::<f64>()
            };
            let c = certify(f, n, &s, None, 1e-9);
            assert!(c.sup_norm >= t * (1.0 - 1e-9));
        }
        for _ in 0..5 {
            let mut r: Vec<f64> = Vec::new();
            while r.len() < n + 1 {
                let b = s.bands()[rng.gen_range(0..3)];
                let x = rng.gen_range(b.lo()..b.hi());
                if r.iter().all(|&y: &f64| (y - x).abs() > 1e-6) {
                    r.push(x);
                }
            }
            let other = chebyshev_from_reference(&s, n, &RemezOptions::default(), &r).unwrap();
            assert!(((other.t_n() - t) / t).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_set_gives_parity() {
        let s = RealFiniteGapSet::from_pairs(&[(-3.0, -2.0), (-1.0, 1.0), (2.0, 3.0)]).unwrap();
        for n in [4, 7] {
            let sol = solve(&s, n);
            let c = sol.poly.monomial_coefficients();
            for (k, ck) in c.iter().enumerate() {
                if (n - k) % 2 == 1 {
                    assert!(ck.abs() < 1e-9 * c.iter().map(|v| v.abs()).fold(0.0, f64::max));
                }
            }
        }
    }

    #[test]
    fn degree_limits() {
        assert!(matches!(
            chebyshev(&unit(), 61, &RemezOptions::default()),
            Err(Error::DegreeCap { n: 61, cap: 60 })
        ));
        assert!(chebyshev(&unit(), 0, &RemezOptions::default()).is_err());
    }

    #[test]
    fn hull_basis_round_trip() {
        let sol = solve(&unit(), 5);
        let a = sol.poly.hull_chebyshev_coefficients();
        assert!((a[5] - 2f64.powi(-4)).abs() < 1e-15);
        assert!(a[..5].iter().all(|v| v.abs() < 1e-14));
    }
}
