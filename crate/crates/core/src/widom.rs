//! Gap sets, Blaschke moduli and the Widom minimizer through its dual maximizer.
//!
//! For a gap set `S = {x_k}` the Blaschke product `B_S = ∏ B(·, x_k)` has
//! `|B_S(z)| = exp(-Σ G(z, x_k))`; the Widom minimizer is `F = B_S / B_S(∞)`, so
//! `‖F‖_∞ = 1 / B_S(∞)`. Characters are tracked in the cumulative band coordinates
//! used by [`crate::potential::CharacterVector`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{wrap_signed, CharacterVector, EquilibriumData, PoleGreen};
use crate::realset::RealFiniteGapSet;

/// Residual (max circular distance) accepted by the character match.
pub const MATCH_TOL: f64 = 1e-10;

/// At most one point per gap, each strictly inside its gap.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GapSet {
    points: BTreeMap<usize, f64>,
}

impl GapSet {
    pub fn empty() -> Self {
        GapSet::default()
    }

    /// Validates every `(gap index, point)` pair against `set`. A point sitting on
    /// a gap endpoint stands for "no point" and is dropped.
    pub fn new(
        set: &RealFiniteGapSet,
        points: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (k, x) in points {
            let Some(gap) = set.gaps().get(k) else {
                return Err(Error::OutOfRange(format!(
                    "gap index {k} but the set has {} gaps",
                    set.gap_count()
                )));
            };
            if x == gap.lo() || x == gap.hi() {
                continue;
            }
            if !gap.contains_open(x) {
                return Err(Error::OutOfRange(format!(
                    "point {x} is not inside gap {k} = {gap}"
                )));
            }
            if out.insert(k, x).is_some() {
                return Err(Error::OutOfRange(format!("two points in gap {k}")));
            }
        }
        Ok(GapSet { points: out })
    }

    pub fn points(&self) -> &BTreeMap<usize, f64> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidomSolution {
    pub gap_set: GapSet,
    /// `B_S(∞)`
    pub b_infinity: f64,
    /// `‖F‖_∞ = 1 / B_S(∞)`
    pub f_norm: f64,
    pub character: CharacterVector,
}

/// `B_S` with its poles prepared for repeated evaluation.
pub struct Blaschke<'a> {
    eq: &'a EquilibriumData,
    poles: Vec<PoleGreen<'a>>,
    /// `Σ G(x_k)`
    log_f_norm: f64,
}

impl<'a> Blaschke<'a> {
    pub fn new(eq: &'a EquilibriumData, s: &GapSet) -> Result<Self> {
        let poles = s
            .points()
            .values()
            .map(|&x| eq.pole(x))
            .collect::<Result<Vec<_>>>()?;
        let log_f_norm = poles.iter().map(|p| p.green_at_infinity()).sum();
        Ok(Blaschke {
            eq,
            poles,
            log_f_norm,
        })
    }

    pub fn b_infinity(&self) -> f64 {
        (-self.log_f_norm).exp()
    }

    pub fn f_norm(&self) -> f64 {
        self.log_f_norm.exp()
    }

    pub fn log_f_norm(&self) -> f64 {
        self.log_f_norm
    }

    /// `|B_S(z)|`.
    pub fn modulus(&self, z: Complex64) -> Result<f64> {
        Ok(self.log_modulus(z)?.exp())
    }

    /// `log |B_S(z)| = -Σ G(z, x_k)`; `-∞` at a pole.
    pub fn log_modulus(&self, z: Complex64) -> Result<f64> {
        let mut s = 0.0;
        for p in &self.poles {
            if z.im == 0.0 && z.re == p.pole() {
                return Ok(f64::NEG_INFINITY);
            }
            s -= p.green(z)?;
        }
        Ok(s)
    }

    /// `|F(x)| = |B_S(x)| / B_S(∞)` at a real point.
    pub fn minimizer_modulus(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Ok(1.0);
        }
        Ok((self.log_modulus(Complex64::new(x, 0.0))? + self.log_f_norm).exp())
    }

    pub fn character(&self) -> CharacterVector {
        let l = self.eq.gap_count();
        let mut acc = CharacterVector::trivial(l);
        for p in &self.poles {
            acc = acc.compose(&p.character());
        }
        acc
    }
}

pub fn widom_from_gap_set(eq: &EquilibriumData, s: &GapSet) -> Result<WidomSolution> {
    let b = Blaschke::new(eq, s)?;
    Ok(WidomSolution {
        gap_set: s.clone(),
        b_infinity: b.b_infinity(),
        f_norm: b.f_norm(),
        character: b.character(),
    })
}

/// `|F(x)| = exp(Σ [G(x_k) - G(x, x_k)])`; zero at the points of `S`.
pub fn widom_minimizer_modulus(eq: &EquilibriumData, s: &GapSet, x: f64) -> Result<f64> {
    Blaschke::new(eq, s)?.minimizer_modulus(x)
}

/// Sum over `S` of the characters of `B(·, x_k)`, each given by the cumulative
/// harmonic measure of the bands seen from `x_k`.
pub fn character_of(eq: &EquilibriumData, s: &GapSet) -> Result<CharacterVector> {
    Ok(Blaschke::new(eq, s)?.character())
}

/// Periodic coordinate on a gap: `τ ∈ [0, 1)` with both `τ = 0` and `τ → 1` meaning
/// the point has left through an edge.
fn gap_point(eq: &EquilibriumData, k: usize, tau: f64) -> Option<f64> {
    let g = eq.set().gaps()[k];
    let tau = tau.rem_euclid(1.0);
    let x = g.lo() + g.len() * 0.5 * (1.0 - (PI * tau).cos());
    if g.contains_open(x) {
        Some(x)
    } else {
        None
    }
}

fn gap_tau(eq: &EquilibriumData, k: usize, x: f64) -> f64 {
    let g = eq.set().gaps()[k];
    let c = (1.0 - 2.0 * (x - g.lo()) / g.len()).clamp(-1.0, 1.0);
    c.acos() / PI
}

fn gap_set_from_tau(eq: &EquilibriumData, tau: &[f64]) -> GapSet {
    let points = tau
        .iter()
        .enumerate()
        .filter_map(|(k, &t)| gap_point(eq, k, t).map(|x| (k, x)))
        .collect();
    GapSet { points }
}

fn character_at(eq: &EquilibriumData, tau: &[f64]) -> Result<CharacterVector> {
    character_of(eq, &gap_set_from_tau(eq, tau))
}

/// Signed componentwise residual `χ(τ) - target` in `[-1/2, 1/2)`.
fn residual(eq: &EquilibriumData, tau: &[f64], target: &CharacterVector) -> Result<Vec<f64>> {
    let c = character_at(eq, tau)?;
    Ok(c.entries()
        .iter()
        .zip(target.entries())
        .map(|(a, b)| wrap_signed(a - b))
        .collect())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Finds a gap set whose Blaschke product has character `target`.
///
/// One gap: the entry decreases monotonically from 1 to 0 across the gap, so the
/// match is a bisection. Several gaps: damped Newton in the periodic gap
/// coordinates, continued from the trivial character (or from `init`).
pub fn solve_character_match(
    eq: &EquilibriumData,
    target: &CharacterVector,
    init: Option<&GapSet>,
) -> Result<WidomSolution> {
    let l = eq.gap_count();
    if target.dim() != l {
        return Err(Error::OutOfRange(format!(
            "target has {} entries, the set has {l} gaps",
            target.dim()
        )));
    }
    if max_abs(
        &target
            .entries()
            .iter()
            .map(|&v| wrap_signed(v))
            .collect::<Vec<_>>(),
    ) <= MATCH_TOL
    {
        return widom_from_gap_set(eq, &GapSet::empty());
    }
    if l == 1 {
        return match_one_gap(eq, target.entries()[0]);
    }
    let start: Vec<f64> = match init {
        Some(s) => (0..l)
            .map(|k| s.points().get(&k).map_or(0.0, |&x| gap_tau(eq, k, x)))
            .collect(),
        None => vec![0.0; l],
    };
    let tau = newton_continuation(eq, target, start)?;
    widom_from_gap_set(eq, &gap_set_from_tau(eq, &tau))
}

fn match_one_gap(eq: &EquilibriumData, target: f64) -> Result<WidomSolution> {
    let g = eq.set().gaps()[0];
    let entry = |x: f64| -> Result<f64> { Ok(eq.pole(x)?.band_masses()[0]) };
    let (mut a, mut b) = (g.lo(), g.hi());
    // entry(a+) = 1 > target > 0 = entry(b-)
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if entry(m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    let s = GapSet::new(eq.set(), [(0, x)])?;
    let sol = widom_from_gap_set(eq, &s)?;
    let r = sol.character.distance(&CharacterVector::new(vec![target]));
    if r > MATCH_TOL {
        return Err(Error::CharacterMatch { residual: r });
    }
    Ok(sol)
}

fn newton_continuation(
    eq: &EquilibriumData,
    target: &CharacterVector,
    start: Vec<f64>,
) -> Result<Vec<f64>> {
    let start_char = character_at(eq, &start)?;
    // shortest path on the torus from the starting character to the target
    let delta: Vec<f64> = target
        .entries()
        .iter()
        .zip(start_char.entries())
        .map(|(t, s)| wrap_signed(t - s))
        .collect();
    let steps = 8;
    let mut tau = start;
    let mut best = f64::INFINITY;
    for i in 1..=steps {
        let s = i as f64 / steps as f64;
        let sub = CharacterVector::new(
            start_char
                .entries()
                .iter()
                .zip(&delta)
                .map(|(a, d)| a + s * d)
                .collect(),
        );
        let (t, r) = newton(
            eq,
            &sub,
            tau.clone(),
            if i == steps { MATCH_TOL } else { 1e-6 },
        )?;
        best = r;
        tau = t;
    }
    if best > MATCH_TOL {
        return Err(Error::CharacterMatch { residual: best });
    }
    Ok(tau)
}

fn newton(
    eq: &EquilibriumData,
    target: &CharacterVector,
    mut tau: Vec<f64>,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let l = tau.len();
    let mut r = residual(eq, &tau, target)?;
    let mut norm = max_abs(&r);
    for _ in 0..60 {
        if norm <= tol {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::<f64>::zeros(l, l);
        for j in 0..l {
            let mut tp = tau.clone();
            tp[j] += h;
            let rp = residual(eq, &tp, target)?;
            for i in 0..l {
                jac[(i, j)] = wrap_signed(rp[i] - r[i]) / h;
            }
        }
        let Some(step) = jac.lu().solve(&DVector::from_vec(r.clone())) else {
            break;
        };
        let mut lambda: f64 = 1.0;
        let mut improved = false;
        while lambda > 1e-4 {
            let trial: Vec<f64> = (0..l)
                .map(|j| (tau[j] - lambda * step[j].clamp(-0.25, 0.25)).rem_euclid(1.0))
                .collect();
            let rt = residual(eq, &trial, target)?;
            let nt = max_abs(&rt);
            if nt < norm {
                tau = trial;
                r = rt;
                norm = nt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((tau, norm))
}

/// Every distinct solution reached from a grid of starting points (`starts` per gap).
pub fn character_match_all(
    eq: &EquilibriumData,
    target: &CharacterVector,
    starts: usize,
) -> Vec<WidomSolution> {
    let l = eq.gap_count();
    let mut found: Vec<WidomSolution> = Vec::new();
    let total = starts.pow(l as u32);
    for idx in 0..total {
        let mut rem = idx;
        let tau: Vec<f64> = (0..l)
            .map(|_| {
                let i = rem % starts;
                rem /= starts;
                (i as f64 + 0.5) / starts as f64
            })
            .collect();
        let init = gap_set_from_tau(eq, &tau);
        let Ok(sol) = solve_character_match(eq, target, Some(&init)) else {
            continue;
        };
        let same = found.iter().any(|f| {
            f.gap_set.points().len() == sol.gap_set.points().len()
                && f.gap_set
                    .points()
                    .iter()
                    .zip(sol.gap_set.points())
                    .all(|((ka, xa), (kb, xb))| ka == kb && (xa - xb).abs() < 1e-7)
        });
        if !same {
            found.push(sol);
        }
    }
    found
}
