//! Green's function with a finite real pole.
//!
//! `dG(·, w) = P(x) / ((x - w) √R(x)) dx` with `deg P ≤ ℓ`. The `ℓ + 1`
//! coefficients of `P` are fixed by the residue `P(w) = -√|R(w)|` and by the
//! vanishing of the (principal value) integral across every gap. The harmonic
//! measure at `w` is then `|P| / (π |x - w| √|R|)` on the bands.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{cheb, EquilibriumData, FAR};
use crate::error::{Error, Result};
use crate::quad::{self, arc_angle, arc_point};

/// `G_𝔢(·, w)` for one pole `w`, with the harmonic measure at `w`.
#[derive(Debug, Clone)]
pub struct PoleGreen<'a> {
    eq: &'a EquilibriumData,
    /// normalized pole
    w: f64,
    /// Chebyshev coefficients of `P` in the normalized variable
    p: Vec<f64>,
    g_inf: f64,
    masses: Vec<f64>,
}

impl<'a> PoleGreen<'a> {
    pub(crate) fn new(eq: &'a EquilibriumData, w: f64) -> Result<Self> {
        if !w.is_finite() {
            return Err(Error::OutOfRange("pole must be finite".into()));
        }
        if eq.band_of_norm(w).is_some() {
            return Err(Error::PoleOnSet(eq.denorm(w)));
        }
        let l = eq.gap_count();
        let mut a = DMatrix::<f64>::zeros(l + 1, l + 1);
        let mut b = DVector::<f64>::zeros(l + 1);
        for i in 0..l {
            for k in 0..=l {
                a[(i, k)] = pv_gap_integral(eq, i, w, |u| cheb(k, u));
            }
        }
        for k in 0..=l {
            a[(l, k)] = cheb(k, w);
        }
        b[l] = -eq.abs_r(w).sqrt();
        for r in 0..=l {
            let s = (0..=l).map(|k| a[(r, k)].abs()).fold(0.0, f64::max);
            if s > 0.0 {
                for k in 0..=l {
                    a[(r, k)] /= s;
                }
                b[r] /= s;
            }
        }
        let p = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::EquilibriumNonConvergence("singular pole system".into()))?;
        let mut g = PoleGreen {
            eq,
            w,
            p: p.iter().copied().collect(),
            g_inf: eq.green_real_norm(w),
            masses: Vec::new(),
        };
        g.masses = (0..eq.band_count())
            .map(|j| {
                eq.interval_integral(2 * j, |t| g.p_eval(t).abs() / (t - w).abs())
                    .value
                    / PI
            })
            .collect();
        Ok(g)
    }

    /// The pole in original coordinates.
    pub fn pole(&self) -> f64 {
        self.eq.denorm(self.w)
    }

    /// `G(∞, w) = G_𝔢(w)`.
    pub fn green_at_infinity(&self) -> f64 {
        self.g_inf
    }

    /// Harmonic measure at `w` of each band, `ω_w(𝔢_j)`.
    pub fn band_masses(&self) -> &[f64] {
        &self.masses
    }

    /// Character of `B_𝔢(·, w)` in cumulative band coordinates.
    pub fn character(&self) -> super::CharacterVector {
        let mut cum = 0.0;
        let l = self.eq.gap_count();
        let mut entries = Vec::with_capacity(l);
        for j in 0..l {
            cum += self.masses[j];
            entries.push(cum);
        }
        super::CharacterVector::new(entries)
    }

    /// `G_𝔢(z, w)`.
    pub fn green(&self, z: Complex64) -> Result<f64> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Ok(self.g_inf);
        }
        let u = (z - self.eq.center) / self.eq.scale;
        if u.im == 0.0 {
            return self.green_real_norm(u.re);
        }
        Ok(self.balayage(u).max(0.0))
    }

    pub fn green_real(&self, x: f64) -> Result<f64> {
        self.green_real_norm(self.eq.norm(x))
    }

    /// `∫ log|z - t| dω_w(t) - log|z - w| + G_𝔢(w)`.
    pub fn green_balayage(&self, z: Complex64) -> Result<f64> {
        let u = (z - self.eq.center) / self.eq.scale;
        if u.im == 0.0 && u.re == self.w {
            return Err(Error::AtPole(z.re));
        }
        Ok(self.balayage(u))
    }

    fn p_eval(&self, u: f64) -> f64 {
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.p.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.p[0]
    }

    fn balayage(&self, u: Complex64) -> f64 {
        let s = self
            .eq
            .log_moment(u, |t| self.p_eval(t).abs() / (t - self.w).abs())
            / PI;
        s - (u - self.w).norm().ln() + self.g_inf
    }

    fn green_real_norm(&self, u: f64) -> Result<f64> {
        let eq = self.eq;
        let w = self.w;
        if u == w {
            return Err(Error::AtPole(eq.denorm(u)));
        }
        if eq.band_of_norm(u).is_some() {
            return Ok(0.0);
        }
        if u.abs() > FAR {
            return Ok(self.balayage(Complex64::new(u, 0.0)).max(0.0));
        }
        if u.abs() > 1.0 {
            return Ok(self.outer_near(u));
        }
        let i = eq
            .gap_of_norm(u)
            .expect("point in hull but off the bands lies in a gap");
        let (lo, hi) = (eq.ends()[2 * i + 1], eq.ends()[2 * i + 2]);
        let th = arc_angle(lo, hi, u);
        let (th_e, e) = if th <= 0.5 * PI { (0.0, lo) } else { (PI, hi) };
        let ii = 2 * i + 1;
        if lo < w && w < hi {
            let half = 0.5 * (hi - lo);
            let g = |theta: f64| {
                let t = arc_point(lo, hi, theta);
                let num =
                    |tt: f64, s: f64| self.p_eval(tt) / eq.abs_rtilde(tt, ii).sqrt() + half * s;
                if (t - w).abs() < 1e-9 {
                    let h = 1e-5;
                    let (ta, tb) = (arc_point(lo, hi, theta - h), arc_point(lo, hi, theta + h));
                    return 0.5
                        * (num(ta, (theta - h).sin()) / (ta - w)
                            + num(tb, (theta + h).sin()) / (tb - w));
                }
                num(t, theta.sin()) / (t - w)
            };
            let v = quad::adaptive(th_e, th, eq.qtol(), g).value;
            Ok(((e - w).abs().ln() - (u - w).abs().ln() + v).max(0.0))
        } else {
            let v = quad::arc_partial(lo, hi, th_e, th, eq.qtol(), |t| {
                self.p_eval(t) / ((t - w) * eq.abs_rtilde(t, ii).sqrt())
            });
            Ok(v.value.abs())
        }
    }

    /// Real `u` with `1 < |u| ≤ FAR`, integrated from the nearest hull endpoint with
    /// `t = e ± v²`.
    fn outer_near(&self, u: f64) -> f64 {
        let eq = self.eq;
        let w = self.w;
        let (m, e) = if u > 0.0 {
            (eq.ends().len() - 1, 1.0)
        } else {
            (0, -1.0)
        };
        let d = (u - e).signum();
        let top = (u - e).abs().sqrt();
        let same_side = (w - e) * d > 0.0;
        if same_side {
            let num = |v: f64| {
                let t = e + d * v * v;
                2.0 * d * (self.p_eval(t) / eq.abs_r_without(t, m).sqrt() + v) / (t - w)
            };
            let g = |v: f64| {
                let t = e + d * v * v;
                if (t - w).abs() < 1e-9 {
                    let h = 1e-5 * top.max(1e-3);
                    return 0.5 * (num(v - h) + num(v + h));
                }
                num(v)
            };
            let val = quad::adaptive(0.0, top, eq.qtol(), g).value;
            ((e - w).abs().ln() - (u - w).abs().ln() + val).max(0.0)
        } else {
            let val = quad::adaptive(0.0, top, eq.qtol(), |v| {
                let t = e + d * v * v;
                2.0 * d * self.p_eval(t) / ((t - w) * eq.abs_r_without(t, m).sqrt())
            });
            val.value.abs()
        }
    }
}

/// Principal-value integral `PV ∫_gap h(u)/((u - w)√|R(u)|) du` over gap `i`.
///
/// When `w` sits in the gap the constant part integrates to zero in cosine
/// coordinates (`PV ∫_0^π dθ/(cos θ - cos φ) = 0`), leaving a divided difference.
fn pv_gap_integral<H: Fn(f64) -> f64>(eq: &EquilibriumData, i: usize, w: f64, h: H) -> f64 {
    let ii = 2 * i + 1;
    let (lo, hi) = (eq.ends()[ii], eq.ends()[ii + 1]);
    let hh = |u: f64| h(u) / eq.abs_rtilde(u, ii).sqrt();
    if lo < w && w < hi {
        let hw = hh(w);
        let step = 1e-6 * (hi - lo);
        let dh = (hh(w + step) - hh(w - step)) / (2.0 * step);
        quad::arc_integral(lo, hi, eq.qtol(), |u| {
            if (u - w).abs() < 1e-9 * (hi - lo) {
                dh
            } else {
                (hh(u) - hw) / (u - w)
            }
        })
        .value
    } else {
        quad::arc_integral(lo, hi, eq.qtol(), |u| hh(u) / (u - w)).value
    }
}
