//! Quadrature helpers.
//!
//! Integrals over a band or a gap `[lo, hi]` of the form
//! `∫ h(t) / √((t-lo)(hi-t)) dt` are taken through the cosine substitution
//! `t = mid - half·cos θ`, which turns them into `∫₀^π h(t(θ)) dθ` with a smooth
//! integrand. Gauss–Legendre rules come from `gauss-quad` and are cached per degree.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

const MIN_NODES: usize = 24;
const MAX_NODES: usize = 12288;

fn rule(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0"))))
        .clone()
}

/// Fixed-order Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    rule(n).integrate(a, b, f)
}

/// Result of an adaptive quadrature: value, the last doubling difference, and the node count used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

/// Convergence targets for node doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_nodes: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol {
            abs: 1e-15,
            rel: 1e-13,
            max_nodes: MAX_NODES,
        }
    }
}

/// Gauss–Legendre with node doubling until two successive values agree.
pub fn adaptive<F: Fn(f64) -> f64>(a: f64, b: f64, tol: QuadTol, f: F) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            error: 0.0,
            nodes: 0,
            converged: true,
        };
    }
    let mut n = MIN_NODES;
    let mut prev = gauss_legendre(a, b, n, &f);
    loop {
        n *= 2;
        let cur = gauss_legendre(a, b, n, &f);
        let err = (cur - prev).abs();
        if err <= tol.abs + tol.rel * cur.abs() {
            return Estimate {
                value: cur,
                error: err,
                nodes: n,
                converged: true,
            };
        }
        if n * 2 > tol.max_nodes {
            return Estimate {
                value: cur,
                error: err,
                nodes: n,
                converged: false,
            };
        }
        prev = cur;
    }
}

/// Gauss–Legendre panels with recursive bisection where a 24/48-node pair disagrees;
/// suited to integrands with a localized sharp feature.
pub fn adaptive_panels<F: Fn(f64) -> f64>(a: f64, b: f64, tol: QuadTol, f: F) -> Estimate {
    fn rec<F: Fn(f64) -> f64>(
        a: f64,
        b: f64,
        tol: f64,
        floor: f64,
        depth: u32,
        f: &F,
        acc: &mut Estimate,
    ) {
        let coarse = gauss_legendre(a, b, MIN_NODES, f);
        let fine = gauss_legendre(a, b, 2 * MIN_NODES, f);
        acc.nodes += 3 * MIN_NODES;
        let err = (fine - coarse).abs();
        let noise = err <= 64.0 * f64::EPSILON * fine.abs();
        if err <= tol || noise || depth == 0 {
            acc.value += fine;
            acc.error += err;
            if err > tol && !noise {
                acc.converged = false;
            }
            return;
        }
        let m = 0.5 * (a + b);
        rec(a, m, (0.5 * tol).max(floor), floor, depth - 1, f, acc);
        rec(m, b, (0.5 * tol).max(floor), floor, depth - 1, f, acc);
    }
    let mut acc = Estimate {
        value: 0.0,
        error: 0.0,
        nodes: 0,
        converged: true,
    };
    let whole = gauss_legendre(a, b, 2 * MIN_NODES, &f).abs();
    let target = tol.abs + tol.rel * whole;
    rec(a, b, target, 1e-4 * target, 30, &f, &mut acc);
    acc
}

/// Point of `[lo, hi]` at cosine angle `theta` (θ = 0 ↦ lo, θ = π ↦ hi).
#[inline]
pub fn arc_point(lo: f64, hi: f64, theta: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    mid - half * theta.cos()
}

/// Inverse of [`arc_point`].
#[inline]
pub fn arc_angle(lo: f64, hi: f64, x: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    ((mid - x) / half).clamp(-1.0, 1.0).acos()
}

/// `∫_lo^hi h(t)/√((t-lo)(hi-t)) dt` over the whole interval.
pub fn arc_integral<H: Fn(f64) -> f64>(lo: f64, hi: f64, tol: QuadTol, h: H) -> Estimate {
    adaptive(0.0, PI, tol, |th| h(arc_point(lo, hi, th)))
}

/// Same integrand as [`arc_integral`] restricted to cosine angles `[th0, th1]`.
pub fn arc_partial<H: Fn(f64) -> f64>(
    lo: f64,
    hi: f64,
    th0: f64,
    th1: f64,
    tol: QuadTol,
    h: H,
) -> Estimate {
    adaptive(th0, th1, tol, |th| h(arc_point(lo, hi, th)))
}

/// `∫_a^b f` for an integrand with an integrable (log-type) singularity at `a`.
///
/// Uses the grading `x = a + (b-a) v^p`, which flattens the singularity into
/// `v^{p-1} log v`.
pub fn graded<F: Fn(f64) -> f64>(a: f64, b: f64, tol: QuadTol, f: F) -> Estimate {
    const P: i32 = 6;
    let span = b - a;
    adaptive(0.0, 1.0, tol, |v| {
        if v == 0.0 {
            return 0.0;
        }
        let vp1 = v.powi(P - 1);
        f(a + span * vp1 * v) * span * P as f64 * vp1
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_integral_of_constant_is_pi() {
        let e = arc_integral(-0.3, 2.0, QuadTol::default(), |_| 1.0);
        assert!((e.value - PI).abs() < 1e-14);
        assert!(e.converged);
    }

    #[test]
    fn arc_integral_first_moment() {
        // ∫ t / √((t-a)(b-t)) dt = π (a+b)/2
        let e = arc_integral(0.5, 1.5, QuadTol::default(), |t| t);
        assert!((e.value - PI).abs() < 1e-13);
    }

    #[test]
    fn graded_log_singularity() {
        // ∫_0^1 ln x dx = -1
        let e = graded(0.0, 1.0, QuadTol::default(), |x| x.ln());
        assert!((e.value + 1.0).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn panels_resolve_a_narrow_peak() {
        // ∫_0^1 ε/((x-0.3)² + ε²) dx = atan(0.7/ε) + atan(0.3/ε)
        let eps: f64 = 1e-5;
        let exact = (0.7 / eps).atan() + (0.3 / eps).atan();
        let e = adaptive_panels(0.0, 1.0, QuadTol::default(), |x| {
            eps / ((x - 0.3).powi(2) + eps * eps)
        });
        assert!(e.converged && (e.value - exact).abs() < 1e-11, "{e:?}");
    }

    #[test]
    fn arc_angle_inverts_arc_point() {
        for &th in &[0.0, 0.3, 1.0, 2.5, PI] {
            let x = arc_point(-2.0, 3.0, th);
            assert!((arc_angle(-2.0, 3.0, x) - th).abs() < 1e-7);
        }
    }
}
