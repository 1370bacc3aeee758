//! Piecewise integration kernels.
//!
//! Everything downstream integrates functions of the Hardy average, which on
//! one piece of a step function has the form `(v + c/t)^q`. Integer
//! exponents get a closed form (binomial expansion, all terms positive);
//! fractional exponents fall back to adaptive Simpson quadrature after a
//! logarithmic substitution that tames the `c/t` variation.

use alloc::vec::Vec;

use crate::math;

/// Default relative error target for the adaptive fallback.
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-10;

/// Adaptive Simpson integration of `f` over `[a, b]` to the given relative
/// tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    let budget = rel_tol * math::abs(whole);
    if whole == 0.0 {
        return 0.0;
    }
    recurse(f, a, b, fa, fm, fb, whole, budget, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    budget: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || math::abs(delta) <= 15.0 * budget {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, budget / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, budget / 2.0, depth - 1)
}

/// `∫_a^b (v + c/t)^q dt` for `0 < a <= b`, `v, c >= 0`, `q >= 0`.
///
/// Closed form when `q` is a small integer; adaptive quadrature otherwise.
pub fn int_avg_pow(v: f64, c: f64, q: f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    debug_assert!(a > 0.0 && b >= a);
    if b == a {
        return 0.0;
    }
    if c == 0.0 || v == f64::INFINITY {
        return math::powf(v, q) * (b - a);
    }
    if q == 0.0 {
        return b - a;
    }
    let qi = q as i32;
    if qi as f64 == q && (1..=24).contains(&qi) {
        // (v + c/t)^q = Σ_j binom(q,j) v^{q-j} c^j t^{-j}; every term is
        // nonnegative, so the expansion is cancellation-free.
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=qi {
            let tj = if j == 0 {
                b - a
            } else if j == 1 {
                math::ln(b / a)
            } else {
                (math::powf(b, 1.0 - j as f64) - math::powf(a, 1.0 - j as f64)) / (1.0 - j as f64)
            };
            acc += binom * math::powi(v, qi - j) * math::powi(c, j) * tj;
            binom *= (qi - j) as f64 / (j + 1) as f64;
        }
        return acc;
    }
    // t = e^x keeps the integrand's variation O(1) per unit of x even when
    // b/a spans decades.
    let (la, lb) = (math::ln(a), math::ln(b));
    let f = move |x: f64| {
        let t = math::exp(x);
        math::powf(v + c / t, q) * t
    };
    adaptive_simpson(&f, la, lb, rel_tol)
}

/// Breakpoint union helper: merges sorted grids, dropping duplicates and
/// anything outside `(0, hi]`.
pub(crate) fn merge_breakpoints(grids: &[&[f64]], hi: f64) -> Vec<f64> {
    let mut all: Vec<f64> = grids
        .iter()
        .flat_map(|g| g.iter().copied())
        .filter(|&t| t > 0.0 && t < hi)
        .collect();
    all.push(hi);
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all
}
