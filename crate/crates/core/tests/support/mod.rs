//! Shared helpers for the integration tests: independent reference
//! integrators and deterministic RNG construction.
//!
//! Everything here is deliberately decoupled from the library's own
//! numerics (no trig moments, no Gauss–Legendre, no kernel code) so that
//! agreement between the two paths is meaningful evidence.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for randomized checks.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the final result.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 52)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive 2-D integral of `f(t, s)` over `[a, b] × [a, b]`, splitting the
/// inner integral at `s = t` so kinked kernels converge quickly.
pub fn adaptive_simpson_2d<F: Fn(f64, f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let inner = |t: f64| {
        let g = |s: f64| f(t, s);
        adaptive_simpson(&g, a, t, 0.25 * tol / (b - a))
            + adaptive_simpson(&g, t, b, 0.25 * tol / (b - a))
    };
    adaptive_simpson(&inner, a, b, 0.5 * tol)
}
