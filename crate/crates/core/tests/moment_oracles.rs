//! Closed-form segment trig moments against an independent adaptive
//! Simpson integrator, across random intervals and detunings.

mod support;

use mspulse::grid::{segment_trig_moments, MomentOrder};
use rand::Rng;

#[test]
fn moments_match_adaptive_quadrature() {
    let mut rng = support::rng(0x5eed_0001);
    for case in 0..60 {
        let t_end: f64 = rng.gen_range(0.05..4.0);
        // Mix phase regimes: sub-period segments through tens of radians.
        let delta: f64 = match case % 4 {
            0 => rng.gen_range(0.0..0.3) / t_end,
            1 => rng.gen_range(0.3..3.0) / t_end,
            2 => rng.gen_range(3.0..60.0) / t_end,
            _ => rng.gen_range(1.0..50.0),
        };
        let a: f64 = rng.gen_range(0.0..0.5 * t_end);
        let b = a + rng.gen_range(0.01..1.0) * (t_end - a);

        for (order, m) in [(MomentOrder::Zeroth, 0), (MomentOrder::First, 1)] {
            let (s, c) = segment_trig_moments(a, b, delta, order).unwrap();
            let mass = (b.powi(m + 1) - a.powi(m + 1)) / (m + 1) as f64;
            let tol = 1e-13 * mass.max(1e-3);
            let s_ref = support::adaptive_simpson(&|t: f64| t.powi(m) * (delta * t).sin(), a, b, tol);
            let c_ref = support::adaptive_simpson(&|t: f64| t.powi(m) * (delta * t).cos(), a, b, tol);
            let limit = 1e-12 * mass.max(1e-3);
            assert!(
                (s - s_ref).abs() <= limit,
                "sin moment m={m} a={a} b={b} delta={delta}: {s} vs {s_ref}"
            );
            assert!(
                (c - c_ref).abs() <= limit,
                "cos moment m={m} a={a} b={b} delta={delta}: {c} vs {c_ref}"
            );
        }
    }
}

#[test]
fn moments_match_quadrature_near_zero_detuning() {
    // The series branch region: δ·(b−a) far below one radian.
    let mut rng = support::rng(0x5eed_0002);
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.0..2.0);
        let b = a + rng.gen_range(1e-4..0.2);
        let delta: f64 = rng.gen_range(1e-9..1e-2);
        let (s, c) = segment_trig_moments(a, b, delta, MomentOrder::First).unwrap();
        let tol = 1e-16;
        let s_ref = support::adaptive_simpson(&|t: f64| t * (delta * t).sin(), a, b, tol);
        let c_ref = support::adaptive_simpson(&|t: f64| t * (delta * t).cos(), a, b, tol);
        let mass = 0.5 * (b * b - a * a);
        assert!((s - s_ref).abs() <= 1e-12 * mass);
        assert!((c - c_ref).abs() <= 1e-12 * mass);
    }
}
