//! Time grids, the hat-function basis and sampled pulse envelopes.
//!
//! A gate of duration `τ` is discretised by `n + 2` nodes
//! `t₀ = 0 < t₁ < … < tₙ < tₙ₊₁ = τ`.  Pulse envelopes are expanded in the
//! piecewise-linear hat functions `χₖ` attached to the *interior* nodes
//! (`χₖ(tⱼ) = δₖⱼ`), so every representable envelope vanishes at `t = 0`
//! and `t = τ` by construction — the soft start and end come for free.
//!
//! The module also provides exact segment integrals `∫ tᵐ sin(δt) dt` and
//! `∫ tᵐ cos(δt) dt` used throughout kernel assembly and trajectory
//! integration.  They are evaluated about the segment midpoint with
//! series fallbacks for small phase advance, which keeps them accurate
//! both for `δ → 0` and for segments much shorter than `1/δ`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

/// Discretisation of `[0, τ]` with `n` interior nodes.
///
/// Node `0` and node `n + 1` are the endpoints; hat functions (and hence
/// pulse amplitudes) are attached to nodes `1..=n` only.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Build a grid from an explicit node list.
    ///
    /// The list must start at `0`, end at some `τ > 0` and be strictly
    /// increasing, with at least 4 interior nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 6 {
            return Err(Error::GridTooCoarse {
                n: nodes.len().saturating_sub(2),
                min: 4,
            });
        }
        if nodes[0] != 0.0 {
            return Err(Error::NonPositive { what: "first node must be 0; grid origin", value: nodes[0] });
        }
        let tau = *nodes.last().unwrap();
        if !(tau > 0.0) {
            return Err(Error::NonPositive { what: "grid duration", value: tau });
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NonPositive {
                what: "node spacing (nodes must increase strictly)",
                value: 0.0,
            });
        }
        Ok(TimeGrid { tau, nodes })
    }

    /// Gate duration `τ` in seconds.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of interior nodes (= number of hat functions).
    pub fn n(&self) -> usize {
        self.nodes.len() - 2
    }

    /// All `n + 2` node times, endpoints included.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of elements (segments between adjacent nodes).
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Endpoints `(tₑ, tₑ₊₁)` of element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Index of the element containing `t` (ties resolve to the left
    /// element, except `t = 0` which lands in element 0).
    pub(crate) fn locate(&self, t: f64) -> usize {
        // partition_point returns the first node index with node > t;
        // subtracting one yields the element's left node.
        let k = self.nodes.partition_point(|&x| x <= t);
        k.clamp(1, self.nodes.len() - 1) - 1
    }
}

/// Build the default uniform grid: `tₖ = k·τ/(n+1)`.
pub fn make_uniform_grid(tau: f64, n: usize) -> Result<TimeGrid> {
    if !(tau > 0.0) {
        return Err(Error::NonPositive { what: "gate duration tau", value: tau });
    }
    if n < 4 {
        return Err(Error::GridTooCoarse { n, min: 4 });
    }
    let m = (n + 1) as f64;
    let mut nodes: Vec<f64> = (0..=n + 1).map(|k| tau * (k as f64 / m)).collect();
    // Guarantee exact endpoints regardless of rounding in the division.
    nodes[0] = 0.0;
    nodes[n + 1] = tau;
    TimeGrid::from_nodes(nodes)
}

/// View of the hat-function basis attached to a grid's interior nodes.
#[derive(Debug, Clone, Copy)]
pub struct HatBasis<'a> {
    grid: &'a TimeGrid,
}

impl<'a> HatBasis<'a> {
    pub fn new(grid: &'a TimeGrid) -> Self {
        HatBasis { grid }
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.grid.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluate hat `i` (attached to interior node `i + 1`) at time `t`.
    ///
    /// Times outside the support evaluate to zero; no bounds check on `t`.
    pub fn eval(&self, i: usize, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        let (lo, mid, hi) = (nodes[i], nodes[i + 1], nodes[i + 2]);
        if t <= lo || t >= hi {
            if t == mid {
                // Degenerate call guard; unreachable on valid grids.
                return 1.0;
            }
            0.0
        } else if t <= mid {
            (t - lo) / (mid - lo)
        } else {
            (hi - t) / (hi - mid)
        }
    }
}

/// An amplitude-modulated pulse: hat-basis envelope plus gate parameters.
///
/// `omega[i]` is the Rabi amplitude (rad/s) at interior node `i + 1`; the
/// envelope is the piecewise-linear interpolant and vanishes at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    grid: TimeGrid,
    omega: Vec<f64>,
    delta: f64,
    loops: u32,
    c: f64,
}

impl PulseEnvelope {
    /// Assemble a pulse, checking the closure relation `δ·τ = 2πK`.
    pub fn new(grid: TimeGrid, omega: Vec<f64>, delta: f64, loops: u32, c: f64) -> Result<Self> {
        if omega.len() != grid.n() {
            return Err(Error::AmplitudeCount { expected: grid.n(), got: omega.len() });
        }
        if !(delta > 0.0) {
            return Err(Error::NonPositive { what: "detuning delta", value: delta });
        }
        if loops == 0 {
            return Err(Error::NonPositive { what: "loop count", value: 0.0 });
        }
        if c < 0.0 {
            return Err(Error::NegativeSobolevWeight { c });
        }
        let target = 2.0 * core::f64::consts::PI * loops as f64;
        if fmath::abs(delta * grid.tau() - target) > 1e-12 * target {
            return Err(Error::MismatchedGate);
        }
        Ok(PulseEnvelope { grid, omega, delta, loops, c })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Interior nodal amplitudes in rad/s.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Detuning from the motional mode, rad/s.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of phase-space loops `K` (`δ·τ = 2πK`).
    pub fn loops(&self) -> u32 {
        self.loops
    }

    /// Sobolev weight the envelope was optimised with.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    /// Largest absolute nodal amplitude, rad/s.
    pub fn peak(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, &w| m.max(fmath::abs(w)))
    }

    /// Envelope value at node `k` of the grid (boundary nodes are zero).
    pub fn node_value(&self, k: usize) -> f64 {
        if k == 0 || k == self.grid.n() + 1 {
            0.0
        } else {
            self.omega[k - 1]
        }
    }
}

/// Evaluate the envelope at time `t ∈ [0, τ]` by linear interpolation.
pub fn evaluate_pulse(pulse: &PulseEnvelope, t: f64) -> Result<f64> {
    let tau = pulse.tau();
    if !(0.0..=tau).contains(&t) {
        return Err(Error::OutOfSupport { t, tau });
    }
    let e = pulse.grid().locate(t);
    let (a, b) = pulse.grid().element(e);
    let (wa, wb) = (pulse.node_value(e), pulse.node_value(e + 1));
    Ok(wa + (wb - wa) * ((t - a) / (b - a)))
}

/// Selects `m` in the segment moments `∫ tᵐ sin(δt) dt`, `∫ tᵐ cos(δt) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    Zeroth,
    First,
}

/// Exact `(∫ₐᵇ tᵐ sin(δt) dt, ∫ₐᵇ tᵐ cos(δt) dt)` for `m ∈ {0, 1}`.
///
/// `delta` may be zero or small: the evaluation switches to midpoint
/// series forms well before cancellation can bite, so results stay at
/// full precision for all `δ·(b−a)`.
pub fn segment_trig_moments(a: f64, b: f64, delta: f64, order: MomentOrder) -> Result<(f64, f64)> {
    if a > b {
        return Err(Error::ReversedInterval { a, b });
    }
    let m = trig_moments_012(a, b, delta);
    Ok(match order {
        MomentOrder::Zeroth => (m[0], m[1]),
        MomentOrder::First => (m[2], m[3]),
    })
}

/// `[S₀, C₀, S₁, C₁, S₂, C₂]` with `Sₘ = ∫ₐᵇ tᵐ sin(δt) dt` and
/// `Cₘ = ∫ₐᵇ tᵐ cos(δt) dt`, valid for any `δ` including zero.
pub(crate) fn trig_moments_012(a: f64, b: f64, delta: f64) -> [f64; 6] {
    let c = 0.5 * (a + b);
    let h = b - a;
    let x = 0.5 * delta * h;
    let (sc, cc) = fmath::sin_cos(delta * c);

    // ∫ over the centred interval u ∈ [−h/2, h/2]:
    //   ∫ cos(δu) du      = h·j₀(x)
    //   ∫ u sin(δu) du    = (δh³/4)·j₁(x)
    //   ∫ u² cos(δu) du   = (h³/4)·g₂(x)
    // (odd counterparts vanish).
    let base = h * j0(x);
    let lin = 0.25 * delta * h * h * h * j1(x);
    let quad = 0.25 * h * h * h * g2(x);

    let s0 = sc * base;
    let c0 = cc * base;
    let s1 = c * s0 + cc * lin;
    let c1 = c * c0 - sc * lin;
    let s2 = c * c * s0 + 2.0 * c * cc * lin + sc * quad;
    let c2 = c * c * c0 - 2.0 * c * sc * lin + cc * quad;
    [s0, c0, s1, c1, s2, c2]
}

/// sin(x)/x.
fn j0(x: f64) -> f64 {
    if fmath::abs(x) < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        fmath::sin(x) / x
    }
}

/// (sin x − x·cos x)/x³ = 1/3 − x²/30 + x⁴/840 − …
fn j1(x: f64) -> f64 {
    if fmath::abs(x) < 0.9 {
        // Σₖ (−1)ᵏ (2k+2)/(2k+3)! · x^{2k}
        let x2 = x * x;
        let mut term = 1.0 / 3.0;
        let mut acc = term;
        let mut k = 0.0_f64;
        loop {
            // ratio of consecutive terms: −x²·(2k+4)/[(2k+2)(2k+4)(2k+5)]
            term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 5.0));
            k += 1.0;
            let next = acc + term;
            if next == acc {
                return acc;
            }
            acc = next;
        }
    } else {
        (fmath::sin(x) - x * fmath::cos(x)) / (x * x * x)
    }
}

/// ((x² − 2)·sin x + 2x·cos x)/x³ = 1/3 − x²/10 + x⁴/168 − …
fn g2(x: f64) -> f64 {
    if fmath::abs(x) < 2.0 {
        // Σₖ (−1)ᵏ (2k+2)(2k+1)/(2k+3)! · x^{2k}
        let x2 = x * x;
        let mut term = 1.0 / 3.0;
        let mut acc = term;
        let mut k = 0.0_f64;
        loop {
            // (2k+4)(2k+3)/(2k+5)! ÷ (2k+2)(2k+1)/(2k+3)!
            //   = (2k+4)(2k+3) / [(2k+2)(2k+1)(2k+4)(2k+5)]
            term *= -x2 * (2.0 * k + 3.0) / ((2.0 * k + 1.0) * (2.0 * k + 2.0) * (2.0 * k + 5.0));
            k += 1.0;
            let next = acc + term;
            if next == acc {
                return acc;
            }
            acc = next;
        }
    } else {
        let (s, c) = fmath::sin_cos(x);
        ((x * x - 2.0) * s + 2.0 * x * c) / (x * x * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use core::f64::consts::PI;

    #[test]
    fn uniform_grid_small_example() {
        let g = make_uniform_grid(1.0, 4).unwrap();
        let expect = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        assert_eq!(g.nodes().len(), 6);
        for (got, want) in g.nodes().iter().zip(expect) {
            assert_relative_eq!(got, &want, max_relative = 1e-15);
        }
        assert_eq!(g.n(), 4);
        assert_eq!(g.tau(), 1.0);
    }

    #[test]
    fn uniform_grid_rejects_bad_input() {
        assert!(matches!(make_uniform_grid(1.0, 3), Err(Error::GridTooCoarse { .. })));
        assert!(matches!(make_uniform_grid(0.0, 16), Err(Error::NonPositive { .. })));
        assert!(matches!(make_uniform_grid(-2.0, 16), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn uniform_grid_default_spacing() {
        let tau = 1000.4e-6;
        let g = make_uniform_grid(tau, 256).unwrap();
        let h = g.nodes()[1] - g.nodes()[0];
        assert_relative_eq!(h, tau / 257.0, max_relative = 1e-14);
        assert_eq!(g.nodes().last().copied().unwrap(), tau);
    }

    fn demo_pulse(tau: f64, n: usize, loops: u32) -> PulseEnvelope {
        let grid = make_uniform_grid(tau, n).unwrap();
        let delta = 2.0 * PI * loops as f64 / tau;
        let omega = vec![1.0; n];
        PulseEnvelope::new(grid, omega, delta, loops, 1.0).unwrap()
    }

    #[test]
    fn envelope_checks_closure_relation() {
        let grid = make_uniform_grid(1.0, 8).unwrap();
        // delta off the 2πK/τ relation by a part in 1e6.
        let bad = 2.0 * PI * 3.0 * (1.0 + 1e-6);
        let err = PulseEnvelope::new(grid, vec![0.0; 8], bad, 3, 1.0).unwrap_err();
        assert_eq!(err, Error::MismatchedGate);
    }

    #[test]
    fn evaluate_zero_pulse_everywhere() {
        let grid = make_uniform_grid(2.0, 8).unwrap();
        let p = PulseEnvelope::new(grid, vec![0.0; 8], PI, 1, 0.0).unwrap();
        for t in [0.0, 0.3, 1.0, 1.999, 2.0] {
            assert_eq!(evaluate_pulse(&p, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn evaluate_matches_nodes_and_interpolates() {
        let p = demo_pulse(1.0, 4, 1);
        let nodes = p.grid().nodes().to_vec();
        // Boundary nodes are structurally zero.
        assert_eq!(evaluate_pulse(&p, 0.0).unwrap(), 0.0);
        assert_eq!(evaluate_pulse(&p, 1.0).unwrap(), 0.0);
        for k in 1..=4 {
            assert_relative_eq!(evaluate_pulse(&p, nodes[k]).unwrap(), 1.0);
        }
        // Midpoint of the first element sits halfway up the first hat.
        let mid = 0.5 * (nodes[0] + nodes[1]);
        assert_relative_eq!(evaluate_pulse(&p, mid).unwrap(), 0.5);
    }

    #[test]
    fn evaluate_rejects_out_of_support() {
        let p = demo_pulse(1.0, 4, 1);
        assert!(matches!(evaluate_pulse(&p, -0.1), Err(Error::OutOfSupport { .. })));
        assert!(matches!(evaluate_pulse(&p, 1.0 + 1e-12), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn hats_sum_to_one_in_the_interior() {
        let grid = make_uniform_grid(3.0, 7).unwrap();
        let basis = HatBasis::new(&grid);
        let nodes = grid.nodes();
        for &t in &[nodes[1], 0.5 * (nodes[1] + nodes[2]), 1.7, nodes[7] - 1e-9] {
            let sum: f64 = (0..basis.len()).map(|i| basis.eval(i, t)).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-13);
        }
        // Before t₁ the boundary half-hat carries the remainder.
        let t = 0.5 * nodes[1];
        let sum: f64 = (0..basis.len()).map(|i| basis.eval(i, t)).sum();
        let boundary = (nodes[1] - t) / (nodes[1] - nodes[0]);
        assert_abs_diff_eq!(sum + boundary, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn moments_over_full_and_half_periods() {
        let delta = 3.7;
        let (s, c) = segment_trig_moments(0.0, 2.0 * PI / delta, delta, MomentOrder::Zeroth).unwrap();
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-15);
        let (s, c) = segment_trig_moments(0.0, PI / delta, delta, MomentOrder::Zeroth).unwrap();
        assert_relative_eq!(s, 2.0 / delta, max_relative = 1e-14);
        assert_abs_diff_eq!(c, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn moments_zero_delta_limit() {
        let (a, b) = (0.3, 1.9);
        let (s0, c0) = segment_trig_moments(a, b, 0.0, MomentOrder::Zeroth).unwrap();
        assert_eq!(s0, 0.0);
        assert_relative_eq!(c0, b - a, max_relative = 1e-15);
        let (s1, c1) = segment_trig_moments(a, b, 0.0, MomentOrder::First).unwrap();
        assert_eq!(s1, 0.0);
        assert_relative_eq!(c1, 0.5 * (b * b - a * a), max_relative = 1e-15);
        // A detuning far below the segment's reciprocal length must agree
        // with the limit to near machine precision.
        let (s1e, c1e) = segment_trig_moments(a, b, 1e-13, MomentOrder::First).unwrap();
        assert_relative_eq!(c1e, c1, max_relative = 1e-12);
        assert_abs_diff_eq!(s1e, 1e-13 * (b * b * b - a * a * a) / 3.0, epsilon = 1e-25);
    }

    #[test]
    fn moments_are_additive_across_a_split() {
        let delta = 17.3;
        let (a, m, b) = (0.11, 0.47, 1.03);
        for order in [MomentOrder::Zeroth, MomentOrder::First] {
            let whole = segment_trig_moments(a, b, delta, order).unwrap();
            let left = segment_trig_moments(a, m, delta, order).unwrap();
            let right = segment_trig_moments(m, b, delta, order).unwrap();
            let scale = fmath::abs(whole.0).max(fmath::abs(whole.1)).max(1e-3);
            assert_abs_diff_eq!(left.0 + right.0, whole.0, epsilon = 1e-14 * scale);
            assert_abs_diff_eq!(left.1 + right.1, whole.1, epsilon = 1e-14 * scale);
        }
    }

    #[test]
    fn moments_reject_reversed_interval() {
        assert!(matches!(
            segment_trig_moments(1.0, 0.5, 1.0, MomentOrder::Zeroth),
            Err(Error::ReversedInterval { .. })
        ));
    }

    #[test]
    fn series_and_direct_branches_agree() {
        // j₁ switches branches at |x| = 0.9, g₂ at |x| = 2.0; the series
        // side must match the closed form on both sides of each threshold.
        for x in [0.88_f64, 0.8999, 0.9001, 0.92] {
            let direct = (x.sin() - x * x.cos()) / (x * x * x);
            assert_relative_eq!(j1(x), direct, max_relative = 1e-13);
        }
        for x in [1.98_f64, 1.9999, 2.0001, 2.02] {
            let direct = ((x * x - 2.0) * x.sin() + 2.0 * x * x.cos()) / (x * x * x);
            assert_relative_eq!(g2(x), direct, max_relative = 1e-13);
        }
    }
}
