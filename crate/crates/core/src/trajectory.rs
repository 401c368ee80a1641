//! Phase-space trajectories, loop closure, and robustness sweeps.
//!
//! A pulse drives the shared motional mode along
//!
//! ```text
//! q(t) = ∫₀ᵗ cos θ(s) · Ω(s) ds,   p(t) = ∫₀ᵗ sin θ(s) · Ω(s) ds,
//! ```
//!
//! where the accumulated phase is `θ(t) = ∫₀ᵗ δ(s) ds` for the (possibly
//! perturbed) detuning `δ(s)`.  The nominal gate has `δ(s) = δ`; error
//! models add a static offset `ε` and a linear frequency chirp that
//! saturates after a configurable duration.
//!
//! Without a chirp the phase is linear in time, so each piecewise-linear
//! segment of the envelope integrates in closed form — endpoint residuals
//! then carry no integrator error, which matters when measuring how the
//! residual scales with small detuning offsets.  With a chirp the phase
//! is quadratic during the ramp and the integrals fall back to

//! Gauss–Legendre quadrature on sub-steps.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;
use crate::grid::{segment_trig_moments, MomentOrder, PulseEnvelope};
use crate::quadrature::GaussLegendre;

/// Samples per envelope segment used by the sweep helpers.
pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 20;

/// Gauss–Legendre points per sub-step when integrating chirped phases.
const CHIRP_QUAD_ORDER: usize = 10;

/// One sample of the phase-space path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub q: f64,
    pub p: f64,
}

/// An integrated phase-space path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Path samples, starting at `(0, 0, 0)` and ending at `t = τ`.
    pub samples: Vec<PhasePoint>,
    /// Distance `√(q(τ)² + p(τ)²)` of the endpoint from the origin,
    /// computed from the exact endpoint integrals.
    pub closure_residual: f64,
    /// Signed polygon area of the sampled path.
    pub area_shoelace: f64,
}

impl Trajectory {
    /// Exact endpoint `(q(τ), p(τ))`.
    pub fn endpoint(&self) -> (f64, f64) {
        let last = self.samples.last().expect("trajectory has samples");
        (last.q, last.p)
    }
}

/// Coherent error model: static detuning offset plus a linear frequency
/// chirp `δ(t) = δ + ε + κ·min(t, t_c)` with `κ = 2π·rate·10⁶ rad/s²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorConfig {
    /// Static detuning shift ε in rad/s.
    pub detuning_offset: f64,
    /// Chirp rate in Hz per µs.
    pub chirp_rate: f64,
    /// Time after which the ramp saturates, in seconds.
    pub chirp_duration: f64,
}

impl Default for ErrorConfig {
    fn default() -> Self {
        ErrorConfig { detuning_offset: 0.0, chirp_rate: 0.0, chirp_duration: 1e-3 }
    }
}

impl ErrorConfig {
    fn validate(&self) -> Result<()> {
        if self.chirp_duration < 0.0 {
            return Err(Error::NegativeChirpDuration { value: self.chirp_duration });
        }
        Ok(())
    }
}

/// A piecewise-linear drive waveform: amplitudes at ordered node times,
/// interpolated linearly in between.  Hat-basis pulses and constant
/// (square) reference pulses both reduce to this form exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    nodes: Vec<f64>,
    amps: Vec<f64>,
    delta: f64,
}

impl Waveform {
    /// View a hat-basis pulse as a waveform (boundary amplitudes zero).
    pub fn from_envelope(pulse: &PulseEnvelope) -> Waveform {
        let nodes = pulse.grid().nodes().to_vec();
        let mut amps = Vec::with_capacity(nodes.len());
        amps.push(0.0);
        amps.extend_from_slice(pulse.omega());
        amps.push(0.0);
        Waveform { nodes, amps, delta: pulse.delta() }
    }

    /// A constant-amplitude pulse of length `tau`, represented on
    /// `segments` equal pieces (the representation is exact for any
    /// segment count; more segments only refine sampling).
    pub fn square(omega: f64, tau: f64, delta: f64, segments: usize) -> Result<Waveform> {
        if !(tau > 0.0) {
            return Err(Error::NonPositive { what: "gate time tau", value: tau });
        }
        if segments == 0 {
            return Err(Error::NonPositive { what: "segment count", value: 0.0 });
        }
        let m = segments;
        let nodes = (0..=m).map(|k| tau * (k as f64) / (m as f64)).collect();
        let amps = (0..=m).map(|_| omega).collect();
        Ok(Waveform { nodes, amps, delta })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        *self.nodes.last().expect("waveform has nodes")
    }

    /// Largest absolute amplitude.
    pub fn peak(&self) -> f64 {
        self.amps.iter().fold(0.0_f64, |m, &a| m.max(fmath::abs(a)))
    }

    pub(crate) fn n_segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Segment endpoints and endpoint amplitudes `(a, b, Ωa, Ωb)`.
    pub(crate) fn segment(&self, e: usize) -> (f64, f64, f64, f64) {
        (self.nodes[e], self.nodes[e + 1], self.amps[e], self.amps[e + 1])
    }
}

/// Accumulated drive phase under an error model.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Phase {
    /// δ + ε.
    base: f64,
    /// Chirp curvature κ in rad/s².
    kappa: f64,
    /// Ramp saturation time.
    t_end: f64,
}

impl Phase {
    pub(crate) fn new(delta: f64, err: &ErrorConfig) -> Phase {
        Phase {
            base: delta + err.detuning_offset,
            kappa: 2.0 * core::f64::consts::PI * err.chirp_rate * 1e6,
            t_end: err.chirp_duration,
        }
    }

    fn is_chirped(&self) -> bool {
        self.kappa != 0.0
    }

    /// Time where the chirp ramp saturates, if there is a chirp at all.
    pub(crate) fn ramp_end(&self) -> Option<f64> {
        self.is_chirped().then_some(self.t_end)
    }

    /// θ(t) = ∫₀ᵗ (base + κ·min(s, t_end)) ds.
    pub(crate) fn theta(&self, t: f64) -> f64 {
        let ramp = if t <= self.t_end {
            0.5 * self.kappa * t * t
        } else {
            self.kappa * (self.t_end * t - 0.5 * self.t_end * self.t_end)
        };
        self.base * t + ramp
    }
}

/// Exact increment of `α = ∫ Ω e^{iθ}` over `[a, b]` for linear Ω when the
/// phase is linear; Gauss–Legendre otherwise (split at the ramp end so the
/// integrand stays smooth).
fn alpha_increment(
    phase: &Phase,
    a: f64,
    b: f64,
    omega_a: f64,
    omega_b: f64,
    gl: &GaussLegendre,
) -> Complex64 {
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let slope = (omega_b - omega_a) / (b - a);
    let offset = omega_a - slope * a;
    if !phase.is_chirped() {
        let (s0, c0) = segment_trig_moments(a, b, phase.base, MomentOrder::Zeroth)
            .expect("ordered segment");
        let (s1, c1) = segment_trig_moments(a, b, phase.base, MomentOrder::First)
            .expect("ordered segment");
        return Complex64::new(offset * c0 + slope * c1, offset * s0 + slope * s1);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut eval = |lo: f64, hi: f64| {
        for (t, w) in gl.mapped(lo, hi) {
            let (sin_t, cos_t) = fmath::sin_cos(phase.theta(t));
            let amp = offset + slope * t;
            acc += Complex64::new(w * amp * cos_t, w * amp * sin_t);
        }
    };
    if a < phase.t_end && phase.t_end < b {
        eval(a, phase.t_end);
        eval(phase.t_end, b);
    } else {
        eval(a, b);
    }
    acc
}

/// Integrate the phase-space path of a hat-basis pulse.
pub fn integrate_trajectory(
    pulse: &PulseEnvelope,
    err: &ErrorConfig,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    integrate_waveform(&Waveform::from_envelope(pulse), err, samples_per_segment)
}

/// Integrate the phase-space path of an arbitrary piecewise-linear drive.
pub fn integrate_waveform(
    wf: &Waveform,
    err: &ErrorConfig,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    err.validate()?;
    if samples_per_segment == 0 {
        return Err(Error::NonPositive { what: "samples per segment", value: 0.0 });
    }
    let total = wf.n_segments() * samples_per_segment + 1;
    if total < 3 {
        return Err(Error::TooFewSamples { got: total });
    }

    let phase = Phase::new(wf.delta(), err);
    let gl = GaussLegendre::new(CHIRP_QUAD_ORDER);
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut samples = Vec::with_capacity(total);
    samples.push(PhasePoint { t: 0.0, q: 0.0, p: 0.0 });

    for e in 0..wf.n_segments() {
        let (a, b, omega_a, omega_b) = wf.segment(e);
        let h = b - a;
        let slope = (omega_b - omega_a) / h;
        for k in 1..=samples_per_segment {
            let lo = a + h * ((k - 1) as f64) / (samples_per_segment as f64);
            let hi = if k == samples_per_segment {
                b
            } else {
                a + h * (k as f64) / (samples_per_segment as f64)
            };
            let w_lo = omega_a + slope * (lo - a);
            let w_hi = omega_a + slope * (hi - a);
            alpha += alpha_increment(&phase, lo, hi, w_lo, w_hi, &gl);
            samples.push(PhasePoint { t: hi, q: alpha.re, p: alpha.im });
        }
    }

    let closure_residual = fmath::hypot(alpha.re, alpha.im);
    let area_shoelace = shoelace_area(&samples)?;
    Ok(Trajectory { samples, closure_residual, area_shoelace })
}

/// Signed polygon area `Σ ½(pᵢ + pᵢ₊₁)(qᵢ₊₁ − qᵢ)` of a sampled path.
pub fn shoelace_area(samples: &[PhasePoint]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { got: samples.len() });
    }
    let mut area = 0.0;
    for pair in samples.windows(2) {
        area += 0.5 * (pair[0].p + pair[1].p) * (pair[1].q - pair[0].q);
    }
    Ok(area)
}

/// One point of a detuning-offset sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Static detuning offset ε in rad/s.
    pub offset: f64,
    pub closure_residual: f64,
    pub area: f64,
}

/// Re-integrate the trajectory at each static detuning offset.
pub fn detuning_sweep(pulse: &PulseEnvelope, offsets: &[f64]) -> Result<Vec<SweepPoint>> {
    let wf = Waveform::from_envelope(pulse);
    detuning_sweep_waveform(&wf, offsets)
}

/// Sweep variant for arbitrary waveforms (e.g. the square reference).
pub fn detuning_sweep_waveform(wf: &Waveform, offsets: &[f64]) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let err = ErrorConfig { detuning_offset: offset, ..ErrorConfig::default() };
        let traj = integrate_waveform(wf, &err, DEFAULT_SAMPLES_PER_SEGMENT)?;
        out.push(SweepPoint {
            offset,
            closure_residual: traj.closure_residual,
            area: traj.area_shoelace,
        });
    }
    Ok(out)
}

/// Closure residual and enclosed area under a frequency chirp.
pub fn chirp_response(pulse: &PulseEnvelope, rate: f64, duration: f64) -> Result<(f64, f64)> {
    let err = ErrorConfig { detuning_offset: 0.0, chirp_rate: rate, chirp_duration: duration };
    let traj = integrate_trajectory(pulse, &err, DEFAULT_SAMPLES_PER_SEGMENT)?;
    Ok((traj.closure_residual, traj.area_shoelace))
}

/// Endpoint displacement `α(τ) = ∫₀^τ Ω e^{iθ}` and geometric phase
/// `Φ(τ) = ½∫₀^τ (p q̇ − q ṗ) dt = ½ Im ∫₀^τ conj(α̇) α dt`.
///
/// For a closed loop Φ equals the enclosed area; in general it is the
/// swept area, which is what the entangling phase of a gate follows.
pub fn displacement_and_phase(wf: &Waveform, err: &ErrorConfig) -> Result<(Complex64, f64)> {
    err.validate()?;
    let phase = Phase::new(wf.delta(), err);
    let gl = GaussLegendre::new(CHIRP_QUAD_ORDER);
    let mut alpha = Complex64::new(0.0, 0.0);
    let mut phi = 0.0;

    for e in 0..wf.n_segments() {
        let (a, b, omega_a, omega_b) = wf.segment(e);
        let slope = (omega_b - omega_a) / (b - a);
        // Quadrature for Φ over this segment, with α evaluated exactly at
        // each quadrature node as α(segment start) + closed-form increment.
        for (t, w) in gl.mapped(a, b) {
            let omega_t = omega_a + slope * (t - a);
            let alpha_t = alpha + alpha_increment(&phase, a, t, omega_a, omega_t, &gl);
            let (sin_t, cos_t) = fmath::sin_cos(phase.theta(t));
            // Im(conj(α̇) α) with α̇ = Ω e^{iθ}.
            phi += 0.5 * w * omega_t * (cos_t * alpha_t.im - sin_t * alpha_t.re);
        }
        alpha += alpha_increment(&phase, a, b, omega_a, omega_b, &gl);
    }
    Ok((alpha, phi))
}
