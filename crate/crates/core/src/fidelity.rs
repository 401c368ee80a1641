//! Bell-state fidelity of a gate under coherent errors and a thermal
//! motional state.
//!
//! The bichromatic drive couples the qubits through the collective spin
//! `S = (σₓ⊗1 + 1⊗σₓ)/2`, which splits the two-qubit space into branches
//! `m ∈ {+1, 0, 0, −1}`.  Branch `m` displaces the motional mode along
//! `m` times the pulse's phase-space path and acquires `m²` times its
//! swept area `Φ` as a geometric phase.  Starting from `|00⟩` and tracing
//! out a thermal mode of mean occupation `n̄`, the overlap with the Bell
//! state an ideal gate reaches collapses to a closed form: with
//! `r = |α(τ)|` the residual displacement of the loop and
//!
//! ```text
//! g = exp(−r²(2n̄+1)/4)
//! ```
//!
//! the thermal coherence surviving between branches displaced one path
//! apart,
//!
//! ```text
//! F = (3 + g⁴ + 4·g·sin|Φ|) / 8.
//! ```
//!
//! A closed loop (`r = 0`, so `g = 1` for any `n̄`) with `|Φ| = π/2`
//! scores `F = 1`; a zero pulse scores `F = 1/2`, the bare overlap of
//! `|00⟩` with the target.  The sign of `Φ` decides which of the two
//! conjugate Bell states the gate drives toward, and the score is always
//! taken against the matching one.
//!
//! [`fock_oracle_fidelity`] rechecks the closed form from scratch: it
//! integrates the same drive with a fixed-step fourth-order Runge–Kutta
//! scheme on a truncated number basis, one initial Fock state of the
//! thermal mixture at a time, doubling the step count until the score
//! self-replicates.  The two paths share nothing but the definition of
//! the drive, so their agreement is meaningful evidence.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;
use crate::grid::PulseEnvelope;
use crate::optimizer::{
    solve_gate_parameters, square_pulse_reference, OptimizationConfig, TWO_TONE_QUADRATURE_GAIN,
};
use crate::trajectory::{displacement_and_phase, ErrorConfig, Phase, Waveform};

/// Default Fock-space truncation (highest retained number state).
pub const DEFAULT_FOCK_CUTOFF: usize = 60;

/// Thermal-mixture tail mass the oracle discards.
const THERMAL_TAIL: f64 = 1e-10;

/// Step-halving self-consistency target on the oracle fidelity.
const STEP_TOLERANCE: f64 = 1e-8;

/// Largest population tolerated at the truncation boundary.
const LEAK_TOLERANCE: f64 = 1e-8;

/// How often the base step count may double before giving up.
const MAX_REFINEMENTS: usize = 12;

/// Initial time steps per drive oscillation.
const STEPS_PER_CYCLE: f64 = 16.0;

/// Segments used to represent the constant reference pulse.
const SQUARE_SEGMENTS: usize = 64;

/// Branch charges of the collective spin in the σₓ-product basis
/// `|++⟩, |+−⟩, |−+⟩, |−−⟩`.
const BRANCH_CHARGES: [f64; 4] = [1.0, 0.0, 0.0, -1.0];

/// What to score against: thermal occupation, coherent error model, and
/// the oracle's Fock-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityConfig {
    /// Mean thermal occupation n̄ of the motional mode.
    pub nbar: f64,
    /// Coherent errors applied during the evolution.
    pub err: ErrorConfig,
    /// Highest number state retained by the brute-force oracle.
    pub fock_cutoff: usize,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig {
            nbar: 0.0,
            err: ErrorConfig::default(),
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
        }
    }
}

impl FidelityConfig {
    /// Error-free configuration at the given occupation.
    pub fn thermal(nbar: f64) -> FidelityConfig {
        FidelityConfig { nbar, ..FidelityConfig::default() }
    }

    fn validate(&self) -> Result<()> {
        if !self.nbar.is_finite() || self.nbar < 0.0 {
            return Err(Error::InvalidOccupation { value: self.nbar });
        }
        Ok(())
    }

    /// The truncation must leave room for the thermal tail to breathe:
    /// at least `20·(n̄+1)` states, and strictly more than the mixture
    /// itself occupies.
    fn validate_cutoff(&self, mixture_len: usize) -> Result<()> {
        let needed = 20.0 * (self.nbar + 1.0);
        let mut min = needed as usize;
        if (min as f64) < needed {
            min += 1;
        }
        let min = min.max(mixture_len);
        if self.fock_cutoff < min {
            return Err(Error::FockCutoffTooSmall { cutoff: self.fock_cutoff, min });
        }
        Ok(())
    }
}

/// The factors the closed form combines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityBreakdown {
    /// Thermal coherence factor `g = exp(−r²(2n̄+1)/4)` ∈ (0, 1].
    pub coherence: f64,
    /// `sin|Φ|`: reaches 1 exactly when the swept area is `±π/2`.
    pub phase_alignment: f64,
    /// Sign of the swept area; the Bell target is the conjugate-pair
    /// member matching it.
    pub orientation: f64,
}

/// Fidelity of the generated two-qubit state against the Bell target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    /// Overlap with the matching Bell state, in `[0, 1]`.
    pub fidelity: f64,
    /// `|α(τ)|`: how far the phase-space loop fails to close.
    pub residual_displacement: f64,
    /// Swept (signed) phase-space area `Φ(τ)`.
    pub geometric_phase: f64,
    /// Contributions behind the score.
    pub breakdown: FidelityBreakdown,
}

/// Paired scores of the two gate families under one error model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityComparison {
    pub optimized: FidelityReport,
    pub square: FidelityReport,
}

/// Closed-form Bell fidelity of a hat-basis pulse.
pub fn analytic_fidelity(pulse: &PulseEnvelope, config: &FidelityConfig) -> Result<FidelityReport> {
    analytic_fidelity_waveform(&Waveform::from_envelope(pulse), config)
}

/// Closed-form Bell fidelity of an arbitrary piecewise-linear drive.
pub fn analytic_fidelity_waveform(
    wf: &Waveform,
    config: &FidelityConfig,
) -> Result<FidelityReport> {
    config.validate()?;
    let (alpha, phi) = displacement_and_phase(wf, &config.err)?;
    let residual = fmath::hypot(alpha.re, alpha.im);
    let g = coherence_factor(residual, config.nbar);
    let alignment = fmath::sin(fmath::abs(phi));
    let g4 = (g * g) * (g * g);
    let fidelity = (3.0 + g4 + 4.0 * g * alignment) / 8.0;
    Ok(finalize_report(fidelity, residual, phi, config.nbar))
}

/// Brute-force Bell fidelity of a hat-basis pulse on a truncated number
/// basis.
pub fn fock_oracle_fidelity(
    pulse: &PulseEnvelope,
    config: &FidelityConfig,
) -> Result<FidelityReport> {
    fock_oracle_fidelity_waveform(&Waveform::from_envelope(pulse), config)
}

/// Brute-force Bell fidelity of a piecewise-linear drive.
///
/// Integrates `iψ̇ = H(t)ψ` with `H = f(t)·S·(a·e^{−iθ(t)} + a†·e^{iθ(t)})`
/// on number states `|0…cutoff⟩`, where `f` is the per-tone Rabi rate
/// (the stored displacement amplitude over [`TWO_TONE_QUADRATURE_GAIN`])
/// and `θ` the accumulated drive phase including errors.  Each initial
/// Fock state of the thermal mixture evolves separately; the weighted
/// overlap with the matching Bell target is the score.  Step counts
/// double until the score moves less than `1e-8`.
pub fn fock_oracle_fidelity_waveform(
    wf: &Waveform,
    config: &FidelityConfig,
) -> Result<FidelityReport> {
    config.validate()?;
    let weights = thermal_weights(config.nbar);
    config.validate_cutoff(weights.len())?;
    let (alpha, phi) = displacement_and_phase(wf, &config.err)?;
    let residual = fmath::hypot(alpha.re, alpha.im);
    let bell = bell_coefficients(phi);
    let phase = Phase::new(wf.delta(), &config.err);
    let pieces = integration_pieces(wf, &phase, &config.err);

    let mut previous = None;
    for refine in 0..=MAX_REFINEMENTS {
        let fidelity =
            thermal_average(&pieces, &phase, &weights, &bell, config.fock_cutoff, refine)?;
        if let Some(prev) = previous {
            if fmath::abs(fidelity - prev) < STEP_TOLERANCE {
                return Ok(finalize_report(fidelity, residual, phi, config.nbar));
            }
        }
        previous = Some(fidelity);
    }
    let steps = pieces.iter().map(|p| p.base_steps << MAX_REFINEMENTS).sum();
    Err(Error::StepRefinementFailure { steps })
}

/// Paired fidelity of the energy-optimal gate and the constant reference
/// at matched `(K, τ, δ)`, both scored with the closed form under the
/// same configuration.
pub fn compare_square_vs_optimized(
    loops: u32,
    omega_max: f64,
    config: &FidelityConfig,
) -> Result<FidelityComparison> {
    let (params, pulse) =
        solve_gate_parameters(loops, omega_max, &OptimizationConfig::default())?;
    let optimized = analytic_fidelity(&pulse, config)?;
    let reference = square_pulse_reference(params.loops, params.tau)?;
    let wf = Waveform::square(reference.omega, reference.tau, params.delta, SQUARE_SEGMENTS)?;
    let square = analytic_fidelity_waveform(&wf, config)?;
    Ok(FidelityComparison { optimized, square })
}

/// `g = exp(−r²(2n̄+1)/4)`: what remains of the coherence between
/// branches whose motional states ended one residual displacement apart.
fn coherence_factor(residual: f64, nbar: f64) -> f64 {
    fmath::exp(-residual * residual * (2.0 * nbar + 1.0) / 4.0)
}

/// Assemble a report, guarding the `[0, 1]` bound.
fn finalize_report(fidelity: f64, residual: f64, phi: f64, nbar: f64) -> FidelityReport {
    assert!(
        (-1e-6..=1.0 + 1e-6).contains(&fidelity),
        "fidelity {fidelity} escaped [0, 1]"
    );
    FidelityReport {
        fidelity: fidelity.clamp(0.0, 1.0),
        residual_displacement: residual,
        geometric_phase: phi,
        breakdown: FidelityBreakdown {
            coherence: coherence_factor(residual, nbar),
            phase_alignment: fmath::sin(fmath::abs(phi)),
            orientation: if phi > 0.0 { 1.0 } else { -1.0 },
        },
    }
}

/// Geometric thermal distribution, truncated once the retained mass
/// exceeds `1 − 1e-10` and renormalized over the kept states.
fn thermal_weights(nbar: f64) -> Vec<f64> {
    if nbar <= 0.0 {
        return vec![1.0];
    }
    let ratio = nbar / (nbar + 1.0);
    let mut weight = 1.0 / (nbar + 1.0);
    let mut kept = 0.0;
    let mut weights = Vec::new();
    while kept < 1.0 - THERMAL_TAIL {
        weights.push(weight);
        kept += weight;
        weight *= ratio;
    }
    for w in &mut weights {
        *w /= kept;
    }
    weights
}

/// The Bell target in the σₓ-product branch basis `|++⟩,|+−⟩,|−+⟩,|−−⟩`.
///
/// A gate sweeping `Φ = −π/2` drives `|00⟩` to `(|00⟩ + i|11⟩)/√2`; the
/// mirror orientation reaches the conjugate state, so the target follows
/// the sign of the swept area.
fn bell_coefficients(phi: f64) -> [Complex64; 4] {
    let s = if phi > 0.0 { 1.0 } else { -1.0 };
    let quarter = 0.5 / core::f64::consts::SQRT_2;
    let outer = Complex64::new(quarter, -s * quarter);
    let inner = Complex64::new(quarter, s * quarter);
    [outer, inner, inner, outer]
}

/// One smooth span of the drive: a waveform segment, further split at
/// the chirp ramp end so the integrand has no kinks inside.
struct DrivePiece {
    a: f64,
    b: f64,
    omega_a: f64,
    omega_b: f64,
    /// Step count at refinement level zero.
    base_steps: usize,
}

fn integration_pieces(wf: &Waveform, phase: &Phase, err: &ErrorConfig) -> Vec<DrivePiece> {
    // Fastest angular scale of the integrand: drive phase rate at its
    // largest plus the displacement rate itself.
    let ramp_span = if err.chirp_duration < wf.tau() { err.chirp_duration } else { wf.tau() };
    let kappa = 2.0 * core::f64::consts::PI * fmath::abs(err.chirp_rate) * 1e6;
    let rate = fmath::abs(wf.delta() + err.detuning_offset) + kappa * ramp_span + wf.peak();
    let h0 = if rate > 0.0 {
        2.0 * core::f64::consts::PI / (rate * STEPS_PER_CYCLE)
    } else {
        f64::INFINITY
    };

    let mut pieces = Vec::with_capacity(wf.n_segments() + 1);
    let mut push = |a: f64, b: f64, omega_a: f64, omega_b: f64| {
        if b <= a {
            return;
        }
        let wanted = (b - a) / h0;
        let mut base_steps = wanted as usize;
        if (base_steps as f64) < wanted {
            base_steps += 1;
        }
        pieces.push(DrivePiece { a, b, omega_a, omega_b, base_steps: base_steps.max(1) });
    };
    for e in 0..wf.n_segments() {
        let (a, b, omega_a, omega_b) = wf.segment(e);
        match phase.ramp_end() {
            Some(tc) if a < tc && tc < b => {
                let slope = (omega_b - omega_a) / (b - a);
                let omega_c = omega_a + slope * (tc - a);
                push(a, tc, omega_a, omega_c);
                push(tc, b, omega_c, omega_b);
            }
            _ => push(a, b, omega_a, omega_b),
        }
    }
    pieces
}

/// Weighted Bell overlap over the thermal mixture at one refinement
/// level.  Initial states evolve independently; the summation order is
/// fixed by ascending Fock index.
fn thermal_average(
    pieces: &[DrivePiece],
    phase: &Phase,
    weights: &[f64],
    bell: &[Complex64; 4],
    cutoff: usize,
    refine: usize,
) -> Result<f64> {
    let dim = cutoff + 1;
    let mut ws = Workspace::new(dim);
    let mut total = 0.0;
    for (n0, &w) in weights.iter().enumerate() {
        evolve(pieces, phase, n0, refine, &mut ws);
        let leak = boundary_population(&ws.psi, dim);
        if leak > LEAK_TOLERANCE {
            return Err(Error::FockLeakage { population: leak });
        }
        total += w * bell_overlap(&ws.psi, bell, dim);
    }
    Ok(total)
}

/// State vector and scratch space for the Runge–Kutta sweep.
struct Workspace {
    dim: usize,
    /// `√n` lookup, `n = 0..=dim`.
    sq: Vec<f64>,
    /// Composite state, four spin blocks of `dim` number amplitudes.
    psi: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
}

impl Workspace {
    fn new(dim: usize) -> Workspace {
        let zero = vec![Complex64::new(0.0, 0.0); 4 * dim];
        Workspace {
            dim,
            sq: (0..=dim).map(|n| fmath::sqrt(n as f64)).collect(),
            psi: zero.clone(),
            k1: zero.clone(),
            k2: zero.clone(),
            k3: zero.clone(),
            k4: zero.clone(),
            stage: zero,
        }
    }

    fn reset(&mut self, n0: usize) {
        for v in &mut self.psi {
            *v = Complex64::new(0.0, 0.0);
        }
        // |00⟩ spreads evenly over the four σₓ-product branches.
        for s in 0..4 {
            self.psi[s * self.dim + n0] = Complex64::new(0.5, 0.0);
        }
    }
}

/// March `|00⟩ ⊗ |n0⟩` across all pieces at `2^refine` times the base
/// step count.
fn evolve(pieces: &[DrivePiece], phase: &Phase, n0: usize, refine: usize, ws: &mut Workspace) {
    ws.reset(n0);
    for piece in pieces {
        let steps = piece.base_steps << refine;
        let h = (piece.b - piece.a) / steps as f64;
        let slope = (piece.omega_b - piece.omega_a) / (piece.b - piece.a);
        for k in 0..steps {
            let t = piece.a + h * k as f64;
            rk4_step(piece, slope, phase, t, h, ws);
        }
    }
}

/// One classical fourth-order Runge–Kutta step of `ψ̇ = −i H(t) ψ`.
fn rk4_step(piece: &DrivePiece, slope: f64, phase: &Phase, t: f64, h: f64, ws: &mut Workspace) {
    let coupling =
        |t: f64| (piece.omega_a + slope * (t - piece.a)) / TWO_TONE_QUADRATURE_GAIN;
    let half = 0.5 * h;

    rhs(coupling(t), phase.theta(t), &ws.sq, ws.dim, &ws.psi, &mut ws.k1);
    lerp(&mut ws.stage, &ws.psi, &ws.k1, half);
    rhs(coupling(t + half), phase.theta(t + half), &ws.sq, ws.dim, &ws.stage, &mut ws.k2);
    lerp(&mut ws.stage, &ws.psi, &ws.k2, half);
    rhs(coupling(t + half), phase.theta(t + half), &ws.sq, ws.dim, &ws.stage, &mut ws.k3);
    lerp(&mut ws.stage, &ws.psi, &ws.k3, h);
    rhs(coupling(t + h), phase.theta(t + h), &ws.sq, ws.dim, &ws.stage, &mut ws.k4);

    let sixth = h / 6.0;
    for i in 0..ws.psi.len() {
        ws.psi[i] += (ws.k1[i] + (ws.k2[i] + ws.k3[i]) * 2.0 + ws.k4[i]) * sixth;
    }
}

/// `out = base + delta·scale`, element-wise.
fn lerp(out: &mut [Complex64], base: &[Complex64], delta: &[Complex64], scale: f64) {
    for ((o, b), d) in out.iter_mut().zip(base).zip(delta) {
        *o = *b + *d * scale;
    }
}

/// `out = −i·H(t)·ψ` with `H = f·S·(a·e^{−iθ} + a†·e^{iθ})`, applied
/// block-wise over the four branch charges of `S`.
fn rhs(f: f64, theta: f64, sq: &[f64], dim: usize, psi: &[Complex64], out: &mut [Complex64]) {
    let (sin_t, cos_t) = fmath::sin_cos(theta);
    let lower = Complex64::new(cos_t, -sin_t);
    let raise = Complex64::new(cos_t, sin_t);
    for (blk, &m) in BRANCH_CHARGES.iter().enumerate() {
        let base = blk * dim;
        if m == 0.0 {
            for v in &mut out[base..base + dim] {
                *v = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let g = m * f;
        for n in 0..dim {
            let mut h = Complex64::new(0.0, 0.0);
            if n + 1 < dim {
                h += lower * (psi[base + n + 1] * sq[n + 1]);
            }
            if n > 0 {
                h += raise * (psi[base + n - 1] * sq[n]);
            }
            out[base + n] = Complex64::new(g * h.im, -g * h.re);
        }
    }
}

/// `Σ_k |⟨Bell, k|ψ⟩|²`: the motional mode is traced out by summing the
/// projection over number states.
fn bell_overlap(psi: &[Complex64], bell: &[Complex64; 4], dim: usize) -> f64 {
    let mut total = 0.0;
    for n in 0..dim {
        let mut amp = Complex64::new(0.0, 0.0);
        for (s, b) in bell.iter().enumerate() {
            amp += b.conj() * psi[s * dim + n];
        }
        total += amp.norm_sqr();
    }
    total
}

/// Population stranded on the last retained number state.
fn boundary_population(psi: &[Complex64], dim: usize) -> f64 {
    (0..4).map(|s| psi[s * dim + dim - 1].norm_sqr()).sum()
}
