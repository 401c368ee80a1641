//! Cross-validation of the closed-form Bell fidelity against the
//! truncated-Fock-space reference integrator, plus the qualitative
//! fidelity orderings between the two gate families.
//!
//! The closed form reduces the score to two trajectory integrals; the
//! oracle time-steps the branch-diagonal drive on a number basis and
//! never sees that reduction.  Agreement across random pulses, error
//! models, and occupations is the strongest check this crate has that
//! the fidelity model is implemented right.

mod support;

use mspulse::fidelity::{
    analytic_fidelity, analytic_fidelity_waveform, compare_square_vs_optimized,
    fock_oracle_fidelity, fock_oracle_fidelity_waveform, FidelityConfig,
};
use mspulse::grid::{make_uniform_grid, PulseEnvelope};
use mspulse::optimizer::{solve_gate_parameters, OptimizationConfig};
use mspulse::trajectory::{ErrorConfig, Waveform};
use rand::Rng;
use std::f64::consts::{PI, SQRT_2};

const OCCUPATIONS: [f64; 3] = [0.0, 0.4, 1.0];

fn optimized_k3() -> (mspulse::optimizer::GateParameters, PulseEnvelope) {
    solve_gate_parameters(3, 2.0 * PI * 1180.0, &OptimizationConfig::default()).unwrap()
}

fn hat_pulse(tau: f64, loops: u32, amps: Vec<f64>) -> PulseEnvelope {
    let n = amps.len();
    let grid = make_uniform_grid(tau, n).unwrap();
    let delta = 2.0 * PI * (loops as f64) / tau;
    PulseEnvelope::new(grid, amps, delta, loops, 1.0).unwrap()
}

#[test]
fn quarter_area_constant_pulse_matches_the_oracle() {
    // Constant amplitude δ/(2√K) closes K loops around half the target
    // area: Φ = −π/4, so F = (4 + 4·sin(π/4))/8 = 1/2 + √2/4.
    let loops = 3.0;
    let delta = 2.0 * PI * loops;
    let wf = Waveform::square(delta / (2.0 * loops.sqrt()), 1.0, delta, 48).unwrap();
    let config = FidelityConfig::thermal(0.0);
    let analytic = analytic_fidelity_waveform(&wf, &config).unwrap();
    let oracle = fock_oracle_fidelity_waveform(&wf, &config).unwrap();
    assert!((analytic.fidelity - (0.5 + 0.25 * SQRT_2)).abs() <= 1e-9);
    assert!(
        (analytic.fidelity - oracle.fidelity).abs() <= 1e-6,
        "closed form {:.10} vs oracle {:.10}",
        analytic.fidelity,
        oracle.fidelity
    );
}

#[test]
fn randomized_pulses_agree_across_occupations() {
    let mut rng = support::rng(0xf1de_0a11);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let loops = 1 + (case % 3) as u32;
        let k = f64::from(loops);
        let delta = 2.0 * PI * k;
        let n = rng.gen_range(8..=14);
        let scale = delta / (2.0 * k.sqrt());
        let amps: Vec<f64> =
            (0..n).map(|_| scale * rng.gen_range(-0.4..1.1)).collect();
        let pulse = hat_pulse(1.0, loops, amps);

        let offset = if case % 2 == 0 { rng.gen_range(-0.04..0.04) * delta } else { 0.0 };
        let (chirp_rate, chirp_duration) = if case % 5 == 0 {
            (rng.gen_range(-2e-7..2e-7), rng.gen_range(0.2..1.0))
        } else {
            (0.0, 1e-3)
        };
        let err = ErrorConfig { detuning_offset: offset, chirp_rate, chirp_duration };

        for nbar in OCCUPATIONS {
            let config = FidelityConfig { nbar, err, ..FidelityConfig::default() };
            let analytic = analytic_fidelity(&pulse, &config).unwrap();
            let oracle = fock_oracle_fidelity(&pulse, &config).unwrap();
            let dev = (analytic.fidelity - oracle.fidelity).abs();
            worst = worst.max(dev);
            assert!(
                dev <= 1e-4,
                "case {case}, n̄ = {nbar}: closed form {:.8} vs oracle {:.8}",
                analytic.fidelity,
                oracle.fidelity
            );
        }
    }
    println!("largest closed-form/oracle deviation over 60 runs: {worst:.2e}");
}

#[test]
fn optimized_chirped_gate_agrees_with_the_oracle() {
    let (_, pulse) = optimized_k3();
    let config = FidelityConfig {
        nbar: 0.4,
        err: ErrorConfig { detuning_offset: 0.0, chirp_rate: 0.3, chirp_duration: 1e-3 },
        ..FidelityConfig::default()
    };
    let analytic = analytic_fidelity(&pulse, &config).unwrap();
    let oracle = fock_oracle_fidelity(&pulse, &config).unwrap();
    assert!(
        (analytic.fidelity - oracle.fidelity).abs() <= 1e-4,
        "closed form {:.8} vs oracle {:.8}",
        analytic.fidelity,
        oracle.fidelity
    );
}

#[test]
fn conjugate_loop_agrees_with_the_oracle() {
    // Negative detuning reverses the loop orientation; a detuning offset
    // leaves the loop open.  Both paths must score it against the
    // conjugate Bell target and still agree.
    let delta = -4.0 * PI;
    let wf = Waveform::square(0.45 * delta.abs(), 1.0, delta, 32).unwrap();
    let err = ErrorConfig { detuning_offset: 0.05 * delta, ..ErrorConfig::default() };
    let config = FidelityConfig { nbar: 0.4, err, ..FidelityConfig::default() };
    let analytic = analytic_fidelity_waveform(&wf, &config).unwrap();
    let oracle = fock_oracle_fidelity_waveform(&wf, &config).unwrap();
    assert!(analytic.geometric_phase > 0.0);
    assert_eq!(analytic.breakdown.orientation, 1.0);
    assert!((analytic.fidelity - oracle.fidelity).abs() <= 1e-4);
}

#[test]
fn ideal_gates_are_perfect_for_any_occupation() {
    let (_, pulse) = optimized_k3();
    let mut scores = Vec::new();
    for nbar in OCCUPATIONS {
        let report = analytic_fidelity(&pulse, &FidelityConfig::thermal(nbar)).unwrap();
        assert!(
            (report.fidelity - 1.0).abs() <= 1e-9,
            "n̄ = {nbar}: F = {:.12}",
            report.fidelity
        );
        scores.push(report.fidelity);
    }
    // Perfect closure leaves nothing for the thermal state to decohere.
    let spread = scores.iter().cloned().fold(f64::NAN, f64::max)
        - scores.iter().cloned().fold(f64::NAN, f64::min);
    assert!(spread <= 1e-12, "occupation changed an ideal score by {spread:.2e}");

    let oracle = fock_oracle_fidelity(&pulse, &FidelityConfig::thermal(0.0)).unwrap();
    assert!(
        (oracle.fidelity - 1.0).abs() <= 1e-7,
        "oracle at the ideal point: F = {:.10}",
        oracle.fidelity
    );
}

#[test]
fn fidelity_degrades_monotonically_with_detuning_offset() {
    let (params, pulse) = optimized_k3();
    let square = Waveform::square(
        params.delta / (2.0 * 3.0_f64).sqrt(),
        params.tau,
        params.delta,
        64,
    )
    .unwrap();
    let offsets_hz = [0.0, 5.0, 10.0, 20.0, 35.0, 50.0];
    let mut last = [f64::INFINITY; 2];
    for hz in offsets_hz {
        let err = ErrorConfig { detuning_offset: 2.0 * PI * hz, ..ErrorConfig::default() };
        let config = FidelityConfig { nbar: 0.4, err, ..FidelityConfig::default() };
        let fo = analytic_fidelity(&pulse, &config).unwrap().fidelity;
        let fs = analytic_fidelity_waveform(&square, &config).unwrap().fidelity;
        assert!(fo <= last[0] + 1e-9, "optimized gate recovered at {hz} Hz");
        assert!(fs <= last[1] + 1e-9, "square gate recovered at {hz} Hz");
        last = [fo, fs];
    }
}

#[test]
fn thermal_occupation_only_hurts_open_loops() {
    let (_, pulse) = optimized_k3();
    let open = ErrorConfig { detuning_offset: 2.0 * PI * 20.0, ..ErrorConfig::default() };
    let mut previous = 0.0;
    for nbar in OCCUPATIONS {
        let config = FidelityConfig { nbar, err: open, ..FidelityConfig::default() };
        let report = analytic_fidelity(&pulse, &config).unwrap();
        let infidelity = 1.0 - report.fidelity;
        assert!(
            infidelity > previous,
            "n̄ = {nbar} did not raise the infidelity ({infidelity:.3e})"
        );
        previous = infidelity;
    }
}

#[test]
fn comparison_is_perfect_at_zero_error() {
    let pair =
        compare_square_vs_optimized(3, 2.0 * PI * 1180.0, &FidelityConfig::thermal(0.4))
            .unwrap();
    assert!((pair.optimized.fidelity - 1.0).abs() <= 1e-9);
    assert!((pair.square.fidelity - 1.0).abs() <= 1e-9);
}

#[test]
fn optimized_gate_beats_square_under_chirp() {
    let config = FidelityConfig {
        nbar: 0.4,
        err: ErrorConfig { detuning_offset: 0.0, chirp_rate: 0.3, chirp_duration: 1e-3 },
        ..FidelityConfig::default()
    };
    let pair = compare_square_vs_optimized(3, 2.0 * PI * 1180.0, &config).unwrap();
    assert!(
        pair.optimized.fidelity > pair.square.fidelity,
        "optimized {:.8} should beat square {:.8} under a chirp",
        pair.optimized.fidelity,
        pair.square.fidelity
    );
}

#[test]
fn offset_infidelity_gap_is_wide() {
    // The constraint set cancels the first-order closure response, so a
    // static offset costs the optimized gate far less than the constant
    // reference.
    let err = ErrorConfig { detuning_offset: 2.0 * PI * 20.0, ..ErrorConfig::default() };
    let config = FidelityConfig { nbar: 0.4, err, ..FidelityConfig::default() };
    let pair = compare_square_vs_optimized(3, 2.0 * PI * 1180.0, &config).unwrap();
    let ratio = (1.0 - pair.optimized.fidelity) / (1.0 - pair.square.fidelity);
    assert!(
        ratio < 0.25,
        "optimized/square infidelity ratio at a 20 Hz offset: {ratio:.4}"
    );
    println!(
        "20 Hz offset infidelities: optimized {:.3e}, square {:.3e} (ratio {ratio:.4})",
        1.0 - pair.optimized.fidelity,
        1.0 - pair.square.fidelity
    );
}
