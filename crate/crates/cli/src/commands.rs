//! Argument sets and implementations for the four subcommands.
//!
//! Unit conventions at the boundary: Rabi rates and detuning offsets are
//! quoted in Hz (per tone), gate times in microseconds, chirp rates in Hz
//! per microsecond.  Internally everything runs in rad/s on the
//! displacement-frame amplitudes, which carry a factor √2 relative to the
//! quoted per-tone Rabi rate.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use clap::Args;

use mspulse::fidelity::{analytic_fidelity_waveform, FidelityConfig};
use mspulse::grid::evaluate_pulse;
use mspulse::optimizer::{
    compare_energies_at_peak, dissipated_energy, realize_gate, solve_shape, OptimizationConfig,
    TWO_TONE_QUADRATURE_GAIN,
};
use mspulse::trajectory::{
    integrate_trajectory, integrate_waveform, ErrorConfig, Waveform, DEFAULT_SAMPLES_PER_SEGMENT,
};
use mspulse::PulseEnvelope;

use crate::output::atomic_write;
use crate::pulse_file::{Provenance, PulseFile, FORMAT_VERSION};

/// Segment count used to sample the constant reference pulse in sweeps;
/// the piecewise-linear representation is exact for any count, this only
/// sets the trajectory sampling density.
const SQUARE_SWEEP_SEGMENTS: usize = 64;

/// Refuse offset grids that would melt the disk.
const MAX_SWEEP_POINTS: usize = 1_000_000;

/// Failure classes mapped onto the exit-code contract: 2 usage, 3 solver,
/// 4 I/O.  (clap itself exits with 2 on malformed invocations.)
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(mspulse::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => f.write_str(msg),
            CliError::Solver(err) => write!(f, "solver failure: {err}"),
        }
    }
}

impl From<mspulse::Error> for CliError {
    fn from(err: mspulse::Error) -> Self {
        CliError::Solver(err)
    }
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Number of phase-space loops K (the detuning satisfies
    /// delta * tau = 2 pi K)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub loops: u32,

    /// Available per-tone peak Rabi rate in Hz; sets the gate time
    #[arg(long)]
    pub rabi_max_hz: f64,

    /// Weight of the derivative term in the regularized energy
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,

    /// Number of interior envelope nodes
    #[arg(long, default_value_t = 256)]
    pub n: usize,

    /// Write the synthesized pulse file here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Pulse file to sweep
    #[arg(long, conflicts_with = "square", required_unless_present = "square")]
    pub pulse: Option<PathBuf>,

    /// Sweep a constant-amplitude reference gate instead of a pulse file
    #[arg(long)]
    pub square: bool,

    /// Loop count K of the reference gate (with --square)
    #[arg(long, requires = "square", value_parser = clap::value_parser!(u32).range(1..))]
    pub loops: Option<u32>,

    /// Gate time of the reference gate in microseconds (with --square)
    #[arg(long, requires = "square")]
    pub tau_us: Option<f64>,

    /// Detuning offsets in Hz as START:STOP:STEP, inclusive of STOP
    #[arg(long, allow_hyphen_values = true)]
    pub offsets_hz: String,

    /// Linear frequency-chirp rate in Hz per microsecond
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub chirp_hz_per_us: f64,

    /// Mean thermal occupation of the motional mode for the fidelity
    /// column
    #[arg(long, default_value_t = 0.4)]
    pub nbar: f64,

    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Comma-separated loop counts, e.g. 3,5,9,12,18
    #[arg(long)]
    pub loops_list: String,

    /// Available per-tone peak Rabi rate in Hz, shared by both gates
    #[arg(long)]
    pub rabi_max_hz: f64,

    /// Weight of the derivative term in the regularized energy
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,

    /// Number of interior envelope nodes
    #[arg(long, default_value_t = 256)]
    pub n: usize,

    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrajectoryArgs {
    /// Pulse file to integrate
    #[arg(long)]
    pub pulse: PathBuf,

    /// Trajectory samples per envelope segment
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_SEGMENT)]
    pub samples_per_segment: usize,

    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
}

pub fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    validate_solver_inputs(args.rabi_max_hz, args.c, args.n, args.loops)?;
    let config = OptimizationConfig {
        loops: args.loops,
        c: args.c,
        n: args.n,
        ..OptimizationConfig::default()
    };
    let result = solve_shape(&config)?;
    let omega_max = 2.0 * PI * args.rabi_max_hz;
    let (params, pulse) = realize_gate(&result, omega_max)?;
    let peak = compare_energies_at_peak(&result, omega_max)?;

    println!("loops (K):                   {}", params.loops);
    println!("gate time tau:               {:.4} us", params.tau * 1e6);
    println!("detuning delta/2pi:          {:.4} kHz", params.delta / (2.0 * PI * 1e3));
    println!("peak Rabi rate (per tone):   {:.4} kHz", args.rabi_max_hz / 1e3);
    println!("pulse energy:                {:.6e} rad^2/s", dissipated_energy(&pulse));
    println!("energy vs equal-peak square: {:.4}", peak.ratio);
    println!("lambda_max:                  {:.6e}", result.lambda_max);
    println!("orientation:                 {}", result.orientation as i32);

    if let Some(out) = &args.out {
        let file = PulseFile {
            format_version: FORMAT_VERSION,
            loops: params.loops,
            tau_s: params.tau,
            delta_rad_per_s: params.delta,
            c: args.c,
            n: args.n,
            orientation: result.orientation as i32,
            omega_rad_per_s: pulse.omega().to_vec(),
            provenance: Provenance {
                library_version: env!("CARGO_PKG_VERSION").to_string(),
                rabi_max_hz: args.rabi_max_hz,
                area_target: config.area_target,
                quadrature_order: config.quadrature_order,
            },
        };
        file.save(out).map_err(|err| io_error(out, err))?;
        println!("pulse file:                  {}", out.display());
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    if !args.nbar.is_finite() || args.nbar < 0.0 {
        return Err(CliError::Usage(format!(
            "--nbar must be non-negative, got {}",
            args.nbar
        )));
    }
    if !args.chirp_hz_per_us.is_finite() {
        return Err(CliError::Usage("--chirp-hz-per-us must be finite".into()));
    }
    let wf = sweep_waveform(args)?;
    let offsets = parse_offsets(&args.offsets_hz)?;

    let mut csv = String::from("offset_hz,closure_residual,area,fidelity\n");
    for &hz in &offsets {
        let err = ErrorConfig {
            detuning_offset: 2.0 * PI * hz,
            chirp_rate: args.chirp_hz_per_us,
            ..ErrorConfig::default()
        };
        let traj = integrate_waveform(&wf, &err, DEFAULT_SAMPLES_PER_SEGMENT)?;
        let config = FidelityConfig { nbar: args.nbar, err, ..FidelityConfig::default() };
        let fid = analytic_fidelity_waveform(&wf, &config)?;
        let _ = writeln!(
            csv,
            "{hz},{:.12e},{:.12e},{:.12e}",
            traj.closure_residual, traj.area_shoelace, fid.fidelity
        );
    }
    atomic_write(&args.out, &csv).map_err(|err| io_error(&args.out, err))?;
    println!("wrote {} ({} rows)", args.out.display(), offsets.len());
    Ok(())
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let loops_list = parse_loops_list(&args.loops_list)?;
    let max_loops = *loops_list.iter().max().expect("list is non-empty");
    validate_solver_inputs(args.rabi_max_hz, args.c, args.n, max_loops)?;
    let omega_max = 2.0 * PI * args.rabi_max_hz;

    let mut rows = Vec::with_capacity(loops_list.len());
    for &k in &loops_list {
        let config = OptimizationConfig {
            loops: k,
            c: args.c,
            n: args.n,
            ..OptimizationConfig::default()
        };
        let result = solve_shape(&config)?;
        rows.push(compare_energies_at_peak(&result, omega_max)?);
    }
    let top_square = rows.iter().map(|row| row.energy_square).fold(0.0_f64, f64::max);

    let mut csv = String::from(
        "K,delta_tau_over_pi,tau_us,E_square,E_optimized,ratio,\
         E_square_normalized,E_optimized_normalized\n",
    );
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            row.loops,
            2 * row.loops,
            row.tau_optimized * 1e6,
            row.energy_square,
            row.energy_optimized,
            row.ratio,
            row.energy_square / top_square,
            row.energy_optimized / top_square,
        );
    }
    atomic_write(&args.out, &csv).map_err(|err| io_error(&args.out, err))?;
    println!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(())
}

pub fn trajectory(args: &TrajectoryArgs) -> Result<(), CliError> {
    if args.samples_per_segment == 0 {
        return Err(CliError::Usage("--samples-per-segment must be at least 1".into()));
    }
    let pulse = load_envelope(&args.pulse)?;
    let traj = integrate_trajectory(&pulse, &ErrorConfig::default(), args.samples_per_segment)?;

    let mut csv = String::from("t_us,omega_hz,q,p\n");
    for point in &traj.samples {
        // Report the envelope in quoted per-tone units, not the
        // displacement-frame amplitude the file stores.
        let omega_hz = evaluate_pulse(&pulse, point.t)? / (TWO_TONE_QUADRATURE_GAIN * 2.0 * PI);
        let _ = writeln!(
            csv,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            point.t * 1e6,
            omega_hz,
            point.q,
            point.p
        );
    }
    atomic_write(&args.out, &csv).map_err(|err| io_error(&args.out, err))?;
    println!("wrote {} ({} rows)", args.out.display(), traj.samples.len());
    Ok(())
}

fn validate_solver_inputs(
    rabi_max_hz: f64,
    c: f64,
    n: usize,
    loops: u32,
) -> Result<(), CliError> {
    if !rabi_max_hz.is_finite() || rabi_max_hz <= 0.0 {
        return Err(CliError::Usage(format!(
            "--rabi-max-hz must be a positive number, got {rabi_max_hz}"
        )));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(CliError::Usage(format!("--c must be non-negative, got {c}")));
    }
    let min_n = 8 * loops as usize;
    if n < min_n {
        return Err(CliError::Usage(format!(
            "--n must be at least 8K = {min_n} for K = {loops}, got {n}"
        )));
    }
    Ok(())
}

fn sweep_waveform(args: &SweepArgs) -> Result<Waveform, CliError> {
    if args.square {
        let loops = args
            .loops
            .ok_or_else(|| CliError::Usage("--square requires --loops".into()))?;
        let tau_us = args
            .tau_us
            .ok_or_else(|| CliError::Usage("--square requires --tau-us".into()))?;
        if !tau_us.is_finite() || tau_us <= 0.0 {
            return Err(CliError::Usage(format!("--tau-us must be positive, got {tau_us}")));
        }
        let tau = tau_us * 1e-6;
        let delta = 2.0 * PI * f64::from(loops) / tau;
        // Constant amplitude that closes K loops with |area| = pi/2.
        let omega = delta / (2.0 * f64::from(loops)).sqrt();
        Ok(Waveform::square(omega, tau, delta, SQUARE_SWEEP_SEGMENTS)?)
    } else {
        let path = args.pulse.as_ref().expect("clap requires --pulse or --square");
        load_envelope(path).map(|pulse| Waveform::from_envelope(&pulse))
    }
}

fn load_envelope(path: &Path) -> Result<PulseEnvelope, CliError> {
    let file = PulseFile::load(path).map_err(CliError::Io)?;
    file.to_envelope().map_err(|err| {
        CliError::Io(format!("{}: invalid pulse description: {err}", path.display()))
    })
}

fn io_error(path: &Path, err: io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {err}", path.display()))
}

/// Parse "START:STOP:STEP" into an inclusive, evenly spaced offset list.
/// The sign of STEP is reconciled with the direction of STOP − START.
fn parse_offsets(spec: &str) -> Result<Vec<f64>, CliError> {
    let invalid =
        || CliError::Usage(format!("--offsets-hz must be START:STOP:STEP, got '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(invalid());
    }
    let mut nums = [0.0_f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| invalid())?;
        if !slot.is_finite() {
            return Err(invalid());
        }
    }
    let [start, stop, step] = nums;
    if step == 0.0 {
        if start == stop {
            return Ok(vec![start]);
        }
        return Err(CliError::Usage(
            "--offsets-hz STEP must be non-zero when START != STOP".into(),
        ));
    }
    let span = stop - start;
    let step = if span == 0.0 || span.signum() == step.signum() { step } else { -step };
    let count = (span / step + 1.0 + 1e-9).floor() as usize;
    if count > MAX_SWEEP_POINTS {
        return Err(CliError::Usage(format!(
            "--offsets-hz describes {count} points, more than the {MAX_SWEEP_POINTS} supported"
        )));
    }
    Ok((0..count.max(1)).map(|i| start + step * (i as f64)).collect())
}

fn parse_loops_list(spec: &str) -> Result<Vec<u32>, CliError> {
    let invalid = |part: &str| {
        CliError::Usage(format!(
            "--loops-list must be comma-separated positive integers, got '{part}'"
        ))
    };
    let mut loops = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let k: u32 = part.parse().map_err(|_| invalid(part))?;
        if k == 0 {
            return Err(invalid(part));
        }
        loops.push(k);
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_grids_are_inclusive_and_direction_corrected() {
        let grid = parse_offsets("-20:20:5").unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid[0], -20.0);
        assert_eq!(grid[8], 20.0);

        let down = parse_offsets("20:-20:5").unwrap();
        assert_eq!(down.len(), 9);
        assert_eq!(down[0], 20.0);
        assert_eq!(down[8], -20.0);

        let single = parse_offsets("3:3:0").unwrap();
        assert_eq!(single, vec![3.0]);

        // STOP that the step does not land on exactly: stay inside it.
        let ragged = parse_offsets("0:10:3").unwrap();
        assert_eq!(ragged, vec![0.0, 3.0, 6.0, 9.0]);
    }

    #[test]
    fn bad_offset_specs_are_usage_errors() {
        for spec in ["", "1:2", "1:2:3:4", "a:2:3", "1:2:0", "nan:2:3", "0:1e12:1e-6"] {
            match parse_offsets(spec) {
                Err(CliError::Usage(_)) => {}
                other => panic!("expected usage error for '{spec}', got {other:?}"),
            }
        }
    }

    #[test]
    fn loop_lists_parse_and_reject_zero() {
        assert_eq!(parse_loops_list("3,5,9,12,18").unwrap(), vec![3, 5, 9, 12, 18]);
        assert_eq!(parse_loops_list(" 7 ").unwrap(), vec![7]);
        assert!(matches!(parse_loops_list("3,0,5"), Err(CliError::Usage(_))));
        assert!(matches!(parse_loops_list(""), Err(CliError::Usage(_))));
        assert!(matches!(parse_loops_list("3,,5"), Err(CliError::Usage(_))));
    }

    #[test]
    fn solver_input_validation_maps_to_usage_errors() {
        assert!(validate_solver_inputs(1180.0, 1.0, 256, 3).is_ok());
        assert!(matches!(
            validate_solver_inputs(0.0, 1.0, 256, 3),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            validate_solver_inputs(1180.0, -0.5, 256, 3),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            validate_solver_inputs(1180.0, 1.0, 20, 3),
            Err(CliError::Usage(_))
        ));
    }
}
