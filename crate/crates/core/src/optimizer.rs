//! The constrained area-per-energy eigenproblem and gate-parameter solve.
//!
//! Maximizing enclosed area at fixed regularized energy leads to the
//! generalized eigenvalue problem `Â ω = λ Ê ω` restricted to the
//! admissible subspace `{ω : bⁱᵀω = 0}`.  The solve works on an explicit
//! orthonormal basis `Q` of that subspace: the reduced pencil
//! `(QᵀÂQ, QᵀÊQ)` has a positive-definite right-hand side, so a Cholesky
//! factorization `QᵀÊQ = LLᵀ` turns it into an ordinary symmetric
//! eigenproblem for `L⁻¹(QᵀÂQ)L⁻ᵀ`.  The eigenvector of largest `|λ|`
//! gives the best area-to-energy shape; its loop orientation (the sign
//! of the area) is reported separately and the pulse is scaled to the
//! `|A| = π/2` target.
//!
//! Everything is solved in normalized time `t ∈ [0, 1]` with `δ = 2πK`.
//! Both kernels are homogeneous under time scaling, so the normalized
//! shape is exact for every gate time: a physical gate at peak drive rate
//! `Ω_peak` has `τ = C/Ω_peak`, where the constant `C` is the peak
//! amplitude of the unit-time, π/2-area pulse.
//!
//! Amplitudes everywhere in this crate are phase-space displacement
//! rates — the `Ω` that enters the trajectory integrals.  The drive is
//! bichromatic, and the Rabi rate quoted at interfaces refers to a single
//! tone; the two tones combine in quadrature, so realizing a gate at
//! quoted peak `Ω_max` means a peak displacement rate of `√2·Ω_max`
//! ([`TWO_TONE_QUADRATURE_GAIN`]).

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fmath;
use crate::grid::{make_uniform_grid, PulseEnvelope};
use crate::kernels::{
    build_area_kernel_with_order, build_constraints, build_energy_kernel, mass_matrix,
    DEFAULT_AREA_QUAD_ORDER,
};

/// Relative gap under which the two largest `|λ|` count as degenerate.
const DEGENERACY_GAP: f64 = 1e-9;

/// Ratio of peak phase-space displacement rate to the quoted per-tone
/// Rabi rate: the two tones of the bichromatic drive add in quadrature.
pub const TWO_TONE_QUADRATURE_GAIN: f64 = core::f64::consts::SQRT_2;

/// What to solve: loop count, Sobolev weight, grid resolution, area target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationConfig {
    /// Number of phase-space loops K (δτ = 2πK).
    pub loops: u32,
    /// Sobolev weight on the derivative term of the objective.
    pub c: f64,
    /// Interior grid size n.
    pub n: usize,
    /// Target enclosed area |A|.
    pub area_target: f64,
    /// Gauss–Legendre points per axis in area-kernel assembly.
    pub quadrature_order: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            loops: 3,
            c: 1.0,
            n: 256,
            area_target: core::f64::consts::FRAC_PI_2,
            quadrature_order: DEFAULT_AREA_QUAD_ORDER,
        }
    }
}

impl OptimizationConfig {
    fn validate(&self) -> Result<()> {
        if self.loops < 1 {
            return Err(Error::NonPositive { what: "loop count", value: self.loops as f64 });
        }
        if !(self.area_target > 0.0) {
            return Err(Error::NonPositive { what: "area target", value: self.area_target });
        }
        if self.c < 0.0 {
            return Err(Error::NegativeSobolevWeight { c: self.c });
        }
        let min = 8 * self.loops as usize;
        if self.n < min {
            return Err(Error::GridTooCoarse { n: self.n, min });
        }
        Ok(())
    }
}

/// Output of a shape solve on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// The scaled pulse: unit gate time, `|area| = area_target`.
    pub pulse: PulseEnvelope,
    /// Eigenvalue of largest magnitude (signed; area per regularized energy).
    pub lambda_max: f64,
    /// Enclosed area magnitude of the scaled pulse.
    pub area: f64,
    /// Physical (mass-form, c = 0) energy of the scaled pulse.
    pub energy: f64,
    /// Unit-peak shape before area scaling.
    pub shape_vector: Vec<f64>,
    /// Loop orientation: sign of the enclosed area (±1).
    pub orientation: f64,
    /// Whether the top eigenvalue was numerically degenerate.
    pub degenerate: bool,
}

/// Physical parameters of a synthesized gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParameters {
    /// Gate time in seconds.
    pub tau: f64,
    /// Detuning 2πK/τ in rad/s.
    pub delta: f64,
    /// Quoted per-tone peak Rabi rate in rad/s.
    pub omega_max: f64,
    /// Peak displacement rate √2·Ω_max in rad/s (the stored pulse's peak).
    pub displacement_peak: f64,
    /// Loop count K.
    pub loops: u32,
}

/// The constant-amplitude reference gate at matched (K, τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareReference {
    /// Constant Rabi rate δ/√(2K) in rad/s.
    pub omega: f64,
    /// Dissipated energy Ω²τ = 2π²K/τ in rad²/s.
    pub energy: f64,
    pub loops: u32,
    pub tau: f64,
}

/// Orthonormal basis of the complement of the constraint span, via
/// Householder reflections on the `n × 4` constraint block: the trailing
/// `n − 4` columns of the full Q factor.
fn orthonormal_complement(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let k = b.ncols();
    let scale = b.amax();
    let mut r = b.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let mut norm2 = 0.0;
        for i in j..n {
            norm2 += r[(i, j)] * r[(i, j)];
        }
        let norm = fmath::sqrt(norm2);
        if norm <= 1e-13 * scale {
            // Constraint vectors not linearly independent.
            return Err(Error::SingularGram);
        }
        let alpha = if r[(j, j)] >= 0.0 { -norm } else { norm };
        let mut v = DVector::<f64>::zeros(n);
        v[j] = r[(j, j)] - alpha;
        for i in (j + 1)..n {
            v[i] = r[(i, j)];
        }
        let vnorm = v.norm();
        if vnorm > 0.0 {
            v /= vnorm;
            for col in j..k {
                let mut dot = 0.0;
                for i in j..n {
                    dot += v[i] * r[(i, col)];
                }
                for i in j..n {
                    r[(i, col)] -= 2.0 * dot * v[i];
                }
            }
        }
        reflectors.push(v);
    }

    // Q = H₀H₁H₂H₃; its trailing columns are the complement basis.
    let m = n - k;
    let mut q = DMatrix::<f64>::zeros(n, m);
    for i in 0..m {
        q[(k + i, i)] = 1.0;
    }
    for v in reflectors.iter().rev() {
        if v.norm_squared() == 0.0 {
            continue;
        }
        for c in 0..m {
            let mut dot = 0.0;
            for i in 0..n {
                dot += v[i] * q[(i, c)];
            }
            for i in 0..n {
                q[(i, c)] -= 2.0 * dot * v[i];
            }
        }
    }
    Ok(q)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Solve for the optimal unit-time shape.
pub fn solve_shape(config: &OptimizationConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let n = config.n;
    let loops = config.loops;
    let delta = 2.0 * core::f64::consts::PI * f64::from(loops);
    let grid = make_uniform_grid(1.0, n)?;

    let area = build_area_kernel_with_order(&grid, delta, config.quadrature_order)?;
    let energy = build_energy_kernel(&grid, config.c)?;
    let constraints = build_constraints(&grid, delta)?;

    let q = orthonormal_complement(constraints.vectors())?;
    let mut a_r = q.transpose() * area.matrix() * &q;
    let mut e_r = q.transpose() * energy.matrix() * &q;
    symmetrize(&mut a_r);
    symmetrize(&mut e_r);

    let chol = nalgebra::Cholesky::new(e_r).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ, kept symmetric.
    let x = l.solve_lower_triangular(&a_r).ok_or(Error::NotPositiveDefinite)?;
    let mut c_mat =
        l.solve_lower_triangular(&x.transpose()).ok_or(Error::NotPositiveDefinite)?;
    symmetrize(&mut c_mat);

    let eig = nalgebra::SymmetricEigen::try_new(c_mat, f64::EPSILON, 0)
        .ok_or(Error::EigenFailure)?;

    // Rank eigenvalues by magnitude; detect near-degeneracy of the top.
    let m = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        fmath::abs(eig.eigenvalues[j])
            .partial_cmp(&fmath::abs(eig.eigenvalues[i]))
            .expect("finite eigenvalues")
    });
    let top = order[0];
    let lambda = eig.eigenvalues[top];
    let runner = order[1];
    let degenerate = fmath::abs(fmath::abs(eig.eigenvalues[runner]) - fmath::abs(lambda))
        <= DEGENERACY_GAP * fmath::abs(lambda);

    let pick = if degenerate {
        // Prefer the smoother of the two candidates: smaller stiffness norm.
        let stiff = crate::kernels::stiffness_matrix(&grid);
        let score = |idx: usize| {
            let y = eig.eigenvectors.column(idx);
            let z = chol
                .l()
                .transpose()
                .solve_upper_triangular(&y.into_owned())
                .expect("triangular solve");
            let w = &q * z;
            (stiff.clone() * &w).dot(&w) / w.norm_squared()
        };
        if score(runner) < score(top) {
            runner
        } else {
            top
        }
    } else {
        top
    };

    let lambda = eig.eigenvalues[pick];
    let y = eig.eigenvectors.column(pick).into_owned();
    let z = chol.l().transpose().solve_upper_triangular(&y).ok_or(Error::NotPositiveDefinite)?;
    let w = &q * z;

    // Normalize to unit positive peak (divide by the signed extremal
    // coefficient; deterministic tie-break on the first extremum).
    let mut arg = 0;
    for i in 1..n {
        if fmath::abs(w[i]) > fmath::abs(w[arg]) {
            arg = i;
        }
    }
    let peak = w[arg];
    if peak == 0.0 {
        return Err(Error::EigenFailure);
    }
    let shape: Vec<f64> = w.iter().map(|&x| x / peak).collect();

    let shape_area = area.form(&shape);
    if shape_area == 0.0 || !shape_area.is_finite() {
        return Err(Error::ZeroArea);
    }
    let orientation = if shape_area > 0.0 { 1.0 } else { -1.0 };
    let s = fmath::sqrt(config.area_target / fmath::abs(shape_area));
    let scaled: Vec<f64> = shape.iter().map(|&x| s * x).collect();

    let mass = mass_matrix(&grid);
    let scaled_vec = DVector::from_column_slice(&scaled);
    let phys_energy = (&mass * &scaled_vec).dot(&scaled_vec);
    let scaled_area = fmath::abs(area.form(&scaled));

    let pulse = PulseEnvelope::new(grid, scaled, delta, loops, config.c)?;
    Ok(OptimizationResult {
        pulse,
        lambda_max: lambda,
        area: scaled_area,
        energy: phys_energy,
        shape_vector: shape,
        orientation,
        degenerate,
    })
}

/// Rescale a solved shape to a new area target.  Area and energy are
/// quadratic in the amplitudes, so this is exact and cheap.
pub fn scale_to_area(result: &OptimizationResult, area_target: f64) -> Result<OptimizationResult> {
    if !(area_target > 0.0) {
        return Err(Error::NonPositive { what: "area target", value: area_target });
    }
    if result.area == 0.0 {
        return Err(Error::ZeroArea);
    }
    let s = fmath::sqrt(area_target / result.area);
    let omega: Vec<f64> = result.pulse.omega().iter().map(|&x| s * x).collect();
    let pulse = PulseEnvelope::new(
        result.pulse.grid().clone(),
        omega,
        result.pulse.delta(),
        result.pulse.loops(),
        result.pulse.c(),
    )?;
    Ok(OptimizationResult {
        pulse,
        lambda_max: result.lambda_max,
        area: s * s * result.area,
        energy: s * s * result.energy,
        shape_vector: result.shape_vector.clone(),
        orientation: result.orientation,
        degenerate: result.degenerate,
    })
}

/// Solve the gate time and physical pulse for a given quoted peak Rabi rate.
///
/// The normalized solve is τ-invariant, so the physical gate follows from
/// the scaling law `τ = C/(√2·Ω_max)` with `C` the unit-time scaled peak.
pub fn solve_gate_parameters(
    loops: u32,
    omega_max: f64,
    config: &OptimizationConfig,
) -> Result<(GateParameters, PulseEnvelope)> {
    if !(omega_max > 0.0) {
        return Err(Error::NonPositive { what: "peak Rabi rate", value: omega_max });
    }
    let cfg = OptimizationConfig { loops, ..*config };
    let result = solve_shape(&cfg)?;
    let (params, pulse) = realize_gate(&result, omega_max)?;
    Ok((params, pulse))
}

/// Turn a unit-time solve into a physical gate at the given quoted peak
/// Rabi rate.  The stored amplitudes are displacement rates, peaking at
/// `√2·omega_max`.
pub fn realize_gate(
    result: &OptimizationResult,
    omega_max: f64,
) -> Result<(GateParameters, PulseEnvelope)> {
    if !(omega_max > 0.0) {
        return Err(Error::NonPositive { what: "peak Rabi rate", value: omega_max });
    }
    let displacement_peak = TWO_TONE_QUADRATURE_GAIN * omega_max;
    let loops = result.pulse.loops();
    let c = fmath::abs(result.pulse.peak());
    let tau = c / displacement_peak;
    let delta = 2.0 * core::f64::consts::PI * f64::from(loops) / tau;
    let n = result.shape_vector.len();
    let grid = make_uniform_grid(tau, n)?;
    let omega: Vec<f64> =
        result.shape_vector.iter().map(|&x| displacement_peak * x).collect();
    let pulse = PulseEnvelope::new(grid, omega, delta, loops, result.pulse.c())?;
    let params = GateParameters { tau, delta, omega_max, displacement_peak, loops };
    Ok((params, pulse))
}

/// Constant-amplitude reference closing K circular loops with |A| = π/2.
pub fn square_pulse_reference(loops: u32, tau: f64) -> Result<SquareReference> {
    if loops < 1 {
        return Err(Error::NonPositive { what: "loop count", value: loops as f64 });
    }
    if !(tau > 0.0) {
        return Err(Error::NonPositive { what: "gate time tau", value: tau });
    }
    let k = f64::from(loops);
    let delta = 2.0 * core::f64::consts::PI * k / tau;
    let omega = delta / fmath::sqrt(2.0 * k);
    let energy = omega * omega * tau;
    Ok(SquareReference { omega, energy, loops, tau })
}

/// Dissipated (mass-form) energy `∫Ω²` of a pulse on its own grid.
pub fn dissipated_energy(pulse: &PulseEnvelope) -> f64 {
    let mass = mass_matrix(pulse.grid());
    let w = DVector::from_column_slice(pulse.omega());
    (&mass * &w).dot(&w)
}

/// Ratio of dissipated energies, optimized over square, at matched (K, τ).
pub fn energy_ratio(optimized: &PulseEnvelope, square: &SquareReference) -> Result<f64> {
    let tau_match =
        fmath::abs(optimized.tau() - square.tau) <= 1e-9 * square.tau.max(optimized.tau());
    if optimized.loops() != square.loops || !tau_match {
        return Err(Error::MismatchedGate);
    }
    Ok(dissipated_energy(optimized) / square.energy)
}

/// Energy comparison of the optimized and square gates at the same peak
/// drive amplitude, each at its own gate time (both share δτ = 2πK).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEnergyComparison {
    pub loops: u32,
    /// Optimized gate time in seconds.
    pub tau_optimized: f64,
    /// Square gate time π√K/Ω_max in seconds.
    pub tau_square: f64,
    /// Dissipated energy of the optimized gate (rad²/s).
    pub energy_optimized: f64,
    /// Dissipated energy of the square gate (rad²/s).
    pub energy_square: f64,
    /// energy_optimized / energy_square.
    pub ratio: f64,
}

/// Compare dissipated energies at a common quoted peak Rabi rate.
///
/// The hardware constraint is the available peak amplitude, so each gate
/// runs at its own duration: the square gate's τ is fixed by requiring
/// its constant amplitude to equal the optimized pulse's peak.
pub fn compare_energies_at_peak(
    result: &OptimizationResult,
    omega_max: f64,
) -> Result<PeakEnergyComparison> {
    let (params, pulse) = realize_gate(result, omega_max)?;
    let k = f64::from(params.loops);
    // δ_sq/√(2K) = √2·Ω_max  ⇒  τ_sq = 2πK/δ_sq = π√K/Ω_max.
    let tau_square = core::f64::consts::PI * fmath::sqrt(k) / omega_max;
    let square = square_pulse_reference(params.loops, tau_square)?;
    let energy_optimized = dissipated_energy(&pulse);
    Ok(PeakEnergyComparison {
        loops: params.loops,
        tau_optimized: params.tau,
        tau_square,
        energy_optimized,
        energy_square: square.energy,
        ratio: energy_optimized / square.energy,
    })
}
