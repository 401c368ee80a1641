//! Error type shared across the crate.

use core::fmt;

/// Everything that can go wrong when building grids, kernels or solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A quantity that must be strictly positive was not.
    NonPositive { what: &'static str, value: f64 },
    /// Fewer interior nodes than the operation supports.
    GridTooCoarse { n: usize, min: usize },
    /// Evaluation time outside the pulse support `[0, τ]`.
    OutOfSupport { t: f64, tau: f64 },
    /// Interval endpoints out of order (`a > b`).
    ReversedInterval { a: f64, b: f64 },
    /// Negative Sobolev weight `c` in the energy kernel.
    NegativeSobolevWeight { c: f64 },
    /// The constraint Gram matrix is numerically singular (e.g. `δ = 0`).
    SingularGram,
    /// Two operands were built on different time grids.
    GridMismatch,
    /// Pulse amplitudes and grid size disagree.
    AmplitudeCount { expected: usize, got: usize },
    /// A pulse with vanishing enclosed area cannot be rescaled to a target.
    ZeroArea,
    /// The reduced energy form lost positive definiteness.
    NotPositiveDefinite,
    /// The symmetric eigensolver did not converge.
    EigenFailure,
    /// Operands describe different gates (loop count or duration differ).
    MismatchedGate,
    /// Too few trajectory samples for a polygon area.
    TooFewSamples { got: usize },
    /// A chirp saturation time cannot be negative.
    NegativeChirpDuration { value: f64 },
    /// A thermal occupation must be finite and non-negative.
    InvalidOccupation { value: f64 },
    /// Fock truncation below the validity threshold for the requested `n̄`.
    FockCutoffTooSmall { cutoff: usize, min: usize },
    /// Population reached the Fock truncation boundary.
    FockLeakage { population: f64 },
    /// The time stepper hit its refinement limit before self-consistency.
    StepRefinementFailure { steps: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositive { what, value } => {
                write!(f, "{what} must be positive, got {value}")
            }
            Error::GridTooCoarse { n, min } => {
                write!(f, "grid has {n} interior nodes, need at least {min}")
            }
            Error::OutOfSupport { t, tau } => {
                write!(f, "time {t} outside pulse support [0, {tau}]")
            }
            Error::ReversedInterval { a, b } => {
                write!(f, "interval endpoints out of order: a = {a}, b = {b}")
            }
            Error::NegativeSobolevWeight { c } => {
                write!(f, "Sobolev weight must be non-negative, got {c}")
            }
            Error::SingularGram => write!(f, "constraint Gram matrix is singular"),
            Error::GridMismatch => write!(f, "operands live on different time grids"),
            Error::AmplitudeCount { expected, got } => {
                write!(f, "expected {expected} interior amplitudes, got {got}")
            }
            Error::ZeroArea => write!(f, "pulse encloses zero area; cannot rescale"),
            Error::NotPositiveDefinite => {
                write!(f, "energy form is not positive definite on the subspace")
            }
            Error::EigenFailure => write!(f, "symmetric eigensolver failed to converge"),
            Error::MismatchedGate => {
                write!(f, "pulses describe different gates (loops or duration differ)")
            }
            Error::TooFewSamples { got } => {
                write!(f, "need at least 3 samples for a polygon area, got {got}")
            }
            Error::NegativeChirpDuration { value } => {
                write!(f, "chirp duration must be non-negative, got {value}")
            }
            Error::InvalidOccupation { value } => {
                write!(f, "thermal occupation must be finite and non-negative, got {value}")
            }
            Error::FockCutoffTooSmall { cutoff, min } => {
                write!(f, "Fock cutoff {cutoff} below validity threshold {min}")
            }
            Error::FockLeakage { population } => {
                write!(f, "population {population:.3e} at the Fock truncation boundary")
            }
            Error::StepRefinementFailure { steps } => {
                write!(f, "no step-halving self-consistency after {steps} steps")
            }
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
