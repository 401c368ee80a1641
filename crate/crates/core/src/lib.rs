//! Synthesis and analysis of energy-optimal amplitude-modulated pulses for
//! Mølmer–Sørensen entangling gates.
//!
//! A bichromatic drive detuned by `δ` from a motional sideband takes the
//! mode around a loop in phase space,
//!
//! ```text
//! q(t) = ∫₀ᵗ cos(δ s) Ω(s) ds,    p(t) = ∫₀ᵗ sin(δ s) Ω(s) ds,
//! ```
//!
//! and the two-qubit phase acquired over the gate equals the signed area
//! enclosed by that loop.  Maximal entanglement needs `|A| = π/2` with the
//! loop closed at the gate time `τ`.  This crate expands the envelope
//! `Ω(t)` in a hat-function basis, expresses the enclosed area and the
//! pulse energy as quadratic forms, and solves the constrained generalized
//! eigenproblem that maximises area per unit energy subject to loop
//! closure and first-order detuning insensitivity.  The companion modules
//! integrate the resulting trajectories under detuning errors and chirps,
//! and score gate fidelity against a Bell-state target both in closed form
//! and with a truncated Fock-space reference integrator.
//!
//! The crate is `no_std`-compatible (with `alloc`): disable the default
//! `std` feature and enable `libm` instead.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("enable either the `std` feature or the `libm` feature");

extern crate alloc;

pub mod error;
mod fmath;
pub mod grid;
pub mod quadrature;
pub mod kernels;
pub mod optimizer;
pub mod trajectory;
pub mod fidelity;

pub use error::Error;
pub use grid::{PulseEnvelope, TimeGrid};
