//! Exact wave-packet-train solutions of the linear Schrödinger equation in a
//! harmonic trap, together with the numerics used to check them: Hermite
//! functions and Gauss–Hermite quadrature, the classical complex oscillator
//! that drives the breathing, residual and orthonormality checks, a split-step
//! propagator and a parameter fitter.
//!
//! All lengths are in units of the axial oscillator length `l_x`, times in
//! units of `1/omega_x`, energies in units of `hbar omega_x`.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checker;
pub mod error;
pub mod field;
pub mod fitter;
pub mod oscillator;
pub mod packet;
pub mod special_fn;
pub mod stepper;

pub use checker::{ReportConfig, VerificationReport};
pub use error::{Error, Result};
pub use field::{Axis, ComplexField, LengthUnit};
pub use fitter::{FitConstraints, FitResult, FitUnit};
pub use oscillator::{ConservedSet, OscillatorParams};
pub use packet::{CoefficientState, Frame, TrainSpec};
pub use stepper::{Propagation, StepperConfig};
