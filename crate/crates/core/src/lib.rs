//! Double-EIT cross-phase modulation in the ⁸⁷Rb D1 line.
//!
//! Three model tiers share one level structure: closed-form susceptibilities
//! ([`analytic_models`]), an order-truncated amplitude integration of the 7-level
//! non-Hermitian Hamiltonian, and the full 16-state Lindblad evolution
//! ([`master_equation`]). [`pulse_propagation`] covers the single-photon estimates.

// NaN-aware guards read as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analytic_models;
pub mod angular;
pub mod atomic_structure;
pub mod cli_runner;
pub mod error;
pub mod master_equation;
pub mod ode;
pub mod pulse_propagation;
pub mod scheme_builder;
pub mod units;

pub use error::{DeitError, Result};
