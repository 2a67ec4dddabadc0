//! Simulation and calibration of electron-mediated two-nucleus gates driven by
//! generalized pulsed-polarization sequences.
//!
//! Units throughout: time in microseconds, frequencies as angular frequencies
//! in rad/us.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fidelity;
pub mod gates;
pub mod operator_core;
pub mod resonance;
pub mod results;
pub mod sequence;
pub mod spin_model;

pub use error::{Error, Result};
