//! Simulation library for stimulated Raman adiabatic passage and its
//! generalizations, from three-level model systems to a multi-level ion with
//! full fine-structure coupling, plus the transient-absorption observables
//! used to read the resulting coherences out.
//!
//! The crate is organized bottom-up:
//!
//! - [`half`], [`units`]: half-integer bookkeeping and atomic-unit
//!   conversions shared by everything else.
//! - [`angular`]: exact Wigner 3j/6j recoupling coefficients.
//! - [`levels`], [`dipoles`]: the ionic level structure and the electric
//!   dipole operator built from it.
//! - [`pulses`]: Gaussian envelopes, composite two-component envelopes, and
//!   carrier fields.
//! - [`rwa`]: three-level rotating-wave dynamics and adiabatic analysis.
//! - [`propagator`]: split-operator integration of the time-dependent
//!   Schroedinger equation with the full carrier retained.
//! - [`spectro`]: time-dependent dipole response and attosecond
//!   transient-absorption spectra.
//! - [`scanner`]: parameter scans and pulse-parameter optimization.

pub mod angular;
pub mod dipoles;
pub mod half;
pub mod levels;
pub mod propagator;
pub mod pulses;
pub mod rwa;
pub mod scanner;
pub mod spectro;
pub mod units;
