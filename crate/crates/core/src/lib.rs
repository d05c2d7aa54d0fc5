//! Verification and simulation toolkit for the controllability of classical
//! and quantum symmetric-top molecules driven by electric fields.
//!
//! The crate is organised bottom-up:
//! - [`basis`]: rotational basis labels, block spaces, basis variants;
//! - [`spectrum`]: free energies and exact resonance bookkeeping;
//! - [`coupling`]: interaction Hamiltonians from closed-form pairing tables;
//! - [`lie`]: Lie-algebraic controllability certificates;
//! - [`quantum`]: propagation, symmetry detection, demonstrations;
//! - [`classical`]: classical vector fields, brackets, and rank tests;
//! - [`config`] / [`report`]: experiment configs and machine-readable reports.

pub mod basis;
pub mod classical;
pub mod config;
pub mod coupling;
pub mod error;
pub mod lie;
pub mod oracle;
pub mod quantum;
pub mod runner;
pub mod spectrum;
pub mod verify;

pub use error::{Result, SymtopError};
