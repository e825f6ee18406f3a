//! Topological invariants of two-band lattice models from simulated adiabatic
//! quantum circuits, checked against exact Wilson-loop calculations.
//!
//! Layers, bottom-up: [`numerics`], [`circuit`], the two backends
//! ([`backend_sv`], [`backend_mps`]), [`models`], [`adiabatic`], [`readout`]
//! and the classical [`oracle`].

pub mod adiabatic;
pub mod backend_mps;
pub mod backend_sv;
pub mod circuit;
pub mod error;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod readout;
pub mod seed;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64;
