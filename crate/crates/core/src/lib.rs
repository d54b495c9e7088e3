//! Finite-volume tools for quasi-periodic Schrödinger operators and their
//! Aubry duals.

pub mod duality;
pub mod extension;
pub mod grid;
pub mod lattice;
pub mod model;
pub mod operator;
pub mod spectral;
pub mod multiscale;
pub mod report;
