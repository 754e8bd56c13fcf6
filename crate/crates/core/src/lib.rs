//! Self-consistent electronic states of plane wurtzite-nitride
//! resonance-tunneling structures.
//!
//! The effective potential of a layered Al(x)Ga(1-x)N stack is assembled
//! from the band offset, the polarization-induced internal fields, the
//! Hartree potential of carriers and ionized donors, and a Hedin-Lundquist
//! exchange-correlation term. The potential is linearized segment by
//! segment and the Schrodinger equation solved exactly on each segment in
//! an Airy-function basis; the Hartree potential is built in closed form
//! from the same basis. Iterating the two to self-consistency gives the
//! bound spectrum, the wave functions and the intersubband oscillator
//! strengths.

pub mod error;
pub mod materials;
pub mod observables;
pub mod poisson;
pub mod polarization;
pub mod potential;
pub mod quadrature;
pub mod scf;
pub mod schrodinger;
pub mod special_fn;
pub mod structure;
pub mod units;

pub use error::{Error, Result};
