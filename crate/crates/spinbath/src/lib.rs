//! Decoherence of a central donor spin in an interacting nuclear spin bath.
//!
//! The crate provides the pieces needed to simulate spin-echo and free
//! induction decays of a mixed electron-nuclear donor qubit in silicon:
//!
//! * [`algebra`] - dense Hermitian linear algebra for small multi-spin
//!   Hilbert spaces (spin operators, Kronecker embedding, eigensystems,
//!   unitary evolution, partial traces).
//! * [`donor`] - the donor spin Hamiltonian, its closed-form eigensystem,
//!   polarisations, frequency-field gradients and special-field finders.
//! * [`lattice`] - diamond-cubic site generation, random isotopic
//!   occupation and equivalent-site combinatorics.
//! * [`couplings`] - secular dipolar, Fermi-contact and hyperfine-mediated
//!   interaction strengths.
//! * [`cce`] - cluster enumeration, reduced-problem assembly, pulse
//!   sequences and the cluster correlation expansion.
//! * [`pseudospin`] - closed-form pair-correlation decays, per-pair T2
//!   weights and the analytic T2 formula.
//! * [`spectra`] - ENDOR resonance positions, spectrum synthesis and
//!   stretched-exponential decay fitting.

pub mod algebra;
pub mod cce;
pub mod couplings;
pub mod donor;
pub mod error;
pub mod lattice;
pub mod pseudospin;
pub mod spectra;

pub use error::{Error, Result};
