//! Finite-dimensional laboratory for the bosonic mean-field limit.
//!
//! The crate works on the symmetric Fock space over `C^d` in the occupation
//! number representation. It provides the epsilon-dependent creation,
//! annihilation, second-quantization and Weyl operators ([`fock`]), Wick
//! quantization of polynomial symbols ([`wick`]), N-body Hamiltonians built
//! from a one-particle matrix and a two-body form ([`many_body`]), the
//! classical Hartree flow ([`flow`]), reduced density matrices and
//! characteristic functions of many-body states ([`wigner`]), and particle
//! representations of measures transported by the Hartree flow
//! ([`liouville`]).

pub mod audit;
pub mod error;
pub mod flow;
pub mod fock;
pub mod liouville;
pub mod linalg;
pub mod many_body;
pub mod wick;
pub mod wigner;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
