//! Numerical laboratory for Toeplitz quantization on truncated Fock spaces.
//!
//! The crate models F_t^p(C^n) through a finite monomial basis and provides
//! Toeplitz assembly, Berezin and heat transforms, Weyl shifts, module
//! convolutions, Wiener-type deconvolution witnesses and limit-operator probes.
//! Everything is deterministic given the inputs (and an explicit seed where
//! randomness is used).

pub mod approximation;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod limits;
pub mod operators;
pub mod special;
pub mod symbols;

pub use error::{Error, Result};
pub use fock::{
    basis_norm, fp_norm, kernel_eval, kernel_expand, weyl_matrix, Exponent, FockParams,
    MultiIndexBasis, OperatorMatrix, TruncatedVector,
};
pub use num_complex::Complex64 as C64;
pub use symbols::{SymbolSpec, Tag};
