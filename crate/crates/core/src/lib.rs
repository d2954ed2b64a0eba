//! Concentration of polynomials in Ising models.
//!
//! The crate is organised around the objects needed to state, evaluate and
//! empirically check multilevel tail bounds for functions of an Ising spin
//! vector satisfying the Dobrushin condition:
//!
//! | module | contents |
//! |--------|----------|
//! | [`model`] | Ising measure, conditionals, Dobrushin margin, exact law for small `n` |
//! | [`boolfn`] | Fourier–Walsh (tetrahedral) polynomials, derivative tensors |
//! | [`norms`] | partition norms of tensors, interpolation norms `‖·‖_{{1},p}` |
//! | [`entropy`] | approximate tensorization constants, entropies, discrete gradients |
//! | [`bounds`] | closed-form tail bounds and constant calibration |
//! | [`mc`] | Glauber sampling, survival curves, exponent fits, envelope checks |
//! | [`io`] | model / polynomial / tensor file formats |
//! | [`examples`] | built-in reproductions of the worked examples |
//!
//! Spin configurations are bit-encoded: bit `i` of the index is set exactly
//! when `σ_i = −1`. With this convention the Walsh character of a subset `S`
//! is `(−1)^{popcount(b & S)}`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boolfn;
pub mod bounds;
pub mod entropy;
mod error;
pub mod examples;
pub mod io;
pub mod mc;
pub mod model;
pub mod norms;
pub mod rng;

pub use boolfn::{SymmetricTensor, TetrahedralPolynomial};
pub use error::{Error, Result};
pub use model::{ExactLaw, IsingModel, SpinConfig};
pub use norms::{NormResult, Partition};

/// Default cap on `n` for anything that enumerates `{−1,1}^n`.
pub const ENUMERATION_CAP: usize = 20;
