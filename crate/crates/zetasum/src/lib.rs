//! Zeta-regularized determinants of infinite direct sums of Sturm–Liouville
//! operators.
//!
//! The Laplacian on a surface of revolution `[0,1] x S^1` with profile `r(x)`
//! splits, mode by mode on the circle, into one-dimensional operators
//!
//! ```text
//! D_lambda = -d^2/dx^2 + lambda^2 V(x) + W(x),   V = 1/r^2,  W = r''/(2r) - (r'/(2r))^2
//! ```
//!
//! with separated boundary conditions. This crate computes the determinant of
//! the full operator two independent ways and reconciles them:
//!
//! * **directly**, from the summed resolvent trace `Tr (D + z^2)^-2` and a
//!   partie-finie integral in `z`;
//! * **decomposed**, as a regularized sum over modes of one-dimensional
//!   determinants plus correction terms produced by a Fubini theorem for
//!   regularized sums and integrals, with coefficients read off a jointly
//!   polyhomogeneous expansion of the resolvent trace in `(lambda, z)`.
//!
//! The pieces are usable on their own: [`regcal`] implements the regularized
//! calculus, [`sturm`] the one-dimensional spectral engine, [`homog`] the
//! quarter-plane machinery, [`phg`] the expansion extraction, [`decomp`] the
//! assembly, [`surfrev`] the surface frontend and [`expr`] a small expression
//! language for potentials and profiles. The `zetasum` binary exposes all of
//! it on the command line. A narrative guide lives in `book/`.

pub mod error;
pub mod expr;
pub mod homog;
pub mod cache;
pub mod cli;
pub mod decomp;
pub mod phg;
pub mod regcal;
pub mod sturm;
pub mod surfrev;
pub mod util;

pub use error::{Error, Result};
