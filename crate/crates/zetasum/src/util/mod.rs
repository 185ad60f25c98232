//! Small shared numerical utilities.

mod cheb;

pub use cheb::Chebyshev;
