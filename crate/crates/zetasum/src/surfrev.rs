//! Surface-of-revolution frontend: map a profile `r(x)` to the mode family.
//!
//! On `[0,1] x S^1` with metric `dx^2 + r(x)^2 dtheta^2`, conjugating the
//! Laplacian by multiplication with `sqrt(r)` and decomposing along circle
//! modes leaves the family
//!
//! ```text
//! D_lambda = -d^2/dx^2 + lambda^2 V + W,
//! V = 1/r^2,   W = r''/(2r) - (r'/(2r))^2,
//! ```
//!
//! with `lambda^2 = 0` of multiplicity one and every other mode doubled.
//! The derivatives of `r` are taken symbolically from the profile
//! expression, which keeps `W` accurate at the ends of the interval.
//!
//! ```
//! use zetasum::surfrev::SurfaceProfile;
//!
//! let horn = SurfaceProfile::parse("exp(x)").unwrap();
//! assert!((horn.v(0.5) - (-1.0_f64).exp()).abs() < 1e-12);
//! assert!((horn.w(0.5) - 0.25).abs() < 1e-12);
//! ```

use crate::decomp::OperatorFamily;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sturm::BoundaryCondition;
use std::sync::Arc;

/// A rotation profile `r(x) > 0` with symbolic derivatives.
#[derive(Debug, Clone)]
pub struct SurfaceProfile {
    pub r: Expr,
    pub dr: Expr,
    pub ddr: Expr,
}

impl SurfaceProfile {
    pub fn new(r: Expr) -> Result<Self> {
        let min_r = (0..=1000)
            .map(|i| r.eval(i as f64 / 1000.0))
            .fold(f64::MAX, f64::min);
        if !(min_r > 0.0) {
            return Err(Error::NonPositiveProfile(min_r));
        }
        let dr = r.derive();
        let ddr = dr.derive();
        Ok(SurfaceProfile { r, dr, ddr })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(Expr::parse(text)?)
    }

    /// `V = 1/r^2`.
    pub fn v(&self, x: f64) -> f64 {
        let r = self.r.eval(x);
        1.0 / (r * r)
    }

    /// `W = r''/(2r) - (r'/(2r))^2`.
    pub fn w(&self, x: f64) -> f64 {
        let r = self.r.eval(x);
        let dr = self.dr.eval(x);
        let ddr = self.ddr.eval(x);
        ddr / (2.0 * r) - (dr / (2.0 * r)).powi(2)
    }

    /// The mode family of the decomposed Laplacian.
    pub fn decompose(
        &self,
        bc0: BoundaryCondition,
        bc1: BoundaryCondition,
    ) -> Result<OperatorFamily> {
        let p1 = self.clone();
        let p2 = self.clone();
        OperatorFamily::new(
            Arc::new(move |x| p1.v(x)),
            Arc::new(move |x| p2.w(x)),
            bc0,
            bc1,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_cylinder() {
        let p = SurfaceProfile::parse("1").unwrap();
        for &x in &[0.0, 0.4, 1.0] {
            assert_relative_eq!(p.v(x), 1.0);
            assert_relative_eq!(p.w(x), 0.0);
        }
    }

    #[test]
    fn radius_two_cylinder() {
        let p = SurfaceProfile::parse("2").unwrap();
        assert_relative_eq!(p.v(0.3), 0.25);
        assert_relative_eq!(p.w(0.3), 0.0);
    }

    #[test]
    fn exponential_horn() {
        // r = e^x: V = e^(-2x), W = 1/2 - 1/4 = 1/4.
        let p = SurfaceProfile::parse("exp(x)").unwrap();
        for &x in &[0.0, 0.5, 1.0] {
            assert_relative_eq!(p.v(x), (-2.0 * x).exp(), max_relative = 1e-13);
            assert_relative_eq!(p.w(x), 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn scaling_rule() {
        // r -> c r multiplies V by c^-2 and leaves W unchanged.
        let p = SurfaceProfile::parse("1+x*x").unwrap();
        let p3 = SurfaceProfile::parse("3*(1+x*x)").unwrap();
        for &x in &[0.1, 0.6, 0.95] {
            assert_relative_eq!(p3.v(x), p.v(x) / 9.0, max_relative = 1e-12);
            assert_relative_eq!(p3.w(x), p.w(x), max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_vanishing_profile() {
        assert!(SurfaceProfile::parse("x").is_err());
        assert!(SurfaceProfile::parse("x - 0.5").is_err());
    }

    #[test]
    fn decompose_builds_family() {
        let p = SurfaceProfile::parse("exp(x)").unwrap();
        let fam = p
            .decompose(BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet())
            .unwrap();
        assert_eq!(fam.invert_threshold, 0);
        assert_eq!(fam.multiplicity(0), 1.0);
        assert_eq!(fam.multiplicity(3), 2.0);
    }
}
