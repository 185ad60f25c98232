//! One-dimensional spectral engine for `D_lambda = -d^2/dx^2 + lambda^2 V + W`
//! on `[0, 1]` with separated boundary conditions.
//!
//! Everything downstream is built from the boundary value
//! `D(lambda, z) = cos(t1) y(1) + sin(t1) y'(1)` of the solution normalized by
//! the left boundary condition: eigenvalues are its zeros in the spectral
//! parameter, the resolvent trace is `(1/2z) d_z log D`, determinants are
//! normalized boundary values at `z = 0`, and zeta values come from
//! partie-finie integrals of the trace.
//!
//! ```
//! use zetasum::sturm::{gelfand_yaglom, BoundaryCondition, SLOperator};
//!
//! // det(-d^2/dx^2 + 1, Dirichlet on [0,1]) = 2 sinh(1).
//! let op = SLOperator::constant(
//!     1.0, 0.0, 1.0,
//!     BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet(),
//! ).unwrap();
//! let logdet = gelfand_yaglom(&op).unwrap();
//! assert!((logdet - (2.0 * 1.0_f64.sinh()).ln()).abs() < 1e-8);
//! ```

mod eigen;
mod logdet;
pub mod ode;
mod trace;

pub use eigen::{eigenvalues, Spectrum};
pub use logdet::{
    gelfand_yaglom, logdet, logdet_full, resolvent_pf, resolvent_zeta, zeta_value, LogDetInfo,
    LogDetMethod,
};
pub use trace::{
    eigenvalue_sum_check, fit_trace_expansion, green_diagonal, resolvent_trace,
    resolvent_trace2_lambda_jets, TraceExpansion,
};

use crate::error::{Error, Result};
use std::sync::Arc;

/// Shared coefficient function on `[0, 1]`.
pub type CoeffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A separated boundary condition `cos(theta) f + sin(theta) f' = 0` at an
/// endpoint, with `theta` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub theta: f64,
}

impl BoundaryCondition {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&theta) {
            return Err(Error::Config(format!("boundary angle {theta} outside [0, pi)")));
        }
        Ok(BoundaryCondition { theta })
    }

    pub fn dirichlet() -> Self {
        BoundaryCondition { theta: 0.0 }
    }

    pub fn neumann() -> Self {
        BoundaryCondition { theta: std::f64::consts::FRAC_PI_2 }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.theta == 0.0
    }
}

/// The operator `-d^2/dx^2 + lambda^2 V(x) + W(x)` with `V > 0`.
#[derive(Clone)]
pub struct SLOperator {
    v: CoeffFn,
    w: CoeffFn,
    pub lambda: f64,
    pub bc0: BoundaryCondition,
    pub bc1: BoundaryCondition,
}

impl SLOperator {
    pub fn new(
        v: CoeffFn,
        w: CoeffFn,
        lambda: f64,
        bc0: BoundaryCondition,
        bc1: BoundaryCondition,
    ) -> Result<Self> {
        let min_v = (0..1000)
            .map(|i| v(i as f64 / 999.0))
            .fold(f64::MAX, f64::min);
        if !(min_v > 0.0) {
            return Err(Error::NonPositivePotential(min_v));
        }
        // Only lambda^2 enters; fold the sign.
        Ok(SLOperator { v, w, lambda: lambda.abs(), bc0, bc1 })
    }

    /// Constant-coefficient operator, the workhorse of the test corpus.
    pub fn constant(
        v: f64,
        w: f64,
        lambda: f64,
        bc0: BoundaryCondition,
        bc1: BoundaryCondition,
    ) -> Result<Self> {
        Self::new(Arc::new(move |_| v), Arc::new(move |_| w), lambda, bc0, bc1)
    }

    pub fn v(&self, x: f64) -> f64 {
        (self.v)(x)
    }

    pub fn w(&self, x: f64) -> f64 {
        (self.w)(x)
    }

    /// The potential `q = lambda^2 V + W`.
    pub fn q(&self, x: f64) -> f64 {
        let v = (self.v)(x);
        self.lambda * self.lambda * v + (self.w)(x)
    }

    /// Same coefficients at a different mode number.
    pub fn at_lambda(&self, lambda: f64) -> SLOperator {
        SLOperator { lambda: lambda.abs(), ..self.clone() }
    }

    pub fn min_q(&self) -> f64 {
        (0..1000).map(|i| self.q(i as f64 / 999.0)).fold(f64::MAX, f64::min)
    }

    pub fn max_q(&self) -> f64 {
        (0..1000).map(|i| self.q(i as f64 / 999.0)).fold(f64::MIN, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_potential() {
        let r = SLOperator::constant(
            0.0,
            0.0,
            1.0,
            BoundaryCondition::dirichlet(),
            BoundaryCondition::dirichlet(),
        );
        assert!(matches!(r, Err(Error::NonPositivePotential(_))));
    }

    #[test]
    fn lambda_sign_is_folded() {
        let op = SLOperator::constant(
            1.0,
            0.0,
            -3.0,
            BoundaryCondition::dirichlet(),
            BoundaryCondition::dirichlet(),
        )
        .unwrap();
        assert_eq!(op.lambda, 3.0);
        assert_eq!(op.q(0.5), 9.0);
    }

    #[test]
    fn boundary_angle_range() {
        assert!(BoundaryCondition::new(std::f64::consts::PI).is_err());
        assert!(BoundaryCondition::new(3.0).is_ok());
        assert!(BoundaryCondition::dirichlet().is_dirichlet());
        assert!(!BoundaryCondition::neumann().is_dirichlet());
    }
}
