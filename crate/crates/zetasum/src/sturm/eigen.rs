//! Eigenvalues by modified Prüfer shooting.
//!
//! With `y = r sin(phi)`, `y' = sigma r cos(phi)` the eigenvalue equation
//! `-y'' + q y = mu y` becomes the scalar phase equation
//!
//! ```text
//! phi' = sigma cos^2(phi) + ((mu - q)/sigma) sin^2(phi),
//! ```
//!
//! whose terminal value is strictly increasing in `mu`; the k-th eigenvalue
//! is the unique `mu` with `phi(1; mu) = (k-1) pi + tau`, where the start and
//! target angles encode the two boundary conditions. Bisection on the phase
//! is bracketing-safe; a secant polish finishes the root.

use super::ode::dopri5;
use super::SLOperator;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Sorted eigenvalues with per-value error bounds (all multiplicities are 1
/// in one dimension).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

fn phase_start(theta0: f64, sigma: f64) -> f64 {
    if theta0 == 0.0 {
        0.0
    } else {
        PI - (sigma * theta0.sin()).atan2(theta0.cos())
    }
}

fn phase_target(theta1: f64, sigma: f64) -> f64 {
    if theta1 == 0.0 {
        PI
    } else {
        PI - (sigma * theta1.sin()).atan2(theta1.cos())
    }
}

fn terminal_phase(op: &SLOperator, mu: f64, sigma: f64) -> Result<f64> {
    let mut state = vec![phase_start(op.bc0.theta, sigma)];
    let rhs = |x: f64, s: &[f64], out: &mut [f64]| {
        let (sin, cos) = s[0].sin_cos();
        out[0] = sigma * cos * cos + (mu - op.q(x)) / sigma * sin * sin;
    };
    dopri5(rhs, 0.0, 1.0, &mut state, 1e-11, 1e-12, |_| Ok(0.0))?;
    Ok(state[0])
}

/// Phase mismatch `g(mu) = phi(1; mu) - phi0-relative target`; eigenvalue k
/// solves `g = (k-1) pi`.
fn phase_gap(op: &SLOperator, mu: f64) -> Result<f64> {
    let sigma = (mu - op.min_q()).max(1.0).sqrt();
    let phi1 = terminal_phase(op, mu, sigma)?;
    Ok(phi1 - phase_target(op.bc1.theta, sigma))
}

/// First `count` eigenvalues of the operator.
pub fn eigenvalues(op: &SLOperator, count: usize) -> Result<Spectrum> {
    if count == 0 {
        return Err(Error::Config("eigenvalue count must be >= 1".into()));
    }
    let q_mean = (0..64).map(|i| op.q(i as f64 / 63.0)).sum::<f64>() / 64.0;
    let mut values = Vec::with_capacity(count);
    let mut errors = Vec::with_capacity(count);

    for k in 1..=count {
        let target = (k as f64 - 1.0) * PI;
        // Weyl-type initial guess, then expand to a sign-changing bracket.
        let guess = q_mean + (target + 1.5).powi(2).max(1.0);
        let mut lo = if let Some(&prev) = values.last() { prev + 1e-9 } else { op.min_q() - 1.0 };
        let mut hi = guess.max(lo + 1.0);
        let g_lo_start = phase_gap(op, lo)? - target;
        if g_lo_start > 0.0 {
            return Err(Error::RootFindFailure(format!(
                "phase already past eigenvalue {k} at the lower bracket"
            )));
        }
        let mut expand = hi - lo;
        for _ in 0..200 {
            if phase_gap(op, hi)? - target > 0.0 {
                break;
            }
            lo = hi;
            expand *= 1.7;
            hi += expand;
        }
        if phase_gap(op, hi)? - target <= 0.0 {
            return Err(Error::RootFindFailure(format!(
                "could not bracket eigenvalue {k}"
            )));
        }

        // Bisect, then secant-polish inside the final bracket.
        let mut g_lo = phase_gap(op, lo)? - target;
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            let g_mid = phase_gap(op, mid)? - target;
            if g_mid <= 0.0 {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                break;
            }
            if hi - lo <= 1e-6 * hi.abs().max(1.0) {
                // Secant step inside the bracket.
                let g_hi = phase_gap(op, hi)? - target;
                let sec = lo - g_lo * (hi - lo) / (g_hi - g_lo);
                if sec > lo && sec < hi {
                    let g_sec = phase_gap(op, sec)? - target;
                    if g_sec <= 0.0 {
                        lo = sec;
                        g_lo = g_sec;
                    } else {
                        hi = sec;
                    }
                }
            }
        }
        let mu = 0.5 * (lo + hi);
        values.push(mu);
        errors.push((hi - lo).max(1e-13 * mu.abs()));
    }

    Ok(Spectrum { values, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::BoundaryCondition;
    use approx::assert_relative_eq;

    fn cylinder(l: f64, bc0: BoundaryCondition, bc1: BoundaryCondition) -> SLOperator {
        SLOperator::constant(1.0, 0.0, l, bc0, bc1).unwrap()
    }

    #[test]
    fn dirichlet_cylinder_spectrum() {
        let op = cylinder(0.0, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet());
        let spec = eigenvalues(&op, 5).unwrap();
        for (k, mu) in spec.values.iter().enumerate() {
            let expected = (PI * (k as f64 + 1.0)).powi(2);
            assert_relative_eq!(*mu, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn neumann_cylinder_spectrum() {
        let op = cylinder(0.0, BoundaryCondition::neumann(), BoundaryCondition::neumann());
        let spec = eigenvalues(&op, 4).unwrap();
        assert!(spec.values[0].abs() < 1e-8, "zero mode expected, got {}", spec.values[0]);
        for (k, mu) in spec.values.iter().enumerate().skip(1) {
            assert_relative_eq!(*mu, (PI * k as f64).powi(2), max_relative = 1e-9);
        }
    }

    #[test]
    fn mixed_dirichlet_neumann() {
        let op = cylinder(2.0, BoundaryCondition::dirichlet(), BoundaryCondition::neumann());
        let spec = eigenvalues(&op, 3).unwrap();
        for (k, mu) in spec.values.iter().enumerate() {
            let expected = ((k as f64 + 0.5) * PI).powi(2) + 4.0;
            assert_relative_eq!(*mu, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn robin_end_against_discretization() {
        // theta0 = pi/4, theta1 = 0 (Dirichlet at 1): validate against a
        // dense finite-difference discretization.
        let op = cylinder(
            0.0,
            BoundaryCondition::new(std::f64::consts::FRAC_PI_4).unwrap(),
            BoundaryCondition::dirichlet(),
        );
        let spec = eigenvalues(&op, 3).unwrap();
        // Richardson-extrapolate the h^2 discretization error out of the
        // 2000-point oracle using a doubled grid.
        let fd2 = fd_eigenvalues_robin(2000, std::f64::consts::FRAC_PI_4, 3);
        let fd4 = fd_eigenvalues_robin(4000, std::f64::consts::FRAC_PI_4, 3);
        let fd: Vec<f64> =
            fd2.iter().zip(&fd4).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        for (a, b) in spec.values.iter().zip(&fd) {
            // mu = 0 is exactly an eigenvalue here (y = 1 - x), so compare
            // with an absolute floor as well.
            assert_relative_eq!(a, b, max_relative = 1e-6, epsilon = 1e-6);
        }
    }

    /// Finite-difference oracle for -y'' = mu y with
    /// cos(t0) y(0) + sin(t0) y'(0) = 0 and y(1) = 0. Ghost-point fold:
    /// y_{-1} = y_1 + 2 h cot(t0) y_0, giving the first row
    /// (2/h^2 - 2 cot/h) y_0 - (2/h^2) y_1; the eigenvalue count below mu is
    /// the number of negative pivots of the LDL-type recurrence, with the
    /// nonsymmetric fold handled through the positive off-diagonal product.
    fn fd_eigenvalues_robin(n: usize, t0: f64, count: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        let cot = t0.cos() / t0.sin();
        let count_below = |mu: f64| -> usize {
            let diag = 2.0 / (h * h) - mu;
            let prod_first = 2.0 / h.powi(4); // u_0 * l_1
            let prod = 1.0 / h.powi(4);
            let mut cnt = 0usize;
            let mut d = (2.0 / (h * h) - 2.0 * cot / h) - mu;
            if d < 0.0 {
                cnt += 1;
            }
            for i in 1..n {
                let p = if i == 1 { prod_first } else { prod };
                d = diag - p / d;
                if d < 0.0 {
                    cnt += 1;
                }
            }
            cnt
        };
        let mut out = Vec::new();
        for k in 1..=count {
            let (mut lo, mut hi) = (-100.0, 60.0 * (k as f64 + 2.0).powi(2));
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) >= k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    #[test]
    fn dirichlet_below_neumann_ground_state() {
        // Variational principle: lowest Dirichlet eigenvalue dominates the
        // lowest Neumann one for the same coefficients.
        let vd = eigenvalues(
            &cylinder(1.5, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet()),
            1,
        )
        .unwrap();
        let vn = eigenvalues(
            &cylinder(1.5, BoundaryCondition::neumann(), BoundaryCondition::neumann()),
            1,
        )
        .unwrap();
        assert!(vd.values[0] >= vn.values[0]);
    }

    #[test]
    fn high_eigenvalues_stay_accurate() {
        let op = cylinder(0.0, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet());
        let spec = eigenvalues(&op, 60).unwrap();
        let mu = spec.values[59];
        assert_relative_eq!(mu, (60.0 * PI).powi(2), max_relative = 1e-10);
    }
}
