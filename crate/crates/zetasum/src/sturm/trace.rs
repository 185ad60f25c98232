//! Resolvent traces, Green-function diagonals, and trace-expansion fits.

use super::ode::{boundary_log_jets, normalized_solution_at, JetOrders, Jet2};
use super::SLOperator;
use crate::error::{Error, Result};
use crate::regcal::{fit_expansion_samples, AsymptoticModel, FitOptions};

/// `d_lambda^a d_z^b Tr (D_lambda + z^2)^(-power)` for `power` 1 or 2.
///
/// Built on `Tr (D + z^2)^-1 = (1/2z) d_z log D(lambda, z)` and
/// `Tr^-2 = -(1/2z) d_z Tr^-1`, both evaluated through the jet engine so
/// every derivative is analytic rather than numerical.
pub fn resolvent_trace(
    op: &SLOperator,
    z: f64,
    power: u32,
    d_lambda: usize,
    d_z: usize,
) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Domain("resolvent trace needs z > 0".into()));
    }
    if power != 1 && power != 2 {
        return Err(Error::Config("power must be 1 or 2".into()));
    }
    let na = d_lambda + 1;
    let nb = d_z + 1 + power as usize;
    let log = boundary_log_jets(op, z, JetOrders { na, nb })?;

    let two_z = |na: usize, nb: usize| {
        let mut j = Jet2::zeros(na, nb);
        j.set(0, 0, 2.0 * z);
        if nb > 1 {
            j.set(0, 1, 2.0);
        }
        j
    };

    // Tr^-1 jets.
    let lz = log.log_abs.shift_z();
    let t1 = lz.div(&two_z(na, nb - 1));
    if power == 1 {
        return Ok(t1.get(d_lambda, d_z));
    }
    // Tr^-2 = -(1/2z) d_z Tr^-1.
    let t1z = t1.shift_z();
    let t2 = t1z.div(&two_z(na, nb - 2)).scale(-1.0);
    Ok(t2.get(d_lambda, d_z))
}

/// All lambda-derivatives `d_lambda^d Tr (D + z^2)^-2`, d = 0..=max_d, from a
/// single jet solve; used by the Euler–Maclaurin tail over the mode index.
pub fn resolvent_trace2_lambda_jets(
    op: &SLOperator,
    z: f64,
    max_d: usize,
) -> Result<Vec<f64>> {
    if z <= 0.0 {
        return Err(Error::Domain("resolvent trace needs z > 0".into()));
    }
    let na = max_d + 1;
    let nb = 3;
    let log = boundary_log_jets(op, z, JetOrders { na, nb })?;
    let two_z = |nb: usize| {
        let mut j = Jet2::zeros(na, nb);
        j.set(0, 0, 2.0 * z);
        if nb > 1 {
            j.set(0, 1, 2.0);
        }
        j
    };
    let t1 = log.log_abs.shift_z().div(&two_z(nb - 1));
    let t2 = t1.shift_z().div(&two_z(nb - 2)).scale(-1.0);
    Ok((0..=max_d).map(|d| t2.get(d, 0)).collect())
}

/// Diagonal of the Green function: `G(x,x) = u v / (u' v - u v')` with `u`
/// the bc0 solution and `v` the bc1 solution of `(D + z^2) y = 0`. Both are
/// renormalized; the common scales cancel in the ratio.
pub fn green_diagonal(op: &SLOperator, z: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    let (u, du) = normalized_solution_at(op, z, true, x)?;
    let (v, dv) = normalized_solution_at(op, z, false, x)?;
    let wr = du * v - u * dv;
    if wr.abs() < 1e-12 * (du.abs() * v.abs() + u.abs() * dv.abs()).max(1e-300) {
        return Err(Error::NonInvertible("vanishing Wronskian".into()));
    }
    Ok(u * v / wr)
}

/// Large-z trace expansion coefficients of a fixed mode:
/// `Tr^-1 ~ sum b_k z^(-k-1)` and `Tr^-2 ~ sum c_k z^(-k-3)`.
#[derive(Debug, Clone)]
pub struct TraceExpansion {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub fit_residual: f64,
}

/// Fit both expansions on a geometric z-ladder in the asymptotic regime.
pub fn fit_trace_expansion(op: &SLOperator, orders: usize) -> Result<TraceExpansion> {
    let z0 = trace_tail_start(op);
    let count = (2 * (orders + 1) + 6).max(16);
    let factor = 2.0_f64.powf((8.0 / (count as f64 - 1.0)).min(0.5));
    let zs: Vec<f64> = (0..count).map(|m| z0 * factor.powi(m as i32)).collect();

    let t1: Vec<f64> = zs
        .iter()
        .map(|&z| resolvent_trace(op, z, 1, 0, 0))
        .collect::<Result<_>>()?;
    let t2: Vec<f64> = zs
        .iter()
        .map(|&z| resolvent_trace(op, z, 2, 0, 0))
        .collect::<Result<_>>()?;

    let opts = FitOptions { max_condition: 1e12, max_rel_residual: 1e-4 };
    let model1 = AsymptoticModel::powers(
        &(0..=orders).map(|k| -(k as f64) - 1.0).collect::<Vec<_>>(),
    );
    let fit1 = fit_expansion_samples(&zs, &t1, &model1, opts)?;
    let model2 = AsymptoticModel::powers(
        &(0..=orders).map(|k| -(k as f64) - 3.0).collect::<Vec<_>>(),
    );
    let fit2 = fit_expansion_samples(&zs, &t2, &model2, opts)?;

    Ok(TraceExpansion {
        b: (0..=orders).map(|k| fit1.coefficient(-(k as f64) - 1.0, 0)).collect(),
        c: (0..=orders).map(|k| fit2.coefficient(-(k as f64) - 3.0, 0)).collect(),
        fit_residual: fit1.fit_residual.max(fit2.fit_residual),
    })
}

/// Start of the asymptotic z-regime for a mode: beyond the potential scale
/// and deep enough that the exponentially small boundary remainder is below
/// working precision.
pub fn trace_tail_start(op: &SLOperator) -> f64 {
    (2.0 * op.max_q().max(0.0).sqrt()).max(14.0)
}

/// Eigenvalue-sum consistency: sum the first `k_count` eigenvalues of
/// `(mu_k + z^2)^-1` and close the tail with the exact summation of the
/// asymptotic eigenvalue law `mu_k ~ Theta_k^2 + c`. Returns the summed
/// value, to be compared against `resolvent_trace`.
pub fn eigenvalue_sum_check(op: &SLOperator, z: f64, k_count: usize) -> Result<f64> {
    let spec = super::eigenvalues(op, k_count)?;
    let w2 = z * z;
    let direct: f64 = spec.values.iter().map(|mu| 1.0 / (mu + w2)).sum();

    // Asymptotic index offset from the boundary types: Theta_k = (k + s) pi.
    let s = match (op.bc0.is_dirichlet(), op.bc1.is_dirichlet()) {
        (true, true) => 0.0,
        (false, false) => -1.0,
        _ => -0.5,
    };
    let pi = std::f64::consts::PI;
    // Fit the constant c over the last computed eigenvalues.
    let fit_window = (k_count / 4).max(5).min(k_count);
    let c_est: f64 = spec.values[k_count - fit_window..]
        .iter()
        .enumerate()
        .map(|(i, mu)| {
            let k = (k_count - fit_window + i + 1) as f64;
            mu - ((k + s) * pi).powi(2)
        })
        .sum::<f64>()
        / fit_window as f64;

    let w = (c_est + w2).max(1e-12).sqrt();
    // Closed forms for sum over all k >= 1 of ((k+s)^2 pi^2 + w^2)^-1.
    let full = match (op.bc0.is_dirichlet(), op.bc1.is_dirichlet()) {
        (true, true) => (1.0 / w.tanh()) / (2.0 * w) - 1.0 / (2.0 * w2_of(w)),
        (false, false) => (1.0 / w.tanh()) / (2.0 * w) - 1.0 / (2.0 * w2_of(w)) + 1.0 / w2_of(w),
        _ => w.tanh() / (2.0 * w),
    };
    let head: f64 = (1..=k_count)
        .map(|k| 1.0 / (((k as f64 + s) * pi).powi(2) + w * w))
        .sum();
    Ok(direct + (full - head))
}

fn w2_of(w: f64) -> f64 {
    w * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::BoundaryCondition;
    use approx::assert_relative_eq;

    fn cylinder(l: f64) -> SLOperator {
        SLOperator::constant(
            1.0,
            0.0,
            l,
            BoundaryCondition::dirichlet(),
            BoundaryCondition::dirichlet(),
        )
        .unwrap()
    }

    fn cylinder_t1(l: f64, z: f64) -> f64 {
        let mu = (l * l + z * z).sqrt();
        (1.0 / mu.tanh()) / (2.0 * mu) - 1.0 / (2.0 * mu * mu)
    }

    #[test]
    fn trace_matches_cylinder_closed_form() {
        for &(l, z) in &[(0.0, 2.0), (3.0, 4.0), (12.0, 1.0), (30.0, 40.0)] {
            let t = resolvent_trace(&cylinder(l), z, 1, 0, 0).unwrap();
            assert_relative_eq!(t, cylinder_t1(l, z), max_relative = 1e-9);
        }
    }

    #[test]
    fn trace_value_at_3_4() {
        let t = resolvent_trace(&cylinder(3.0), 4.0, 1, 0, 0).unwrap();
        let expected = (1.0 / 5.0_f64.tanh()) / 10.0 - 1.0 / 50.0;
        assert_relative_eq!(t, expected, max_relative = 1e-10);
        assert_relative_eq!(t, 0.0800091, epsilon = 1e-7);
    }

    #[test]
    fn second_power_is_z_derivative_of_first() {
        // Tr^-2 = -(1/2z) d_z Tr^-1: check against a central difference.
        let op = cylinder(3.0);
        let z = 4.0;
        let h = 1e-4;
        let t2 = resolvent_trace(&op, z, 2, 0, 0).unwrap();
        let d = (resolvent_trace(&op, z + h, 1, 0, 0).unwrap()
            - resolvent_trace(&op, z - h, 1, 0, 0).unwrap())
            / (2.0 * h);
        assert_relative_eq!(t2, -d / (2.0 * z), epsilon = 1e-8);
    }

    #[test]
    fn lambda_derivative_of_trace() {
        let z = 3.0;
        let h = 1e-5;
        let d_analytic = resolvent_trace(&cylinder(2.0), z, 2, 1, 0).unwrap();
        let fd = (resolvent_trace(&cylinder(2.0 + h), z, 2, 0, 0).unwrap()
            - resolvent_trace(&cylinder(2.0 - h), z, 2, 0, 0).unwrap())
            / (2.0 * h);
        assert_relative_eq!(d_analytic, fd, max_relative = 1e-6);
    }

    #[test]
    fn green_diagonal_cylinder() {
        let op = cylinder(3.0);
        let (z, mu) = (4.0, 5.0_f64);
        for &x in &[0.25, 0.5, 0.8] {
            let g = green_diagonal(&op, z, x).unwrap();
            let expected = (mu * x).sinh() * (mu * (1.0 - x)).sinh() / (mu * mu.sinh());
            assert_relative_eq!(g, expected, max_relative = 1e-9);
        }
        // Dirichlet ends pin the diagonal to zero.
        assert_relative_eq!(green_diagonal(&op, z, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(green_diagonal(&op, z, 1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn green_diagonal_symmetry() {
        // Symmetric data: G(x,x) = G(1-x, 1-x).
        let op = SLOperator::constant(
            2.0,
            0.5,
            1.0,
            BoundaryCondition::neumann(),
            BoundaryCondition::neumann(),
        )
        .unwrap();
        for &x in &[0.1, 0.3] {
            let a = green_diagonal(&op, 2.0, x).unwrap();
            let b = green_diagonal(&op, 2.0, 1.0 - x).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn trace_equals_integrated_green_diagonal() {
        // Independent route: integrate G(x,x) by quadrature.
        let op = cylinder(2.0);
        let z = 3.0;
        let q = crate::regcal::integrate(
            |x| green_diagonal(&op, z, x).unwrap_or(f64::NAN),
            0.0,
            1.0,
            crate::regcal::QuadTol { abs: 1e-11, rel: 1e-9, max_segments: 200 },
        )
        .unwrap();
        let t = resolvent_trace(&op, z, 1, 0, 0).unwrap();
        assert_relative_eq!(q.value, t, max_relative = 1e-8);
    }

    #[test]
    fn expansion_coefficients_cylinder() {
        // Tr^-1 ~ 1/(2 mu) - 1/(2 mu^2): b_0 = 1/2, b_1 = -1/2, higher 0.
        let exp = fit_trace_expansion(&cylinder(0.0), 4).unwrap();
        assert_relative_eq!(exp.b[0], 0.5, epsilon = 1e-8);
        assert_relative_eq!(exp.b[1], -0.5, epsilon = 1e-7);
        assert!(exp.b[2].abs() < 1e-5);
        // c_k = (k+1) b_k / 2.
        for k in 0..=4 {
            assert_relative_eq!(
                exp.c[k],
                (k as f64 + 1.0) * exp.b[k] / 2.0,
                epsilon = 2e-5
            );
        }
    }

    #[test]
    fn eigen_sum_matches_trace() {
        for &z in &[2.0, 5.0, 20.0] {
            let op = cylinder(1.0);
            let s = eigenvalue_sum_check(&op, z, 200).unwrap();
            let t = resolvent_trace(&op, z, 1, 0, 0).unwrap();
            assert_relative_eq!(s, t, max_relative = 1e-8);
        }
    }
}
