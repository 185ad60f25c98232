//! Boundary solutions of `-y'' + (lambda^2 V + W + z^2) y = 0` together with
//! their parameter derivatives, and the log-boundary-value jets everything
//! spectral is built from.
//!
//! The solution normalized at `x = 0` by the boundary condition there is
//! integrated to `x = 1` along with its partial derivatives in `(lambda, z)`
//! ("jets"). Two formulations are used:
//!
//! * a renormalized linear form, robust at any size of the coefficient but
//!   resolving the exponential `e^(mu x)` step by step;
//! * a Riccati form in `w = y'/y` and `l = log |y|`, whose solution follows
//!   the smooth branch `w ~ sqrt(Q)` so the cost stays bounded as the
//!   coefficient grows; chosen for stiff parameters, with automatic fallback
//!   to the linear form when `w` runs toward a pole (a zero of `y`).

use crate::error::{Error, Result};
use super::{BoundaryCondition, SLOperator};

/// Truncated bivariate derivative table: `c[a * nb + b]` holds the raw
/// partial `d_lambda^a d_z^b` of the represented quantity.
#[derive(Debug, Clone)]
pub struct Jet2 {
    pub na: usize,
    pub nb: usize,
    pub c: Vec<f64>,
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

impl Jet2 {
    pub fn zeros(na: usize, nb: usize) -> Self {
        Jet2 { na, nb, c: vec![0.0; na * nb] }
    }

    pub fn constant(na: usize, nb: usize, v: f64) -> Self {
        let mut j = Jet2::zeros(na, nb);
        j.c[0] = v;
        j
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.c[a * self.nb + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.c[a * self.nb + b] = v;
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 { na: self.na, nb: self.nb, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        let mut r = self.clone();
        for (a, b) in r.c.iter_mut().zip(&o.c) {
            *a += b;
        }
        r
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        let mut r = self.clone();
        for (a, b) in r.c.iter_mut().zip(&o.c) {
            *a -= b;
        }
        r
    }

    /// Leibniz product of raw partial-derivative tables.
    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let mut r = Jet2::zeros(self.na, self.nb);
        for a in 0..self.na {
            for b in 0..self.nb {
                let mut s = 0.0;
                for i in 0..=a {
                    for j in 0..=b {
                        s += binom(a, i)
                            * binom(b, j)
                            * self.get(i, j)
                            * o.get(a - i, b - j);
                    }
                }
                r.set(a, b, s);
            }
        }
        r
    }

    /// Multiplicative inverse via the nilpotent geometric series.
    pub fn recip(&self) -> Jet2 {
        let v = self.value();
        assert!(v != 0.0, "jet inverse of zero value");
        let n = {
            let mut n = self.scale(1.0 / v);
            n.c[0] = 0.0;
            n
        };
        let order = (self.na - 1) + (self.nb - 1);
        let mut acc = Jet2::constant(self.na, self.nb, 1.0);
        let mut pow = Jet2::constant(self.na, self.nb, 1.0);
        for _ in 0..order {
            pow = pow.mul(&n).scale(-1.0);
            acc = acc.add(&pow);
        }
        acc.scale(1.0 / v)
    }

    pub fn div(&self, o: &Jet2) -> Jet2 {
        self.mul(&o.recip())
    }

    /// `log |u|` as a jet; the value must be nonzero.
    pub fn ln_abs(&self) -> Jet2 {
        let v = self.value();
        assert!(v != 0.0, "jet log of zero value");
        let n = {
            let mut n = self.scale(1.0 / v);
            n.c[0] = 0.0;
            n
        };
        let order = (self.na - 1) + (self.nb - 1);
        let mut acc = Jet2::constant(self.na, self.nb, v.abs().ln());
        let mut pow = Jet2::constant(self.na, self.nb, 1.0);
        for k in 1..=order.max(1) {
            if k > order {
                break;
            }
            pow = pow.mul(&n);
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&pow.scale(sign / k as f64));
        }
        acc
    }

    /// Jet of `d_z` of the represented quantity: drops the top z-order.
    pub fn shift_z(&self) -> Jet2 {
        assert!(self.nb >= 2, "no z-order left to shift");
        let mut r = Jet2::zeros(self.na, self.nb - 1);
        for a in 0..self.na {
            for b in 0..self.nb - 1 {
                r.set(a, b, self.get(a, b + 1));
            }
        }
        r
    }
}

/// Dormand–Prince 5(4) adaptive step driver. `after_step` runs on accepted
/// steps and may rescale the state, returning the log of the factor removed.
pub fn dopri5<F, G>(
    rhs: F,
    x0: f64,
    x1: f64,
    y: &mut Vec<f64>,
    rtol: f64,
    atol: f64,
    mut after_step: G,
) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: FnMut(&mut Vec<f64>) -> Result<f64>,
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];

    let n = y.len();
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    if span == 0.0 {
        return Ok(0.0);
    }
    let mut x = x0;
    let mut h = dir * (span / 64.0).min(1e-3);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut accumulated = 0.0;
    let mut steps = 0usize;

    rhs(x, y, &mut k[0]);
    loop {
        steps += 1;
        if steps > 4_000_000 {
            return Err(Error::OdeFailure("step limit exceeded".into()));
        }
        if (x - x1).abs() <= 1e-300 || (dir > 0.0 && x >= x1) || (dir < 0.0 && x <= x1) {
            break;
        }
        if dir > 0.0 && x + h > x1 {
            h = x1 - x;
        }
        if dir < 0.0 && x + h < x1 {
            h = x1 - x;
        }

        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let aij = if s < 6 { A[s - 1][j] } else { A[5][j] };
                    acc += aij * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let xs = if s < 6 { x + C[s - 1] * h } else { x + h };
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(xs, &ytmp, &mut tail[0]);
        }

        // 5th-order solution is in ytmp after the s = 6 stage.
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = atol + rtol * y[i].abs().max(ytmp[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / n as f64).sqrt();

        if err <= 1.0 {
            x += h;
            y.copy_from_slice(&ytmp);
            accumulated += after_step(y)?;
            rhs(x, y, &mut k[0]);
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= fac;
        if h.abs() < 1e-15 * span {
            return Err(Error::OdeFailure("step size underflow".into()));
        }
    }
    Ok(accumulated)
}

/// Jet orders requested of the boundary engine.
#[derive(Debug, Clone, Copy)]
pub struct JetOrders {
    /// Number of lambda-orders carried (na = d_lambda + 1).
    pub na: usize,
    /// Number of z-orders carried.
    pub nb: usize,
}

/// The boundary functional `D = cos(t1) y(1) + sin(t1) y'(1)` of the
/// bc0-normalized solution, in logarithmic form with its sign.
#[derive(Debug, Clone)]
pub struct BoundaryLog {
    pub log_abs: Jet2,
    pub sign: f64,
}

struct Coeff<'a> {
    op: &'a SLOperator,
    z: f64,
}

impl Coeff<'_> {
    /// Raw partials of Q = lambda^2 V + W + z^2 at x.
    fn q_jet(&self, x: f64, na: usize, nb: usize) -> Jet2 {
        let v = self.op.v(x);
        let w = self.op.w(x);
        let l = self.op.lambda;
        let mut q = Jet2::zeros(na, nb);
        q.set(0, 0, l * l * v + w + self.z * self.z);
        if na > 1 {
            q.set(1, 0, 2.0 * l * v);
        }
        if na > 2 {
            q.set(2, 0, 2.0 * v);
        }
        if nb > 1 {
            q.set(0, 1, 2.0 * self.z);
        }
        if nb > 2 {
            q.set(0, 2, 2.0);
        }
        q
    }

    fn q_max(&self) -> f64 {
        let l2 = self.op.lambda * self.op.lambda;
        (0..=32)
            .map(|i| {
                let x = i as f64 / 32.0;
                l2 * self.op.v(x) + self.op.w(x) + self.z * self.z
            })
            .fold(f64::MIN, f64::max)
    }
}

fn ic_jets(bc: BoundaryCondition, na: usize, nb: usize) -> (Jet2, Jet2) {
    let y = Jet2::constant(na, nb, -bc.theta.sin());
    let dy = Jet2::constant(na, nb, bc.theta.cos());
    (y, dy)
}

/// Integrate the bc0-normalized solution jets in linear form from `x0` to
/// `x1`. State layout: `[y_ab..., y'_ab...]` interleaved per jet. Returns the
/// accumulated log of removed scale factors.
#[allow(clippy::too_many_arguments)]
fn integrate_linear(
    coeff: &Coeff,
    orders: JetOrders,
    x0: f64,
    x1: f64,
    y: &mut Vec<f64>,
    rtol: f64,
) -> Result<f64> {
    let (na, nb) = (orders.na, orders.nb);
    let nj = na * nb;
    let rhs = |x: f64, s: &[f64], out: &mut [f64]| {
        let q = coeff.q_jet(x, na, nb);
        for a in 0..na {
            for b in 0..nb {
                let j = a * nb + b;
                out[2 * j] = s[2 * j + 1];
                // y_ab'' = sum_{i<=min(a,2), k<=min(b,2)} C(a,i) C(b,k) Q_ik y_(a-i)(b-k)
                let mut acc = 0.0;
                for i in 0..=a.min(2) {
                    for kk in 0..=b.min(2) {
                        let qv = q.get(i, kk);
                        if qv != 0.0 {
                            let jj = (a - i) * nb + (b - kk);
                            acc += binom(a, i) * binom(b, kk) * qv * s[2 * jj];
                        }
                    }
                }
                out[2 * j + 1] = acc;
            }
        }
    };
    let _ = nj;
    dopri5(rhs, x0, x1, y, rtol, 1e-14, |state| {
        let m = state.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !m.is_finite() {
            return Err(Error::OdeFailure("non-finite state in linear form".into()));
        }
        if m > 1e120 {
            for v in state.iter_mut() {
                *v /= m;
            }
            Ok(m.ln())
        } else {
            Ok(0.0)
        }
    })
}

/// Compute the boundary log-jets of the bc0-normalized solution.
pub fn boundary_log_jets(op: &SLOperator, z: f64, orders: JetOrders) -> Result<BoundaryLog> {
    let coeff = Coeff { op, z };
    let mu_hat = coeff.q_max().max(0.0).sqrt();
    let rtol = 1e-12;

    if mu_hat > 25.0 {
        match riccati_path(&coeff, orders, mu_hat, rtol) {
            Ok(r) => return Ok(r),
            Err(Error::OdeFailure(_)) | Err(Error::NonInvertible(_)) => {
                // Fall through to the linear form.
            }
            Err(e) => return Err(e),
        }
    }
    linear_path(&coeff, orders, rtol)
}

fn linear_path(coeff: &Coeff, orders: JetOrders, rtol: f64) -> Result<BoundaryLog> {
    let (na, nb) = (orders.na, orders.nb);
    let (y0, dy0) = ic_jets(coeff.op.bc0, na, nb);
    let mut state = vec![0.0; 2 * na * nb];
    for a in 0..na {
        for b in 0..nb {
            let j = a * nb + b;
            state[2 * j] = y0.get(a, b);
            state[2 * j + 1] = dy0.get(a, b);
        }
    }
    let logscale = integrate_linear(coeff, orders, 0.0, 1.0, &mut state, rtol)?;

    let t1 = coeff.op.bc1.theta;
    let mut d = Jet2::zeros(na, nb);
    for a in 0..na {
        for b in 0..nb {
            let j = a * nb + b;
            d.set(a, b, t1.cos() * state[2 * j] + t1.sin() * state[2 * j + 1]);
        }
    }
    if d.value() == 0.0 {
        return Err(Error::NonInvertible("boundary functional vanished".into()));
    }
    let sign = d.value().signum();
    let mut log_abs = d.ln_abs();
    log_abs.c[0] += logscale;
    Ok(BoundaryLog { log_abs, sign })
}

fn riccati_path(
    coeff: &Coeff,
    orders: JetOrders,
    mu_hat: f64,
    rtol: f64,
) -> Result<BoundaryLog> {
    let (na, nb) = (orders.na, orders.nb);
    let nj = na * nb;

    // Linear warm-up over an initial layer of width ~ a few 1/mu.
    let x_switch = (4.0 / mu_hat).min(0.1);
    let (y0, dy0) = ic_jets(coeff.op.bc0, na, nb);
    let mut lin = vec![0.0; 2 * nj];
    for a in 0..na {
        for b in 0..nb {
            let j = a * nb + b;
            lin[2 * j] = y0.get(a, b);
            lin[2 * j + 1] = dy0.get(a, b);
        }
    }
    let warm_scale = integrate_linear(coeff, orders, 0.0, x_switch, &mut lin, rtol)?;

    let mut yj = Jet2::zeros(na, nb);
    let mut dyj = Jet2::zeros(na, nb);
    for a in 0..na {
        for b in 0..nb {
            let j = a * nb + b;
            yj.set(a, b, lin[2 * j]);
            dyj.set(a, b, lin[2 * j + 1]);
        }
    }
    let yv = yj.value();
    let scale_ref = yj
        .c
        .iter()
        .chain(dyj.c.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if yv.abs() < 1e-8 * scale_ref {
        return Err(Error::OdeFailure("solution near zero at Riccati switch".into()));
    }
    let sign_y = yv.signum();

    // State: [w_ab..., l_ab...] with w = y'/y and l = log |y|.
    let w0 = dyj.div(&yj);
    let l0 = yj.ln_abs();
    let mut state = vec![0.0; 2 * nj];
    state[..nj].copy_from_slice(&w0.c);
    state[nj..].copy_from_slice(&l0.c);

    let w_bound = 6.0 * mu_hat + 100.0;
    let rhs = |x: f64, s: &[f64], out: &mut [f64]| {
        let q = coeff.q_jet(x, na, nb);
        // w' = Q - w * w (Leibniz), l' = w.
        for a in 0..na {
            for b in 0..nb {
                let mut ww = 0.0;
                for i in 0..=a {
                    for k in 0..=b {
                        ww += binom(a, i)
                            * binom(b, k)
                            * s[i * nb + k]
                            * s[(a - i) * nb + (b - k)];
                    }
                }
                let j = a * nb + b;
                out[j] = q.get(a, b) - ww;
                out[nj + j] = s[j];
            }
        }
    };
    dopri5(rhs, x_switch, 1.0, &mut state, rtol, 1e-12, |s| {
        if !s[0].is_finite() || s[0].abs() > w_bound {
            Err(Error::OdeFailure("riccati branch left the smooth regime".into()))
        } else {
            Ok(0.0)
        }
    })?;

    let mut w1 = Jet2::zeros(na, nb);
    w1.c.copy_from_slice(&state[..nj]);
    let mut l1 = Jet2::zeros(na, nb);
    l1.c.copy_from_slice(&state[nj..]);
    l1.c[0] += warm_scale;

    // D = y(1) (cos t1 + sin t1 w(1)); log|D| = l(1) + log|cos t1 + sin t1 w|.
    let t1 = coeff.op.bc1.theta;
    let mut edge = w1.scale(t1.sin());
    edge.c[0] += t1.cos();
    if edge.value() == 0.0 {
        return Err(Error::NonInvertible("boundary functional vanished".into()));
    }
    let sign = sign_y * edge.value().signum();
    let log_abs = l1.add(&edge.ln_abs());
    Ok(BoundaryLog { log_abs, sign })
}

/// Normalized boundary solution data at an interior point, for Green-function
/// diagonals: `(y, y')` integrated from the given end, renormalized (the
/// common scale is irrelevant for the ratios used downstream).
pub fn normalized_solution_at(
    op: &SLOperator,
    z: f64,
    from_left: bool,
    x: f64,
) -> Result<(f64, f64)> {
    let coeff = Coeff { op, z };
    let orders = JetOrders { na: 1, nb: 1 };
    if from_left {
        let (y0, dy0) = ic_jets(op.bc0, 1, 1);
        let mut state = vec![y0.value(), dy0.value()];
        integrate_linear(&coeff, orders, 0.0, x, &mut state, 1e-11)?;
        Ok((state[0], state[1]))
    } else {
        // Integrate tau = 1 - x from the right end; d/dtau = -d/dx.
        let t1 = op.bc1.theta;
        let mut state = vec![t1.sin(), t1.cos()];
        let rhs = |tau: f64, s: &[f64], out: &mut [f64]| {
            let q = coeff.q_jet(1.0 - tau, 1, 1).value();
            out[0] = s[1];
            out[1] = q * s[0];
        };
        dopri5(rhs, 0.0, 1.0 - x, &mut state, 1e-11, 1e-14, |st| {
            let m = st.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m > 1e120 {
                for v in st.iter_mut() {
                    *v /= m;
                }
                Ok(m.ln())
            } else {
                Ok(0.0)
            }
        })?;
        // v(x) and v'(x) = -dv/dtau.
        Ok((state[0], -state[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::SLOperator;
    use approx::assert_relative_eq;

    fn cylinder(lambda: f64) -> SLOperator {
        SLOperator::constant(1.0, 0.0, lambda, BoundaryCondition::dirichlet(), BoundaryCondition::dirichlet())
            .unwrap()
    }

    #[test]
    fn jet_algebra_roundtrip() {
        // u = 2 + 3 dl + 0.5 dz + dl dz; check u * (1/u) = 1.
        let mut u = Jet2::zeros(2, 2);
        u.set(0, 0, 2.0);
        u.set(1, 0, 3.0);
        u.set(0, 1, 0.5);
        u.set(1, 1, 1.0);
        let one = u.mul(&u.recip());
        assert_relative_eq!(one.get(0, 0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(one.get(1, 0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(one.get(0, 1), 0.0, epsilon = 1e-14);
        assert_relative_eq!(one.get(1, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn jet_log_of_exponential() {
        // u = exp(a + b dl): partials u_00 = e^a, u_10 = b e^a, u_20 = b^2 e^a.
        let (a, b) = (0.7_f64, 1.3_f64);
        let mut u = Jet2::zeros(3, 1);
        u.set(0, 0, a.exp());
        u.set(1, 0, b * a.exp());
        u.set(2, 0, b * b * a.exp());
        let l = u.ln_abs();
        assert_relative_eq!(l.get(0, 0), a, epsilon = 1e-12);
        assert_relative_eq!(l.get(1, 0), b, epsilon = 1e-12);
        assert_relative_eq!(l.get(2, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_cylinder_boundary_value() {
        // y = sinh(mu x)/mu from y(0)=0, y'(0)=1 (times -sin/cos normalization):
        // D = y(1) = sinh(mu)/mu.
        for &(l, z) in &[(0.0_f64, 2.0_f64), (3.0, 4.0), (10.0, 0.5), (40.0, 30.0)] {
            let op = cylinder(l);
            let mu = (l * l + z * z).sqrt();
            let d = boundary_log_jets(&op, z, JetOrders { na: 1, nb: 1 }).unwrap();
            let expected = (mu.sinh() / mu).ln();
            assert_relative_eq!(d.log_abs.value(), expected, max_relative = 1e-9);
            assert_eq!(d.sign, 1.0);
        }
    }

    #[test]
    fn z_derivative_of_log_boundary_value() {
        // d/dz log(sinh(mu)/mu) = (z/mu)(coth(mu) - 1/mu).
        let (l, z) = (3.0_f64, 4.0_f64);
        let mu = (l * l + z * z).sqrt();
        let op = cylinder(l);
        let d = boundary_log_jets(&op, z, JetOrders { na: 1, nb: 2 }).unwrap();
        let expected = (z / mu) * (1.0 / mu.tanh() - 1.0 / mu);
        assert_relative_eq!(d.log_abs.get(0, 1), expected, max_relative = 1e-9);
    }

    #[test]
    fn lambda_derivative_matches_finite_difference() {
        let z = 2.5;
        let h = 1e-5;
        let d = |l: f64| {
            boundary_log_jets(&cylinder(l), z, JetOrders { na: 1, nb: 1 })
                .unwrap()
                .log_abs
                .value()
        };
        let dj = boundary_log_jets(&cylinder(4.0), z, JetOrders { na: 2, nb: 1 }).unwrap();
        let fd = (d(4.0 + h) - d(4.0 - h)) / (2.0 * h);
        assert_relative_eq!(dj.log_abs.get(1, 0), fd, max_relative = 1e-7);
    }

    #[test]
    fn riccati_and_linear_agree_in_overlap() {
        // mu around the switch threshold: force both paths and compare.
        let op = cylinder(20.0);
        let z = 18.0;
        let lin = linear_path(&Coeff { op: &op, z }, JetOrders { na: 2, nb: 3 }, 1e-11).unwrap();
        let ric =
            riccati_path(&Coeff { op: &op, z }, JetOrders { na: 2, nb: 3 }, 27.0, 1e-11).unwrap();
        for a in 0..2 {
            for b in 0..3 {
                assert_relative_eq!(
                    lin.log_abs.get(a, b),
                    ric.log_abs.get(a, b),
                    max_relative = 1e-7,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn large_mu_is_cheap_and_right() {
        let op = cylinder(900.0);
        let z = 500.0;
        let mu = (900.0_f64 * 900.0 + 500.0 * 500.0).sqrt();
        let d = boundary_log_jets(&op, z, JetOrders { na: 1, nb: 3 }).unwrap();
        // log(sinh(mu)/mu) = mu - log 2 - log mu + O(e^-2mu)
        assert_relative_eq!(
            d.log_abs.value(),
            mu - 2.0_f64.ln() - mu.ln(),
            max_relative = 1e-11
        );
    }

    #[test]
    fn green_solution_values() {
        // Left solution of the cylinder: proportional to sinh(mu x).
        let op = cylinder(3.0);
        let (y, dy) = normalized_solution_at(&op, 4.0, true, 0.6).unwrap();
        let mu = 5.0_f64;
        assert_relative_eq!(dy / y, mu / (mu * 0.6).tanh(), max_relative = 1e-9);
        let (v, dv) = normalized_solution_at(&op, 4.0, false, 0.6).unwrap();
        assert_relative_eq!(dv / v, -mu / (mu * 0.4).tanh(), max_relative = 1e-9);
    }
}
