//! Explicit half-line model kernels used as oracles for the boundary part of
//! the resolvent trace expansion.
//!
//! On the half line, `(-d^2/dx^2 + mu^2)^-1` with the boundary condition
//! `cos(t) f(0) + sin(t) f'(0) = 0` has the kernel
//!
//! ```text
//! K_t(x,y;mu) = (1/2mu) [ e^(-mu|x-y|) + C(mu,t) e^(-mu(x+y)) ],
//! C(mu,t) = (mu sin t + cos t)/(mu sin t - cos t),
//! ```
//!
//! the free-line kernel `K_R` is the first term, `K_+` the image term, and
//! the j-fold kernel of `(-d^2/dx^2 + mu^2)^-j` on the line follows from
//! differentiating in `mu`.

use crate::error::{Error, Result};

/// Which model kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Half-line kernel with boundary angle `theta`.
    Theta,
    /// Free-line kernel.
    Real,
    /// Image part `K_theta - K_R`.
    Plus,
    /// j-fold convolution kernel of the free line.
    RealPower,
}

/// Arguments of a kernel evaluation.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub mu: f64,
    pub theta: f64,
    /// Convolution power for `RealPower` (j >= 1).
    pub j: u32,
    pub x: f64,
    pub y: f64,
}

impl KernelParams {
    pub fn new(mu: f64, x: f64, y: f64) -> Self {
        KernelParams { mu, theta: 0.0, j: 1, x, y }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_power(mut self, j: u32) -> Self {
        self.j = j;
        self
    }
}

/// The reflection coefficient `C(mu, theta)`.
pub fn c_coef(mu: f64, theta: f64) -> Result<f64> {
    let denom = mu * theta.sin() - theta.cos();
    if denom.abs() < 1e-14 * (1.0 + mu) {
        return Err(Error::KernelPole(mu));
    }
    Ok((mu * theta.sin() + theta.cos()) / denom)
}

/// Evaluate a model kernel.
pub fn kernel_eval(kind: KernelKind, p: KernelParams) -> Result<f64> {
    if p.mu <= 0.0 {
        return Err(Error::Domain("kernel needs mu > 0".into()));
    }
    match kind {
        KernelKind::Real => Ok((-p.mu * (p.x - p.y).abs()).exp() / (2.0 * p.mu)),
        KernelKind::Plus => {
            // The image part, defined so that K_theta = K_R + K_+.
            let c = c_coef(p.mu, p.theta)?;
            Ok(c * (-p.mu * (p.x + p.y)).exp() / (2.0 * p.mu))
        }
        KernelKind::Theta => {
            let c = c_coef(p.mu, p.theta)?;
            Ok(((-p.mu * (p.x - p.y).abs()).exp() + c * (-p.mu * (p.x + p.y)).exp())
                / (2.0 * p.mu))
        }
        KernelKind::RealPower => {
            if p.j == 0 {
                return Err(Error::Config("convolution power must be >= 1".into()));
            }
            let j = p.j as i32;
            let d = (p.x - p.y).abs();
            let mut sum = 0.0;
            let mut k_fact = 1.0;
            for k in 0..p.j {
                if k > 0 {
                    k_fact *= k as f64;
                }
                // prod_{l=1}^{j-k-1} (2l - 1)/l
                let mut prod = 1.0;
                for l in 1..=(p.j - k - 1) {
                    prod *= (2.0 * l as f64 - 1.0) / l as f64;
                }
                sum += prod / k_fact * d.powi(k as i32)
                    / (2.0_f64.powi(j) * p.mu.powi(2 * j - 1 - k as i32));
            }
            Ok(sum * (-p.mu * d).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dirichlet_reflection_coefficient() {
        for &mu in &[0.5, 1.0, 7.0, 100.0] {
            assert_relative_eq!(c_coef(mu, 0.0).unwrap(), -1.0);
        }
    }

    #[test]
    fn pole_detected() {
        // mu sin t = cos t at mu = cot t.
        let theta = 0.7_f64;
        let mu = theta.cos() / theta.sin();
        assert!(matches!(c_coef(mu, theta), Err(Error::KernelPole(_))));
    }

    #[test]
    fn free_kernel_diagonal() {
        let v = kernel_eval(KernelKind::Real, KernelParams::new(2.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(v, 0.25);
    }

    #[test]
    fn two_fold_diagonal() {
        // j = 2 at x = y: 1/(4 mu^3).
        for &mu in &[1.0, 3.0] {
            let v = kernel_eval(
                KernelKind::RealPower,
                KernelParams::new(mu, 0.3, 0.3).with_power(2),
            )
            .unwrap();
            assert_relative_eq!(v, 1.0 / (4.0 * mu.powi(3)), max_relative = 1e-14);
        }
    }

    #[test]
    fn theta_decomposes_into_real_plus_image() {
        // K_theta = K_R + K_+ by construction of the image term.
        let p = KernelParams::new(2.5, 0.4, 0.9).with_theta(1.1);
        let kt = kernel_eval(KernelKind::Theta, p).unwrap();
        let kr = kernel_eval(KernelKind::Real, p).unwrap();
        let kp = kernel_eval(KernelKind::Plus, p).unwrap();
        assert_relative_eq!(kt, kr + kp, max_relative = 1e-13);
    }

    #[test]
    fn power_kernel_matches_mu_derivative() {
        // (l + mu^2)^-2 = -(1/2mu) d_mu (l + mu^2)^-1 applied to kernels.
        let (x, y, mu) = (0.2, 0.7, 3.0);
        let h = 1e-5;
        let k1 = |m: f64| kernel_eval(KernelKind::Real, KernelParams::new(m, x, y)).unwrap();
        let fd = -(k1(mu + h) - k1(mu - h)) / (2.0 * h) / (2.0 * mu);
        let k2 = kernel_eval(KernelKind::RealPower, KernelParams::new(mu, x, y).with_power(2))
            .unwrap();
        assert_relative_eq!(k2, fd, max_relative = 1e-8);
    }
}
