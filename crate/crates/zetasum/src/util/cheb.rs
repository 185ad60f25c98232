//! Chebyshev interpolation on an interval.

/// A function represented by a Chebyshev series on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub a: f64,
    pub b: f64,
    /// Series coefficients, `f(x) = sum_k c_k T_k(t)` with `t` the mapping of
    /// `x` to `[-1, 1]`.
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Chebyshev–Gauss nodes of order `n` on `[a, b]`.
    pub fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }

    /// Interpolate `f` through the order-`n` Chebyshev–Gauss nodes.
    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let values: Vec<f64> = Self::nodes(a, b, n).iter().map(|&x| f(x)).collect();
        Self::from_node_values(a, b, &values)
    }

    /// Build the series from values at the Chebyshev–Gauss nodes (the node
    /// order must match `nodes`).
    pub fn from_node_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mut coeffs = vec![0.0; n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, v) in values.iter().enumerate() {
                s += v * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
            }
            *c = s * 2.0 / n as f64;
        }
        coeffs[0] *= 0.5;
        Chebyshev { a, b, coeffs }
    }

    /// Clenshaw evaluation; extrapolates smoothly slightly outside `[a, b]`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - (self.a + self.b)) / (self.b - self.a);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        b1 - t * b2
    }

    /// Series of the derivative.
    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(1)];
        if n >= 2 {
            let mut c = self.coeffs.clone();
            c[0] *= 2.0;
            d[n - 1] = 0.0;
            if n >= 2 {
                d[n - 2] = 2.0 * (n as f64 - 1.0) * c[n - 1];
            }
            for k in (0..n.saturating_sub(2)).rev() {
                d[k] = d.get(k + 2).copied().unwrap_or(0.0) + 2.0 * (k as f64 + 1.0) * c[k + 1];
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        Chebyshev { a: self.a, b: self.b, coeffs: d.iter().map(|x| x * scale).collect() }
    }

    /// Magnitude of the trailing coefficients, a proxy for the interpolation
    /// error of an analytic function.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(2)..].iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_smooth_function() {
        let ch = Chebyshev::fit(|x: f64| (2.0 * x).sin(), 0.0, 2.0, 32);
        for &x in &[0.1, 0.77, 1.5, 1.99] {
            assert_relative_eq!(ch.eval(x), (2.0 * x).sin(), epsilon = 1e-13);
        }
        assert!(ch.tail_magnitude() < 1e-13);
    }

    #[test]
    fn derivative_series() {
        let ch = Chebyshev::fit(|x: f64| x.exp(), -1.0, 3.0, 40);
        let d = ch.derivative();
        for &x in &[-0.5, 0.3, 2.2] {
            assert_relative_eq!(d.eval(x), x.exp(), max_relative = 1e-11);
        }
        let d3 = d.derivative().derivative();
        for &x in &[0.0, 1.0] {
            assert_relative_eq!(d3.eval(x), x.exp(), max_relative = 1e-7);
        }
    }
}
