//! Asymptotic models and fitted expansions.
//!
//! A regularized limit is read off a fitted expansion
//! `f(x) ~ sum_jk a_jk x^alpha_j log^k x`: the constant term `a_00` is the
//! Hadamard finite part of `f` in the stated direction. The model declares
//! which `(alpha_j, k)` pairs are allowed; the fit finds the coefficients.

use crate::error::{Error, Result};

/// A real-valued function of one positive real variable.
///
/// `deriv` returns the analytic derivative of the given order when the
/// implementation can supply one; order 0 must equal `eval`.
pub trait RealFunction: Sync {
    fn eval(&self, x: f64) -> f64;

    fn deriv(&self, _order: u32, _x: f64) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64 + Sync> RealFunction for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// A function bundled with an analytic derivative evaluator `d(order, x)`.
pub struct SmoothFunction<F, D> {
    pub f: F,
    pub d: D,
}

impl<F, D> RealFunction for SmoothFunction<F, D>
where
    F: Fn(f64) -> f64 + Sync,
    D: Fn(u32, f64) -> f64 + Sync,
{
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn deriv(&self, order: u32, x: f64) -> Option<f64> {
        if order == 0 {
            Some((self.f)(x))
        } else {
            Some((self.d)(order, x))
        }
    }
}

/// Direction of the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToInfinity,
    ToZero,
}

/// One term family of a model: exponent `alpha` with log powers `0..=max_log_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermSpec {
    pub exponent: f64,
    pub max_log_power: u32,
}

/// An ordered, finite asymptotic model.
#[derive(Debug, Clone)]
pub struct AsymptoticModel {
    pub terms: Vec<TermSpec>,
    pub direction: Direction,
    /// Additional decay of the remainder beyond the last kept exponent.
    pub remainder_decay: f64,
}

impl AsymptoticModel {
    /// Model with the given exponents (no logs), toward infinity.
    pub fn powers(exponents: &[f64]) -> Self {
        Self::new(
            exponents.iter().map(|&e| TermSpec { exponent: e, max_log_power: 0 }).collect(),
            Direction::ToInfinity,
        )
        .expect("valid power model")
    }

    /// Model with explicit `(exponent, max_log_power)` pairs, toward infinity.
    pub fn with_logs(terms: &[(f64, u32)]) -> Self {
        Self::new(
            terms.iter().map(|&(e, m)| TermSpec { exponent: e, max_log_power: m }).collect(),
            Direction::ToInfinity,
        )
        .expect("valid log model")
    }

    pub fn new(mut terms: Vec<TermSpec>, direction: Direction) -> Result<Self> {
        // Sort from most to least dominant and merge duplicate exponents.
        match direction {
            Direction::ToInfinity => {
                terms.sort_by(|a, b| b.exponent.partial_cmp(&a.exponent).unwrap())
            }
            Direction::ToZero => {
                terms.sort_by(|a, b| a.exponent.partial_cmp(&b.exponent).unwrap())
            }
        }
        let mut merged: Vec<TermSpec> = Vec::with_capacity(terms.len());
        for t in terms {
            if !t.exponent.is_finite() {
                return Err(Error::InvalidModel("non-finite exponent".into()));
            }
            match merged.last_mut() {
                Some(last) if (last.exponent - t.exponent).abs() < 1e-9 => {
                    last.max_log_power = last.max_log_power.max(t.max_log_power);
                }
                _ => merged.push(t),
            }
        }
        Ok(AsymptoticModel { terms: merged, direction, remainder_decay: 1.0 })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self.terms = AsymptoticModel::new(std::mem::take(&mut self.terms), direction)
            .expect("re-sort")
            .terms;
        self
    }

    pub fn with_remainder_decay(mut self, delta: f64) -> Self {
        self.remainder_decay = delta;
        self
    }

    /// Empty model: the function is asserted to tend to 0.
    pub fn empty() -> Self {
        AsymptoticModel { terms: Vec::new(), direction: Direction::ToInfinity, remainder_decay: 1.0 }
    }

    /// Number of basis columns `sum_j (M_j + 1)`.
    pub fn column_count(&self) -> usize {
        self.terms.iter().map(|t| t.max_log_power as usize + 1).sum()
    }

    /// Exponent of the first omitted term, used for remainder weighting.
    pub fn remainder_exponent(&self) -> f64 {
        let last = self.terms.last().map(|t| t.exponent);
        match (self.direction, last) {
            (Direction::ToInfinity, Some(e)) => e - self.remainder_decay,
            (Direction::ToInfinity, None) => -self.remainder_decay,
            (Direction::ToZero, Some(e)) => e + self.remainder_decay,
            (Direction::ToZero, None) => self.remainder_decay,
        }
    }

    /// The model of the m-th derivative: exponents shifted by -m, log powers kept.
    pub fn derivative_model(&self, m: u32) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| TermSpec { exponent: t.exponent - m as f64, max_log_power: t.max_log_power })
            .collect();
        AsymptoticModel::new(terms, self.direction)
            .expect("shifted model valid")
            .with_remainder_decay(self.remainder_decay)
    }

    /// True if the model contains an `x^-1 log^k` term with `k >= 1`.
    pub fn has_log_inverse_term(&self) -> bool {
        self.terms
            .iter()
            .any(|t| (t.exponent + 1.0).abs() < 1e-9 && t.max_log_power >= 1)
    }
}

/// A single fitted term `a * x^alpha * log^k x`.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionTerm {
    pub exponent: f64,
    pub log_power: u32,
    pub coefficient: f64,
}

/// A fitted asymptotic expansion with diagnostics.
#[derive(Debug, Clone)]
pub struct AsymptoticExpansion {
    pub terms: Vec<ExpansionTerm>,
    pub direction: Direction,
    /// Magnitude of the data minus the fit at held-out grid points.
    pub remainder_estimate: f64,
    /// Relative rms residual of the final fit.
    pub fit_residual: f64,
    /// Condition number of the equilibrated design matrix.
    pub condition_number: f64,
}

impl AsymptoticExpansion {
    /// Coefficient of `x^alpha log^k x`, 0 when the pair is absent.
    pub fn coefficient(&self, alpha: f64, log_power: u32) -> f64 {
        self.terms
            .iter()
            .find(|t| (t.exponent - alpha).abs() < 1e-9 && t.log_power == log_power)
            .map(|t| t.coefficient)
            .unwrap_or(0.0)
    }

    /// The regularized limit: coefficient of `x^0 log^0 x`.
    pub fn reg_limit(&self) -> f64 {
        self.coefficient(0.0, 0)
    }

    /// Coefficient of `x^-1` (log power 0); `A_inf`/`A_0` of the
    /// change-of-variables rule depending on the direction.
    pub fn inverse_coefficient(&self) -> f64 {
        self.coefficient(-1.0, 0)
    }

    /// Evaluate the truncated expansion at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let lx = x.ln();
        self.terms
            .iter()
            .map(|t| t.coefficient * x.powf(t.exponent) * lx.powi(t.log_power as i32))
            .sum()
    }
}

/// A regularized value with an error estimate and fit diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RegValue {
    pub value: f64,
    pub error_estimate: f64,
    pub fit_residual: f64,
    pub truncation_order: usize,
}

impl RegValue {
    pub fn new(value: f64, error_estimate: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("regularized value".into()));
        }
        Ok(RegValue {
            value,
            error_estimate: error_estimate.abs(),
            fit_residual: 0.0,
            truncation_order: 0,
        })
    }

    pub fn exact(value: f64) -> Self {
        RegValue { value, error_estimate: 0.0, fit_residual: 0.0, truncation_order: 0 }
    }

    pub fn with_fit(mut self, residual: f64, order: usize) -> Self {
        self.fit_residual = residual;
        self.truncation_order = order;
        self
    }
}

impl std::ops::Add for RegValue {
    type Output = RegValue;
    fn add(self, rhs: RegValue) -> RegValue {
        RegValue {
            value: self.value + rhs.value,
            error_estimate: self.error_estimate + rhs.error_estimate,
            fit_residual: self.fit_residual.max(rhs.fit_residual),
            truncation_order: self.truncation_order.max(rhs.truncation_order),
        }
    }
}

impl std::ops::Sub for RegValue {
    type Output = RegValue;
    fn sub(self, rhs: RegValue) -> RegValue {
        RegValue {
            value: self.value - rhs.value,
            error_estimate: self.error_estimate + rhs.error_estimate,
            fit_residual: self.fit_residual.max(rhs.fit_residual),
            truncation_order: self.truncation_order.max(rhs.truncation_order),
        }
    }
}

impl std::ops::Mul<f64> for RegValue {
    type Output = RegValue;
    fn mul(self, s: f64) -> RegValue {
        RegValue {
            value: self.value * s,
            error_estimate: self.error_estimate * s.abs(),
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_sorting_and_merge() {
        let m = AsymptoticModel::new(
            vec![
                TermSpec { exponent: -1.0, max_log_power: 0 },
                TermSpec { exponent: 1.0, max_log_power: 0 },
                TermSpec { exponent: 1.0, max_log_power: 2 },
                TermSpec { exponent: 0.0, max_log_power: 1 },
            ],
            Direction::ToInfinity,
        )
        .unwrap();
        let exps: Vec<f64> = m.terms.iter().map(|t| t.exponent).collect();
        assert_eq!(exps, vec![1.0, 0.0, -1.0]);
        assert_eq!(m.terms[0].max_log_power, 2);
        assert_eq!(m.column_count(), 3 + 2 + 1);
    }

    #[test]
    fn log_inverse_detection() {
        let m = AsymptoticModel::with_logs(&[(-1.0, 1)]);
        assert!(m.has_log_inverse_term());
        let m = AsymptoticModel::with_logs(&[(-1.0, 0), (0.0, 3)]);
        assert!(!m.has_log_inverse_term());
    }

    #[test]
    fn reg_value_rejects_nan() {
        assert!(RegValue::new(f64::NAN, 0.0).is_err());
        assert!(RegValue::new(f64::INFINITY, 0.0).is_err());
    }
}
