//! Partie-finie regularized sums via partial-sum fitting and the
//! Euler–Maclaurin formula with regularized ingredients.
//!
//! The regularized sum of `f` over the integers `lambda >= lambda0` is the
//! regularized limit of the partial sums `N -> sum_{lambda0}^N f`. Two
//! routes are implemented: `Direct` fits the partial sums with the summed
//! model of `f`; `EulerMaclaurin` evaluates
//!
//!   regsum f = pf int f + sum_k B_2k/(2k)! (LIM f^(2k-1) - f^(2k-1)(l0))
//!            + f(l0)/2 + (LIM f)/2 + B_(2M+1) remainder integral,
//!
//! which requires analytic derivatives of `f` up to order 2M+1.

use super::bernoulli::{bernoulli_number, bernoulli_periodic};
use super::fit::{fit_expansion_samples, FitOptions};
use super::model::{AsymptoticModel, Direction, RealFunction, RegValue, TermSpec};
use super::quad::{integrate, QuadTol};
use super::regint::{reg_int, reg_limit, RegIntOptions};
use crate::error::{Error, Result};

/// Summation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    /// Fit the partial sums and read off the constant term.
    Direct,
    /// Euler–Maclaurin with regularized integral and limits.
    EulerMaclaurin,
}

/// Options controlling `reg_sum`.
#[derive(Clone)]
pub struct RegSumOptions {
    /// Expansion model of `f` itself as `lambda -> infinity`.
    pub model: AsymptoticModel,
    /// Euler–Maclaurin order (number of `B_2k` terms).
    pub em_order: u32,
    /// Largest index evaluated when forming partial sums.
    pub n_max: usize,
    /// First ladder point for partial-sum fitting.
    pub n_start: usize,
    pub fit: FitOptions,
    pub quad: QuadTol,
    /// Options forwarded to the regularized integral inside Euler–Maclaurin.
    pub regint: RegIntOptions,
    /// Raise `em_order` until the remainder integral is below this size.
    pub remainder_tolerance: f64,
    /// Exponent floor when constructing the partial-sum model.
    pub exponent_floor: f64,
}

impl RegSumOptions {
    pub fn new(model: AsymptoticModel) -> Self {
        let regint = RegIntOptions::default().with_model_inf(model.clone());
        RegSumOptions {
            model,
            em_order: 3,
            n_max: 100_000,
            n_start: 16,
            fit: FitOptions { max_condition: 5e12, max_rel_residual: 1e-5 },
            quad: QuadTol::default(),
            regint,
            remainder_tolerance: 1e-9,
            exponent_floor: -4.5,
        }
    }

    pub fn with_n_max(mut self, n: usize) -> Self {
        self.n_max = n;
        self
    }

    pub fn with_n_start(mut self, n: usize) -> Self {
        self.n_start = n;
        self
    }
}

/// The model obeyed by the partial sums `N -> sum_{l0}^N f(lambda)`, derived
/// from the model of `f` via the Euler–Maclaurin structure: an antiderivative
/// term, the `f(N)/2` term and derivative terms, plus a free constant.
///
/// Differentiation prunes terms exactly: `d^m x^alpha log^k x` loses its top
/// log power once `m` passes a nonnegative integer `alpha`, and a pure power
/// with integer `alpha >= 0` vanishes entirely for `m > alpha`. Spurious
/// columns would otherwise soak up quantization noise and corrupt the
/// constant term.
pub fn partial_sum_model(model: &AsymptoticModel, floor: f64) -> AsymptoticModel {
    let mut terms: Vec<TermSpec> = vec![TermSpec { exponent: 0.0, max_log_power: 0 }];
    let is_nonneg_int = |a: f64| a >= -1e-9 && (a - a.round()).abs() < 1e-9;
    for t in &model.terms {
        // Antiderivative: exponent + 1; integrating x^-1 log^k raises the
        // log power instead.
        if (t.exponent + 1.0).abs() < 1e-9 {
            terms.push(TermSpec { exponent: 0.0, max_log_power: t.max_log_power + 1 });
        } else {
            terms.push(TermSpec { exponent: t.exponent + 1.0, max_log_power: t.max_log_power });
        }
        // f(N)/2 and successive odd derivatives: exponent - m.
        let mut m = 0u32;
        loop {
            let e = t.exponent - m as f64;
            if e < floor {
                break;
            }
            let crossed = is_nonneg_int(t.exponent) && (m as f64) > t.exponent.round() + 1e-9;
            if crossed {
                if t.max_log_power == 0 {
                    break;
                }
                terms.push(TermSpec { exponent: e, max_log_power: t.max_log_power - 1 });
            } else {
                terms.push(TermSpec { exponent: e, max_log_power: t.max_log_power });
            }
            m += 1;
        }
    }
    AsymptoticModel::new(terms, Direction::ToInfinity)
        .expect("partial-sum model valid")
        .with_remainder_decay(model.remainder_decay)
}

/// Regularized sum of `f(lambda)` over integers `lambda >= lambda0`.
pub fn reg_sum(
    f: &dyn RealFunction,
    lambda0: u64,
    method: SumMethod,
    opts: &RegSumOptions,
) -> Result<RegValue> {
    if lambda0 < 1 {
        return Err(Error::Domain("lambda0 must be >= 1".into()));
    }
    match method {
        SumMethod::Direct => reg_sum_direct(f, lambda0, opts),
        SumMethod::EulerMaclaurin => reg_sum_euler_maclaurin(f, lambda0, opts),
    }
}

fn reg_sum_direct(f: &dyn RealFunction, lambda0: u64, opts: &RegSumOptions) -> Result<RegValue> {
    // Integer ladder, geometrically spaced between n_start and n_max. The
    // partial sums come from a single accumulation pass, so ladder density is
    // free; only n_max controls the evaluation cost of f.
    let n_lo = (opts.n_start.max(lambda0 as usize + 2)) as f64;
    let n_hi = (opts.n_max.max(opts.n_start + 4)) as f64;
    let target = 48usize;
    let mut ladder: Vec<u64> = Vec::new();
    for j in 0..target {
        let t = j as f64 / (target - 1) as f64;
        let n = (n_lo.ln() + t * (n_hi.ln() - n_lo.ln())).exp().round() as u64;
        if ladder.last() != Some(&n) {
            ladder.push(n);
        }
    }

    // One pass over the integers, recording the ladder values. Compensated
    // summation keeps the recorded partial sums accurate to one rounding of
    // their final size; naive accumulation would random-walk far above that
    // and defeat the fit's noise model.
    let mut xs = Vec::with_capacity(ladder.len());
    let mut ys = Vec::with_capacity(ladder.len());
    let mut acc = CompensatedSum::default();
    let mut next = 0usize;
    for lam in lambda0..=*ladder.last().unwrap() {
        acc.add(f.eval(lam as f64));
        if next < ladder.len() && lam == ladder[next] {
            xs.push(lam as f64);
            ys.push(acc.value());
            next += 1;
        }
    }

    // Model-order selection: deepen the partial-sum model until the constant
    // term stabilizes between a fit on the full ladder and one on its deeper
    // two thirds. Too shallow a model leaves systematic error; too deep a
    // model lets junk columns soak up quantization noise and drag the
    // constant along. The split-half agreement scores both failure modes.
    let deep_start = xs.len() / 3;
    let mut best: Option<(f64, f64, crate::regcal::AsymptoticExpansion)> = None;
    let mut floor = -0.5_f64;
    while floor >= opts.exponent_floor - 1e-9 {
        let sum_model = partial_sum_model(&opts.model, floor);
        let cols = sum_model.column_count();
        if 2 * cols + 2 <= xs.len() && 2 * cols + 2 <= xs.len() - deep_start {
            let full = fit_expansion_samples(&xs, &ys, &sum_model, opts.fit);
            let deep = fit_expansion_samples(
                &xs[deep_start..],
                &ys[deep_start..],
                &sum_model,
                opts.fit,
            );
            if let (Ok(full), Ok(deep)) = (full, deep) {
                let score = (full.reg_limit() - deep.reg_limit()).abs();
                if best.as_ref().map(|(s, _, _)| score < *s).unwrap_or(true) {
                    best = Some((score, deep.reg_limit(), full));
                }
            }
        }
        floor -= 1.0;
    }
    let (score, _deep_a00, fit) =
        best.ok_or_else(|| Error::FitRejected("no admissible partial-sum model".into()))?;
    RegValue::new(fit.reg_limit(), score + 0.05 * fit.remainder_estimate)
        .map(|r| r.with_fit(fit.fit_residual, fit.terms.len()))
}

fn reg_sum_euler_maclaurin(
    f: &dyn RealFunction,
    lambda0: u64,
    opts: &RegSumOptions,
) -> Result<RegValue> {
    let l0 = lambda0 as f64;
    let mut m = opts.em_order.max(1);

    loop {
        // Derivative availability gates the order.
        if f.deriv(2 * m + 1, l0).is_none() {
            return Err(Error::Domain(format!(
                "euler_maclaurin needs analytic derivatives up to order {}",
                2 * m + 1
            )));
        }

        let mut regint_opts = opts.regint.clone();
        regint_opts.tail_start = regint_opts.tail_start.max(2.0 * l0);
        let integral = reg_int(f, l0, f64::INFINITY, &regint_opts)?;

        let f_l0 = f.eval(l0);
        let lim_f = reg_limit(f, &opts.model, None, opts.fit)?;

        let mut bsum = RegValue::exact(0.0);
        for k in 1..=m {
            let order = 2 * k - 1;
            let b2k = bernoulli_number(2 * k)?;
            let fact = factorial(2 * k);
            let d_l0 = f
                .deriv(order, l0)
                .ok_or_else(|| Error::Domain(format!("missing derivative of order {order}")))?;
            let dmodel = opts.model.derivative_model(order);
            let df = DerivFn { f, order };
            let lim_d = reg_limit(&df, &dmodel, None, opts.fit)?;
            bsum = bsum + (lim_d - RegValue::exact(d_l0)) * (b2k / fact);
        }

        let remainder = em_remainder_integral(f, l0, m, opts)?;
        if remainder.value.abs() <= opts.remainder_tolerance || m >= 6 {
            let value = integral.value
                + bsum.value
                + 0.5 * f_l0
                + 0.5 * lim_f.value
                + remainder.value;
            let err = integral.error_estimate
                + bsum.error_estimate
                + 0.5 * lim_f.error_estimate
                + remainder.error_estimate;
            return RegValue::new(value, err)
                .map(|r| r.with_fit(integral.fit_residual, m as usize));
        }
        m += 1;
    }
}

struct DerivFn<'a> {
    f: &'a dyn RealFunction,
    order: u32,
}

impl RealFunction for DerivFn<'_> {
    fn eval(&self, x: f64) -> f64 {
        self.f.deriv(self.order, x).unwrap_or(f64::NAN)
    }
}

/// `1/(2M+1)! int_{l0}^inf B_{2M+1}(x - [x]) f^(2M+1)(x) dx`, integrated per
/// unit interval (the periodic Bernoulli polynomial is smooth inside each)
/// until the contributions fall below working precision.
fn em_remainder_integral(
    f: &dyn RealFunction,
    l0: f64,
    m: u32,
    opts: &RegSumOptions,
) -> Result<RegValue> {
    let order = 2 * m + 1;
    let fact = factorial(order);
    let mut total = 0.0;
    let mut err = 0.0;
    let mut n = l0;
    let mut small_streak = 0;
    for _ in 0..100_000 {
        let piece = integrate(
            |x| {
                let d = f.deriv(order, x).unwrap_or(f64::NAN);
                bernoulli_periodic(order, x).unwrap_or(f64::NAN) * d
            },
            n,
            n + 1.0,
            opts.quad,
        )?;
        total += piece.value;
        err += piece.error;
        n += 1.0;
        if piece.value.abs() < 1e-17 * (1.0 + total.abs()) {
            small_streak += 1;
            if small_streak >= 3 {
                break;
            }
        } else {
            small_streak = 0;
        }
    }
    RegValue::new(total / fact, err / fact)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().max(1.0)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Bilateral regularized sum `regsum_{lambda in Z} f(lambda)`:
/// one-sided regularized sums of `f(lambda)` and `f(-lambda)` plus `f(0)`.
pub fn reg_sum_bilateral(
    f: &(dyn Fn(i64) -> f64 + Sync),
    method: SumMethod,
    opts_pos: &RegSumOptions,
    opts_neg: &RegSumOptions,
) -> Result<RegValue> {
    let fp = |x: f64| f(x.round() as i64);
    let fn_ = |x: f64| f(-(x.round() as i64));
    let pos = reg_sum(&fp, 1, method, opts_pos)?;
    let neg = reg_sum(&fn_, 1, method, opts_neg)?;
    let center = f(0);
    if !center.is_finite() {
        return Err(Error::NonFinite("f(0) in bilateral sum".into()));
    }
    RegValue::new(pos.value + neg.value + center, pos.error_estimate + neg.error_estimate)
        .map(|r| r.with_fit(pos.fit_residual.max(neg.fit_residual), pos.truncation_order))
}
