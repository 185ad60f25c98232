//! Homogeneous functions on the quarter plane and the regularized Fubini
//! machinery.
//!
//! A function `f` on the punctured quarter plane that is homogeneous of
//! degree `alpha` has one-sided Taylor expansions along the two edges,
//!
//! ```text
//! f(x, y) ~ sum_j c_j y^(alpha-j) x^j   (y -> inf),
//! f(x, y) ~ sum_j d_j x^(alpha-j) y^j   (x -> inf),
//! ```
//!
//! with `c_j` the Taylor coefficients of `x -> f(x, 1)` at 0 and `d_j` those
//! of `y -> f(1, y)`. Iterated regularized integrals of such functions admit
//! closed forms, the two integration orders generally differ by a correction
//! carried entirely by the degree -2 part, and exchanging a regularized
//! integral with a regularized sum produces additional boundary corrections
//! from the degrees -1 and 2k-2. These identities are the engine that turns a
//! determinant of an operator sum into a regularized sum of determinants.
//!
//! ```
//! use zetasum::homog::{fubini_int_correction, HomogeneousFunction};
//!
//! // The degree -2 probe whose exchange correction is log 2.
//! let f = HomogeneousFunction::new(-2.0, |x, y| x * (x * x + y * y).powf(-1.5));
//! let corr = fubini_int_correction(&f).unwrap();
//! assert!((corr.value - 2.0_f64.ln()).abs() < 1e-6);
//! ```

use crate::error::{Error, Result};
use crate::regcal::{
    bernoulli_number, integrate, reg_int, AsymptoticModel, Direction, QuadTol, RegIntOptions,
    RegValue, TermSpec,
};
use crate::util::Chebyshev;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A function on the quarter plane, homogeneous of a known degree.
#[derive(Clone)]
pub struct HomogeneousFunction {
    degree: f64,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

/// Which edge expansion: `C` is the Taylor series of `x -> f(x,1)` at 0,
/// `D` that of `y -> f(1,y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    C,
    D,
}

impl HomogeneousFunction {
    pub fn new(degree: f64, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        HomogeneousFunction { degree, eval: Arc::new(eval) }
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    /// Largest relative deviation from `f(t x, t y) = t^deg f(x, y)` over a
    /// probe grid; a cheap validation of the declared degree.
    pub fn homogeneity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &t in &[0.5, 2.0, 10.0] {
            for &(x, y) in &[(1.0, 0.3), (0.2, 1.0), (0.7, 0.7), (1.5, 0.1), (0.05, 2.0)] {
                let lhs = self.eval(t * x, t * y);
                let rhs = t.powf(self.degree) * self.eval(x, y);
                let scale = lhs.abs().max(rhs.abs()).max(1e-300);
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        worst
    }

    /// First `count` Taylor coefficients of the requested edge slice,
    /// obtained from a least-squares polynomial fit near 0 that is accepted
    /// only when a half-sized fit window reproduces it.
    pub fn edge_coeffs(&self, edge: Edge, count: usize) -> Result<Vec<f64>> {
        let f = self.eval.clone();
        let slice = move |t: f64| match edge {
            Edge::C => f(t, 1.0),
            Edge::D => f(1.0, t),
        };
        taylor_at_zero(&slice, count)
    }

    /// `c_{alpha+1}` resp. `d_{alpha+1}`: the edge coefficient at integer
    /// index `alpha + 1`, defined as 0 when `alpha + 1` is not a nonnegative
    /// integer.
    pub fn edge_coeff_alpha_plus_one(&self, edge: Edge) -> Result<f64> {
        let idx = self.degree + 1.0;
        if idx < -1e-9 || (idx - idx.round()).abs() > 1e-9 {
            return Ok(0.0);
        }
        let j = idx.round() as usize;
        Ok(self.edge_coeffs(edge, j + 1)?[j])
    }

    /// The m-th derivative in the second argument, evaluated on the line
    /// `y = 1`, as a slice function with tail model. Uses Euler's relation
    /// `y d_y f = deg f - x d_x f` iterated on the slice, with the slice
    /// derivatives taken from panelized Chebyshev interpolants.
    fn second_derivative_slice(&self, m: usize, x_max: f64) -> Result<SliceFn2> {
        let base = SliceFn::build(
            {
                let f = self.eval.clone();
                move |t: f64| f(t, 1.0)
            },
            self.degree,
            x_max,
        )?;
        Ok(base.second_arg_derivative(self.degree, m))
    }
}

/// Taylor coefficients of a smooth one-sided function at 0 via scaled
/// least squares, validated by window halving.
fn taylor_at_zero(slice: &(dyn Fn(f64) -> f64 + Sync), count: usize) -> Result<Vec<f64>> {
    let mut h = 0.5;
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..10 {
        let c = taylor_window(slice, count, h)?;
        if let Some(p) = &prev {
            let close = c
                .iter()
                .zip(p)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs())));
            if close {
                return Ok(c);
            }
        }
        prev = Some(c);
        h *= 0.5;
    }
    Err(Error::FitRejected(
        "edge Taylor coefficients did not stabilize under window halving".into(),
    ))
}

fn taylor_window(
    slice: &(dyn Fn(f64) -> f64 + Sync),
    count: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let degree = count + 4;
    let n = 3 * degree;
    let nodes = Chebyshev::nodes(0.0, h, n);
    let mut design = DMatrix::zeros(n, degree + 1);
    let mut rhs = DVector::zeros(n);
    for (r, &x) in nodes.iter().enumerate() {
        let v = slice(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("edge slice at {x}")));
        }
        let t = x / h;
        let mut p = 1.0;
        for c in 0..=degree {
            design[(r, c)] = p;
            p *= t;
        }
        rhs[r] = v;
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let sol = svd
        .solve(&rhs, 1e-13 * smax)
        .map_err(|e| Error::FitRejected(e.to_string()))?;
    Ok((0..count).map(|j| sol[j] / h.powi(j as i32)).collect())
}

/// A slice function `t -> s(t)` on `(0, inf)` with derivative access:
/// Chebyshev panels on `(0, x_max]` and a fitted power expansion beyond.
struct SliceFn {
    panels: Vec<Chebyshev>,
    edges: Vec<f64>,
    tail: Vec<(f64, f64)>, // (coefficient, exponent)
    x_max: f64,
}

impl SliceFn {
    fn build(
        slice: impl Fn(f64) -> f64 + Sync + Send + 'static,
        degree: f64,
        x_max: f64,
    ) -> Result<SliceFn> {
        // Geometric panels [x_max 2^-(j+1), x_max 2^-j] and a final [0, .].
        let mut edges = vec![0.0];
        let mut lo = x_max / 64.0;
        while lo < x_max * 0.99 {
            edges.push(lo);
            lo *= 2.0;
        }
        edges.push(x_max);
        let mut panels = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            panels.push(Chebyshev::fit(&slice, w[0], w[1], 40));
        }
        // Tail expansion beyond x_max: exponents degree - j.
        let model = AsymptoticModel::powers(
            &(0..=6).map(|j| degree - j as f64).collect::<Vec<_>>(),
        );
        let grid = crate::regcal::GeometricGrid {
            start: x_max,
            factor: 2.0_f64.powf(8.0 / 23.0),
            count: 24,
        };
        let fit = crate::regcal::fit_expansion(
            &(|x: f64| slice(x)),
            &model,
            &grid,
            crate::regcal::FitOptions { max_condition: 1e12, max_rel_residual: 1e-4 },
        )?;
        let tail = fit.terms.iter().map(|t| (t.coefficient, t.exponent)).collect();
        Ok(SliceFn { panels, edges, tail, x_max })
    }

    fn deriv(&self, order: usize, x: f64) -> f64 {
        if x <= self.x_max {
            let idx = self
                .edges
                .windows(2)
                .position(|w| x >= w[0] && x <= w[1])
                .unwrap_or(self.panels.len() - 1);
            let mut ch = self.panels[idx].clone();
            for _ in 0..order {
                ch = ch.derivative();
            }
            ch.eval(x)
        } else {
            self.tail
                .iter()
                .map(|&(c, e)| {
                    let mut coef = c;
                    for k in 0..order {
                        coef *= e - k as f64;
                    }
                    coef * x.powf(e - order as f64)
                })
                .sum()
        }
    }

    /// Slice of `d_2^m f` on `y = 1` for an `alpha`-homogeneous `f` whose
    /// `y = 1` slice this is: iterate `s_{k+1}(u) = (alpha - k) s_k(u) - u s_k'(u)`.
    /// Expanded into slice derivatives this is a linear combination
    /// `sum_i c_i u^i s^(i)(u)`.
    fn second_arg_derivative(self, alpha: f64, m: usize) -> SliceFn2 {
        // Build coefficients c_{k,i} with s_k = sum_i c_{k,i} u^i s0^(i).
        let mut c = vec![vec![0.0; m + 1]; m + 1];
        c[0][0] = 1.0;
        for k in 0..m {
            let ak = alpha - k as f64;
            let mut next = vec![0.0; m + 1];
            for i in 0..=k {
                // (alpha - k) * c_i u^i s^(i)
                next[i] += ak * c[k][i];
                // -u d/du (c_i u^i s^(i)) = -c_i (i u^i s^(i) + u^(i+1) s^(i+1))
                next[i] -= c[k][i] * i as f64;
                next[i + 1] -= c[k][i];
            }
            c[k + 1] = next;
        }
        SliceFn2 { base: self, weights: c[m].clone() }
    }
}

/// `x -> sum_i w_i x^i s^(i)(x)` built from a `SliceFn`.
struct SliceFn2 {
    base: SliceFn,
    weights: Vec<f64>,
}

impl SliceFn2 {
    fn eval(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| w * x.powi(i as i32) * self.base.deriv(i, x))
            .sum()
    }
}

/// A sum of homogeneous components plus a faster-decaying remainder.
pub struct QuarterPlaneFunction {
    pub components: Vec<HomogeneousFunction>,
    pub remainder: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
    /// Remainder decay: `O((x^2+y^2)^(-1/2-delta))` beyond the components.
    pub decay: f64,
}

impl QuarterPlaneFunction {
    pub fn from_components(components: Vec<HomogeneousFunction>) -> Result<Self> {
        for w in components.windows(2) {
            if w[1].degree() >= w[0].degree() - 1e-12 {
                return Err(Error::InvalidModel(
                    "component degrees must be strictly decreasing".into(),
                ));
            }
        }
        Ok(QuarterPlaneFunction { components, remainder: None, decay: 1.0 })
    }

    pub fn component_of_degree(&self, degree: f64) -> Option<&HomogeneousFunction> {
        self.components.iter().find(|c| (c.degree() - degree).abs() < 1e-9)
    }
}

/// Integration order for iterated quarter-plane integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationOrder {
    /// `pf int_a^inf [ pf int_b^inf f(x, y) dy ] dx`
    OuterX,
    /// `pf int_b^inf [ pf int_a^inf f(x, y) dx ] dy`
    OuterY,
}

/// Evaluation route for `hom_double_integral`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleIntMethod {
    /// Closed form in terms of 1D regularized integrals and edge coefficients.
    Closed,
    /// Literal nested iterated regularized integration.
    Nested,
}

fn regint_opts_for_slice(degree: f64, depth: usize) -> RegIntOptions {
    RegIntOptions::default().with_model_inf(AsymptoticModel::powers(
        &(0..=depth).map(|j| degree - j as f64).collect::<Vec<_>>(),
    ))
}

/// Iterated regularized integral of a homogeneous function over
/// `[a, inf) x [b, inf)`, in the requested order and by the requested method.
pub fn hom_double_integral(
    f: &HomogeneousFunction,
    a: f64,
    b: f64,
    method: DoubleIntMethod,
    order: IntegrationOrder,
) -> Result<RegValue> {
    if a < 0.0 || b < 0.0 {
        return Err(Error::Domain("limits must be nonnegative".into()));
    }
    if a == 0.0 && b == 0.0 {
        // Vanishes for both orders of integration, regardless of the degree.
        return Ok(RegValue::exact(0.0));
    }
    match order {
        IntegrationOrder::OuterX => match method {
            DoubleIntMethod::Closed => closed_double_integral(f, a, b),
            DoubleIntMethod::Nested => nested_double_integral(f, a, b),
        },
        IntegrationOrder::OuterY => {
            let swapped = HomogeneousFunction::new(f.degree(), {
                let g = f.eval.clone();
                move |x, y| g(y, x)
            });
            // Outer-y integration of f is outer-x integration of the swap.
            match method {
                DoubleIntMethod::Closed => closed_double_integral(&swapped, b, a),
                DoubleIntMethod::Nested => nested_double_integral(&swapped, b, a),
            }
        }
    }
}

/// Closed form for the outer-x order.
fn closed_double_integral(f: &HomogeneousFunction, a: f64, b: f64) -> Result<RegValue> {
    let alpha = f.degree();
    let depth = 6usize;

    let fx = {
        let g = f.eval.clone();
        move |x: f64| g(x, 1.0)
    };
    let fy = {
        let g = f.eval.clone();
        move |y: f64| g(1.0, y)
    };
    let opts_x = regint_opts_for_slice(alpha, depth);
    let opts_y = regint_opts_for_slice(alpha, depth);

    if (alpha + 2.0).abs() > 1e-12 {
        let mut total = RegValue::exact(0.0);
        if a > 0.0 {
            let iy = reg_int(&fy, b / a, f64::INFINITY, &opts_y)?;
            total = total + iy * (-(a.powf(alpha + 2.0)) / (alpha + 2.0));
        }
        if b > 0.0 {
            let ix = reg_int(&fx, a / b, f64::INFINITY, &opts_x)?;
            total = total + ix * (-(b.powf(alpha + 2.0)) / (alpha + 2.0));
        }
        let c_a1 = f.edge_coeff_alpha_plus_one(Edge::C)?;
        if c_a1 != 0.0 && a > 0.0 {
            total = total
                + RegValue::exact(
                    -c_a1 * crate::regcal::pf_tail_power_log(alpha + 1.0, 1, a),
                );
        }
        let d_a1 = f.edge_coeff_alpha_plus_one(Edge::D)?;
        if d_a1 != 0.0 && b > 0.0 {
            total = total
                + RegValue::exact(
                    -d_a1 * crate::regcal::pf_tail_power_log(alpha + 1.0, 1, b),
                );
        }
        Ok(total)
    } else {
        // Degree -2: the order-sensitive case.
        let mut total = RegValue::exact(0.0);
        if a > 0.0 {
            let iy = reg_int(&fy, b / a, f64::INFINITY, &opts_y)?;
            total = total + iy * (-a.ln());
        }
        if b > 0.0 {
            let ix = reg_int(&fx, a / b, f64::INFINITY, &opts_x)?;
            total = total + ix * (-b.ln());
            // pf int_{a/b}^inf f(x,1) log x dx
            let flog = {
                let g = f.eval.clone();
                move |x: f64| g(x, 1.0) * x.ln()
            };
            let log_model = AsymptoticModel::new(
                (0..=depth)
                    .map(|j| TermSpec { exponent: alpha - j as f64, max_log_power: 1 })
                    .collect(),
                Direction::ToInfinity,
            )?;
            let opts_log = RegIntOptions::default().with_model_inf(log_model);
            let start = if a / b > 0.0 { a / b } else { 0.0 };
            let ilog = if start > 0.0 {
                reg_int(&flog, start, f64::INFINITY, &opts_log)?
            } else {
                // Ordinary integral; the slice is smooth at 0 and O(x^-2).
                reg_int(&flog, 0.0, f64::INFINITY, &opts_log)?
            };
            total = total - ilog;
        }
        Ok(total)
    }
}

/// Literal nested integration for the outer-x order.
fn nested_double_integral(f: &HomogeneousFunction, a: f64, b: f64) -> Result<RegValue> {
    let alpha = f.degree();
    let depth = 6usize;
    let inner_model = AsymptoticModel::powers(
        &(0..=depth).map(|j| alpha - j as f64).collect::<Vec<_>>(),
    );

    let g = f.eval.clone();
    let inner = move |x: f64| -> Result<RegValue> {
        let gg = g.clone();
        let slice = move |y: f64| gg(x, y);
        let opts = RegIntOptions {
            tail_start: 8.0 * (1.0 + x),
            ..RegIntOptions::default().with_model_inf(inner_model.clone())
        };
        reg_int(&slice, b, f64::INFINITY, &opts)
    };

    let outer_fn = move |x: f64| inner(x).map(|r| r.value).unwrap_or(f64::NAN);

    // Outer expansion as x -> inf: exponents alpha + 1 - j, with possible
    // logarithms at alpha + 1 and at 0.
    let mut terms: Vec<TermSpec> = (0..=depth)
        .map(|j| {
            let e = alpha + 1.0 - j as f64;
            TermSpec { exponent: e, max_log_power: if j == 0 || e.abs() < 1e-9 { 1 } else { 0 } }
        })
        .collect();
    terms.push(TermSpec { exponent: 0.0, max_log_power: 1 });
    let outer_model = AsymptoticModel::new(terms, Direction::ToInfinity)?;

    let mut opts = RegIntOptions::default().with_model_inf(outer_model);
    if a == 0.0 && b == 0.0 {
        return Ok(RegValue::exact(0.0));
    }
    if a == 0.0 && alpha + 1.0 < 0.0 && b == 0.0 {
        // Singular origin column; only reached when b = 0.
        let zero_model = AsymptoticModel::new(
            (0..=depth)
                .map(|j| TermSpec { exponent: alpha + 1.0 + j as f64, max_log_power: 1 })
                .collect(),
            Direction::ToZero,
        )?;
        opts = opts.with_model_zero(zero_model);
    }
    reg_int(&outer_fn, a, f64::INFINITY, &opts)
}

/// The Fubini correction integral `int_0^inf f_{-2}(x, 1) log x dx`, an
/// ordinary absolutely convergent integral.
pub fn fubini_int_correction(f_minus2: &HomogeneousFunction) -> Result<RegValue> {
    if (f_minus2.degree() + 2.0).abs() > 1e-9 {
        return Err(Error::DegreeMismatch { expected: -2.0, got: f_minus2.degree() });
    }
    let g = f_minus2.eval.clone();
    let integrand = move |x: f64| g(x, 1.0) * x.ln();
    let model = AsymptoticModel::new(
        (0..=6)
            .map(|j| TermSpec { exponent: -2.0 - j as f64, max_log_power: 1 })
            .collect(),
        Direction::ToInfinity,
    )?;
    let opts = RegIntOptions::default().with_model_inf(model);
    reg_int(&integrand, 0.0, f64::INFINITY, &opts)
}

/// The corrections produced when a regularized integral is exchanged with a
/// regularized sum: a log term from degree -2, a half term from degree -1,
/// and Bernoulli terms from degrees 2k - 2.
#[derive(Debug, Clone)]
pub struct SumCorrectionBundle {
    pub log_term: RegValue,
    pub half_term: RegValue,
    pub bernoulli_terms: Vec<RegValue>,
    pub total: RegValue,
    /// Largest discrepancy between the analytic second-argument derivative
    /// and a central finite difference, recorded at probe points.
    pub derivative_check: f64,
}

/// Correction bundle of the regularized Fubini exchange, with the signs as
/// they appear on the right-hand side when the exchanged form is written
/// `pf int regsum f = regsum pf int f + (bundle terms)`.
pub fn fubini_sum_corrections(
    f: &QuarterPlaneFunction,
    m_max: u32,
) -> Result<SumCorrectionBundle> {
    let log_term = match f.component_of_degree(-2.0) {
        Some(c) => fubini_int_correction(c)? * (-1.0),
        None => RegValue::exact(0.0),
    };

    let half_term = match f.component_of_degree(-1.0) {
        Some(c) => {
            let g = c.eval.clone();
            let slice = move |x: f64| g(x, 1.0);
            let opts = regint_opts_for_slice(-1.0, 6);
            reg_int(&slice, 0.0, f64::INFINITY, &opts)? * (-0.5)
        }
        None => RegValue::exact(0.0),
    };

    let mut derivative_check: f64 = 0.0;
    let mut bernoulli_terms = Vec::new();
    for k in 1..=m_max {
        let degree = 2.0 * k as f64 - 2.0;
        let order = (2 * k - 1) as usize;
        let term = match f.component_of_degree(degree) {
            Some(c) => {
                let x_max = 16.0;
                let slice = c.second_derivative_slice(order, x_max)?;
                // Cross-check the analytic slice against finite differences.
                for &x in &[0.5, 1.5, 4.0] {
                    let fd = second_arg_fd(c, x, order);
                    let an = slice.eval(x);
                    let scale = an.abs().max(fd.abs()).max(1e-12);
                    derivative_check = derivative_check.max((an - fd).abs() / scale);
                }
                let integrand = move |x: f64| slice.eval(x);
                let model = AsymptoticModel::powers(
                    &(0..=6)
                        .map(|j| degree - order as f64 - j as f64)
                        .collect::<Vec<_>>(),
                );
                let opts = RegIntOptions::default().with_model_inf(model);
                let b2k = bernoulli_number(2 * k)?;
                let fact: f64 = (1..=2 * k).map(|i| i as f64).product();
                reg_int(&integrand, 0.0, f64::INFINITY, &opts)? * (-b2k / fact)
            }
            None => RegValue::exact(0.0),
        };
        bernoulli_terms.push(term);
    }

    let mut total = log_term + half_term;
    for t in &bernoulli_terms {
        total = total + *t;
    }
    Ok(SumCorrectionBundle { log_term, half_term, bernoulli_terms, total, derivative_check })
}

/// Central finite difference for `d_2^m f(x, 1)`, used as a cross-check.
fn second_arg_fd(f: &HomogeneousFunction, x: f64, m: usize) -> f64 {
    let h = 1e-2 * (1.0 + x.abs());
    let eval = |y: f64| f.eval(x, y);
    match m {
        1 => {
            // Fourth-order central stencil.
            (eval(1.0 - 2.0 * h) - 8.0 * eval(1.0 - h) + 8.0 * eval(1.0 + h)
                - eval(1.0 + 2.0 * h))
                / (12.0 * h)
        }
        3 => {
            (-eval(1.0 - 2.0 * h) + 2.0 * eval(1.0 - h) - 2.0 * eval(1.0 + h)
                + eval(1.0 + 2.0 * h))
                / (2.0 * h * h * h)
        }
        _ => {
            // Recursive first difference of order m - 1.
            let g1 = HomogeneousFunction::new(0.0, {
                let g = f.eval.clone();
                let hh = 1e-3;
                move |x, y| (g(x, y + hh) - g(x, y - hh)) / (2.0 * hh)
            });
            second_arg_fd(&g1, x, m - 1)
        }
    }
}

/// Both sides of the limit-exchange identity
/// `LIM_{y->inf} pf int_a^inf f(x,y) dx = pf int_a^inf LIM f dx + Corr`,
/// where `Corr = pf int_0^inf f(x,1) dx` exactly when the degree is -1.
#[derive(Debug, Clone)]
pub struct LimitExchange {
    pub lhs: RegValue,
    pub rhs: RegValue,
    pub correction: RegValue,
    /// `d/dy pf int f dx` vs `pf int d_2 f dx` at a probe height, by central
    /// finite differences.
    pub derivative_lhs: f64,
    pub derivative_rhs: f64,
}

pub fn limit_exchange(f: &HomogeneousFunction, a: f64) -> Result<LimitExchange> {
    let alpha = f.degree();
    let depth = 6usize;

    let correction = if (alpha + 1.0).abs() < 1e-9 {
        let g = f.eval.clone();
        let slice = move |x: f64| g(x, 1.0);
        let opts = regint_opts_for_slice(alpha, depth);
        reg_int(&slice, 0.0, f64::INFINITY, &opts)?
    } else {
        RegValue::exact(0.0)
    };

    // g(y) = pf int_a^inf f(x, y) dx, fitted in y to take the regularized limit.
    let g = f.eval.clone();
    let inner_model = AsymptoticModel::powers(
        &(0..=depth).map(|j| alpha - j as f64).collect::<Vec<_>>(),
    );
    let outer = {
        let inner_model = inner_model.clone();
        move |y: f64| -> f64 {
            let gg = g.clone();
            let slice = move |x: f64| gg(x, y);
            let opts = RegIntOptions {
                tail_start: 8.0 * (1.0 + y),
                ..RegIntOptions::default().with_model_inf(inner_model.clone())
            };
            reg_int(&slice, a, f64::INFINITY, &opts).map(|r| r.value).unwrap_or(f64::NAN)
        }
    };
    let mut terms: Vec<TermSpec> = (0..=depth)
        .map(|j| {
            let e = alpha + 1.0 - j as f64;
            TermSpec { exponent: e, max_log_power: if e.abs() < 1e-9 { 1 } else { 0 } }
        })
        .collect();
    terms.push(TermSpec { exponent: 0.0, max_log_power: 1 });
    let lim_model = AsymptoticModel::new(terms, Direction::ToInfinity)?;
    let lhs = crate::regcal::reg_limit(
        &outer,
        &lim_model,
        Some(crate::regcal::GeometricGrid {
            start: 4.0,
            factor: 2.0_f64.powf(8.0 / 25.0),
            count: 26,
        }),
        crate::regcal::FitOptions { max_condition: 1e12, max_rel_residual: 1e-4 },
    )?;

    // Pointwise regularized limit of f(x, y) as y -> inf: the coefficient of
    // y^0, i.e. c_alpha x^alpha for nonnegative integer alpha, else 0.
    let pointwise = if alpha >= -1e-9 && (alpha - alpha.round()).abs() < 1e-9 {
        let j = alpha.round() as usize;
        let c = f.edge_coeffs(Edge::C, j + 1)?[j];
        if a > 0.0 {
            -c * a.powf(alpha + 1.0) / (alpha + 1.0)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let rhs = RegValue::new(pointwise, 0.0)? + correction;

    // Derivative identity probe at y0 = 2 by central differences.
    let y0 = 2.0;
    let h = 1e-4 * y0;
    let derivative_lhs = (outer(y0 + h) - outer(y0 - h)) / (2.0 * h);
    let dslice = {
        let g = f.eval.clone();
        move |x: f64| (g(x, y0 + h) - g(x, y0 - h)) / (2.0 * h)
    };
    let dmodel = AsymptoticModel::powers(
        &(0..=depth).map(|j| alpha - 1.0 - j as f64).collect::<Vec<_>>(),
    );
    // Finite-difference data is noisy at depth; the derivative probe only
    // needs ~1e-6, so the split consistency and residual gates are relaxed.
    let dopts = RegIntOptions {
        tail_start: 16.0,
        split_tolerance: 1e-8,
        fit: crate::regcal::FitOptions { max_condition: 1e12, max_rel_residual: 1e-3 },
        ..RegIntOptions::default().with_model_inf(dmodel)
    };
    let derivative_rhs = reg_int(&dslice, a, f64::INFINITY, &dopts)?.value;

    Ok(LimitExchange { lhs, rhs, correction, derivative_lhs, derivative_rhs })
}

/// Ordinary double integral of the remainder part over a finite box, used by
/// tests to confirm that component sums reproduce a declared function.
pub fn box_integral_error(
    f: &QuarterPlaneFunction,
    full: impl Fn(f64, f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let probe = integrate(
        |x| {
            let inner = integrate(
                |y| {
                    let sum: f64 = f.components.iter().map(|c| c.eval(x, y)).sum();
                    (full(x, y) - sum).abs()
                },
                lo,
                hi,
                QuadTol { abs: 1e-9, rel: 1e-7, max_segments: 200 },
            );
            inner.map(|r| r.value).unwrap_or(f64::NAN)
        },
        lo,
        hi,
        QuadTol { abs: 1e-9, rel: 1e-7, max_segments: 200 },
    )?;
    Ok(probe.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn inv_square() -> HomogeneousFunction {
        HomogeneousFunction::new(-2.0, |x, y| 1.0 / (x * x + y * y))
    }

    #[test]
    fn homogeneity_defect_small() {
        assert!(inv_square().homogeneity_defect() < 1e-12);
        let f32 = HomogeneousFunction::new(-1.5, |x, y| (x * x + y * y).powf(-0.75));
        assert!(f32.homogeneity_defect() < 1e-9);
    }

    #[test]
    fn edge_coefficients_of_inverse_square() {
        // f(x,1) = 1/(1+x^2) = 1 - x^2 + x^4 - ...
        let c = inv_square().edge_coeffs(Edge::C, 3).unwrap();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(c[1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(c[2], -1.0, epsilon = 1e-7);
    }

    #[test]
    fn closed_double_integral_catalan() {
        // pf iint of (x^2+y^2)^-1 over [1,inf)^2 = -G (Catalan's constant).
        let catalan = 0.915_965_594_177_219;
        let v = hom_double_integral(
            &inv_square(),
            1.0,
            1.0,
            DoubleIntMethod::Closed,
            IntegrationOrder::OuterX,
        )
        .unwrap();
        assert_relative_eq!(v.value, -catalan, epsilon = 1e-8);
    }

    #[test]
    fn closed_double_integral_three_halves() {
        // (x^2+y^2)^(-3/2), a=1, b=0: only the a-term survives and equals 1.
        let f = HomogeneousFunction::new(-3.0, |x, y| (x * x + y * y).powf(-1.5));
        let v = hom_double_integral(&f, 1.0, 0.0, DoubleIntMethod::Closed, IntegrationOrder::OuterX)
            .unwrap();
        assert_relative_eq!(v.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn both_limits_zero_vanishes() {
        let v = hom_double_integral(
            &inv_square(),
            0.0,
            0.0,
            DoubleIntMethod::Nested,
            IntegrationOrder::OuterY,
        )
        .unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn nested_matches_closed_on_symmetric_function() {
        let v1 = hom_double_integral(
            &inv_square(),
            1.0,
            1.0,
            DoubleIntMethod::Nested,
            IntegrationOrder::OuterX,
        )
        .unwrap();
        let v2 = hom_double_integral(
            &inv_square(),
            1.0,
            1.0,
            DoubleIntMethod::Closed,
            IntegrationOrder::OuterX,
        )
        .unwrap();
        assert_relative_eq!(v1.value, v2.value, epsilon = 1e-6);
    }

    #[test]
    fn symmetric_function_order_independent() {
        // f symmetric and a = b: both orders agree, the correction vanishes.
        for order in [IntegrationOrder::OuterX, IntegrationOrder::OuterY] {
            let v = hom_double_integral(&inv_square(), 1.0, 1.0, DoubleIntMethod::Nested, order)
                .unwrap();
            let w = hom_double_integral(
                &inv_square(),
                1.0,
                1.0,
                DoubleIntMethod::Closed,
                IntegrationOrder::OuterX,
            )
            .unwrap();
            assert_relative_eq!(v.value, w.value, epsilon = 1e-6);
        }
    }

    #[test]
    fn fubini_correction_antisymmetric_vanishes() {
        // x -> 1/x antisymmetry of log kills the integral for (x^2+y^2)^-1.
        let v = fubini_int_correction(&inv_square()).unwrap();
        assert_relative_eq!(v.value, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn fubini_correction_log2() {
        // f = x (x^2+y^2)^(-3/2): int_0^inf x (1+x^2)^(-3/2) log x dx = log 2.
        let f = HomogeneousFunction::new(-2.0, |x, y| x * (x * x + y * y).powf(-1.5));
        let v = fubini_int_correction(&f).unwrap();
        assert_relative_eq!(v.value, 2.0_f64.ln(), epsilon = 1e-7);
    }

    #[test]
    fn fubini_correction_rejects_wrong_degree() {
        let f = HomogeneousFunction::new(-3.0, |x, y| (x * x + y * y).powf(-1.5));
        assert!(fubini_int_correction(&f).is_err());
    }

    #[test]
    fn limit_exchange_degree_minus_one() {
        // f = (x^2+y^2)^(-1/2), a = 1: Corr = pf int (1+x^2)^(-1/2) = log 2.
        let f = HomogeneousFunction::new(-1.0, |x, y| (x * x + y * y).powf(-0.5));
        let ex = limit_exchange(&f, 1.0).unwrap();
        assert_relative_eq!(ex.correction.value, 2.0_f64.ln(), epsilon = 1e-8);
        assert_relative_eq!(ex.lhs.value, ex.rhs.value, epsilon = 1e-6);
        assert_relative_eq!(ex.derivative_lhs, ex.derivative_rhs, epsilon = 1e-5);
    }

    #[test]
    fn limit_exchange_degree_minus_two_no_correction() {
        let ex = limit_exchange(&inv_square(), 1.0).unwrap();
        assert_eq!(ex.correction.value, 0.0);
        assert_relative_eq!(ex.lhs.value, ex.rhs.value, epsilon = 1e-6);
    }

    #[test]
    fn limit_exchange_poisson_kernel() {
        // f = y/(x^2+y^2): Corr = pf int (1+x^2)^-1 dx = pi/2.
        let f = HomogeneousFunction::new(-1.0, |x, y| y / (x * x + y * y));
        let ex = limit_exchange(&f, 0.0).unwrap();
        assert_relative_eq!(ex.correction.value, PI / 2.0, epsilon = 1e-8);
        assert_relative_eq!(ex.lhs.value, ex.rhs.value, epsilon = 1e-6);
    }

    #[test]
    fn sum_corrections_cylinder_data() {
        // f(z, lambda) = z^3 Tr(D_lambda + z^2)^-2 for the product cylinder:
        // degree 0: z^3 * (1/4) r^-3; degree -1: -z^3 (lambda^2+z^2)^-2 / 2.
        let f0 = HomogeneousFunction::new(0.0, |z, l| {
            0.25 * z.powi(3) * (l * l + z * z).powf(-1.5)
        });
        let f1 = HomogeneousFunction::new(-1.0, |z, l| {
            -0.5 * z.powi(3) * (l * l + z * z).powf(-2.0)
        });
        let qp = QuarterPlaneFunction::from_components(vec![f0, f1]).unwrap();
        let bundle = fubini_sum_corrections(&qp, 1).unwrap();
        // -1/2 pf int f_{-1}(z,1) dz = -1/2 * (-1/2 * -1/2) = -1/8.
        assert_relative_eq!(bundle.log_term.value, 0.0, epsilon = 1e-9);
        assert_relative_eq!(bundle.half_term.value, -0.125, epsilon = 1e-6);
        // -B_2/2 pf int d_2 f_0 (z,1) dz = -(1/12)(-1/2) = 1/24.
        assert_relative_eq!(bundle.bernoulli_terms[0].value, 1.0 / 24.0, epsilon = 1e-6);
        assert_relative_eq!(bundle.total.value, -1.0 / 12.0, epsilon = 1e-6);
        assert!(bundle.derivative_check < 1e-5, "fd check {}", bundle.derivative_check);
    }

    #[test]
    fn sum_corrections_pure_half_term() {
        let f1 = HomogeneousFunction::new(-1.0, |z, l| {
            -0.5 * z.powi(3) * (l * l + z * z).powf(-2.0)
        });
        let qp = QuarterPlaneFunction::from_components(vec![f1]).unwrap();
        let bundle = fubini_sum_corrections(&qp, 2).unwrap();
        assert_relative_eq!(bundle.total.value, -0.125, epsilon = 1e-6);
    }

    #[test]
    fn sum_corrections_only_degree_zero() {
        let f0 = HomogeneousFunction::new(0.0, |z, l| {
            0.25 * z.powi(3) * (l * l + z * z).powf(-1.5)
        });
        let qp = QuarterPlaneFunction::from_components(vec![f0]).unwrap();
        let bundle = fubini_sum_corrections(&qp, 1).unwrap();
        assert_eq!(bundle.log_term.value, 0.0);
        assert_eq!(bundle.half_term.value, 0.0);
        assert!(bundle.bernoulli_terms[0].value.abs() > 1e-3);
        assert_relative_eq!(
            bundle.bernoulli_terms[0].value,
            bundle.total.value,
            max_relative = 1e-12
        );
    }
}
