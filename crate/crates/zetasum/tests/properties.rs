//! Property tests for the structural invariants.

use proptest::prelude::*;
use zetasum::expr::Expr;
use zetasum::homog::HomogeneousFunction;
use zetasum::regcal::{
    bernoulli_periodic, reg_int, AsymptoticModel, RegIntOptions,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The regularized integral is linear.
    #[test]
    fn reg_int_linearity(a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let opts = RegIntOptions::default().with_model_inf(AsymptoticModel::with_logs(&[
            (1.0, 1),
            (0.0, 0),
            (-1.0, 0),
        ]));
        let f = |x: f64| x * x.ln();
        let g = |x: f64| 1.0 / x;
        let fv = reg_int(&f, 1.0, f64::INFINITY, &opts).unwrap().value;
        let gv = reg_int(&g, 1.0, f64::INFINITY, &opts).unwrap().value;
        let combo = move |x: f64| a * f(x) + b * g(x);
        let cv = reg_int(&combo, 1.0, f64::INFINITY, &opts).unwrap().value;
        prop_assert!((cv - (a * fv + b * gv)).abs() <= 1e-10 * (1.0 + a.abs() + b.abs()));
    }

    /// Declared-degree homogeneity of power-law quarter-plane functions.
    #[test]
    fn homogeneous_functions_scale(alpha in -3.0..0.5f64, c in 0.1..4.0f64) {
        let f = HomogeneousFunction::new(alpha, move |x, y| {
            (c * x * x + y * y).powf(alpha / 2.0)
        });
        prop_assert!(f.homogeneity_defect() < 1e-9);
    }

    /// Symbolic derivatives agree with central differences away from
    /// singular points.
    #[test]
    fn expr_derivative_matches_finite_difference(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        x in 0.3..2.0f64,
    ) {
        let text = format!("({a})*x^2 + ({b})*sinh(x) + exp(-x)");
        let e = Expr::parse(&text).unwrap();
        let d = e.derive();
        let h = 1e-5;
        let fd = (e.eval(x + h) - e.eval(x - h)) / (2.0 * h);
        prop_assert!((d.eval(x) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
    }

    /// Rendered expressions re-parse to the same function.
    #[test]
    fn expr_display_roundtrip(a in -5.0..5.0f64, x in 0.1..3.0f64) {
        let text = format!("({a}) * x^2 - sqrt(x) / (1 + x)");
        let e = Expr::parse(&text).unwrap();
        let rendered = e.to_string();
        let back = Expr::parse(&rendered).unwrap();
        let (u, v) = (e.eval(x), back.eval(x));
        prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    /// The periodic Bernoulli polynomial is 1-periodic and matches the
    /// plain polynomial on [0, 1).
    #[test]
    fn bernoulli_periodicity(n in 0u32..12, x in -10.0..10.0f64) {
        let p = bernoulli_periodic(n, x).unwrap();
        let q = bernoulli_periodic(n, x + 1.0).unwrap();
        prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
    }
}
