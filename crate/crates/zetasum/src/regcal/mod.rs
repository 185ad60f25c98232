//! Hadamard partie-finie calculus: regularized limits, integrals and sums.
//!
//! A function with an asymptotic expansion `f(x) ~ sum a_jk x^alpha_j log^k x`
//! has a *regularized limit* `LIM f := a_00`, the constant term. Applying LIM
//! to `int_a^R f` as `R -> infinity` (and to `int_eps^b f` as `eps -> 0`)
//! yields the regularized integral, written `pf int`; applying it to partial
//! sums yields the regularized sum. These three functionals are the substrate
//! for every determinant formula in this crate.
//!
//! ```
//! use zetasum::regcal::{reg_int, AsymptoticModel, RegIntOptions};
//!
//! // pf int_1^inf x log x dx = 1/4: the divergent boundary terms carry no
//! // constant and are dropped by the partie finie.
//! let opts = RegIntOptions::default()
//!     .with_model_inf(AsymptoticModel::with_logs(&[(1.0, 1)]));
//! let v = reg_int(&|x: f64| x * x.ln(), 1.0, f64::INFINITY, &opts).unwrap();
//! assert!((v.value - 0.25).abs() < 1e-9);
//! ```

mod bernoulli;
mod fit;
mod model;
mod quad;
mod regint;
mod regsum;

pub use bernoulli::{bernoulli_number, bernoulli_periodic};
pub use fit::{fit_expansion, fit_expansion_samples, FitOptions, GeometricGrid};
pub use model::{
    AsymptoticExpansion, AsymptoticModel, Direction, ExpansionTerm, RealFunction, RegValue,
    SmoothFunction, TermSpec,
};
pub use quad::{integrate, QuadResult, QuadTol};
pub use regint::{
    change_of_variables, pf_head_power_log, pf_tail_power_log, reg_int, reg_limit,
    stable_inverse_coefficient, RegIntOptions,
};
pub use regsum::{
    partial_sum_model, reg_sum, reg_sum_bilateral, CompensatedSum, RegSumOptions, SumMethod,
};
