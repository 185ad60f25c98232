//! Command implementations behind the `zetasum` binary: configuration
//! parsing, dispatch, caching, and report emission.

use crate::cache;
use crate::decomp::{
    corrections, fit_sum_expansion, logdet_decomposed, logdet_direct, resolve_sigma, Convention,
    FamilyAnalysis, OperatorFamily,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::phg::{export_profiles, extract_phg, ExtractOptions, TraceProvenance};
use crate::regcal::{
    reg_int, reg_sum, AsymptoticModel, Direction, RegIntOptions, RegSumOptions, SmoothFunction,
    SumMethod, TermSpec,
};
use crate::sturm::{
    eigenvalues, logdet_full, resolvent_trace, BoundaryCondition, LogDetMethod, SLOperator,
};
use crate::surfrev::SurfaceProfile;
use serde_json::json;
use std::path::PathBuf;
use std::sync::Arc;

/// Boundary condition from CLI text: `dirichlet`, `neumann`, or an angle.
pub fn parse_bc(text: &str) -> Result<BoundaryCondition> {
    match text.to_ascii_lowercase().as_str() {
        "dirichlet" | "d" => Ok(BoundaryCondition::dirichlet()),
        "neumann" | "n" => Ok(BoundaryCondition::neumann()),
        other => {
            let theta: f64 = other
                .parse()
                .map_err(|_| Error::Config(format!("unrecognized boundary condition '{text}'")))?;
            BoundaryCondition::new(theta)
        }
    }
}

/// Asymptotic model from compact text: comma-separated `exp` or `exp:logpow`,
/// e.g. `1:1,0,-1` for `x log x, x, 1, 1/x` (log powers are maxima).
pub fn parse_model(text: &str) -> Result<AsymptoticModel> {
    let mut terms = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (e, m) = match part.split_once(':') {
            Some((e, m)) => (
                e.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad exponent '{e}' in model '{text}'"))
                })?,
                m.trim().parse::<u32>().map_err(|_| {
                    Error::Config(format!("bad log power '{m}' in model '{text}'"))
                })?,
            ),
            None => (
                part.parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad exponent '{part}' in model '{text}'"))
                })?,
                0,
            ),
        };
        terms.push(TermSpec { exponent: e, max_log_power: m });
    }
    AsymptoticModel::new(terms, Direction::ToInfinity)
}

/// Family specification: either a profile `r(x)` or explicit `V`, `W`.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub r: Option<String>,
    pub v: Option<String>,
    pub w: Option<String>,
    pub bc0: String,
    pub bc1: String,
}

impl FamilySpec {
    pub fn build(&self) -> Result<OperatorFamily> {
        let bc0 = parse_bc(&self.bc0)?;
        let bc1 = parse_bc(&self.bc1)?;
        match (&self.r, &self.v) {
            (Some(r), None) => SurfaceProfile::parse(r)?.decompose(bc0, bc1),
            (None, Some(v)) => {
                let v_expr = Expr::parse(v)?;
                let w_expr = Expr::parse(self.w.as_deref().unwrap_or("0"))?;
                OperatorFamily::new(
                    Arc::new(move |x| v_expr.eval(x)),
                    Arc::new(move |x| w_expr.eval(x)),
                    bc0,
                    bc1,
                )
            }
            (Some(_), Some(_)) => {
                Err(Error::Config("give either a profile r or potentials V/W, not both".into()))
            }
            (None, None) => Err(Error::Config("a family needs --r or --v".into())),
        }
    }

    pub fn operator(&self, lambda: f64) -> Result<SLOperator> {
        Ok(self.build()?.op_at(lambda))
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({
            "r": self.r,
            "v": self.v,
            "w": self.w,
            "bc0": self.bc0,
            "bc1": self.bc1,
        })
    }
}

fn generic_tail_model() -> AsymptoticModel {
    AsymptoticModel::new(
        vec![
            TermSpec { exponent: 2.0, max_log_power: 1 },
            TermSpec { exponent: 1.0, max_log_power: 1 },
            TermSpec { exponent: 0.0, max_log_power: 1 },
            TermSpec { exponent: -1.0, max_log_power: 0 },
            TermSpec { exponent: -2.0, max_log_power: 0 },
            TermSpec { exponent: -3.0, max_log_power: 0 },
        ],
        Direction::ToInfinity,
    )
    .expect("generic model")
}

fn generic_head_model() -> AsymptoticModel {
    AsymptoticModel::new(
        vec![
            TermSpec { exponent: -2.0, max_log_power: 1 },
            TermSpec { exponent: -1.0, max_log_power: 1 },
            TermSpec { exponent: 0.0, max_log_power: 1 },
            TermSpec { exponent: 1.0, max_log_power: 0 },
            TermSpec { exponent: 2.0, max_log_power: 0 },
        ],
        Direction::ToZero,
    )
    .expect("generic head model")
}

/// `regint`: regularized integral of an expression.
pub fn cmd_regint(
    expr: &str,
    from: f64,
    to: f64,
    model_inf: Option<&str>,
    model_zero: Option<&str>,
) -> Result<serde_json::Value> {
    let e = Expr::parse(expr)?;
    let f = move |x: f64| e.eval(x);
    let mut opts = RegIntOptions::default();
    if to.is_infinite() {
        opts = opts.with_model_inf(match model_inf {
            Some(m) => parse_model(m)?,
            None => generic_tail_model(),
        });
    }
    if from == 0.0 {
        opts = opts.with_model_zero(match model_zero {
            Some(m) => parse_model(m)?.with_direction(Direction::ToZero),
            None => generic_head_model(),
        });
    }
    let v = reg_int(&f, from, to, &opts)?;
    Ok(json!({
        "command": "regint",
        "expr": expr,
        "from": from,
        "to": if to.is_infinite() { json!("inf") } else { json!(to) },
        "value": v.value,
        "error_estimate": v.error_estimate,
    }))
}

/// `regsum`: regularized sum of an expression over integers.
pub fn cmd_regsum(expr: &str, from: u64, method: &str, model: Option<&str>) -> Result<serde_json::Value> {
    let e = Expr::parse(expr)?;
    let model = match model {
        Some(m) => parse_model(m)?,
        None => generic_tail_model(),
    };
    let method = match method {
        "direct" => SumMethod::Direct,
        "em" | "euler_maclaurin" => SumMethod::EulerMaclaurin,
        other => return Err(Error::Config(format!("unknown method '{other}'"))),
    };
    let opts = RegSumOptions::new(model);
    let value = match method {
        SumMethod::Direct => {
            let f = move |x: f64| e.eval(x);
            reg_sum(&f, from, SumMethod::Direct, &opts)?
        }
        SumMethod::EulerMaclaurin => {
            // Symbolic derivatives of the expression feed the endpoint terms.
            let mut derivs = vec![e.clone()];
            for _ in 0..9 {
                derivs.push(derivs.last().unwrap().derive());
            }
            let f = SmoothFunction {
                f: {
                    let e = e.clone();
                    move |x: f64| e.eval(x)
                },
                d: move |order: u32, x: f64| derivs[order as usize].eval(x),
            };
            reg_sum(&f, from, SumMethod::EulerMaclaurin, &opts)?
        }
    };
    Ok(json!({
        "command": "regsum",
        "expr": expr,
        "from": from,
        "method": match method { SumMethod::Direct => "direct", SumMethod::EulerMaclaurin => "euler_maclaurin" },
        "value": value.value,
        "error_estimate": value.error_estimate,
    }))
}

/// `sl eig`: eigenvalues of one mode operator.
pub fn cmd_sl_eig(spec: &FamilySpec, lambda: f64, count: usize) -> Result<serde_json::Value> {
    let op = spec.operator(lambda)?;
    let s = eigenvalues(&op, count)?;
    Ok(json!({
        "command": "sl eig",
        "family": spec.describe(),
        "lambda": lambda,
        "eigenvalues": s.values,
        "error_bounds": s.errors,
    }))
}

/// `sl trace`: resolvent trace of one mode.
pub fn cmd_sl_trace(
    spec: &FamilySpec,
    lambda: f64,
    z: f64,
    power: u32,
    d_lambda: usize,
    d_z: usize,
) -> Result<serde_json::Value> {
    let op = spec.operator(lambda)?;
    let t = resolvent_trace(&op, z, power, d_lambda, d_z)?;
    Ok(json!({
        "command": "sl trace",
        "family": spec.describe(),
        "lambda": lambda,
        "z": z,
        "power": power,
        "d_lambda": d_lambda,
        "d_z": d_z,
        "value": t,
    }))
}

/// `sl det`: log-determinant of one mode.
pub fn cmd_sl_det(spec: &FamilySpec, lambda: f64, method: &str) -> Result<serde_json::Value> {
    let op = spec.operator(lambda)?;
    let m = match method {
        "gy" | "gelfand_yaglom" => LogDetMethod::GelfandYaglom,
        "pf" | "resolvent_pf" => LogDetMethod::ResolventPf,
        "zeta" | "resolvent_zeta" => LogDetMethod::ResolventZeta,
        other => return Err(Error::Config(format!("unknown determinant method '{other}'"))),
    };
    let info = logdet_full(&op, m)?;
    Ok(json!({
        "command": "sl det",
        "family": spec.describe(),
        "lambda": lambda,
        "method": method,
        "logdet": info.value,
        "error_estimate": info.error_estimate,
        "zeta0": info.zeta0,
        "zero_mode": info.zero_mode,
    }))
}

/// `phg extract`: extract and export the homogeneous profiles of a trace.
pub fn cmd_phg_extract(
    spec: &FamilySpec,
    orders: usize,
    r0: f64,
    rays: usize,
) -> Result<serde_json::Value> {
    let family = spec.build()?;
    let fam = family.clone();
    let trace = move |lambda: f64, z: f64| -> Result<f64> {
        resolvent_trace(&fam.op_at(lambda), z, 2, 0, 0)
    };
    let opts = ExtractOptions { r0, rays, ..ExtractOptions::default() };
    let e = extract_phg(
        &trace,
        orders,
        3.0,
        TraceProvenance { power: 2, d_lambda: 0, d_z: 0 },
        opts,
    )?;
    Ok(json!({
        "command": "phg extract",
        "family": spec.describe(),
        "orders": orders,
        "holdout_error": e.holdout_error,
        "profiles": export_profiles(&e, 33),
    }))
}

/// Options of the full assembly pipeline.
#[derive(Debug, Clone)]
pub struct AssembleOptions {
    pub convention: String,
    /// `auto`, `+1`, or `-1`.
    pub sigma: String,
    pub orders: usize,
    pub cache_dir: Option<PathBuf>,
    pub csv_traces: Option<PathBuf>,
}

/// `assemble`: the full pipeline — decompose, extract, correct, regularize,
/// compare against the direct determinant, and report.
pub fn cmd_assemble(spec: &FamilySpec, opts: &AssembleOptions) -> Result<serde_json::Value> {
    let request = json!({
        "command": "assemble",
        "family": spec.describe(),
        "convention": opts.convention,
        "sigma": opts.sigma,
        "orders": opts.orders,
    });
    let key = cache::cache_key(&request);
    if let Some(dir) = &opts.cache_dir {
        if let Some(hit) = cache::lookup(dir, &key) {
            return Ok(hit);
        }
    }

    let convention = match opts.convention.as_str() {
        "pf" => Convention::Pf,
        "zeta" => Convention::Zeta,
        other => return Err(Error::Config(format!("unknown convention '{other}'"))),
    };
    let family = spec.build()?;
    let analysis = FamilyAnalysis::new(family, opts.orders)?;

    let (sigma, sigma_note) = match opts.sigma.as_str() {
        "auto" => {
            let (s, best, worst) = resolve_sigma(&analysis)?;
            (s, json!({"resolved": true, "best_discrepancy": best, "other_discrepancy": worst}))
        }
        "+1" | "1" => (1, json!({"resolved": false})),
        "-1" => (-1, json!({"resolved": false})),
        other => return Err(Error::Config(format!("sigma must be auto, +1 or -1, got '{other}'"))),
    };

    let report = logdet_decomposed(&analysis, convention, sigma)?;

    if let Some(path) = &opts.csv_traces {
        let mut csv = String::from("z,sum_trace2\n");
        let mut z = 0.5;
        while z <= 64.0 {
            let s = analysis.sum_trace2(z)?;
            csv.push_str(&format!("{z},{}\n", s.value));
            z *= 2.0_f64.sqrt();
        }
        std::fs::write(path, csv)?;
    }

    let mut value = serde_json::to_value(&report)?;
    value["request"] = request;
    value["sigma_resolution"] = sigma_note;
    if let Some(dir) = &opts.cache_dir {
        cache::store(dir, &key, &value)?;
    }
    Ok(value)
}

/// `corrections` helper used by tests and the book examples.
pub fn cmd_corrections(spec: &FamilySpec, orders: usize, sigma: i8) -> Result<serde_json::Value> {
    let analysis = FamilyAnalysis::new(spec.build()?, orders)?;
    let c = corrections(&analysis, sigma)?;
    Ok(serde_json::to_value(&c)?)
}

/// `direct` helper: just the direct determinant.
pub fn cmd_direct(spec: &FamilySpec, orders: usize, convention: &str) -> Result<serde_json::Value> {
    let convention = match convention {
        "pf" => Convention::Pf,
        "zeta" => Convention::Zeta,
        other => return Err(Error::Config(format!("unknown convention '{other}'"))),
    };
    let analysis = FamilyAnalysis::new(spec.build()?, orders)?;
    let se = fit_sum_expansion(&analysis, 6)?;
    let d = logdet_direct(&analysis, convention, &se)?;
    Ok(json!({
        "command": "direct",
        "value": d.value,
        "error_estimate": d.error_estimate,
        "zeta0_sum": se.zeta0_sum(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn regint_table_value() {
        let v = cmd_regint("x*log(x)", 1.0, f64::INFINITY, None, None).unwrap();
        assert_relative_eq!(v["value"].as_f64().unwrap(), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn regsum_log() {
        let v = cmd_regsum("log(x)", 1, "direct", None).unwrap();
        assert_relative_eq!(
            v["value"].as_f64().unwrap(),
            0.5 * (2.0 * std::f64::consts::PI).ln(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn sl_eig_cylinder() {
        let spec = FamilySpec {
            r: None,
            v: Some("1".into()),
            w: Some("0".into()),
            bc0: "dirichlet".into(),
            bc1: "dirichlet".into(),
        };
        let v = cmd_sl_eig(&spec, 0.0, 3).unwrap();
        let eigs: Vec<f64> =
            v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert_relative_eq!(eigs[0], pi2, max_relative = 1e-8);
        assert_relative_eq!(eigs[1], 4.0 * pi2, max_relative = 1e-8);
        assert_relative_eq!(eigs[2], 9.0 * pi2, max_relative = 1e-8);
    }

    #[test]
    fn model_parser() {
        let m = parse_model("1:1,0,-1").unwrap();
        assert_eq!(m.terms.len(), 3);
        assert_eq!(m.terms[0].max_log_power, 1);
        assert!(parse_model("abc").is_err());
    }

    #[test]
    fn bc_parser() {
        assert!(parse_bc("dirichlet").unwrap().is_dirichlet());
        assert!(!parse_bc("neumann").unwrap().is_dirichlet());
        assert_relative_eq!(parse_bc("0.7").unwrap().theta, 0.7);
        assert!(parse_bc("bogus").is_err());
    }
}
