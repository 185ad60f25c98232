//! Command-line interface for regularized determinants of mode sums.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zetasum::cli::{
    cmd_assemble, cmd_phg_extract, cmd_regint, cmd_regsum, cmd_sl_det, cmd_sl_eig, cmd_sl_trace,
    AssembleOptions, FamilySpec,
};
use zetasum::Error;

#[derive(Parser)]
#[command(
    name = "zetasum",
    version,
    about = "Zeta-regularized determinants of infinite direct sums of Sturm-Liouville operators"
)]
struct Cli {
    /// Write the JSON report here as well as to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// Rotation profile r(x), e.g. "1", "2", "exp(x)".
    #[arg(long)]
    r: Option<String>,
    /// Potential V(x) > 0 (alternative to --r).
    #[arg(long)]
    v: Option<String>,
    /// Potential W(x); defaults to 0 when --v is given.
    #[arg(long)]
    w: Option<String>,
    /// Boundary condition at x = 0: dirichlet, neumann, or an angle in [0, pi).
    #[arg(long, default_value = "dirichlet")]
    bc0: String,
    /// Boundary condition at x = 1.
    #[arg(long, default_value = "dirichlet")]
    bc1: String,
}

impl FamilyArgs {
    fn spec(&self) -> FamilySpec {
        FamilySpec {
            r: self.r.clone(),
            v: self.v.clone(),
            w: self.w.clone(),
            bc0: self.bc0.clone(),
            bc1: self.bc1.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Regularized integral of an expression in x.
    Regint {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        /// Upper limit; "inf" for the partie-finie integral to infinity.
        #[arg(long, default_value = "inf")]
        to: String,
        /// Expansion model at infinity, e.g. "1:1,0,-1" (exp[:logpow],...).
        #[arg(long)]
        model_inf: Option<String>,
        /// Expansion model at zero.
        #[arg(long)]
        model_zero: Option<String>,
    },
    /// Regularized sum of an expression over the integers.
    Regsum {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 1)]
        from: u64,
        /// direct (partial-sum fit) or em (Euler-Maclaurin).
        #[arg(long, default_value = "direct")]
        method: String,
        #[arg(long)]
        model: Option<String>,
    },
    /// One-mode spectral operations.
    Sl {
        #[command(subcommand)]
        op: SlCommand,
    },
    /// Polyhomogeneous trace expansion extraction.
    Phg {
        #[command(subcommand)]
        op: PhgCommand,
    },
    /// Full pipeline: decompose, extract, correct, regularize, compare.
    Assemble {
        #[command(flatten)]
        family: FamilyArgs,
        /// Determinant convention: pf or zeta.
        #[arg(long, default_value = "pf")]
        convention: String,
        /// Sign of the log correction: auto, +1, or -1.
        #[arg(long, default_value = "auto")]
        sigma: String,
        /// Expansion orders carried in the extraction.
        #[arg(long, default_value_t = 6)]
        orders: usize,
        /// Cache directory; identical requests are replayed from disk.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Also write a CSV table of sampled summed traces.
        #[arg(long)]
        csv_traces: Option<PathBuf>,
        /// Exit with code 2 when |assembled - direct| exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Subcommand)]
enum SlCommand {
    /// Eigenvalues of one mode.
    Eig {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Resolvent trace of one mode.
    Trace {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 1)]
        power: u32,
        #[arg(long, default_value_t = 0)]
        d_lambda: usize,
        #[arg(long, default_value_t = 0)]
        d_z: usize,
    },
    /// Log-determinant of one mode.
    Det {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// gy, pf, or zeta.
        #[arg(long, default_value = "zeta")]
        method: String,
    },
}

#[derive(Subcommand)]
enum PhgCommand {
    /// Extract angular profiles of the squared-resolvent trace expansion.
    Extract {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 3)]
        orders: usize,
        #[arg(long, default_value_t = 8.0)]
        r0: f64,
        #[arg(long, default_value_t = 16)]
        rays: usize,
    },
}

fn init_threads() {
    if let Ok(text) = std::env::var("ZETASUM_THREADS") {
        if let Ok(n) = text.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn run(cli: Cli) -> Result<(serde_json::Value, bool), Error> {
    let mut tolerance_failed = false;
    let value = match cli.command {
        Command::Regint { expr, from, to, model_inf, model_zero } => {
            let to = if to == "inf" {
                f64::INFINITY
            } else {
                to.parse::<f64>().map_err(|_| Error::Config(format!("bad --to '{to}'")))?
            };
            cmd_regint(&expr, from, to, model_inf.as_deref(), model_zero.as_deref())?
        }
        Command::Regsum { expr, from, method, model } => {
            cmd_regsum(&expr, from, &method, model.as_deref())?
        }
        Command::Sl { op } => match op {
            SlCommand::Eig { family, lambda, count } => cmd_sl_eig(&family.spec(), lambda, count)?,
            SlCommand::Trace { family, lambda, z, power, d_lambda, d_z } => {
                cmd_sl_trace(&family.spec(), lambda, z, power, d_lambda, d_z)?
            }
            SlCommand::Det { family, lambda, method } => {
                cmd_sl_det(&family.spec(), lambda, &method)?
            }
        },
        Command::Phg { op } => match op {
            PhgCommand::Extract { family, orders, r0, rays } => {
                cmd_phg_extract(&family.spec(), orders, r0, rays)?
            }
        },
        Command::Assemble { family, convention, sigma, orders, cache_dir, csv_traces, tolerance } => {
            let report = cmd_assemble(
                &family.spec(),
                &AssembleOptions { convention, sigma, orders, cache_dir, csv_traces },
            )?;
            if let (Some(tol), Some(d)) = (tolerance, report["discrepancy"].as_f64()) {
                if d > tol {
                    tolerance_failed = true;
                }
            }
            report
        }
    };
    if let Some(path) = cli.out {
        std::fs::write(path, serde_json::to_string_pretty(&value)?)?;
    }
    Ok((value, tolerance_failed))
}

fn main() -> ExitCode {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; anything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((value, tolerance_failed)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable report"));
            if tolerance_failed {
                eprintln!("numerical tolerance exceeded");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::Config(_) | Error::Domain(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
