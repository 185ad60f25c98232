//! Numerical extraction of the jointly polyhomogeneous resolvent-trace
//! expansion.
//!
//! For a trace-like function `T(lambda, z)` with an expansion into terms
//! homogeneous of degrees `-gamma_0, -gamma_0 - 1, ...` jointly in
//! `(lambda, z)`, samples on a fan of rays `(lambda, z) = r (cos p, sin p)`
//! and a geometric radius ladder determine the angular profiles `g_i(p)` of
//! each coefficient `h_i = r^(-gamma_i) g_i(p)` by per-ray least squares. The
//! profiles are stored as Chebyshev interpolants in the angle; slices and
//! lambda-derivatives along `lambda = 1` come from the homogeneous form by
//! the radial/angular chain rule.
//!
//! ```
//! use zetasum::phg::interior_h0;
//!
//! // The analytic leading coefficient of Tr^-2 for V = 1 at mu = 1.
//! let h0 = interior_h0(&|_x| 1.0, 0.6, 0.8).unwrap();
//! assert!((h0 - 0.25).abs() < 1e-9);
//! ```

mod kernels;

pub use kernels::{c_coef, kernel_eval, KernelKind, KernelParams};

use crate::error::{Error, Result};
use crate::regcal::{fit_expansion_samples, integrate, AsymptoticModel, FitOptions, QuadTol};
use crate::util::Chebyshev;
use rayon::prelude::*;
use serde::Serialize;

/// Variable in which an angular profile is interpolated.
///
/// The undifferentiated traces are even in `lambda` and in `z`, so their
/// profiles are even about both axes and hence smooth functions of
/// `s = sin^2(phi)`; storing the Chebyshev series in `s` makes the unsampled
/// margins near the axes quadratically thin, so axis values come from benign
/// interpolation. Odd derivative orders break the evenness and fall back to
/// the plain angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularVar {
    SinSq,
    Phi,
}

/// One homogeneous coefficient `h_i(lambda, z) = r^(-gamma) g(phi)`.
#[derive(Debug, Clone)]
pub struct HomogeneousCoefficient {
    pub index: usize,
    pub gamma: f64,
    pub profile: Chebyshev,
    pub variable: AngularVar,
    /// Interpolation error proxy of the angular profile.
    pub interp_error: f64,
    /// Largest per-ray fit residual feeding this profile.
    pub fit_residual: f64,
}

impl HomogeneousCoefficient {
    /// The angular profile `g(phi)`.
    pub fn profile_at(&self, phi: f64) -> f64 {
        match self.variable {
            AngularVar::SinSq => self.profile.eval(phi.sin().powi(2)),
            AngularVar::Phi => self.profile.eval(phi),
        }
    }

    /// `g'(phi)`, through the chain rule when stored in `s = sin^2(phi)`.
    pub fn profile_deriv_at(&self, phi: f64) -> f64 {
        match self.variable {
            AngularVar::SinSq => {
                self.profile.derivative().eval(phi.sin().powi(2)) * (2.0 * phi).sin()
            }
            AngularVar::Phi => self.profile.derivative().eval(phi),
        }
    }

    pub fn eval(&self, lambda: f64, z: f64) -> f64 {
        let r = (lambda * lambda + z * z).sqrt();
        let phi = z.atan2(lambda);
        r.powf(-self.gamma) * self.profile_at(phi)
    }
}

/// Provenance of the expanded trace: which power and derivative orders.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceProvenance {
    pub power: u32,
    pub d_lambda: usize,
    pub d_z: usize,
}

/// A truncated jointly homogeneous expansion.
#[derive(Debug, Clone)]
pub struct PhgExpansion {
    pub coeffs: Vec<HomogeneousCoefficient>,
    pub provenance: TraceProvenance,
    /// Validation error at the held-out radius.
    pub holdout_error: f64,
}

impl PhgExpansion {
    /// Evaluate the truncated sum.
    pub fn eval(&self, lambda: f64, z: f64) -> f64 {
        self.coeffs.iter().map(|c| c.eval(lambda, z)).sum()
    }

    pub fn coeff(&self, index: usize) -> Option<&HomogeneousCoefficient> {
        self.coeffs.get(index)
    }
}

/// Sampling geometry for the extraction.
#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    /// Number of Chebyshev ray angles in `[eps, pi/2 - eps]`.
    pub rays: usize,
    /// Angular margin from the axes.
    pub eps: f64,
    /// First radius of the ladder `r0 * factor^m`.
    pub r0: f64,
    /// Ladder rungs: m = 0..=octaves.
    pub octaves: usize,
    /// Ladder ratio. The default doubling ladder is cheap; a denser ladder
    /// (sqrt 2) separates exponentially small boundary remainders from the
    /// steep power columns, which matters when the subleading coefficients
    /// feed correction integrals.
    pub factor: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { rays: 16, eps: 0.02, r0: 8.0, octaves: 6, factor: 2.0 }
    }
}

impl ExtractOptions {
    /// Refined geometry for correction-grade coefficients: the start radius
    /// sits where `e^(-2 r sqrt(min V))` is below working precision and the
    /// rungs are dense enough that an exponential cannot alias into powers.
    pub fn refined(min_v: f64) -> Self {
        // 32 rays: profiles of families with strong V-contrast are rational
        // in sin^2(phi) with poles just outside [0, 1], and 16 nodes leave
        // ~1e-4 interpolation error there.
        ExtractOptions {
            rays: 32,
            eps: 0.02,
            r0: 12.0 / min_v.sqrt().min(1.0),
            octaves: 13,
            factor: std::f64::consts::SQRT_2,
        }
    }
}

/// Extract the leading `orders + 1` homogeneous coefficients of a trace.
///
/// `gamma0` is the leading degree (3 for `Tr^-2`), raised by one per
/// derivative order in the provenance. The largest ladder radius is held out
/// of the fits and used to validate the truncated sum.
pub fn extract_phg(
    trace: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    orders: usize,
    gamma0: f64,
    provenance: TraceProvenance,
    opts: ExtractOptions,
) -> Result<PhgExpansion> {
    // The ladder must over-determine the fit; extend it beyond the requested
    // octaves when many orders are asked for.
    let n_radii = (opts.octaves + 1).max(2 * (orders + 1)).max(orders + 3);
    // Even provenance allows the sin^2 parameterization of the angle.
    let variable = if provenance.d_lambda % 2 == 0 && provenance.d_z % 2 == 0 {
        AngularVar::SinSq
    } else {
        AngularVar::Phi
    };
    let (v_lo, v_hi) = match variable {
        AngularVar::SinSq => (
            opts.eps.sin().powi(2),
            (std::f64::consts::FRAC_PI_2 - opts.eps).sin().powi(2),
        ),
        AngularVar::Phi => (opts.eps, std::f64::consts::FRAC_PI_2 - opts.eps),
    };
    let v_nodes = Chebyshev::nodes(v_lo, v_hi, opts.rays);
    let angles: Vec<f64> = match variable {
        AngularVar::SinSq => v_nodes.iter().map(|&s| s.sqrt().asin()).collect(),
        AngularVar::Phi => v_nodes.clone(),
    };
    let radii: Vec<f64> = (0..n_radii).map(|m| opts.r0 * opts.factor.powi(m as i32)).collect();
    let holdout_r = opts.r0 * opts.factor.powi(n_radii as i32);

    // Sample the full (ray x radius) matrix plus the held-out radius.
    let samples: Vec<Result<(Vec<f64>, f64)>> = angles
        .par_iter()
        .map(|&phi| {
            let (s, c) = phi.sin_cos();
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| trace(r * c, r * s))
                .collect::<Result<_>>()?;
            let held = trace(holdout_r * c, holdout_r * s)?;
            Ok((vals, held))
        })
        .collect();

    let model = AsymptoticModel::powers(
        &(0..=orders).map(|i| -(gamma0 + i as f64)).collect::<Vec<_>>(),
    );
    let fit_opts = FitOptions { max_condition: 1e12, max_rel_residual: 1e-4 };

    let mut per_ray: Vec<Vec<f64>> = Vec::with_capacity(angles.len());
    let mut residual: f64 = 0.0;
    let mut holdout_error: f64 = 0.0;
    for s in samples {
        let (vals, held) = s?;
        let fit = fit_expansion_samples(&radii, &vals, &model, fit_opts)?;
        residual = residual.max(fit.fit_residual);
        let coefs: Vec<f64> = (0..=orders)
            .map(|i| fit.coefficient(-(gamma0 + i as f64), 0))
            .collect();
        let predicted: f64 = coefs
            .iter()
            .enumerate()
            .map(|(i, g)| g * holdout_r.powf(-(gamma0 + i as f64)))
            .sum();
        let scale = held.abs().max(1e-300);
        holdout_error = holdout_error.max((predicted - held).abs() / scale);
        per_ray.push(coefs);
    }

    let coeffs = (0..=orders)
        .map(|i| {
            let values: Vec<f64> = per_ray.iter().map(|c| c[i]).collect();
            let profile = Chebyshev::from_node_values(v_lo, v_hi, &values);
            let interp_error = profile.tail_magnitude();
            HomogeneousCoefficient {
                index: i,
                gamma: gamma0 + i as f64,
                profile,
                variable,
                interp_error,
                fit_residual: residual,
            }
        })
        .collect();

    Ok(PhgExpansion { coeffs, provenance, holdout_error })
}

/// `h_i(1, z)` or, with `d_lambda = 1`, the lambda-derivative of `h_i` at
/// `(1, z)`: for `h = r^(-g) p(phi)`,
/// `d_lambda h = r^(-g-1) [-g cos(phi) p(phi) - sin(phi) p'(phi)]`.
pub fn coeff_slice(e: &PhgExpansion, index: usize, z: f64, d_lambda: usize) -> Result<f64> {
    let c = e
        .coeff(index)
        .ok_or_else(|| Error::Config(format!("expansion has no order {index}")))?;
    if z < 0.0 {
        return Err(Error::Domain("slice needs z >= 0".into()));
    }
    let r = (1.0 + z * z).sqrt();
    let phi = z.atan2(1.0);
    match d_lambda {
        0 => Ok(r.powf(-c.gamma) * c.profile_at(phi)),
        1 => {
            let dp = c.profile_deriv_at(phi);
            Ok(r.powf(-c.gamma - 1.0)
                * (-c.gamma * phi.cos() * c.profile_at(phi) - phi.sin() * dp))
        }
        _ => Err(Error::Config("only first lambda-derivatives are supported".into())),
    }
}

/// The analytic leading coefficient of `Tr^-2`:
/// `int_0^1 dx / (4 (lambda^2 V(x) + z^2)^(3/2))`, an oracle for the
/// extracted `g_0` (the leading term is interior and blind to the boundary
/// conditions).
pub fn interior_h0(
    v: &(dyn Fn(f64) -> f64 + Sync),
    lambda: f64,
    z: f64,
) -> Result<f64> {
    let q = integrate(
        |x| 0.25 * (lambda * lambda * v(x) + z * z).powf(-1.5),
        0.0,
        1.0,
        QuadTol::default(),
    )?;
    Ok(q.value)
}

/// JSON record of one extracted profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileExport {
    pub i: usize,
    pub gamma: f64,
    pub phi: Vec<f64>,
    pub g: Vec<f64>,
    pub residual: f64,
}

/// Serialize the expansion profiles on their angular nodes.
pub fn export_profiles(e: &PhgExpansion, nodes: usize) -> Vec<ProfileExport> {
    e.coeffs
        .iter()
        .map(|c| {
            let v_nodes = Chebyshev::nodes(c.profile.a, c.profile.b, nodes);
            let phi: Vec<f64> = match c.variable {
                AngularVar::SinSq => v_nodes.iter().map(|&s| s.sqrt().asin()).collect(),
                AngularVar::Phi => v_nodes.clone(),
            };
            let g = phi.iter().map(|&p| c.profile_at(p)).collect();
            ProfileExport {
                i: c.index,
                gamma: c.gamma,
                phi,
                g,
                residual: c.fit_residual,
            }
        })
        .collect()
}
