//! Public-state baselines, output perturbation, and the explicit strongly
//! convex closed form.

use serde::{Deserialize, Serialize};

use super::{AccountResult, Analysis};
use crate::concentration::{min_k_lower_bound, xi_max};
use crate::error::{Error, Result};
use crate::params::{ConvexityClass, ProblemParams};
use crate::rdp::{self, gaussian_rdp, RdpCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionVariant {
    /// All noise along the update directions.
    Beta1,
    /// All noise isotropic; the orthonormal frame costs a factor `d/K`.
    Beta0,
}

/// Composition over `t` released iterates.
///
/// Per-step cost `alpha (2 clip/n)^2 / (2 sigma^2)` for `Beta1`, times
/// `d/K` for `Beta0`; converted at the full `delta`.
pub fn composition_baseline(
    params: &ProblemParams,
    delta: f64,
    t: u64,
    variant: CompositionVariant,
    alpha_grid: &[f64],
) -> Result<AccountResult> {
    params.validate()?;
    let s = params.step_sensitivity();
    let scale = match variant {
        CompositionVariant::Beta1 => 1.0,
        CompositionVariant::Beta0 => params.d as f64 / params.k as f64,
    };
    let steps = t as f64;
    let curve = RdpCurve::from_fn(alpha_grid.to_vec(), |a| {
        Ok(steps * scale * gaussian_rdp(a, s, params.sigma)?)
    })?;
    let analysis = match variant {
        CompositionVariant::Beta1 => Analysis::CompositionBeta1,
        CompositionVariant::Beta0 => Analysis::CompositionBeta0,
    };
    let mut r = AccountResult::from_curve(analysis, curve, delta, delta, 0.0)?;
    r.tau_star = Some(0);
    r.beta = Some(match variant {
        CompositionVariant::Beta1 => 1.0,
        CompositionVariant::Beta0 => 0.0,
    });
    Ok(r)
}

/// Single Gaussian release with the ball diameter as sensitivity:
/// `alpha (2R)^2 d / (2 eta^2 sigma^2)`. Independent of the horizon.
pub fn output_perturbation(params: &ProblemParams, delta: f64, alpha_grid: &[f64]) -> Result<AccountResult> {
    params.validate()?;
    let noise = params.eta * params.sigma / (params.d as f64).sqrt();
    let curve = RdpCurve::from_fn(alpha_grid.to_vec(), |a| gaussian_rdp(a, 2.0 * params.radius, noise))?;
    AccountResult::from_curve(Analysis::OutputPerturbation, curve, delta, delta, 0.0)
}

/// Lists every failing precondition of the strongly convex closed form.
pub fn closed_form_violations(params: &ProblemParams, delta: f64) -> Result<Vec<String>> {
    params.validate()?;
    rdp::check_delta(delta)?;
    let mut v = Vec::new();
    if params.convexity != ConvexityClass::StronglyConvex {
        v.push(format!(
            "convexity is {}, not strongly_convex",
            params.convexity.as_str()
        ));
        return Ok(v);
    }
    let target = params.k as f64 / params.smoothness;
    if (params.eta - target).abs() > 1e-12 * target {
        v.push(format!("step size {} differs from K/M = {target}", params.eta));
    }
    let lower = min_k_lower_bound(params, delta)?;
    if (params.k as f64) < lower || 2 * params.k > params.d {
        v.push(format!(
            "K = {} outside [{}, {}]",
            params.k,
            crate::concentration::ceil_robust(lower),
            params.d / 2
        ));
    }
    let xm = xi_max(params);
    if params.xi > xm {
        v.push(format!("xi = {} exceeds {xm}", params.xi));
    }
    Ok(v)
}

/// `ceil(n R sqrt(2d) / (clip eta))`, the window that optimizes the explicit bound.
pub fn closed_form_window(params: &ProblemParams) -> u64 {
    params.saturation_window()
}

/// Explicit strongly convex bound.
///
/// `rho(alpha) = alpha min(T (2 clip/n)^2 / (2 sigma^2), 8 clip R sqrt(2d) / (eta n sigma^2))`,
/// converted with `delta_p = delta/2`; the other half of `delta` is the
/// failure budget.
pub fn closed_form_strongly_convex(
    params: &ProblemParams,
    delta: f64,
    t: u64,
    alpha_grid: &[f64],
) -> Result<AccountResult> {
    let violations = closed_form_violations(params, delta)?;
    if !violations.is_empty() {
        return Err(Error::PreconditionViolated(violations));
    }
    let s = params.step_sensitivity();
    let sig2 = params.sigma * params.sigma;
    let composed = t as f64 * s * s / (2.0 * sig2);
    let saturated =
        8.0 * params.clip * params.radius * (2.0 * params.d as f64).sqrt() / (params.eta * params.n as f64 * sig2);
    let per_alpha = composed.min(saturated);
    let curve = RdpCurve::from_fn(alpha_grid.to_vec(), |a| Ok(a.get() * per_alpha))?;
    let mut r = AccountResult::from_curve(Analysis::ClosedForm, curve, delta, delta / 2.0, delta / 2.0)?;
    let window = closed_form_window(params);
    if composed <= saturated || t < window {
        r.tau_star = Some(0);
        r.beta = Some(1.0);
    } else {
        r.tau_star = Some(t - window);
        r.beta = Some(0.5);
    }
    r.theta = Some(crate::params::theta_star(params.lipschitz_c()?)?);
    Ok(r)
}
