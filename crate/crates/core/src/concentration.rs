//! Beta tail bounds, the failure probability `delta_f`, and the feasibility
//! constraints on `K` and `xi` for the strongly convex closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ConvexityClass, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Upper,
    Lower,
}

/// Inputs of the union-bounded failure probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundInputs {
    pub k: usize,
    pub d: usize,
    pub theta: f64,
    /// Number of union-bounded steps, `T - tau`.
    pub steps: u64,
}

fn tail_exponent(k: usize, d: usize, eps: f64) -> Result<f64> {
    if k == 0 || d < 2 * k {
        return Err(Error::InvalidParameter(format!(
            "tail bound needs d >= 2k >= 2 (k = {k}, d = {d})"
        )));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail deviation must be >= 0, got {eps}"
        )));
    }
    let (k, d) = (k as f64, d as f64);
    Ok(3.0 * eps * eps * k * d / (12.0 * (d - k) + 8.0 * (d - 2.0 * k) * eps))
}

/// `exp(-3 eps^2 K d / (12 (d - K) + 8 (d - 2K) eps))`, bounding
/// `P(X > (1 + eps) K/d)` or `P(X < (1 - eps) K/d)` for
/// `X ~ Beta(K/2, (d - K)/2)`. The same expression covers both sides.
pub fn beta_tail(k: usize, d: usize, eps: f64, _side: Tail) -> Result<f64> {
    Ok((-tail_exponent(k, d, eps)?).exp())
}

/// `2 (T - tau) exp(-3 theta^2 d K / (12 (d - K) + 8 theta (d - 2K)))`.
///
/// Raw value; may exceed one.
pub fn delta_f(inputs: &TailBoundInputs) -> Result<f64> {
    let e = tail_exponent(inputs.k, inputs.d, inputs.theta)?;
    Ok(2.0 * inputs.steps as f64 * (-e).exp())
}

/// `ln(delta_f / steps)`, the per-step log failure mass, for callers that
/// scan many step counts.
pub(crate) fn log_delta_f_per_step(k: usize, d: usize, theta: f64) -> Result<f64> {
    Ok(2f64.ln() - tail_exponent(k, d, theta)?)
}

/// Rounds up, treating values within a few ulps of an integer as that integer.
pub(crate) fn ceil_robust(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `ceil(M R n sqrt(2d) / clip)`.
pub fn min_k_window(params: &ProblemParams) -> u64 {
    let x = params.smoothness * params.radius * params.n as f64 * (2.0 * params.d as f64).sqrt() / params.clip;
    ceil_robust(x) as u64
}

/// Lower bound `max(20 (1+c^2)^2 / (3 (1-c^2)^2) ln(4/delta ceil(M R n sqrt(2d)/clip)), 1)`
/// with `c = 1 - m/M`.
pub fn min_k_lower_bound(params: &ProblemParams, delta: f64) -> Result<f64> {
    params.validate()?;
    crate::rdp::check_delta(delta)?;
    if params.convexity != ConvexityClass::StronglyConvex {
        return Err(Error::InvalidParameter(
            "min_k applies to strongly convex losses only".into(),
        ));
    }
    let c = 1.0 - params.strong_convexity / params.smoothness;
    if c >= 1.0 {
        return Err(Error::CNotContractive(c));
    }
    let c2 = c * c;
    let coef = 20.0 * (1.0 + c2).powi(2) / (3.0 * (1.0 - c2).powi(2));
    let window = min_k_window(params) as f64;
    Ok((coef * (4.0 / delta * window).ln()).max(1.0))
}

/// Smallest integer `K` meeting [`min_k_lower_bound`]; an error if it exceeds `d/2`.
pub fn min_k(params: &ProblemParams, delta: f64) -> Result<usize> {
    let lower = min_k_lower_bound(params, delta)?;
    let upper = params.d / 2;
    let k = ceil_robust(lower);
    if !k.is_finite() || k > upper as f64 {
        return Err(Error::NoFeasibleK { lower, upper });
    }
    Ok(k as usize)
}

/// Largest admissible perturbation scale `2 clip / (n eta M sqrt(2d))`.
pub fn xi_max(params: &ProblemParams) -> f64 {
    2.0 * params.clip / (params.n as f64 * params.eta * params.smoothness * (2.0 * params.d as f64).sqrt())
}
