//! Problem parameters and the constants derived from them.
//!
//! Every scalar the accountant and the simulator share lives in
//! [`ProblemParams`]. Validation is eager: out-of-domain values are rejected
//! with a typed [`Error`] instead of propagating NaN or infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when comparing a step size against its bound, so
/// that `eta = K / M` typed by hand is not rejected for a rounding ulp.
const STEP_BOUND_SLACK: f64 = 1e-12;

/// Convexity class of the per-sample losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityClass {
    Nonconvex,
    Convex,
    StronglyConvex,
}

impl ConvexityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvexityClass::Nonconvex => "nonconvex",
            ConvexityClass::Convex => "convex",
            ConvexityClass::StronglyConvex => "strongly_convex",
        }
    }
}

/// Scalar description of one Noisy-ZOGD problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Model dimension.
    pub d: usize,
    /// Dataset size.
    pub n: usize,
    /// Number of orthonormal update directions per step.
    pub k: usize,
    /// Step size.
    pub eta: f64,
    /// Total noise scale.
    pub sigma: f64,
    /// Clipping threshold on each directional finite difference.
    pub clip: f64,
    /// Radius of the projection ball.
    pub radius: f64,
    /// Smoothness constant of the per-sample losses.
    pub smoothness: f64,
    /// Strong-convexity constant (zero unless strongly convex).
    #[serde(default)]
    pub strong_convexity: f64,
    /// Finite-difference perturbation scale; zero selects the analytic limit.
    #[serde(default)]
    pub xi: f64,
    /// Minibatch size for the subsampled variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    pub convexity: ConvexityClass,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be non-negative and finite, got {v}"
        )))
    }
}

impl ProblemParams {
    /// Checks every structural invariant that does not depend on the analysis.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("d, n and k must be positive".into()));
        }
        if self.k > self.d {
            return Err(Error::InvalidParameter(format!(
                "k = {} exceeds d = {}",
                self.k, self.d
            )));
        }
        positive("eta", self.eta)?;
        positive("sigma", self.sigma)?;
        positive("clip", self.clip)?;
        positive("radius", self.radius)?;
        positive("smoothness", self.smoothness)?;
        non_negative("strong_convexity", self.strong_convexity)?;
        non_negative("xi", self.xi)?;
        if self.strong_convexity > self.smoothness {
            return Err(Error::InvalidParameter(format!(
                "strong convexity {} exceeds smoothness {}",
                self.strong_convexity, self.smoothness
            )));
        }
        let strongly = self.convexity == ConvexityClass::StronglyConvex;
        if strongly != (self.strong_convexity > 0.0) {
            return Err(Error::InvalidParameter(
                "strong_convexity must be positive exactly when convexity is strongly_convex".into(),
            ));
        }
        if let Some(b) = self.batch {
            if b == 0 || b > self.n {
                return Err(Error::InvalidParameter(format!(
                    "batch {b} must lie in [1, n = {}]",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Additional requirement of the hidden-state analysis: `d >= 2K`.
    pub fn require_hidden_state(&self) -> Result<()> {
        self.validate()?;
        if self.d < 2 * self.k {
            return Err(Error::InvalidParameter(format!(
                "hidden-state accounting needs d >= 2k (d = {}, k = {})",
                self.d, self.k
            )));
        }
        Ok(())
    }

    /// Lipschitz constant of the first-order map for this parameter set.
    pub fn lipschitz_c(&self) -> Result<f64> {
        lipschitz_c(self.convexity, self.eta, self.k, self.smoothness, self.strong_convexity)
    }

    /// Additive slack `eta * M * xi` of the zeroth-order update map.
    pub fn c2(&self) -> f64 {
        self.eta * self.smoothness * self.xi
    }

    /// Per-step replacement sensitivity `2 * clip / n` of the averaged estimator.
    pub fn step_sensitivity(&self) -> f64 {
        2.0 * self.clip / self.n as f64
    }

    /// `min(2R, 2 eta clip t / sqrt(K))`, the almost-sure distance between
    /// coupled adjacent iterates after `t` steps.
    pub fn winf_bound(&self, t: usize) -> f64 {
        let drift = 2.0 * self.eta * self.clip * t as f64 / (self.k as f64).sqrt();
        drift.min(2.0 * self.radius)
    }

    /// Window length `ceil(n R sqrt(2d) / (clip eta))` at which the
    /// strongly convex bound saturates.
    pub fn saturation_window(&self) -> u64 {
        let x = self.n as f64 * self.radius * (2.0 * self.d as f64).sqrt() / (self.clip * self.eta);
        x.ceil() as u64
    }
}

/// Lipschitz constant `c` of `w -> w - (eta/K) grad L(w)` for each convexity class.
///
/// Returns `1 + eta M / K` (nonconvex), `1` (convex, `eta <= 2K/M`), or
/// `1 - eta m / K` (strongly convex, `eta <= K/M`).
pub fn lipschitz_c(class: ConvexityClass, eta: f64, k: usize, smoothness: f64, strong_convexity: f64) -> Result<f64> {
    non_negative("eta", eta)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let k = k as f64;
    match class {
        ConvexityClass::Nonconvex => Ok(1.0 + eta * smoothness / k),
        ConvexityClass::Convex => {
            let bound = 2.0 * k / smoothness;
            if eta > bound * (1.0 + STEP_BOUND_SLACK) {
                return Err(Error::StepSizeTooLarge {
                    eta,
                    bound,
                    class: "convex",
                });
            }
            Ok(1.0)
        }
        ConvexityClass::StronglyConvex => {
            if strong_convexity <= 0.0 {
                return Err(Error::InvalidParameter(
                    "strongly convex class needs a positive strong-convexity constant".into(),
                ));
            }
            let bound = k / smoothness;
            if eta > bound * (1.0 + STEP_BOUND_SLACK) {
                return Err(Error::StepSizeTooLarge {
                    eta,
                    bound,
                    class: "strongly convex",
                });
            }
            Ok(1.0 - eta * strong_convexity / k)
        }
    }
}

/// Slack `(1 - c^2) / (1 + c^2)` that makes the generalized coefficient exactly one.
pub fn theta_star(c: f64) -> Result<f64> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("c must be non-negative, got {c}")));
    }
    if c >= 1.0 {
        return Err(Error::CNotContractive(c));
    }
    let c2 = c * c;
    Ok((1.0 - c2) / (1.0 + c2))
}

/// High-probability generalized Lipschitz coefficient
/// `sqrt(1 - (1 - c^2) K/d + theta (1 + c^2) K/d)`.
pub fn cbar1(c: f64, k: usize, d: usize, theta: f64) -> Result<f64> {
    if k == 0 || d < 2 * k {
        return Err(Error::InvalidParameter(format!("need d >= 2k >= 2 (k = {k}, d = {d})")));
    }
    non_negative("theta", theta)?;
    non_negative("c", c)?;
    let ratio = k as f64 / d as f64;
    let c2 = c * c;
    let radicand = 1.0 - (1.0 - c2) * ratio + theta * (1.0 + c2) * ratio;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

/// Constants of the hidden-state analysis at a chosen concentration slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c: f64,
    pub cbar1: f64,
    pub c2: f64,
    pub theta: f64,
}

impl DerivedConstants {
    pub fn new(params: &ProblemParams, theta: f64) -> Result<Self> {
        params.require_hidden_state()?;
        let c = params.lipschitz_c()?;
        Ok(Self {
            c,
            cbar1: cbar1(c, params.k, params.d, theta)?,
            c2: params.c2(),
            theta,
        })
    }
}
