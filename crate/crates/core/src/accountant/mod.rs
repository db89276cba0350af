//! Privacy accounting for Noisy-ZOGD.
//!
//! [`optimize_hidden_state`] searches the geometric schedule family for the
//! smallest `epsilon` under the hidden-state analysis. The public-state
//! baselines and the strongly convex closed form live in [`baselines`];
//! [`account_curve`] evaluates everything over a grid of horizons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::rdp::{self, RdpCurve};

pub mod baselines;
pub mod schedule;
mod search;

pub use baselines::{closed_form_strongly_convex, composition_baseline, output_perturbation, CompositionVariant};
pub use schedule::{check_schedule, rho_for_schedule, Schedule, ScheduleFamily};
pub use search::{minibatch_hidden_state, optimize_hidden_state};

/// Which analysis produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    HiddenState,
    ClosedForm,
    CompositionBeta1,
    CompositionBeta0,
    OutputPerturbation,
    MinibatchHiddenState,
}

impl Analysis {
    pub const ALL: [Analysis; 6] = [
        Analysis::HiddenState,
        Analysis::ClosedForm,
        Analysis::CompositionBeta1,
        Analysis::CompositionBeta0,
        Analysis::OutputPerturbation,
        Analysis::MinibatchHiddenState,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::HiddenState => "hidden_state",
            Analysis::ClosedForm => "closed_form",
            Analysis::CompositionBeta1 => "composition_beta1",
            Analysis::CompositionBeta0 => "composition_beta0",
            Analysis::OutputPerturbation => "output_perturbation",
            Analysis::MinibatchHiddenState => "minibatch_hidden_state",
        }
    }
}

impl std::fmt::Display for Analysis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `(epsilon, delta)` guarantee and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountResult {
    pub epsilon: f64,
    pub delta: f64,
    pub analysis: Analysis,
    pub alpha_star: f64,
    pub tau_star: Option<u64>,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub delta_p: f64,
    pub delta_f: f64,
    /// Pre-conversion divergence curve of the chosen schedule.
    pub rdp: RdpCurve,
    pub schedule: Option<ScheduleFamily>,
}

impl AccountResult {
    /// `rho` at the selected order.
    pub fn rho_star(&self) -> f64 {
        self.rdp.get(self.alpha_star).unwrap_or(f64::NAN)
    }

    /// Converts `curve` at `delta_p` and fills the bookkeeping fields.
    pub(crate) fn from_curve(
        analysis: Analysis,
        curve: RdpCurve,
        delta: f64,
        delta_p: f64,
        delta_f: f64,
    ) -> Result<Self> {
        let (epsilon, alpha_star) = rdp::rdp_to_dp(&curve, delta_p)?;
        Ok(Self {
            epsilon,
            delta,
            analysis,
            alpha_star,
            tau_star: None,
            theta: None,
            beta: None,
            delta_p,
            delta_f,
            rdp: curve,
            schedule: None,
        })
    }
}

/// Geometric grid of 48 concentration slacks in `[0.05, 20]`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..48).map(|i| 0.05 * 400f64.powf(i as f64 / 47.0)).collect()
}

/// Search settings shared by every analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccountOptions {
    pub alpha_grid: Vec<f64>,
    /// Slacks searched when `c >= 1`; contractive problems use the optimal slack only.
    pub theta_grid: Vec<f64>,
    /// Largest share of `delta` the failure probability may take.
    pub delta_f_fraction: f64,
    /// Window lengths up to this bound are searched exhaustively on the
    /// Gaussian path; longer ones on a geometric grid with local refinement.
    pub exhaustive_limit: u64,
    /// Same bound for the subsampled path.
    pub minibatch_exhaustive_limit: u64,
    /// Number of tabulated `beta` values on the subsampled path.
    pub beta_points: usize,
    /// Whether the `tau = 0`, `beta = 1` public-state schedule is admitted.
    pub include_public_branch: bool,
}

impl Default for AccountOptions {
    fn default() -> Self {
        Self {
            alpha_grid: rdp::default_alpha_grid(),
            theta_grid: default_theta_grid(),
            delta_f_fraction: 0.5,
            exhaustive_limit: 1 << 20,
            minibatch_exhaustive_limit: 4096,
            beta_points: 64,
            include_public_branch: true,
        }
    }
}

impl AccountOptions {
    pub fn validate(&self) -> Result<()> {
        RdpCurve::zero(self.alpha_grid.clone())?;
        if self.theta_grid.is_empty() || self.theta_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParameter(
                "theta grid must be non-empty and non-negative".into(),
            ));
        }
        if !(self.delta_f_fraction > 0.0 && self.delta_f_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_f_fraction must lie in (0, 1), got {}",
                self.delta_f_fraction
            )));
        }
        if self.exhaustive_limit == 0 || self.minibatch_exhaustive_limit == 0 || self.beta_points < 2 {
            return Err(Error::InvalidParameter("search limits must be positive".into()));
        }
        Ok(())
    }
}

/// `min(2R, 2 eta clip t / sqrt(K))`.
pub fn winf_bound(t: u64, params: &ProblemParams) -> f64 {
    params.winf_bound(t as usize)
}

/// One row of [`account_curve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: u64,
    pub results: Vec<AccountResult>,
    /// Index into `results` of the smallest epsilon.
    pub best: usize,
}

impl CurveRow {
    pub fn min(&self) -> &AccountResult {
        &self.results[self.best]
    }
}

/// Evaluates a single analysis at horizon `t`.
pub fn evaluate(
    analysis: Analysis,
    params: &ProblemParams,
    delta: f64,
    t: u64,
    opts: &AccountOptions,
) -> Result<AccountResult> {
    match analysis {
        Analysis::HiddenState => optimize_hidden_state(params, delta, t, opts),
        Analysis::MinibatchHiddenState => minibatch_hidden_state(params, delta, t, opts),
        Analysis::ClosedForm => closed_form_strongly_convex(params, delta, t, &opts.alpha_grid),
        Analysis::CompositionBeta1 => {
            composition_baseline(params, delta, t, CompositionVariant::Beta1, &opts.alpha_grid)
        }
        Analysis::CompositionBeta0 => {
            composition_baseline(params, delta, t, CompositionVariant::Beta0, &opts.alpha_grid)
        }
        Analysis::OutputPerturbation => output_perturbation(params, delta, &opts.alpha_grid),
    }
}

/// Evaluates `analyses` at every horizon of `t_grid` (non-empty, ascending).
///
/// Ties for the overall minimum go to the analysis listed first.
pub fn account_curve(
    params: &ProblemParams,
    delta: f64,
    t_grid: &[u64],
    analyses: &[Analysis],
    opts: &AccountOptions,
) -> Result<Vec<CurveRow>> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "T grid must be non-empty and strictly ascending".into(),
        ));
    }
    if analyses.is_empty() {
        return Err(Error::InvalidParameter("no analyses requested".into()));
    }
    t_grid
        .iter()
        .map(|&t| {
            let results = analyses
                .iter()
                .map(|&a| evaluate(a, params, delta, t, opts))
                .collect::<Result<Vec<_>>>()?;
            let best = results
                .iter()
                .enumerate()
                .fold(0, |b, (i, r)| if r.epsilon < results[b].epsilon { i } else { b });
            Ok(CurveRow { t, results, best })
        })
        .collect()
}
