//! JSON run configuration.
//!
//! Unknown fields anywhere are rejected, and `version` must be `"1"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accountant::{default_theta_grid, AccountOptions, Analysis};
use crate::error::{Error, Result};
use crate::params::{ConvexityClass, ProblemParams};
use crate::rdp::{self, default_alpha_grid};
use crate::verify::{default_suite, CheckSpec};
use crate::zogd::{BetaSchedule, FrameMode};

pub const CONFIG_VERSION: &str = "1";

/// How an order or slack grid is produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    #[default]
    Default,
    Explicit(Vec<f64>),
    /// `points` values from `lo` to `hi`, equally spaced in log scale.
    Geometric {
        lo: f64,
        hi: f64,
        points: usize,
    },
}

impl GridSpec {
    fn expand(&self, default: fn() -> Vec<f64>) -> Result<Vec<f64>> {
        match self {
            GridSpec::Default => Ok(default()),
            GridSpec::Explicit(v) => Ok(v.clone()),
            GridSpec::Geometric { lo, hi, points } => {
                if !(*lo > 0.0 && hi > lo && hi.is_finite() && *points >= 2) {
                    return Err(Error::Config(format!(
                        "bad geometric grid [{lo}, {hi}] with {points} points"
                    )));
                }
                let r = (hi / lo).ln();
                Ok((0..*points)
                    .map(|i| lo * (r * i as f64 / (*points - 1) as f64).exp())
                    .collect())
            }
        }
    }
}

/// Search knobs other than the grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSettings {
    pub delta_f_fraction: f64,
    pub exhaustive_limit: u64,
    pub minibatch_exhaustive_limit: u64,
    pub beta_points: usize,
    pub include_public_branch: bool,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let o = AccountOptions::default();
        Self {
            delta_f_fraction: o.delta_f_fraction,
            exhaustive_limit: o.exhaustive_limit,
            minibatch_exhaustive_limit: o.minibatch_exhaustive_limit,
            beta_points: o.beta_points,
            include_public_branch: o.include_public_branch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Quadratic,
    Logistic,
}

fn one() -> u64 {
    1
}

fn default_beta() -> BetaSchedule {
    BetaSchedule::Constant(1.0)
}

fn default_mode() -> FrameMode {
    FrameMode::Stiefel
}

fn default_norm() -> f64 {
    1.0
}

fn default_reg() -> f64 {
    0.1
}

/// Inputs of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub loss: LossKind,
    /// Number of steps.
    pub t: u64,
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default = "default_beta")]
    pub beta_schedule: BetaSchedule,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: FrameMode,
    /// Also run the adjacent process and report distances.
    #[serde(default)]
    pub paired: bool,
    #[serde(default)]
    pub replaced_index: usize,
    /// Replacement row; the negated original row when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<Vec<f64>>,
    /// Norm of every dataset row.
    #[serde(default = "default_norm")]
    pub feature_norm: f64,
    /// Ridge term of the logistic loss.
    #[serde(default = "default_reg")]
    pub reg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub checks: Vec<CheckSpec>,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            checks: default_suite(),
        }
    }
}

/// Fallback output paths, used when `--out` is not given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub account: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: String,
    pub problem: ProblemParams,
    pub delta: f64,
    #[serde(default)]
    pub t_grid: Vec<u64>,
    #[serde(default)]
    pub alpha_grid: GridSpec,
    #[serde(default)]
    pub theta_grid: GridSpec,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyBlock>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {:?}, expected {CONFIG_VERSION:?}",
                c.version
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn account_options(&self) -> Result<AccountOptions> {
        let o = AccountOptions {
            alpha_grid: self.alpha_grid.expand(default_alpha_grid)?,
            theta_grid: self.theta_grid.expand(default_theta_grid)?,
            delta_f_fraction: self.search.delta_f_fraction,
            exhaustive_limit: self.search.exhaustive_limit,
            minibatch_exhaustive_limit: self.search.minibatch_exhaustive_limit,
            beta_points: self.search.beta_points,
            include_public_branch: self.search.include_public_branch,
        };
        o.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(o)
    }

    /// Checks everything `account` needs before any computation starts.
    pub fn validate_account(&self) -> Result<()> {
        self.problem.validate()?;
        rdp::check_delta(self.delta)?;
        if self.t_grid.is_empty() || self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("t_grid must be non-empty and strictly ascending".into()));
        }
        if self.analyses.is_empty() {
            return Err(Error::Config("analyses list is empty".into()));
        }
        for a in &self.analyses {
            match a {
                Analysis::ClosedForm if self.problem.convexity != ConvexityClass::StronglyConvex => {
                    return Err(Error::Config("closed_form needs a strongly convex problem".into()));
                }
                Analysis::MinibatchHiddenState if self.problem.batch.is_none() => {
                    return Err(Error::Config("minibatch_hidden_state needs problem.batch".into()));
                }
                _ => {}
            }
        }
        self.account_options()?;
        Ok(())
    }

    pub fn simulate_block(&self) -> Result<&SimulateBlock> {
        let s = self
            .simulate
            .as_ref()
            .ok_or_else(|| Error::Config("missing simulate block".into()))?;
        if s.trials == 0 {
            return Err(Error::Config("simulate.trials must be positive".into()));
        }
        if s.replaced_index >= self.problem.n {
            return Err(Error::Config(format!(
                "replaced_index {} outside [0, {})",
                s.replaced_index, self.problem.n
            )));
        }
        s.beta_schedule.validate(s.t)?;
        Ok(s)
    }

    /// Explicit checks, or the default suite when the block is absent.
    pub fn checks(&self) -> Vec<CheckSpec> {
        self.verify.clone().unwrap_or_default().checks
    }
}
