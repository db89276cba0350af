//! Commands behind the `zopabi` binary.
//!
//! Exit codes: 0 success, 1 failing verification or numerical failure,
//! 2 configuration error, 3 infeasible problem.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use crate::accountant::{account_curve, AccountResult};
use crate::config::{Config, LossKind, SimulateBlock};
use crate::error::{Error, Result};
use crate::stats::mean_se;
use crate::verify::{to_jsonl, CheckSpec, VerificationReport};
use crate::zogd::{
    gaussian_dataset, run, run_adjacent_pair, LogisticLoss, LossOracle, NoiseScaling, QuadraticLoss, RunConfig,
    Trajectory,
};

/// Largest `n * d` the simulator will materialize (2 GiB of `f64`).
pub const MAX_DATASET_ENTRIES: usize = 1 << 28;

pub const ACCOUNT_HEADER: &str = "T,analysis,epsilon,delta,alpha_star,tau_star,theta,beta,delta_p,delta_f";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Account,
    Simulate,
    Verify,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::GridMismatch => 2,
        Error::StepSizeTooLarge { .. }
        | Error::CNotContractive(_)
        | Error::NegativeRadicand(_)
        | Error::NoFeasibleK { .. }
        | Error::InfeasibleSchedule(_)
        | Error::NoFeasibleSchedule(_)
        | Error::PreconditionViolated(_) => 3,
        _ => 1,
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(out: &mut String, t: u64, label: &str, r: &AccountResult) {
    let _ = writeln!(
        out,
        "{t},{label},{},{},{},{},{},{},{},{}",
        r.epsilon,
        r.delta,
        r.alpha_star,
        opt(r.tau_star),
        opt(r.theta),
        opt(r.beta),
        r.delta_p,
        r.delta_f
    );
}

/// Evaluates every configured analysis on the horizon grid and renders the
/// CSV, one row per `(T, analysis)` plus a `min` row per `T`.
pub fn cmd_account(cfg: &Config) -> Result<String> {
    cfg.validate_account()?;
    let opts = cfg.account_options()?;
    let mut out = String::from(ACCOUNT_HEADER);
    out.push('\n');
    for &t in &cfg.t_grid {
        let rows = account_curve(&cfg.problem, cfg.delta, &[t], &cfg.analyses, &opts)?;
        let row = &rows[0];
        for r in &row.results {
            csv_row(&mut out, t, r.analysis.as_str(), r);
        }
        let best = row.min();
        csv_row(&mut out, t, "min", best);
        eprintln!("T={t} min epsilon={} ({})", best.epsilon, best.analysis);
    }
    Ok(out)
}

/// Trajectory CSV of trial 0 and a JSON summary over all trials.
pub fn cmd_simulate(cfg: &Config) -> Result<(String, String)> {
    let block = cfg.simulate_block()?;
    let p = &cfg.problem;
    if p.n.checked_mul(p.d).is_none_or(|x| x > MAX_DATASET_ENTRIES) {
        return Err(Error::Config(format!(
            "dataset of {} x {} entries exceeds the simulation limit of {MAX_DATASET_ENTRIES}",
            p.n, p.d
        )));
    }
    let data = gaussian_dataset(p.n, p.d, block.feature_norm, block.seed)?;
    match block.loss {
        LossKind::Quadratic => {
            let loss = QuadraticLoss::new(p.smoothness, p.strong_convexity, data)?;
            simulate_with(cfg, block, &loss)
        }
        LossKind::Logistic => {
            let loss = LogisticLoss::with_teacher(data, block.reg, block.seed)?;
            simulate_with(cfg, block, &loss)
        }
    }
}

fn simulate_with<L: LossOracle>(cfg: &Config, block: &SimulateBlock, loss: &L) -> Result<(String, String)> {
    let p = &cfg.problem;
    let replacement: Vec<f64> = match &block.replacement {
        Some(v) => v.clone(),
        None => loss.features(block.replaced_index).iter().map(|v| -v).collect(),
    };
    let runs: Vec<(Trajectory, Option<Trajectory>)> = (0..block.trials)
        .into_par_iter()
        .map(|trial| {
            let cfg_run = RunConfig {
                steps: block.t,
                beta: block.beta_schedule.clone(),
                seed: block.seed,
                trial,
                mode: block.mode,
                init: None,
                record: false,
                noise: NoiseScaling::Exact,
            };
            if block.paired {
                let (a, b) = run_adjacent_pair(p, loss, block.replaced_index, &replacement, &cfg_run)?;
                Ok((a, Some(b)))
            } else {
                Ok((run(p, loss, &cfg_run)?, None))
            }
        })
        .collect::<Result<_>>()?;

    let mut csv = Vec::new();
    runs[0].0.write_csv(&mut csv, loss, runs[0].1.as_ref())?;
    let csv = String::from_utf8(csv).map_err(|e| Error::Io(e.to_string()))?;

    let steps = block.t as usize;
    let mut mean_by_t = Vec::with_capacity(steps + 1);
    let mut se_by_t = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        let xs: Vec<f64> = runs.iter().map(|(a, _)| loss.mean_loss(&a.iterates[t])).collect();
        let m = mean_se(&xs);
        mean_by_t.push(m.mean);
        se_by_t.push(m.se);
    }
    let finals: Vec<f64> = runs.iter().map(|(a, _)| loss.mean_loss(a.last())).collect();
    let mut summary = json!({
        "trials": block.trials,
        "steps": block.t,
        "final_loss": mean_se(&finals),
        "mean_loss_by_t": mean_by_t,
        "se_loss_by_t": se_by_t,
    });
    if block.paired {
        let worst = runs
            .iter()
            .filter_map(|(a, b)| b.as_ref().map(|b| a.distances(b)))
            .flat_map(|d| d.into_iter().enumerate().map(|(t, x)| x - p.winf_bound(t)))
            .fold(f64::NEG_INFINITY, f64::max);
        let max_dist = runs
            .iter()
            .filter_map(|(a, b)| b.as_ref().map(|b| a.distances(b)))
            .flatten()
            .fold(0.0, f64::max);
        summary["max_distance"] = json!(max_dist);
        summary["max_excess_over_winf_bound"] = json!(worst);
        summary["winf_bound_final"] = json!(p.winf_bound(steps));
    }
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    Ok((csv, json + "\n"))
}

/// Runs the configured checks. Returns the JSONL text and whether all passed.
pub fn cmd_verify(cfg: &Config) -> Result<(String, bool)> {
    cmd_verify_with(cfg, NoiseScaling::Exact)
}

/// [`cmd_verify`] with a noise-scaling hook for mutation tests.
pub fn cmd_verify_with(cfg: &Config, scaling: NoiseScaling) -> Result<(String, bool)> {
    let checks: Vec<CheckSpec> = cfg.checks();
    let mut reports: Vec<VerificationReport> = Vec::with_capacity(checks.len());
    for c in &checks {
        let r = c.run_with(scaling)?;
        eprintln!("{}: {}", c.name(), if r.pass { "pass" } else { "FAIL" });
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.pass);
    Ok((to_jsonl(&reports)?, all))
}

fn out_path(cmd: Command, cfg: &Config, out: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = out {
        return Ok(p.to_path_buf());
    }
    let fallback = match cmd {
        Command::Account => &cfg.output.account,
        Command::Simulate => &cfg.output.simulate,
        Command::Verify => &cfg.output.verify,
    };
    fallback
        .clone()
        .ok_or_else(|| Error::Config("no output path: pass --out or set output in the config".into()))
}

/// Sibling path of the simulation summary: `<out>` with its extension
/// replaced by `.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (std::fs::canonicalize(a), std::fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command, config: &Path, out: Option<&Path>) -> Result<i32> {
    let cfg = Config::load(config)?;
    let path = out_path(cmd, &cfg, out)?;
    match cmd {
        Command::Account => {
            let csv = cmd_account(&cfg)?;
            write(&path, &csv)?;
            Ok(0)
        }
        Command::Simulate => {
            let sibling = summary_path(&path);
            if same_file(&sibling, config) || same_file(&path, config) {
                return Err(Error::Config(format!(
                    "output {} or its summary would overwrite the config",
                    path.display()
                )));
            }
            let (csv, json) = cmd_simulate(&cfg)?;
            write(&path, &csv)?;
            write(&sibling, &json)?;
            Ok(0)
        }
        Command::Verify => {
            let (jsonl, all) = cmd_verify(&cfg)?;
            write(&path, &jsonl)?;
            Ok(if all { 0 } else { 1 })
        }
    }
}

/// Runs a command end to end, reporting errors on standard error.
pub fn run_command(cmd: Command, config: &Path, out: Option<&Path>) -> i32 {
    match execute(cmd, config, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::PreconditionViolated(vec![])), 3);
        assert_eq!(exit_code(&Error::NoFeasibleK { lower: 1.0, upper: 0 }), 3);
        assert_eq!(
            exit_code(&Error::QuadratureNonConvergence {
                estimate: 0.0,
                error: 1.0
            }),
            1
        );
    }

    #[test]
    fn summary_sibling() {
        assert_eq!(summary_path(Path::new("a/b.csv")), PathBuf::from("a/b.summary.json"));
        assert_eq!(summary_path(Path::new("b")), PathBuf::from("b.summary.json"));
        assert_eq!(
            summary_path(Path::new("b.summary.json")),
            PathBuf::from("b.summary.summary.json")
        );
    }
}
