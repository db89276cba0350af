//! Monte Carlo checks of the probabilistic facts behind the accountant.
//!
//! Each check is deterministic given its arguments and seed: sample `i`
//! draws from streams keyed by `(seed, i)`, so results do not depend on the
//! number of worker threads.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::concentration::{delta_f, TailBoundInputs};
use crate::error::{Error, Result};
use crate::params::{theta_star, ConvexityClass, ProblemParams};
use crate::stats::{beta_gamma_ratio, ecdf_at, ks_two_sample, mean_se, quantile};
use crate::zogd::rng::{stream, Purpose};
use crate::zogd::{
    gaussian_dataset, run, run_adjacent_pair, sample_frame, zo_update_map, FrameMode, LossOracle, NoiseScaling,
    QuadraticLoss, RunConfig,
};

/// Floating-point slack for almost-sure bounds.
pub const AS_SLACK: f64 = 1e-9;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub configuration: Value,
    pub samples: u64,
    /// Observed statistic compared against `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    /// Secondary numbers (means, quantiles, CDFs).
    pub details: Value,
}

fn chi2<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(dof).expect("positive dof").sample(rng)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Lower-triangular Bartlett factor `A` with `A A^T ~ Wishart_k(dof, I)`.
fn bartlett<R: Rng + ?Sized>(rng: &mut R, k: usize, dof: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        a[(i, i)] = chi2(rng, dof - i as f64).sqrt();
        for j in 0..i {
            a[(i, j)] = normal(rng);
        }
    }
    a
}

/// `(sum_k <A, u_k>^2, sum_k <B, u_k>^2)` for orthogonal unit `A, B` and a
/// uniform `K`-frame in dimension `d`, drawn from the 2 x 2 Gram matrices of
/// the first `K` and remaining `d - K` coordinates of a uniform 2-frame.
pub fn sample_projection_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize) -> (f64, f64) {
    let top = bartlett(rng, 2, k as f64);
    let bot = bartlett(rng, 2, (d - k) as f64);
    let a = &top * top.transpose();
    let b = &bot * bot.transpose();
    let s = &a + &b;
    let upsilon = a[(0, 0)] / s[(0, 0)];
    let r = s[(0, 1)] / s[(0, 0)];
    let top2 = a[(1, 1)] - 2.0 * r * a[(0, 1)] + r * r * a[(0, 0)];
    let full2 = s[(1, 1)] - r * s[(0, 1)];
    (upsilon, top2 / full2)
}

/// Realized coefficient `|v - (1 - c) U U^T v| / |v|` for an i.i.d. sphere
/// frame, drawn from the first coordinates of the directions and the
/// Wishart Gram matrix of the rest.
pub fn sample_iid_coefficient<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize, c: f64) -> f64 {
    let lambda = 1.0 - c;
    let g: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
    let a = bartlett(rng, k, (d - 1) as f64);
    let mut s = 0.0;
    let mut coef = DVector::zeros(k);
    for i in 0..k {
        let wii: f64 = (0..=i).map(|j| a[(i, j)] * a[(i, j)]).sum();
        let norm2 = g[i] * g[i] + wii;
        s += g[i] * g[i] / norm2;
        coef[i] = g[i] / norm2;
    }
    let rest = a.transpose() * coef;
    ((1.0 - lambda * s).powi(2) + lambda * lambda * rest.norm_squared()).sqrt()
}

/// Same coefficient for an orthonormal frame: `sqrt(1 - (1 - c^2) S)`,
/// `S ~ Beta(K/2, (d-K)/2)`.
pub fn sample_orthonormal_coefficient<R: Rng + ?Sized>(rng: &mut R, d: usize, k: usize, c: f64) -> f64 {
    let x = chi2(rng, k as f64);
    let y = chi2(rng, (d - k) as f64);
    (1.0 - (1.0 - c * c) * x / (x + y)).sqrt()
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.into()))
    }
}

/// The projection mass of a fixed unit vector onto a Stiefel frame against
/// `Beta(K/2, (d-K)/2)` samples drawn as Gamma ratios.
///
/// Passes iff the two-sample KS p-value exceeds 0.01 and the mean is within
/// 3 SE of `K/d`. A complete frame (`K = d`) must give exactly 1.
pub fn check_beta_identity(d: usize, k: usize, samples: u64, seed: u64) -> Result<VerificationReport> {
    require(
        k >= 1 && k <= d,
        format!("beta identity needs 1 <= k <= d, got k = {k}, d = {d}"),
    )?;
    require(samples >= 2, "beta identity needs at least two samples")?;
    let a = vec![1.0 / (d as f64).sqrt(); d];
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let f = sample_frame(d, k, FrameMode::Stiefel, &mut stream(seed, Purpose::Frame, i, 0))?;
            Ok(f.projection_mass(&a))
        })
        .collect::<Result<_>>()?;
    let m = mean_se(&xs);
    let expect = k as f64 / d as f64;
    let configuration = json!({"d": d, "k": k});
    if k == d {
        let dev = xs.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        return Ok(VerificationReport {
            check: "beta_identity".into(),
            configuration,
            samples,
            statistic: dev,
            threshold: 1e-10,
            pass: dev <= 1e-10,
            seed,
            details: json!({"mean": m.mean, "expected_mean": 1.0}),
        });
    }
    let (ba, bb) = (k as f64 / 2.0, (d - k) as f64 / 2.0);
    let oracle: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| beta_gamma_ratio(&mut stream(seed, Purpose::Verify, i, 0), ba, bb))
        .collect::<Result<_>>()?;
    let ks = ks_two_sample(&xs, &oracle)?;
    let mean_ok = (m.mean - expect).abs() < 3.0 * m.se;
    Ok(VerificationReport {
        check: "beta_identity".into(),
        configuration,
        samples,
        statistic: ks.p_value,
        threshold: 0.01,
        pass: ks.p_value > 0.01 && mean_ok,
        seed,
        details: json!({
            "ks_statistic": ks.statistic,
            "mean": m.mean,
            "se": m.se,
            "expected_mean": expect,
            "mean_within_3se": mean_ok,
        }),
    })
}

/// Exceedance frequency of the realized coefficient
/// `sqrt(1 - sum upsilon + c^2 sum gamma)` over
/// `sqrt(1 - (1 - c^2) K/d + theta (1 + c^2) K/d)`, for orthogonal unit
/// vectors `A, B`, against the two-sided tail bound.
pub fn check_lipschitz_tail(
    d: usize,
    k: usize,
    c: f64,
    theta: f64,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    require(
        k >= 1 && d >= 2 * k,
        format!("Lipschitz tail needs d >= 2k >= 2, got d = {d}, k = {k}"),
    )?;
    require(
        samples >= 1 && c.is_finite() && c >= 0.0 && theta.is_finite() && theta >= 0.0,
        "bad tail inputs",
    )?;
    let ratio = k as f64 / d as f64;
    let c2 = c * c;
    let level = 1.0 - (1.0 - c2) * ratio + theta * (1.0 + c2) * ratio;
    let exceed: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (u, g) = sample_projection_pair(&mut stream(seed, Purpose::Verify, i, 0), d, k);
            u64::from(1.0 - u + c2 * g > level)
        })
        .sum();
    let bound = delta_f(&TailBoundInputs { k, d, theta, steps: 1 })?;
    let freq = exceed as f64 / samples as f64;
    let se = (freq * (1.0 - freq) / samples as f64).sqrt();
    Ok(VerificationReport {
        check: "lipschitz_tail".into(),
        configuration: json!({"d": d, "k": k, "c": c, "theta": theta}),
        samples,
        statistic: freq,
        threshold: bound + 3.0 * se,
        pass: freq <= bound + 3.0 * se,
        seed,
        details: json!({
            "threshold_coefficient": level.max(0.0).sqrt(),
            "tail_bound": bound,
            "se": se,
            "exceedances": exceed,
        }),
    })
}

/// Quadratic loss for `params` with rows of norm `feature_norm`.
pub fn quadratic_for(params: &ProblemParams, feature_norm: f64, seed: u64) -> Result<QuadraticLoss> {
    let data = gaussian_dataset(params.n, params.d, feature_norm, seed)?;
    QuadraticLoss::new(params.smoothness, params.strong_convexity, data)
}

/// Coupled adjacent runs with a far-out replacement sample; every distance
/// must stay within `min(2R, 2 eta clip t / sqrt K)` up to [`AS_SLACK`].
pub fn check_winf(params: &ProblemParams, trials: u64, steps: u64, seed: u64) -> Result<VerificationReport> {
    require(trials >= 1, "W-infinity check needs at least one trial")?;
    let loss = quadratic_for(params, params.clip, seed)?;
    let scale = 1e3 * (params.smoothness * params.radius + params.clip);
    let per_trial: Vec<(f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let i = (trial % params.n as u64) as usize;
            let row = loss.data.row(i);
            let replacement: Vec<f64> = row.iter().map(|v| -v * scale / row.norm()).collect();
            let mut cfg = RunConfig::new(steps, 0.5, seed);
            cfg.trial = trial;
            let (a, b) = run_adjacent_pair(params, &loss, i, &replacement, &cfg)?;
            let dist = a.distances(&b);
            let mut worst = f64::NEG_INFINITY;
            for (t, x) in dist.iter().enumerate() {
                worst = worst.max(x - params.winf_bound(t));
            }
            let first = dist.get(1).copied().unwrap_or(0.0);
            Ok((worst, dist.iter().copied().fold(0.0, f64::max), first))
        })
        .collect::<Result<_>>()?;
    let worst = per_trial.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let violations = per_trial.iter().filter(|r| r.0 > AS_SLACK).count();
    let max_dist = per_trial.iter().map(|r| r.1).fold(0.0, f64::max);
    let first = per_trial.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(VerificationReport {
        check: "winf".into(),
        configuration: json!({"params": params, "steps": steps}),
        samples: trials,
        statistic: worst,
        threshold: AS_SLACK,
        pass: violations == 0,
        seed,
        details: json!({
            "violations": violations,
            "max_distance": max_dist,
            "max_first_step_distance": first,
            "first_step_bound": params.winf_bound(1),
            "final_bound": params.winf_bound(steps as usize),
        }),
    })
}

/// Final mean loss under each `beta`; passes iff every pair of 3-SE
/// intervals overlaps. `scaling` is a test hook for wrong noise variances.
pub fn check_beta_utility_equivalence_with(
    params: &ProblemParams,
    betas: &[f64],
    trials: u64,
    steps: u64,
    seed: u64,
    scaling: NoiseScaling,
) -> Result<VerificationReport> {
    require(
        params.convexity == ConvexityClass::StronglyConvex,
        "utility equivalence needs a strongly convex loss",
    )?;
    require(
        betas.len() >= 2 && trials >= 2,
        "utility equivalence needs two betas and two trials",
    )?;
    let loss = quadratic_for(params, 0.5 * params.clip.min(1.0), seed)?;
    let mut groups = Vec::with_capacity(betas.len());
    for &beta in betas {
        let rows: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|j| {
                let mut cfg = RunConfig::new(steps, beta, seed);
                // same trial streams for every beta: the comparison uses common random numbers
                cfg.trial = j;
                cfg.record = true;
                cfg.noise = scaling;
                let tr = run(params, &loss, &cfg)?;
                let noise = tr.noise.as_ref().expect("recorded");
                let second = noise.iter().map(|z| z.norm_squared()).sum::<f64>() / noise.len().max(1) as f64;
                Ok((loss.mean_loss(tr.last()), second))
            })
            .collect::<Result<_>>()?;
        let losses: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let seconds: Vec<f64> = rows.iter().map(|r| r.1).collect();
        groups.push((beta, mean_se(&losses), mean_se(&seconds)));
    }
    let mut stat: f64 = 0.0;
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (a, b) = (groups[i].1, groups[j].1);
            let gap = (a.mean - b.mean).abs();
            let width = a.se + b.se;
            let z = if width > 0.0 {
                gap / width
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            stat = stat.max(z);
        }
    }
    let details: Vec<Value> = groups
        .iter()
        .map(|(b, l, s)| {
            json!({"beta": b, "mean_loss": l.mean, "se": l.se, "noise_second_moment": s.mean, "noise_second_moment_se": s.se})
        })
        .collect();
    Ok(VerificationReport {
        check: "beta_utility_equivalence".into(),
        configuration: json!({"params": params, "betas": betas, "steps": steps}),
        samples: trials * betas.len() as u64,
        statistic: stat,
        threshold: 3.0,
        pass: stat <= 3.0,
        seed,
        details: json!({"groups": details, "target_noise_second_moment": params.eta.powi(2) * params.sigma.powi(2)}),
    })
}

pub fn check_beta_utility_equivalence(
    params: &ProblemParams,
    betas: &[f64],
    trials: u64,
    steps: u64,
    seed: u64,
) -> Result<VerificationReport> {
    check_beta_utility_equivalence_with(params, betas, trials, steps, seed, NoiseScaling::Exact)
}

/// Compares the realized generalized-Lipschitz coefficient under orthonormal
/// and i.i.d. frames. Qualitative: passes iff the orthonormal 99th
/// percentile does not exceed the i.i.d. one.
pub fn check_iid_vs_orthonormal(d: usize, k: usize, c: f64, samples: u64, seed: u64) -> Result<VerificationReport> {
    require(
        k >= 1 && d >= 2 * k,
        format!("frame comparison needs d >= 2k >= 2, got d = {d}, k = {k}"),
    )?;
    require(
        (0.0..=1.0).contains(&c) && samples >= 2,
        "frame comparison needs c in [0, 1] and two samples",
    )?;
    let mut orth: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| sample_orthonormal_coefficient(&mut stream(seed, Purpose::Verify, i, 0), d, k, c))
        .collect();
    let mut iid: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| sample_iid_coefficient(&mut stream(seed, Purpose::Verify, i, 1), d, k, c))
        .collect();
    orth.sort_by(f64::total_cmp);
    iid.sort_by(f64::total_cmp);
    let lo = orth[0].min(iid[0]);
    let hi = orth[orth.len() - 1].max(iid[iid.len() - 1]);
    let grid: Vec<f64> = (1..=99).map(|i| lo + (hi - lo) * i as f64 / 100.0).collect();
    let qs = [0.5, 0.9, 0.99];
    let q = |s: &[f64]| qs.iter().map(|&p| quantile(s, p)).collect::<Vec<_>>();
    let (qo, qi) = (quantile(&orth, 0.99), quantile(&iid, 0.99));
    Ok(VerificationReport {
        check: "iid_vs_orthonormal".into(),
        configuration: json!({"d": d, "k": k, "c": c}),
        samples,
        statistic: qo,
        threshold: qi,
        pass: qo <= qi,
        seed,
        details: json!({
            "kind": "qualitative",
            "quantile_levels": qs,
            "orthonormal_quantiles": q(&orth),
            "iid_quantiles": q(&iid),
            "cdf_grid": grid,
            "orthonormal_cdf": ecdf_at(&orth, &grid),
            "iid_cdf": ecdf_at(&iid, &grid),
        }),
    })
}

/// Per-sample generalized Lipschitz property of the noiseless update:
/// `|psi(x) - psi(y)| <= c1 |x - y| + eta M xi` with `c1` from the realized
/// projections. The clip threshold is raised to the loss's Lipschitz
/// constant so clipping never binds.
pub fn check_generalized_lipschitz(params: &ProblemParams, samples: u64, seed: u64) -> Result<VerificationReport> {
    params.validate()?;
    require(samples >= 1, "generalized Lipschitz check needs samples")?;
    let c = params.lipschitz_c()?;
    let loss = quadratic_for(params, 1.0, seed)?;
    let mut p = params.clone();
    p.clip = loss.constants(2.0 * params.radius).lipschitz;
    let all: Vec<usize> = (0..p.n).collect();
    let k = p.k as f64;
    let slack = p.c2();
    let worst: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = stream(seed, Purpose::Verify, i, 0);
            let point = |r: &mut rand_chacha::ChaCha8Rng| {
                let v = DVector::from_fn(p.d, |_, _| normal(r));
                let s: f64 = r.random::<f64>().powf(1.0 / p.d as f64) * p.radius;
                v.normalize() * s
            };
            let x = point(&mut r);
            let y = point(&mut r);
            let f = sample_frame(p.d, p.k, FrameMode::Stiefel, &mut stream(seed, Purpose::Frame, i, 0))?;
            let phi = |w: &DVector<f64>| w - loss.mean_grad(w) * (p.eta / k);
            let dx = &x - &y;
            let dphi = phi(&x) - phi(&y);
            let ups = f.projection_mass(dx.normalize().as_slice());
            let gam = if dphi.norm() > 0.0 {
                f.projection_mass(dphi.normalize().as_slice())
            } else {
                0.0
            };
            let c1 = (1.0 - ups + c * c * gam).max(0.0).sqrt();
            let lhs = (zo_update_map(&x, &f, &loss, &all, &p)? - zo_update_map(&y, &f, &loss, &all, &p)?).norm();
            Ok(lhs - c1 * dx.norm() - slack)
        })
        .collect::<Result<_>>()?;
    let stat = worst.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violations = worst.iter().filter(|&&w| w > AS_SLACK).count();
    Ok(VerificationReport {
        check: "generalized_lipschitz".into(),
        configuration: json!({"params": params}),
        samples,
        statistic: stat,
        threshold: AS_SLACK,
        pass: violations == 0,
        seed,
        details: json!({"violations": violations, "c": c}),
    })
}

/// Parameters used by the default trajectory checks.
pub fn default_check_params() -> ProblemParams {
    ProblemParams {
        d: 20,
        n: 40,
        k: 4,
        eta: 4.0,
        sigma: 0.2,
        clip: 10.0,
        radius: 100.0,
        smoothness: 1.0,
        strong_convexity: 0.5,
        xi: 0.0,
        batch: None,
        convexity: ConvexityClass::StronglyConvex,
    }
}

/// Parameters of the W-infinity check: a small ball and a binding clip.
pub fn default_winf_params() -> ProblemParams {
    ProblemParams {
        radius: 1.0,
        clip: 0.5,
        sigma: 0.5,
        ..default_check_params()
    }
}

pub fn default_seed() -> u64 {
    20_240_601
}

/// One entry of a verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    BetaIdentity {
        d: usize,
        k: usize,
        samples: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    LipschitzTail {
        d: usize,
        k: usize,
        c: f64,
        /// Optimal slack for `c` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        samples: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Winf {
        #[serde(default = "default_winf_params")]
        params: ProblemParams,
        trials: u64,
        steps: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    BetaUtilityEquivalence {
        #[serde(default = "default_check_params")]
        params: ProblemParams,
        betas: Vec<f64>,
        trials: u64,
        steps: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    IidVsOrthonormal {
        d: usize,
        k: usize,
        c: f64,
        samples: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    GeneralizedLipschitz {
        #[serde(default = "default_check_params")]
        params: ProblemParams,
        samples: u64,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::BetaIdentity { .. } => "beta_identity",
            CheckSpec::LipschitzTail { .. } => "lipschitz_tail",
            CheckSpec::Winf { .. } => "winf",
            CheckSpec::BetaUtilityEquivalence { .. } => "beta_utility_equivalence",
            CheckSpec::IidVsOrthonormal { .. } => "iid_vs_orthonormal",
            CheckSpec::GeneralizedLipschitz { .. } => "generalized_lipschitz",
        }
    }

    pub fn run(&self) -> Result<VerificationReport> {
        self.run_with(NoiseScaling::Exact)
    }

    /// Runs the check; `scaling` only affects the utility comparison.
    pub fn run_with(&self, scaling: NoiseScaling) -> Result<VerificationReport> {
        match self {
            CheckSpec::BetaIdentity { d, k, samples, seed } => check_beta_identity(*d, *k, *samples, *seed),
            CheckSpec::LipschitzTail {
                d,
                k,
                c,
                theta,
                samples,
                seed,
            } => {
                let th = match theta {
                    Some(t) => *t,
                    None => theta_star(*c)?,
                };
                check_lipschitz_tail(*d, *k, *c, th, *samples, *seed)
            }
            CheckSpec::Winf {
                params,
                trials,
                steps,
                seed,
            } => check_winf(params, *trials, *steps, *seed),
            CheckSpec::BetaUtilityEquivalence {
                params,
                betas,
                trials,
                steps,
                seed,
            } => check_beta_utility_equivalence_with(params, betas, *trials, *steps, *seed, scaling),
            CheckSpec::IidVsOrthonormal { d, k, c, samples, seed } => {
                check_iid_vs_orthonormal(*d, *k, *c, *samples, *seed)
            }
            CheckSpec::GeneralizedLipschitz { params, samples, seed } => {
                check_generalized_lipschitz(params, *samples, *seed)
            }
        }
    }
}

/// The standard suite with its default sample counts and seeds.
pub fn default_suite() -> Vec<CheckSpec> {
    let seed = default_seed();
    vec![
        CheckSpec::BetaIdentity {
            d: 50,
            k: 10,
            samples: 100_000,
            seed,
        },
        CheckSpec::LipschitzTail {
            d: 10_000,
            k: 100,
            c: 0.1,
            theta: None,
            samples: 100_000,
            seed,
        },
        CheckSpec::Winf {
            params: default_winf_params(),
            trials: 1000,
            steps: 100,
            seed,
        },
        CheckSpec::BetaUtilityEquivalence {
            params: default_check_params(),
            betas: vec![0.0, 0.5, 1.0],
            trials: 200,
            steps: 100,
            seed,
        },
        CheckSpec::IidVsOrthonormal {
            d: 1000,
            k: 50,
            c: 0.5,
            samples: 100_000,
            seed,
        },
        CheckSpec::GeneralizedLipschitz {
            params: default_check_params(),
            samples: 10_000,
            seed,
        },
    ]
}

/// Runs `checks` in order and serializes each report as one JSON line.
pub fn run_suite(checks: &[CheckSpec]) -> Result<Vec<VerificationReport>> {
    checks.iter().map(CheckSpec::run).collect()
}

pub fn to_jsonl(reports: &[VerificationReport]) -> Result<String> {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}
