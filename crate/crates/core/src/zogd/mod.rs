//! Reference Noisy-ZOGD simulator.
//!
//! One step reads
//!
//! ```text
//! w+ = P_R[ w - (eta/K) sum_k g_k u_k + (eta/sqrt K) sum_k G1_k u_k + (eta/sqrt d) G2 ]
//! ```
//!
//! with `g_k` the clipped two-point directional derivative averaged over
//! the batch, `G1_k ~ N(0, beta sigma^2)` and `G2 ~ N(0, (1 - beta) sigma^2 I)`.

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;

pub mod frame;
pub mod loss;
pub mod rng;

pub use frame::{sample_frame, DirectionFrame, FrameMode};
pub use loss::{gaussian_dataset, LogisticLoss, LossConstants, LossOracle, QuadraticLoss};
use rng::{stream, Purpose};

/// `y / max(1, |y| / clip)`.
pub fn clip(y: f64, threshold: f64) -> f64 {
    y / (y.abs() / threshold).max(1.0)
}

/// Per-direction clipped estimates `g_k`, averaged over `indices`.
///
/// `xi = 0` uses the analytic directional derivative.
pub fn directional_estimates<L: LossOracle + ?Sized>(
    w: &DVector<f64>,
    frame: &DirectionFrame,
    loss: &L,
    indices: &[usize],
    xi: f64,
    threshold: f64,
) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter(
            "zeroth-order estimate needs at least one sample".into(),
        ));
    }
    let m = indices.len() as f64;
    let est = frame
        .matrix()
        .column_iter()
        .map(|u| {
            let total: f64 = if xi == 0.0 {
                indices
                    .iter()
                    .map(|&i| clip(loss.directional(i, w, u), threshold))
                    .sum()
            } else {
                let plus = w + u * xi;
                let minus = w - u * xi;
                indices
                    .iter()
                    .map(|&i| clip((loss.loss(i, &plus) - loss.loss(i, &minus)) / (2.0 * xi), threshold))
                    .sum()
            };
            total / m
        })
        .collect();
    Ok(est)
}

/// `sum_k g_k u_k`. With a complete orthonormal frame and no clipping this
/// is the full gradient.
pub fn zo_gradient<L: LossOracle + ?Sized>(
    w: &DVector<f64>,
    frame: &DirectionFrame,
    loss: &L,
    indices: &[usize],
    xi: f64,
    threshold: f64,
) -> Result<DVector<f64>> {
    let g = directional_estimates(w, frame, loss, indices, xi, threshold)?;
    Ok(frame.matrix() * DVector::from_vec(g))
}

/// Noiseless zeroth-order map `w - (eta/K) zo_gradient(w)`, before projection.
pub fn zo_update_map<L: LossOracle + ?Sized>(
    w: &DVector<f64>,
    frame: &DirectionFrame,
    loss: &L,
    indices: &[usize],
    params: &ProblemParams,
) -> Result<DVector<f64>> {
    let g = zo_gradient(w, frame, loss, indices, params.xi, params.clip)?;
    Ok(w - g * (params.eta / frame.k() as f64))
}

/// Euclidean projection onto the ball of radius `r`.
pub fn project_ball(mut w: DVector<f64>, r: f64) -> DVector<f64> {
    let n = w.norm();
    if n > r {
        w *= r / n;
    }
    w
}

/// Noise variance convention. `MisScaledDirectional` uses `beta sigma`
/// instead of `beta sigma^2` for the directional part; it exists so tests
/// can confirm the verification harness notices a wrong scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaling {
    #[default]
    Exact,
    MisScaledDirectional,
}

/// Standard normal draws of one step: `K` directional and `d` isotropic.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    pub directional: Vec<f64>,
    pub isotropic: DVector<f64>,
}

impl StepNoise {
    pub fn zero(d: usize, k: usize) -> Self {
        Self {
            directional: vec![0.0; k],
            isotropic: DVector::zeros(d),
        }
    }

    pub fn sample<R: Rng + ?Sized, S: Rng + ?Sized>(d: usize, k: usize, dir: &mut R, iso: &mut S) -> Self {
        Self {
            directional: (0..k).map(|_| dir.sample(StandardNormal)).collect(),
            isotropic: DVector::from_fn(d, |_, _| iso.sample(StandardNormal)),
        }
    }

    /// `(eta/sqrt K) sum_k s1 z_k u_k + (eta/sqrt d) s2 z'` with `s1, s2`
    /// the per-component standard deviations for `beta`.
    pub fn injected(
        &self,
        frame: &DirectionFrame,
        params: &ProblemParams,
        beta: f64,
        scaling: NoiseScaling,
    ) -> DVector<f64> {
        let s2 = params.sigma * params.sigma;
        let var1 = match scaling {
            NoiseScaling::Exact => beta * s2,
            NoiseScaling::MisScaledDirectional => beta * params.sigma,
        };
        let k = frame.k() as f64;
        let d = frame.d() as f64;
        let dir = frame.matrix() * DVector::from_column_slice(&self.directional);
        dir * (params.eta * var1.sqrt() / k.sqrt())
            + &self.isotropic * (params.eta * ((1.0 - beta) * s2).sqrt() / d.sqrt())
    }
}

/// One Noisy-ZOGD step on the batch `indices`.
#[allow(clippy::too_many_arguments)]
pub fn noisy_zogd_step<L: LossOracle + ?Sized>(
    w: &DVector<f64>,
    frame: &DirectionFrame,
    loss: &L,
    indices: &[usize],
    params: &ProblemParams,
    beta: f64,
    noise: &StepNoise,
    scaling: NoiseScaling,
) -> Result<DVector<f64>> {
    let moved = zo_update_map(w, frame, loss, indices, params)?;
    Ok(project_ball(
        moved + noise.injected(frame, params, beta, scaling),
        params.radius,
    ))
}

/// Per-step `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSchedule {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl BetaSchedule {
    pub fn validate(&self, steps: u64) -> Result<()> {
        let bad = |b: &f64| !(0.0..=1.0).contains(b);
        match self {
            BetaSchedule::Constant(b) if bad(b) => Err(Error::InvalidParameter(format!("beta {b} outside [0, 1]"))),
            BetaSchedule::PerStep(v) if v.len() as u64 != steps => Err(Error::InvalidParameter(format!(
                "beta schedule has {} entries for {steps} steps",
                v.len()
            ))),
            BetaSchedule::PerStep(v) if v.iter().any(bad) => {
                Err(Error::InvalidParameter("beta schedule leaves [0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, t: u64) -> f64 {
        match self {
            BetaSchedule::Constant(b) => *b,
            BetaSchedule::PerStep(v) => v[t as usize],
        }
    }
}

/// Everything besides the problem and the loss that determines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub steps: u64,
    pub beta: BetaSchedule,
    pub seed: u64,
    /// Independent replicate index; part of every stream key.
    pub trial: u64,
    pub mode: FrameMode,
    /// Starting point, zero when absent.
    pub init: Option<Vec<f64>>,
    /// Keep per-step frames and injected noise.
    pub record: bool,
    pub noise: NoiseScaling,
}

impl RunConfig {
    pub fn new(steps: u64, beta: f64, seed: u64) -> Self {
        Self {
            steps,
            beta: BetaSchedule::Constant(beta),
            seed,
            trial: 0,
            mode: FrameMode::Stiefel,
            init: None,
            record: false,
            noise: NoiseScaling::Exact,
        }
    }
}

/// Iterates of one run plus what is needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub trial: u64,
    pub params: ProblemParams,
    pub iterates: Vec<DVector<f64>>,
    pub frames: Option<Vec<DirectionFrame>>,
    pub noise: Option<Vec<DVector<f64>>>,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("trajectory holds w_0")
    }

    /// `|w_t - w'_t|` for every `t`.
    pub fn distances(&self, other: &Trajectory) -> Vec<f64> {
        self.iterates
            .iter()
            .zip(&other.iterates)
            .map(|(a, b)| (a - b).norm())
            .collect()
    }

    /// CSV with columns `t,norm,loss` and, for a paired run, `distance`.
    pub fn write_csv<W: Write, L: LossOracle + ?Sized>(
        &self,
        out: &mut W,
        loss: &L,
        partner: Option<&Trajectory>,
    ) -> Result<()> {
        let dist = partner.map(|p| self.distances(p));
        writeln!(out, "t,norm,loss{}", if dist.is_some() { ",distance" } else { "" })?;
        for (t, w) in self.iterates.iter().enumerate() {
            write!(out, "{t},{},{}", w.norm(), loss.mean_loss(w))?;
            if let Some(d) = &dist {
                write!(out, ",{}", d[t])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Like [`ProblemParams::validate`] but admits `sigma = 0`.
fn validate_for_simulation(params: &ProblemParams) -> Result<()> {
    if !(params.sigma.is_finite() && params.sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be non-negative, got {}",
            params.sigma
        )));
    }
    let mut p = params.clone();
    if p.sigma == 0.0 {
        p.sigma = 1.0;
    }
    p.validate()
}

/// Runs Noisy-ZOGD, or the subsampled variant when `params.batch` is set.
///
/// Frames, both noise components and the batch of step `t` come from
/// independent streams keyed by `(seed, trial, t)`.
pub fn run<L: LossOracle + ?Sized>(params: &ProblemParams, loss: &L, cfg: &RunConfig) -> Result<Trajectory> {
    validate_for_simulation(params)?;
    cfg.beta.validate(cfg.steps)?;
    let d = params.d;
    if loss.dim() != d || loss.len() != params.n {
        return Err(Error::InvalidParameter(format!(
            "loss has {} samples in dimension {}, params expect {} in {d}",
            loss.len(),
            loss.dim(),
            params.n
        )));
    }
    let w0 = match &cfg.init {
        Some(v) if v.len() != d => {
            return Err(Error::InvalidParameter(format!(
                "init has length {}, expected {d}",
                v.len()
            )));
        }
        Some(v) => project_ball(DVector::from_column_slice(v), params.radius),
        None => DVector::zeros(d),
    };
    let full: Vec<usize> = (0..params.n).collect();
    let mut iterates = Vec::with_capacity(cfg.steps as usize + 1);
    let mut frames = cfg.record.then(Vec::new);
    let mut noises = cfg.record.then(Vec::new);
    iterates.push(w0);
    for t in 0..cfg.steps {
        let frame = sample_frame(
            d,
            params.k,
            cfg.mode,
            &mut stream(cfg.seed, Purpose::Frame, cfg.trial, t),
        )?;
        let noise = StepNoise::sample(
            d,
            params.k,
            &mut stream(cfg.seed, Purpose::DirectionalNoise, cfg.trial, t),
            &mut stream(cfg.seed, Purpose::IsotropicNoise, cfg.trial, t),
        );
        let batch;
        let indices: &[usize] = match params.batch {
            Some(b) if b < params.n => {
                let mut r = stream(cfg.seed, Purpose::Batch, cfg.trial, t);
                batch = rand::seq::index::sample(&mut r, params.n, b).into_vec();
                &batch
            }
            _ => &full,
        };
        let beta = cfg.beta.at(t);
        let w = iterates.last().expect("non-empty");
        let next = noisy_zogd_step(w, &frame, loss, indices, params, beta, &noise, cfg.noise)?;
        if let Some(n) = noises.as_mut() {
            n.push(noise.injected(&frame, params, beta, cfg.noise));
        }
        if let Some(f) = frames.as_mut() {
            f.push(frame);
        }
        iterates.push(next);
    }
    Ok(Trajectory {
        seed: cfg.seed,
        trial: cfg.trial,
        params: params.clone(),
        iterates,
        frames,
        noise: noises,
    })
}

/// Runs on `loss` and on a copy with sample `replaced_index` set to
/// `replacement`, sharing every frame, batch and noise draw.
pub fn run_adjacent_pair<L: LossOracle>(
    params: &ProblemParams,
    loss: &L,
    replaced_index: usize,
    replacement: &[f64],
    cfg: &RunConfig,
) -> Result<(Trajectory, Trajectory)> {
    let other = loss.replaced(replaced_index, replacement)?;
    Ok((run(params, loss, cfg)?, run(params, &other, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConvexityClass;
    use crate::stats::mean_se;
    use nalgebra::DMatrix;

    pub(crate) fn small_params() -> ProblemParams {
        ProblemParams {
            d: 12,
            n: 30,
            k: 3,
            eta: 1.5,
            sigma: 0.3,
            clip: 5.0,
            radius: 10.0,
            smoothness: 1.0,
            strong_convexity: 0.5,
            xi: 0.0,
            batch: None,
            convexity: ConvexityClass::StronglyConvex,
        }
    }

    fn quad(p: &ProblemParams, norm: f64) -> QuadraticLoss {
        QuadraticLoss::new(
            p.smoothness,
            p.strong_convexity,
            gaussian_dataset(p.n, p.d, norm, 7).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn clip_contract() {
        assert_eq!(clip(0.5, 1.0), 0.5);
        assert_eq!(clip(-3.0, 1.0), -1.0);
        assert_eq!(clip(3.0, 2.0), 2.0);
    }

    #[test]
    fn constant_losses_give_zero_estimate() {
        let p = small_params();
        let flat = QuadraticLoss::new(0.0, 0.0, DMatrix::zeros(p.n, p.d)).unwrap();
        let mut r = stream(1, Purpose::Frame, 0, 0);
        let f = sample_frame(p.d, p.k, FrameMode::Stiefel, &mut r).unwrap();
        let w = DVector::from_element(p.d, 0.3);
        for xi in [0.0, 1e-3] {
            assert_eq!(
                zo_gradient(&w, &f, &flat, &[0, 1], xi, 1.0).unwrap(),
                DVector::zeros(p.d)
            );
        }
        assert!(zo_gradient(&w, &f, &flat, &[], 0.0, 1.0).is_err());
    }

    #[test]
    fn full_frame_recovers_gradient() {
        let mut p = small_params();
        p.k = p.d;
        let q = quad(&p, 0.5);
        let mut r = stream(2, Purpose::Frame, 0, 0);
        let f = sample_frame(p.d, p.d, FrameMode::Stiefel, &mut r).unwrap();
        let w = DVector::from_fn(p.d, |i, _| 0.1 * i as f64 - 0.4);
        let idx: Vec<usize> = (0..p.n).collect();
        let exact = q.mean_grad(&w);
        let est = zo_gradient(&w, &f, &q, &idx, 1e-6, 1e6).unwrap();
        assert!(
            (&est - &exact).norm() <= 1e-8 * exact.norm().max(1.0),
            "{}",
            (&est - &exact).norm()
        );
        let analytic = zo_gradient(&w, &f, &q, &idx, 0.0, 1e6).unwrap();
        assert!((&analytic - &exact).norm() < 1e-12);
    }

    #[test]
    fn clipped_magnitudes_bounded() {
        let p = small_params();
        let q = quad(&p, 50.0);
        let mut r = stream(3, Purpose::Frame, 0, 0);
        let f = sample_frame(p.d, p.k, FrameMode::Stiefel, &mut r).unwrap();
        let w = DVector::from_element(p.d, 2.0);
        let g = directional_estimates(&w, &f, &q, &[0, 4, 9], 1e-3, 0.25).unwrap();
        assert!(g.iter().all(|x| x.abs() <= 0.25 + 1e-15));
    }

    #[test]
    fn noiseless_zero_gradient_step_is_projection() {
        let mut p = small_params();
        p.sigma = 0.0;
        p.radius = 1.0;
        let flat = QuadraticLoss::new(0.0, 0.0, DMatrix::zeros(p.n, p.d)).unwrap();
        let f = sample_frame(p.d, p.k, FrameMode::Stiefel, &mut stream(4, Purpose::Frame, 0, 0)).unwrap();
        let w = DVector::from_element(p.d, 1.0);
        let next = noisy_zogd_step(
            &w,
            &f,
            &flat,
            &[0],
            &p,
            0.5,
            &StepNoise::zero(p.d, p.k),
            NoiseScaling::Exact,
        )
        .unwrap();
        assert_eq!(next, project_ball(w, 1.0));
    }

    #[test]
    fn single_direction_mechanisms() {
        // K = 1: beta = 1 puts all noise on u, beta = 0 makes it isotropic
        let mut p = small_params();
        p.k = 1;
        let f = sample_frame(p.d, 1, FrameMode::Stiefel, &mut stream(5, Purpose::Frame, 0, 0)).unwrap();
        let z = StepNoise::sample(
            p.d,
            1,
            &mut stream(5, Purpose::DirectionalNoise, 0, 0),
            &mut stream(5, Purpose::IsotropicNoise, 0, 0),
        );
        let a = z.injected(&f, &p, 1.0, NoiseScaling::Exact);
        let u = f.matrix().column(0).into_owned();
        let expect = &u * (p.eta * p.sigma * z.directional[0]);
        assert!((a - expect).amax() < 1e-15);
        let b = z.injected(&f, &p, 0.0, NoiseScaling::Exact);
        let expect = &z.isotropic * (p.eta * p.sigma / (p.d as f64).sqrt());
        assert!((b - expect).amax() < 1e-15);
    }

    #[test]
    fn noise_second_moment_independent_of_beta() {
        let p = small_params();
        let target = p.eta * p.eta * p.sigma * p.sigma;
        for beta in [0.0, 0.3, 1.0] {
            let xs: Vec<f64> = (0..20_000u64)
                .map(|t| {
                    let f = sample_frame(p.d, p.k, FrameMode::Stiefel, &mut stream(6, Purpose::Frame, 0, t)).unwrap();
                    let z = StepNoise::sample(
                        p.d,
                        p.k,
                        &mut stream(6, Purpose::DirectionalNoise, 0, t),
                        &mut stream(6, Purpose::IsotropicNoise, 0, t),
                    );
                    z.injected(&f, &p, beta, NoiseScaling::Exact).norm_squared()
                })
                .collect();
            let m = mean_se(&xs);
            assert!(
                (m.mean - target).abs() < 3.0 * m.se,
                "beta {beta}: {} vs {target}",
                m.mean
            );
        }
    }

    #[test]
    fn run_basics() {
        let p = small_params();
        let q = quad(&p, 0.5);
        let t0 = run(&p, &q, &RunConfig::new(0, 0.5, 1)).unwrap();
        assert_eq!(t0.iterates.len(), 1);
        let mut cfg = RunConfig::new(25, 0.5, 1);
        cfg.record = true;
        let a = run(&p, &q, &cfg).unwrap();
        let b = run(&p, &q, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frames.as_ref().unwrap().len(), 25);
        assert!(a.iterates.iter().all(|w| w.norm() <= p.radius + 1e-12));
        cfg.seed = 2;
        assert_ne!(run(&p, &q, &cfg).unwrap().iterates, a.iterates);
        cfg.beta = BetaSchedule::PerStep(vec![0.5; 3]);
        assert!(run(&p, &q, &cfg).is_err());
    }

    #[test]
    fn projection_contract_with_small_ball() {
        let mut p = small_params();
        p.radius = 0.05;
        p.sigma = 2.0;
        let q = quad(&p, 0.5);
        let t = run(&p, &q, &RunConfig::new(40, 0.3, 3)).unwrap();
        assert!(t.iterates.iter().all(|w| w.norm() <= p.radius + 1e-12));
    }

    #[test]
    fn noiseless_full_frame_matches_gradient_descent() {
        let mut p = small_params();
        p.k = p.d;
        p.eta = p.k as f64 / p.smoothness;
        p.sigma = 0.0;
        p.xi = 1e-6;
        p.clip = 1e6;
        let q = quad(&p, 0.3);
        let star = q.minimizer();
        let mut cfg = RunConfig::new(12, 1.0, 4);
        cfg.init = Some(vec![0.5; p.d]);
        let tr = run(&p, &q, &cfg).unwrap();
        let mut w = tr.iterates[0].clone();
        let rate = 1.0 - p.eta * p.strong_convexity / p.k as f64;
        for t in 1..=12 {
            w = project_ball(&w - q.mean_grad(&w) * (p.eta / p.k as f64), p.radius);
            assert!((&tr.iterates[t] - &w).norm() < 1e-7, "step {t}");
            let r = (&tr.iterates[t] - &star).norm() / (&tr.iterates[t - 1] - &star).norm();
            assert!(r <= rate + 1e-6, "step {t}: {r}");
        }
        // the slowest mode contracts at exactly 1 - eta m / K
        let r = (&tr.iterates[12] - &star).norm() / (&tr.iterates[11] - &star).norm();
        assert!((r - rate).abs() < 1e-4, "{r}");
    }

    #[test]
    fn minibatch_runs_and_replays() {
        let mut p = small_params();
        p.batch = Some(7);
        let q = quad(&p, 0.5);
        let cfg = RunConfig::new(10, 0.5, 5);
        assert_eq!(run(&p, &q, &cfg).unwrap(), run(&p, &q, &cfg).unwrap());
    }

    #[test]
    fn adjacent_pair_tracking() {
        let p = small_params();
        let q = quad(&p, 0.5);
        let x0 = q.data.row(0).transpose();
        let same = run_adjacent_pair(&p, &q, 0, x0.as_slice(), &RunConfig::new(20, 0.5, 8)).unwrap();
        assert!(same.0.distances(&same.1).iter().all(|&d| d == 0.0));
        let flipped: Vec<f64> = x0.iter().map(|v| -v * 50.0).collect();
        let (a, b) = run_adjacent_pair(&p, &q, 0, &flipped, &RunConfig::new(60, 0.5, 8)).unwrap();
        let dist = a.distances(&b);
        assert!(dist[1] > 0.0);
        let step = 2.0 * p.eta * p.clip / (p.k as f64).sqrt();
        for t in 0..dist.len() {
            assert!(dist[t] <= p.winf_bound(t) + 1e-9);
            if t > 0 {
                assert!(dist[t] - dist[t - 1] <= step + 1e-9);
            }
        }
    }

    #[test]
    fn csv_export() {
        let p = small_params();
        let q = quad(&p, 0.5);
        let (a, b) = run_adjacent_pair(&p, &q, 1, &vec![0.0; p.d], &RunConfig::new(3, 0.5, 9)).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf, &q, Some(&b)).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,norm,loss,distance");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0,"));
        let mut buf = Vec::new();
        a.write_csv(&mut buf, &q, None).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,norm,loss\n"));
    }
}
