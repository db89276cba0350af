//! Search over the schedule family.
//!
//! For a window of `N = T - tau` steps the geometric allocation fixes
//! `sum a_t^2` in closed form, so every candidate window costs O(1) on the
//! Gaussian path. Windows up to a limit are searched exhaustively; longer
//! ones on a geometric grid refined locally.

use rayon::prelude::*;

use super::baselines::{composition_baseline, CompositionVariant};
use super::schedule::{sum_sq_shift, ScheduleFamily};
use super::{AccountOptions, AccountResult, Analysis};
use crate::concentration::log_delta_f_per_step;
use crate::error::{Error, Result};
use crate::params::{theta_star, DerivedConstants, ProblemParams};
use crate::rdp::{self, sgm_rdp, RdpCurve, RenyiOrder};

const GEOMETRIC_POINTS: usize = 128;
const REFINE_HALO: u64 = 64;

/// Minimum over the grid of `alpha r + l / (alpha - 1)`; the objective is
/// convex in `alpha`, so only the two orders around `1 + sqrt(l / r)` matter.
fn grid_min(grid: &[f64], r: f64, l: f64) -> (f64, f64) {
    let f = |a: f64| a * r + l / (a - 1.0);
    let last = grid.len() - 1;
    if r <= 0.0 {
        return (f(grid[last]), grid[last]);
    }
    let star = 1.0 + (l / r).sqrt();
    let i = grid.partition_point(|&a| a < star);
    let lo = i.saturating_sub(1);
    let hi = i.min(last);
    let (flo, fhi) = (f(grid[lo]), f(grid[hi]));
    if fhi < flo {
        (fhi, grid[hi])
    } else {
        (flo, grid[lo])
    }
}

/// Smaller epsilon wins; ties go to the longer window (smaller `tau`).
fn better<P>(a: &(u64, f64, P), b: &(u64, f64, P)) -> bool {
    match a.1.total_cmp(&b.1) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.0 > b.0,
    }
}

fn pick<P>(a: (u64, f64, P), b: (u64, f64, P)) -> (u64, f64, P) {
    if better(&b, &a) {
        b
    } else {
        a
    }
}

/// Finds the window `n` in `1..=n_hi` minimizing `f(n).0`.
fn scan<P, F>(n_hi: u64, limit: u64, f: F) -> Option<(u64, f64, P)>
where
    P: Copy + Send + Sync,
    F: Fn(u64) -> (f64, P) + Sync,
{
    if n_hi == 0 {
        return None;
    }
    let eval = |n: u64| {
        let (e, p) = f(n);
        (n, e, p)
    };
    let dense = n_hi.min(limit);
    let mut best = (1..=dense).into_par_iter().map(eval).reduce_with(pick)?;
    if n_hi <= limit {
        return Some(best);
    }
    let ratio = n_hi as f64 / dense as f64;
    let mut grid: Vec<u64> = (1..GEOMETRIC_POINTS)
        .map(|i| {
            let x = (dense as f64 * ratio.powf(i as f64 / (GEOMETRIC_POINTS - 1) as f64)).round() as u64;
            x.clamp(dense + 1, n_hi)
        })
        .collect();
    grid.dedup();
    let coarse: Vec<(u64, f64, P)> = grid.par_iter().map(|&n| eval(n)).collect();
    let (ci, cbest) = coarse
        .iter()
        .copied()
        .enumerate()
        .reduce(|x, y| if better(&y.1, &x.1) { y } else { x })?;
    if !better(&cbest, &best) {
        return Some(best);
    }
    best = cbest;
    let mut lo = if ci == 0 { dense } else { grid[ci - 1] };
    let mut hi = grid.get(ci + 1).copied().unwrap_or(n_hi);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        let (e1, e2) = (eval(m1), eval(m2));
        best = pick(pick(best, e1), e2);
        if e1.1 <= e2.1 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let from = lo.saturating_sub(REFINE_HALO).max(1);
    let to = (hi + REFINE_HALO).min(n_hi);
    let local = (from..=to).into_par_iter().map(eval).reduce_with(pick)?;
    Some(pick(best, local))
}

struct Setup {
    thetas: Vec<f64>,
    budget: f64,
    /// `(2 clip/n)^2 / (2 sigma^2)`
    a1: f64,
    /// `d / (2 eta^2 sigma^2)`
    iso: f64,
}

fn setup(params: &ProblemParams, delta: f64, opts: &AccountOptions) -> Result<Setup> {
    params.require_hidden_state()?;
    rdp::check_delta(delta)?;
    opts.validate()?;
    let c = params.lipschitz_c()?;
    let thetas = if c < 1.0 {
        vec![theta_star(c)?]
    } else {
        opts.theta_grid.clone()
    };
    let s = params.step_sensitivity();
    let sig2 = params.sigma * params.sigma;
    Ok(Setup {
        thetas,
        budget: opts.delta_f_fraction * delta,
        a1: s * s / (2.0 * sig2),
        iso: params.d as f64 / (2.0 * params.eta * params.eta * sig2),
    })
}

/// Per-slack quantities shared by every window.
struct Slack {
    consts: DerivedConstants,
    ln_step: f64,
    n_hi: u64,
}

fn slack(params: &ProblemParams, t: u64, theta: f64, budget: f64) -> Result<Slack> {
    let consts = DerivedConstants::new(params, theta)?;
    let ln_step = log_delta_f_per_step(params.k, params.d, theta)?;
    let max_by_budget = (budget.ln() - ln_step).exp().floor();
    let n_hi = if max_by_budget >= t as f64 {
        t.saturating_sub(1)
    } else {
        (max_by_budget as u64).min(t.saturating_sub(1))
    };
    Ok(Slack { consts, ln_step, n_hi })
}

impl Slack {
    fn delta_f(&self, n: u64) -> f64 {
        n as f64 * self.ln_step.exp()
    }

    fn family(&self, params: &ProblemParams, t: u64, n: u64, beta: f64) -> ScheduleFamily {
        let tau = t - n;
        ScheduleFamily {
            t_total: t,
            tau,
            beta,
            cbar1: self.consts.cbar1,
            c2: self.consts.c2,
            displacement: params.winf_bound(tau as usize),
        }
    }
}

fn public_family(t: u64) -> ScheduleFamily {
    ScheduleFamily {
        t_total: t,
        tau: 0,
        beta: 1.0,
        cbar1: 1.0,
        c2: 0.0,
        displacement: 0.0,
    }
}

fn relabel(mut r: AccountResult, analysis: Analysis, t: u64) -> AccountResult {
    r.analysis = analysis;
    r.schedule = Some(public_family(t));
    r
}

fn choose(public: Option<AccountResult>, shifted: Option<AccountResult>) -> Result<AccountResult> {
    match (public, shifted) {
        (Some(p), Some(s)) => Ok(if s.epsilon < p.epsilon { s } else { p }),
        (Some(p), None) => Ok(p),
        (None, Some(s)) => Ok(s),
        (None, None) => Err(Error::NoFeasibleSchedule(
            "every window violates the failure-probability budget".into(),
        )),
    }
}

/// Hidden-state accountant over the geometric schedule family.
///
/// Searches the switch time `tau` (as the window `T - tau`), the slack
/// `theta` (only the optimal one when `c < 1`), and the constant `beta`,
/// which has the closed-form optimum `sqrt(N A) / (sqrt(N A) + sqrt(I))`.
/// The public-state schedule `tau = 0`, `beta = 1` is included unless
/// disabled, so the result never exceeds the `Beta1` composition baseline.
pub fn optimize_hidden_state(
    params: &ProblemParams,
    delta: f64,
    t: u64,
    opts: &AccountOptions,
) -> Result<AccountResult> {
    let st = setup(params, delta, opts)?;
    let grid = &opts.alpha_grid;
    let public = if opts.include_public_branch {
        let r = composition_baseline(params, delta, t, CompositionVariant::Beta1, grid)?;
        Some(relabel(r, Analysis::HiddenState, t))
    } else {
        None
    };

    let mut best: Option<(f64, f64, u64, f64)> = None; // (eps, theta, n, beta)
    for &theta in &st.thetas {
        let sl = slack(params, t, theta, st.budget)?;
        let eval = |n: u64| -> (f64, f64) {
            let df = sl.delta_f(n);
            if df > st.budget {
                return (f64::INFINITY, 0.0);
            }
            let fam = sl.family(params, t, n, 0.0);
            let na = n as f64 * st.a1;
            let ii = st.iso * sum_sq_shift(fam.cbar1, fam.c2, fam.displacement, n);
            let (sa, si) = (na.sqrt(), ii.sqrt());
            let r = (sa + si) * (sa + si);
            let l = -(delta - df).ln();
            (grid_min(grid, r, l).0, sa / (sa + si))
        };
        if let Some((n, eps, beta)) = scan(sl.n_hi, opts.exhaustive_limit, eval) {
            let key = (eps, theta, n, beta);
            // ties: smaller tau (larger n), then smaller theta
            let replace = match best {
                None => true,
                Some(b) => eps < b.0 || (eps == b.0 && (t - n, theta) < (t - b.2, b.1)),
            };
            if replace && eps.is_finite() {
                best = Some(key);
            }
        }
    }

    let shifted = match best {
        None => None,
        Some((_, theta, n, beta)) => {
            let sl = slack(params, t, theta, st.budget)?;
            let fam = sl.family(params, t, n, beta);
            let na = n as f64 * st.a1;
            let ii = st.iso * fam.sum_sq_shift();
            let per_alpha = na / beta + ii / (1.0 - beta);
            let curve = RdpCurve::from_fn(grid.clone(), |a| Ok(a.get() * per_alpha))?;
            let df = sl.delta_f(n);
            let mut r = AccountResult::from_curve(Analysis::HiddenState, curve, delta, delta - df, df)?;
            r.tau_star = Some(fam.tau);
            r.theta = Some(theta);
            r.beta = Some(beta);
            r.schedule = Some(fam);
            Some(r)
        }
    };
    let mut out = choose(public, shifted)?;
    if out.tau_star == Some(0) {
        out.beta = Some(1.0);
    }
    Ok(out)
}

/// Per-step directional cost of the subsampled mechanism, the smaller of
/// the per-direction and joint bounds.
fn minibatch_step_cost(alpha: RenyiOrder, q: f64, k: usize, sig_eff: f64, beta: f64) -> Result<f64> {
    let kf = k as f64;
    let per_dir = kf * sgm_rdp(alpha, q, (kf * beta).sqrt() * sig_eff)?;
    if k == 1 {
        return Ok(per_dir);
    }
    let joint = sgm_rdp(alpha, q, beta.sqrt() * sig_eff)?;
    Ok(per_dir.min(joint))
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Hidden-state accountant for subsampling without replacement.
///
/// The directional term of every step becomes
/// `min(K S_alpha(b/n, sqrt(K beta) sigma b / (2 clip)), S_alpha(b/n, sqrt(beta) sigma b / (2 clip)))`;
/// the isotropic term is unchanged. With `b = n` this is the full-batch
/// accountant, which is used directly.
pub fn minibatch_hidden_state(
    params: &ProblemParams,
    delta: f64,
    t: u64,
    opts: &AccountOptions,
) -> Result<AccountResult> {
    let b = params
        .batch
        .ok_or_else(|| Error::InvalidParameter("minibatch accounting needs a batch size".into()))?;
    if b == params.n {
        let mut r = optimize_hidden_state(params, delta, t, opts)?;
        r.analysis = Analysis::MinibatchHiddenState;
        return Ok(r);
    }
    let st = setup(params, delta, opts)?;
    let grid = &opts.alpha_grid;
    let q = b as f64 / params.n as f64;
    let sig_eff = params.sigma * b as f64 / (2.0 * params.clip);
    let p = opts.beta_points;
    let betas: Vec<f64> = (1..=p)
        .map(|j| {
            if j == p {
                1.0
            } else {
                0.5 * (1.0 - (std::f64::consts::PI * j as f64 / p as f64).cos())
            }
        })
        .collect();
    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..p).map(move |j| (i, j))).collect();
    let flat = cells
        .par_iter()
        .map(|&(i, j)| minibatch_step_cost(RenyiOrder::new(grid[i])?, q, params.k, sig_eff, betas[j]))
        .collect::<Result<Vec<f64>>>()?;
    let table = |i: usize, j: usize| flat[i * p + j];

    let public = if opts.include_public_branch {
        let steps = t as f64;
        let rhos: Vec<f64> = (0..grid.len()).map(|i| steps * table(i, p - 1)).collect();
        let curve = RdpCurve::new(grid.clone(), rhos)?;
        let mut r = AccountResult::from_curve(Analysis::MinibatchHiddenState, curve, delta, delta, 0.0)?;
        r.tau_star = Some(0);
        r.beta = Some(1.0);
        r.schedule = Some(public_family(t));
        Some(r)
    } else {
        None
    };

    // (eps, theta, n, alpha index, beta index)
    let mut best: Option<(f64, f64, u64, usize, usize)> = None;
    for &theta in &st.thetas {
        let sl = slack(params, t, theta, st.budget)?;
        let eval = |n: u64| -> (f64, (usize, usize)) {
            let df = sl.delta_f(n);
            if df > st.budget {
                return (f64::INFINITY, (0, 0));
            }
            let fam = sl.family(params, t, n, 0.0);
            let ii = st.iso * sum_sq_shift(fam.cbar1, fam.c2, fam.displacement, n);
            let l = -(delta - df).ln();
            let nf = n as f64;
            let mut out = (f64::INFINITY, (0, 0));
            for (i, &a) in grid.iter().enumerate() {
                let conv = l / (a - 1.0);
                for (j, &bj) in betas.iter().enumerate().take(p - 1) {
                    let e = nf * table(i, j) + a * ii / (1.0 - bj) + conv;
                    if e < out.0 {
                        out = (e, (i, j));
                    }
                }
            }
            out
        };
        if let Some((n, eps, (i, j))) = scan(sl.n_hi, opts.minibatch_exhaustive_limit, eval) {
            let replace = match best {
                None => true,
                Some(bb) => eps < bb.0 || (eps == bb.0 && (t - n, theta) < (t - bb.2, bb.1)),
            };
            if replace && eps.is_finite() {
                best = Some((eps, theta, n, i, j));
            }
        }
    }

    let shifted = match best {
        None => None,
        Some((_, theta, n, i, j)) => {
            let sl = slack(params, t, theta, st.budget)?;
            let fam0 = sl.family(params, t, n, 0.0);
            let ii = st.iso * fam0.sum_sq_shift();
            let nf = n as f64;
            let alpha = RenyiOrder::new(grid[i])?;
            let lo = if j == 0 { 0.0 } else { betas[j - 1] };
            let hi = betas[(j + 1).min(p - 1)];
            let obj = |bt: f64| {
                if bt <= 0.0 || bt >= 1.0 {
                    return f64::INFINITY;
                }
                minibatch_step_cost(alpha, q, params.k, sig_eff, bt)
                    .map(|f| nf * f + alpha.get() * ii / (1.0 - bt))
                    .unwrap_or(f64::INFINITY)
            };
            let (bref, fref) = golden_min(obj, lo, hi, 48);
            let beta = if fref <= obj(betas[j]) { bref } else { betas[j] };
            let curve = RdpCurve::new(
                grid.clone(),
                grid.par_iter()
                    .map(|&a| {
                        let f = minibatch_step_cost(RenyiOrder::new(a)?, q, params.k, sig_eff, beta)?;
                        Ok(nf * f + a * ii / (1.0 - beta))
                    })
                    .collect::<Result<Vec<f64>>>()?,
            )?;
            let df = sl.delta_f(n);
            let mut r = AccountResult::from_curve(Analysis::MinibatchHiddenState, curve, delta, delta - df, df)?;
            let fam = sl.family(params, t, n, beta);
            r.tau_star = Some(fam.tau);
            r.theta = Some(theta);
            r.beta = Some(beta);
            r.schedule = Some(fam);
            Some(r)
        }
    };
    choose(public, shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::schedule::rho_for_schedule;
    use crate::params::ConvexityClass;

    fn sc(t_sigma: f64) -> ProblemParams {
        ProblemParams {
            d: 10_000,
            n: 1_000,
            k: 400,
            eta: 400.0,
            sigma: t_sigma,
            clip: 1.0,
            radius: 1.0,
            smoothness: 1.0,
            strong_convexity: 0.9,
            xi: 0.0,
            batch: None,
            convexity: ConvexityClass::StronglyConvex,
        }
    }

    #[test]
    fn grid_min_matches_brute_force() {
        let g = rdp::default_alpha_grid();
        for (r, l) in [(1e-4, 11.5), (0.3, 2.0), (5.0, 20.0), (1e-9, 3.0), (0.0, 4.0)] {
            let brute = g.iter().map(|&a| a * r + l / (a - 1.0)).fold(f64::INFINITY, f64::min);
            assert_eq!(grid_min(&g, r, l).0, brute);
        }
    }

    #[test]
    fn scan_finds_exact_minimum() {
        let f = |n: u64| ((n as f64 - 7777.3).abs(), ());
        let (n, _, _) = scan(1_000_000, 1000, f).unwrap();
        assert_eq!(n, 7777);
        let (n, _, _) = scan(500, 1000, f).unwrap();
        assert_eq!(n, 500);
        assert!(scan(0, 10, f).is_none());
    }

    #[test]
    fn small_horizon_equals_composition() {
        let p = sc(1.0);
        let opts = AccountOptions::default();
        for t in [0u64, 1, 5, 50] {
            let h = optimize_hidden_state(&p, 1e-5, t, &opts).unwrap();
            let c = composition_baseline(&p, 1e-5, t, CompositionVariant::Beta1, &opts.alpha_grid).unwrap();
            assert_eq!(h.epsilon, c.epsilon);
        }
    }

    #[test]
    fn saturates_for_long_horizons() {
        let p = sc(1.0);
        let opts = AccountOptions::default();
        let long = optimize_hidden_state(&p, 1e-5, 100_000, &opts).unwrap();
        let longer = optimize_hidden_state(&p, 1e-5, 10_000_000, &opts).unwrap();
        assert_eq!(long.epsilon, longer.epsilon);
        assert!(long.tau_star.unwrap() > 0);
        let comp = composition_baseline(&p, 1e-5, 100_000, CompositionVariant::Beta1, &opts.alpha_grid).unwrap();
        assert!(long.epsilon < comp.epsilon);
    }

    #[test]
    fn reported_schedule_is_feasible_and_consistent() {
        let p = sc(1.0);
        let opts = AccountOptions::default();
        let r = optimize_hidden_state(&p, 1e-5, 5_000, &opts).unwrap();
        let fam = r.schedule.unwrap();
        assert!(fam.tau > 0);
        let consts = DerivedConstants::new(&p, r.theta.unwrap()).unwrap();
        let s = fam.materialize(&consts).unwrap();
        let alpha = RenyiOrder::new(r.alpha_star).unwrap();
        let rho = rho_for_schedule(&p, &s, alpha, &consts).unwrap();
        assert!((rho - r.rho_star()).abs() <= 1e-9 * rho);
        assert!(r.delta_p + r.delta_f <= 1e-5 * (1.0 + 1e-15));
    }

    #[test]
    fn suboptimal_schedules_never_beat_optimizer() {
        let p = sc(1.0);
        let opts = AccountOptions::default();
        let t = 3_000;
        let r = optimize_hidden_state(&p, 1e-5, t, &opts).unwrap();
        let theta = r.theta.unwrap();
        let consts = DerivedConstants::new(&p, theta).unwrap();
        let alpha = RenyiOrder::new(r.alpha_star).unwrap();
        for (tau, beta) in [(100u64, 0.3), (2_000, 0.5), (2_999, 0.9), (10, 0.01)] {
            let fam = ScheduleFamily {
                t_total: t,
                tau,
                beta,
                cbar1: consts.cbar1,
                c2: consts.c2,
                displacement: p.winf_bound(tau as usize),
            };
            let rho = rho_for_schedule(&p, &fam.materialize(&consts).unwrap(), alpha, &consts).unwrap();
            assert!(rho >= r.rho_star() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn convex_case_uses_theta_grid() {
        let mut p = sc(2.0);
        p.convexity = ConvexityClass::Convex;
        p.strong_convexity = 0.0;
        p.eta = 10.0;
        let opts = AccountOptions::default();
        let r = optimize_hidden_state(&p, 1e-5, 2_000, &opts).unwrap();
        let c = composition_baseline(&p, 1e-5, 2_000, CompositionVariant::Beta1, &opts.alpha_grid).unwrap();
        assert!(r.epsilon <= c.epsilon);
        if let Some(th) = r.theta {
            assert!(opts.theta_grid.contains(&th));
        }
    }

    #[test]
    fn no_public_branch_can_be_infeasible() {
        let p = sc(1.0);
        let opts = AccountOptions {
            include_public_branch: false,
            ..AccountOptions::default()
        };
        assert!(matches!(
            optimize_hidden_state(&p, 1e-5, 1, &opts),
            Err(Error::NoFeasibleSchedule(_))
        ));
        let mut q = p.clone();
        q.k = 1;
        q.eta = 1.0;
        q.strong_convexity = 0.5;
        assert!(matches!(
            optimize_hidden_state(&q, 1e-5, 100, &opts),
            Err(Error::NoFeasibleSchedule(_))
        ));
    }

    #[test]
    fn minibatch_full_batch_delegates() {
        let mut p = sc(1.0);
        p.batch = Some(p.n);
        let opts = AccountOptions::default();
        let a = minibatch_hidden_state(&p, 1e-5, 5_000, &opts).unwrap();
        let b = optimize_hidden_state(&p, 1e-5, 5_000, &opts).unwrap();
        assert_eq!(a.epsilon, b.epsilon);
        assert_eq!(a.analysis, Analysis::MinibatchHiddenState);
    }

    #[test]
    fn minibatch_step_cost_single_direction() {
        let a = RenyiOrder::new(3.0).unwrap();
        let one = minibatch_step_cost(a, 0.1, 1, 2.0, 0.7).unwrap();
        assert_eq!(one, sgm_rdp(a, 0.1, 0.7f64.sqrt() * 2.0).unwrap());
    }
}
