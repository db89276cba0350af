//! Shift schedules, the z-recursion, and the hidden-state divergence sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DerivedConstants, ProblemParams};
use crate::rdp::RenyiOrder;

/// Relative slack used when re-checking the z-recursion.
const FEAS_RTOL: f64 = 1e-9;

/// Explicit per-step schedule for steps `tau..T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_total: u64,
    pub tau: u64,
    pub beta: Vec<f64>,
    pub a: Vec<f64>,
    /// `z_tau ..= z_T`, one longer than `beta` and `a`.
    pub z: Vec<f64>,
}

impl Schedule {
    /// Builds a schedule and fills `z` from the backward recursion
    /// `z_t = (z_{t+1} + a_t - c2) / cbar1`, `z_T = 0`.
    pub fn new(t_total: u64, tau: u64, beta: Vec<f64>, a: Vec<f64>, consts: &DerivedConstants) -> Result<Self> {
        if tau > t_total {
            return Err(Error::InfeasibleSchedule(format!("tau = {tau} exceeds T = {t_total}")));
        }
        let len = (t_total - tau) as usize;
        if beta.len() != len || a.len() != len {
            return Err(Error::InfeasibleSchedule(format!(
                "expected {len} steps, got {} betas and {} shifts",
                beta.len(),
                a.len()
            )));
        }
        let z = z_recursion(&a, consts);
        Ok(Self {
            t_total,
            tau,
            beta,
            a,
            z,
        })
    }

    /// The public-state schedule: `tau = 0`, `beta = 1`, no shifts.
    pub fn public_state(t_total: u64) -> Self {
        let len = t_total as usize;
        Self {
            t_total,
            tau: 0,
            beta: vec![1.0; len],
            a: vec![0.0; len],
            z: vec![0.0; len + 1],
        }
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    fn is_public_state(&self) -> bool {
        self.tau == 0 && self.beta.iter().all(|&b| b == 1.0) && self.a.iter().all(|&a| a == 0.0)
    }
}

fn z_recursion(a: &[f64], consts: &DerivedConstants) -> Vec<f64> {
    let mut z = vec![0.0; a.len() + 1];
    for t in (0..a.len()).rev() {
        z[t] = (z[t + 1] + a[t] - consts.c2) / consts.cbar1;
    }
    z
}

/// Independent feasibility check of a schedule.
///
/// The public-state schedule (`tau = 0`, `beta = 1`, `a = 0`) is always
/// accepted: it needs no shifting at all.
pub fn check_schedule(params: &ProblemParams, consts: &DerivedConstants, s: &Schedule) -> Result<()> {
    let n = s.steps();
    if s.a.len() != n || s.z.len() != n + 1 || s.tau + n as u64 != s.t_total {
        return Err(Error::InfeasibleSchedule("inconsistent schedule lengths".into()));
    }
    if let Some(b) = s.beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::InfeasibleSchedule(format!("beta {b} outside [0, 1]")));
    }
    if let Some(a) = s.a.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(Error::InfeasibleSchedule(format!("negative or non-finite shift {a}")));
    }
    if s.is_public_state() {
        return Ok(());
    }
    if s.z[n] != 0.0 {
        return Err(Error::InfeasibleSchedule(format!("z_T = {} is not zero", s.z[n])));
    }
    let fresh = z_recursion(&s.a, consts);
    let scale = fresh
        .iter()
        .fold(0.0f64, |m, z| m.max(z.abs()))
        .max(consts.c2)
        .max(1e-300);
    for (t, (got, want)) in s.z.iter().zip(&fresh).enumerate() {
        if (got - want).abs() > FEAS_RTOL * scale {
            return Err(Error::InfeasibleSchedule(format!(
                "z at offset {t} is {got}, recursion gives {want}"
            )));
        }
        if *want < -FEAS_RTOL * scale {
            return Err(Error::InfeasibleSchedule(format!(
                "z at offset {t} is negative ({want})"
            )));
        }
    }
    let need = params.winf_bound(s.tau as usize);
    if fresh[0] < need * (1.0 - FEAS_RTOL) {
        return Err(Error::InfeasibleSchedule(format!(
            "z_tau = {} falls short of the required displacement {need}",
            fresh[0]
        )));
    }
    Ok(())
}

/// Hidden-state divergence
/// `sum_t alpha (2 clip/n)^2 / (2 beta_t sigma^2) + alpha a_t^2 d / (2 eta^2 (1 - beta_t) sigma^2)`.
///
/// Terms with `a_t = 0` contribute no isotropic cost, even at `beta_t = 1`.
/// `beta_t = 0`, or `beta_t = 1` with `a_t > 0`, yields `+inf`.
pub fn rho_for_schedule(
    params: &ProblemParams,
    sched: &Schedule,
    alpha: RenyiOrder,
    consts: &DerivedConstants,
) -> Result<f64> {
    check_schedule(params, consts, sched)?;
    let a = alpha.get();
    let s = params.step_sensitivity();
    let sig2 = params.sigma * params.sigma;
    let eta2 = params.eta * params.eta;
    let d = params.d as f64;
    let mut total = 0.0;
    for (&b, &shift) in sched.beta.iter().zip(&sched.a) {
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += a * s * s / (2.0 * b * sig2);
        if shift != 0.0 {
            if b == 1.0 {
                return Ok(f64::INFINITY);
            }
            total += a * shift * shift * d / (2.0 * eta2 * (1.0 - b) * sig2);
        }
    }
    Ok(total)
}

/// `ln(expm1(x))` for `x > 0`, and `ln(-expm1(x))` for `x < 0`.
fn ln_abs_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else if x < -0.7 {
        (-x.exp()).ln_1p()
    } else {
        x.exp_m1().abs().ln()
    }
}

/// `ln sum_{j=1}^{n} r^j` given `ln r`.
pub(crate) fn ln_geometric_sum(ln_r: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    if ln_r == 0.0 {
        return nf.ln();
    }
    ln_r + ln_abs_expm1(nf * ln_r) - ln_abs_expm1(ln_r)
}

/// Geometric schedule family: constant `beta`, `a_t = a'_t + c2` with
/// `a'_t` proportional to `cbar1^{-(t - tau)}` and scaled so that `z_tau`
/// equals the required displacement exactly.
///
/// `tau = 0` denotes the public-state schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFamily {
    pub t_total: u64,
    pub tau: u64,
    pub beta: f64,
    pub cbar1: f64,
    pub c2: f64,
    /// Required displacement `min(2R, 2 eta clip tau / sqrt(K))`.
    pub displacement: f64,
}

impl ScheduleFamily {
    pub fn steps(&self) -> u64 {
        self.t_total - self.tau
    }

    /// `sum_t a_t^2` in closed form.
    pub fn sum_sq_shift(&self) -> f64 {
        sum_sq_shift(self.cbar1, self.c2, self.displacement, self.steps())
    }

    /// Expands into explicit per-step vectors.
    pub fn materialize(&self, consts: &DerivedConstants) -> Result<Schedule> {
        if self.tau == 0 {
            return Ok(Schedule::public_state(self.t_total));
        }
        let n = self.steps();
        let ln_q = -self.cbar1.ln();
        let ln_s2 = ln_geometric_sum(2.0 * ln_q, n);
        let a = (0..n)
            .map(|j| self.displacement * ((j + 1) as f64 * ln_q - ln_s2).exp() + self.c2)
            .collect();
        Schedule::new(self.t_total, self.tau, vec![self.beta; n as usize], a, consts)
    }
}

/// `sum (a'_j + c2)^2` for the geometric allocation over `n` steps.
pub(crate) fn sum_sq_shift(cbar1: f64, c2: f64, displacement: f64, n: u64) -> f64 {
    let ln_q = -cbar1.ln();
    let ln_s1 = ln_geometric_sum(ln_q, n);
    let ln_s2 = ln_geometric_sum(2.0 * ln_q, n);
    let dd = displacement;
    let mut total = dd * dd * (-ln_s2).exp();
    if c2 != 0.0 {
        total += 2.0 * c2 * dd * (ln_s1 - ln_s2).exp() + n as f64 * c2 * c2;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConvexityClass;

    fn params() -> ProblemParams {
        ProblemParams {
            d: 50,
            n: 20,
            k: 5,
            eta: 0.5,
            sigma: 1.5,
            clip: 1.0,
            radius: 2.0,
            smoothness: 1.0,
            strong_convexity: 0.0,
            xi: 0.01,
            batch: None,
            convexity: ConvexityClass::Convex,
        }
    }

    fn consts(p: &ProblemParams, theta: f64) -> DerivedConstants {
        DerivedConstants::new(p, theta).unwrap()
    }

    #[test]
    fn geometric_sums() {
        let direct = |r: f64, n: u64| (1..=n).map(|j| r.powi(j as i32)).sum::<f64>();
        for (r, n) in [
            (0.9, 10),
            (1.1, 25),
            (1.0, 7),
            (0.5, 1),
            (1.0 + 1e-12, 1000),
            (0.999, 300),
        ] {
            let got = ln_geometric_sum(f64::ln(r), n).exp();
            assert!((got - direct(r, n)).abs() <= 1e-10 * got, "{r} {n}");
        }
        assert!(ln_geometric_sum(0.5, 5000).is_finite());
    }

    #[test]
    fn family_hits_displacement_exactly() {
        let p = params();
        let c = consts(&p, 0.4);
        for (t, tau) in [(30u64, 4u64), (10, 1), (200, 150)] {
            let fam = ScheduleFamily {
                t_total: t,
                tau,
                beta: 0.3,
                cbar1: c.cbar1,
                c2: c.c2,
                displacement: p.winf_bound(tau as usize),
            };
            let s = fam.materialize(&c).unwrap();
            check_schedule(&p, &c, &s).unwrap();
            assert!((s.z[0] - fam.displacement).abs() <= 1e-12 * fam.displacement);
            let sq: f64 = s.a.iter().map(|a| a * a).sum();
            assert!((sq - fam.sum_sq_shift()).abs() <= 1e-10 * sq);
        }
    }

    #[test]
    fn geometric_allocation_beats_equal_split() {
        let p = params();
        let c = consts(&p, 2.0);
        let (t, tau) = (40u64, 10u64);
        let n = (t - tau) as usize;
        let need = p.winf_bound(tau as usize);
        let fam = ScheduleFamily {
            t_total: t,
            tau,
            beta: 0.5,
            cbar1: c.cbar1,
            c2: c.c2,
            displacement: need,
        };
        // Equal split scaled up until feasible.
        let q = 1.0 / c.cbar1;
        let reach: f64 = (1..=n).map(|j| q.powi(j as i32)).sum();
        let eq = vec![need / reach + c.c2; n];
        let s_eq = Schedule::new(t, tau, vec![0.5; n], eq, &c).unwrap();
        check_schedule(&p, &c, &s_eq).unwrap();
        let alpha = RenyiOrder::new(3.0).unwrap();
        let geo = rho_for_schedule(&p, &fam.materialize(&c).unwrap(), alpha, &c).unwrap();
        let flat = rho_for_schedule(&p, &s_eq, alpha, &c).unwrap();
        assert!(geo <= flat);
    }

    #[test]
    fn public_state_cost() {
        let p = params();
        let c = consts(&p, 0.5);
        let alpha = RenyiOrder::new(4.0).unwrap();
        let s = Schedule::public_state(17);
        let rho = rho_for_schedule(&p, &s, alpha, &c).unwrap();
        let per = 4.0 * (2.0f64 / 20.0).powi(2) / (2.0 * 1.5 * 1.5);
        assert!((rho - 17.0 * per).abs() <= 1e-14 * rho);
        let empty = Schedule::new(0, 0, vec![], vec![], &c).unwrap();
        assert_eq!(rho_for_schedule(&p, &empty, alpha, &c).unwrap(), 0.0);
        // tau = T > 0 leaves the displacement unpaid
        let late = Schedule::new(9, 9, vec![], vec![], &c).unwrap();
        assert!(rho_for_schedule(&p, &late, alpha, &c).is_err());
    }

    #[test]
    fn sentinels_and_infeasibility() {
        let mut p = params();
        p.xi = 0.0;
        let c = consts(&p, 0.5);
        let alpha = RenyiOrder::new(2.0).unwrap();
        let fam = ScheduleFamily {
            t_total: 20,
            tau: 5,
            beta: 0.5,
            cbar1: c.cbar1,
            c2: 0.0,
            displacement: p.winf_bound(5),
        };
        let mut s = fam.materialize(&c).unwrap();
        s.beta[3] = 0.0;
        assert_eq!(rho_for_schedule(&p, &s, alpha, &c).unwrap(), f64::INFINITY);
        s.beta[3] = 1.0;
        assert_eq!(rho_for_schedule(&p, &s, alpha, &c).unwrap(), f64::INFINITY);

        let short = Schedule::new(20, 5, vec![0.5; 15], vec![1e-6; 15], &c).unwrap();
        assert!(matches!(
            rho_for_schedule(&p, &short, alpha, &c),
            Err(Error::InfeasibleSchedule(_))
        ));

        let mut tampered = fam.materialize(&c).unwrap();
        tampered.z[2] += 1.0;
        assert!(check_schedule(&p, &c, &tampered).is_err());
    }

    #[test]
    fn explicit_relaxation_upper_bounds_family() {
        // beta = 1/2 with equal allocation, against the displayed relaxation.
        let mut p = params();
        p.xi = 0.0;
        let c = DerivedConstants {
            c: 1.0,
            cbar1: 1.0,
            c2: 0.0,
            theta: 0.0,
        };
        let alpha = RenyiOrder::new(5.0).unwrap();
        for (t, tau) in [(50u64, 10u64), (100, 3), (12, 11)] {
            let n = t - tau;
            let fam = ScheduleFamily {
                t_total: t,
                tau,
                beta: 0.5,
                cbar1: 1.0,
                c2: 0.0,
                displacement: p.winf_bound(tau as usize),
            };
            let rho = rho_for_schedule(&p, &fam.materialize(&c).unwrap(), alpha, &c).unwrap();
            let s = p.step_sensitivity();
            let sig2 = p.sigma * p.sigma;
            let bound = n as f64 * 2.0 * 5.0 * s * s / sig2
                + 4.0 * 5.0 * fam.displacement.powi(2) * p.d as f64 / (n as f64 * p.eta * p.eta * sig2);
            assert!(rho <= bound);
        }
    }
}
