//! Renyi divergence primitives: Gaussian and sampled Gaussian costs,
//! composition, and conversion to (epsilon, delta).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance of the fractional-order quadrature.
pub const SGM_RTOL: f64 = 1e-10;
const SGM_MAX_SPLITS: usize = 4000;

/// A Renyi order, strictly greater than one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RenyiOrder(f64);

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "Renyi order must be finite and > 1, got {alpha}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RenyiOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RenyiOrder> for f64 {
    fn from(a: RenyiOrder) -> f64 {
        a.0
    }
}

/// Integers 2..=256 plus 60 geometric points strictly inside (1.01, 2).
pub fn default_alpha_grid() -> Vec<f64> {
    let ratio: f64 = 2.0 / 1.01;
    let mut grid: Vec<f64> = (1..=60).map(|i| 1.01 * ratio.powf(i as f64 / 61.0)).collect();
    grid.extend((2..=256).map(|a| a as f64));
    grid
}

/// `alpha * s^2 / (2 sigma^2)`.
pub fn gaussian_rdp(alpha: RenyiOrder, sensitivity: f64, noise_std: f64) -> Result<f64> {
    if !(noise_std.is_finite() && noise_std > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise_std must be positive, got {noise_std}"
        )));
    }
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be non-negative, got {sensitivity}"
        )));
    }
    let r = sensitivity / noise_std;
    Ok(alpha.0 * r * r / 2.0)
}

/// `ln(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(expm1(x))` for `x > 0`.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ln(1 + exp(x))`.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_sgm_args(q: f64, sigma: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling rate must lie in (0, 1], got {q}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Renyi divergence of the sampled Gaussian mechanism,
/// `S_alpha(q, s) = D_alpha(N(0, s^2) || (1-q) N(0, s^2) + q N(1, s^2))`.
///
/// Evaluated by adaptive quadrature of `ln(A - 1)`, where `A` is the
/// defining integral, so tiny sampling rates keep full relative precision.
/// `q = 1` returns the Gaussian value `alpha / (2 s^2)`.
pub fn sgm_rdp(alpha: RenyiOrder, q: f64, sigma: f64) -> Result<f64> {
    check_sgm_args(q, sigma)?;
    let a = alpha.0;
    if q == 1.0 {
        return Ok(a / (2.0 * sigma * sigma));
    }
    let log_excess = sgm_log_excess_quad(1.0 - a, 1.0 + 40.0 * sigma, q, sigma)?;
    Ok((ln_1p_exp(log_excess) / (a - 1.0)).max(0.0))
}

/// The divergence in the opposite direction,
/// `D_alpha((1-q) N(0, s^2) + q N(1, s^2) || N(0, s^2))`, which upper-bounds
/// [`sgm_rdp`]. Integer orders use the binomial series, other orders the
/// same quadrature as [`sgm_rdp`].
pub fn sgm_rdp_reverse(alpha: RenyiOrder, q: f64, sigma: f64) -> Result<f64> {
    check_sgm_args(q, sigma)?;
    let a = alpha.0;
    if q == 1.0 {
        return Ok(a / (2.0 * sigma * sigma));
    }
    let log_excess = if a.fract() == 0.0 && a <= 1e6 {
        sgm_log_excess_series(a as u64, q, sigma)
    } else {
        sgm_log_excess_quad(a, a + 40.0 * sigma, q, sigma)?
    };
    Ok((ln_1p_exp(log_excess) / (a - 1.0)).max(0.0))
}

/// `ln(A - 1)` with `A - 1 = sum_{k>=2} C(a,k) (1-q)^(a-k) q^k (exp((k^2-k)/(2 s^2)) - 1)`.
fn sgm_log_excess_series(a: u64, q: f64, sigma: f64) -> f64 {
    let l1q = (-q).ln_1p();
    let lq = q.ln();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let af = a as f64;
    let mut log_binom = af.ln() + (af - 1.0).ln() - 2f64.ln();
    let mut acc = f64::NEG_INFINITY;
    for k in 2..=a {
        let kf = k as f64;
        if k > 2 {
            log_binom += (af - kf + 1.0).ln() - kf.ln();
        }
        let term = log_binom + (af - kf) * l1q + kf * lq + ln_expm1((kf * kf - kf) * inv);
        acc = log_add_exp(acc, term);
    }
    acc
}

/// `ln(int N(z; 0, s^2) ((1 - q + q r(z))^p - 1) dz)` with
/// `r(z) = exp((2z - 1) / (2 s^2))`, integrated over `[-40 s, hi]`.
fn sgm_log_excess_quad(p: f64, hi: f64, q: f64, sigma: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let log_norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
    let log_mu0 = |z: f64| log_norm - z * z / (2.0 * s2);
    let l1q = (-q).ln_1p();
    let lq = q.ln();
    // ln(1 + q (r - 1))
    let log_ratio = move |z: f64| {
        let x = (2.0 * z - 1.0) / (2.0 * s2);
        if x < 30.0 {
            (q * x.exp_m1()).ln_1p()
        } else {
            log_add_exp(l1q, lq + x)
        }
    };
    let lo = -40.0 * sigma;
    let pieces = ((hi - lo) / sigma).ceil().clamp(8.0, 20_000.0) as usize;
    let shift = (0..=pieces)
        .map(|i| {
            let z = lo + (hi - lo) * i as f64 / pieces as f64;
            log_mu0(z) + (p * log_ratio(z)).max(0.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let g = |z: f64| {
        let m = log_mu0(z) - shift;
        let e = p * log_ratio(z);
        if e < 700.0 {
            m.exp() * e.exp_m1()
        } else {
            (m + e).exp() - m.exp()
        }
    };
    let (value, _) = quad::integrate(g, lo, hi, pieces, SGM_RTOL, SGM_MAX_SPLITS)?;
    if value <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(shift + value.ln())
}

/// Divergence bound as a function of the Renyi order, on a fixed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    alphas: Vec<f64>,
    rhos: Vec<f64>,
}

fn check_grid(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("alpha grid is empty".into()));
    }
    for &a in alphas {
        RenyiOrder::new(a)?;
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("alpha grid must be strictly increasing".into()));
    }
    Ok(())
}

impl RdpCurve {
    pub fn new(alphas: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        check_grid(&alphas)?;
        if alphas.len() != rhos.len() {
            return Err(Error::InvalidParameter("alpha and rho lengths differ".into()));
        }
        if let Some(r) = rhos.iter().find(|r| r.is_nan() || **r < 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be >= 0, got {r}")));
        }
        Ok(Self { alphas, rhos })
    }

    pub fn zero(alphas: Vec<f64>) -> Result<Self> {
        let rhos = vec![0.0; alphas.len()];
        Self::new(alphas, rhos)
    }

    /// Builds a curve by evaluating `f` at every order.
    pub fn from_fn<F>(alphas: Vec<f64>, mut f: F) -> Result<Self>
    where
        F: FnMut(RenyiOrder) -> Result<f64>,
    {
        check_grid(&alphas)?;
        let rhos = alphas.iter().map(|&a| f(RenyiOrder(a))).collect::<Result<Vec<_>>>()?;
        Self::new(alphas, rhos)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rhos
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// The stored value at a grid order, if present.
    pub fn get(&self, alpha: f64) -> Option<f64> {
        self.alphas.iter().position(|&a| a == alpha).map(|i| self.rhos[i])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alphas: self.alphas.clone(),
            rhos: self.rhos.iter().map(|r| r * factor).collect(),
        }
    }
}

/// Pointwise sum of curves sharing one grid.
pub fn compose(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to compose".into()))?;
    if curves.iter().any(|c| c.alphas != first.alphas) {
        return Err(Error::GridMismatch);
    }
    let rhos = (0..first.len())
        .map(|i| curves.iter().map(|c| c.rhos[i]).sum())
        .collect();
    Ok(RdpCurve {
        alphas: first.alphas.clone(),
        rhos,
    })
}

/// `ln(1/delta) / (alpha - 1)`.
pub fn conversion_term(alpha: f64, delta: f64) -> f64 {
    -delta.ln() / (alpha - 1.0)
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

/// Minimum over the grid of `rho(alpha) + ln(1/delta)/(alpha - 1)`.
///
/// Returns `(epsilon, alpha_star)`; ties go to the smaller order.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<(f64, f64)> {
    check_delta(delta)?;
    let mut best = (f64::INFINITY, curve.alphas[0]);
    for (&a, &r) in curve.alphas.iter().zip(&curve.rhos) {
        let eps = r + conversion_term(a, delta);
        if eps < best.0 {
            best = (eps, a);
        }
    }
    Ok(best)
}
