//! Per-sample loss oracles and the seeded datasets behind them.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, Purpose};
use crate::error::{Error, Result};

/// Constants a loss declares on the ball of a given radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    pub lipschitz: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
}

/// Finite-sum objective `L(w) = (1/n) sum_i l_i(w)`.
pub trait LossOracle: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn loss(&self, i: usize, w: &DVector<f64>) -> f64;
    /// Used only by the analytic limit and by verification.
    fn grad(&self, i: usize, w: &DVector<f64>) -> DVector<f64>;
    fn constants(&self, radius: f64) -> LossConstants;
    /// Feature vector of sample `i`.
    fn features(&self, i: usize) -> Vec<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `<grad l_i(w), u>`.
    fn directional(&self, i: usize, w: &DVector<f64>, u: DVectorView<f64>) -> f64 {
        self.grad(i, w).dot(&u)
    }

    fn mean_loss(&self, w: &DVector<f64>) -> f64 {
        (0..self.len()).map(|i| self.loss(i, w)).sum::<f64>() / self.len() as f64
    }

    fn mean_grad(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for i in 0..self.len() {
            g += self.grad(i, w);
        }
        g / self.len() as f64
    }

    /// Copy with sample `i` replaced by `x`.
    fn replaced(&self, i: usize, x: &[f64]) -> Result<Self>
    where
        Self: Sized;
}

/// `n x d` matrix of rows drawn from a seeded standard normal and rescaled
/// to norm `feature_norm`.
pub fn gaussian_dataset(n: usize, d: usize, feature_norm: f64, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 || d == 0 || !(feature_norm.is_finite() && feature_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dataset needs n, d > 0 and a finite norm, got n = {n}, d = {d}, norm = {feature_norm}"
        )));
    }
    let mut rng = stream(seed, Purpose::Dataset, 0, 0);
    let mut x = DMatrix::<f64>::zeros(n, d);
    for mut row in x.row_iter_mut() {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let norm = row.norm();
        row *= feature_norm / norm;
    }
    Ok(x)
}

fn check_replacement(n: usize, d: usize, i: usize, x: &[f64]) -> Result<()> {
    if i >= n || x.len() != d {
        return Err(Error::InvalidParameter(format!(
            "replacement index {i} or length {} does not fit an {n} x {d} dataset",
            x.len()
        )));
    }
    Ok(())
}

/// `l_i(w) = (m/2)|w|^2 + ((M - m)/2) w_0^2 + <x_i, w>`.
///
/// The rank-one term acts on the first coordinate, so the Hessian has
/// eigenvalues `M` (once) and `m` (elsewhere).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub data: DMatrix<f64>,
}

impl QuadraticLoss {
    pub fn new(smoothness: f64, strong_convexity: f64, data: DMatrix<f64>) -> Result<Self> {
        if !(strong_convexity >= 0.0 && smoothness >= strong_convexity && smoothness.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic loss needs 0 <= m <= M, got m = {strong_convexity}, M = {smoothness}"
            )));
        }
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        Ok(Self {
            smoothness,
            strong_convexity,
            data,
        })
    }

    fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    fn max_row_norm(&self) -> f64 {
        self.data.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Unconstrained minimizer of the mean loss.
    pub fn minimizer(&self) -> DVector<f64> {
        let mean = self.data.row_mean().transpose();
        let mut w = -mean / self.strong_convexity;
        w[0] *= self.strong_convexity / self.smoothness;
        w
    }
}

impl LossOracle for QuadraticLoss {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn len(&self) -> usize {
        self.data.nrows()
    }

    fn loss(&self, i: usize, w: &DVector<f64>) -> f64 {
        let m = self.strong_convexity;
        0.5 * m * w.norm_squared() + 0.5 * (self.smoothness - m) * w[0] * w[0] + self.data.row(i).dot(&w.transpose())
    }

    fn grad(&self, i: usize, w: &DVector<f64>) -> DVector<f64> {
        let mut g = w * self.strong_convexity + self.row(i);
        g[0] += (self.smoothness - self.strong_convexity) * w[0];
        g
    }

    fn directional(&self, i: usize, w: &DVector<f64>, u: DVectorView<f64>) -> f64 {
        let m = self.strong_convexity;
        let xu: f64 = self.data.row(i).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        m * w.dot(&u) + (self.smoothness - m) * w[0] * u[0] + xu
    }

    fn constants(&self, radius: f64) -> LossConstants {
        LossConstants {
            lipschitz: self.smoothness * radius + self.max_row_norm(),
            smoothness: self.smoothness,
            strong_convexity: self.strong_convexity,
        }
    }

    fn features(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    fn replaced(&self, i: usize, x: &[f64]) -> Result<Self> {
        check_replacement(self.len(), self.dim(), i, x)?;
        let mut out = self.clone();
        for (j, v) in x.iter().enumerate() {
            out.data[(i, j)] = *v;
        }
        Ok(out)
    }
}

/// `l_i(w) = ln(1 + exp(-y_i <x_i, w>)) + (lambda/2)|w|^2`, labels in `{-1, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLoss {
    pub data: DMatrix<f64>,
    pub labels: Vec<f64>,
    pub reg: f64,
}

impl LogisticLoss {
    pub fn new(data: DMatrix<f64>, labels: Vec<f64>, reg: f64) -> Result<Self> {
        if labels.len() != data.nrows() || labels.iter().any(|y| y.abs() != 1.0) {
            return Err(Error::InvalidParameter("labels must be +-1, one per row".into()));
        }
        if !(reg.is_finite() && reg >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization {reg} must be non-negative"
            )));
        }
        Ok(Self { data, labels, reg })
    }

    /// Labels from the sign of a seeded random teacher.
    pub fn with_teacher(data: DMatrix<f64>, reg: f64, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Purpose::Dataset, 1, 0);
        let teacher: DVector<f64> = DVector::from_fn(data.ncols(), |_, _| rng.sample(StandardNormal));
        let labels = (0..data.nrows())
            .map(|i| {
                if data.row(i).dot(&teacher.transpose()) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Self::new(data, labels, reg)
    }

    fn margin(&self, i: usize, w: &DVector<f64>) -> f64 {
        self.labels[i] * self.data.row(i).dot(&w.transpose())
    }
}

/// `ln(1 + e^{-z})` without overflow.
fn softplus_neg(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

impl LossOracle for LogisticLoss {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn len(&self) -> usize {
        self.data.nrows()
    }

    fn loss(&self, i: usize, w: &DVector<f64>) -> f64 {
        softplus_neg(self.margin(i, w)) + 0.5 * self.reg * w.norm_squared()
    }

    fn grad(&self, i: usize, w: &DVector<f64>) -> DVector<f64> {
        let z = self.margin(i, w);
        // d/dz ln(1 + e^{-z}) = -1 / (1 + e^z)
        let s = -1.0 / (1.0 + z.exp());
        self.data.row(i).transpose() * (s * self.labels[i]) + w * self.reg
    }

    fn constants(&self, radius: f64) -> LossConstants {
        let x2 = self.data.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
        LossConstants {
            lipschitz: x2.sqrt() + self.reg * radius,
            smoothness: 0.25 * x2 + self.reg,
            strong_convexity: self.reg,
        }
    }

    fn features(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    fn replaced(&self, i: usize, x: &[f64]) -> Result<Self> {
        check_replacement(self.len(), self.dim(), i, x)?;
        let mut out = self.clone();
        for (j, v) in x.iter().enumerate() {
            out.data[(i, j)] = *v;
        }
        Ok(out)
    }
}
