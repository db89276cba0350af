//! Random direction frames.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Uniform on the Stiefel manifold: orthonormal columns.
    Stiefel,
    /// Independent uniform points on the sphere.
    IidSphere,
}

/// `d x K` matrix whose columns are the update directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFrame {
    u: DMatrix<f64>,
    mode: FrameMode,
}

impl DirectionFrame {
    /// Wraps an explicit matrix after checking the invariant of `mode`.
    pub fn new(u: DMatrix<f64>, mode: FrameMode) -> Result<Self> {
        let f = Self { u, mode };
        let ok = match mode {
            FrameMode::Stiefel => f.orthonormality_error() <= 1e-10,
            FrameMode::IidSphere => f.u.column_iter().all(|c| (c.norm() - 1.0).abs() <= 1e-12),
        };
        if !ok || f.u.ncols() == 0 || f.u.ncols() > f.u.nrows() {
            return Err(Error::InvalidParameter(format!("matrix is not a valid {mode:?} frame")));
        }
        Ok(f)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn mode(&self) -> FrameMode {
        self.mode
    }

    pub fn d(&self) -> usize {
        self.u.nrows()
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.u.transpose() * &self.u;
        let k = g.nrows();
        (g - DMatrix::<f64>::identity(k, k)).amax()
    }

    /// `sum_k <a, u_k>^2`.
    pub fn projection_mass(&self, a: &[f64]) -> f64 {
        self.u
            .column_iter()
            .map(|c| {
                let p: f64 = c.iter().zip(a).map(|(x, y)| x * y).sum();
                p * p
            })
            .sum()
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    // column-major fill, so column j only depends on the draws before it
    DMatrix::from_iterator(d, k, (0..d * k).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Samples a frame of `k` directions in dimension `d`.
///
/// Stiefel frames orthonormalize a Gaussian matrix by QR and flip each
/// column so the triangular factor has a positive diagonal; the result is
/// invariant under left rotations, hence uniform.
pub fn sample_frame<R: Rng + ?Sized>(d: usize, k: usize, mode: FrameMode, rng: &mut R) -> Result<DirectionFrame> {
    if k == 0 || k > d {
        return Err(Error::InvalidParameter(format!(
            "frame needs 1 <= k <= d, got k = {k}, d = {d}"
        )));
    }
    let g = gaussian_matrix(d, k, rng);
    let u = match mode {
        FrameMode::Stiefel => {
            let qr = g.qr();
            let r = qr.r();
            let mut q = qr.q();
            for j in 0..k {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            q
        }
        FrameMode::IidSphere => {
            let mut g = g;
            for mut c in g.column_iter_mut() {
                let n = c.norm();
                c /= n;
            }
            g
        }
    };
    Ok(DirectionFrame { u, mode })
}
