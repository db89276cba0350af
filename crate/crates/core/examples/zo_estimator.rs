//! Zeroth-order gradient estimates against the analytic gradient.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zopabi::zogd::{gaussian_dataset, sample_frame, zo_gradient, FrameMode, LossOracle, QuadraticLoss};

fn main() -> zopabi::Result<()> {
    let (d, n) = (64, 32);
    let loss = QuadraticLoss::new(1.0, 0.5, gaussian_dataset(n, d, 1.0, 3)?)?;
    let all: Vec<usize> = (0..n).collect();
    let w = DVector::from_fn(d, |i, _| (i as f64 * 0.37).sin());
    let exact = loss.mean_grad(&w);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in [1, 8, 32, 64] {
        for mode in [FrameMode::Stiefel, FrameMode::IidSphere] {
            let frame = sample_frame(d, k, mode, &mut rng)?;
            let g = zo_gradient(&w, &frame, &loss, &all, 1e-6, 1e9)?;
            let scaled = &g * (d as f64 / k as f64);
            println!(
                "K={k:>2} {mode:?}: |g - P grad| = {:.2e}, cos(d/K g, grad) = {:.4}",
                (&g - frame.matrix() * (frame.matrix().transpose() * &exact)).norm(),
                scaled.dot(&exact) / (scaled.norm() * exact.norm())
            );
        }
    }
    Ok(())
}
