//! Coupled runs on adjacent datasets and the distance bound.

use zopabi::zogd::{gaussian_dataset, run_adjacent_pair, LossOracle, QuadraticLoss, RunConfig};
use zopabi::{ConvexityClass, ProblemParams};

fn main() -> zopabi::Result<()> {
    let p = ProblemParams {
        d: 50,
        n: 40,
        k: 5,
        eta: 5.0,
        sigma: 0.5,
        clip: 0.5,
        radius: 1.0,
        smoothness: 1.0,
        strong_convexity: 0.5,
        xi: 0.0,
        batch: None,
        convexity: ConvexityClass::StronglyConvex,
    };
    let loss = QuadraticLoss::new(p.smoothness, p.strong_convexity, gaussian_dataset(p.n, p.d, 0.5, 1)?)?;
    let replacement: Vec<f64> = loss.features(0).iter().map(|v| -100.0 * v).collect();
    let cfg = RunConfig::new(60, 0.5, 42);
    let (a, b) = run_adjacent_pair(&p, &loss, 0, &replacement, &cfg)?;
    for (t, d) in a.distances(&b).into_iter().enumerate().step_by(10) {
        println!(
            "t={t:>3} distance={d:.5} bound={:.5} loss={:.5}",
            p.winf_bound(t),
            loss.mean_loss(&a.iterates[t])
        );
    }
    Ok(())
}
