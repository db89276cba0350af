//! Subsampled accounting across batch sizes.

use zopabi::accountant::{minibatch_hidden_state, AccountOptions};
use zopabi::{ConvexityClass, ProblemParams};

fn main() -> zopabi::Result<()> {
    let base = ProblemParams {
        d: 100_000,
        n: 2_000,
        k: 500,
        eta: 500.0,
        sigma: 1.0,
        clip: 1.0,
        radius: 1.0,
        smoothness: 1.0,
        strong_convexity: 0.9,
        xi: 0.0,
        batch: None,
        convexity: ConvexityClass::StronglyConvex,
    };
    let opts = AccountOptions::default();
    for b in [2_000, 1_000, 500, 100] {
        let mut p = base.clone();
        p.batch = Some(b);
        for t in [100u64, 10_000] {
            let r = minibatch_hidden_state(&p, 1e-5, t, &opts)?;
            println!(
                "b={b:>5} T={t:>6} eps={:.5} tau={:?} beta={:?}",
                r.epsilon, r.tau_star, r.beta
            );
        }
    }
    Ok(())
}
