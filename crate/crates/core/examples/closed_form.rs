//! The explicit strongly convex bound next to the optimized schedule.

use zopabi::accountant::{closed_form_strongly_convex, optimize_hidden_state, AccountOptions};
use zopabi::{ConvexityClass, ProblemParams};

fn main() -> zopabi::Result<()> {
    let p = ProblemParams {
        d: 1_000_000,
        n: 10_000,
        k: 204,
        eta: 204.0,
        sigma: 0.5,
        clip: 1.0,
        radius: 1.0,
        smoothness: 1.0,
        strong_convexity: 0.9,
        xi: 0.0,
        batch: None,
        convexity: ConvexityClass::StronglyConvex,
    };
    let opts = AccountOptions::default();
    let window = p.saturation_window();
    println!("saturation window {window}");
    for t in [window / 10, window, 4 * window, 100 * window] {
        let cf = closed_form_strongly_convex(&p, 1e-5, t, &opts.alpha_grid)?;
        let opt = optimize_hidden_state(&p, 1e-5, t, &opts)?;
        println!(
            "T={t:>10} closed_form eps={:.5} (alpha {}) optimized eps={:.5} (alpha {}, tau {:?}, beta {:?})",
            cf.epsilon, cf.alpha_star, opt.epsilon, opt.alpha_star, opt.tau_star, opt.beta
        );
    }
    Ok(())
}
