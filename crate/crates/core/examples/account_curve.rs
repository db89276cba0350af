//! Epsilon versus horizon for every full-batch analysis on a large problem.

use zopabi::accountant::{account_curve, AccountOptions, Analysis};
use zopabi::concentration::min_k;
use zopabi::{ConvexityClass, ProblemParams};

fn main() -> zopabi::Result<()> {
    let mut p = ProblemParams {
        d: 1_000_000,
        n: 10_000,
        k: 1,
        eta: 1.0,
        sigma: 0.5,
        clip: 1.0,
        radius: 1.0,
        smoothness: 1.0,
        strong_convexity: 0.9,
        xi: 0.0,
        batch: None,
        convexity: ConvexityClass::StronglyConvex,
    };
    let delta = 1e-5;
    p.k = min_k(&p, delta)?;
    p.eta = p.k as f64;

    let analyses = [
        Analysis::HiddenState,
        Analysis::ClosedForm,
        Analysis::CompositionBeta1,
        Analysis::CompositionBeta0,
        Analysis::OutputPerturbation,
    ];
    let t_grid: Vec<u64> = (0..9).map(|i| 10u64.pow(i)).collect();
    let rows = account_curve(&p, delta, &t_grid, &analyses, &AccountOptions::default())?;

    print!("{:>10}", "T");
    for a in &analyses {
        print!(" {:>20}", a.as_str());
    }
    println!();
    for row in rows {
        print!("{:>10}", row.t);
        for r in &row.results {
            print!(" {:>20.6}", r.epsilon);
        }
        println!();
    }
    Ok(())
}
