//! Sampled Gaussian mechanism divergences in both directions.

use zopabi::rdp::{sgm_rdp, sgm_rdp_reverse};
use zopabi::RenyiOrder;

fn main() -> zopabi::Result<()> {
    println!("{:>6} {:>6} {:>6} {:>14} {:>14}", "alpha", "q", "sigma", "S", "reverse");
    for a in [2.0, 4.0, 8.0, 32.0] {
        for q in [0.001, 0.01, 0.1, 1.0] {
            for s in [0.5, 1.0, 2.0] {
                let alpha = RenyiOrder::new(a)?;
                let fwd = sgm_rdp(alpha, q, s)?;
                let rev = sgm_rdp_reverse(alpha, q, s)?;
                println!("{a:>6} {q:>6} {s:>6} {fwd:>14.6e} {rev:>14.6e}");
            }
        }
    }
    Ok(())
}
