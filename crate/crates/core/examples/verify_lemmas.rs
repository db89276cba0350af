//! A reduced verification suite, printed as JSON lines.

use zopabi::verify::{default_check_params, default_seed, default_winf_params, run_suite, to_jsonl, CheckSpec};

fn main() -> zopabi::Result<()> {
    let seed = default_seed();
    let checks = vec![
        CheckSpec::BetaIdentity {
            d: 50,
            k: 10,
            samples: 20_000,
            seed,
        },
        CheckSpec::LipschitzTail {
            d: 1_000,
            k: 50,
            c: 0.1,
            theta: None,
            samples: 20_000,
            seed,
        },
        CheckSpec::Winf {
            params: default_winf_params(),
            trials: 100,
            steps: 50,
            seed,
        },
        CheckSpec::BetaUtilityEquivalence {
            params: default_check_params(),
            betas: vec![0.0, 0.5, 1.0],
            trials: 50,
            steps: 50,
            seed,
        },
        CheckSpec::IidVsOrthonormal {
            d: 200,
            k: 20,
            c: 0.5,
            samples: 20_000,
            seed,
        },
        CheckSpec::GeneralizedLipschitz {
            params: default_check_params(),
            samples: 1_000,
            seed,
        },
    ];
    let reports = run_suite(&checks)?;
    print!("{}", to_jsonl(&reports)?);
    Ok(())
}
