//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    abs: f64,
    err: f64,
}

fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    Piece {
        a,
        b,
        value: k * h,
        abs: abs * h.abs(),
        err: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]` split initially into `pieces` equal parts.
///
/// Stops once the summed error estimate is below `rtol * |I|`, or below the
/// floating-point floor `64 eps * int |f|` for integrands with cancellation.
/// Returns `(integral, error_estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    pieces: usize,
    rtol: f64,
    max_splits: usize,
) -> Result<(f64, f64)> {
    let pieces = pieces.max(1);
    let w = (b - a) / pieces as f64;
    let mut parts: Vec<Piece> = (0..pieces)
        .map(|i| {
            let lo = a + w * i as f64;
            let hi = if i + 1 == pieces { b } else { a + w * (i + 1) as f64 };
            rule(&f, lo, hi)
        })
        .collect();
    let mut splits = 0;
    loop {
        let value: f64 = parts.iter().map(|p| p.value).sum();
        let abs: f64 = parts.iter().map(|p| p.abs).sum();
        let err: f64 = parts.iter().map(|p| p.err).sum();
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error: err,
            });
        }
        if err <= rtol * value.abs() || err <= 64.0 * f64::EPSILON * abs {
            return Ok((value, err));
        }
        if splits >= max_splits {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error: err,
            });
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty partition");
        let p = parts.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        parts.push(rule(&f, p.a, mid));
        parts.push(rule(&f, mid, p.b));
        splits += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1, 1e-14, 10).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (v, _) = integrate(f, -40.0, 40.0, 40, 1e-12, 200).unwrap();
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn cancelling_integrand_hits_floor() {
        let (v, _) = integrate(|x: f64| x.sin(), -3.0, 3.0, 4, 1e-10, 50).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn reports_nonconvergence() {
        let r = integrate(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 2, 1e-14, 3);
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }
}
