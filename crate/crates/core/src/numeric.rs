//! Small numerical helpers shared by the state builders and quadrature.

use std::sync::OnceLock;

const LN_FACTORIAL_CACHE: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_CACHE + 1);
        t.push(0.0);
        let mut acc = 0.0_f64;
        for k in 1..=LN_FACTORIAL_CACHE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln n!`, exact cumulative sum of logarithms for n up to 4096.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    if n <= LN_FACTORIAL_CACHE {
        table[n]
    } else {
        // Stirling with three correction terms; only reached far outside any
        // truncation used by this crate.
        let x = n as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3))
            + 1.0 / (1260.0 * x.powi(5))
    }
}

/// `ln Σ exp(v)` over the finite entries of `values`; `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// `n` log-spaced points on `[lo, hi]`, endpoints included.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Relative agreement with an absolute floor of one: `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn agrees(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
