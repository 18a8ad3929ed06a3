//! Continuous power-law MLE with KS-selected lower cutoff, in the style of
//! Clauset, Shalizi and Newman's `plfit`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tail size below which a fit is reported as low-confidence.
pub const MIN_TAIL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha_hat: f64,
    pub xmin_hat: f64,
    /// Samples at or above `xmin_hat`.
    pub n_tail: usize,
    /// KS distance between the tail and the fitted CDF.
    pub ks: f64,
    /// No candidate cutoff left `MIN_TAIL` samples in the tail.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    /// MLE rate of the shifted exponential `1 − exp(−λ(x − x_min))`.
    pub rate: f64,
    pub xmin: f64,
    pub n_tail: usize,
    pub ks: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdfKind {
    Continuous,
    Discrete,
}

fn sorted_positive(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Degenerate("no samples to fit".into()));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::Domain(format!("power-law samples must be positive and finite, got {bad}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Two-sided KS distance between the empirical CDF of `sorted` (ascending)
/// and a continuous `cdf`. Ties are handled as a single ECDF jump.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((i as f64 / m - f).abs()).max((j as f64 / m - f).abs());
        i = j;
    }
    d
}

struct Candidate {
    start: usize,
    alpha: f64,
    ks: f64,
}

pub fn fit_power_law(samples: &[f64]) -> Result<PowerLawFit> {
    let xs = sorted_positive(samples)?;
    let n = xs.len();
    if xs[0] == xs[n - 1] {
        return Err(Error::Degenerate("all samples are identical".into()));
    }
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + logs[i];
    }
    // First index of every distinct value whose tail still has two distinct values.
    let starts: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || xs[i] != xs[i - 1]) && xs[i] < xs[n - 1])
        .collect();
    let confident: Vec<usize> = starts.iter().copied().filter(|&i| n - i >= MIN_TAIL).collect();
    let low_confidence = confident.is_empty();
    let pool = if low_confidence { starts } else { confident };

    let evaluate = |start: usize| {
        let m = (n - start) as f64;
        let ln_min = logs[start];
        let alpha = 1.0 + m / (suffix[start] - m * ln_min);
        let tail = &xs[start..];
        let tail_logs = &logs[start..];
        // Same as ks_distance, inlined to reuse the precomputed logs.
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < tail.len() {
            let mut j = i + 1;
            while j < tail.len() && tail[j] == tail[i] {
                j += 1;
            }
            let f = 1.0 - ((1.0 - alpha) * (tail_logs[i] - ln_min)).exp();
            d = d.max((i as f64 / m - f).abs()).max((j as f64 / m - f).abs());
            i = j;
        }
        Candidate { start, alpha, ks: d }
    };
    let best = pool
        .into_par_iter()
        .map(evaluate)
        .reduce_with(|a, b| {
            // Lower KS wins; on a tie the smaller cutoff keeps more data.
            if b.ks < a.ks || (b.ks == a.ks && b.start < a.start) {
                b
            } else {
                a
            }
        })
        .expect("at least one candidate when two distinct values exist");

    Ok(PowerLawFit {
        alpha_hat: best.alpha,
        xmin_hat: xs[best.start],
        n_tail: n - best.start,
        ks: best.ks,
        low_confidence,
    })
}

/// Shifted-exponential MLE on the samples at or above `xmin`.
pub fn fit_exponential(samples: &[f64], xmin: f64) -> Result<ExponentialFit> {
    let xs = sorted_positive(samples)?;
    let start = xs.partition_point(|x| *x < xmin);
    let tail = &xs[start..];
    if tail.is_empty() {
        return Err(Error::Degenerate(format!("no samples at or above {xmin}")));
    }
    let excess = tail.iter().map(|x| x - xmin).sum::<f64>() / tail.len() as f64;
    if excess <= 0.0 {
        return Err(Error::Degenerate("tail has no spread above the cutoff".into()));
    }
    let rate = 1.0 / excess;
    Ok(ExponentialFit {
        rate,
        xmin,
        n_tail: tail.len(),
        ks: ks_distance(tail, |x| 1.0 - (-rate * (x - xmin)).exp()),
    })
}

// Bernoulli numbers B₂ … B₁₆.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^(−s)` for `s > 1`, `a > 0`.
///
/// Direct summation of the first terms, then an Euler–Maclaurin remainder.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0 && a > 0.0 && s.is_finite() && a.is_finite()) {
        return Err(Error::Domain(format!("hurwitz zeta needs s > 1 and a > 0, got s={s}, a={a}")));
    }
    const HEAD: usize = 16;
    let mut sum = 0.0;
    for k in 0..HEAD {
        let term = (k as f64 + a).powf(-s);
        sum += term;
        if term < 1e-17 * sum {
            return Ok(sum);
        }
    }
    let x = HEAD as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // term_j = B_2j/(2j)! · s(s+1)…(s+2j−2) · x^(−s−2j+1)
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        let term = b / factorial * rising * power;
        sum += term;
        if term.abs() < 1e-17 * sum {
            break;
        }
        let k = 2.0 * (j as f64 + 1.0);
        rising *= (s + k - 1.0) * (s + k);
        factorial *= (k + 1.0) * (k + 2.0);
        power /= x * x;
    }
    Ok(sum)
}

pub fn power_law_pdf(x: f64, alpha: f64, xmin: f64, kind: PdfKind) -> Result<f64> {
    if !(alpha > 1.0 && xmin > 0.0) {
        return Err(Error::Domain(format!("power law needs alpha > 1 and xmin > 0, got {alpha}, {xmin}")));
    }
    if !(x >= xmin) {
        return Err(Error::Domain(format!("x = {x} lies below xmin = {xmin}")));
    }
    match kind {
        PdfKind::Continuous => Ok((alpha - 1.0) / xmin * (x / xmin).powf(-alpha)),
        PdfKind::Discrete => Ok(x.powf(-alpha) / hurwitz_zeta(alpha, xmin)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pareto(alpha: f64, xmin: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                xmin * (1.0 - u).powf(-1.0 / (alpha - 1.0))
            })
            .collect()
    }

    #[test]
    fn recovers_synthetic_exponents() {
        for (alpha, seed) in [(2.5, 1), (1.5, 2), (3.0, 3)] {
            let fit = fit_power_law(&pareto(alpha, 1.0, 10_000, seed)).unwrap();
            assert!((fit.alpha_hat - alpha).abs() < 0.05, "{alpha}: {fit:?}");
            assert!(!fit.low_confidence);
            assert!(fit.n_tail >= MIN_TAIL);
        }
    }

    #[test]
    fn fixed_cutoff_estimator_matches_closed_form() {
        let xs = [1.0, 2.0, 4.0];
        // With xmin = 1 chosen, α̂ = 1 + 3 / ln 8.
        let fit = fit_power_law(&xs).unwrap();
        assert!(fit.low_confidence);
        if fit.xmin_hat == 1.0 {
            assert!((fit.alpha_hat - (1.0 + 3.0 / 8f64.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_data_fits_worse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let expo: Vec<f64> = (0..10_000).map(|_| 1.0 - (1.0 - rng.random::<f64>()).ln()).collect();
        let bad = fit_power_law(&expo).unwrap();
        let good = fit_power_law(&pareto(2.5, 1.0, 10_000, 6)).unwrap();
        assert!(bad.ks > 3.0 * good.ks, "{} vs {}", bad.ks, good.ks);
        // And the exponential alternative wins on its own data.
        assert!(fit_exponential(&expo, bad.xmin_hat).unwrap().ks < bad.ks);
    }

    #[test]
    fn exponential_fit_on_power_law_data_is_worse() {
        let xs = pareto(2.0, 1.0, 10_000, 7);
        let fit = fit_power_law(&xs).unwrap();
        let exp = fit_exponential(&xs, fit.xmin_hat).unwrap();
        assert!(exp.ks > fit.ks);
        assert_eq!(exp.n_tail, fit.n_tail);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_power_law(&[2.0; 10]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_power_law(&[]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_power_law(&[1.0, -1.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_power_law(&[1.0, f64::NAN]), Err(Error::Domain(_))));
        assert!(fit_exponential(&[1.0, 2.0], 5.0).is_err());
    }

    #[test]
    fn ks_examples() {
        // Uniform CDF against a perfectly spread sample: D = 1/m.
        let xs = [0.25, 0.5, 0.75, 1.0];
        assert!((ks_distance(&xs, |x| x) - 0.25).abs() < 1e-15);
        // Ties collapse to one jump.
        assert!((ks_distance(&[0.5, 0.5], |x| x) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zeta_closed_forms() {
        assert!((hurwitz_zeta(2.0, 1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((hurwitz_zeta(2.0, 2.0).unwrap() - (PI * PI / 6.0 - 1.0)).abs() < 1e-14);
        assert!((hurwitz_zeta(3.0, 1.0).unwrap() - 1.2020569031595942).abs() < 1e-14);
        // ζ(2, 1/2) = π²/2
        assert!((hurwitz_zeta(2.0, 0.5).unwrap() - PI * PI / 2.0).abs() < 1e-13);
        // Slowly converging exponent: compare with a long direct sum plus its integral tail.
        let direct: f64 = (0..2_000_000).map(|k| (k as f64 + 1.0).powf(-1.1)).sum::<f64>()
            + (2_000_000.5f64).powf(-0.1) / 0.1;
        assert!((hurwitz_zeta(1.1, 1.0).unwrap() - direct).abs() < 1e-6);
        assert!(hurwitz_zeta(1.0, 1.0).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(power_law_pdf(2.0, 2.5, 2.0, PdfKind::Continuous).unwrap(), 0.75);
        let p = power_law_pdf(1.0, 2.0, 1.0, PdfKind::Discrete).unwrap();
        assert!((p - 6.0 / (PI * PI)).abs() < 1e-14);
        assert!((p - 0.6079).abs() < 1e-4);
        assert!(power_law_pdf(0.5, 2.0, 1.0, PdfKind::Continuous).is_err());
        assert!(power_law_pdf(2.0, 1.0, 1.0, PdfKind::Continuous).is_err());
    }

    #[test]
    fn continuous_pdf_integrates_to_one() {
        for (alpha, xmin) in [(1.5, 1.0), (2.5, 0.3), (3.5, 7.0)] {
            // Substitute x = xmin·e^t and integrate with composite Simpson.
            let upper = 60.0 / (alpha - 1.0);
            let steps = 200_000;
            let h = upper / steps as f64;
            let f = |t: f64| {
                let x = xmin * f64::exp(t);
                power_law_pdf(x, alpha, xmin, PdfKind::Continuous).unwrap() * x
            };
            let mut s = f(0.0) + f(upper);
            for i in 1..steps {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let integral = s * h / 3.0;
            assert!((integral - 1.0).abs() < 1e-6, "{alpha}: {integral}");
        }
    }

    #[test]
    fn discrete_pmf_sums_to_one() {
        for (alpha, xmin) in [(2.5, 1.0), (3.0, 2.0), (4.0, 5.0)] {
            let total: f64 = (0..1_000_000)
                .map(|k| power_law_pdf(xmin + k as f64, alpha, xmin, PdfKind::Discrete).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-6, "{alpha}: {total}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn fit_invariants(xs in prop::collection::vec(0.01f64..1000.0, 2..200)) {
            prop_assume!(xs.iter().any(|x| *x != xs[0]));
            let fit = fit_power_law(&xs).unwrap();
            prop_assert!(fit.alpha_hat > 1.0);
            prop_assert!(fit.xmin_hat <= xs.iter().cloned().fold(0.0, f64::max));
            prop_assert!(fit.n_tail >= 2 && fit.n_tail <= xs.len());
            prop_assert!(fit.ks >= 0.0 && fit.ks <= 1.0);
            prop_assert_eq!(fit.low_confidence, xs.len() < MIN_TAIL || fit.n_tail < MIN_TAIL);
        }

        #[test]
        fn fit_is_order_independent(seed in any::<u64>()) {
            let mut xs = pareto(2.2, 1.0, 300, seed);
            let a = fit_power_law(&xs).unwrap();
            xs.reverse();
            prop_assert_eq!(a, fit_power_law(&xs).unwrap());
        }
    }
}
