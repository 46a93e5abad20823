//! Small statistical helpers for the simulation harness and the
//! distribution tests: chi-square goodness of fit and the exact
//! (Clopper-Pearson) binomial confidence interval.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;

/// Pearson chi-square statistic against the given expected counts.
/// Cells with expected count below `min_expected` are pooled together.
pub fn chi_square_stat(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    (stat, cells)
}

/// Critical value of the chi-square distribution with `df` degrees of
/// freedom at significance `alpha`.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    assert!(df >= 1);
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}

/// Goodness-of-fit test against given cell probabilities.
pub fn chi_square_ok(observed: &[u64], probs: &[f64], trials: u64, alpha: f64) -> bool {
    let expected: Vec<f64> = probs.iter().map(|p| p * trials as f64).collect();
    let (stat, cells) = chi_square_stat(observed, &expected, 5.0);
    if cells < 2 {
        return true;
    }
    stat < chi_square_critical(cells - 1, alpha)
}

/// Uniformity test over `observed.len()` equally likely cells.
pub fn chi_square_uniformity_ok(observed: &[u64], trials: u64, alpha: f64) -> bool {
    let p = 1.0 / observed.len() as f64;
    let probs = vec![p; observed.len()];
    chi_square_ok(observed, &probs, trials, alpha)
}

/// Beta quantile by bisection on the regularized incomplete beta function
/// (the generic statrs inverse is only ~1e-6 accurate).
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper-Pearson) two-sided confidence interval for a binomial
/// proportion with `successes` out of `trials` at confidence `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    assert!(trials > 0);
    let k = successes as f64;
    let n = trials as f64;
    let lower = if successes == 0 {
        0.0
    } else {
        beta_quantile(k, n - k + 1.0, alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        beta_quantile(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (lower, upper)
}
