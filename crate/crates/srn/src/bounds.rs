//! Failure-probability bounds and decoding-radius formulas, evaluated with
//! exact rational prime products. Only the final report value is a double:
//! the `2^x` front factor has an irrational exponent in general, so each
//! report carries the exponent and the exact product separately.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::code::CodeParams;
use crate::numtheory::{factorize, log2_biguint};

#[derive(Debug, Clone, PartialEq)]
pub enum BoundsError {
    /// The approximation factor must satisfy `beta < 3^ell`.
    BetaTooLarge,
    /// The fixed-error budget consumes the whole distance margin.
    NegativeBudget,
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsError::BetaTooLarge => write!(f, "approximation factor must be below 3^ell"),
            BoundsError::NegativeBudget => {
                write!(f, "fixed-error budget leaves no room for random errors")
            }
        }
    }
}

impl std::error::Error for BoundsError {}

/// Which bound shape a report was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundShape {
    /// Random errors hit a fixed locator exactly.
    FixedLocator,
    /// Random errors lie under a maximal locator.
    MaxLocator,
}

/// Evaluation of a failure-probability bound at concrete parameters.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub shape: BoundShape,
    pub ell: usize,
    /// The distance ceiling the regime allows (d-bar, or its hybrid or
    /// bad-prime variant when `d_fixed > 0`).
    pub dmax: f64,
    /// Distance budget of the random part.
    pub d: f64,
    /// Distance budget of the fixed (adversarial) part; 0 for the plain models.
    pub d_fixed: f64,
    /// log2 of the random-part locator.
    pub log2_locator: f64,
    /// `-(ell+1)(dmax - d)`.
    pub exponent_log2: f64,
    /// Exact prime product, serialized as a fraction string.
    #[serde(serialize_with = "serialize_rational")]
    pub product: BigRational,
    /// `2^exponent * product`; absent when the inputs are out of regime.
    pub bound: Option<f64>,
    pub in_regime: bool,
}

fn serialize_rational<S: serde::Serializer>(
    x: &BigRational,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", x.numer(), x.denom()))
}

impl BoundReport {
    /// The bound as a double, regardless of regime flags.
    pub fn value(&self) -> f64 {
        2f64.powf(self.exponent_log2) * self.product.to_f64().unwrap_or(f64::NAN)
    }
}

/// `(ell/(ell+1)) * (log2(N/2FG) - log2(3 beta))` from the raw log term.
pub fn dmax_from_log(log2_n_over_2fg: f64, ell: usize, beta: f64) -> Result<f64, BoundsError> {
    if beta >= 3f64.powi(ell as i32) {
        return Err(BoundsError::BetaTooLarge);
    }
    let l = ell as f64;
    Ok(l / (l + 1.0) * (log2_n_over_2fg - (3.0 * beta).log2()))
}

/// Distance ceiling for the plain models.
pub fn dmax(params: &CodeParams, beta: f64) -> Result<f64, BoundsError> {
    dmax_from_log(params.min_distance_lower_bound(), params.ell(), beta)
}

/// Distance ceiling for the random part of the hybrid models, given the
/// fixed-error budget `d_u`. Requires `2 d_u <= log2(N/(6 F G beta))`.
pub fn dmax_hybrid(params: &CodeParams, beta: f64, d_u: f64) -> Result<f64, BoundsError> {
    if beta >= 3f64.powi(params.ell() as i32) {
        return Err(BoundsError::BetaTooLarge);
    }
    let l = params.ell() as f64;
    let v = l / (l + 1.0)
        * (params.min_distance_lower_bound() - (3.0 * beta).log2() - 2.0 * d_u);
    if v < 0.0 {
        return Err(BoundsError::NegativeBudget);
    }
    Ok(v)
}

/// Distance ceiling for the evaluation errors in the bad-prime models,
/// given the valuation-error budget `d_v`. Same formula as the hybrid one.
pub fn dmax_badprimes(params: &CodeParams, beta: f64, d_v: f64) -> Result<f64, BoundsError> {
    dmax_hybrid(params, beta, d_v)
}

fn one_minus_p_pow(p: &BigUint, exp: u32) -> BigRational {
    // 1 - 1/p^exp = (p^exp - 1) / p^exp
    let q = BigInt::from(p.pow(exp));
    BigRational::new(&q - BigInt::one(), q)
}

/// Exact product `prod_{p | locator} (1 - p^{-(ell + nu_p)}) / (1 - p^{-ell})`.
pub fn fixed_locator_product(locator: &BigUint, ell: usize) -> BigRational {
    factorize(locator)
        .iter()
        .map(|(p, e)| one_minus_p_pow(p, ell as u32 + e) / one_minus_p_pow(p, ell as u32))
        .product()
}

/// Exact product `prod_{p | locator} (1 - p^{-(ell + nu_p)}) / (1 - p^{-(ell+1)})`.
pub fn max_locator_product(locator: &BigUint, ell: usize) -> BigRational {
    factorize(locator)
        .iter()
        .map(|(p, e)| one_minus_p_pow(p, ell as u32 + e) / one_minus_p_pow(p, ell as u32 + 1))
        .product()
}

fn make_report(
    shape: BoundShape,
    ell: usize,
    dmax_variant: f64,
    d: f64,
    d_fixed: f64,
    locator: &BigUint,
    product: BigRational,
) -> BoundReport {
    let log2_locator = if locator.is_one() { 0.0 } else { log2_biguint(locator) };
    let in_regime = log2_locator <= d + 1e-9 && d <= dmax_variant + 1e-9;
    let exponent_log2 = -((ell as f64) + 1.0) * (dmax_variant - d);
    let mut report = BoundReport {
        shape,
        ell,
        dmax: dmax_variant,
        d,
        d_fixed,
        log2_locator,
        exponent_log2,
        product,
        bound: None,
        in_regime,
    };
    if in_regime {
        report.bound = Some(report.value());
    }
    report
}

/// Failure bound when the random errors hit the locator exactly. `d` is the
/// random-part distance budget (the interleaved component for the hybrid
/// and bad-prime variants), `d_fixed` the adversarial budget (0 for the
/// plain model), and `dmax_variant` the matching ceiling.
pub fn failure_bound_fixed_locator(
    params: &CodeParams,
    d: f64,
    d_fixed: f64,
    interleaved_locator: &BigUint,
    dmax_variant: f64,
) -> BoundReport {
    let product = fixed_locator_product(interleaved_locator, params.ell());
    make_report(
        BoundShape::FixedLocator,
        params.ell(),
        dmax_variant,
        d,
        d_fixed,
        interleaved_locator,
        product,
    )
}

/// Failure bound when the random errors lie under a maximal locator.
pub fn failure_bound_max_locator(
    params: &CodeParams,
    d: f64,
    d_fixed: f64,
    max_interleaved_locator: &BigUint,
    dmax_variant: f64,
) -> BoundReport {
    let product = max_locator_product(max_interleaved_locator, params.ell());
    make_report(
        BoundShape::MaxLocator,
        params.ell(),
        dmax_variant,
        d,
        d_fixed,
        max_interleaved_locator,
        product,
    )
}

/// Both sides of the divisor-sum identity: the sum over divisors of the
/// per-prime products, and the closed product form. Returned for equality
/// testing.
pub fn divisor_sum_identity(
    lambda: &BigUint,
    f: &dyn Fn(&BigUint, u32) -> BigRational,
) -> (BigRational, BigRational) {
    let factors = factorize(lambda);

    // left side: sum over all divisors eta | lambda of prod_{p | eta} f(p, nu_p(eta))
    let mut lhs = BigRational::zero();
    let mut exps = vec![0u32; factors.len()];
    loop {
        let mut term = BigRational::one();
        for (i, (p, _)) in factors.iter().enumerate() {
            if exps[i] > 0 {
                term *= f(p, exps[i]);
            }
        }
        lhs += term;
        // next exponent vector
        let mut i = 0;
        loop {
            if i == factors.len() {
                // right side: prod_{p | lambda} (1 + sum_{k=1..nu_p} f(p, k))
                let rhs = factors
                    .iter()
                    .map(|(p, e)| {
                        let mut s = BigRational::one();
                        for k in 1..=*e {
                            s += f(p, k);
                        }
                        s
                    })
                    .product();
                return (lhs, rhs);
            }
            exps[i] += 1;
            if exps[i] <= factors[i].1 {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
    }
}

/// The coarse product estimate `1 / (1 - n / p_1^{f_ell})` dominating both
/// bound products.
pub fn product_upper_estimate(n_primes: usize, p1: &BigUint, f_ell: u32) -> BigRational {
    let denom = BigRational::one()
        - BigRational::new(BigInt::from(n_primes), BigInt::from(p1.pow(f_ell)));
    assert!(denom.is_positive(), "estimate requires p_1^{{f had}} > n");
    denom.recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::PrimePowerBasis;

    fn ubig(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn params(ell: usize, f: u64, g: u64, primes: &[u64], mults: &[u32]) -> CodeParams {
        let basis = PrimePowerBasis::from_u64(primes, mults).unwrap();
        CodeParams::new(ell, ubig(f), ubig(g), basis).unwrap()
    }

    #[test]
    fn dmax_examples() {
        // log2(N/(6FGbeta)) = 20 with ell = 4 gives 16
        let got = dmax_from_log(20.0 + 3f64.log2(), 4, 1.0).unwrap();
        assert!((got - 16.0).abs() < 1e-9);

        // N = 2^30 * 2FG, beta = 1, ell = 1
        let got = dmax_from_log(30.0, 1, 1.0).unwrap();
        assert!((got - 0.5 * (30.0 - 3f64.log2())).abs() < 1e-12);

        // the ell/(ell+1) factor is monotone increasing in ell
        let mut prev = 0.0;
        for ell in 1..10 {
            let v = dmax_from_log(40.0, ell, 1.0).unwrap();
            assert!(v > prev);
            prev = v;
        }

        assert_eq!(dmax_from_log(20.0, 2, 9.0), Err(BoundsError::BetaTooLarge));
    }

    #[test]
    fn dmax_hybrid_examples() {
        // log2(N/(6FGbeta)) = 200, ell = 4, d_u = 50 gives 80
        let got = {
            let l = 4f64;
            l / (l + 1.0) * (200.0 - 2.0 * 50.0)
        };
        assert!((got - 80.0).abs() < 1e-12);

        let p = params(2, 2, 2, &[2, 3, 5, 7, 11, 13], &[2, 2, 1, 1, 1, 1]);
        // d_u = 0 equals dmax
        assert_eq!(dmax_hybrid(&p, 1.0, 0.0).unwrap(), dmax(&p, 1.0).unwrap());
        // boundary: 2 d_u = log2(N/(6FG beta)) gives 0
        let half = (p.min_distance_lower_bound() - 3f64.log2()) / 2.0;
        let v = dmax_hybrid(&p, 1.0, half).unwrap();
        assert!(v.abs() < 1e-9);
        assert_eq!(dmax_hybrid(&p, 1.0, half + 1.0), Err(BoundsError::NegativeBudget));
        // the bad-prime variant is the same formula
        assert_eq!(
            dmax_badprimes(&p, 1.0, 1.5).unwrap(),
            dmax_hybrid(&p, 1.0, 1.5).unwrap()
        );
    }

    #[test]
    fn fixed_locator_bound_examples() {
        let p = params(1, 2, 2, &[2, 3, 5, 7, 11, 13, 17, 19], &[3, 2, 1, 1, 1, 1, 1, 1]);
        // empty product at locator 1
        let r = failure_bound_fixed_locator(&p, 1.0, 0.0, &ubig(1), 3.0);
        assert!(r.product.is_one());
        assert!((r.exponent_log2 - (-4.0)).abs() < 1e-12);

        // ell = 1, dbar - d = 2, locator 2: (1/16) * (3/4)/(1/2) = 3/32
        let r = failure_bound_fixed_locator(&p, 1.0, 0.0, &ubig(2), 3.0);
        assert_eq!(r.product, rational(3, 2));
        assert!((r.bound.unwrap() - 3.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn max_locator_bound_examples() {
        let p = params(1, 2, 2, &[2, 3, 5, 7, 11, 13, 17, 19], &[3, 2, 1, 1, 1, 1, 1, 1]);
        // ell = 1, lambda_m = 4, dbar - d = 3: 2^-6 * (7/8)/(3/4) = 7/384
        let r = failure_bound_max_locator(&p, 2.0, 0.0, &ubig(4), 5.0);
        assert_eq!(r.product, rational(7, 6));
        assert!((r.bound.unwrap() - 7.0 / 384.0).abs() < 1e-12);

        // lambda_m = 1 collapses to the bare power of two
        let r = failure_bound_max_locator(&p, 2.0, 0.0, &ubig(1), 5.0);
        assert!((r.bound.unwrap() - 2f64.powf(-6.0)).abs() < 1e-12);
    }

    #[test]
    fn square_free_heavy_prime_scenario() {
        // a regime with dbar = 16, d = 10 keeps the failure probability
        // under 2^-30 for any square-free locator over large primes
        let ell = 4usize;
        let dmax_v = dmax_from_log(20.0 + 3f64.log2(), ell, 1.0).unwrap();
        assert!((dmax_v - 16.0).abs() < 1e-9);
        let p = params(
            4,
            2,
            2,
            &[1009, 1013, 1019, 1021, 1031, 1033],
            &[1, 1, 1, 1, 1, 1],
        );
        // log2(1009) < 10, so the locator is within the distance budget; the
        // square-free product is exactly 1 and the bound is 2^-30 on the nose
        let lambda_m = ubig(1009);
        let r = failure_bound_max_locator(&p, 10.0, 0.0, &lambda_m, dmax_v);
        assert!(r.in_regime);
        let bound = r.bound.unwrap();
        assert!(bound <= 2f64.powf(-30.0) * (1.0 + 1e-9), "bound {bound}");
    }

    #[test]
    fn product_upper_estimate_dominates() {
        let cases: Vec<BigUint> = vec![
            ubig(2),
            ubig(12),
            ubig(360),
            ubig(12600),
            ubig(2) * ubig(3) * ubig(5) * ubig(7) * ubig(11),
        ];
        for ell in 1..=3usize {
            for lambda in &cases {
                let n = factorize(lambda).len();
                let p1 = factorize(lambda)[0].0.clone();
                if BigRational::new(BigInt::from(n), BigInt::from(p1.pow(ell as u32)))
                    >= BigRational::one()
                {
                    continue;
                }
                let est = product_upper_estimate(n, &p1, ell as u32);
                assert!(fixed_locator_product(lambda, ell) <= est);
                let est1 = product_upper_estimate(n, &p1, ell as u32 + 1);
                assert!(max_locator_product(lambda, ell) <= est1);
            }
        }
    }

    #[test]
    fn bounds_monotone_in_d_and_flagged_out_of_regime() {
        let p = params(2, 4, 4, &[2, 3, 5, 7, 11, 13, 17, 19], &[3, 2, 2, 1, 1, 1, 1, 1]);
        let dm = dmax(&p, 1.0).unwrap();
        let lambda = ubig(12);
        let mut prev = 0.0;
        for step in 1..6 {
            let d = dm * step as f64 / 6.0;
            let r = failure_bound_fixed_locator(&p, d, 0.0, &lambda, dm);
            if r.log2_locator <= d {
                assert!(r.in_regime);
                let b = r.bound.unwrap();
                assert!(b >= prev);
                prev = b;
            }
        }
        // d beyond dmax is flagged, not extrapolated
        let r = failure_bound_fixed_locator(&p, dm + 1.0, 0.0, &lambda, dm);
        assert!(!r.in_regime);
        assert!(r.bound.is_none());
        // locator heavier than d flagged too
        let r = failure_bound_fixed_locator(&p, 1.0, 0.0, &ubig(1024), dm);
        assert!(!r.in_regime);
    }

    #[test]
    fn hybrid_bound_collapses_when_fixed_budget_zero() {
        let p = params(2, 4, 4, &[2, 3, 5, 7, 11, 13, 17, 19], &[3, 2, 2, 1, 1, 1, 1, 1]);
        let lambda = ubig(360);
        let dm_plain = dmax(&p, 1.0).unwrap();
        let dm_hybrid = dmax_hybrid(&p, 1.0, 0.0).unwrap();
        assert_eq!(dm_plain, dm_hybrid);
        let a = failure_bound_fixed_locator(&p, 8.0, 0.0, &lambda, dm_plain);
        let b = failure_bound_fixed_locator(&p, 8.0, 0.0, &lambda, dm_hybrid);
        assert_eq!(a.product, b.product);
        assert_eq!(a.exponent_log2, b.exponent_log2);
        let a = failure_bound_max_locator(&p, 8.0, 0.0, &lambda, dm_plain);
        let b = failure_bound_max_locator(&p, 8.0, 0.0, &lambda, dm_hybrid);
        assert_eq!(a.product, b.product);
    }

    #[test]
    fn no_multiplicity_case_uses_square_free_products() {
        // with all exponents 1 the products specialize to the square-free form
        let lambda = ubig(2 * 3 * 5 * 7);
        for ell in 1..=3usize {
            let expected: BigRational = [2u64, 3, 5, 7]
                .iter()
                .map(|&p| {
                    one_minus_p_pow(&ubig(p), ell as u32 + 1) / one_minus_p_pow(&ubig(p), ell as u32)
                })
                .product();
            assert_eq!(fixed_locator_product(&lambda, ell), expected);
            // square-free max-locator factors are identically 1
            assert!(max_locator_product(&lambda, ell).is_one());
        }
    }

    #[test]
    fn divisor_sum_identity_examples() {
        // f(p, k) = p^k: both sides are sigma(12) = 28
        let f = |p: &BigUint, k: u32| BigRational::from_integer(BigInt::from(p.pow(k)));
        let (lhs, rhs) = divisor_sum_identity(&ubig(12), &f);
        assert_eq!(lhs, BigRational::from_integer(BigInt::from(28)));
        assert_eq!(lhs, rhs);

        let (lhs, rhs) = divisor_sum_identity(&ubig(1), &f);
        assert!(lhs.is_one() && rhs.is_one());

        // prime lambda: both sides 1 + f(p, 1)
        let (lhs, rhs) = divisor_sum_identity(&ubig(13), &f);
        assert_eq!(lhs, BigRational::from_integer(BigInt::from(14)));
        assert_eq!(lhs, rhs);
    }
}
