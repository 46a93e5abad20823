//! Lattice-based decoders for both code variants, plus the unique-decoding
//! radius helper.
//!
//! Decoding builds the key-equation lattice, scales it, computes a short
//! vector, unscales, divides out the coordinate gcd and checks the size
//! conditions. The locator bound is carried as the integer `theta`
//! (playing the role of `2^d`), so every acceptance condition is an exact
//! integer comparison.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::code::{
    self, bad_prime_error_matrix, encode, encode_multiprecision, reduce_representative,
    BoundRegime, CodeError, CodeParams, FractionVector, MultiPrecisionWord, ReceivedWord,
};
use crate::lattice::{
    approx_svp_inf, build_bad_prime_lattice, build_lattice, exact_svp_inf, normalize_sign,
    scale_basis, unscale_vector, LatticeError, DEFAULT_ENUM_BOUND,
};
use crate::numtheory::log2_ratio;

/// Short-vector backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvpMode {
    /// LLL; approximation factor `sqrt(l+1) * 2^{l/2}`.
    Approximate,
    /// Exhaustive enumeration (beta = 1); dimension l+1 must stay <= 5.
    Exact,
}

#[derive(Debug, Clone)]
pub struct DecoderConfig {
    /// The decoder accepts candidates with coordinate gcd eta <= theta;
    /// theta plays the role of `2^d`.
    pub locator_bound: BigUint,
    pub svp_mode: SvpMode,
    pub enum_bound: u64,
}

impl DecoderConfig {
    pub fn new(locator_bound: BigUint, svp_mode: SvpMode) -> Self {
        assert!(!locator_bound.is_zero(), "locator bound must be >= 1");
        Self { locator_bound, svp_mode, enum_bound: DEFAULT_ENUM_BOUND }
    }

    pub fn approximate(locator_bound: u64) -> Self {
        Self::new(BigUint::from(locator_bound), SvpMode::Approximate)
    }

    pub fn exact(locator_bound: u64) -> Self {
        Self::new(BigUint::from(locator_bound), SvpMode::Exact)
    }

    /// `log2(theta)`, the distance parameter.
    pub fn distance_parameter(&self) -> f64 {
        crate::numtheory::log2_biguint(&self.locator_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// The candidate failed the acceptance checks: no codeword within the
    /// configured distance was identified.
    Failure,
    Input(CodeError),
    Lattice(LatticeError),
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::Failure => write!(f, "decoding failure"),
            DecodeError::Input(e) => write!(f, "invalid input: {e}"),
            DecodeError::Lattice(e) => write!(f, "lattice error: {e}"),
        }
    }
}

impl std::error::Error for DecodeError {}

impl From<CodeError> for DecodeError {
    fn from(e: CodeError) -> Self {
        DecodeError::Input(e)
    }
}

impl From<LatticeError> for DecodeError {
    fn from(e: LatticeError) -> Self {
        DecodeError::Lattice(e)
    }
}

/// `0.5 * log2(N / 2FG)`: below this distance the decoded word is provably
/// unique. Callers compare against `log2(theta)`.
pub fn unique_decoding_radius(params: &CodeParams) -> f64 {
    let two_fg =
        BigUint::from(2u32) * params.numerator_bound() * params.denominator_bound();
    0.5 * log2_ratio(params.basis().modulus(), &two_fg)
}

fn short_vector(
    scaled: &crate::lattice::LatticeBasis,
    cfg: &DecoderConfig,
) -> Result<Vec<BigInt>, DecodeError> {
    match cfg.svp_mode {
        SvpMode::Approximate => Ok(approx_svp_inf(scaled)?.0.coords),
        SvpMode::Exact => {
            assert!(scaled.dim() <= 5, "exact mode is limited to dimension 5");
            Ok(exact_svp_inf(scaled, cfg.enum_bound)?.coords)
        }
    }
}

/// Divide out the gcd and normalize signs so the denominator entry is
/// positive. Returns `(eta, phi', psi')`.
fn gcd_split(v: Vec<BigInt>) -> (BigUint, BigInt, Vec<BigInt>) {
    let mut eta = BigUint::zero();
    for c in &v {
        eta = eta.gcd(c.magnitude());
    }
    debug_assert!(!eta.is_zero(), "short vector must be nonzero");
    let eta_int = BigInt::from(eta.clone());
    let mut reduced: Vec<BigInt> = v.iter().map(|c| c / &eta_int).collect();
    if reduced[0].is_negative() {
        for c in &mut reduced {
            *c = -c.clone();
        }
    }
    let phi = reduced[0].clone();
    (eta, phi, reduced[1..].to_vec())
}

/// Decode a plain received word. Requires the strict bound regime
/// (`2FG < N`). On success the returned vector re-encodes to within
/// locator `theta` of the input.
pub fn decode(
    word: &ReceivedWord,
    params: &CodeParams,
    cfg: &DecoderConfig,
) -> Result<FractionVector, DecodeError> {
    decode_with_eta(word, params, cfg).0
}

/// Like [`decode`], also reporting the coordinate gcd of the short vector
/// (available whenever a short vector was computed, even on failure).
pub fn decode_with_eta(
    word: &ReceivedWord,
    params: &CodeParams,
    cfg: &DecoderConfig,
) -> (Result<FractionVector, DecodeError>, Option<BigUint>) {
    if params.regime() != BoundRegime::Strict {
        return (Err(CodeError::BoundsTooLarge.into()), None);
    }
    if word.ell() != params.ell() || word.num_columns() != params.basis().len() {
        return (Err(CodeError::ShapeMismatch.into()), None);
    }
    let lattice = build_lattice(word, params);
    let scaled = scale_basis(&lattice, params.numerator_bound(), params.denominator_bound());
    let w = match short_vector(&scaled, cfg) {
        Ok(w) => w,
        Err(e) => return (Err(e), None),
    };
    let v = normalize_sign(unscale_vector(&w, params.numerator_bound(), params.denominator_bound()));
    let (eta, phi, psis) = gcd_split(v);

    let accepted = eta <= cfg.locator_bound
        && phi.magnitude().gcd(params.basis().modulus()).is_one()
        && !phi.is_zero()
        && phi.magnitude() < params.denominator_bound()
        && psis.iter().all(|c| c.magnitude() < params.numerator_bound());
    if !accepted {
        return (Err(DecodeError::Failure), Some(eta));
    }
    let out = FractionVector::new(psis, phi.magnitude().clone())
        .expect("gcd division yields a reduced vector");
    #[cfg(debug_assertions)]
    {
        let reenc = encode(&out, params).expect("accepted output is encodable");
        let loc = code::error_locator(&reenc, word, params.basis()).unwrap();
        debug_assert!(
            loc.locator <= cfg.locator_bound,
            "soundness: output must lie within the distance bound"
        );
    }
    (Ok(out), Some(eta))
}

/// Decode a multi-precision received word (bad primes allowed). The input
/// is reduced internally; acceptance checks only the gcd bound and the
/// size conditions.
pub fn decode_bad_primes(
    word: &MultiPrecisionWord,
    params: &CodeParams,
    cfg: &DecoderConfig,
) -> Result<FractionVector, DecodeError> {
    decode_bad_primes_with_eta(word, params, cfg).0
}

/// Like [`decode_bad_primes`], also reporting the coordinate gcd.
pub fn decode_bad_primes_with_eta(
    word: &MultiPrecisionWord,
    params: &CodeParams,
    cfg: &DecoderConfig,
) -> (Result<FractionVector, DecodeError>, Option<BigUint>) {
    if word.ell() != params.ell() || word.num_columns() != params.basis().len() {
        return (Err(CodeError::ShapeMismatch.into()), None);
    }
    let reduced = reduce_representative(word, params.basis());
    let (lattice, _n_inf, _) = match build_bad_prime_lattice(&reduced, params) {
        Ok(v) => v,
        Err(e) => return (Err(e.into()), None),
    };
    let scaled = scale_basis(&lattice, params.numerator_bound(), params.denominator_bound());
    let w = match short_vector(&scaled, cfg) {
        Ok(w) => w,
        Err(e) => return (Err(e), None),
    };
    let v = normalize_sign(unscale_vector(&w, params.numerator_bound(), params.denominator_bound()));
    let (eta, phi, psis) = gcd_split(v);

    let accepted = eta <= cfg.locator_bound
        && !phi.is_zero()
        && phi.magnitude() < params.denominator_bound()
        && psis.iter().all(|c| c.magnitude() < params.numerator_bound());
    if !accepted {
        return (Err(DecodeError::Failure), Some(eta));
    }
    let out = FractionVector::new(psis, phi.magnitude().clone())
        .expect("gcd division yields a reduced vector");
    #[cfg(debug_assertions)]
    {
        let reenc = encode_multiprecision(&out, params).expect("accepted output is encodable");
        let (_, loc) = bad_prime_error_matrix(&reenc, &reduced, params.basis()).unwrap();
        debug_assert!(
            loc.locator <= cfg.locator_bound,
            "soundness: output must lie within the distance bound"
        );
    }
    (Ok(out), Some(eta))
}

/// Re-encode `out` and verify it lies within locator `theta` of `word`.
/// The Monte Carlo harness runs this on every successful trial.
pub fn verify_within_distance(
    out: &FractionVector,
    word: &ReceivedWord,
    params: &CodeParams,
    theta: &BigUint,
) -> bool {
    match encode(out, params) {
        Ok(reenc) => match code::error_locator(&reenc, word, params.basis()) {
            Ok(loc) => &loc.locator <= theta,
            Err(_) => false,
        },
        Err(_) => false,
    }
}

/// Bad-prime analogue of [`verify_within_distance`].
pub fn verify_within_distance_bad_primes(
    out: &FractionVector,
    word: &MultiPrecisionWord,
    params: &CodeParams,
    theta: &BigUint,
) -> bool {
    let reduced = reduce_representative(word, params.basis());
    match encode_multiprecision(out, params) {
        Ok(reenc) => match bad_prime_error_matrix(&reenc, &reduced, params.basis()) {
            Ok((_, loc)) => &loc.locator <= theta,
            Err(_) => false,
        },
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errmodel::apply_error;
    use crate::numtheory::PrimePowerBasis;
    use num_traits::ToPrimitive;

    fn params(ell: usize, f: u64, g: u64, primes: &[u64], mults: &[u32]) -> CodeParams {
        let basis = PrimePowerBasis::from_u64(primes, mults).unwrap();
        CodeParams::new(ell, BigUint::from(f), BigUint::from(g), basis).unwrap()
    }

    fn ubig(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn zero_error_roundtrip() {
        let p = params(1, 2, 8, &[2, 3, 5, 11], &[1, 1, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 7).unwrap();
        let w = encode(&fv, &p).unwrap();
        for cfg in [DecoderConfig::approximate(1), DecoderConfig::exact(1)] {
            assert_eq!(decode(&w, &p, &cfg).unwrap(), fv);
        }
    }

    #[test]
    fn radius_examples() {
        let p = params(1, 2, 2, &[2, 3, 5], &[1, 1, 1]);
        assert!((unique_decoding_radius(&p) - 0.5 * 3.75f64.log2()).abs() < 1e-12);
        let p = params(2, 3, 3, &[2, 3, 5, 7], &[2, 1, 1, 1]);
        assert!((unique_decoding_radius(&p) - 0.5 * (420f64 / 18.0).log2()).abs() < 1e-12);
        let p = params(1, 3, 5, &[2, 3, 5], &[1, 1, 1]);
        assert_eq!(unique_decoding_radius(&p), 0.0);
    }

    #[test]
    fn single_column_error_within_unique_radius() {
        // basis (2^2, 3, 5, 7), l = 2, F = G = 3, codeword (1,2)/1,
        // corrupted at p = 2 with mu = 1 (locator 2), theta = 2 below the
        // unique radius log2 sqrt(420/18) ~ 2.27
        let p = params(2, 3, 3, &[2, 3, 5, 7], &[2, 1, 1, 1]);
        let fv = FractionVector::from_i64(&[1, 2], 1).unwrap();
        let w = encode(&fv, &p).unwrap();
        assert!(2f64.log2() < unique_decoding_radius(&p));

        // error column at p=2 with valuation exactly 1: offset (2, 2) mod 4
        let mut cols: Vec<Vec<BigUint>> = w.columns().to_vec();
        cols[0] = vec![(&cols[0][0] + ubig(2)) % ubig(4), (&cols[0][1] + ubig(2)) % ubig(4)];
        let corrupted = ReceivedWord::new(cols, p.basis()).unwrap();

        let cfg = DecoderConfig::exact(2);
        let decoded = decode(&corrupted, &p, &cfg).unwrap();
        assert_eq!(decoded, fv);

        // brute-force uniqueness oracle: no other codeword within locator 2
        let basis = p.basis();
        let mut within = 0;
        for f1 in -2i64..=2 {
            for f2 in -2i64..=2 {
                for g in 1u64..=2 {
                    let Ok(c) = FractionVector::from_i64(&[f1, f2], g) else { continue };
                    let Ok(cw) = encode(&c, &p) else { continue };
                    let loc = code::error_locator(&cw, &corrupted, basis).unwrap();
                    if loc.locator <= ubig(2) {
                        within += 1;
                        assert_eq!(c, fv);
                    }
                }
            }
        }
        assert_eq!(within, 1);
    }

    #[test]
    fn failure_on_theta_one_with_corruption() {
        let p = params(1, 2, 8, &[2, 3, 5, 11], &[1, 1, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 7).unwrap();
        let w = encode(&fv, &p).unwrap();
        let mut cols = w.columns().to_vec();
        cols[2] = vec![(&cols[2][0] + ubig(1)) % ubig(5)];
        let corrupted = ReceivedWord::new(cols, p.basis()).unwrap();
        // nothing within distance 0 of a corrupted word
        assert_eq!(
            decode(&corrupted, &p, &DecoderConfig::exact(1)),
            Err(DecodeError::Failure)
        );
    }

    #[test]
    fn success_postcondition_holds_on_random_trials() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let p = params(2, 4, 4, &[2, 3, 5, 7, 11, 13], &[2, 1, 1, 1, 1, 1]);
        let cfg = DecoderConfig::approximate(16);
        for _ in 0..200 {
            // arbitrary received word
            let cols: Vec<Vec<BigUint>> = (0..p.basis().len())
                .map(|j| {
                    let m = p.basis().prime_power(j).to_u64().unwrap();
                    (0..2).map(|_| ubig(rng.gen_range(0..m))).collect()
                })
                .collect();
            let w = ReceivedWord::new(cols, p.basis()).unwrap();
            if let Ok(out) = decode(&w, &p, &cfg) {
                assert!(verify_within_distance(&out, &w, &p, &cfg.locator_bound));
            }
        }
    }

    #[test]
    fn bad_prime_zero_error_roundtrip() {
        let p = params(1, 2, 8, &[2, 3, 5], &[2, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 2).unwrap();
        let w = encode_multiprecision(&fv, &p).unwrap();
        for cfg in [DecoderConfig::approximate(1), DecoderConfig::exact(1)] {
            assert_eq!(decode_bad_primes(&w, &p, &cfg).unwrap(), fv);
        }
    }

    #[test]
    fn bad_prime_valuation_error_recovers() {
        // flip the received valuation at the bad prime; weight 2 <= theta,
        // still below the unique radius
        let p = params(1, 2, 8, &[2, 3, 5, 7, 11, 13], &[2, 1, 1, 1, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 2).unwrap();
        let w = encode_multiprecision(&fv, &p).unwrap();
        assert!(2f64 < unique_decoding_radius(&p) * 2.0);
        let mut pairs = w.pairs().to_vec();
        assert_eq!(pairs[0].0, 1);
        pairs[0] = (0, pairs[0].1.clone()); // valuation error
        let corrupted = MultiPrecisionWord::new(pairs, p.basis()).unwrap();
        let cfg = DecoderConfig::exact(4);
        assert!(4f64.log2() < unique_decoding_radius(&p));
        assert_eq!(decode_bad_primes(&corrupted, &p, &cfg).unwrap(), fv);
    }

    #[test]
    fn bad_prime_theta_one_failure() {
        let p = params(1, 2, 8, &[2, 3, 5], &[2, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 2).unwrap();
        let w = encode_multiprecision(&fv, &p).unwrap();
        let mut pairs = w.pairs().to_vec();
        pairs[1] = (0, vec![(&pairs[1].1[0] + ubig(1)) % ubig(3)]);
        let corrupted = MultiPrecisionWord::new(pairs, p.basis()).unwrap();
        assert_eq!(
            decode_bad_primes(&corrupted, &p, &DecoderConfig::exact(1)),
            Err(DecodeError::Failure)
        );
    }

    #[test]
    fn decode_rejects_boundary_regime() {
        let p = params(1, 3, 5, &[2, 3, 5], &[1, 1, 1]);
        let w = ReceivedWord::new(
            vec![vec![ubig(0)], vec![ubig(0)], vec![ubig(0)]],
            p.basis(),
        )
        .unwrap();
        assert!(matches!(
            decode(&w, &p, &DecoderConfig::exact(1)),
            Err(DecodeError::Input(CodeError::BoundsTooLarge))
        ));
    }

    #[test]
    fn apply_error_roundtrip_smoke() {
        let p = params(1, 2, 8, &[2, 3, 5], &[2, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 7).unwrap();
        let w = encode(&fv, &p).unwrap();
        let e = vec![vec![ubig(0)], vec![ubig(0)], vec![ubig(0)]];
        assert_eq!(apply_error(&w, &e, p.basis()).unwrap(), w);
    }
}
