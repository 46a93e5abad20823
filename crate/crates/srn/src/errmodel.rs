//! Uniform samplers for the error/received-word distributions and the
//! exact counting formulas behind them.
//!
//! All samplers are driven by a counter-based ChaCha8 generator with one
//! substream per (seed, trial, column), so outputs are bit-reproducible
//! independent of sampling order and thread count.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{
    encode_multiprecision, CodeError, CodeParams, FractionVector, MultiPrecisionWord,
    ReceivedWord,
};
use crate::numtheory::{factorize, truncated_valuation_uint, vector_valuation_uint, PrimePowerBasis};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrModelError {
    InvalidLocator,
    SupportOverlap,
    FixedPartInvalid(String),
    NotADivisor,
    WrongFixedKind,
    Code(CodeError),
}

impl fmt::Display for ErrModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrModelError::InvalidLocator => write!(f, "locator exponents exceed multiplicities"),
            ErrModelError::SupportOverlap => write!(f, "fixed and random supports overlap"),
            ErrModelError::FixedPartInvalid(msg) => write!(f, "fixed error part invalid: {msg}"),
            ErrModelError::NotADivisor => write!(f, "eta does not divide lambda"),
            ErrModelError::WrongFixedKind => write!(f, "fixed part kind does not match the model"),
            ErrModelError::Code(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ErrModelError {}

impl From<CodeError> for ErrModelError {
    fn from(e: CodeError) -> Self {
        ErrModelError::Code(e)
    }
}

/// Exact-valuation ("the locator is hit exactly") or at-least-valuation
/// ("the locator is maximal") sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValuationModel {
    Exact,
    Maximal,
}

/// A factored locator, as per-prime exponents aligned with the basis:
/// `fixed[j]` is the exponent of the adversarial part, `random[j]` of the
/// random part. Supports must be disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatorSpec {
    pub fixed: Vec<u32>,
    pub random: Vec<u32>,
}

impl LocatorSpec {
    pub fn random_only(random: Vec<u32>) -> Self {
        let fixed = vec![0; random.len()];
        Self { fixed, random }
    }

    pub fn validate(&self, basis: &PrimePowerBasis) -> Result<(), ErrModelError> {
        if self.fixed.len() != basis.len() || self.random.len() != basis.len() {
            return Err(ErrModelError::InvalidLocator);
        }
        for j in 0..basis.len() {
            if self.fixed[j] > basis.mult(j) || self.random[j] > basis.mult(j) {
                return Err(ErrModelError::InvalidLocator);
            }
            if self.fixed[j] > 0 && self.random[j] > 0 {
                return Err(ErrModelError::SupportOverlap);
            }
        }
        Ok(())
    }

    pub fn fixed_support(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&j| self.fixed[j] > 0).collect()
    }

    pub fn random_support(&self) -> Vec<usize> {
        (0..self.random.len()).filter(|&j| self.random[j] > 0).collect()
    }

    pub fn fixed_locator(&self, basis: &PrimePowerBasis) -> BigUint {
        (0..basis.len()).map(|j| basis.prime(j).pow(self.fixed[j])).product()
    }

    pub fn random_locator(&self, basis: &PrimePowerBasis) -> BigUint {
        (0..basis.len()).map(|j| basis.prime(j).pow(self.random[j])).product()
    }

    pub fn total_locator(&self, basis: &PrimePowerBasis) -> BigUint {
        self.fixed_locator(basis) * self.random_locator(basis)
    }
}

/// Caller-supplied adversarial data on the fixed support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixedErrorPart {
    /// No fixed part (plain models 1 and 2).
    None,
    /// Error columns `eps_j` for the hybrid models, keyed by basis index.
    Columns(BTreeMap<usize, Vec<BigUint>>),
    /// Partial received pairs `(rho_j, col_j)` for the bad-prime models.
    PartialWord(BTreeMap<usize, (u32, Vec<BigUint>)>),
}

/// Per-(seed, trial) sampling stream; each column draws from its own
/// substream.
#[derive(Debug, Clone, Copy)]
pub struct SampleStream {
    pub seed: u64,
    pub trial: u64,
}

impl SampleStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    /// Deterministic per-column generator.
    pub fn column_rng(&self, column: u64) -> ChaCha8Rng {
        let mut s = splitmix64(self.seed);
        s = splitmix64(s ^ self.trial.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        s = splitmix64(s ^ column.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        ChaCha8Rng::seed_from_u64(s)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform integer in `[0, bound)` by rejection on masked limbs.
pub fn uniform_below(rng: &mut impl RngCore, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero());
    if bound.is_one() {
        return BigUint::zero();
    }
    if let Some(b) = bound.to_u64_digits().first().filter(|_| bound.bits() <= 64) {
        return BigUint::from(rng.gen_range(0..*b));
    }
    let bits = bound.bits();
    let limbs = bits.div_ceil(32) as usize;
    let top_mask: u32 = if bits % 32 == 0 { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits = vec![0u32; limbs];
        for d in digits.iter_mut() {
            *d = rng.next_u32();
        }
        digits[limbs - 1] &= top_mask;
        let candidate = BigUint::new(digits);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform column in `(Z/p^k)^ell`; with `require_unit`, rejected until
/// some entry is a unit mod p (expected iterations <= 1/(1 - p^{-ell})).
fn sample_column(
    rng: &mut ChaCha8Rng,
    p: &BigUint,
    k: u32,
    ell: usize,
    require_unit: bool,
) -> Vec<BigUint> {
    let m = p.pow(k);
    loop {
        let col: Vec<BigUint> = (0..ell).map(|_| uniform_below(rng, &m)).collect();
        if !require_unit || col.iter().any(|x| !(x % p).is_zero()) {
            return col;
        }
    }
}

/// Error matrix columns for the exact-locator model: zero off the support,
/// valuation exactly `lambda_j - nu_j` on it.
pub fn sample_err1(
    params: &CodeParams,
    locator: &LocatorSpec,
    stream: SampleStream,
) -> Result<Vec<Vec<BigUint>>, ErrModelError> {
    locator.validate(params.basis())?;
    if !locator.fixed_support().is_empty() {
        return Err(ErrModelError::WrongFixedKind);
    }
    sample_random_columns(params, &locator.random, ValuationModel::Exact, stream)
}

/// Error matrix columns for the maximal-locator model: valuation at least
/// `lambda_j - nu_j` on the support.
pub fn sample_err2(
    params: &CodeParams,
    max_locator: &LocatorSpec,
    stream: SampleStream,
) -> Result<Vec<Vec<BigUint>>, ErrModelError> {
    max_locator.validate(params.basis())?;
    if !max_locator.fixed_support().is_empty() {
        return Err(ErrModelError::WrongFixedKind);
    }
    sample_random_columns(params, &max_locator.random, ValuationModel::Maximal, stream)
}

fn sample_random_columns(
    params: &CodeParams,
    exponents: &[u32],
    model: ValuationModel,
    stream: SampleStream,
) -> Result<Vec<Vec<BigUint>>, ErrModelError> {
    let basis = params.basis();
    let ell = params.ell();
    let mut columns = Vec::with_capacity(basis.len());
    for j in 0..basis.len() {
        let k = exponents[j];
        if k == 0 {
            columns.push(vec![BigUint::zero(); ell]);
            continue;
        }
        let p = basis.prime(j);
        let lam = basis.mult(j);
        let mut rng = stream.column_rng(j as u64);
        let unit = sample_column(&mut rng, p, k, ell, model == ValuationModel::Exact);
        let shift = p.pow(lam - k);
        columns.push(unit.into_iter().map(|x| x * &shift).collect());
    }
    Ok(columns)
}

/// Hybrid sampling: adversarial columns copied verbatim on the fixed
/// support, random columns per the chosen model on the rest.
pub fn sample_hybrid(
    params: &CodeParams,
    split: &LocatorSpec,
    fixed: &FixedErrorPart,
    model: ValuationModel,
    stream: SampleStream,
) -> Result<Vec<Vec<BigUint>>, ErrModelError> {
    split.validate(params.basis())?;
    let basis = params.basis();
    let fixed_cols = match fixed {
        FixedErrorPart::Columns(map) => map,
        FixedErrorPart::None if split.fixed_support().is_empty() => &BTreeMap::new(),
        _ => return Err(ErrModelError::WrongFixedKind),
    };
    let support = split.fixed_support();
    if fixed_cols.len() != support.len() || !support.iter().all(|j| fixed_cols.contains_key(j)) {
        return Err(ErrModelError::FixedPartInvalid(
            "fixed columns must cover exactly the fixed support".into(),
        ));
    }
    for (&j, col) in fixed_cols {
        let lam = basis.mult(j);
        if col.len() != params.ell() || col.iter().any(|x| x >= basis.prime_power(j)) {
            return Err(ErrModelError::FixedPartInvalid("column shape/range".into()));
        }
        let target = lam - split.fixed[j];
        if vector_valuation_uint(col, basis.prime(j), lam) != target {
            return Err(ErrModelError::FixedPartInvalid(format!(
                "column {j} must have valuation exactly {target}"
            )));
        }
    }
    let mut columns = sample_random_columns(params, &split.random, model, stream)?;
    for (&j, col) in fixed_cols {
        columns[j] = col.clone();
    }
    Ok(columns)
}

/// Bad-prime sampling: returns a received word directly. Untouched columns
/// carry the codeword encoding, valuation-error columns carry the fixed
/// partial pairs, evaluation-error columns get a random residue offset of
/// the prescribed valuation.
pub fn sample_badprime(
    params: &CodeParams,
    fv: &FractionVector,
    split: &LocatorSpec,
    fixed: &FixedErrorPart,
    model: ValuationModel,
    stream: SampleStream,
) -> Result<MultiPrecisionWord, ErrModelError> {
    split.validate(params.basis())?;
    let basis = params.basis();
    let ell = params.ell();
    let codeword = encode_multiprecision(fv, params)?;
    let fixed_pairs = match fixed {
        FixedErrorPart::PartialWord(map) => map,
        FixedErrorPart::None if split.fixed_support().is_empty() => &BTreeMap::new(),
        _ => return Err(ErrModelError::WrongFixedKind),
    };
    let val_support = split.fixed_support();
    if fixed_pairs.len() != val_support.len()
        || !val_support.iter().all(|j| fixed_pairs.contains_key(j))
    {
        return Err(ErrModelError::FixedPartInvalid(
            "partial word must cover exactly the valuation-error support".into(),
        ));
    }

    let mut pairs: Vec<(u32, Vec<BigUint>)> = codeword.pairs().to_vec();

    // valuation errors: the whole pair is a model parameter
    for (&j, (rho_bar, col_bar)) in fixed_pairs {
        let p = basis.prime(j);
        let lam = basis.mult(j);
        let g_val = truncated_valuation_uint(fv.denominator(), p, lam);
        let mu = lam - split.fixed[j];
        if mu > g_val {
            return Err(ErrModelError::FixedPartInvalid(format!(
                "valuation-error column {j}: mu must not exceed the denominator valuation"
            )));
        }
        if *rho_bar > lam || col_bar.len() != ell || col_bar.iter().any(|x| x >= basis.prime_power(j))
        {
            return Err(ErrModelError::FixedPartInvalid("pair shape/range".into()));
        }
        if mu < g_val {
            if *rho_bar != mu {
                return Err(ErrModelError::FixedPartInvalid(format!(
                    "column {j}: received valuation must equal mu = {mu}"
                )));
            }
        } else if *rho_bar <= g_val {
            return Err(ErrModelError::FixedPartInvalid(format!(
                "column {j}: received valuation must exceed the denominator valuation {g_val}"
            )));
        }
        if *rho_bar > 0 && vector_valuation_uint(col_bar, p, *rho_bar) != 0 {
            return Err(ErrModelError::FixedPartInvalid(format!(
                "column {j}: partial pair must be a reduced representative"
            )));
        }
        pairs[j] = (*rho_bar, col_bar.clone());
    }

    // evaluation errors: rho stays at the denominator valuation, the
    // residue moves by an offset of prescribed valuation
    for j in split.random_support() {
        let p = basis.prime(j);
        let lam = basis.mult(j);
        let g_val = truncated_valuation_uint(fv.denominator(), p, lam);
        let mu = lam - split.random[j];
        if mu < g_val {
            return Err(ErrModelError::FixedPartInvalid(format!(
                "evaluation-error column {j}: mu must be at least the denominator valuation"
            )));
        }
        let mut rng = stream.column_rng(j as u64);
        // offset = p^{mu - g_val} * u over Z/p^{lam - mu}
        let unit = sample_column(&mut rng, p, lam - mu, ell, model == ValuationModel::Exact);
        let m = p.pow(lam - g_val);
        let shift = p.pow(mu - g_val);
        let col = pairs[j]
            .1
            .iter()
            .zip(unit)
            .map(|(s, u)| (s + u * &shift) % &m)
            .collect();
        pairs[j] = (g_val, col);
    }

    Ok(MultiPrecisionWord::new(pairs, basis)?)
}

/// Columnwise modular addition `R = C + E`.
pub fn apply_error(
    codeword: &ReceivedWord,
    error_columns: &[Vec<BigUint>],
    basis: &PrimePowerBasis,
) -> Result<ReceivedWord, CodeError> {
    if error_columns.len() != codeword.num_columns()
        || error_columns.iter().any(|c| c.len() != codeword.ell())
    {
        return Err(CodeError::ShapeMismatch);
    }
    let columns = (0..basis.len())
        .map(|j| {
            let m = basis.prime_power(j);
            codeword
                .column(j)
                .iter()
                .zip(&error_columns[j])
                .map(|(c, e)| (c + e) % m)
                .collect()
        })
        .collect();
    ReceivedWord::new(columns, basis)
}

/// `#{(F_1..F_ell) in (Z/Lambda)^ell : gcd(F_1,..,F_ell,Lambda) = eta}`
/// in exact integer arithmetic.
pub fn count_omega(lambda: &BigUint, eta: &BigUint, ell: u32) -> Result<BigUint, ErrModelError> {
    if lambda.is_zero() || eta.is_zero() || !(lambda % eta).is_zero() {
        return Err(ErrModelError::NotADivisor);
    }
    let m = lambda / eta;
    let mut count = BigUint::one();
    for (p, e) in factorize(&m) {
        let p_ell = p.pow(ell);
        count *= p_ell.pow(e - 1) * (p_ell - BigUint::one());
    }
    Ok(count)
}
