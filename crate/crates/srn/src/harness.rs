//! Experiment configuration, deterministic Monte Carlo estimation of
//! decoding failure rates, and comparison against the probability bounds.
//!
//! Trials are independent tasks with per-trial derived randomness, so runs
//! are reproducible regardless of thread count; CSV rows are emitted in
//! trial order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    dmax_hybrid, failure_bound_fixed_locator, failure_bound_max_locator, BoundReport, BoundsError,
};
use crate::code::{encode, CodeParams, FractionVector, MultiPrecisionWord, ReceivedWord};
use crate::decoder::{
    decode_bad_primes_with_eta, decode_with_eta, verify_within_distance,
    verify_within_distance_bad_primes, DecodeError, DecoderConfig, SvpMode,
};
use crate::errmodel::{
    apply_error, sample_badprime, sample_err1, sample_err2, sample_hybrid, uniform_below,
    ErrModelError, FixedErrorPart, LocatorSpec, SampleStream, ValuationModel,
};
use crate::lattice::lll_beta;
use crate::numtheory::{log2_biguint, vector_valuation_uint};
use crate::stats::clopper_pearson;
use crate::wire::{parse_biguint, CodeParamsDto, WireError};

/// Substream indices reserved by the harness (error columns use 0..n).
const PLANT_NUMERATOR_STREAM: u64 = 1 << 32;
const PLANT_DENOMINATOR_STREAM: u64 = (1 << 32) + 1;
/// Trial index reserved for run-level fixture generation.
const FIXTURE_TRIAL: u64 = u64::MAX;

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Wire(WireError),
    Bounds(BoundsError),
    Model(ErrModelError),
    Io(std::io::Error),
    /// A successful decode failed the re-encoding distance check; the run
    /// is aborted because this voids the soundness contract.
    SoundnessViolation(u64),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "invalid config: {msg}"),
            HarnessError::Wire(e) => write!(f, "invalid config: {e}"),
            HarnessError::Bounds(e) => write!(f, "invalid config: {e}"),
            HarnessError::Model(e) => write!(f, "invalid config: {e}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::SoundnessViolation(trial) => write!(
                f,
                "soundness violation at trial {trial}: decoded word exceeds the distance bound"
            ),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<WireError> for HarnessError {
    fn from(e: WireError) -> Self {
        HarnessError::Wire(e)
    }
}

impl From<BoundsError> for HarnessError {
    fn from(e: BoundsError) -> Self {
        HarnessError::Bounds(e)
    }
}

impl From<ErrModelError> for HarnessError {
    fn from(e: ErrModelError) -> Self {
        HarnessError::Model(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// Which received-word distribution a run draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Random errors of exact valuation on a fixed locator.
    Exact,
    /// Random errors under a maximal locator.
    Maximal,
    /// Fixed adversarial columns plus exact random errors.
    HybridExact,
    /// Fixed adversarial columns plus maximal random errors.
    HybridMaximal,
    /// Fixed valuation errors plus exact random evaluation errors.
    BadPrimeExact,
    /// Fixed valuation errors plus maximal random evaluation errors.
    BadPrimeMaximal,
}

impl ModelKind {
    pub fn is_bad_prime(self) -> bool {
        matches!(self, ModelKind::BadPrimeExact | ModelKind::BadPrimeMaximal)
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, ModelKind::HybridExact | ModelKind::HybridMaximal)
    }

    pub fn valuation_model(self) -> ValuationModel {
        match self {
            ModelKind::Exact | ModelKind::HybridExact | ModelKind::BadPrimeExact => {
                ValuationModel::Exact
            }
            _ => ValuationModel::Maximal,
        }
    }

    /// Does the bound take the exact-locator or the maximal-locator shape?
    pub fn max_locator_shape(self) -> bool {
        self.valuation_model() == ValuationModel::Maximal
    }
}

/// How the adversarial part of a hybrid/bad-prime run is chosen.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FixedPartSpec {
    /// No fixed part.
    #[default]
    None,
    /// Drawn once per run from the master seed.
    Seeded,
    /// Error columns collinear with the planted codeword column (worst
    /// known adversarial pattern; hybrid models only).
    CollinearCodeword,
    /// Explicit error columns, keyed by basis index (hybrid models).
    Columns { columns: BTreeMap<usize, Vec<String>> },
    /// Explicit partial received pairs (bad-prime models).
    Pairs { pairs: BTreeMap<usize, (u32, Vec<String>)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Exponents of the random-part locator, aligned with the basis.
    pub random_exponents: Vec<u32>,
    /// Exponents of the fixed (adversarial) locator; all zero when absent.
    #[serde(default)]
    pub fixed_exponents: Vec<u32>,
    #[serde(default)]
    pub fixed_part: FixedPartSpec,
    /// Prescribed denominator valuations per basis prime (bad-prime models).
    #[serde(default)]
    pub denominator_valuations: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecoderDto {
    pub theta: String,
    pub svp_mode: SvpMode,
}

/// Top-level experiment description (`schema: 1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub code: CodeParamsDto,
    pub model: ModelConfig,
    pub decoder: DecoderDto,
    pub trials: u64,
    pub seed: u64,
    /// Record wall-clock timings in the CSV; off by default so output is
    /// byte-reproducible.
    #[serde(default)]
    pub record_timings: bool,
}

impl ExperimentConfig {
    /// Parse a config; the `SRN_SEED` environment variable overrides the
    /// configured seed.
    pub fn from_json(json: &str) -> Result<Self, HarnessError> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.schema != 1 {
            return Err(HarnessError::Config(format!("unsupported schema {}", cfg.schema)));
        }
        if let Ok(seed) = std::env::var("SRN_SEED") {
            cfg.seed = seed
                .parse()
                .map_err(|_| HarnessError::Config("SRN_SEED must be a u64".into()))?;
        }
        Ok(cfg)
    }
}

/// A config that passed validation, with the regime data resolved.
pub struct ValidatedExperiment {
    pub params: CodeParams,
    pub kind: ModelKind,
    pub locator: LocatorSpec,
    pub decoder: DecoderConfig,
    pub beta: f64,
    /// Distance budget of the fixed part (log2 of its locator).
    pub d_fixed: f64,
    /// Distance budget of the random part.
    pub d_random: f64,
    pub bound: BoundReport,
    pub fixed_part: FixedPartSpec,
    pub denominator_valuations: Vec<u32>,
    pub seed: u64,
    pub trials: u64,
    pub record_timings: bool,
}

/// Validate a config: checks the model pre-conditions and resolves the
/// governing bound.
pub fn validate(cfg: &ExperimentConfig) -> Result<ValidatedExperiment, HarnessError> {
    let params = cfg.code.to_params()?;
    let basis = params.basis().clone();
    let model = &cfg.model;

    let mut fixed = model.fixed_exponents.clone();
    if fixed.is_empty() {
        fixed = vec![0; basis.len()];
    }
    let locator = LocatorSpec { fixed, random: model.random_exponents.clone() };
    locator.validate(&basis)?;

    if !model.kind.is_hybrid() && !model.kind.is_bad_prime() {
        if !locator.fixed_support().is_empty() {
            return Err(HarnessError::Config(
                "plain models take no fixed locator part".into(),
            ));
        }
        if !matches!(model.fixed_part, FixedPartSpec::None) {
            return Err(HarnessError::Config("plain models take no fixed part".into()));
        }
    }

    let mut denominator_valuations = model.denominator_valuations.clone();
    if denominator_valuations.is_empty() {
        denominator_valuations = vec![0; basis.len()];
    }
    if denominator_valuations.len() != basis.len() {
        return Err(HarnessError::Config("denominator_valuations length mismatch".into()));
    }
    if !model.kind.is_bad_prime() && denominator_valuations.iter().any(|&v| v > 0) {
        return Err(HarnessError::Config(
            "denominator valuations require a bad-prime model".into(),
        ));
    }
    let g_part: BigUint =
        (0..basis.len()).map(|j| basis.prime(j).pow(denominator_valuations[j])).product();
    if &g_part >= params.denominator_bound() {
        return Err(HarnessError::Config(
            "prescribed denominator part exceeds the denominator bound".into(),
        ));
    }

    let theta = parse_biguint(&cfg.decoder.theta)?;
    if theta.is_zero() {
        return Err(HarnessError::Config("theta must be >= 1".into()));
    }
    let decoder = DecoderConfig::new(theta, cfg.decoder.svp_mode);
    let beta = match cfg.decoder.svp_mode {
        SvpMode::Approximate => lll_beta(params.ell() + 1),
        SvpMode::Exact => 1.0,
    };

    let d = decoder.distance_parameter();
    let fixed_loc = locator.fixed_locator(&basis);
    let random_loc = locator.random_locator(&basis);
    let d_fixed = if fixed_loc.is_one() { 0.0 } else { log2_biguint(&fixed_loc) };
    let d_random = d - d_fixed;
    let log2_random = if random_loc.is_one() { 0.0 } else { log2_biguint(&random_loc) };
    if log2_random > d_random + 1e-9 {
        return Err(HarnessError::Config(
            "random locator exceeds the distance budget left by the fixed part".into(),
        ));
    }

    // the fixed budget must stay within the unique-decoding share of the margin
    let half_margin = (params.min_distance_lower_bound() - (3.0 * beta).log2()) / 2.0;
    if d_fixed > half_margin + 1e-9 {
        return Err(HarnessError::Config(
            "fixed locator exceeds the unique-decoding share of the margin".into(),
        ));
    }

    let dmax_variant = dmax_hybrid(&params, beta, d_fixed)?;
    if d_random > dmax_variant + 1e-9 {
        return Err(HarnessError::Config(format!(
            "random budget {d_random:.3} exceeds the distance ceiling {dmax_variant:.3}"
        )));
    }

    // bad-prime support constraints relative to the denominator valuations
    if model.kind.is_bad_prime() {
        for j in locator.random_support() {
            let mu = basis.mult(j) - locator.random[j];
            if mu < denominator_valuations[j] {
                return Err(HarnessError::Config(format!(
                    "evaluation-error valuation at position {j} is below the denominator valuation"
                )));
            }
        }
        for j in locator.fixed_support() {
            let mu = basis.mult(j) - locator.fixed[j];
            if mu > denominator_valuations[j] {
                return Err(HarnessError::Config(format!(
                    "valuation-error valuation at position {j} exceeds the denominator valuation"
                )));
            }
        }
    }

    let bound = if model.kind.max_locator_shape() {
        failure_bound_max_locator(&params, d_random, d_fixed, &random_loc, dmax_variant)
    } else {
        failure_bound_fixed_locator(&params, d_random, d_fixed, &random_loc, dmax_variant)
    };

    Ok(ValidatedExperiment {
        params,
        kind: model.kind,
        locator,
        decoder,
        beta,
        d_fixed,
        d_random,
        bound,
        fixed_part: model.fixed_part.clone(),
        denominator_valuations,
        seed: cfg.seed,
        trials: cfg.trials,
        record_timings: cfg.record_timings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    /// Decoded the planted center codeword.
    Success,
    /// Decoded a different (valid, in-distance) codeword.
    WrongCodeword,
    Failure,
}

impl fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrialOutcome::Success => write!(f, "success"),
            TrialOutcome::WrongCodeword => write!(f, "wrong_codeword"),
            TrialOutcome::Failure => write!(f, "failure"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: u64,
    /// Actual sampled error locator.
    pub locator: BigUint,
    pub outcome: TrialOutcome,
    pub eta: Option<BigUint>,
    pub time_us: u64,
}

#[derive(Debug, Serialize)]
pub struct MonteCarloSummary {
    pub schema: u32,
    pub trials: u64,
    pub failures: u64,
    pub wrong_codeword: u64,
    pub successes: u64,
    /// failures / trials; absent when trials = 0.
    pub failure_rate: Option<f64>,
    pub wrong_center_rate: Option<f64>,
    /// (failures + wrong) / trials: the rate the bound applies to.
    pub non_center_rate: Option<f64>,
    pub bound: BoundReport,
    /// Exact binomial 99% CI on the non-center rate.
    pub ci99: Option<(f64, f64)>,
    pub bound_covers_ci_upper: Option<bool>,
    /// `bound + 3 sqrt(bound / trials)` acceptance threshold.
    pub bound_plus_3sigma: Option<f64>,
    pub within_bound_plus_3sigma: Option<bool>,
    pub soundness_checks: u64,
    pub seed: u64,
    /// Empirical distribution of sampled locators, as decimal -> count.
    pub locator_histogram: BTreeMap<String, u64>,
}

/// Plant a codeword: numerators uniform in `(-F, F)`, denominator uniform
/// among admissible values, rejected until jointly reduced.
fn plant_codeword(exp: &ValidatedExperiment, stream: SampleStream) -> FractionVector {
    let params = &exp.params;
    let basis = params.basis();
    let two_f = (params.numerator_bound() - 1u32) * 2u32 + 1u32; // |{-F+1, ..., F-1}|
    let mut num_rng = stream.column_rng(PLANT_NUMERATOR_STREAM);
    let mut den_rng = stream.column_rng(PLANT_DENOMINATOR_STREAM);

    let g_part: BigUint =
        (0..basis.len()).map(|j| basis.prime(j).pow(exp.denominator_valuations[j])).product();
    // cofactor range: g = g_part * u < G, u coprime to every basis prime
    let u_max = (params.denominator_bound() - 1u32) / &g_part;

    loop {
        let g = loop {
            let u = uniform_below(&mut den_rng, &u_max) + 1u32;
            let coprime = (0..basis.len()).all(|j| !(&u % basis.prime(j)).is_zero());
            if coprime {
                break &g_part * u;
            }
        };
        let nums: Vec<num_bigint::BigInt> = (0..params.ell())
            .map(|_| {
                let raw = uniform_below(&mut num_rng, &two_f);
                num_bigint::BigInt::from(raw)
                    - num_bigint::BigInt::from(params.numerator_bound() - 1u32)
            })
            .collect();
        if let Ok(fv) = FractionVector::new(nums, g) {
            if params.admits(&fv) {
                return fv;
            }
        }
    }
}

/// Fixed error columns for the hybrid models.
fn hybrid_fixed_columns(
    exp: &ValidatedExperiment,
    codeword: &ReceivedWord,
) -> Result<FixedErrorPart, HarnessError> {
    let basis = exp.params.basis();
    let support = exp.locator.fixed_support();
    if support.is_empty() {
        return Ok(FixedErrorPart::None);
    }
    let mut out = BTreeMap::new();
    match &exp.fixed_part {
        FixedPartSpec::Columns { columns } => {
            for (&j, col) in columns {
                let parsed =
                    col.iter().map(|s| parse_biguint(s)).collect::<Result<Vec<_>, _>>()?;
                out.insert(j, parsed);
            }
        }
        FixedPartSpec::Seeded => {
            let fixture = SampleStream::new(exp.seed, FIXTURE_TRIAL);
            for &j in &support {
                let p = basis.prime(j);
                let lam = basis.mult(j);
                let k = exp.locator.fixed[j];
                let mut rng = fixture.column_rng(j as u64);
                let shift = p.pow(lam - k);
                let m = p.pow(k);
                let col: Vec<BigUint> = loop {
                    let c: Vec<BigUint> =
                        (0..exp.params.ell()).map(|_| uniform_below(&mut rng, &m)).collect();
                    if c.iter().any(|x| !(x % p).is_zero()) {
                        break c.into_iter().map(|x| x * &shift).collect();
                    }
                };
                out.insert(j, col);
            }
        }
        FixedPartSpec::CollinearCodeword => {
            for &j in &support {
                let p = basis.prime(j);
                let lam = basis.mult(j);
                let k = exp.locator.fixed[j];
                let m_small = p.pow(k);
                let shift = p.pow(lam - k);
                // direction of the codeword column, bumped to a unit when
                // the column itself vanishes mod p
                let mut dir: Vec<BigUint> =
                    codeword.column(j).iter().map(|c| c % &m_small).collect();
                if vector_valuation_uint(&dir, p, k) > 0 {
                    dir[0] = (&dir[0] + 1u32) % &m_small;
                }
                out.insert(j, dir.into_iter().map(|x| x * &shift).collect());
            }
        }
        FixedPartSpec::None => {
            return Err(HarnessError::Config("hybrid model requires a fixed part".into()))
        }
        FixedPartSpec::Pairs { .. } => {
            return Err(HarnessError::Config("hybrid model takes columns, not pairs".into()))
        }
    }
    Ok(FixedErrorPart::Columns(out))
}

/// Fixed partial received pairs for the bad-prime models; generated once
/// per run (they are model parameters, not per-trial randomness).
fn badprime_fixed_pairs(exp: &ValidatedExperiment) -> Result<FixedErrorPart, HarnessError> {
    let basis = exp.params.basis();
    let support = exp.locator.fixed_support();
    if support.is_empty() {
        return Ok(FixedErrorPart::None);
    }
    let mut out = BTreeMap::new();
    match &exp.fixed_part {
        FixedPartSpec::Pairs { pairs } => {
            for (&j, (rho, col)) in pairs {
                let parsed =
                    col.iter().map(|s| parse_biguint(s)).collect::<Result<Vec<_>, _>>()?;
                out.insert(j, (*rho, parsed));
            }
        }
        FixedPartSpec::Seeded => {
            let fixture = SampleStream::new(exp.seed, FIXTURE_TRIAL);
            for &j in &support {
                let p = basis.prime(j);
                let lam = basis.mult(j);
                let mu = lam - exp.locator.fixed[j];
                let g_val = exp.denominator_valuations[j];
                let mut rng = fixture.column_rng(j as u64);
                let rho = if mu < g_val {
                    mu
                } else {
                    // uniform over (g_val, lam]
                    g_val
                        + 1
                        + uniform_below(&mut rng, &BigUint::from(lam - g_val))
                            .to_u32()
                            .unwrap()
                };
                let col: Vec<BigUint> = if rho == lam {
                    // full-valuation column: convention all-ones
                    vec![BigUint::one(); exp.params.ell()]
                } else {
                    let m = p.pow(lam - rho);
                    loop {
                        let c: Vec<BigUint> =
                            (0..exp.params.ell()).map(|_| uniform_below(&mut rng, &m)).collect();
                        if rho == 0 || c.iter().any(|x| !(x % p).is_zero()) {
                            break c;
                        }
                    }
                };
                out.insert(j, (rho, col));
            }
        }
        FixedPartSpec::None => {
            return Err(HarnessError::Config("bad-prime model requires a fixed part".into()))
        }
        _ => {
            return Err(HarnessError::Config(
                "bad-prime model takes partial pairs, not columns".into(),
            ))
        }
    }
    Ok(FixedErrorPart::PartialWord(out))
}

fn run_trial(exp: &ValidatedExperiment, trial: u64) -> Result<TrialRecord, HarnessError> {
    let started = Instant::now();
    let stream = SampleStream::new(exp.seed, trial);
    let params = &exp.params;
    let basis = params.basis();
    let planted = plant_codeword(exp, stream);

    let (outcome, eta, locator) = if exp.kind.is_bad_prime() {
        let fixed = badprime_fixed_pairs(exp)?;
        let word: MultiPrecisionWord = sample_badprime(
            params,
            &planted,
            &exp.locator,
            &fixed,
            exp.kind.valuation_model(),
            stream,
        )?;
        let reduced = crate::code::reduce_representative(&word, basis);
        let reenc = crate::code::encode_multiprecision(&planted, params)
            .expect("planted codeword is encodable");
        let (_, loc) = crate::code::bad_prime_error_matrix(&reenc, &reduced, basis)
            .expect("sampled word has a locator");
        let (result, eta) = decode_bad_primes_with_eta(&word, params, &exp.decoder);
        let outcome = match result {
            Ok(out) => {
                if !verify_within_distance_bad_primes(
                    &out,
                    &word,
                    params,
                    &exp.decoder.locator_bound,
                ) {
                    return Err(HarnessError::SoundnessViolation(trial));
                }
                if out == planted {
                    TrialOutcome::Success
                } else {
                    TrialOutcome::WrongCodeword
                }
            }
            Err(DecodeError::Failure) => TrialOutcome::Failure,
            Err(e) => return Err(HarnessError::Config(format!("decode error: {e}"))),
        };
        (outcome, eta, loc.locator)
    } else {
        let codeword = encode(&planted, params).expect("planted codeword is encodable");
        let error = match exp.kind {
            ModelKind::Exact => sample_err1(params, &exp.locator, stream)?,
            ModelKind::Maximal => sample_err2(params, &exp.locator, stream)?,
            ModelKind::HybridExact | ModelKind::HybridMaximal => {
                let fixed = hybrid_fixed_columns(exp, &codeword)?;
                sample_hybrid(params, &exp.locator, &fixed, exp.kind.valuation_model(), stream)?
            }
            _ => unreachable!(),
        };
        let word = apply_error(&codeword, &error, basis).expect("shapes match");
        let loc = crate::code::error_locator(&word, &codeword, basis).expect("shapes match");
        let (result, eta) = decode_with_eta(&word, params, &exp.decoder);
        let outcome = match result {
            Ok(out) => {
                if !verify_within_distance(&out, &word, params, &exp.decoder.locator_bound) {
                    return Err(HarnessError::SoundnessViolation(trial));
                }
                if out == planted {
                    TrialOutcome::Success
                } else {
                    TrialOutcome::WrongCodeword
                }
            }
            Err(DecodeError::Failure) => TrialOutcome::Failure,
            Err(e) => return Err(HarnessError::Config(format!("decode error: {e}"))),
        };
        (outcome, eta, loc.locator)
    };

    Ok(TrialRecord {
        trial,
        locator,
        outcome,
        eta,
        time_us: if exp.record_timings { started.elapsed().as_micros() as u64 } else { 0 },
    })
}

/// Run the experiment; rows come back in trial order. `threads = 0` uses
/// the rayon default.
pub fn run_montecarlo(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<(Vec<TrialRecord>, MonteCarloSummary), HarnessError> {
    let exp = validate(cfg)?;
    let records: Result<Vec<TrialRecord>, HarnessError> = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        pool.install(|| (0..exp.trials).into_par_iter().map(|t| run_trial(&exp, t)).collect())
    } else {
        (0..exp.trials).into_par_iter().map(|t| run_trial(&exp, t)).collect()
    };
    let records = records?;
    let summary = summarize(&exp, &records);
    Ok((records, summary))
}

fn summarize(exp: &ValidatedExperiment, records: &[TrialRecord]) -> MonteCarloSummary {
    let trials = records.len() as u64;
    let failures = records.iter().filter(|r| r.outcome == TrialOutcome::Failure).count() as u64;
    let wrong =
        records.iter().filter(|r| r.outcome == TrialOutcome::WrongCodeword).count() as u64;
    let successes = trials - failures - wrong;
    let mut locator_histogram = BTreeMap::new();
    for r in records {
        *locator_histogram.entry(r.locator.to_string()).or_insert(0u64) += 1;
    }
    let non_center = failures + wrong;
    let (failure_rate, wrong_rate, non_center_rate, ci99) = if trials > 0 {
        (
            Some(failures as f64 / trials as f64),
            Some(wrong as f64 / trials as f64),
            Some(non_center as f64 / trials as f64),
            Some(clopper_pearson(non_center, trials, 0.01)),
        )
    } else {
        (None, None, None, None)
    };
    let bound_value = exp.bound.bound;
    let bound_plus_3sigma = match (bound_value, trials) {
        (Some(b), t) if t > 0 => Some(b + 3.0 * (b / t as f64).sqrt()),
        _ => None,
    };
    let within = match (bound_plus_3sigma, non_center_rate) {
        (Some(limit), Some(rate)) => Some(rate <= limit),
        _ => None,
    };
    let covers = match (bound_value, ci99) {
        (Some(b), Some((_, hi))) => Some(b >= hi),
        _ => None,
    };
    MonteCarloSummary {
        schema: 1,
        trials,
        failures,
        wrong_codeword: wrong,
        successes,
        failure_rate,
        wrong_center_rate: wrong_rate,
        non_center_rate,
        bound: exp.bound.clone(),
        ci99,
        bound_covers_ci_upper: covers,
        bound_plus_3sigma,
        within_bound_plus_3sigma: within,
        soundness_checks: successes + wrong,
        seed: exp.seed,
        locator_histogram,
    }
}

/// Write records as CSV: fixed header, LF endings, trial order.
pub fn write_csv<W: Write>(mut w: W, records: &[TrialRecord]) -> std::io::Result<()> {
    w.write_all(b"trial,locator,outcome,eta,time_us\n")?;
    for r in records {
        let eta = r.eta.as_ref().map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", r.trial, r.locator, r.outcome, eta, r.time_us)?;
    }
    Ok(())
}

/// Counting and identity self-checks behind the `selftest` CLI command:
/// the tuple-counting formula against brute force, the divisor-sum
/// identity, and the CRT round-trip.
pub fn selftest() -> Result<(), String> {
    use crate::errmodel::count_omega;
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_rational::BigRational;

    // counting formula vs. gcd-histogram enumeration
    for lambda in 1u64..=60 {
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        for x in 0..lambda {
            *hist.entry(x.gcd(&lambda)).or_insert(0) += 1;
        }
        for ell in 1u32..=2 {
            let counts: BTreeMap<u64, u64> = if ell == 1 {
                hist.clone()
            } else {
                let mut two = BTreeMap::new();
                for (&d1, &c1) in &hist {
                    for (&d2, &c2) in &hist {
                        *two.entry(d1.gcd(&d2)).or_insert(0) += c1 * c2;
                    }
                }
                two
            };
            for (&eta, &count) in &counts {
                let formula = count_omega(&BigUint::from(lambda), &BigUint::from(eta), ell)
                    .map_err(|e| e.to_string())?;
                if formula != BigUint::from(count) {
                    return Err(format!("count mismatch at lambda={lambda} eta={eta} ell={ell}"));
                }
            }
        }
    }

    // divisor-sum identity with f(p, k) = p^k
    for lambda in 1u64..=500 {
        let f = |p: &BigUint, k: u32| BigRational::from_integer(BigInt::from(p.pow(k)));
        let (lhs, rhs) = crate::bounds::divisor_sum_identity(&BigUint::from(lambda), &f);
        if lhs != rhs {
            return Err(format!("divisor-sum identity fails at lambda={lambda}"));
        }
    }

    // CRT round-trip on a mixed basis
    let basis = crate::numtheory::PrimePowerBasis::from_u64(&[2, 3, 5], &[2, 2, 1]).unwrap();
    for r in 0u64..180 {
        let residues: Vec<BigUint> =
            (0..basis.len()).map(|j| BigUint::from(r) % basis.prime_power(j)).collect();
        if crate::numtheory::crt_interpolate(&residues, &basis) != BigUint::from(r) {
            return Err(format!("CRT round-trip fails at {r}"));
        }
    }
    Ok(())
}
