//! JSON wire formats shared by the CLI, the simulation harness and the
//! distributed-solver demo. Big integers travel as decimal strings.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::code::{CodeError, CodeParams, FractionVector, MultiPrecisionWord, ReceivedWord};
use crate::numtheory::{BasisError, PrimePowerBasis};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireError {
    BadInteger(String),
    Basis(BasisError),
    Code(CodeError),
}

impl std::fmt::Display for WireError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WireError::BadInteger(s) => write!(f, "not a decimal integer: {s}"),
            WireError::Basis(e) => write!(f, "{e}"),
            WireError::Code(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for WireError {}

impl From<BasisError> for WireError {
    fn from(e: BasisError) -> Self {
        WireError::Basis(e)
    }
}

impl From<CodeError> for WireError {
    fn from(e: CodeError) -> Self {
        WireError::Code(e)
    }
}

pub fn parse_biguint(s: &str) -> Result<BigUint, WireError> {
    s.parse().map_err(|_| WireError::BadInteger(s.to_string()))
}

pub fn parse_bigint(s: &str) -> Result<BigInt, WireError> {
    s.parse().map_err(|_| WireError::BadInteger(s.to_string()))
}

/// Code parameters: primes and bounds as decimal strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CodeParamsDto {
    pub primes: Vec<String>,
    pub mults: Vec<u32>,
    pub ell: usize,
    pub numerator_bound: String,
    pub denominator_bound: String,
    /// Accept primes above the deterministic certification range on trust.
    #[serde(default)]
    pub trust_large_primes: bool,
}

impl CodeParamsDto {
    pub fn to_params(&self) -> Result<CodeParams, WireError> {
        let primes = self
            .primes
            .iter()
            .map(|s| parse_biguint(s))
            .collect::<Result<Vec<_>, _>>()?;
        let basis = if self.trust_large_primes {
            PrimePowerBasis::new_trusting_large_primes(primes, self.mults.clone())?
        } else {
            PrimePowerBasis::new(primes, self.mults.clone())?
        };
        Ok(CodeParams::new(
            self.ell,
            parse_biguint(&self.numerator_bound)?,
            parse_biguint(&self.denominator_bound)?,
            basis,
        )?)
    }

    pub fn from_params(params: &CodeParams) -> Self {
        Self {
            primes: params.basis().primes().iter().map(|p| p.to_string()).collect(),
            mults: params.basis().mults().to_vec(),
            ell: params.ell(),
            numerator_bound: params.numerator_bound().to_string(),
            denominator_bound: params.denominator_bound().to_string(),
            trust_large_primes: params.basis().primes().iter().any(|p| p.bits() > 64),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FractionVectorDto {
    pub numerators: Vec<String>,
    pub denominator: String,
}

impl FractionVectorDto {
    pub fn to_vector(&self) -> Result<FractionVector, WireError> {
        let numerators = self
            .numerators
            .iter()
            .map(|s| parse_bigint(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FractionVector::new(numerators, parse_biguint(&self.denominator)?)?)
    }

    pub fn from_vector(fv: &FractionVector) -> Self {
        Self {
            numerators: fv.numerators().iter().map(|f| f.to_string()).collect(),
            denominator: fv.denominator().to_string(),
        }
    }
}

/// Residue matrix: `columns[j][i]` is the row-i residue at basis position j.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReceivedWordDto {
    pub columns: Vec<Vec<String>>,
}

impl ReceivedWordDto {
    pub fn to_word(&self, basis: &PrimePowerBasis) -> Result<ReceivedWord, WireError> {
        let columns = self
            .columns
            .iter()
            .map(|col| col.iter().map(|s| parse_biguint(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReceivedWord::new(columns, basis)?)
    }

    pub fn from_word(word: &ReceivedWord) -> Self {
        Self {
            columns: word
                .columns()
                .iter()
                .map(|col| col.iter().map(|r| r.to_string()).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MultiPrecisionPairDto {
    pub rho: u32,
    pub col: Vec<String>,
}

/// Valuation/residue pairs, one per basis position.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MultiPrecisionWordDto {
    pub pairs: Vec<MultiPrecisionPairDto>,
}

impl MultiPrecisionWordDto {
    pub fn to_word(&self, basis: &PrimePowerBasis) -> Result<MultiPrecisionWord, WireError> {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                let col = p.col.iter().map(|s| parse_biguint(s)).collect::<Result<Vec<_>, _>>()?;
                Ok((p.rho, col))
            })
            .collect::<Result<Vec<_>, WireError>>()?;
        Ok(MultiPrecisionWord::new(pairs, basis)?)
    }

    pub fn from_word(word: &MultiPrecisionWord) -> Self {
        Self {
            pairs: word
                .pairs()
                .iter()
                .map(|(rho, col)| MultiPrecisionPairDto {
                    rho: *rho,
                    col: col.iter().map(|r| r.to_string()).collect(),
                })
                .collect(),
        }
    }
}

/// Render an optional big value, empty string when absent (CSV cells).
pub fn opt_to_string(x: &Option<BigUint>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// True when the string is a plausible decimal integer (possibly signed).
pub fn looks_like_integer(s: &str) -> bool {
    let t = s.strip_prefix('-').unwrap_or(s);
    !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
}

impl FractionVector {
    /// Zero vector `0/1` of the given width.
    pub fn zero(ell: usize) -> Self {
        FractionVector::new(vec![BigInt::zero(); ell], BigUint::from(1u32)).unwrap()
    }
}
