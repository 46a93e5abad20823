//! Code parameters, plain and multi-precision encodings, distances,
//! error locators and the ambient-space equivalence used for bad primes.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::numtheory::{
    self, crt_interpolate, log2_biguint, mod_inverse, truncated_valuation_uint,
    vector_valuation_uint, PrimePowerBasis,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeError {
    /// `gcd(g, N) != 1`: the plain encoding is undefined, use the
    /// multi-precision encoding instead.
    BadDenominator,
    BoundViolation,
    /// 2FG exceeds N: neither regime admits these bounds.
    BoundsTooLarge,
    ShapeMismatch,
    NotReduced,
    InvalidResidue,
    InvalidValuation,
}

impl fmt::Display for CodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeError::BadDenominator => {
                write!(f, "denominator shares a prime with the modulus")
            }
            CodeError::BoundViolation => write!(f, "fraction vector violates the F/G bounds"),
            CodeError::BoundsTooLarge => write!(f, "2FG must not exceed N"),
            CodeError::ShapeMismatch => write!(f, "word shapes do not match"),
            CodeError::NotReduced => write!(f, "input is not reduced"),
            CodeError::InvalidResidue => write!(f, "residue out of range"),
            CodeError::InvalidValuation => write!(f, "valuation exceeds multiplicity"),
        }
    }
}

impl std::error::Error for CodeError {}

/// Which bound regime the parameters satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundRegime {
    /// `2FG < N`: both the plain and the bad-prime code are defined.
    Strict,
    /// `2FG = N`: only the bad-prime code is defined.
    BadPrimeBoundary,
}

/// Code parameters: interleaving count, numerator/denominator bounds and
/// the prime-power basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    ell: usize,
    numerator_bound: BigUint,
    denominator_bound: BigUint,
    basis: PrimePowerBasis,
    regime: BoundRegime,
}

impl CodeParams {
    pub fn new(
        ell: usize,
        numerator_bound: BigUint,
        denominator_bound: BigUint,
        basis: PrimePowerBasis,
    ) -> Result<Self, CodeError> {
        assert!(ell >= 1, "interleaving count must be >= 1");
        assert!(!numerator_bound.is_zero() && !denominator_bound.is_zero());
        let two_fg = BigUint::from(2u32) * &numerator_bound * &denominator_bound;
        let regime = match two_fg.cmp(basis.modulus()) {
            std::cmp::Ordering::Less => BoundRegime::Strict,
            std::cmp::Ordering::Equal => BoundRegime::BadPrimeBoundary,
            std::cmp::Ordering::Greater => return Err(CodeError::BoundsTooLarge),
        };
        Ok(Self { ell, numerator_bound, denominator_bound, basis, regime })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn numerator_bound(&self) -> &BigUint {
        &self.numerator_bound
    }

    pub fn denominator_bound(&self) -> &BigUint {
        &self.denominator_bound
    }

    pub fn basis(&self) -> &PrimePowerBasis {
        &self.basis
    }

    pub fn regime(&self) -> BoundRegime {
        self.regime
    }

    /// Do the bounds `|f_i| < F`, `0 < g < G` hold for this vector?
    pub fn admits(&self, fv: &FractionVector) -> bool {
        fv.numerators.len() == self.ell
            && fv.numerators.iter().all(|f| f.magnitude() < &self.numerator_bound)
            && fv.denominator < self.denominator_bound
    }

    /// `log2(N / (2FG))`, a lower bound on the code minimum distance.
    pub fn min_distance_lower_bound(&self) -> f64 {
        let two_fg = BigUint::from(2u32) * &self.numerator_bound * &self.denominator_bound;
        numtheory::log2_ratio(self.basis.modulus(), &two_fg)
    }
}

/// A reduced vector of fractions `f_1/g, ..., f_l/g` with shared positive
/// denominator and `gcd(f_1, ..., f_l, g) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FractionVector {
    numerators: Vec<BigInt>,
    denominator: BigUint,
}

impl FractionVector {
    pub fn new(numerators: Vec<BigInt>, denominator: BigUint) -> Result<Self, CodeError> {
        if denominator.is_zero() {
            return Err(CodeError::BoundViolation);
        }
        let mut g = denominator.clone();
        for f in &numerators {
            g = g.gcd(f.magnitude());
        }
        if !g.is_one() {
            return Err(CodeError::NotReduced);
        }
        Ok(Self { numerators, denominator })
    }

    pub fn from_i64(numerators: &[i64], denominator: u64) -> Result<Self, CodeError> {
        Self::new(
            numerators.iter().map(|&f| BigInt::from(f)).collect(),
            BigUint::from(denominator),
        )
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numerators
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn ell(&self) -> usize {
        self.numerators.len()
    }
}

impl fmt::Display for FractionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, num) in self.numerators.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{num}")?;
        }
        write!(f, ")/{}", self.denominator)
    }
}

/// An `l x n` matrix of residues: column j holds the l residues modulo
/// `p_j^{lambda_j}`, plus the CRT interpolants `R_i` of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedWord {
    /// `columns[j][i]`: residue of row i at basis position j.
    columns: Vec<Vec<BigUint>>,
    interpolants: Vec<BigUint>,
}

impl ReceivedWord {
    pub fn new(columns: Vec<Vec<BigUint>>, basis: &PrimePowerBasis) -> Result<Self, CodeError> {
        if columns.len() != basis.len() || columns.is_empty() {
            return Err(CodeError::ShapeMismatch);
        }
        let ell = columns[0].len();
        if ell == 0 || columns.iter().any(|c| c.len() != ell) {
            return Err(CodeError::ShapeMismatch);
        }
        for (j, col) in columns.iter().enumerate() {
            if col.iter().any(|r| r >= basis.prime_power(j)) {
                return Err(CodeError::InvalidResidue);
            }
        }
        let interpolants = (0..ell)
            .map(|i| {
                let row: Vec<BigUint> = columns.iter().map(|c| c[i].clone()).collect();
                crt_interpolate(&row, basis)
            })
            .collect();
        Ok(Self { columns, interpolants })
    }

    pub fn ell(&self) -> usize {
        self.columns[0].len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[BigUint] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<BigUint>] {
        &self.columns
    }

    /// CRT interpolant `R_i` of row i, in `[0, N)`.
    pub fn interpolant(&self, i: usize) -> &BigUint {
        &self.interpolants[i]
    }
}

/// Per-column pairs `(rho_j, col_j)` of a received valuation and residue
/// column; the representation used when the denominator may share primes
/// with the modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPrecisionWord {
    pairs: Vec<(u32, Vec<BigUint>)>,
}

impl MultiPrecisionWord {
    pub fn new(
        pairs: Vec<(u32, Vec<BigUint>)>,
        basis: &PrimePowerBasis,
    ) -> Result<Self, CodeError> {
        if pairs.len() != basis.len() || pairs.is_empty() {
            return Err(CodeError::ShapeMismatch);
        }
        let ell = pairs[0].1.len();
        if ell == 0 || pairs.iter().any(|(_, c)| c.len() != ell) {
            return Err(CodeError::ShapeMismatch);
        }
        for (j, (rho, col)) in pairs.iter().enumerate() {
            if *rho > basis.mult(j) {
                return Err(CodeError::InvalidValuation);
            }
            if col.iter().any(|r| r >= basis.prime_power(j)) {
                return Err(CodeError::InvalidResidue);
            }
        }
        Ok(Self { pairs })
    }

    pub fn ell(&self) -> usize {
        self.pairs[0].1.len()
    }

    pub fn num_columns(&self) -> usize {
        self.pairs.len()
    }

    pub fn valuation(&self, j: usize) -> u32 {
        self.pairs[j].0
    }

    pub fn column(&self, j: usize) -> &[BigUint] {
        &self.pairs[j].1
    }

    pub fn pairs(&self) -> &[(u32, Vec<BigUint>)] {
        &self.pairs
    }

    /// `gcd(col_j, p_j^{rho_j}) = 1` for every column.
    pub fn is_reduced(&self, basis: &PrimePowerBasis) -> bool {
        self.pairs.iter().enumerate().all(|(j, (rho, col))| {
            *rho == 0 || vector_valuation_uint(col, basis.prime(j), *rho) == 0
        })
    }

    /// CRT interpolants of the residue rows, in `[0, N)`.
    pub fn interpolants(&self, basis: &PrimePowerBasis) -> Vec<BigUint> {
        (0..self.ell())
            .map(|i| {
                let row: Vec<BigUint> = self.pairs.iter().map(|(_, c)| c[i].clone()).collect();
                crt_interpolate(&row, basis)
            })
            .collect()
    }
}

/// Error locator `Lambda`, truth locator `Y = N/Lambda`, per-column error
/// valuations and the error support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorLocator {
    pub locator: BigUint,
    pub truth: BigUint,
    pub mus: Vec<u32>,
    pub support: Vec<usize>,
}

impl ErrorLocator {
    fn from_mus(mus: Vec<u32>, basis: &PrimePowerBasis) -> Self {
        let mut locator = BigUint::one();
        let mut support = Vec::new();
        for (j, &mu) in mus.iter().enumerate() {
            let lam = basis.mult(j);
            debug_assert!(mu <= lam);
            if mu < lam {
                support.push(j);
                locator *= basis.prime(j).pow(lam - mu);
            }
        }
        let truth = basis.modulus() / &locator;
        Self { locator, truth, mus, support }
    }

    /// `log2(Lambda)`, the weighted distance.
    pub fn log2(&self) -> f64 {
        if self.locator.is_one() {
            0.0
        } else {
            log2_biguint(&self.locator)
        }
    }
}

/// Plain encoding: column j, row i is `f_i * g^{-1} mod p_j^{lambda_j}`.
/// Requires `gcd(g, N) = 1`.
pub fn encode(fv: &FractionVector, params: &CodeParams) -> Result<ReceivedWord, CodeError> {
    if !params.admits(fv) {
        return Err(CodeError::BoundViolation);
    }
    let basis = params.basis();
    if !fv.denominator.gcd(basis.modulus()).is_one() {
        return Err(CodeError::BadDenominator);
    }
    let columns = (0..basis.len())
        .map(|j| {
            let m = basis.prime_power(j);
            let g_inv = mod_inverse(&(&fv.denominator % m), m).expect("g is a unit");
            fv.numerators
                .iter()
                .map(|f| (f.mod_floor(&BigInt::from(m.clone())).to_biguint().unwrap() * &g_inv) % m)
                .collect()
        })
        .collect();
    ReceivedWord::new(columns, basis)
}

/// Multi-precision encoding: per column the pair `(v_j, S_j)` with
/// `v_j = val_{p_j}(g)` and `S_j = f * (g / p_j^{v_j})^{-1} mod
/// p_j^{lambda_j - v_j}`; a full-valuation column stores the all-ones
/// vector by convention.
pub fn encode_multiprecision(
    fv: &FractionVector,
    params: &CodeParams,
) -> Result<MultiPrecisionWord, CodeError> {
    if !params.admits(fv) {
        return Err(CodeError::BoundViolation);
    }
    let basis = params.basis();
    let pairs = (0..basis.len())
        .map(|j| {
            let p = basis.prime(j);
            let lam = basis.mult(j);
            let rho = truncated_valuation_uint(&fv.denominator, p, lam);
            if rho == lam {
                return (rho, vec![BigUint::one(); fv.ell()]);
            }
            let m = p.pow(lam - rho); // p^{lambda - rho}
            let unit_part = &fv.denominator / p.pow(rho);
            let inv = mod_inverse(&(&unit_part % &m), &m).expect("unit part is invertible");
            let col = fv
                .numerators
                .iter()
                .map(|f| (f.mod_floor(&BigInt::from(m.clone())).to_biguint().unwrap() * &inv) % &m)
                .collect();
            (rho, col)
        })
        .collect();
    MultiPrecisionWord::new(pairs, basis)
}

/// Per-column error valuations and locator between two plain words.
pub fn error_locator(
    w1: &ReceivedWord,
    w2: &ReceivedWord,
    basis: &PrimePowerBasis,
) -> Result<ErrorLocator, CodeError> {
    if w1.num_columns() != w2.num_columns()
        || w1.ell() != w2.ell()
        || w1.num_columns() != basis.len()
    {
        return Err(CodeError::ShapeMismatch);
    }
    let mus = (0..basis.len())
        .map(|j| {
            let m = basis.prime_power(j);
            let diff: Vec<BigUint> = w1
                .column(j)
                .iter()
                .zip(w2.column(j))
                .map(|(a, b)| (m + a - b) % m)
                .collect();
            vector_valuation_uint(&diff, basis.prime(j), basis.mult(j))
        })
        .collect();
    Ok(ErrorLocator::from_mus(mus, basis))
}

/// Weighted distance between two plain words: the exact locator plus its
/// log2 value. Zero exactly on equal words.
pub fn distance(
    w1: &ReceivedWord,
    w2: &ReceivedWord,
    basis: &PrimePowerBasis,
) -> Result<(BigUint, f64), CodeError> {
    let loc = error_locator(w1, w2, basis)?;
    Ok((loc.locator.clone(), loc.log2()))
}

/// Relative error columns `e_j = p^{rho1_j} col2_j - p^{rho2_j} col1_j mod
/// p^{lambda_j}` between two reduced multi-precision words, with the
/// resulting locator. Rejects non-reduced input.
pub fn bad_prime_error_matrix(
    w1: &MultiPrecisionWord,
    w2: &MultiPrecisionWord,
    basis: &PrimePowerBasis,
) -> Result<(Vec<Vec<BigUint>>, ErrorLocator), CodeError> {
    if w1.num_columns() != w2.num_columns()
        || w1.ell() != w2.ell()
        || w1.num_columns() != basis.len()
    {
        return Err(CodeError::ShapeMismatch);
    }
    if !w1.is_reduced(basis) || !w2.is_reduced(basis) {
        return Err(CodeError::NotReduced);
    }
    let mut columns = Vec::with_capacity(basis.len());
    let mut mus = Vec::with_capacity(basis.len());
    for j in 0..basis.len() {
        let m = basis.prime_power(j);
        let p = basis.prime(j);
        let shift1 = p.pow(w1.valuation(j));
        let shift2 = p.pow(w2.valuation(j));
        let col: Vec<BigUint> = w1
            .column(j)
            .iter()
            .zip(w2.column(j))
            .map(|(r1, r2)| ((&shift1 * r2) % m + m - (&shift2 * r1) % m) % m)
            .collect();
        mus.push(vector_valuation_uint(&col, p, basis.mult(j)));
        columns.push(col);
    }
    Ok((columns, ErrorLocator::from_mus(mus, basis)))
}

/// Ambient-space equivalence: true iff `p^{rho2_j} col1_j = p^{rho1_j}
/// col2_j mod p^{lambda_j}` in every column.
pub fn is_equivalent(
    w1: &MultiPrecisionWord,
    w2: &MultiPrecisionWord,
    basis: &PrimePowerBasis,
) -> bool {
    if w1.num_columns() != w2.num_columns() || w1.ell() != w2.ell() {
        return false;
    }
    (0..basis.len()).all(|j| {
        let m = basis.prime_power(j);
        let p = basis.prime(j);
        let shift1 = p.pow(w1.valuation(j));
        let shift2 = p.pow(w2.valuation(j));
        w1.column(j)
            .iter()
            .zip(w2.column(j))
            .all(|(r1, r2)| (&shift2 * r1) % m == (&shift1 * r2) % m)
    })
}

/// Divide out `p_j^{eta_j} = gcd(col_j, p_j^{rho_j})` per column. A
/// degenerate column that is zero at full valuation (`rho = lambda` and
/// the whole column divisible by `p^lambda`) keeps its valuation and
/// stores the convention all-ones column.
pub fn reduce_representative(
    w: &MultiPrecisionWord,
    basis: &PrimePowerBasis,
) -> MultiPrecisionWord {
    let pairs = (0..basis.len())
        .map(|j| {
            let p = basis.prime(j);
            let lam = basis.mult(j);
            let (rho, col) = (&w.pairs[j].0, &w.pairs[j].1);
            let nu = vector_valuation_uint(col, p, lam);
            if *rho == lam && nu == lam {
                return (lam, vec![BigUint::one(); w.ell()]);
            }
            let eta = nu.min(*rho);
            if eta == 0 {
                return (*rho, col.clone());
            }
            let shift = p.pow(eta);
            (rho - eta, col.iter().map(|r| r / &shift).collect())
        })
        .collect();
    MultiPrecisionWord::new(pairs, basis).expect("reduction preserves shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ubig(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn params(ell: usize, f: u64, g: u64, primes: &[u64], mults: &[u32]) -> CodeParams {
        let basis = PrimePowerBasis::from_u64(primes, mults).unwrap();
        CodeParams::new(ell, ubig(f), ubig(g), basis).unwrap()
    }

    #[test]
    fn encode_examples() {
        let p = params(1, 2, 4, &[2, 3, 5], &[1, 1, 1]);
        let w = encode(&FractionVector::from_i64(&[1], 1).unwrap(), &p).unwrap();
        assert_eq!(w.columns(), &[vec![ubig(1)], vec![ubig(1)], vec![ubig(1)]]);

        assert_eq!(
            encode(&FractionVector::from_i64(&[1], 3).unwrap(), &p),
            Err(CodeError::BadDenominator)
        );

        // 1/7 needs G = 8, which forces a wider basis; inverses by hand at
        // 2, 3, 5 are 1, 1, 3, and the interpolant over 30 is 13
        let p = params(1, 2, 8, &[2, 3, 5, 11], &[1, 1, 1, 1]);
        let w = encode(&FractionVector::from_i64(&[1], 7).unwrap(), &p).unwrap();
        assert_eq!(&w.columns()[..3], &[vec![ubig(1)], vec![ubig(1)], vec![ubig(3)]]);
        let small = PrimePowerBasis::from_u64(&[2, 3, 5], &[1, 1, 1]).unwrap();
        assert_eq!(crt_interpolate(&[ubig(1), ubig(1), ubig(3)], &small), ubig(13));
        assert_eq!((ubig(7) * ubig(13)) % ubig(30), ubig(1));
    }

    #[test]
    fn encode_rejects_out_of_bounds() {
        let p = params(1, 2, 2, &[2, 3, 5], &[1, 1, 1]);
        assert_eq!(
            encode(&FractionVector::from_i64(&[2], 1).unwrap(), &p),
            Err(CodeError::BoundViolation)
        );
        assert_eq!(
            encode(&FractionVector::from_i64(&[1], 7).unwrap(), &p),
            Err(CodeError::BoundViolation)
        );
    }

    #[test]
    fn encode_multiprecision_examples() {
        let p = params(1, 2, 8, &[2, 3, 5], &[2, 1, 1]);
        // 1/2: (1, (1)) at p=2 since 1/(2/2) mod 2 = 1; 2^{-1} = 2 mod 3, 3 mod 5
        let w = encode_multiprecision(&FractionVector::from_i64(&[1], 2).unwrap(), &p).unwrap();
        assert_eq!(w.pairs(), &[
            (1, vec![ubig(1)]),
            (0, vec![ubig(2)]),
            (0, vec![ubig(3)])
        ]);

        // 1/4: full valuation at p=2, convention all-ones column
        let w = encode_multiprecision(&FractionVector::from_i64(&[1], 4).unwrap(), &p).unwrap();
        assert_eq!(w.pairs()[0], (2, vec![ubig(1)]));

        // coincides with the plain encoding when gcd(g, N) = 1
        let p = params(1, 2, 8, &[2, 3, 5, 11], &[1, 1, 1, 1]);
        let fv = FractionVector::from_i64(&[1], 7).unwrap();
        let w = encode_multiprecision(&fv, &p).unwrap();
        let plain = encode(&fv, &p).unwrap();
        for j in 0..4 {
            assert_eq!(w.valuation(j), 0);
            assert_eq!(w.column(j), plain.column(j));
        }
    }

    #[test]
    fn error_locator_examples() {
        let basis = PrimePowerBasis::from_u64(&[2, 3], &[2, 1]).unwrap();
        let p = params(1, 2, 2, &[2, 3], &[2, 1]);
        let w = encode(&FractionVector::from_i64(&[1], 1).unwrap(), &p).unwrap();
        let loc = error_locator(&w, &w, &basis).unwrap();
        assert!(loc.locator.is_one());
        assert!(loc.support.is_empty());

        // difference of valuation 1 at j=0 only
        let w2 = ReceivedWord::new(
            vec![vec![(&w.column(0)[0] + ubig(2)) % ubig(4)], w.column(1).to_vec()],
            &basis,
        )
        .unwrap();
        let loc = error_locator(&w, &w2, &basis).unwrap();
        assert_eq!(loc.locator, ubig(2));
        assert_eq!(loc.mus[0], 1);

        // all columns fully wrong: locator = N
        let w3 = ReceivedWord::new(
            vec![
                vec![(&w.column(0)[0] + ubig(1)) % ubig(4)],
                vec![(&w.column(1)[0] + ubig(1)) % ubig(3)],
            ],
            &basis,
        )
        .unwrap();
        let loc = error_locator(&w, &w3, &basis).unwrap();
        assert_eq!(&loc.locator, basis.modulus());
    }

    #[test]
    fn distance_examples() {
        let basis = PrimePowerBasis::from_u64(&[2, 3, 5], &[1, 1, 1]).unwrap();
        // residues of 1/7: (1, 1, 3)
        let w = ReceivedWord::new(
            vec![vec![ubig(1)], vec![ubig(1)], vec![ubig(3)]],
            &basis,
        )
        .unwrap();
        assert_eq!(distance(&w, &w, &basis).unwrap(), (ubig(1), 0.0));

        let w2 = ReceivedWord::new(
            vec![
                vec![(&w.column(0)[0] + ubig(1)) % ubig(2)],
                vec![(&w.column(1)[0] + ubig(1)) % ubig(3)],
                vec![(&w.column(2)[0] + ubig(1)) % ubig(5)],
            ],
            &basis,
        )
        .unwrap();
        let (lambda, d) = distance(&w, &w2, &basis).unwrap();
        assert_eq!(lambda, ubig(30));
        assert!((d - 30f64.log2()).abs() < 1e-12);

        // locator 2 from a valuation-1 difference on a squared column
        let basis = PrimePowerBasis::from_u64(&[2, 3], &[2, 1]).unwrap();
        let a = ReceivedWord::new(vec![vec![ubig(1)], vec![ubig(1)]], &basis).unwrap();
        let b = ReceivedWord::new(vec![vec![ubig(3)], vec![ubig(1)]], &basis).unwrap();
        assert_eq!(distance(&a, &b, &basis).unwrap(), (ubig(2), 1.0));
    }

    #[test]
    fn bad_prime_error_matrix_examples() {
        let basis = PrimePowerBasis::from_u64(&[2], &[2]).unwrap();
        let w1 = MultiPrecisionWord::new(vec![(1, vec![ubig(1)])], &basis).unwrap();
        let (cols, loc) = bad_prime_error_matrix(&w1, &w1, &basis).unwrap();
        assert!(cols[0][0].is_zero());
        assert!(loc.locator.is_one());

        // e = 2*1 - 1*1 = 1 mod 4, valuation 0, column locator 4
        let w2 = MultiPrecisionWord::new(vec![(0, vec![ubig(1)])], &basis).unwrap();
        let (cols, loc) = bad_prime_error_matrix(&w1, &w2, &basis).unwrap();
        assert_eq!(cols[0][0], ubig(1));
        assert_eq!(loc.locator, ubig(4));

        // (2,(2)) reduces to (1,(1)): zero error against w1
        let raw = MultiPrecisionWord::new(vec![(2, vec![ubig(2)])], &basis).unwrap();
        let reduced = reduce_representative(&raw, &basis);
        assert_eq!(reduced.pairs(), &[(1, vec![ubig(1)])]);
        let (cols, loc) = bad_prime_error_matrix(&w1, &reduced, &basis).unwrap();
        assert!(cols[0][0].is_zero());
        assert!(loc.locator.is_one());

        // non-reduced input rejected
        let nonreduced = MultiPrecisionWord::new(vec![(1, vec![ubig(2)])], &basis).unwrap();
        assert_eq!(
            bad_prime_error_matrix(&w1, &nonreduced, &basis),
            Err(CodeError::NotReduced)
        );
    }

    #[test]
    fn is_equivalent_examples() {
        let basis = PrimePowerBasis::from_u64(&[2], &[2]).unwrap();
        let w1 = MultiPrecisionWord::new(vec![(1, vec![ubig(1)])], &basis).unwrap();
        assert!(is_equivalent(&w1, &w1, &basis));
        // 4*1 = 2*2 = 0 mod 4
        let w2 = MultiPrecisionWord::new(vec![(2, vec![ubig(2)])], &basis).unwrap();
        assert!(is_equivalent(&w1, &w2, &basis));
        // 1 != 4 = 0 mod 4
        let w3 = MultiPrecisionWord::new(vec![(0, vec![ubig(2)])], &basis).unwrap();
        assert!(!is_equivalent(&w1, &w3, &basis));
    }

    #[test]
    fn reduce_representative_examples() {
        let basis = PrimePowerBasis::from_u64(&[2], &[2]).unwrap();
        let w = MultiPrecisionWord::new(vec![(1, vec![ubig(1)])], &basis).unwrap();
        assert_eq!(reduce_representative(&w, &basis), w);

        let w = MultiPrecisionWord::new(vec![(2, vec![ubig(2)])], &basis).unwrap();
        assert_eq!(reduce_representative(&w, &basis).pairs(), &[(1, vec![ubig(1)])]);

        // full-valuation degenerate column keeps rho, stores the convention column
        let basis = PrimePowerBasis::from_u64(&[3], &[1]).unwrap();
        let w = MultiPrecisionWord::new(vec![(1, vec![ubig(0)])], &basis).unwrap();
        assert_eq!(reduce_representative(&w, &basis).pairs(), &[(1, vec![ubig(1)])]);
    }

    #[test]
    fn reduce_is_idempotent_and_preserves_class() {
        let basis = PrimePowerBasis::from_u64(&[2, 3], &[3, 2]).unwrap();
        for rho0 in 0..=3u32 {
            for c0 in 0..8u64 {
                for rho1 in 0..=2u32 {
                    for c1 in 0..9u64 {
                        let w = MultiPrecisionWord::new(
                            vec![(rho0, vec![ubig(c0)]), (rho1, vec![ubig(c1)])],
                            &basis,
                        )
                        .unwrap();
                        let r = reduce_representative(&w, &basis);
                        assert!(r.is_reduced(&basis));
                        assert!(is_equivalent(&w, &r, &basis), "w={w:?} r={r:?}");
                        assert_eq!(reduce_representative(&r, &basis), r);
                    }
                }
            }
        }
    }

    #[test]
    fn min_distance_lower_bound_examples() {
        let p = params(1, 2, 2, &[2, 3, 5], &[1, 1, 1]);
        assert!((p.min_distance_lower_bound() - 3.75f64.log2()).abs() < 1e-12);

        let p = params(2, 3, 3, &[2, 3, 5, 7], &[2, 1, 1, 1]);
        assert!((p.min_distance_lower_bound() - (420f64 / 18.0).log2()).abs() < 1e-12);

        // boundary regime: 2FG = N accepted, flagged, bound 0
        let p = params(1, 3, 5, &[2, 3, 5], &[1, 1, 1]);
        assert_eq!(p.regime(), BoundRegime::BadPrimeBoundary);
        assert_eq!(p.min_distance_lower_bound(), 0.0);

        // 2FG > N rejected
        let basis = PrimePowerBasis::from_u64(&[2, 3], &[1, 1]).unwrap();
        assert_eq!(
            CodeParams::new(1, ubig(2), ubig(2), basis),
            Err(CodeError::BoundsTooLarge)
        );
    }

    #[test]
    fn fraction_vector_must_be_reduced() {
        assert_eq!(
            FractionVector::from_i64(&[2, 4], 6),
            Err(CodeError::NotReduced)
        );
        assert!(FractionVector::from_i64(&[2, 3], 6).is_ok());
        assert!(FractionVector::from_i64(&[0], 1).is_ok());
        assert_eq!(FractionVector::from_i64(&[0], 2), Err(CodeError::NotReduced));
    }
}
