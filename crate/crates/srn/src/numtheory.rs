//! Arbitrary-precision number theory underneath the codes: truncated
//! p-adic valuations, CRT interpolation, central remainders, modular
//! inverses and the prime-power basis type.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// The moduli system `p_1^{l_1}, ..., p_n^{l_n}`.
///
/// Primes are strictly increasing and certified prime at construction
/// (deterministic Miller-Rabin, valid below 2^64). Larger primes are only
/// accepted through [`PrimePowerBasis::new_trusting_large_primes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimePowerBasis {
    primes: Vec<BigUint>,
    mults: Vec<u32>,
    prime_powers: Vec<BigUint>,
    modulus: BigUint,
    total_weight: u64,
    /// `(N / m_j) * ((N / m_j)^{-1} mod m_j) mod N`, so interpolation is a
    /// single dot product.
    crt_coeffs: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisError {
    Empty,
    NotSorted,
    NotPrime(BigUint),
    /// Primality of values >= 2^64 is not certified by the deterministic
    /// Miller-Rabin set; the caller must opt in explicitly.
    TooLargeToCertify(BigUint),
    ZeroMultiplicity,
}

impl fmt::Display for BasisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisError::Empty => write!(f, "basis needs at least one prime"),
            BasisError::NotSorted => write!(f, "primes must be strictly increasing"),
            BasisError::NotPrime(p) => write!(f, "{p} is not prime"),
            BasisError::TooLargeToCertify(p) => {
                write!(f, "{p} is too large for deterministic primality certification")
            }
            BasisError::ZeroMultiplicity => write!(f, "multiplicities must be >= 1"),
        }
    }
}

impl std::error::Error for BasisError {}

impl PrimePowerBasis {
    pub fn new(primes: Vec<BigUint>, mults: Vec<u32>) -> Result<Self, BasisError> {
        for p in &primes {
            match p.to_u64() {
                Some(v) => {
                    if !is_prime_u64(v) {
                        return Err(BasisError::NotPrime(p.clone()));
                    }
                }
                None => return Err(BasisError::TooLargeToCertify(p.clone())),
            }
        }
        Self::build(primes, mults)
    }

    /// Like [`PrimePowerBasis::new`] but accepts primes >= 2^64 on trust.
    /// Values below 2^64 are still certified.
    pub fn new_trusting_large_primes(
        primes: Vec<BigUint>,
        mults: Vec<u32>,
    ) -> Result<Self, BasisError> {
        for p in &primes {
            if let Some(v) = p.to_u64() {
                if !is_prime_u64(v) {
                    return Err(BasisError::NotPrime(p.clone()));
                }
            }
        }
        Self::build(primes, mults)
    }

    /// Convenience constructor from u64 primes.
    pub fn from_u64(primes: &[u64], mults: &[u32]) -> Result<Self, BasisError> {
        Self::new(primes.iter().map(|&p| BigUint::from(p)).collect(), mults.to_vec())
    }

    fn build(primes: Vec<BigUint>, mults: Vec<u32>) -> Result<Self, BasisError> {
        if primes.is_empty() || primes.len() != mults.len() {
            return Err(BasisError::Empty);
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BasisError::NotSorted);
        }
        if mults.iter().any(|&l| l == 0) {
            return Err(BasisError::ZeroMultiplicity);
        }
        let prime_powers: Vec<BigUint> =
            primes.iter().zip(&mults).map(|(p, &l)| p.pow(l)).collect();
        let modulus: BigUint = prime_powers.iter().product();
        let total_weight = mults.iter().map(|&l| u64::from(l)).sum();
        let crt_coeffs = prime_powers
            .iter()
            .map(|m| {
                let cofactor = &modulus / m;
                let inv = mod_inverse(&(&cofactor % m), m)
                    .expect("prime powers are pairwise coprime");
                (cofactor * inv) % &modulus
            })
            .collect();
        Ok(Self { primes, mults, prime_powers, modulus, total_weight, crt_coeffs })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn prime(&self, j: usize) -> &BigUint {
        &self.primes[j]
    }

    pub fn primes(&self) -> &[BigUint] {
        &self.primes
    }

    pub fn mult(&self, j: usize) -> u32 {
        self.mults[j]
    }

    pub fn mults(&self) -> &[u32] {
        &self.mults
    }

    /// `p_j^{lambda_j}`.
    pub fn prime_power(&self, j: usize) -> &BigUint {
        &self.prime_powers[j]
    }

    /// `N = prod p_j^{lambda_j}`.
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// `L = sum lambda_j`.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Index of `p` in the basis, if present.
    pub fn position(&self, p: &BigUint) -> Option<usize> {
        self.primes.binary_search(p).ok()
    }
}

/// `min(Val_p(x), lam)`, with `Val_p(0) = infinity` truncating to `lam`.
pub fn truncated_valuation(x: &BigInt, p: &BigUint, lam: u32) -> u32 {
    debug_assert!(lam >= 1);
    truncated_valuation_uint(x.magnitude(), p, lam)
}

/// Truncated valuation of an unsigned residue.
pub fn truncated_valuation_uint(x: &BigUint, p: &BigUint, lam: u32) -> u32 {
    if x.is_zero() {
        return lam;
    }
    if let (Some(mut x_small), Some(p_small)) = (x.to_u64(), p.to_u64()) {
        let mut v = 0;
        while v < lam && x_small % p_small == 0 {
            x_small /= p_small;
            v += 1;
        }
        return v;
    }
    let mut v = 0;
    let mut rest = x.clone();
    while v < lam {
        let (q, r) = rest.div_rem(p);
        if !r.is_zero() {
            break;
        }
        rest = q;
        v += 1;
    }
    v
}

/// Minimum truncated valuation over the entries of a nonempty vector.
pub fn vector_valuation(v: &[BigInt], p: &BigUint, lam: u32) -> u32 {
    assert!(!v.is_empty(), "vector valuation of an empty vector");
    v.iter().map(|x| truncated_valuation(x, p, lam)).min().unwrap()
}

/// Minimum truncated valuation over unsigned residues.
pub fn vector_valuation_uint(v: &[BigUint], p: &BigUint, lam: u32) -> u32 {
    assert!(!v.is_empty(), "vector valuation of an empty vector");
    v.iter().map(|x| truncated_valuation_uint(x, p, lam)).min().unwrap()
}

/// Unique `R` in `[0, N)` with `R = residues[j] mod p_j^{lambda_j}` for all j.
///
/// Panics if the residue count does not match the basis.
pub fn crt_interpolate(residues: &[BigUint], basis: &PrimePowerBasis) -> BigUint {
    assert_eq!(residues.len(), basis.len(), "residue/basis length mismatch");
    let mut acc = BigUint::zero();
    for (j, r) in residues.iter().enumerate() {
        acc += (r % basis.prime_power(j)) * &basis.crt_coeffs[j];
    }
    acc % basis.modulus()
}

/// CRT interpolation where each column has its own modulus (not necessarily
/// the full basis); moduli must be pairwise coprime.
pub fn crt_general(residues: &[BigUint], moduli: &[BigUint]) -> BigUint {
    assert_eq!(residues.len(), moduli.len());
    let n: BigUint = moduli.iter().product();
    if n.is_one() {
        return BigUint::zero();
    }
    let mut acc = BigUint::zero();
    for (r, m) in residues.iter().zip(moduli) {
        if m.is_one() {
            continue;
        }
        let cofactor = &n / m;
        let inv = mod_inverse(&(&cofactor % m), m).expect("moduli must be pairwise coprime");
        acc += (r % m) * cofactor * inv;
    }
    acc % n
}

/// Central remainder of `a` modulo `m`: the representative in
/// `[-ceil(m/2)+1, floor(m/2)]`. Ties at even `m` go to `+m/2`.
pub fn central_remainder(a: &BigInt, m: &BigUint) -> BigInt {
    assert!(!m.is_zero(), "modulus must be positive");
    let m = BigInt::from(m.clone());
    let mut r = a.mod_floor(&m);
    // keep r while 2r <= m, i.e. r <= floor(m/2)
    if &r * 2 > m {
        r -= &m;
    }
    r
}

/// Inverse of `a` modulo `m`, in `[0, m)`; `None` when `gcd(a, m) > 1`.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    assert!(!m.is_zero(), "modulus must be positive");
    if m.is_one() {
        return Some(BigUint::zero());
    }
    if let (Some(a_small), Some(m_small)) = (a.to_u64(), m.to_u64()) {
        return inverse_u64(a_small % m_small, m_small).map(BigUint::from);
    }
    let a = BigInt::from(a % m);
    let m_int = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m_int);
    if !ext.gcd.is_one() {
        return None;
    }
    Some(ext.x.mod_floor(&m_int).to_biguint().unwrap())
}

fn inverse_u64(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin, valid for all inputs below 2^64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // this witness set is deterministic below 2^64
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// First `n` primes greater than or equal to `floor`. Harness helper.
pub fn first_primes_from(floor: u64, n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut candidate = floor.max(2);
    while out.len() < n {
        if is_prime_u64(candidate) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Trial-division factorization; adequate for the small locators used in
/// counting formulas and tests.
pub fn factorize(n: &BigUint) -> Vec<(BigUint, u32)> {
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut p = BigUint::from(2u32);
    while &p * &p <= n {
        let mut e = 0u32;
        loop {
            let (q, r) = n.div_rem(&p);
            if r.is_zero() {
                n = q;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            out.push((p.clone(), e));
        }
        p += 1u32;
    }
    if !n.is_one() {
        out.push((n, 1));
    }
    out
}

/// log2 of a positive big integer, good to double precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    // take the top 64 bits as mantissa
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap();
    (top as f64).log2() + shift as f64
}

/// log2 of the positive rational `num/den`.
pub fn log2_ratio(num: &BigUint, den: &BigUint) -> f64 {
    log2_biguint(num) - log2_biguint(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use proptest::prelude::*;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn ubig(x: u64) -> BigUint {
        BigUint::from(x)
    }

    /// Trial-division oracle for valuations, independent of the fast path.
    fn valuation_oracle(mut x: u64, p: u64) -> u32 {
        assert!(x != 0);
        let mut v = 0;
        while x % p == 0 {
            x /= p;
            v += 1;
        }
        v
    }

    #[test]
    fn truncated_valuation_examples() {
        assert_eq!(valuation_oracle(12, 2), 2);
        assert_eq!(truncated_valuation(&big(12), &ubig(2), 3), 2);
        assert_eq!(truncated_valuation(&big(0), &ubig(5), 4), 4);
        assert_eq!(truncated_valuation(&big(7), &ubig(3), 5), 0);
        // truncation kicks in
        assert_eq!(truncated_valuation(&big(16), &ubig(2), 3), 3);
        assert_eq!(truncated_valuation(&big(-12), &ubig(2), 3), 2);
    }

    #[test]
    fn vector_valuation_examples() {
        assert_eq!(valuation_oracle(12, 2).min(valuation_oracle(2, 2)), 1);
        assert_eq!(vector_valuation(&[big(12), big(2)], &ubig(2), 3), 1);
        assert_eq!(vector_valuation(&[big(0), big(0)], &ubig(2), 2), 2);
        assert_eq!(vector_valuation(&[big(3)], &ubig(3), 1), 1);
    }

    #[test]
    #[should_panic]
    fn vector_valuation_rejects_empty() {
        vector_valuation(&[], &ubig(2), 1);
    }

    #[test]
    fn crt_examples() {
        let basis = PrimePowerBasis::from_u64(&[2, 3, 5], &[1, 1, 1]).unwrap();
        // exhaustive oracle over [0, 30)
        let expected = (0u64..30)
            .find(|&r| r % 2 == 1 && r % 3 == 1 && r % 5 == 3)
            .unwrap();
        assert_eq!(expected, 13);
        assert_eq!(crt_interpolate(&[ubig(1), ubig(1), ubig(3)], &basis), ubig(13));
        assert_eq!(
            crt_interpolate(&[ubig(0), ubig(0), ubig(0)], &basis),
            BigUint::zero()
        );
        let single = PrimePowerBasis::from_u64(&[7], &[1]).unwrap();
        assert_eq!(crt_interpolate(&[ubig(4)], &single), ubig(4));
    }

    #[test]
    fn crt_bijection_exhaustive_small() {
        // round-trip reduce∘interpolate = identity for assorted bases with N <= 10^4
        for (primes, mults) in [
            (vec![2u64, 3, 5], vec![2u32, 2, 1]),
            (vec![2, 3, 5, 7], vec![1, 1, 1, 1]),
            (vec![2, 11], vec![3, 2]),
            (vec![3, 7], vec![4, 1]),
        ] {
            let basis = PrimePowerBasis::from_u64(&primes, &mults).unwrap();
            let n = basis.modulus().to_u64().unwrap();
            assert!(n <= 10_000);
            for r in 0..n {
                let residues: Vec<BigUint> =
                    (0..basis.len()).map(|j| ubig(r) % basis.prime_power(j)).collect();
                assert_eq!(crt_interpolate(&residues, &basis), ubig(r));
            }
        }
    }

    #[test]
    fn central_remainder_examples() {
        // oracle: unique representative in the stated interval
        let oracle = |a: i64, m: i64| -> i64 {
            let lo = -(m + 1) / 2 + 1;
            let hi = m / 2;
            (lo..=hi).find(|r| (r - a).rem_euclid(m) == 0).unwrap()
        };
        assert_eq!(oracle(4, 5), -1);
        assert_eq!(central_remainder(&big(4), &ubig(5)), big(-1));
        assert_eq!(central_remainder(&big(0), &ubig(17)), big(0));
        assert_eq!(oracle(3, 6), 3);
        assert_eq!(central_remainder(&big(3), &ubig(6)), big(3));
        // tie at even modulus goes positive
        assert_eq!(central_remainder(&big(-3), &ubig(6)), big(3));
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(&ubig(2), &ubig(5)), Some(ubig(3)));
        assert_eq!(mod_inverse(&ubig(1), &ubig(97)), Some(ubig(1)));
        assert_eq!(mod_inverse(&ubig(2), &ubig(4)), None);
    }

    #[test]
    fn primality_small() {
        let known = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
        for n in 0..50u64 {
            assert_eq!(is_prime_u64(n), known.contains(&n), "n={n}");
        }
        assert!(is_prime_u64((1u64 << 61) - 1));
        assert!(!is_prime_u64(u64::MAX));
    }

    #[test]
    fn basis_validation() {
        assert!(PrimePowerBasis::from_u64(&[2, 3, 5], &[1, 2, 1]).is_ok());
        assert_eq!(
            PrimePowerBasis::from_u64(&[3, 2], &[1, 1]),
            Err(BasisError::NotSorted)
        );
        assert_eq!(
            PrimePowerBasis::from_u64(&[4], &[1]),
            Err(BasisError::NotPrime(ubig(4)))
        );
        assert_eq!(
            PrimePowerBasis::from_u64(&[2], &[0]),
            Err(BasisError::ZeroMultiplicity)
        );
        let basis = PrimePowerBasis::from_u64(&[2, 3, 5], &[2, 1, 1]).unwrap();
        assert_eq!(basis.modulus(), &ubig(60));
        assert_eq!(basis.total_weight(), 4);
    }

    #[test]
    fn first_primes_helper() {
        assert_eq!(first_primes_from(2, 5), vec![2, 3, 5, 7, 11]);
        assert_eq!(first_primes_from(10, 3), vec![11, 13, 17]);
    }

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(&ubig(1)), vec![]);
        assert_eq!(factorize(&ubig(12600)), vec![
            (ubig(2), 3),
            (ubig(3), 2),
            (ubig(5), 2),
            (ubig(7), 1)
        ]);
    }

    #[test]
    fn log2_matches_f64() {
        for x in [1u64, 2, 3, 30, 420, 1 << 40] {
            assert!((log2_biguint(&ubig(x)) - (x as f64).log2()).abs() < 1e-12);
        }
        // a ~130 bit value
        let x = BigUint::from(3u32).pow(82);
        assert!((log2_biguint(&x) - 82.0 * 3f64.log2()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn prop_valuation_divides(x in 1i64..100_000, pidx in 0usize..4, lam in 1u32..6) {
            let p = [2u64, 3, 5, 7][pidx];
            let v = truncated_valuation(&big(x), &ubig(p), lam);
            let pv = big(p as i64).pow(v);
            prop_assert!((big(x) % &pv).is_zero());
            if v < lam {
                let pv1 = big(p as i64).pow(v + 1);
                prop_assert!(!(big(x) % pv1).is_zero());
            }
        }

        #[test]
        fn prop_central_remainder_congruent_and_minimal(a in -10_000i64..10_000, m in 1u64..500) {
            let r = central_remainder(&big(a), &ubig(m));
            prop_assert!(((&r - big(a)) % big(m as i64)).is_zero());
            // minimal absolute value among representatives
            let alt_lo = &r - big(m as i64);
            let alt_hi = &r + big(m as i64);
            prop_assert!(r.abs() <= alt_lo.abs());
            prop_assert!(r.abs() <= alt_hi.abs());
            // interval shape
            prop_assert!(r <= big((m / 2) as i64));
            prop_assert!(r >= big(-(((m + 1) / 2) as i64) + 1));
        }

        #[test]
        fn prop_mod_inverse(a in 1u64..10_000, m in 2u64..10_000) {
            match mod_inverse(&ubig(a), &ubig(m)) {
                Some(b) => prop_assert!(((ubig(a) * b) % ubig(m)).is_one()),
                None => prop_assert!(ubig(a).gcd(&ubig(m)) > BigUint::one()),
            }
        }
    }
}
