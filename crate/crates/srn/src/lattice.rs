//! Decoding lattices and exact short-vector computation.
//!
//! The decoders work on the `(l+1)`-dimensional integer lattice whose rows
//! are `(1, R_1, ..., R_l)` and `N * e_i` (or the reduced bad-prime variant),
//! scaled so that the solution-set size constraints become max-norm
//! constraints. Short vectors come from an all-integer LLL (delta = 3/4),
//! optionally refined to a true max-norm shortest vector by exhaustive
//! coefficient enumeration in small dimension.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::code::{CodeParams, MultiPrecisionWord, ReceivedWord};
use crate::numtheory::crt_general;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeError {
    DegenerateBasis,
    NotLatticeMember,
    /// The enumeration search box exceeds the configured node budget.
    EnumBoundExceeded,
    NotReduced,
    BadScale,
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::DegenerateBasis => write!(f, "basis rows are linearly dependent"),
            LatticeError::NotLatticeMember => write!(f, "vector is not in the lattice"),
            LatticeError::EnumBoundExceeded => write!(f, "enumeration budget exceeded"),
            LatticeError::NotReduced => write!(f, "received word must be reduced"),
            LatticeError::BadScale => write!(f, "scaling bounds must be positive"),
        }
    }
}

impl std::error::Error for LatticeError {}

/// Integer row basis of the decoding lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    rows: Vec<Vec<BigInt>>,
}

impl LatticeBasis {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Self {
        assert!(!rows.is_empty());
        let dim = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must have equal length");
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }
}

/// A candidate solution `(phi, psi_1, ..., psi_l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeVector {
    pub coords: Vec<BigInt>,
}

impl LatticeVector {
    pub fn phi(&self) -> &BigInt {
        &self.coords[0]
    }

    pub fn psis(&self) -> &[BigInt] {
        &self.coords[1..]
    }

    pub fn inf_norm(&self) -> BigUint {
        self.coords.iter().map(|c| c.magnitude().clone()).max().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

/// Lattice of the plain key equations: row 0 is `(1, R_1, ..., R_l)`,
/// row i is `N * e_{i+1}`.
pub fn build_lattice(word: &ReceivedWord, params: &CodeParams) -> LatticeBasis {
    let ell = word.ell();
    let n = BigInt::from(params.basis().modulus().clone());
    let mut rows = Vec::with_capacity(ell + 1);
    let mut row0 = Vec::with_capacity(ell + 1);
    row0.push(BigInt::one());
    for i in 0..ell {
        row0.push(BigInt::from(word.interpolant(i).clone()));
    }
    rows.push(row0);
    for i in 0..ell {
        let mut row = vec![BigInt::zero(); ell + 1];
        row[i + 1] = n.clone();
        rows.push(row);
    }
    LatticeBasis::new(rows)
}

/// Lattice of the reduced bad-prime key equations. Returns the basis
/// together with `N_inf = prod p_j^{rho_j}` and the shifted interpolants
/// `R'_i`. The word must be reduced.
pub fn build_bad_prime_lattice(
    word: &MultiPrecisionWord,
    params: &CodeParams,
) -> Result<(LatticeBasis, BigUint, Vec<BigUint>), LatticeError> {
    let basis = params.basis();
    if !word.is_reduced(basis) {
        return Err(LatticeError::NotReduced);
    }
    let ell = word.ell();
    let n_inf: BigUint = (0..basis.len()).map(|j| basis.prime(j).pow(word.valuation(j))).product();
    let n_reduced = basis.modulus() / &n_inf;

    // CRT_{N/N_inf}(N_inf / p_j^{rho_j}) over the column moduli p^{lambda - rho}
    let moduli: Vec<BigUint> = (0..basis.len())
        .map(|j| basis.prime(j).pow(basis.mult(j) - word.valuation(j)))
        .collect();
    let shift_residues: Vec<BigUint> = (0..basis.len())
        .map(|j| (&n_inf / basis.prime(j).pow(word.valuation(j))) % &moduli[j])
        .collect();
    let shift = crt_general(&shift_residues, &moduli);

    let interpolants = word.interpolants(basis);
    let shifted: Vec<BigUint> = interpolants
        .iter()
        .map(|r| if n_reduced.is_one() { BigUint::zero() } else { (r * &shift) % &n_reduced })
        .collect();

    let mut rows = Vec::with_capacity(ell + 1);
    let mut row0 = Vec::with_capacity(ell + 1);
    row0.push(BigInt::from(n_inf.clone()));
    for r in &shifted {
        row0.push(BigInt::from(r.clone()));
    }
    rows.push(row0);
    let n_red = BigInt::from(n_reduced);
    for i in 0..ell {
        let mut row = vec![BigInt::zero(); ell + 1];
        row[i + 1] = n_red.clone();
        rows.push(row);
    }
    Ok((LatticeBasis::new(rows), n_inf, shifted))
}

/// `(v_0, ..., v_l) -> (v_0 F, v_1 G, ..., v_l G)` on exact rationals.
pub fn scale(
    v: &[BigRational],
    f_bound: &BigUint,
    g_bound: &BigUint,
) -> Result<Vec<BigRational>, LatticeError> {
    if f_bound.is_zero() || g_bound.is_zero() {
        return Err(LatticeError::BadScale);
    }
    let f = BigRational::from_integer(BigInt::from(f_bound.clone()));
    let g = BigRational::from_integer(BigInt::from(g_bound.clone()));
    Ok(v.iter().enumerate().map(|(i, x)| if i == 0 { x * &f } else { x * &g }).collect())
}

/// Exact inverse of [`scale`].
pub fn unscale(
    v: &[BigRational],
    f_bound: &BigUint,
    g_bound: &BigUint,
) -> Result<Vec<BigRational>, LatticeError> {
    if f_bound.is_zero() || g_bound.is_zero() {
        return Err(LatticeError::BadScale);
    }
    let f = BigRational::from_integer(BigInt::from(f_bound.clone()));
    let g = BigRational::from_integer(BigInt::from(g_bound.clone()));
    Ok(v.iter().enumerate().map(|(i, x)| if i == 0 { x / &f } else { x / &g }).collect())
}

/// Column-scaled integer basis: column 0 times F, the rest times G.
pub fn scale_basis(basis: &LatticeBasis, f_bound: &BigUint, g_bound: &BigUint) -> LatticeBasis {
    let f = BigInt::from(f_bound.clone());
    let g = BigInt::from(g_bound.clone());
    let rows = basis
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(i, x)| if i == 0 { x * &f } else { x * &g })
                .collect()
        })
        .collect();
    LatticeBasis::new(rows)
}

/// Exact unscaling of an integer vector of the scaled lattice back to the
/// original lattice (entries are guaranteed multiples of F resp. G).
pub fn unscale_vector(
    v: &[BigInt],
    f_bound: &BigUint,
    g_bound: &BigUint,
) -> Vec<BigInt> {
    let f = BigInt::from(f_bound.clone());
    let g = BigInt::from(g_bound.clone());
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let d = if i == 0 { &f } else { &g };
            let (q, r) = x.div_rem(d);
            debug_assert!(r.is_zero(), "scaled entry not divisible");
            q
        })
        .collect()
}

/// Normalize sign: first coordinate nonnegative; if it is zero, the leading
/// nonzero coordinate is made positive.
pub fn normalize_sign(mut coords: Vec<BigInt>) -> Vec<BigInt> {
    if let Some(lead) = coords.iter().find(|c| !c.is_zero()) {
        if lead.is_negative() {
            for c in &mut coords {
                *c = -c.clone();
            }
        }
    }
    coords
}

// ---------------------------------------------------------------------------
// All-integer LLL, delta = 3/4 (Gram-based; no rational arithmetic).
// ---------------------------------------------------------------------------

struct LllState {
    basis: Vec<Vec<BigInt>>,
    /// d[k] = Gram determinant of the first k vectors; d[0] = 1.
    d: Vec<BigInt>,
    /// lambda[i][j] = mu_{i,j} * d[j+1] (integers), j < i.
    lambda: Vec<Vec<BigInt>>,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LllState {
    fn init(rows: Vec<Vec<BigInt>>) -> Result<Self, LatticeError> {
        let n = rows.len();
        let mut d = vec![BigInt::one(); n + 1];
        let mut lambda = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut u = dot(&rows[i], &rows[j]);
                for k in 0..j {
                    u = (&d[k + 1] * u - &lambda[i][k] * &lambda[j][k]) / &d[k];
                }
                if j < i {
                    lambda[i][j] = u;
                } else {
                    if u.is_zero() || u.is_negative() {
                        return Err(LatticeError::DegenerateBasis);
                    }
                    d[i + 1] = u;
                }
            }
        }
        Ok(Self { basis: rows, d, lambda })
    }

    fn size_reduce(&mut self, k: usize, l: usize) {
        let two_lam: BigInt = &self.lambda[k][l] * 2;
        if two_lam.magnitude() <= self.d[l + 1].magnitude() {
            return;
        }
        // q = nearest integer to lambda / d
        let q = nearest_div(&self.lambda[k][l], &self.d[l + 1]);
        let (head, tail) = self.basis.split_at_mut(k);
        for (x, y) in tail[0].iter_mut().zip(&head[l]) {
            *x -= &q * y;
        }
        let sub = &q * &self.d[l + 1];
        self.lambda[k][l] -= sub;
        for i in 0..l {
            let sub = &q * &self.lambda[l][i];
            self.lambda[k][i] -= sub;
        }
    }

    fn swap(&mut self, k: usize) {
        self.basis.swap(k, k - 1);
        for j in 0..k.saturating_sub(1) {
            let tmp = self.lambda[k][j].clone();
            self.lambda[k][j] = self.lambda[k - 1][j].clone();
            self.lambda[k - 1][j] = tmp;
        }
        let lam = self.lambda[k][k - 1].clone();
        let b = (&self.d[k - 1] * &self.d[k + 1] + &lam * &lam) / &self.d[k];
        for i in (k + 1)..self.basis.len() {
            let t = self.lambda[i][k].clone();
            self.lambda[i][k] = (&self.d[k + 1] * &self.lambda[i][k - 1] - &lam * &t) / &self.d[k];
            self.lambda[i][k - 1] = (&b * &t + &lam * &self.lambda[i][k]) / &self.d[k + 1];
        }
        self.d[k] = b;
    }

    fn run(&mut self) {
        let n = self.basis.len();
        let mut k = 1usize;
        while k < n {
            self.size_reduce(k, k - 1);
            // Lovasz condition for delta = 3/4:
            //   d[k+1] d[k-1] >= (3/4) d[k]^2 - lambda^2
            let lhs: BigInt = (&self.d[k + 1] * &self.d[k - 1] + &self.lambda[k][k - 1] * &self.lambda[k][k - 1]) * 4;
            let rhs: BigInt = &self.d[k] * &self.d[k] * 3;
            if lhs < rhs {
                self.swap(k);
                k = k.max(2) - 1;
            } else {
                for l in (0..k.saturating_sub(1)).rev() {
                    self.size_reduce(k, l);
                }
                k += 1;
            }
        }
    }
}

/// Nearest integer to `a / b` for positive `b` (half rounds down in absolute
/// value toward the even convention used by size reduction; any consistent
/// tie rule works).
fn nearest_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    let two_a: BigInt = a * 2;
    let num = two_a + b;
    let den: BigInt = b * 2;
    num.div_floor(&den)
}

/// LLL-reduce the rows (delta = 3/4) with exact integer arithmetic.
pub fn lll_reduce(basis: &LatticeBasis) -> Result<LatticeBasis, LatticeError> {
    let mut state = LllState::init(basis.rows.clone())?;
    state.run();
    Ok(LatticeBasis::new(state.basis))
}

/// Max-norm approximation factor guaranteed by LLL (delta = 3/4) in
/// dimension `dim`: `sqrt(dim) * 2^{(dim-1)/2}`.
pub fn lll_beta(dim: usize) -> f64 {
    (dim as f64).sqrt() * 2f64.powf((dim as f64 - 1.0) / 2.0)
}

/// Approximate max-norm shortest vector: LLL-reduce and return the reduced
/// basis row of least max-norm, sign-normalized, together with the
/// guaranteed approximation factor.
pub fn approx_svp_inf(basis: &LatticeBasis) -> Result<(LatticeVector, f64), LatticeError> {
    let reduced = lll_reduce(basis)?;
    let best = reduced
        .rows
        .iter()
        .min_by_key(|r| r.iter().map(|c| c.magnitude().clone()).max().unwrap())
        .unwrap()
        .clone();
    let coords = normalize_sign(best);
    Ok((LatticeVector { coords }, lll_beta(basis.dim())))
}

/// Default enumeration budget for [`exact_svp_inf`].
pub const DEFAULT_ENUM_BOUND: u64 = 1_000_000;

/// True max-norm shortest nonzero vector by exhaustive coefficient
/// enumeration over a box derived from the LLL-reduced basis and the
/// Minkowski bound. Intended for small dimension (decoding uses l+1 <= 5).
pub fn exact_svp_inf(
    basis: &LatticeBasis,
    enum_bound: u64,
) -> Result<LatticeVector, LatticeError> {
    let reduced = lll_reduce(basis)?;
    let n = reduced.num_rows();
    debug_assert_eq!(n, reduced.dim());

    // search radius: best LLL row, cheap to compute and >= lambda_inf;
    // the Minkowski bound |det|^{1/n} (rounded up) can only tighten it
    let mut radius = reduced
        .rows
        .iter()
        .map(|r| r.iter().map(|c| c.magnitude().clone()).max().unwrap())
        .min()
        .unwrap();
    let det = det_exact(&reduced)?;
    let minkowski = det.magnitude().nth_root(n as u32) + 1u32;
    if minkowski < radius {
        radius = minkowski;
    }

    // coefficient box: for v = x B with |v|_inf <= radius,
    // |x_i| <= radius * sum_j |(B^{-1})_{j,i}|
    let inv = invert_exact(&reduced)?;
    let radius_int = BigInt::from(radius.clone());
    let mut box_bounds = Vec::with_capacity(n);
    let mut nodes: u64 = 1;
    for i in 0..n {
        let col_abs: BigRational =
            (0..n).map(|j| inv[j][i].abs()).sum();
        let bound = (col_abs * BigRational::from_integer(radius_int.clone())).floor();
        let bound = bound.to_integer().to_u64().ok_or(LatticeError::EnumBoundExceeded)?;
        nodes = nodes
            .checked_mul(2 * bound + 1)
            .filter(|&v| v <= enum_bound)
            .ok_or(LatticeError::EnumBoundExceeded)?;
        box_bounds.push(bound as i64);
    }

    let mut best: Option<Vec<BigInt>> = None;
    let mut best_norm = radius + 1u32;
    let acc = vec![BigInt::zero(); n];
    enumerate_box(&reduced, &box_bounds, acc, true, 0, &mut |v: &[BigInt]| {
        if v.iter().all(|c| c.is_zero()) {
            return;
        }
        let norm = v.iter().map(|c| c.magnitude().clone()).max().unwrap();
        let candidate = normalize_sign(v.to_vec());
        match norm.cmp(&best_norm) {
            std::cmp::Ordering::Less => {
                best_norm = norm;
                best = Some(candidate);
            }
            std::cmp::Ordering::Equal => {
                // deterministic tie-break: lexicographically smallest
                if let Some(b) = &best {
                    if candidate < *b {
                        best = Some(candidate);
                    }
                }
            }
            std::cmp::Ordering::Greater => {}
        }
    });

    let coords = best.expect("box contains a shortest vector");
    Ok(LatticeVector { coords })
}

/// Walk coefficient space depth-first, carrying the partial sum; +/- v are
/// the same candidate after sign normalization, so the leading nonzero
/// coefficient is kept nonnegative.
fn enumerate_box(
    basis: &LatticeBasis,
    bounds: &[i64],
    acc: Vec<BigInt>,
    all_zero: bool,
    depth: usize,
    sink: &mut impl FnMut(&[BigInt]),
) {
    if depth == bounds.len() {
        sink(&acc);
        return;
    }
    let row = basis.row(depth);
    let lo = if all_zero { 0 } else { -bounds[depth] };
    let mut shifted: Vec<BigInt> = acc
        .iter()
        .zip(row)
        .map(|(x, y)| x + BigInt::from(lo) * y)
        .collect();
    let mut c = lo;
    loop {
        enumerate_box(basis, bounds, shifted.clone(), all_zero && c == 0, depth + 1, sink);
        c += 1;
        if c > bounds[depth] {
            break;
        }
        for (x, y) in shifted.iter_mut().zip(row) {
            *x += y;
        }
    }
}

// ---------------------------------------------------------------------------
// Exact rational linear algebra (coordinates, membership, inverse, det).
// ---------------------------------------------------------------------------

fn to_rational_matrix(basis: &LatticeBasis) -> Vec<Vec<BigRational>> {
    basis
        .rows
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect()
}

/// Coordinates of `v` in the given square row basis, as exact rationals.
pub fn coordinates(
    basis: &LatticeBasis,
    v: &[BigInt],
) -> Result<Vec<BigRational>, LatticeError> {
    let n = basis.num_rows();
    assert_eq!(n, basis.dim());
    assert_eq!(v.len(), n);
    // solve x * B = v  <=>  B^T x^T = v^T
    let mut m = vec![vec![BigRational::zero(); n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = BigRational::from_integer(basis.rows[j][i].clone());
        }
        m[i][n] = BigRational::from_integer(v[i].clone());
    }
    gaussian_solve(m).ok_or(LatticeError::DegenerateBasis)
}

fn gaussian_solve(mut m: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for j in col..=n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in col..=n {
                    m[r][j] = &m[r][j] - &factor * &m[col][j];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// Exact determinant of a square basis (fraction-free elimination).
pub fn det_exact(basis: &LatticeBasis) -> Result<BigInt, LatticeError> {
    let n = basis.num_rows();
    assert_eq!(n, basis.dim());
    let mut m = to_rational_matrix(basis);
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(p) => p,
            None => return Ok(BigInt::zero()),
        };
        if pivot != col {
            m.swap(col, pivot);
            det = -det;
        }
        det *= m[col][col].clone();
        let inv = m[col][col].recip();
        for j in col..n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in (col + 1)..n {
            if !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in col..n {
                    m[r][j] = &m[r][j] - &factor * &m[col][j];
                }
            }
        }
    }
    debug_assert!(det.is_integer());
    Ok(det.to_integer())
}

/// Exact inverse of a square basis matrix.
fn invert_exact(basis: &LatticeBasis) -> Result<Vec<Vec<BigRational>>, LatticeError> {
    let n = basis.num_rows();
    let mut m: Vec<Vec<BigRational>> = to_rational_matrix(basis)
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.extend((0..n).map(|j| {
                if i == j { BigRational::one() } else { BigRational::zero() }
            }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or(LatticeError::DegenerateBasis)?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for j in 0..2 * n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in 0..2 * n {
                    m[r][j] = &m[r][j] - &factor * &m[col][j];
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Is `v` a lattice member (integer coordinates in the basis)?
pub fn is_member(basis: &LatticeBasis, v: &[BigInt]) -> Result<bool, LatticeError> {
    Ok(coordinates(basis, v)?.iter().all(|c| c.is_integer()))
}

/// A vector is L-reduced when its (integer) coordinates in the basis have
/// gcd 1, i.e. it is not a nontrivial integer multiple of a lattice vector.
pub fn is_l_reduced(v: &LatticeVector, basis: &LatticeBasis) -> Result<bool, LatticeError> {
    let coords = coordinates(basis, &v.coords)?;
    if coords.iter().any(|c| !c.is_integer()) {
        return Err(LatticeError::NotLatticeMember);
    }
    let mut g = BigUint::zero();
    for c in &coords {
        g = g.gcd(c.to_integer().magnitude());
    }
    Ok(g.is_one())
}
