//! Fault-tolerant distributed exact linear solving.
//!
//! A coordinator picks prime-power moduli and hands each one to a worker.
//! Workers solve the system modulo their `p^lambda` by Cramer determinants
//! and send back either a plain residue column or a (valuation, column)
//! pair when the determinant is divisible by the prime. Some workers may
//! be faulty; the coordinator reconstructs the exact rational solution
//! with the code decoders and verifies `A x = b` exactly before reporting
//! success.
//!
//! Workers run in-process behind a message-passing interface: the request
//! is the system plus one modulus, the response a [`WorkerReport`]. A
//! networked deployment can replace [`run_workers`] without touching the
//! coordinator.

use std::fmt;
use std::sync::mpsc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::code::{CodeParams, FractionVector, MultiPrecisionWord, ReceivedWord};
use crate::decoder::{decode, decode_bad_primes, DecodeError, DecoderConfig, SvpMode};
use crate::errmodel::{uniform_below, SampleStream};
use crate::lattice::{det_exact, LatticeBasis};
use crate::numtheory::{
    first_primes_from, log2_biguint, mod_inverse, truncated_valuation_uint, PrimePowerBasis,
};
use crate::wire::{CodeParamsDto, FractionVectorDto};

#[derive(Debug)]
pub enum DistSolveError {
    SingularSystem,
    /// The Cramer vector shares a common factor; the bad-prime demo
    /// requires it jointly reduced.
    CramerNotReduced,
    /// A fault-free worker hit a prime dividing the determinant while the
    /// coordinator runs in plain mode.
    BadPrimeInPlainMode(usize),
    Decode(DecodeError),
    /// The decoded vector does not solve the system (possible only when
    /// the fault budget was exceeded).
    VerificationFailed,
    Config(String),
}

impl fmt::Display for DistSolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSolveError::SingularSystem => write!(f, "system matrix is singular"),
            DistSolveError::CramerNotReduced => {
                write!(f, "Cramer vector is not jointly reduced; bad-prime mode cannot encode it")
            }
            DistSolveError::BadPrimeInPlainMode(j) => {
                write!(f, "modulus {j} divides the determinant; rerun in bad-prime mode")
            }
            DistSolveError::Decode(e) => write!(f, "reconstruction failed: {e}"),
            DistSolveError::VerificationFailed => {
                write!(f, "decoded vector does not solve the system")
            }
            DistSolveError::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for DistSolveError {}

impl From<DecodeError> for DistSolveError {
    fn from(e: DecodeError) -> Self {
        DistSolveError::Decode(e)
    }
}

/// A square integer system `A x = b` with nonzero determinant, together
/// with its Cramer determinants (exact, computed at construction).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    matrix: Vec<Vec<BigInt>>,
    rhs: Vec<BigInt>,
    det: BigInt,
    cramer: Vec<BigInt>,
}

impl LinearSystem {
    pub fn new(matrix: Vec<Vec<BigInt>>, rhs: Vec<BigInt>) -> Result<Self, DistSolveError> {
        let m = matrix.len();
        if m == 0 || rhs.len() != m || matrix.iter().any(|r| r.len() != m) {
            return Err(DistSolveError::Config("matrix must be square and match b".into()));
        }
        let det = det_exact(&LatticeBasis::new(matrix.clone()))
            .map_err(|_| DistSolveError::SingularSystem)?;
        if det.is_zero() {
            return Err(DistSolveError::SingularSystem);
        }
        let cramer = (0..m)
            .map(|i| {
                let mut replaced = matrix.clone();
                for (row, b) in replaced.iter_mut().zip(&rhs) {
                    row[i] = b.clone();
                }
                det_exact(&LatticeBasis::new(replaced)).expect("square matrix")
            })
            .collect();
        Ok(Self { matrix, rhs, det, cramer })
    }

    pub fn from_i64(matrix: &[&[i64]], rhs: &[i64]) -> Result<Self, DistSolveError> {
        Self::new(
            matrix.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
            rhs.iter().map(|&x| BigInt::from(x)).collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    /// `gcd(det A_1, ..., det A_m, det A) = 1`?
    pub fn is_cramer_reduced(&self) -> bool {
        let mut g = self.det.magnitude().clone();
        for c in &self.cramer {
            g = g.gcd(c.magnitude());
        }
        g.is_one()
    }

    /// The exact solution as a reduced fraction vector with positive
    /// denominator.
    pub fn exact_solution(&self) -> FractionVector {
        let mut g = self.det.clone();
        let mut nums = self.cramer.clone();
        if g.is_negative() {
            g = -g;
            for n in &mut nums {
                *n = -n.clone();
            }
        }
        let mut common = g.magnitude().clone();
        for n in &nums {
            common = common.gcd(n.magnitude());
        }
        let common = BigInt::from(common);
        FractionVector::new(
            nums.into_iter().map(|n| n / &common).collect(),
            (g / common).to_biguint().unwrap(),
        )
        .expect("division by the joint gcd reduces the vector")
    }

    fn verify(&self, solution: &[BigRational]) -> bool {
        self.matrix.iter().zip(&self.rhs).all(|(row, b)| {
            let lhs: BigRational = row
                .iter()
                .zip(solution)
                .map(|(a, x)| BigRational::from_integer(a.clone()) * x)
                .sum();
            lhs == BigRational::from_integer(b.clone())
        })
    }
}

/// Request sent to one worker: the system and its assigned modulus.
#[derive(Debug, Clone)]
pub struct WorkRequest {
    pub system: LinearSystem,
    pub modulus_index: usize,
    pub prime: BigUint,
    pub mult: u32,
}

/// What a worker sends back for its modulus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkerPayload {
    /// `x mod p^lambda` when the determinant is a unit at this prime.
    Plain { column: Vec<String> },
    /// `(val_p(det), shifted residues)` otherwise.
    MultiPrecision { rho: u32, column: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkerReport {
    pub worker_id: usize,
    pub modulus_index: usize,
    pub payload: WorkerPayload,
    /// Set by the fault injector; the coordinator never reads it.
    pub faulty: bool,
}

fn to_residue(x: &BigInt, m: &BigUint) -> BigUint {
    x.mod_floor(&BigInt::from(m.clone())).to_biguint().unwrap()
}

/// Solve the system modulo `p^lam`: Cramer determinants by exact
/// elimination on the reduced matrices, then either a plain column or the
/// (valuation, shifted column) pair.
pub fn worker_solve(sys: &LinearSystem, p: &BigUint, lam: u32) -> WorkerPayload {
    let m = p.pow(lam);
    let reduce_matrix = |mat: &Vec<Vec<BigInt>>| -> Vec<Vec<BigInt>> {
        mat.iter()
            .map(|row| row.iter().map(|x| BigInt::from(to_residue(x, &m))).collect())
            .collect()
    };
    let det_mod = |mat: Vec<Vec<BigInt>>| -> BigUint {
        let d = det_exact(&LatticeBasis::new(mat)).expect("square matrix");
        to_residue(&d, &m)
    };
    let d = det_mod(reduce_matrix(&sys.matrix));
    let numerators: Vec<BigUint> = (0..sys.size())
        .map(|i| {
            let mut replaced = sys.matrix.clone();
            for (row, b) in replaced.iter_mut().zip(&sys.rhs) {
                row[i] = b.clone();
            }
            det_mod(reduce_matrix(&replaced))
        })
        .collect();

    let rho = truncated_valuation_uint(&d, p, lam);
    if rho == 0 {
        let inv = mod_inverse(&d, &m).expect("unit determinant");
        let column = numerators.iter().map(|n| ((n * &inv) % &m).to_string()).collect();
        return WorkerPayload::Plain { column };
    }
    if rho == lam {
        // convention column for a fully vanishing determinant
        return WorkerPayload::MultiPrecision {
            rho,
            column: vec![BigUint::one().to_string(); sys.size()],
        };
    }
    let m_red = p.pow(lam - rho);
    let unit = &d / p.pow(rho);
    let inv = mod_inverse(&(&unit % &m_red), &m_red).expect("unit part is invertible");
    let column =
        numerators.iter().map(|n| (((n % &m_red) * &inv) % &m_red).to_string()).collect();
    WorkerPayload::MultiPrecision { rho, column }
}

/// Run one worker per modulus as independent tasks over channels and
/// collect all reports (ordered by modulus index).
pub fn run_workers(sys: &LinearSystem, basis: &PrimePowerBasis) -> Vec<WorkerReport> {
    let (tx, rx) = mpsc::channel::<WorkerReport>();
    std::thread::scope(|scope| {
        for j in 0..basis.len() {
            let tx = tx.clone();
            let request = WorkRequest {
                system: sys.clone(),
                modulus_index: j,
                prime: basis.prime(j).clone(),
                mult: basis.mult(j),
            };
            scope.spawn(move || {
                let payload = worker_solve(&request.system, &request.prime, request.mult);
                tx.send(WorkerReport {
                    worker_id: request.modulus_index,
                    modulus_index: request.modulus_index,
                    payload,
                    faulty: false,
                })
                .expect("coordinator is listening");
            });
        }
        drop(tx);
        let mut reports: Vec<WorkerReport> = rx.iter().collect();
        reports.sort_by_key(|r| r.modulus_index);
        reports
    })
}

/// How a faulty worker corrupts its payload.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FaultMode {
    /// Replace the residue column by a uniformly random offset of the
    /// prescribed error valuation.
    Random { valuation: u32 },
    /// Replay a fixed column verbatim.
    Adversarial { column: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct FaultSpec {
    pub targets: Vec<usize>,
    pub mode: FaultMode,
}

/// Corrupt the listed workers' payloads; honest reports are untouched.
pub fn inject_faults(
    mut reports: Vec<WorkerReport>,
    spec: &FaultSpec,
    basis: &PrimePowerBasis,
    seed: u64,
) -> Vec<WorkerReport> {
    let stream = SampleStream::new(seed, 0);
    for &j in &spec.targets {
        let report = &mut reports[j];
        report.faulty = true;
        let p = basis.prime(j);
        let lam = basis.mult(j);
        match &spec.mode {
            FaultMode::Random { valuation } => {
                let mu = (*valuation).min(lam - 1);
                let mut rng = stream.column_rng(j as u64);
                match &mut report.payload {
                    WorkerPayload::Plain { column } => {
                        let modulus = p.pow(lam);
                        let k = lam - mu;
                        let shift = p.pow(mu);
                        for cell in column.iter_mut() {
                            let offset = loop {
                                let x = uniform_below(&mut rng, &p.pow(k));
                                if !(&x % p).is_zero() {
                                    break x;
                                }
                            };
                            let old: BigUint = cell.parse().unwrap();
                            *cell = ((old + offset * &shift) % &modulus).to_string();
                        }
                    }
                    WorkerPayload::MultiPrecision { rho, column } => {
                        if *rho < lam {
                            let cap = lam - *rho;
                            let modulus = p.pow(cap);
                            let k = cap - mu.min(cap - 1);
                            let shift = p.pow(mu.min(cap - 1));
                            for cell in column.iter_mut() {
                                let offset = loop {
                                    let x = uniform_below(&mut rng, &p.pow(k));
                                    if !(&x % p).is_zero() {
                                        break x;
                                    }
                                };
                                let old: BigUint = cell.parse().unwrap();
                                *cell = ((old + offset * &shift) % &modulus).to_string();
                            }
                        } else {
                            // pure valuation fault
                            *rho = 0;
                        }
                    }
                }
            }
            FaultMode::Adversarial { column } => {
                let col = column.clone();
                match &mut report.payload {
                    WorkerPayload::Plain { column } => *column = col,
                    WorkerPayload::MultiPrecision { column, .. } => *column = col,
                }
            }
        }
    }
    reports
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Plain,
    BadPrime,
}

/// Assemble worker reports into a received word and decode; on success the
/// exact solution is returned and `A x = b` has been verified.
pub fn central_reconstruct(
    reports: &[WorkerReport],
    sys: &LinearSystem,
    params: &CodeParams,
    cfg: &DecoderConfig,
    mode: SolveMode,
) -> Result<(FractionVector, Vec<BigRational>), DistSolveError> {
    let basis = params.basis();
    let parse_col = |col: &[String]| -> Vec<BigUint> {
        col.iter().map(|s| s.parse().expect("worker payloads are decimal")).collect()
    };
    let fv = match mode {
        SolveMode::Plain => {
            let mut columns = Vec::with_capacity(basis.len());
            for r in reports {
                match &r.payload {
                    WorkerPayload::Plain { column } => columns.push(parse_col(column)),
                    WorkerPayload::MultiPrecision { .. } => {
                        return Err(DistSolveError::BadPrimeInPlainMode(r.modulus_index))
                    }
                }
            }
            let word = ReceivedWord::new(columns, basis)
                .map_err(|e| DistSolveError::Config(e.to_string()))?;
            decode(&word, params, cfg)?
        }
        SolveMode::BadPrime => {
            let mut pairs = Vec::with_capacity(basis.len());
            for r in reports {
                match &r.payload {
                    WorkerPayload::Plain { column } => pairs.push((0u32, parse_col(column))),
                    WorkerPayload::MultiPrecision { rho, column } => {
                        pairs.push((*rho, parse_col(column)))
                    }
                }
            }
            let word = MultiPrecisionWord::new(pairs, basis)
                .map_err(|e| DistSolveError::Config(e.to_string()))?;
            decode_bad_primes(&word, params, cfg)?
        }
    };
    let g = BigRational::from_integer(BigInt::from(fv.denominator().clone()));
    let solution: Vec<BigRational> = fv
        .numerators()
        .iter()
        .map(|f| BigRational::from_integer(f.clone()) / &g)
        .collect();
    if !sys.verify(&solution) {
        return Err(DistSolveError::VerificationFailed);
    }
    Ok((fv, solution))
}

/// Coordinator sizing: numerator/denominator bounds from Hadamard column
/// norms, then grow the basis (primes >= `prime_floor`, multiplicity
/// `mult` each) until `N > 4 F G * beta * theta^2` where theta is the
/// worst locator of `fault_budget` corrupted columns.
pub fn size_code(
    sys: &LinearSystem,
    fault_budget: usize,
    mult: u32,
    prime_floor: u64,
    mode: SolveMode,
    svp_mode: SvpMode,
) -> Result<(CodeParams, DecoderConfig), DistSolveError> {
    let m = sys.size();
    let col_norm = |col: usize, with_b: bool| -> BigUint {
        (0..m)
            .map(|r| {
                let x = if with_b { &sys.rhs[r] } else { &sys.matrix[r][col] };
                x.magnitude() * x.magnitude()
            })
            .sum::<BigUint>()
            .sqrt()
            + 1u32
    };
    let det_bound: BigUint = (0..m).map(|c| col_norm(c, false)).product();
    let mut num_bound = BigUint::zero();
    for i in 0..m {
        let b: BigUint = (0..m)
            .map(|c| if c == i { col_norm(c, true) } else { col_norm(c, false) })
            .product();
        num_bound = num_bound.max(b);
    }
    let f_bound = num_bound + 1u32;
    let g_bound = det_bound + 1u32;

    let mut count = m.max(fault_budget + 1).max(2);
    loop {
        let primes = pick_primes(sys, prime_floor, count, mode);
        let basis = PrimePowerBasis::from_u64(&primes, &vec![mult; primes.len()])
            .expect("generated primes are valid");
        // worst-case locator: the fault_budget largest prime powers
        let mut powers: Vec<BigUint> =
            (0..basis.len()).map(|j| basis.prime_power(j).clone()).collect();
        powers.sort();
        let theta: BigUint =
            powers.iter().rev().take(fault_budget).product::<BigUint>().max(BigUint::one());
        let beta = match svp_mode {
            SvpMode::Approximate => crate::lattice::lll_beta(m + 1),
            SvpMode::Exact => 1.0,
        };
        let need = log2_biguint(&(BigUint::from(4u32) * &f_bound * &g_bound))
            + 2.0 * log2_biguint(&theta)
            + beta.log2();
        if log2_biguint(basis.modulus()) > need {
            let params = CodeParams::new(m, f_bound, g_bound, basis)
                .map_err(|e| DistSolveError::Config(e.to_string()))?;
            let cfg = DecoderConfig::new(theta, svp_mode);
            return Ok((params, cfg));
        }
        count += 1;
    }
}

fn pick_primes(sys: &LinearSystem, floor: u64, count: usize, mode: SolveMode) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = floor.max(2);
    while out.len() < count {
        let p = first_primes_from(candidate, 1)[0];
        candidate = p + 1;
        // plain mode avoids primes dividing det(A); the constructor already
        // computed the determinant for validation, so it is available here
        if mode == SolveMode::Plain && (sys.det().magnitude() % BigUint::from(p)).is_zero() {
            continue;
        }
        out.push(p);
    }
    out
}

/// Full transcript of one demo run.
#[derive(Debug, Serialize)]
pub struct DemoTranscript {
    pub matrix: Vec<Vec<String>>,
    pub rhs: Vec<String>,
    pub mode: SolveMode,
    pub code: CodeParamsDto,
    pub theta: String,
    pub fault_spec: Option<FaultSpec>,
    pub reports: Vec<WorkerReport>,
    pub outcome: String,
    pub solution: Option<FractionVectorDto>,
    pub verified: bool,
}

/// End-to-end demo: size the code, run the workers, inject faults, decode
/// and verify.
#[allow(clippy::too_many_arguments)]
pub fn run_demo(
    sys: &LinearSystem,
    mode: SolveMode,
    fault_budget: usize,
    faults: Option<FaultSpec>,
    mult: u32,
    prime_floor: u64,
    svp_mode: SvpMode,
    seed: u64,
) -> Result<DemoTranscript, DistSolveError> {
    if mode == SolveMode::BadPrime && !sys.is_cramer_reduced() {
        return Err(DistSolveError::CramerNotReduced);
    }
    let (params, cfg) = size_code(sys, fault_budget, mult, prime_floor, mode, svp_mode)?;
    let mut reports = run_workers(sys, params.basis());
    if let Some(spec) = &faults {
        if spec.targets.iter().any(|&t| t >= reports.len()) {
            return Err(DistSolveError::Config("fault target out of range".into()));
        }
        reports = inject_faults(reports, spec, params.basis(), seed);
    }
    let result = central_reconstruct(&reports, sys, &params, &cfg, mode);
    let (outcome, solution, verified) = match &result {
        Ok((fv, _)) => ("success".to_string(), Some(FractionVectorDto::from_vector(fv)), true),
        Err(e) => (format!("failure: {e}"), None, false),
    };
    Ok(DemoTranscript {
        matrix: sys.matrix.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
        rhs: sys.rhs.iter().map(|x| x.to_string()).collect(),
        mode,
        code: CodeParamsDto::from_params(&params),
        theta: cfg.locator_bound.to_string(),
        fault_spec: faults,
        reports,
        outcome,
        solution,
        verified,
    })
}
