//! Command-line interface: encoding, decoding, bound evaluation, Monte
//! Carlo simulation, the distributed-solver demo and a self-test.
//!
//! Exit codes: 0 on success, 1 when a decode subcommand reports a decoding
//! failure, 2 on usage or config errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;

use srn::decoder::{self, DecodeError, DecoderConfig, SvpMode};
use srn::distsolve::{self, FaultMode, FaultSpec, LinearSystem, SolveMode};
use srn::harness::{self, ExperimentConfig};
use srn::wire::{
    parse_bigint, parse_biguint, CodeParamsDto, FractionVectorDto, MultiPrecisionWordDto,
    ReceivedWordDto,
};

#[derive(Parser)]
#[command(name = "srn", about = "Simultaneous rational number codes over prime-power moduli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a fraction vector into its residue matrix (gcd(g, N) = 1).
    Encode {
        /// Code parameters (JSON file).
        #[arg(long)]
        code: PathBuf,
        /// Fraction vector (JSON file).
        #[arg(long)]
        input: PathBuf,
    },
    /// Encode with the multi-precision (bad-prime aware) encoding.
    EncodeMp {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Decode a residue matrix; exits 1 on decoding failure.
    Decode {
        #[arg(long)]
        code: PathBuf,
        /// Received word (JSON file).
        #[arg(long)]
        word: PathBuf,
        /// Locator bound theta (decimal integer; accepts locators <= theta).
        #[arg(long)]
        theta: String,
        #[arg(long, value_enum, default_value = "approximate")]
        svp: SvpArg,
    },
    /// Decode a multi-precision word; exits 1 on decoding failure.
    DecodeBadPrimes {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        word: PathBuf,
        #[arg(long)]
        theta: String,
        #[arg(long, value_enum, default_value = "approximate")]
        svp: SvpArg,
    },
    /// Evaluate the failure-probability bound for an experiment config
    /// (the trial count is ignored). JSON on stdout, a table on stderr.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a Monte Carlo experiment; summary JSON on stdout.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Write per-trial records to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap worker threads (0 = library default).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Distributed exact-solver demo; JSON transcript on stdout.
    DistsolveDemo {
        /// System file (JSON {"matrix": [["1","1"],...], "rhs": ["1","2"]});
        /// defaults to the built-in 2x2 demo system.
        #[arg(long)]
        system: Option<PathBuf>,
        /// Generate a seeded random invertible system of this size instead.
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, value_enum, default_value = "plain")]
        mode: ModeArg,
        /// Number of faulty workers the code must tolerate.
        #[arg(long, default_value_t = 1)]
        budget: usize,
        /// Worker indices to corrupt (comma separated).
        #[arg(long, value_delimiter = ',')]
        faults: Vec<usize>,
        #[arg(long, value_enum, default_value = "random")]
        fault_mode: FaultModeArg,
        /// Multiplicity of every basis prime.
        #[arg(long, default_value_t = 1)]
        mult: u32,
        /// Smallest prime the coordinator may use.
        #[arg(long, default_value_t = 2)]
        prime_floor: u64,
        #[arg(long, value_enum, default_value = "exact")]
        svp: SvpArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the built-in counting and identity checks.
    Selftest,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SvpArg {
    Approximate,
    Exact,
}

impl From<SvpArg> for SvpMode {
    fn from(v: SvpArg) -> Self {
        match v {
            SvpArg::Approximate => SvpMode::Approximate,
            SvpArg::Exact => SvpMode::Exact,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModeArg {
    Plain,
    BadPrime,
}

impl From<ModeArg> for SolveMode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::Plain => SolveMode::Plain,
            ModeArg::BadPrime => SolveMode::BadPrime,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FaultModeArg {
    Random,
    Adversarial,
}

fn usage_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => usage_err(msg),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Encode { code, input } => {
            let params = read_json::<CodeParamsDto>(&code)?.to_params().map_err(stringify)?;
            let fv = read_json::<FractionVectorDto>(&input)?.to_vector().map_err(stringify)?;
            let word = srn::code::encode(&fv, &params).map_err(stringify)?;
            println!("{}", serde_json::to_string_pretty(&ReceivedWordDto::from_word(&word)).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::EncodeMp { code, input } => {
            let params = read_json::<CodeParamsDto>(&code)?.to_params().map_err(stringify)?;
            let fv = read_json::<FractionVectorDto>(&input)?.to_vector().map_err(stringify)?;
            let word = srn::code::encode_multiprecision(&fv, &params).map_err(stringify)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&MultiPrecisionWordDto::from_word(&word)).unwrap()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode { code, word, theta, svp } => {
            let params = read_json::<CodeParamsDto>(&code)?.to_params().map_err(stringify)?;
            let word = read_json::<ReceivedWordDto>(&word)?
                .to_word(params.basis())
                .map_err(stringify)?;
            let cfg = DecoderConfig::new(
                parse_biguint(&theta).map_err(stringify)?,
                svp.into(),
            );
            match decoder::decode(&word, &params, &cfg) {
                Ok(fv) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&FractionVectorDto::from_vector(&fv)).unwrap()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(DecodeError::Failure) => {
                    eprintln!("decoding failure");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::DecodeBadPrimes { code, word, theta, svp } => {
            let params = read_json::<CodeParamsDto>(&code)?.to_params().map_err(stringify)?;
            let word = read_json::<MultiPrecisionWordDto>(&word)?
                .to_word(params.basis())
                .map_err(stringify)?;
            let cfg = DecoderConfig::new(
                parse_biguint(&theta).map_err(stringify)?,
                svp.into(),
            );
            match decoder::decode_bad_primes(&word, &params, &cfg) {
                Ok(fv) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&FractionVectorDto::from_vector(&fv)).unwrap()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(DecodeError::Failure) => {
                    eprintln!("decoding failure");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Bound { config } => {
            let text =
                fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text).map_err(stringify)?;
            let exp = harness::validate(&cfg).map_err(stringify)?;
            println!("{}", serde_json::to_string_pretty(&exp.bound).unwrap());
            let b = &exp.bound;
            eprintln!("shape            : {:?}", b.shape);
            eprintln!("ell              : {}", b.ell);
            eprintln!("distance ceiling : {:.4}", b.dmax);
            eprintln!("d (random part)  : {:.4}", b.d);
            eprintln!("d (fixed part)   : {:.4}", b.d_fixed);
            eprintln!("log2 locator     : {:.4}", b.log2_locator);
            eprintln!("2^exponent       : 2^{:.4}", b.exponent_log2);
            eprintln!("prime product    : {}/{}", b.product.numer(), b.product.denom());
            match b.bound {
                Some(v) => eprintln!("bound            : {v:.6e}"),
                None => eprintln!("bound            : out of regime"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { config, out, threads } => {
            let text =
                fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text).map_err(stringify)?;
            let (records, summary) = harness::run_montecarlo(&cfg, threads).map_err(stringify)?;
            if let Some(path) = out {
                let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                harness::write_csv(std::io::BufWriter::new(file), &records)
                    .map_err(|e| e.to_string())?;
            }
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::DistsolveDemo {
            system,
            size,
            mode,
            budget,
            faults,
            fault_mode,
            mult,
            prime_floor,
            svp,
            seed,
        } => {
            let sys = match (system, size) {
                (Some(path), _) => {
                    #[derive(serde::Deserialize)]
                    struct SystemDto {
                        matrix: Vec<Vec<String>>,
                        rhs: Vec<String>,
                    }
                    let dto: SystemDto = read_json(&path)?;
                    let matrix = dto
                        .matrix
                        .iter()
                        .map(|row| {
                            row.iter().map(|s| parse_bigint(s)).collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(stringify)?;
                    let rhs = dto
                        .rhs
                        .iter()
                        .map(|s| parse_bigint(s))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(stringify)?;
                    LinearSystem::new(matrix, rhs).map_err(stringify)?
                }
                (None, Some(m)) => random_system(m, seed)?,
                (None, None) => {
                    LinearSystem::from_i64(&[&[1, 1], &[1, -1]], &[1, 2]).map_err(stringify)?
                }
            };
            let fault_spec = if faults.is_empty() {
                None
            } else {
                let mode = match fault_mode {
                    FaultModeArg::Random => FaultMode::Random { valuation: 0 },
                    FaultModeArg::Adversarial => FaultMode::Adversarial {
                        column: vec!["1".to_string(); sys.size()],
                    },
                };
                Some(FaultSpec { targets: faults, mode })
            };
            let transcript = distsolve::run_demo(
                &sys,
                mode.into(),
                budget,
                fault_spec,
                mult,
                prime_floor,
                svp.into(),
                seed,
            )
            .map_err(stringify)?;
            println!("{}", serde_json::to_string_pretty(&transcript).unwrap());
            Ok(if transcript.verified { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Selftest => {
            harness::selftest().map_err(|e| format!("selftest failed: {e}"))?;
            println!("selftest: ok");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Seeded random invertible system with single-digit entries.
fn random_system(m: usize, seed: u64) -> Result<LinearSystem, String> {
    use rand::Rng;
    use rand::SeedableRng;
    if m == 0 || m > 8 {
        return Err("size must be between 1 and 8".into());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let matrix: Vec<Vec<BigInt>> =
            (0..m).map(|_| (0..m).map(|_| BigInt::from(rng.gen_range(-9i64..=9))).collect()).collect();
        let rhs: Vec<BigInt> = (0..m).map(|_| BigInt::from(rng.gen_range(-9i64..=9))).collect();
        if let Ok(sys) = LinearSystem::new(matrix, rhs) {
            return Ok(sys);
        }
    }
}
