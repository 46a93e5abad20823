//! Simultaneous rational number codes over prime-power moduli.
//!
//! A vector of fractions `(f_1/g, ..., f_l/g)` sharing one denominator is
//! encoded as the matrix of its modular reductions modulo `p_j^{lambda_j}`
//! for a basis of distinct primes with multiplicities. This crate provides:
//!
//! - the plain and multi-precision (bad-prime aware) encodings,
//! - lattice-based collaborative decoders that correct beyond half the
//!   minimum distance, with both LLL and exact small-dimension SVP backends,
//! - uniform samplers for the random/hybrid error models,
//! - exact-rational evaluation of the decoding failure-probability bounds,
//! - a reproducible Monte Carlo harness comparing empirical failure rates
//!   against those bounds,
//! - a fault-tolerant distributed exact linear solver demo built on top of
//!   the codes.

pub mod bounds;
pub mod code;
pub mod decoder;
pub mod distsolve;
pub mod errmodel;
pub mod harness;
pub mod lattice;
pub mod numtheory;
pub mod stats;
pub mod wire;

pub use code::{CodeParams, FractionVector, MultiPrecisionWord, ReceivedWord};
pub use decoder::{DecoderConfig, SvpMode};
pub use numtheory::PrimePowerBasis;
