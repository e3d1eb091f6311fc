//! Twin primes viewed as a subsequence of the primes: census machinery,
//! separation statistics, exponential-decay fitting, and gap-onset
//! prediction.
//!
//! The pipeline enumerates primes with a segmented sieve, pairs them
//! into twins, measures the separation (count of singleton primes)
//! between consecutive twins, accumulates per-checkpoint histograms,
//! fits the decay of the separation distribution, and evaluates an
//! analytic model for when separations of a given size should first
//! appear.

pub mod census;
pub mod predictor;
pub mod sieve;
pub mod stats;
pub mod twins;

pub use census::{CensusConfig, CensusOutcome, CensusResult, CensusRunner};
pub use predictor::ModelParams;
pub use sieve::{primes_up_to, SieveConfig};
pub use stats::{DecayFit, M0Estimate, SeparationHistogram};
pub use twins::{enumerate_twins, separations, RecordGap, SeparationRecord, Twin};
