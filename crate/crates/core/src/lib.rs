//! Soft-input soft-output trellis equalization for ISI channels.
//!
//! The crate provides the exact BCJR equalizer and three reduced-complexity
//! variants that build a simplified trellis during the forward recursion:
//!
//! * RS-BCJR: states sharing their most recent `S'` symbols are merged
//!   into the strongest member of their class.
//! * M-BCJR: only the `M` strongest states survive; the rest are deleted
//!   together with their incoming branches.
//! * M*-BCJR: only the `M` strongest states survive, but the excess states
//!   are merged into the closest survivor, so no visited branch is lost.
//!
//! Around the equalizers sits a turbo-equalization simulator: a recursive
//! systematic convolutional outer code, DRP interleaving, BPSK/16QAM
//! mapping over an FIR channel with AWGN, and a sweep harness producing
//! BER tables.

pub mod code;
pub mod config;
pub mod equalizer;
pub mod interleave;
pub mod link;
pub mod logdomain;
pub mod sweep;
pub mod trellis;
pub mod turbo;
pub mod verify;

mod error;

pub use error::{Error, Result};

pub use code::{decode_siso, encode, hard_decision, CodeSisoResult, ConvCodeSpec};
pub use equalizer::{
    brute_force_posterior, run_exact_bcjr, run_m_bcjr, run_mstar_bcjr, run_rs_bcjr, Algorithm,
    EqualizerConfig, PosteriorResult,
};
pub use interleave::Permutation;
pub use link::{apply_channel, map_symbols, noise_variance_for, Modulation, ScenarioSpec};
pub use logdomain::{log_sum, prior_from_llr, LogProb, LLR_CLAMP};
pub use sweep::{run_sweep, BerRecord, SweepConfig};
pub use trellis::{branch_metric, state_distance, successor_state, ChannelSpec, Constellation, TrellisState};
pub use turbo::{IterationTrace, TurboReceiver};

pub use num_complex::Complex64;
