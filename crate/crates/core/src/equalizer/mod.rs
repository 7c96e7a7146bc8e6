//! SISO equalizers: exact BCJR, RS-BCJR, M-BCJR and M*-BCJR.

mod brute;
mod engine;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

pub use brute::{brute_force_evidence, brute_force_posterior, BRUTE_FORCE_MAX_BITS};
pub use engine::{BranchRecord, Trellis, TrellisSection};

use crate::logdomain::{clamp_llr, ExactLogAdd, LogAdd};
use crate::trellis::{ChannelModel, ChannelSpec};
use crate::{Error, Result};
use engine::Reduction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Exact,
    Rs,
    M,
    MStar,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Rs => "rs",
            Algorithm::M => "m",
            Algorithm::MStar => "mstar",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "rs" => Ok(Algorithm::Rs),
            "m" => Ok(Algorithm::M),
            "mstar" => Ok(Algorithm::MStar),
            other => Err(Error::InvalidEqualizer(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Which equalizer to run and its complexity parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqualizerConfig {
    Exact,
    /// RS-BCJR keeping `2^{K S'}` states.
    ReducedState { reduced_memory: usize },
    /// M-BCJR keeping at most `states` states per depth.
    MBcjr { states: usize },
    /// M*-BCJR keeping at most `states` states per depth.
    MStar { states: usize },
}

impl EqualizerConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            EqualizerConfig::Exact => Algorithm::Exact,
            EqualizerConfig::ReducedState { .. } => Algorithm::Rs,
            EqualizerConfig::MBcjr { .. } => Algorithm::M,
            EqualizerConfig::MStar { .. } => Algorithm::MStar,
        }
    }

    /// Maximum number of states kept per depth on a channel with memory
    /// `memory` and `k` bits per symbol.
    pub fn effective_states(&self, k: usize, memory: usize) -> usize {
        let full = 1usize << (k * memory);
        match *self {
            EqualizerConfig::Exact => full,
            EqualizerConfig::ReducedState { reduced_memory } => 1 << (k * reduced_memory.min(memory)),
            EqualizerConfig::MBcjr { states } | EqualizerConfig::MStar { states } => states.min(full),
        }
    }

    pub fn validate(&self, spec: &ChannelSpec) -> Result<()> {
        match *self {
            EqualizerConfig::Exact => Ok(()),
            EqualizerConfig::ReducedState { reduced_memory } if reduced_memory > spec.memory() => {
                Err(Error::InvalidEqualizer(format!(
                    "reduced memory {reduced_memory} exceeds channel memory {}",
                    spec.memory()
                )))
            }
            EqualizerConfig::ReducedState { .. } => Ok(()),
            EqualizerConfig::MBcjr { states: 0 } | EqualizerConfig::MStar { states: 0 } => {
                Err(Error::InvalidEqualizer("state budget must be at least 1".into()))
            }
            EqualizerConfig::MBcjr { .. } | EqualizerConfig::MStar { .. } => Ok(()),
        }
    }

    fn reduction(&self) -> Reduction {
        match *self {
            EqualizerConfig::Exact => Reduction::None,
            EqualizerConfig::ReducedState { reduced_memory } => Reduction::Classes { reduced_memory },
            EqualizerConfig::MBcjr { states } => Reduction::Delete { states },
            EqualizerConfig::MStar { states } => Reduction::Merge { states },
        }
    }
}

/// `exact`, `rs:<S'>`, `m:<M>`, `mstar:<M>`.
impl fmt::Display for EqualizerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqualizerConfig::Exact => f.write_str("exact"),
            EqualizerConfig::ReducedState { reduced_memory } => write!(f, "rs:{reduced_memory}"),
            EqualizerConfig::MBcjr { states } => write!(f, "m:{states}"),
            EqualizerConfig::MStar { states } => write!(f, "mstar:{states}"),
        }
    }
}

impl FromStr for EqualizerConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let algorithm: Algorithm = name.parse()?;
        let Some(param) = param else {
            return match algorithm {
                Algorithm::Exact => Ok(EqualizerConfig::Exact),
                _ => Err(Error::InvalidEqualizer(format!("{name} needs a parameter, e.g. {name}:4"))),
            };
        };
        let n: usize = param
            .parse()
            .map_err(|_| Error::InvalidEqualizer(format!("bad parameter in {s:?}")))?;
        Ok(match algorithm {
            Algorithm::Exact => return Err(Error::InvalidEqualizer("exact takes no parameter".into())),
            Algorithm::Rs => EqualizerConfig::ReducedState { reduced_memory: n },
            Algorithm::M => EqualizerConfig::MBcjr { states: n },
            Algorithm::MStar => EqualizerConfig::MStar { states: n },
        })
    }
}

/// A posteriori and extrinsic LLRs for the `L*K` input bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    pub aposteriori: Vec<f64>,
    pub extrinsic: Vec<f64>,
}

impl PosteriorResult {
    /// `extrinsic = aposteriori - apriori`, with the a priori values clamped
    /// the same way they were before entering the SISO block.
    pub fn from_aposteriori(aposteriori: Vec<f64>, apriori: &[f64]) -> Self {
        let extrinsic = aposteriori
            .iter()
            .zip(apriori)
            .map(|(&l, &la)| l - clamp_llr(la))
            .collect();
        Self { aposteriori, extrinsic }
    }
}

/// Returns the block length `L` after checking `received` has `L+S` samples
/// and `apriori` has `L*K` values.
pub(crate) fn check_lengths(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64]) -> Result<usize> {
    let memory = spec.memory();
    if received.len() < memory {
        return Err(Error::LengthMismatch {
            what: "received samples",
            expected: memory,
            actual: received.len(),
        });
    }
    let block_len = received.len() - memory;
    let expected = block_len * spec.bits_per_symbol();
    if apriori.len() != expected {
        return Err(Error::LengthMismatch {
            what: "a priori LLRs",
            expected,
            actual: apriori.len(),
        });
    }
    Ok(block_len)
}

/// A configured equalizer for one channel.
#[derive(Debug, Clone)]
pub struct Equalizer {
    spec: ChannelSpec,
    model: ChannelModel,
    config: EqualizerConfig,
}

impl Equalizer {
    pub fn new(spec: &ChannelSpec, config: EqualizerConfig) -> Result<Self> {
        config.validate(spec)?;
        Ok(Self {
            spec: spec.clone(),
            model: ChannelModel::new(spec),
            config,
        })
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn config(&self) -> EqualizerConfig {
        self.config
    }

    /// Runs the forward and backward recursions and returns the trellis.
    pub fn trellis(&self, received: &[Complex64], apriori: &[f64]) -> Result<Trellis> {
        self.trellis_with::<ExactLogAdd>(received, apriori)
    }

    /// As [`Equalizer::trellis`], with a caller-chosen log addition.
    pub fn trellis_with<A: LogAdd>(&self, received: &[Complex64], apriori: &[f64]) -> Result<Trellis> {
        check_lengths(&self.spec, received, apriori)?;
        let clamped: Vec<f64> = apriori.iter().map(|&l| clamp_llr(l)).collect();
        Ok(engine::run::<A>(&self.model, received, &clamped, self.config.reduction()))
    }

    pub fn equalize(&self, received: &[Complex64], apriori: &[f64]) -> Result<PosteriorResult> {
        let trellis = self.trellis(received, apriori)?;
        Ok(PosteriorResult::from_aposteriori(trellis.aposteriori::<ExactLogAdd>(), apriori))
    }
}

pub fn equalize(
    spec: &ChannelSpec,
    received: &[Complex64],
    apriori: &[f64],
    config: EqualizerConfig,
) -> Result<PosteriorResult> {
    Equalizer::new(spec, config)?.equalize(received, apriori)
}

/// Exact BCJR over the full `2^{KS}`-state trellis.
pub fn run_exact_bcjr(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64]) -> Result<PosteriorResult> {
    equalize(spec, received, apriori, EqualizerConfig::Exact)
}

/// RS-BCJR with `reduced_memory = S'`.
pub fn run_rs_bcjr(
    spec: &ChannelSpec,
    received: &[Complex64],
    apriori: &[f64],
    reduced_memory: usize,
) -> Result<PosteriorResult> {
    equalize(spec, received, apriori, EqualizerConfig::ReducedState { reduced_memory })
}

/// M-BCJR keeping `states` states per depth.
pub fn run_m_bcjr(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64], states: usize) -> Result<PosteriorResult> {
    equalize(spec, received, apriori, EqualizerConfig::MBcjr { states })
}

/// M*-BCJR keeping `states` states per depth.
pub fn run_mstar_bcjr(
    spec: &ChannelSpec,
    received: &[Complex64],
    apriori: &[f64],
    states: usize,
) -> Result<PosteriorResult> {
    equalize(spec, received, apriori, EqualizerConfig::MStar { states })
}
