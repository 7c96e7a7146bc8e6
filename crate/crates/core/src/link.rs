//! Modulation, the ISI channel with AWGN, and Eb/N0 calibration.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::code::ConvCodeSpec;
use crate::interleave::{DrpParams, Permutation};
use crate::trellis::{ChannelSpec, Constellation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
    Qam16,
}

impl Modulation {
    pub fn constellation(self) -> Constellation {
        match self {
            Modulation::Bpsk => Constellation::bpsk(),
            Modulation::Qam16 => Constellation::qam16_gray(),
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qam16 => 4,
        }
    }
}

/// Maps groups of `K` bits (first bit most significant) onto symbols.
pub fn map_symbols(modulation: Modulation, bits: &[u8]) -> Result<Vec<Complex64>> {
    let constellation = modulation.constellation();
    let k = constellation.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::LengthMismatch {
            what: "bits to map",
            expected: bits.len().next_multiple_of(k),
            actual: bits.len(),
        });
    }
    Ok(bits
        .chunks(k)
        .map(|group| constellation.point(constellation.label_from_bits(group)))
        .collect())
}

/// The FIR output `sum_j h_j x_{i-j}` for `i = 1..L+S`, with `x` zero
/// outside the block.
pub fn filter(taps: &[Complex64], symbols: &[Complex64]) -> Vec<Complex64> {
    let memory = taps.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); symbols.len() + memory];
    for (i, x) in symbols.iter().enumerate() {
        for (j, h) in taps.iter().enumerate() {
            out[i + j] += h * x;
        }
    }
    out
}

/// Filters `symbols` through the channel and adds circular complex Gaussian
/// noise with `E|n|^2 = sigma^2`.
pub fn apply_channel_with_rng<R: Rng + ?Sized>(spec: &ChannelSpec, symbols: &[Complex64], rng: &mut R) -> Vec<Complex64> {
    let std = (spec.noise_variance() / 2.0).sqrt();
    let mut out = filter(spec.taps(), symbols);
    for y in &mut out {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *y += Complex64::new(re, im) * std;
    }
    out
}

pub fn apply_channel(spec: &ChannelSpec, symbols: &[Complex64], seed: u64) -> Vec<Complex64> {
    apply_channel_with_rng(spec, symbols, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Where the scenario's interleaver comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterleaverSpec {
    /// DRP with the built-in dithers and prime for the frame size.
    DefaultDrp,
    Drp(DrpParams),
    Random { seed: u64 },
    File { path: PathBuf },
}

/// One turbo-equalization setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub code: ConvCodeSpec,
    pub interleaver: InterleaverSpec,
    /// `[re, im]` per tap, `h_0` first.
    pub taps: Vec<[f64; 2]>,
    pub modulation: Modulation,
    pub info_bits: usize,
    pub iterations: usize,
    pub ebno_db: Vec<f64>,
}

impl ScenarioSpec {
    /// BPSK over the 5-tap channel, 507 information bits, 1024-bit DRP.
    pub fn scenario1() -> Self {
        Self {
            name: "scenario1".into(),
            code: ConvCodeSpec::default(),
            interleaver: InterleaverSpec::DefaultDrp,
            taps: [0.45f64, 0.25, 0.15, 0.1, 0.05].iter().map(|p| [p.sqrt(), 0.0]).collect(),
            modulation: Modulation::Bpsk,
            info_bits: 507,
            iterations: 6,
            ebno_db: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
        }
    }

    /// 16QAM over the `{1, 1, 1}` channel, 2043 information bits, 4096-bit DRP.
    pub fn scenario2() -> Self {
        Self {
            name: "scenario2".into(),
            code: ConvCodeSpec::default(),
            interleaver: InterleaverSpec::DefaultDrp,
            taps: vec![[1.0, 0.0]; 3],
            modulation: Modulation::Qam16,
            info_bits: 2043,
            iterations: 6,
            ebno_db: vec![4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
        }
    }

    pub fn builtin() -> Vec<ScenarioSpec> {
        vec![Self::scenario1(), Self::scenario2()]
    }

    pub fn builtin_named(name: &str) -> Option<ScenarioSpec> {
        Self::builtin().into_iter().find(|s| s.name == name)
    }

    pub fn complex_taps(&self) -> Vec<Complex64> {
        self.taps.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
    }

    pub fn coded_bits(&self) -> usize {
        self.code.coded_len(self.info_bits)
    }

    /// Symbols per block `L`.
    pub fn block_symbols(&self) -> usize {
        self.coded_bits() / self.modulation.bits_per_symbol()
    }

    /// Information bits per coded bit, termination included.
    pub fn code_rate(&self) -> f64 {
        self.info_bits as f64 / self.coded_bits() as f64
    }

    pub fn channel(&self, noise_variance: f64) -> Result<ChannelSpec> {
        ChannelSpec::new(self.complex_taps(), noise_variance, self.modulation.constellation())
    }

    pub fn permutation(&self) -> Result<Permutation> {
        let size = self.coded_bits();
        match &self.interleaver {
            InterleaverSpec::DefaultDrp => Permutation::default_drp(size),
            InterleaverSpec::Drp(p) => Permutation::drp(size, &p.read_dither, &p.write_dither, p.prime, p.offset),
            InterleaverSpec::Random { seed } => Ok(Permutation::random(size, *seed)),
            InterleaverSpec::File { path } => Permutation::from_file(path),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidScenario(format!("{}: {m}", self.name)));
        self.code.validate()?;
        if self.info_bits == 0 {
            return invalid("info_bits must be positive".into());
        }
        if self.iterations == 0 {
            return invalid("iterations must be positive".into());
        }
        if self.coded_bits() % self.modulation.bits_per_symbol() != 0 {
            return invalid(format!(
                "{} coded bits do not fill whole {:?} symbols",
                self.coded_bits(),
                self.modulation
            ));
        }
        if self.ebno_db.iter().any(|e| !e.is_finite()) {
            return invalid("Eb/N0 grid must be finite".into());
        }
        self.channel(1.0)?;
        let p = self.permutation()?;
        if p.size() != self.coded_bits() {
            return invalid(format!(
                "interleaver size {} differs from coded length {}",
                p.size(),
                self.coded_bits()
            ));
        }
        Ok(())
    }
}

/// Noise variance `sigma^2` for a given Eb/N0, counting the channel gain
/// `G = sum |h_j|^2`, the code rate with termination and `N0 = 2 sigma^2`.
pub fn noise_variance_for(ebno_db: f64, scenario: &ScenarioSpec) -> f64 {
    let gain: f64 = scenario.taps.iter().map(|[re, im]| re * re + im * im).sum();
    let k = scenario.modulation.bits_per_symbol() as f64;
    gain / (2.0 * scenario.code_rate() * k * 10f64.powf(ebno_db / 10.0))
}
