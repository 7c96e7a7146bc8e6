//! The iterative receiver: SISO equalizer and SISO decoder exchanging
//! extrinsic LLRs through the interleaver.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{decode_siso, encode, hard_decision};
use crate::equalizer::{Equalizer, EqualizerConfig};
use crate::interleave::Permutation;
use crate::link::{apply_channel_with_rng, map_symbols, ScenarioSpec};
use crate::{Error, Result};

/// Per-iteration outcome of one block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub bit_errors: Vec<usize>,
    pub frame_errors: Vec<bool>,
    /// Mean `|L_e|` of the equalizer output.
    pub mean_abs_extrinsic: Vec<f64>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.bit_errors.len()
    }

    pub fn final_errors(&self) -> usize {
        self.bit_errors.last().copied().unwrap_or(0)
    }
}

/// Random stream for block `block` under `seed`. Streams depend only on
/// these two numbers, so every equalizer and Eb/N0 point sees the same
/// information bits and noise shapes.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Transmitter and receiver for one scenario at one noise level.
#[derive(Debug, Clone)]
pub struct TurboReceiver {
    scenario: ScenarioSpec,
    equalizer: Equalizer,
    permutation: Permutation,
}

impl TurboReceiver {
    pub fn new(scenario: &ScenarioSpec, noise_variance: f64, config: EqualizerConfig) -> Result<Self> {
        scenario.validate()?;
        let permutation = scenario.permutation()?;
        Self::with_permutation(scenario, noise_variance, config, permutation)
    }

    pub fn with_permutation(
        scenario: &ScenarioSpec,
        noise_variance: f64,
        config: EqualizerConfig,
        permutation: Permutation,
    ) -> Result<Self> {
        if permutation.size() != scenario.coded_bits() {
            return Err(Error::InvalidScenario(format!(
                "interleaver size {} differs from coded length {}",
                permutation.size(),
                scenario.coded_bits()
            )));
        }
        let channel = scenario.channel(noise_variance)?;
        Ok(Self {
            scenario: scenario.clone(),
            equalizer: Equalizer::new(&channel, config)?,
            permutation,
        })
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn equalizer(&self) -> &Equalizer {
        &self.equalizer
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    /// Encode, interleave, map and pass through the noisy channel.
    pub fn transmit<R: Rng + ?Sized>(&self, info: &[u8], rng: &mut R) -> Result<Vec<Complex64>> {
        let coded = encode(&self.scenario.code, info)?;
        let bits = self.permutation.interleave(&coded)?;
        let symbols = map_symbols(self.scenario.modulation, &bits)?;
        Ok(apply_channel_with_rng(self.equalizer.spec(), &symbols, rng))
    }

    /// Runs the configured number of turbo iterations on one received block.
    /// The first equalization uses all-zero a priori values; afterwards each
    /// side only ever receives the other side's extrinsic output.
    pub fn run(&self, received: &[Complex64], true_info: &[u8]) -> Result<IterationTrace> {
        let expected = self.scenario.block_symbols() + self.equalizer.spec().memory();
        if received.len() != expected {
            return Err(Error::LengthMismatch {
                what: "received block",
                expected,
                actual: received.len(),
            });
        }
        if true_info.len() != self.scenario.info_bits {
            return Err(Error::LengthMismatch {
                what: "information block",
                expected: self.scenario.info_bits,
                actual: true_info.len(),
            });
        }
        let iterations = self.scenario.iterations;
        let mut trace = IterationTrace {
            bit_errors: Vec::with_capacity(iterations),
            frame_errors: Vec::with_capacity(iterations),
            mean_abs_extrinsic: Vec::with_capacity(iterations),
        };
        let mut eq_apriori = vec![0.0; self.scenario.coded_bits()];
        for _ in 0..iterations {
            let eq = self.equalizer.equalize(received, &eq_apriori)?;
            trace
                .mean_abs_extrinsic
                .push(eq.extrinsic.iter().map(|l| l.abs()).sum::<f64>() / eq.extrinsic.len() as f64);
            let dec_apriori = self.permutation.deinterleave(&eq.extrinsic)?;
            let dec = decode_siso(&self.scenario.code, &dec_apriori)?;
            let errors = hard_decision(&dec.aposteriori_info)
                .iter()
                .zip(true_info)
                .filter(|(a, b)| a != b)
                .count();
            trace.bit_errors.push(errors);
            trace.frame_errors.push(errors > 0);
            eq_apriori = self.permutation.interleave(&dec.extrinsic_coded)?;
        }
        Ok(trace)
    }

    /// Draws information bits and noise from `rng`, transmits and decodes.
    pub fn simulate_block<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<IterationTrace> {
        let info: Vec<u8> = (0..self.scenario.info_bits).map(|_| rng.random_range(0..2u8)).collect();
        let received = self.transmit(&info, rng)?;
        self.run(&received, &info)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::noise_variance_for;

    #[test]
    fn noiseless_block_decodes_at_first_iteration() {
        let s = ScenarioSpec::scenario1();
        let rx = TurboReceiver::new(&s, 1e-6, EqualizerConfig::Exact).unwrap();
        let trace = rx.simulate_block(&mut block_rng(1, 0)).unwrap();
        assert_eq!(trace.iterations(), 6);
        assert!(trace.bit_errors.iter().all(|&e| e == 0));
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let s = ScenarioSpec::scenario1();
        let v = noise_variance_for(1.0, &s);
        let rx = TurboReceiver::new(&s, v, EqualizerConfig::MStar { states: 4 }).unwrap();
        let a = rx.simulate_block(&mut block_rng(7, 3)).unwrap();
        let b = rx.simulate_block(&mut block_rng(7, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_budget_mstar_reproduces_exact_trace() {
        let s = ScenarioSpec::scenario1();
        let v = noise_variance_for(0.5, &s);
        let exact = TurboReceiver::new(&s, v, EqualizerConfig::Exact).unwrap();
        let mstar = TurboReceiver::new(&s, v, EqualizerConfig::MStar { states: 16 }).unwrap();
        for block in 0..3 {
            let a = exact.simulate_block(&mut block_rng(2, block)).unwrap();
            let b = mstar.simulate_block(&mut block_rng(2, block)).unwrap();
            assert_eq!(a.bit_errors, b.bit_errors);
        }
    }

    #[test]
    fn rejects_mismatched_blocks() {
        let s = ScenarioSpec::scenario1();
        let rx = TurboReceiver::new(&s, 1.0, EqualizerConfig::Exact).unwrap();
        assert!(rx.run(&[Complex64::new(0.0, 0.0); 10], &[0; 507]).is_err());
        assert!(rx.run(&vec![Complex64::new(0.0, 0.0); 1028], &[0; 10]).is_err());
        assert!(TurboReceiver::with_permutation(&s, 1.0, EqualizerConfig::Exact, Permutation::identity(10)).is_err());
    }
}
