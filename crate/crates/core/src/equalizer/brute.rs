//! Exhaustive MAP reference: sums the joint metric of every input sequence.

use num_complex::Complex64;

use super::{check_lengths, PosteriorResult};
use crate::logdomain::{clamp_llr, llr_from_sums, log_sum, LogProb};
use crate::trellis::ChannelSpec;
use crate::{Error, Result};

/// Largest `L*K` accepted by the exhaustive reference.
pub const BRUTE_FORCE_MAX_BITS: usize = 20;

struct Enumeration {
    plus: Vec<LogProb>,
    minus: Vec<LogProb>,
    total: LogProb,
}

fn enumerate(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64]) -> Result<Enumeration> {
    let block_len = check_lengths(spec, received, apriori)?;
    let k = spec.bits_per_symbol();
    let n_bits = block_len * k;
    if n_bits > BRUTE_FORCE_MAX_BITS {
        return Err(Error::BruteForceTooLarge {
            limit: BRUTE_FORCE_MAX_BITS,
            requested: n_bits,
        });
    }
    let taps = spec.taps();
    let points = spec.constellation().points();
    let la: Vec<f64> = apriori.iter().map(|&l| clamp_llr(l)).collect();
    // ln P(bit = 0) and ln P(bit = 1), written out from the probability form.
    let ln_p0: Vec<f64> = la.iter().map(|&l| (l.exp() / (1.0 + l.exp())).ln()).collect();
    let ln_p1: Vec<f64> = la.iter().map(|&l| ((-l).exp() / (1.0 + (-l).exp())).ln()).collect();

    let mut plus = vec![LogProb::ZERO; n_bits];
    let mut minus = vec![LogProb::ZERO; n_bits];
    let mut total = LogProb::ZERO;
    let mut symbols = vec![Complex64::new(0.0, 0.0); block_len];
    for seq in 0u64..(1u64 << n_bits) {
        // bit n of the block is bit (n_bits - 1 - n) of `seq`
        let bit = |n: usize| ((seq >> (n_bits - 1 - n)) & 1) as usize;
        let mut metric = 0.0;
        for n in 0..n_bits {
            metric += if bit(n) == 0 { ln_p0[n] } else { ln_p1[n] };
        }
        for (i, x) in symbols.iter_mut().enumerate() {
            let label = (0..k).fold(0usize, |acc, b| (acc << 1) | bit(i * k + b));
            *x = points[label];
        }
        for (i, &y) in received.iter().enumerate() {
            let mut filtered = Complex64::new(0.0, 0.0);
            for (j, h) in taps.iter().enumerate() {
                if j <= i && i - j < block_len {
                    filtered += h * symbols[i - j];
                }
            }
            metric -= (y - filtered).norm_sqr() / spec.noise_variance();
        }
        let m = LogProb(metric);
        total = log_sum(total, m);
        for n in 0..n_bits {
            if bit(n) == 0 {
                plus[n] = log_sum(plus[n], m);
            } else {
                minus[n] = log_sum(minus[n], m);
            }
        }
    }
    Ok(Enumeration { plus, minus, total })
}

/// Exact a posteriori LLRs by enumerating all `2^{LK}` input sequences.
///
/// Only for tiny blocks (`L*K <= 20`).
pub fn brute_force_posterior(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64]) -> Result<PosteriorResult> {
    let e = enumerate(spec, received, apriori)?;
    let aposteriori: Vec<f64> = e.plus.iter().zip(&e.minus).map(|(&p, &m)| llr_from_sums(p, m)).collect();
    Ok(PosteriorResult::from_aposteriori(aposteriori, apriori))
}

/// `ln sum_a Lambda(a)` over all input sequences, without the Gaussian
/// prefactor.
pub fn brute_force_evidence(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64]) -> Result<LogProb> {
    Ok(enumerate(spec, received, apriori)?.total)
}
