//! Recursive systematic rate-1/2 convolutional outer code and its SISO
//! decoder.

use serde::{Deserialize, Serialize};

use crate::logdomain::{clamp_llr, llr_from_sums, log_sum, prior_from_llr, ExactLogAdd, LogAdd, LogProb};
use crate::{Error, Result};

/// A terminated recursive systematic convolutional code.
///
/// Polynomials are octal-style integers with `memory + 1` significant bits;
/// the most significant bit is the coefficient of `D^0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvCodeSpec {
    pub memory: usize,
    pub feedback: u32,
    pub feedforward: u32,
    #[serde(default = "default_terminated")]
    pub terminated: bool,
}

fn default_terminated() -> bool {
    true
}

impl Default for ConvCodeSpec {
    /// Memory 5, feedback `67`, feedforward `45` (octal).
    fn default() -> Self {
        Self {
            memory: 5,
            feedback: 0o67,
            feedforward: 0o45,
            terminated: true,
        }
    }
}

impl ConvCodeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.memory > 16 {
            return Err(Error::InvalidCode(format!("memory must be in 1..=16, got {}", self.memory)));
        }
        let limit = 1u32 << (self.memory + 1);
        if self.feedback >= limit || self.feedforward >= limit {
            return Err(Error::InvalidCode(format!(
                "polynomial degree exceeds memory {}",
                self.memory
            )));
        }
        if self.feedback >> self.memory & 1 == 0 {
            return Err(Error::InvalidCode("feedback polynomial needs a nonzero constant term".into()));
        }
        if !self.terminated {
            return Err(Error::InvalidCode("only terminated codes are supported".into()));
        }
        Ok(())
    }

    /// Coded bits for `info_bits` information bits, tail included.
    pub fn coded_len(&self, info_bits: usize) -> usize {
        2 * (info_bits + self.memory)
    }

    pub fn state_count(&self) -> usize {
        1 << self.memory
    }

    /// Coefficient of `D^j` in `poly`.
    fn coefficient(&self, poly: u32, j: usize) -> u32 {
        (poly >> (self.memory - j)) & 1
    }

    /// Mask over the packed register (bit `j-1` holds `w_{t-j}`) selecting
    /// the `D^1..D^m` terms of `poly`.
    fn register_mask(&self, poly: u32) -> u32 {
        (1..=self.memory).fold(0, |acc, j| acc | (self.coefficient(poly, j) << (j - 1)))
    }
}

/// One step of the encoder state machine.
#[derive(Debug, Clone, Copy)]
struct Machine {
    fb_mask: u32,
    ff_mask: u32,
    ff0: u32,
    state_mask: u32,
}

impl Machine {
    fn new(spec: &ConvCodeSpec) -> Self {
        Self {
            fb_mask: spec.register_mask(spec.feedback),
            ff_mask: spec.register_mask(spec.feedforward),
            ff0: spec.coefficient(spec.feedforward, 0),
            state_mask: (1 << spec.memory) - 1,
        }
    }

    /// Input that drives the register towards zero.
    #[inline]
    fn terminating_input(&self, state: u32) -> u32 {
        (state & self.fb_mask).count_ones() & 1
    }

    /// `(parity, next state)` for input `u`.
    #[inline]
    fn step(&self, state: u32, u: u32) -> (u32, u32) {
        let w = u ^ self.terminating_input(state);
        let parity = (self.ff0 & w) ^ ((state & self.ff_mask).count_ones() & 1);
        (parity, ((state << 1) | w) & self.state_mask)
    }
}

/// Encodes `info` and appends `memory` termination steps. The output holds
/// `(systematic, parity)` pairs per step.
pub fn encode(spec: &ConvCodeSpec, info: &[u8]) -> Result<Vec<u8>> {
    spec.validate()?;
    let machine = Machine::new(spec);
    let mut out = Vec::with_capacity(spec.coded_len(info.len()));
    let mut state = 0u32;
    let tail = std::iter::repeat(None).take(spec.memory);
    for u in info.iter().map(|&b| Some(u32::from(b & 1))).chain(tail) {
        let u = u.unwrap_or_else(|| machine.terminating_input(state));
        let (parity, next) = machine.step(state, u);
        out.push(u as u8);
        out.push(parity as u8);
        state = next;
    }
    debug_assert_eq!(state, 0);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSisoResult {
    /// Extrinsic LLRs of all coded bits, tail included.
    pub extrinsic_coded: Vec<f64>,
    /// A posteriori LLRs of the information bits.
    pub aposteriori_info: Vec<f64>,
}

/// Forward/backward metrics over the terminated code trellis.
struct CodeTrellis {
    machine: Machine,
    states: usize,
    info_len: usize,
    steps: usize,
    /// `ln P(bit = 0)`, `ln P(bit = 1)` per coded bit.
    priors: Vec<[LogProb; 2]>,
    alpha: Vec<LogProb>,
    beta: Vec<LogProb>,
    alpha_offset: Vec<f64>,
    beta_offset: Vec<f64>,
}

impl CodeTrellis {
    fn new(spec: &ConvCodeSpec, apriori_coded: &[f64]) -> Result<Self> {
        spec.validate()?;
        let n = apriori_coded.len();
        if n % 2 != 0 || n < 2 * spec.memory {
            return Err(Error::LengthMismatch {
                what: "coded a priori LLRs",
                expected: 2 * spec.memory.max(n / 2),
                actual: n,
            });
        }
        let steps = n / 2;
        let states = spec.state_count();
        let priors = apriori_coded
            .iter()
            .map(|&l| {
                let l = clamp_llr(l);
                [prior_from_llr(l, true), prior_from_llr(l, false)]
            })
            .collect();
        let mut t = Self {
            machine: Machine::new(spec),
            states,
            info_len: steps - spec.memory,
            steps,
            priors,
            alpha: vec![LogProb::ZERO; (steps + 1) * states],
            beta: vec![LogProb::ZERO; (steps + 1) * states],
            alpha_offset: vec![0.0; steps + 1],
            beta_offset: vec![0.0; steps + 1],
        };
        t.forward();
        t.backward();
        Ok(t)
    }

    /// Calls `f(state, input, parity, next, gamma)` for every branch of step `t`.
    #[inline]
    fn for_each_branch(&self, t: usize, mut f: impl FnMut(usize, u32, u32, usize, LogProb)) {
        for s in 0..self.states as u32 {
            let inputs: &[u32] = if t < self.info_len {
                &[0, 1]
            } else {
                match self.machine.terminating_input(s) {
                    0 => &[0],
                    _ => &[1],
                }
            };
            for &u in inputs {
                let (p, next) = self.machine.step(s, u);
                let gamma = self.priors[2 * t][u as usize] + self.priors[2 * t + 1][p as usize];
                f(s as usize, u, p, next as usize, gamma);
            }
        }
    }

    fn forward(&mut self) {
        let n = self.states;
        self.alpha[0] = LogProb::ONE;
        for t in 0..self.steps {
            let mut next = vec![LogProb::ZERO; n];
            let cur = &self.alpha[t * n..(t + 1) * n];
            let (mut values, mut targets) = (Vec::with_capacity(2 * n), Vec::with_capacity(2 * n));
            self.for_each_branch(t, |s, _, _, ns, g| {
                values.push(cur[s] + g);
                targets.push(ns as u32);
            });
            ExactLogAdd::scatter_add(&values, &targets, &mut next);
            let shift = normalize(&mut next);
            self.alpha[(t + 1) * n..(t + 2) * n].copy_from_slice(&next);
            self.alpha_offset[t + 1] = self.alpha_offset[t] + shift;
        }
    }

    fn backward(&mut self) {
        let n = self.states;
        self.beta[self.steps * n] = LogProb::ONE;
        for t in (0..self.steps).rev() {
            let mut cur = vec![LogProb::ZERO; n];
            let next = &self.beta[(t + 1) * n..(t + 2) * n];
            let (mut values, mut origins) = (Vec::with_capacity(2 * n), Vec::with_capacity(2 * n));
            self.for_each_branch(t, |s, _, _, ns, g| {
                values.push(g + next[ns]);
                origins.push(s as u32);
            });
            ExactLogAdd::scatter_add(&values, &origins, &mut cur);
            let shift = normalize(&mut cur);
            self.beta[t * n..(t + 1) * n].copy_from_slice(&cur);
            self.beta_offset[t] = self.beta_offset[t + 1] + shift;
        }
    }

    /// A posteriori LLRs of every coded bit.
    fn aposteriori(&self) -> Vec<f64> {
        let n = self.states;
        let mut out = Vec::with_capacity(2 * self.steps);
        for t in 0..self.steps {
            let alpha = &self.alpha[t * n..(t + 1) * n];
            let beta = &self.beta[(t + 1) * n..(t + 2) * n];
            let mut sys = [LogProb::ZERO; 2];
            let mut par = [LogProb::ZERO; 2];
            let mut values = Vec::with_capacity(2 * n);
            let (mut us, mut ps) = (Vec::with_capacity(2 * n), Vec::with_capacity(2 * n));
            self.for_each_branch(t, |s, u, p, ns, g| {
                values.push(alpha[s] + g + beta[ns]);
                us.push(u);
                ps.push(p);
            });
            ExactLogAdd::scatter_add(&values, &us, &mut sys);
            ExactLogAdd::scatter_add(&values, &ps, &mut par);
            out.push(llr_from_sums(sys[0], sys[1]));
            out.push(llr_from_sums(par[0], par[1]));
        }
        out
    }

    fn flows(&self) -> Vec<f64> {
        let n = self.states;
        (0..self.steps)
            .map(|t| {
                let alpha = &self.alpha[t * n..(t + 1) * n];
                let beta = &self.beta[(t + 1) * n..(t + 2) * n];
                let mut total = LogProb::ZERO;
                self.for_each_branch(t, |s, _, _, ns, g| total = log_sum(total, alpha[s] + g + beta[ns]));
                total.0 + self.alpha_offset[t] + self.beta_offset[t + 1]
            })
            .collect()
    }
}

fn normalize(metrics: &mut [LogProb]) -> f64 {
    let max = metrics.iter().fold(LogProb::ZERO, |m, &v| m.max(v));
    if max.is_zero() {
        return 0.0;
    }
    for v in metrics.iter_mut() {
        v.0 -= max.0;
    }
    max.0
}

/// Exact log-MAP decoding of the terminated code from a priori LLRs on the
/// coded bits.
pub fn decode_siso(spec: &ConvCodeSpec, apriori_coded: &[f64]) -> Result<CodeSisoResult> {
    let trellis = CodeTrellis::new(spec, apriori_coded)?;
    let apost = trellis.aposteriori();
    let extrinsic_coded = apost
        .iter()
        .zip(apriori_coded)
        .map(|(&l, &la)| l - clamp_llr(la))
        .collect();
    let aposteriori_info = apost.iter().step_by(2).take(trellis.info_len).copied().collect();
    Ok(CodeSisoResult {
        extrinsic_coded,
        aposteriori_info,
    })
}

/// Log of the total path mass through each step of the code trellis.
pub fn code_flows(spec: &ConvCodeSpec, apriori_coded: &[f64]) -> Result<Vec<f64>> {
    Ok(CodeTrellis::new(spec, apriori_coded)?.flows())
}

/// Bit 0 where the LLR is non-negative, 1 otherwise.
pub fn hard_decision(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l < 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Power-series division `ff(D) / fb(D)` over GF(2).
    fn impulse_response(spec: &ConvCodeSpec, len: usize) -> Vec<u8> {
        let coeff = |poly: u32, j: usize| if j <= spec.memory { (poly >> (spec.memory - j)) & 1 } else { 0 };
        let mut out: Vec<u8> = Vec::with_capacity(len);
        for t in 0..len {
            let mut c = coeff(spec.feedforward, t) as u8;
            for j in 1..=spec.memory.min(t) {
                c ^= coeff(spec.feedback, j) as u8 & out[t - j];
            }
            out.push(c);
        }
        out
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad_fb = ConvCodeSpec { feedback: 0o27, ..Default::default() };
        assert!(bad_fb.validate().is_err());
        let too_wide = ConvCodeSpec { feedforward: 0o145, ..Default::default() };
        assert!(too_wide.validate().is_err());
        let open = ConvCodeSpec { terminated: false, ..Default::default() };
        assert!(open.validate().is_err());
        assert!(ConvCodeSpec::default().validate().is_ok());
    }

    #[test]
    fn zero_info_gives_zero_codeword() {
        let c = encode(&ConvCodeSpec::default(), &[0; 20]).unwrap();
        assert_eq!(c.len(), 50);
        assert!(c.iter().all(|&b| b == 0));
    }

    #[test]
    fn parity_of_impulse_matches_polynomial_division() {
        for spec in [
            ConvCodeSpec::default(),
            ConvCodeSpec { memory: 2, feedback: 0o7, feedforward: 0o5, terminated: true },
            ConvCodeSpec { memory: 3, feedback: 0o13, feedforward: 0o15, terminated: true },
        ] {
            let n = 24;
            let mut info = vec![0u8; n];
            info[0] = 1;
            let c = encode(&spec, &info).unwrap();
            let parity: Vec<u8> = c.iter().skip(1).step_by(2).take(n).copied().collect();
            assert_eq!(parity, impulse_response(&spec, n), "{spec:?}");
        }
    }

    #[test]
    fn termination_returns_to_zero() {
        let spec = ConvCodeSpec::default();
        let machine = Machine::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let info: Vec<u8> = (0..37).map(|_| rng.random_range(0..2)).collect();
            let c = encode(&spec, &info).unwrap();
            let mut state = 0;
            for pair in c.chunks(2) {
                let (p, next) = machine.step(state, u32::from(pair[0]));
                assert_eq!(p, u32::from(pair[1]));
                state = next;
            }
            assert_eq!(state, 0);
            assert_eq!(c.len(), spec.coded_len(info.len()));
        }
    }

    #[test]
    fn hard_decision_rule() {
        assert_eq!(hard_decision(&[3.2, -0.1, 0.0]), vec![0, 1, 0]);
    }

    #[test]
    fn noiseless_decoding_recovers_info() {
        let spec = ConvCodeSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let info: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
        let c = encode(&spec, &info).unwrap();
        let apriori: Vec<f64> = c.iter().map(|&b| if b == 0 { 40.0 } else { -40.0 }).collect();
        let r = decode_siso(&spec, &apriori).unwrap();
        assert_eq!(hard_decision(&r.aposteriori_info), info);
        assert_eq!(r.extrinsic_coded.len(), apriori.len());
    }

    #[test]
    fn zero_apriori_gives_zero_output() {
        let spec = ConvCodeSpec::default();
        let r = decode_siso(&spec, &vec![0.0; spec.coded_len(30)]).unwrap();
        assert!(r.extrinsic_coded.iter().all(|l| l.is_finite()));
        assert!(r.aposteriori_info.iter().all(|l| l.abs() < 1e-9));
    }

    #[test]
    fn decoder_is_odd_under_codeword_sign_flip() {
        // Flipping the signs of a perturbation around a codeword's mirror
        // image: for a linear code, negating LLRs at positions where the
        // codeword has a 1 maps decoding of (c + n) to decoding of n.
        let spec = ConvCodeSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let info: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
        let c = encode(&spec, &info).unwrap();
        let noise: Vec<f64> = (0..c.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let flipped: Vec<f64> = noise.iter().zip(&c).map(|(&n, &b)| if b == 1 { -n } else { n }).collect();
        let a = decode_siso(&spec, &noise).unwrap();
        let b = decode_siso(&spec, &flipped).unwrap();
        for (i, (&x, &y)) in a.extrinsic_coded.iter().zip(&b.extrinsic_coded).enumerate() {
            let expect = if c[i] == 1 { -x } else { x };
            assert!((expect - y).abs() < 1e-9, "position {i}");
        }
    }

    #[test]
    fn rejects_wrong_lengths() {
        let spec = ConvCodeSpec::default();
        assert!(decode_siso(&spec, &[0.0; 7]).is_err());
        assert!(decode_siso(&spec, &[0.0; 8]).is_err());
        assert!(decode_siso(&spec, &[0.0; 10]).is_ok());
    }
}
