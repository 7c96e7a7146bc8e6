//! Reference implementations written independently of the production
//! engine: states are explicit symbol histories, arithmetic is in the
//! linear probability domain and every step is spelled out.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::code::ConvCodeSpec;
use crate::logdomain::LLR_CLAMP;
use crate::trellis::ChannelSpec;

/// Past labels, most recent first; `None` is the empty symbol outside the
/// block.
pub type History = Vec<Option<u32>>;

fn p_bit(la: f64, bit: u32) -> f64 {
    let e = la.exp();
    if bit == 0 {
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + e)
    }
}

/// `gamma` in the linear domain.
pub fn gamma_linear(spec: &ChannelSpec, y: Complex64, hist: &History, input: Option<u32>, la: &[f64]) -> f64 {
    let k = spec.bits_per_symbol();
    let c = spec.constellation();
    let mut prior = 1.0;
    let mut yhat = Complex64::new(0.0, 0.0);
    if let Some(u) = input {
        for (bit, &l) in la.iter().enumerate() {
            prior *= p_bit(l, (u >> (k - 1 - bit)) & 1);
        }
        yhat += spec.taps()[0] * c.point(u);
    }
    for (j, slot) in hist.iter().enumerate() {
        if let Some(label) = slot {
            yhat += spec.taps()[j + 1] * c.point(*label);
        }
    }
    prior * (-(y - yhat).norm_sqr() / spec.noise_variance()).exp()
}

/// Packed index of a history with empty symbols read as label 0.
pub fn packed(hist: &History, k: usize) -> u32 {
    hist.iter()
        .enumerate()
        .map(|(j, s)| s.unwrap_or(0) << (k * j))
        .sum()
}

#[derive(Debug, Clone)]
pub struct LinBranch {
    pub origin: History,
    pub input: Option<u32>,
    pub target: History,
    pub gamma: f64,
}

/// A trellis in the linear domain: survivors with `alpha`, branches per
/// depth, then `beta` after [`LinearTrellis::backward`].
#[derive(Debug, Clone, Default)]
pub struct LinearTrellis {
    pub alpha: Vec<HashMap<History, f64>>,
    pub beta: Vec<HashMap<History, f64>>,
    pub branches: Vec<Vec<LinBranch>>,
    pub k: usize,
    pub block_len: usize,
    /// Total forward mass at each depth before and after reduction.
    pub mass_before: Vec<f64>,
    pub mass_after: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub enum LinearReduction {
    None,
    Delete(usize),
    Merge(usize),
}

fn expand(spec: &ChannelSpec, y: Complex64, states: &HashMap<History, f64>, time: usize, block_len: usize, la: &[f64]) -> (Vec<LinBranch>, HashMap<History, f64>) {
    let k = spec.bits_per_symbol();
    let memory = spec.memory();
    let mut origins: Vec<&History> = states.keys().collect();
    origins.sort_by_key(|h| packed(h, k));
    let mut branches = Vec::new();
    let mut next: HashMap<History, f64> = HashMap::new();
    for origin in origins {
        let inputs: Vec<Option<u32>> = if time <= block_len {
            (0..1u32 << k).map(Some).collect()
        } else {
            vec![None]
        };
        for input in inputs {
            let gamma = gamma_linear(spec, y, origin, input, la);
            let mut target: History = Vec::with_capacity(memory);
            if memory > 0 {
                target.push(input);
                target.extend_from_slice(&origin[..memory - 1]);
            }
            *next.entry(target.clone()).or_insert(0.0) += states[origin] * gamma;
            branches.push(LinBranch {
                origin: origin.clone(),
                input,
                target,
                gamma,
            });
        }
    }
    (branches, next)
}

/// Survivors ordered best first: larger alpha, then smaller packed index.
fn ranked(states: &HashMap<History, f64>, k: usize) -> Vec<History> {
    let mut v: Vec<History> = states.keys().cloned().collect();
    v.sort_by(|a, b| {
        states[b]
            .partial_cmp(&states[a])
            .unwrap()
            .then(packed(a, k).cmp(&packed(b, k)))
    });
    v
}

/// How many oldest tuples must be dropped before the histories agree.
pub fn history_distance(a: &History, b: &History) -> usize {
    let s = a.len();
    (0..=s).find(|&d| a[..s - d] == b[..s - d]).unwrap_or(s)
}

impl LinearTrellis {
    /// Builds the trellis, applying `reduction` at every depth, then runs
    /// the backward recursion.
    pub fn build(spec: &ChannelSpec, received: &[Complex64], apriori: &[f64], reduction: LinearReduction) -> Self {
        let k = spec.bits_per_symbol();
        let memory = spec.memory();
        let block_len = received.len() - memory;
        let mut t = LinearTrellis {
            k,
            block_len,
            ..Default::default()
        };
        let start: History = vec![None; memory];
        t.alpha.push(HashMap::from([(start, 1.0)]));
        t.mass_before.push(1.0);
        t.mass_after.push(1.0);
        for time in 1..=received.len() {
            let la: &[f64] = if time <= block_len { &apriori[(time - 1) * k..time * k] } else { &[] };
            let (mut branches, next) = expand(spec, received[time - 1], t.alpha.last().unwrap(), time, block_len, la);
            t.mass_before.push(next.values().sum());
            let next = match reduction {
                LinearReduction::Delete(m) if next.len() > m => {
                    let keep: Vec<History> = ranked(&next, k).into_iter().take(m).collect();
                    branches.retain(|b| keep.contains(&b.target));
                    keep.into_iter().map(|h| {
                        let a = next[&h];
                        (h, a)
                    }).collect()
                }
                LinearReduction::Merge(m) if next.len() > m => {
                    // Step 6: survivors and the excess set.
                    let order = ranked(&next, k);
                    let (survivors, excess) = order.split_at(m);
                    let mut merged: HashMap<History, f64> = survivors.iter().map(|h| (h.clone(), next[h])).collect();
                    // Step 7: each excess state goes to the closest survivor.
                    for e in excess {
                        let target = survivors
                            .iter()
                            .min_by(|a, b| {
                                history_distance(e, a)
                                    .cmp(&history_distance(e, b))
                                    .then(next[*b].partial_cmp(&next[*a]).unwrap())
                                    .then(packed(a, k).cmp(&packed(b, k)))
                            })
                            .unwrap()
                            .clone();
                        for b in branches.iter_mut().filter(|b| &b.target == e) {
                            b.target = target.clone();
                        }
                        *merged.get_mut(&target).unwrap() += next[e];
                    }
                    merged
                }
                _ => next,
            };
            t.mass_after.push(next.values().sum());
            t.alpha.push(next);
            t.branches.push(branches);
        }
        t.backward();
        t
    }

    fn backward(&mut self) {
        let depth = self.alpha.len();
        self.beta = vec![HashMap::new(); depth];
        for h in self.alpha[depth - 1].keys() {
            self.beta[depth - 1].insert(h.clone(), 1.0);
        }
        for i in (0..depth - 1).rev() {
            let mut beta: HashMap<History, f64> = self.alpha[i].keys().map(|h| (h.clone(), 0.0)).collect();
            for b in &self.branches[i] {
                *beta.get_mut(&b.origin).unwrap() += b.gamma * self.beta[i + 1][&b.target];
            }
            self.beta[i] = beta;
        }
    }

    pub fn aposteriori(&self) -> Vec<f64> {
        let k = self.k;
        let mut out = Vec::new();
        for i in 0..self.block_len {
            for bit in 0..k {
                let (mut plus, mut minus) = (0.0, 0.0);
                for b in &self.branches[i] {
                    let m = self.alpha[i][&b.origin] * b.gamma * self.beta[i + 1][&b.target];
                    if (b.input.unwrap() >> (k - 1 - bit)) & 1 == 0 {
                        plus += m;
                    } else {
                        minus += m;
                    }
                }
                out.push(match (plus > 0.0, minus > 0.0) {
                    (true, true) => (plus / minus).ln(),
                    (true, false) => LLR_CLAMP,
                    (false, true) => -LLR_CLAMP,
                    (false, false) => 0.0,
                });
            }
        }
        out
    }

    pub fn alpha_totals(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.values().sum()).collect()
    }
}

/// The history of engine state `state` at 1-based depth `time`.
pub fn engine_history(state: u32, time: usize, block_len: usize, k: usize, memory: usize) -> History {
    (1..=memory)
        .map(|j| {
            let live = time > j && time - j <= block_len;
            live.then(|| (state >> (k * (j - 1))) & ((1 << k) - 1))
        })
        .collect()
}

/// Shift-register encoder written from the polynomial coefficients.
pub fn encode_reference(spec: &ConvCodeSpec, info: &[u8]) -> Vec<u8> {
    let m = spec.memory;
    let coeff = |poly: u32, j: usize| ((poly >> (m - j)) & 1) as u8;
    let mut reg = vec![0u8; m]; // reg[j-1] = w_{t-j}
    let mut out = Vec::new();
    let feedback = |reg: &[u8]| (1..=m).fold(0u8, |acc, j| acc ^ (coeff(spec.feedback, j) & reg[j - 1]));
    for t in 0..info.len() + m {
        let fb = feedback(&reg);
        let u = if t < info.len() { info[t] } else { fb };
        let w = u ^ fb;
        let mut p = coeff(spec.feedforward, 0) & w;
        for j in 1..=m {
            p ^= coeff(spec.feedforward, j) & reg[j - 1];
        }
        out.push(u);
        out.push(p);
        reg.rotate_right(1);
        reg[0] = w;
    }
    out
}

/// A posteriori LLRs of the coded bits and information bits by summing
/// over every terminated codeword.
pub fn code_map_by_enumeration(spec: &ConvCodeSpec, apriori_coded: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n_info = apriori_coded.len() / 2 - spec.memory;
    let n = apriori_coded.len();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for word in 0u64..(1 << n_info) {
        let info: Vec<u8> = (0..n_info).map(|i| ((word >> i) & 1) as u8).collect();
        let c = encode_reference(spec, &info);
        let weight: f64 = c.iter().zip(apriori_coded).map(|(&b, &l)| p_bit(l, u32::from(b))).product();
        for (j, &b) in c.iter().enumerate() {
            if b == 0 {
                plus[j] += weight;
            } else {
                minus[j] += weight;
            }
        }
    }
    let llr = |p: f64, m: f64| match (p > 0.0, m > 0.0) {
        (true, true) => (p / m).ln(),
        (true, false) => LLR_CLAMP,
        (false, true) => -LLR_CLAMP,
        (false, false) => 0.0,
    };
    let coded: Vec<f64> = plus.iter().zip(&minus).map(|(&p, &m)| llr(p, m)).collect();
    let info = coded.iter().step_by(2).take(n_info).copied().collect();
    (coded, info)
}
