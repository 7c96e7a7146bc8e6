//! Forward/backward/completion over a dynamically built trellis.
//!
//! All four equalizers share this engine; they differ only in the reduction
//! applied to the freshly expanded states at each depth of the forward pass.

use num_complex::Complex64;

use crate::logdomain::{llr_from_sums, prior_from_llr, LogAdd, LogProb};
use crate::trellis::{state_distance, successor_state, ChannelModel, TrellisState};

const UNSET: u32 = u32::MAX;
const DELETED: u32 = u32::MAX;

/// State reduction applied after each forward step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reduction {
    None,
    /// RS-BCJR: one survivor per class of states sharing the most recent
    /// `reduced_memory` tuples.
    Classes { reduced_memory: usize },
    /// M-BCJR: keep the `states` best, delete the rest with their branches.
    Delete { states: usize },
    /// M*-BCJR: keep the `states` best, merge the rest into survivors.
    Merge { states: usize },
}

/// One visited branch. `origin` indexes the states of the section owning the
/// branch and `target` the states of the following section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRecord {
    pub origin: u32,
    /// Input label; 0 in sections past the end of the block.
    pub input: u32,
    pub target: u32,
    pub gamma: LogProb,
}

/// The surviving states at depth `time` and the branches leaving them.
///
/// `alpha` and `beta` are stored normalized; the true metrics are
/// `alpha + alpha_offset` and `beta + beta_offset`.
#[derive(Debug, Clone)]
pub struct TrellisSection {
    pub time: usize,
    pub states: Vec<TrellisState>,
    pub alpha: Vec<LogProb>,
    pub beta: Vec<LogProb>,
    pub branches: Vec<BranchRecord>,
    /// Whether the branches leaving this section carry a transmitted symbol.
    pub carries_symbol: bool,
    pub alpha_offset: f64,
    pub beta_offset: f64,
    /// Distinct states reached before reduction.
    pub expanded_states: usize,
    /// Total forward mass before and after reduction, on a common scale.
    pub mass_before_reduction: LogProb,
    pub mass_after_reduction: LogProb,
}

impl TrellisSection {
    /// Log of the total path mass through this section's branches.
    pub fn flow<A: LogAdd>(&self, next: &TrellisSection) -> f64 {
        let total = A::sum(
            self.branches
                .iter()
                .map(|b| self.alpha[b.origin as usize] + b.gamma + next.beta[b.target as usize]),
        );
        total.0 + self.alpha_offset + next.beta_offset
    }
}

/// A complete forward/backward pass over a (possibly reduced) trellis.
#[derive(Debug, Clone)]
pub struct Trellis {
    /// Depths `1..=L+S+1`; the last section has no branches.
    pub sections: Vec<TrellisSection>,
    pub bits_per_symbol: usize,
    pub block_len: usize,
}

impl Trellis {
    pub fn branch_counts(&self) -> Vec<usize> {
        self.sections.iter().map(|s| s.branches.len()).collect()
    }

    pub fn survivor_counts(&self) -> Vec<usize> {
        self.sections.iter().map(|s| s.states.len()).collect()
    }

    /// Flow through each branch-carrying section under exact log addition.
    pub fn flows(&self) -> Vec<f64> {
        self.flows_with::<crate::logdomain::ExactLogAdd>()
    }

    pub fn flows_with<A: LogAdd>(&self) -> Vec<f64> {
        self.sections
            .windows(2)
            .map(|w| w[0].flow::<A>(&w[1]))
            .collect()
    }

    /// Bit positions (flat index `i*K + k`) for which the trellis holds
    /// branches labeled with only one of the two bit values.
    pub fn one_sided_bits(&self) -> Vec<usize> {
        let k = self.bits_per_symbol;
        let mut out = Vec::new();
        for (i, section) in self.sections.iter().take(self.block_len).enumerate() {
            for bit in 0..k {
                let shift = k - 1 - bit;
                let ones = section.branches.iter().filter(|b| (b.input >> shift) & 1 == 1).count();
                if ones == 0 || ones == section.branches.len() {
                    out.push(i * k + bit);
                }
            }
        }
        out
    }

    /// A posteriori LLRs of all `L*K` input bits.
    pub fn aposteriori<A: LogAdd>(&self) -> Vec<f64> {
        let k = self.bits_per_symbol;
        let mut out = Vec::with_capacity(self.block_len * k);
        let mut by_label = vec![LogProb::ZERO; 1 << k];
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for w in self.sections.windows(2).take(self.block_len) {
            let (cur, next) = (&w[0], &w[1]);
            by_label.fill(LogProb::ZERO);
            values.clear();
            labels.clear();
            for b in &cur.branches {
                values.push(cur.alpha[b.origin as usize] + b.gamma + next.beta[b.target as usize]);
                labels.push(b.input);
            }
            A::scatter_add(&values, &labels, &mut by_label);
            for bit in 0..k {
                let shift = k - 1 - bit;
                let (mut plus, mut minus) = (LogProb::ZERO, LogProb::ZERO);
                for (label, &m) in by_label.iter().enumerate() {
                    if (label >> shift) & 1 == 0 {
                        plus = A::add(plus, m);
                    } else {
                        minus = A::add(minus, m);
                    }
                }
                out.push(llr_from_sums(plus, minus));
            }
        }
        out
    }
}

struct Expansion {
    states: Vec<TrellisState>,
    alpha: Vec<LogProb>,
    branches: Vec<BranchRecord>,
}

pub(crate) fn run<A: LogAdd>(
    model: &ChannelModel,
    received: &[Complex64],
    apriori: &[f64],
    reduction: Reduction,
) -> Trellis {
    let k = model.k;
    let memory = model.memory;
    let block_len = received.len() - memory;
    let depth = received.len();
    let mut slot_of = vec![UNSET; 1usize << (k * memory)];
    let mut prior_table = vec![LogProb::ONE; model.labels() as usize];
    let mut values = Vec::new();
    let mut targets = Vec::new();

    let mut sections = Vec::with_capacity(depth + 1);
    sections.push(TrellisSection {
        time: 1,
        states: vec![TrellisState::ZERO],
        alpha: vec![LogProb::ONE],
        beta: Vec::new(),
        branches: Vec::new(),
        carries_symbol: block_len > 0,
        alpha_offset: 0.0,
        beta_offset: 0.0,
        expanded_states: 1,
        mass_before_reduction: LogProb::ONE,
        mass_after_reduction: LogProb::ONE,
    });

    for time in 1..=depth {
        let carries_symbol = time <= block_len;
        if carries_symbol {
            let llrs = &apriori[(time - 1) * k..time * k];
            let bit_priors: Vec<[f64; 2]> = llrs
                .iter()
                .map(|&la| [prior_from_llr(la, true).0, prior_from_llr(la, false).0])
                .collect();
            for (label, p) in prior_table.iter_mut().enumerate() {
                *p = LogProb(
                    bit_priors
                        .iter()
                        .enumerate()
                        .map(|(bit, pr)| pr[(label >> (k - 1 - bit)) & 1])
                        .sum(),
                );
            }
        }
        let cur = sections.last_mut().expect("at least one section");
        cur.carries_symbol = carries_symbol;
        let y = received[time - 1];
        let labels = if carries_symbol { model.labels() } else { 1 };

        let mut ex = Expansion {
            states: Vec::new(),
            alpha: Vec::new(),
            branches: Vec::with_capacity(cur.states.len() * labels as usize),
        };
        values.clear();
        targets.clear();
        for (origin, (&state, &alpha)) in cur.states.iter().zip(&cur.alpha).enumerate() {
            for label in 0..labels {
                let input = carries_symbol.then_some(label);
                let next = successor_state(state, label, k, memory);
                let e = model.expected(time, block_len, state, input);
                let prior = if carries_symbol { prior_table[label as usize] } else { LogProb::ONE };
                let gamma = LogProb(prior.0 - (y - e).norm_sqr() * model.inv_noise_variance);
                let slot = match slot_of[next.index()] {
                    UNSET => {
                        let s = ex.states.len() as u32;
                        slot_of[next.index()] = s;
                        ex.states.push(next);
                        s
                    }
                    s => s,
                };
                values.push(alpha + gamma);
                targets.push(slot);
                ex.branches.push(BranchRecord {
                    origin: origin as u32,
                    input: label,
                    target: slot,
                    gamma,
                });
            }
        }
        ex.alpha = vec![LogProb::ZERO; ex.states.len()];
        A::scatter_add(&values, &targets, &mut ex.alpha);
        for s in &ex.states {
            slot_of[s.index()] = UNSET;
        }
        cur.branches = ex.branches;
        let prev_offset = cur.alpha_offset;
        let expanded_states = ex.states.len();
        let mass_before = A::sum(ex.alpha.iter().copied());

        let (states, mut alpha, remap) = reduce::<A>(ex.states, ex.alpha, reduction, k, memory);
        if let Some(remap) = remap {
            let branches = &mut cur.branches;
            branches.retain(|b| remap[b.target as usize] != DELETED);
            for b in branches.iter_mut() {
                b.target = remap[b.target as usize];
            }
        }
        let mass_after = A::sum(alpha.iter().copied());
        let max = alpha.iter().fold(LogProb::ZERO, |m, &a| m.max(a));
        let shift = if max.is_zero() { 0.0 } else { max.0 };
        for a in &mut alpha {
            a.0 -= shift;
        }
        sections.push(TrellisSection {
            time: time + 1,
            states,
            alpha,
            beta: Vec::new(),
            branches: Vec::new(),
            carries_symbol: false,
            alpha_offset: prev_offset + shift,
            beta_offset: 0.0,
            expanded_states,
            mass_before_reduction: mass_before,
            mass_after_reduction: mass_after,
        });
    }

    backward::<A>(&mut sections);
    Trellis {
        sections,
        bits_per_symbol: k,
        block_len,
    }
}

fn backward<A: LogAdd>(sections: &mut [TrellisSection]) {
    let last = sections.last_mut().expect("at least one section");
    last.beta = vec![LogProb::ONE; last.states.len()];
    last.beta_offset = 0.0;
    for i in (0..sections.len() - 1).rev() {
        let (head, tail) = sections.split_at_mut(i + 1);
        let (cur, next) = (&mut head[i], &tail[0]);
        let mut beta = vec![LogProb::ZERO; cur.states.len()];
        let values: Vec<LogProb> = cur.branches.iter().map(|b| b.gamma + next.beta[b.target as usize]).collect();
        let origins: Vec<u32> = cur.branches.iter().map(|b| b.origin).collect();
        A::scatter_add(&values, &origins, &mut beta);
        let max = beta.iter().fold(LogProb::ZERO, |m, &v| m.max(v));
        let shift = if max.is_zero() { 0.0 } else { max.0 };
        for v in &mut beta {
            v.0 -= shift;
        }
        cur.beta = beta;
        cur.beta_offset = next.beta_offset + shift;
    }
}

/// Orders states best-first: larger forward metric, then smaller index.
#[inline]
fn better(a: (LogProb, TrellisState), b: (LogProb, TrellisState)) -> std::cmp::Ordering {
    b.0 .0
        .partial_cmp(&a.0 .0)
        .expect("forward metrics are never NaN")
        .then(a.1.cmp(&b.1))
}

type Reduced = (Vec<TrellisState>, Vec<LogProb>, Option<Vec<u32>>);

fn reduce<A: LogAdd>(
    states: Vec<TrellisState>,
    alpha: Vec<LogProb>,
    reduction: Reduction,
    k: usize,
    memory: usize,
) -> Reduced {
    match reduction {
        Reduction::None => (states, alpha, None),
        Reduction::Delete { states: m } | Reduction::Merge { states: m } if states.len() <= m => {
            (states, alpha, None)
        }
        Reduction::Delete { states: m } => {
            let keep = top_m(&states, &alpha, m);
            let mut remap = vec![DELETED; states.len()];
            let mut new_states = Vec::with_capacity(m);
            let mut new_alpha = Vec::with_capacity(m);
            for &slot in &keep[..m] {
                remap[slot as usize] = new_states.len() as u32;
                new_states.push(states[slot as usize]);
                new_alpha.push(alpha[slot as usize]);
            }
            (new_states, new_alpha, Some(remap))
        }
        Reduction::Merge { states: m } => {
            let order = top_m(&states, &alpha, m);
            let (survivors, excess) = order.split_at(m);
            let mut remap = vec![DELETED; states.len()];
            let mut new_states = Vec::with_capacity(m);
            let mut new_alpha = Vec::with_capacity(m);
            for &slot in survivors {
                remap[slot as usize] = new_states.len() as u32;
                new_states.push(states[slot as usize]);
                new_alpha.push(alpha[slot as usize]);
            }
            // Merge targets are chosen against the survivors' metrics before
            // any merging, so the result does not depend on processing order.
            let snapshot = new_alpha.clone();
            let mut excess = excess.to_vec();
            excess.sort_unstable_by(|&a, &b| {
                better((alpha[a as usize], states[a as usize]), (alpha[b as usize], states[b as usize]))
            });
            let mut merged = Vec::with_capacity(excess.len());
            let mut into = Vec::with_capacity(excess.len());
            for &slot in &excess {
                let s = states[slot as usize];
                let mut best = 0usize;
                let mut best_key = (usize::MAX, LogProb::ZERO, TrellisState(u32::MAX));
                for (j, &cand) in new_states.iter().enumerate() {
                    let d = state_distance(s, cand, k, memory);
                    let key = (d, snapshot[j], cand);
                    let wins = key.0 < best_key.0
                        || (key.0 == best_key.0
                            && (key.1 .0 > best_key.1 .0 || (key.1 == best_key.1 && key.2 < best_key.2)));
                    if wins {
                        best = j;
                        best_key = key;
                    }
                }
                remap[slot as usize] = best as u32;
                merged.push(alpha[slot as usize]);
                into.push(best as u32);
            }
            A::scatter_add(&merged, &into, &mut new_alpha);
            (new_states, new_alpha, Some(remap))
        }
        Reduction::Classes { reduced_memory } => {
            if reduced_memory >= memory {
                return (states, alpha, None);
            }
            let class_mask = (1u32 << (k * reduced_memory)) - 1;
            let mut rep_of_class = vec![UNSET; 1usize << (k * reduced_memory)];
            for (slot, (&s, &a)) in states.iter().zip(&alpha).enumerate() {
                let class = (s.0 & class_mask) as usize;
                let rep = rep_of_class[class];
                if rep == UNSET || better((a, s), (alpha[rep as usize], states[rep as usize])).is_lt() {
                    rep_of_class[class] = slot as u32;
                }
            }
            let mut reps: Vec<u32> = rep_of_class.iter().copied().filter(|&r| r != UNSET).collect();
            reps.sort_unstable();
            let mut remap = vec![DELETED; states.len()];
            let mut new_states = Vec::with_capacity(reps.len());
            let mut new_alpha = Vec::with_capacity(reps.len());
            for &slot in &reps {
                remap[slot as usize] = new_states.len() as u32;
                new_states.push(states[slot as usize]);
                new_alpha.push(alpha[slot as usize]);
            }
            let mut merged = Vec::with_capacity(states.len() - reps.len());
            let mut into = Vec::with_capacity(states.len() - reps.len());
            for (slot, &s) in states.iter().enumerate() {
                if remap[slot] != DELETED {
                    continue;
                }
                let rep = rep_of_class[(s.0 & class_mask) as usize];
                let target = remap[rep as usize];
                remap[slot] = target;
                merged.push(alpha[slot]);
                into.push(target);
            }
            A::scatter_add(&merged, &into, &mut new_alpha);
            (new_states, new_alpha, Some(remap))
        }
    }
}

/// Slots of the `m` best states first (in slot order), then the rest.
fn top_m(states: &[TrellisState], alpha: &[LogProb], m: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..states.len() as u32).collect();
    order.select_nth_unstable_by(m - 1, |&a, &b| {
        better((alpha[a as usize], states[a as usize]), (alpha[b as usize], states[b as usize]))
    });
    order[..m].sort_unstable();
    order
}
