//! Oracle and invariant checks over the equalizers and the outer code.
//!
//! Each check returns a one-line summary on success or a description of the
//! first violation. [`run_verification_suite`] runs them all at sizes that
//! finish in seconds; the acceptance tests call the same checks with the
//! full ensemble sizes.

pub mod oracle;

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{code_flows, decode_siso, encode, hard_decision, ConvCodeSpec};
use crate::equalizer::{
    brute_force_evidence, brute_force_posterior, run_exact_bcjr, Equalizer, EqualizerConfig, Trellis,
    BRUTE_FORCE_MAX_BITS,
};
use crate::interleave::Permutation;
use crate::link::{apply_channel_with_rng, map_symbols, noise_variance_for, Modulation, ScenarioSpec};
use crate::logdomain::{log_sum, prior_from_llr, ExactLogAdd, LogAdd, LogProb};
use crate::trellis::{branch_metric, successor_state, ChannelSpec, Constellation, TrellisState};
use crate::turbo::TurboReceiver;
use crate::Error;
use oracle::{engine_history, gamma_linear, LinearReduction, LinearTrellis};

pub type CheckResult = std::result::Result<String, String>;

/// A channel, a received block and a priori LLRs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: ChannelSpec,
    pub received: Vec<Complex64>,
    pub apriori: Vec<f64>,
    pub bits: Vec<u8>,
}

/// Random taps, noise level, transmitted bits and a priori values in
/// `[-3, 3]`.
pub fn random_instance<R: Rng>(rng: &mut R, modulation: Modulation, memory: usize, block_len: usize) -> Instance {
    let mut taps = Vec::with_capacity(memory + 1);
    let mag = rng.random_range(0.5..1.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    taps.push(Complex64::from_polar(mag, phase));
    for _ in 0..memory {
        taps.push(Complex64::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)));
    }
    let noise_variance = rng.random_range(0.3..1.5);
    let spec = ChannelSpec::new(taps, noise_variance, modulation.constellation()).expect("valid random channel");
    let n_bits = block_len * modulation.bits_per_symbol();
    let bits: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2u8)).collect();
    let symbols = map_symbols(modulation, &bits).expect("whole symbols");
    let received = apply_channel_with_rng(&spec, &symbols, rng);
    let apriori = (0..n_bits).map(|_| rng.random_range(-3.0..3.0)).collect();
    Instance {
        spec,
        received,
        apriori,
        bits,
    }
}

/// One uncoded block over a scenario's channel at `ebno_db`, with zero a
/// priori information.
pub fn scenario_instance<R: Rng>(rng: &mut R, scenario: &ScenarioSpec, ebno_db: f64) -> Instance {
    let spec = scenario
        .channel(noise_variance_for(ebno_db, scenario))
        .expect("built-in scenarios are valid");
    let bits: Vec<u8> = (0..scenario.coded_bits()).map(|_| rng.random_range(0..2u8)).collect();
    let symbols = map_symbols(scenario.modulation, &bits).expect("whole symbols");
    let received = apply_channel_with_rng(&spec, &symbols, rng);
    Instance {
        spec,
        received,
        apriori: vec![0.0; bits.len()],
        bits,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn trellis(inst: &Instance, config: EqualizerConfig) -> Trellis {
    Equalizer::new(&inst.spec, config)
        .and_then(|e| e.trellis(&inst.received, &inst.apriori))
        .expect("valid instance")
}

pub fn check_log_sum() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    if (log_sum(LogProb(0.0), LogProb(0.0)).0 - std::f64::consts::LN_2).abs() > 1e-15
        || log_sum(LogProb::ZERO, LogProb(1.5)).0 != 1.5
    {
        return Err("log_sum identities".into());
    }
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let [a, b, c] = [0; 3].map(|_| LogProb(rng.random_range(-50.0..50.0)));
        worst = worst
            .max((log_sum(a, b).0 - log_sum(b, a).0).abs())
            .max((log_sum(log_sum(a, b), c).0 - log_sum(a, log_sum(b, c)).0).abs());
    }
    if worst > 1e-10 {
        return Err(format!("commutativity/associativity error {worst:e}"));
    }
    let mut worst_prior: f64 = 0.0;
    for i in 0..=8000 {
        let la = -40.0 + i as f64 * 0.01;
        worst_prior = worst_prior.max((prior_from_llr(la, true).exp() + prior_from_llr(la, false).exp() - 1.0).abs());
    }
    if worst_prior > 1e-12 {
        return Err(format!("priors sum to 1 only within {worst_prior:e}"));
    }
    Ok(format!("max error {worst:.1e}, prior normalization {worst_prior:.1e}"))
}

pub fn check_successor_map() -> CheckResult {
    for (k, s) in [(1usize, 12usize), (2, 6), (3, 4), (4, 3), (2, 2)] {
        let n = 1u32 << (k * s);
        let mut hits = vec![0u32; n as usize];
        for st in 0..n {
            for u in 0..1u32 << k {
                hits[successor_state(TrellisState(st), u, k, s).index()] += 1;
            }
        }
        if hits.iter().any(|&h| h != 1 << k) {
            return Err(format!("K={k}, S={s}: successor map is not 2^K-to-one"));
        }
    }
    Ok("every state has exactly 2^K predecessors for KS <= 12".into())
}

pub fn check_branch_metric(instances: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let modulation = if rng.random_bool(0.5) { Modulation::Bpsk } else { Modulation::Qam16 };
        let inst = random_instance(&mut rng, modulation, 2, 4);
        let k = inst.spec.bits_per_symbol();
        let hist_state = TrellisState(rng.random_range(0..inst.spec.full_state_count() as u32));
        let u = rng.random_range(0..1u32 << k);
        let la = &inst.apriori[..k];
        let priors: Vec<LogProb> = (0..k).map(|b| prior_from_llr(la[b], (u >> (k - 1 - b)) & 1 == 0)).collect();
        let y = inst.received[3];
        let log_domain = branch_metric(&inst.spec, y, hist_state, Some(u), &priors);
        let hist = engine_history(hist_state.0, 10, 100, k, 2);
        let linear = gamma_linear(&inst.spec, y, &hist, Some(u), la);
        worst = worst.max((log_domain.0 - linear.ln()).abs());
    }
    if worst > 1e-10 {
        return Err(format!("branch metric differs from the linear formula by {worst:e}"));
    }
    Ok(format!("{instances} random branches, max log error {worst:.1e}"))
}

/// Exact BCJR against exhaustive enumeration on random small blocks.
pub fn check_exact_vs_brute_force(instances: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut worst_evidence: f64 = 0.0;
    for n in 0..instances {
        let memory = rng.random_range(0..=2);
        let block_len = rng.random_range(1..=6);
        let inst = random_instance(&mut rng, Modulation::Bpsk, memory, block_len);
        let fast = run_exact_bcjr(&inst.spec, &inst.received, &inst.apriori).map_err(|e| e.to_string())?;
        let slow = brute_force_posterior(&inst.spec, &inst.received, &inst.apriori).map_err(|e| e.to_string())?;
        let d = max_abs_diff(&fast.aposteriori, &slow.aposteriori);
        if d > 1e-9 {
            return Err(format!("instance {n} (S={memory}, L={block_len}): LLRs differ by {d:e}"));
        }
        worst = worst.max(d);
        let evidence = brute_force_evidence(&inst.spec, &inst.received, &inst.apriori).map_err(|e| e.to_string())?;
        let flows = trellis(&inst, EqualizerConfig::Exact).flows();
        let e = (flows[0] - evidence.0).abs();
        if e > 1e-9 * evidence.0.abs().max(1.0) {
            return Err(format!("instance {n}: trellis flow {} vs enumerated evidence {}", flows[0], evidence.0));
        }
        worst_evidence = worst_evidence.max(e);
    }
    Ok(format!(
        "{instances} instances, max LLR error {worst:.1e}, evidence error {worst_evidence:.1e}"
    ))
}

/// Forward and backward metrics against the linear-domain recursions.
pub fn check_recursions_linear(instances: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 0..instances {
        let inst = random_instance(&mut rng, Modulation::Bpsk, 2, 6);
        let t = trellis(&inst, EqualizerConfig::Exact);
        let lin = LinearTrellis::build(&inst.spec, &inst.received, &inst.apriori, LinearReduction::None);
        for (i, section) in t.sections.iter().enumerate() {
            let total = ExactLogAdd::sum(section.alpha.iter().copied()).0 + section.alpha_offset;
            let d = (total - lin.alpha_totals()[i].ln()).abs();
            worst = worst.max(d);
            for (slot, &st) in section.states.iter().enumerate() {
                let h = engine_history(st.0, section.time, t.block_len, 1, 2);
                let a = section.alpha[slot].0 + section.alpha_offset;
                let b = section.beta[slot].0 + section.beta_offset;
                let da = (a - lin.alpha[i][&h].ln()).abs();
                let db = (b - lin.beta[i][&h].ln()).abs();
                worst = worst.max(da).max(db);
            }
            if worst > 1e-9 {
                return Err(format!("instance {n}, depth {}: metric error {worst:e}", section.time));
            }
        }
    }
    Ok(format!("{instances} instances, max metric error {worst:.1e}"))
}

/// Full-budget M*-BCJR and M-BCJR and `S' = S` RS-BCJR reproduce exact BCJR.
pub fn check_degenerate_reductions(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for scenario in ScenarioSpec::builtin() {
        for _ in 0..blocks {
            let mut inst = scenario_instance(&mut rng, &scenario, 3.0);
            inst.apriori = (0..inst.bits.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let full = inst.spec.full_state_count();
            let memory = inst.spec.memory();
            let exact = Equalizer::new(&inst.spec, EqualizerConfig::Exact)
                .and_then(|e| e.equalize(&inst.received, &inst.apriori))
                .map_err(|e| e.to_string())?;
            for config in [
                EqualizerConfig::MStar { states: full },
                EqualizerConfig::MBcjr { states: full },
                EqualizerConfig::ReducedState { reduced_memory: memory },
            ] {
                let out = Equalizer::new(&inst.spec, config)
                    .and_then(|e| e.equalize(&inst.received, &inst.apriori))
                    .map_err(|e| e.to_string())?;
                let d = max_abs_diff(&out.aposteriori, &exact.aposteriori);
                if d > 1e-9 {
                    return Err(format!("{}: {config} differs from exact by {d:e}", scenario.name));
                }
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("both scenarios, max deviation {worst:.1e}"))
}

/// Largest relative deviation of the per-section flow from its first value.
pub fn flow_deviation<A: LogAdd>(t: &Trellis) -> f64 {
    let flows = t.flows_with::<A>();
    let reference = flows[0];
    flows
        .iter()
        .map(|f| (f - reference).abs() / reference.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Exact-BCJR flow conservation, computed with the adder `A`.
pub fn check_flow_conservation_with<A: LogAdd>(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = ScenarioSpec::scenario1();
    let mut worst: f64 = 0.0;
    for n in 0..blocks {
        let ebno = rng.random_range(0.0..4.0);
        let inst = scenario_instance(&mut rng, &scenario, ebno);
        let t = Equalizer::new(&inst.spec, EqualizerConfig::Exact)
            .and_then(|e| e.trellis_with::<A>(&inst.received, &inst.apriori))
            .map_err(|e| e.to_string())?;
        let d = flow_deviation::<A>(&t);
        if d > 1e-8 {
            return Err(format!("block {n}: flow varies across sections by {d:e} (relative)"));
        }
        worst = worst.max(d);
    }
    Ok(format!("{blocks} blocks, max relative flow deviation {worst:.1e}"))
}

pub fn check_flow_conservation(blocks: usize, seed: u64) -> CheckResult {
    check_flow_conservation_with::<ExactLogAdd>(blocks, seed)
}

/// Merging must carry all forward mass into the survivors.
pub fn check_mass_preservation(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s1 = ScenarioSpec::scenario1();
    let s2 = ScenarioSpec::scenario2();
    let mut worst: f64 = 0.0;
    for n in 0..blocks {
        let (scenario, configs): (&ScenarioSpec, &[EqualizerConfig]) = if n % 4 == 3 {
            (&s2, &[EqualizerConfig::MStar { states: 16 }, EqualizerConfig::ReducedState { reduced_memory: 1 }])
        } else {
            (
                &s1,
                &[
                    EqualizerConfig::MStar { states: 2 },
                    EqualizerConfig::MStar { states: 4 },
                    EqualizerConfig::ReducedState { reduced_memory: 1 },
                    EqualizerConfig::ReducedState { reduced_memory: 2 },
                ],
            )
        };
        let ebno = rng.random_range(0.0..6.0);
        let inst = scenario_instance(&mut rng, scenario, ebno);
        for &config in configs {
            let t = trellis(&inst, config);
            for s in &t.sections {
                let d = (s.mass_before_reduction.0 - s.mass_after_reduction.0).abs();
                if d > 1e-10 {
                    return Err(format!("block {n}, {config}, depth {}: mass changed by {d:e}", s.time));
                }
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("{blocks} blocks, max mass change {worst:.1e}"))
}

/// Counts of one-sided bit positions for M*-BCJR at each budget and for
/// M-BCJR at the smallest budget, over scenario-1 blocks.
pub fn branch_balance_counts(blocks: usize, seed: u64, budgets: &[usize]) -> (Vec<usize>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = ScenarioSpec::scenario1();
    let mut mstar = vec![0; budgets.len()];
    let mut m_bcjr = 0;
    for _ in 0..blocks {
        let ebno = rng.random_range(0.0..4.0);
        let inst = scenario_instance(&mut rng, &scenario, ebno);
        for (count, &m) in mstar.iter_mut().zip(budgets) {
            *count += trellis(&inst, EqualizerConfig::MStar { states: m }).one_sided_bits().len();
        }
        m_bcjr += trellis(&inst, EqualizerConfig::MBcjr { states: budgets[0] }).one_sided_bits().len();
    }
    (mstar, m_bcjr)
}

pub fn check_branch_balance(blocks: usize, seed: u64) -> CheckResult {
    let budgets = [2, 3, 4];
    let (mstar, m_bcjr) = branch_balance_counts(blocks, seed, &budgets);
    if mstar.iter().any(|&c| c > 0) {
        return Err(format!("M*-BCJR one-sided bits at M = {budgets:?}: {mstar:?}"));
    }
    if m_bcjr == 0 {
        return Err("negative control failed: M-BCJR (M=2) kept both labels everywhere".into());
    }
    Ok(format!(
        "{blocks} blocks: M*-BCJR one-sided bits {mstar:?}; M-BCJR(M=2) one-sided bits {m_bcjr}"
    ))
}

/// Branch count per M*-BCJR section equals survivors times labels, and the
/// survivor budget is respected.
pub fn check_mstar_structure(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..blocks {
        let memory = rng.random_range(1..=3);
        let inst = random_instance(&mut rng, Modulation::Bpsk, memory, 6);
        for m in 1..=4 {
            let t = trellis(&inst, EqualizerConfig::MStar { states: m });
            for s in &t.sections {
                if s.states.len() > m {
                    return Err(format!("instance {n}: {} survivors with M = {m}", s.states.len()));
                }
                let labels = if s.carries_symbol { 2 } else { 1 };
                if !s.branches.is_empty() && s.branches.len() != s.states.len() * labels {
                    return Err(format!(
                        "instance {n}, depth {}: {} branches from {} survivors",
                        s.time,
                        s.branches.len(),
                        s.states.len()
                    ));
                }
            }
        }
    }
    Ok(format!("{blocks} instances, M = 1..4"))
}

/// RS-BCJR on the scenario-1 channel with `S' = 2` keeps exactly four states
/// once the trellis has filled.
pub fn check_rs_structure(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = ScenarioSpec::scenario1();
    for n in 0..blocks {
        let inst = scenario_instance(&mut rng, &scenario, 2.0);
        let t = trellis(&inst, EqualizerConfig::ReducedState { reduced_memory: 2 });
        let counts = t.survivor_counts();
        // depths 3..=L+1 (1-based) carry two live symbols in the classes
        let interior = &counts[2..=t.block_len];
        if interior.iter().any(|&c| c != 4) {
            return Err(format!("block {n}: survivor counts {:?}", &counts[..8]));
        }
    }
    Ok(format!("{blocks} blocks, 4 survivors at every interior depth"))
}

/// M-BCJR and M*-BCJR against the linear-domain transcriptions.
pub fn check_reduced_vs_linear(instances: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 0..instances {
        let inst = random_instance(&mut rng, Modulation::Bpsk, 2, 6);
        for m in [1usize, 2, 3] {
            for (config, reduction) in [
                (EqualizerConfig::MBcjr { states: m }, LinearReduction::Delete(m)),
                (EqualizerConfig::MStar { states: m }, LinearReduction::Merge(m)),
            ] {
                let fast = trellis(&inst, config).aposteriori::<ExactLogAdd>();
                let slow = LinearTrellis::build(&inst.spec, &inst.received, &inst.apriori, reduction).aposteriori();
                let d = max_abs_diff(&fast, &slow);
                if d > 1e-9 {
                    return Err(format!("instance {n}, {config}: LLRs differ by {d:e}"));
                }
                worst = worst.max(d);
            }
        }
    }
    Ok(format!("{instances} instances, M = 1..3, max LLR error {worst:.1e}"))
}

/// Code decoder against codeword enumeration at `info_bits` information bits.
pub fn check_code_vs_enumeration(instances: usize, info_bits: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ConvCodeSpec::default();
    let mut worst: f64 = 0.0;
    for n in 0..instances {
        let apriori: Vec<f64> = (0..spec.coded_len(info_bits)).map(|_| rng.random_range(-3.0..3.0)).collect();
        let fast = decode_siso(&spec, &apriori).map_err(|e| e.to_string())?;
        let (coded, info) = oracle::code_map_by_enumeration(&spec, &apriori);
        let ext: Vec<f64> = coded.iter().zip(&apriori).map(|(l, la)| l - la).collect();
        let d = max_abs_diff(&fast.extrinsic_coded, &ext).max(max_abs_diff(&fast.aposteriori_info, &info));
        if d > 1e-9 {
            return Err(format!("instance {n}: decoder differs from enumeration by {d:e}"));
        }
        worst = worst.max(d);
        let flows = code_flows(&spec, &apriori).map_err(|e| e.to_string())?;
        let f = flows.iter().map(|x| (x - flows[0]).abs()).fold(0.0, f64::max) / flows[0].abs().max(1.0);
        if f > 1e-8 {
            return Err(format!("instance {n}: code trellis flow varies by {f:e}"));
        }
    }
    Ok(format!("{instances} instances at N_info = {info_bits}, max error {worst:.1e}"))
}

pub fn check_code_round_trip(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ConvCodeSpec::default();
    for n in 0..blocks {
        let info: Vec<u8> = (0..rng.random_range(1..200)).map(|_| rng.random_range(0..2u8)).collect();
        let c = encode(&spec, &info).map_err(|e| e.to_string())?;
        if c != oracle::encode_reference(&spec, &info) {
            return Err(format!("block {n}: encoder differs from the reference shift register"));
        }
        let apriori: Vec<f64> = c
            .iter()
            .map(|&b| (if b == 0 { 1.0 } else { -1.0 }) * rng.random_range(8.0..40.0))
            .collect();
        let out = decode_siso(&spec, &apriori).map_err(|e| e.to_string())?;
        if hard_decision(&out.aposteriori_info) != info {
            return Err(format!("block {n}: decoding failed"));
        }
    }
    Ok(format!("{blocks} blocks"))
}

pub fn check_interleavers() -> CheckResult {
    let mut spreads = Vec::new();
    for size in [1024, 4096] {
        let p = Permutation::default_drp(size).map_err(|e| e.to_string())?;
        let mut seen = vec![false; size];
        for &f in p.forward() {
            if std::mem::replace(&mut seen[f], true) {
                return Err(format!("size {size}: image {f} repeated"));
            }
        }
        let spread = p.min_adjacent_spread();
        if spread < 2 {
            return Err(format!("size {size}: spread {spread}"));
        }
        spreads.push(spread);
    }
    Ok(format!("DRP 1024/4096 bijective, adjacent spread {spreads:?}"))
}

pub fn check_gray_mapping() -> CheckResult {
    let q = Constellation::qam16_gray();
    let energy = q.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
    if (energy - 1.0).abs() > 1e-12 {
        return Err(format!("16QAM energy {energy}"));
    }
    let step = 2.0 / 10f64.sqrt();
    for a in 0..16u32 {
        for b in a + 1..16 {
            if ((q.point(a) - q.point(b)).norm() - step).abs() < 1e-9 && (a ^ b).count_ones() != 1 {
                return Err(format!("neighbors {a:04b} and {b:04b} differ in more than one bit"));
            }
        }
    }
    Ok("unit energy, Gray neighbors".into())
}

pub fn check_noise_calibration() -> CheckResult {
    let s1 = ScenarioSpec::scenario1();
    let v = noise_variance_for(0.0, &s1);
    if (v - 1024.0 / 1014.0).abs() > 1e-12 {
        return Err(format!("scenario 1 at 0 dB: {v}"));
    }
    let half = noise_variance_for(10.0 * 2f64.log10(), &s1);
    if (half - v / 2.0).abs() > 1e-6 {
        return Err(format!("+3.01 dB gave {half}"));
    }
    Ok(format!("sigma^2(0 dB) = {v:.5}"))
}

/// Encode, interleave, map, noiseless channel, exact BCJR, deinterleave,
/// decode.
pub fn check_noiseless_loopback(blocks: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for scenario in ScenarioSpec::builtin() {
        let rx = TurboReceiver::new(&scenario, 1e-9, EqualizerConfig::Exact).map_err(|e| e.to_string())?;
        for n in 0..blocks {
            let info: Vec<u8> = (0..scenario.info_bits).map(|_| rng.random_range(0..2u8)).collect();
            let received = rx.transmit(&info, &mut rng).map_err(|e| e.to_string())?;
            let eq = rx.equalizer().equalize(&received, &vec![0.0; scenario.coded_bits()]).map_err(|e| e.to_string())?;
            let dec_in = rx.permutation().deinterleave(&eq.extrinsic).map_err(|e| e.to_string())?;
            let dec = decode_siso(&scenario.code, &dec_in).map_err(|e| e.to_string())?;
            if hard_decision(&dec.aposteriori_info) != info {
                return Err(format!("{} block {n}: noiseless loopback failed", scenario.name));
            }
        }
    }
    Ok(format!("{blocks} blocks per scenario"))
}

pub fn check_brute_force_guard() -> CheckResult {
    let spec = ChannelSpec::new(vec![Complex64::new(1.0, 0.0)], 1.0, Constellation::bpsk()).map_err(|e| e.to_string())?;
    let n = BRUTE_FORCE_MAX_BITS + 1;
    match brute_force_posterior(&spec, &vec![Complex64::new(0.0, 0.0); n], &vec![0.0; n]) {
        Err(Error::BruteForceTooLarge { requested, .. }) if requested == n => Ok(format!("L*K = {n} rejected")),
        other => Err(format!("expected the size guard, got {other:?}")),
    }
}

/// Deliberately broken log addition (halved correction term) used as a
/// negative control.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorruptedLogAdd;

impl LogAdd for CorruptedLogAdd {
    fn add(a: LogProb, b: LogProb) -> LogProb {
        if a.is_zero() || b.is_zero() {
            return a.max(b);
        }
        LogProb(a.0.max(b.0) + (-(a.0 - b.0).abs() / 2.0).exp().ln_1p())
    }
}

pub fn check_fault_injection_detected() -> CheckResult {
    match check_flow_conservation_with::<CorruptedLogAdd>(1, 5) {
        Err(e) => Ok(format!("faulty log_sum caught: {e}")),
        Ok(_) => Err("flow conservation did not notice a broken log_sum".into()),
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .map(|o| {
                format!(
                    "[{}] {:<28} {:>7.2}s  {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.seconds,
                    o.detail
                )
            })
            .collect()
    }
}

type CheckFn = Box<dyn Fn() -> CheckResult>;

fn suite() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("log_sum", Box::new(check_log_sum)),
        ("successor_map", Box::new(check_successor_map)),
        ("branch_metric", Box::new(|| check_branch_metric(200, 11))),
        ("exact_vs_brute_force", Box::new(|| check_exact_vs_brute_force(100, 12))),
        ("recursions_linear", Box::new(|| check_recursions_linear(20, 13))),
        ("degenerate_reductions", Box::new(|| check_degenerate_reductions(1, 14))),
        ("flow_conservation", Box::new(|| check_flow_conservation(20, 15))),
        ("fault_injection", Box::new(check_fault_injection_detected)),
        ("mass_preservation", Box::new(|| check_mass_preservation(20, 16))),
        ("branch_balance", Box::new(|| check_branch_balance(50, 17))),
        ("mstar_structure", Box::new(|| check_mstar_structure(50, 18))),
        ("rs_structure", Box::new(|| check_rs_structure(5, 19))),
        ("reduced_vs_linear", Box::new(|| check_reduced_vs_linear(50, 20))),
        ("code_vs_enumeration", Box::new(|| check_code_vs_enumeration(5, 8, 21))),
        ("code_round_trip", Box::new(|| check_code_round_trip(200, 22))),
        ("interleavers", Box::new(check_interleavers)),
        ("gray_mapping", Box::new(check_gray_mapping)),
        ("noise_calibration", Box::new(check_noise_calibration)),
        ("noiseless_loopback", Box::new(|| check_noiseless_loopback(10, 23))),
        ("brute_force_guard", Box::new(check_brute_force_guard)),
    ]
}

/// Runs every check; a panic inside a check counts as a failure.
pub fn run_verification_suite() -> VerificationReport {
    run_verification_suite_with(|_| {})
}

pub fn run_verification_suite_with(mut on_outcome: impl FnMut(&CheckOutcome)) -> VerificationReport {
    let mut report = VerificationReport::default();
    for (name, check) in suite() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("check panicked".into()));
        let outcome = CheckOutcome {
            name,
            passed: result.is_ok(),
            detail: result.unwrap_or_else(|e| e),
            seconds: start.elapsed().as_secs_f64(),
        };
        on_outcome(&outcome);
        report.outcomes.push(outcome);
    }
    report
}
