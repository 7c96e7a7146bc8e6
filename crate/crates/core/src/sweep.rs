//! Monte-Carlo Eb/N0 sweeps and BER tables.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equalizer::EqualizerConfig;
use crate::link::{noise_variance_for, ScenarioSpec};
use crate::turbo::{block_rng, IterationTrace, TurboReceiver};
use crate::{Error, Result};

/// Blocks simulated between two checks of the stopping rule. Fixed so that
/// results do not depend on the thread count.
pub const BATCH_BLOCKS: u64 = 16;

/// Smallest `min_errors` accepted without an explicit override.
pub const MIN_ERRORS_FLOOR: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingRule {
    /// Stop once the final iteration has accumulated this many bit errors...
    pub min_errors: u64,
    /// ...or after this many blocks.
    pub max_blocks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioSpec,
    pub equalizers: Vec<EqualizerConfig>,
    pub ebno_db: Vec<f64>,
    pub stopping: StoppingRule,
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Checks everything except the `min_errors` floor, which
    /// [`SweepConfig::validate`] adds.
    pub fn validate_with_override(&self, allow_few_errors: bool) -> Result<()> {
        self.scenario.validate()?;
        if self.equalizers.is_empty() {
            return Err(Error::Config("at least one equalizer is required".into()));
        }
        let channel = self.scenario.channel(1.0)?;
        for eq in &self.equalizers {
            eq.validate(&channel)?;
        }
        if self.ebno_db.is_empty() || self.ebno_db.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("Eb/N0 grid must be a non-empty list of finite values".into()));
        }
        if self.stopping.max_blocks == 0 {
            return Err(Error::Config("max_blocks must be positive".into()));
        }
        if self.stopping.min_errors < MIN_ERRORS_FLOOR && !allow_few_errors {
            return Err(Error::Config(format!(
                "min_errors = {} is below {MIN_ERRORS_FLOOR}; set allow_few_errors = true to override",
                self.stopping.min_errors
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_override(false)
    }
}

/// One CSV row: the errors counted at one iteration of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub scenario: String,
    pub algorithm: String,
    /// Maximum number of trellis states the equalizer keeps.
    pub budget: usize,
    pub ebno_db: f64,
    /// 1-based.
    pub iteration: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub frames: u64,
    pub frame_errors: u64,
    pub seed: u64,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// Accumulated counts for one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub equalizer: EqualizerConfig,
    pub ebno_db: f64,
    pub blocks: u64,
    pub bit_errors: Vec<u64>,
    pub frame_errors: Vec<u64>,
}

impl PointResult {
    fn new(equalizer: EqualizerConfig, ebno_db: f64, iterations: usize) -> Self {
        Self {
            equalizer,
            ebno_db,
            blocks: 0,
            bit_errors: vec![0; iterations],
            frame_errors: vec![0; iterations],
        }
    }

    fn add(&mut self, trace: &IterationTrace) {
        self.blocks += 1;
        for (i, (&e, &f)) in trace.bit_errors.iter().zip(&trace.frame_errors).enumerate() {
            self.bit_errors[i] += e as u64;
            self.frame_errors[i] += u64::from(f);
        }
    }

    pub fn final_errors(&self) -> u64 {
        self.bit_errors.last().copied().unwrap_or(0)
    }

    pub fn records(&self, scenario: &ScenarioSpec, seed: u64) -> Vec<BerRecord> {
        let k = scenario.modulation.bits_per_symbol();
        let memory = scenario.taps.len() - 1;
        (0..self.bit_errors.len())
            .map(|i| BerRecord {
                scenario: scenario.name.clone(),
                algorithm: self.equalizer.algorithm().to_string(),
                budget: self.equalizer.effective_states(k, memory),
                ebno_db: self.ebno_db,
                iteration: i + 1,
                bit_errors: self.bit_errors[i],
                bits: self.blocks * scenario.info_bits as u64,
                frames: self.blocks,
                frame_errors: self.frame_errors[i],
                seed,
            })
            .collect()
    }
}

/// Simulates one point until the stopping rule fires.
pub fn simulate_point(
    scenario: &ScenarioSpec,
    equalizer: EqualizerConfig,
    ebno_db: f64,
    stopping: StoppingRule,
    seed: u64,
) -> Result<PointResult> {
    let mut point = PointResult::new(equalizer, ebno_db, scenario.iterations);
    extend_point(&mut point, scenario, stopping, seed)?;
    Ok(point)
}

/// Continues a point with the blocks that follow the ones already counted,
/// until the (possibly tighter) stopping rule fires.
pub fn extend_point(point: &mut PointResult, scenario: &ScenarioSpec, stopping: StoppingRule, seed: u64) -> Result<()> {
    let rx = TurboReceiver::new(scenario, noise_variance_for(point.ebno_db, scenario), point.equalizer)?;
    let mut first = true;
    while point.blocks < stopping.max_blocks && point.final_errors() < stopping.min_errors.max(1) {
        if stopping.min_errors == 0 && !first {
            break;
        }
        first = false;
        let start = point.blocks;
        let end = (start + BATCH_BLOCKS).min(stopping.max_blocks);
        let traces = (start..end)
            .into_par_iter()
            .map(|b| rx.simulate_block(&mut block_rng(seed, b)))
            .collect::<Result<Vec<_>>>()?;
        for t in &traces {
            point.add(t);
        }
    }
    Ok(())
}

/// Runs every (equalizer, Eb/N0) point and returns one record per iteration.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BerRecord>> {
    run_sweep_with_progress(cfg, |_| {})
}

pub fn run_sweep_with_progress(cfg: &SweepConfig, mut on_point: impl FnMut(&PointResult)) -> Result<Vec<BerRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut records = Vec::new();
    for &eq in &cfg.equalizers {
        for &ebno in &cfg.ebno_db {
            let point = pool.install(|| simulate_point(&cfg.scenario, eq, ebno, cfg.stopping, cfg.seed))?;
            on_point(&point);
            records.extend(point.records(&cfg.scenario, cfg.seed));
        }
    }
    Ok(records)
}

pub fn write_csv<W: Write>(writer: W, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv_file(path: &Path, records: &[BerRecord]) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(file, records)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<BerRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// `(Eb/N0, BER)` pairs for one algorithm, budget and iteration, sorted by
/// Eb/N0.
pub fn ber_curve(records: &[BerRecord], algorithm: &str, budget: usize, iteration: usize) -> Vec<(f64, f64)> {
    let mut curve: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.algorithm == algorithm && r.budget == budget && r.iteration == iteration)
        .map(|r| (r.ebno_db, r.ber()))
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    curve
}

/// Eb/N0 at which the curve first falls to `target`, by linear
/// interpolation of `log10(BER)` between the bracketing points. Points
/// without errors carry no slope information and are skipped.
pub fn ebno_at_target(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().copied().filter(|&(_, ber)| ber > 0.0).collect();
    pts.windows(2)
        .find_map(|w| {
            let ((x0, b0), (x1, b1)) = (w[0], w[1]);
            if b0 == target {
                Some(x0)
            } else if b0 > target && b1 <= target {
                let (l0, l1, lt) = (b0.log10(), b1.log10(), target.log10());
                Some(x0 + (lt - l0) * (x1 - x0) / (l1 - l0))
            } else {
                None
            }
        })
        .or_else(|| pts.last().filter(|p| p.1 == target).map(|p| p.0))
}
