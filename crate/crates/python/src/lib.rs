//! Python bindings: `import turboeq`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use turboeq::config::{load_sweep, parse_scenario, scenario_to_toml};
use turboeq::equalizer::{Equalizer as CoreEqualizer, EqualizerConfig};
use turboeq::sweep::{run_sweep as core_run_sweep, simulate_point as core_simulate_point, StoppingRule};
use turboeq::turbo::block_rng;
use turboeq::{ChannelSpec, ConvCodeSpec, Modulation, Permutation as CorePermutation, ScenarioSpec};

fn err(e: turboeq::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn modulation(name: &str) -> PyResult<Modulation> {
    match name {
        "bpsk" => Ok(Modulation::Bpsk),
        "qam16" => Ok(Modulation::Qam16),
        other => Err(PyValueError::new_err(format!("unknown modulation {other:?}"))),
    }
}

fn equalizer_config(text: &str) -> PyResult<EqualizerConfig> {
    text.parse().map_err(err)
}

/// FIR channel with complex taps, AWGN variance and a constellation.
#[pyclass(frozen)]
struct Channel {
    inner: ChannelSpec,
}

#[pymethods]
impl Channel {
    #[new]
    #[pyo3(signature = (taps, noise_variance, modulation = "bpsk"))]
    fn new(taps: Vec<Complex64>, noise_variance: f64, modulation: &str) -> PyResult<Self> {
        let constellation = self::modulation(modulation)?.constellation();
        Ok(Self {
            inner: ChannelSpec::new(taps, noise_variance, constellation).map_err(err)?,
        })
    }

    #[getter]
    fn taps(&self) -> Vec<Complex64> {
        self.inner.taps().to_vec()
    }

    #[getter]
    fn memory(&self) -> usize {
        self.inner.memory()
    }

    #[getter]
    fn noise_variance(&self) -> f64 {
        self.inner.noise_variance()
    }

    #[getter]
    fn bits_per_symbol(&self) -> usize {
        self.inner.bits_per_symbol()
    }

    #[getter]
    fn full_state_count(&self) -> usize {
        self.inner.full_state_count()
    }

    /// Noisy output for the given symbols (the `L+S` samples including the
    /// tail).
    fn transmit(&self, symbols: Vec<Complex64>, seed: u64) -> Vec<Complex64> {
        turboeq::apply_channel(&self.inner, &symbols, seed)
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(memory={}, noise_variance={}, bits_per_symbol={})",
            self.inner.memory(),
            self.inner.noise_variance(),
            self.inner.bits_per_symbol()
        )
    }
}

/// One of `exact`, `rs:S'`, `m:M`, `mstar:M` bound to a channel.
#[pyclass(frozen)]
struct Equalizer {
    inner: CoreEqualizer,
}

#[pymethods]
impl Equalizer {
    #[new]
    fn new(channel: &Channel, config: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreEqualizer::new(&channel.inner, equalizer_config(config)?).map_err(err)?,
        })
    }

    #[getter]
    fn config(&self) -> String {
        self.inner.config().to_string()
    }

    /// Returns `(aposteriori, extrinsic)` LLR lists.
    fn equalize(&self, received: Vec<Complex64>, apriori: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let out = self.inner.equalize(&received, &apriori).map_err(err)?;
        Ok((out.aposteriori, out.extrinsic))
    }

    /// Per-section survivor and branch counts, per-section flows and the
    /// bit positions left with a single label.
    fn trellis_stats<'py>(
        &self,
        py: Python<'py>,
        received: Vec<Complex64>,
        apriori: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = self.inner.trellis(&received, &apriori).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("survivors", t.survivor_counts())?;
        d.set_item("branches", t.branch_counts())?;
        d.set_item("flows", t.flows())?;
        d.set_item("one_sided_bits", t.one_sided_bits())?;
        Ok(d)
    }
}

/// Exact a posteriori LLRs by enumeration (tiny blocks only).
#[pyfunction]
fn brute_force_posterior(channel: &Channel, received: Vec<Complex64>, apriori: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(turboeq::brute_force_posterior(&channel.inner, &received, &apriori)
        .map_err(err)?
        .aposteriori)
}

/// Maps bits (0/1) to symbols; bit 0 is the positive amplitude.
#[pyfunction]
#[pyo3(signature = (bits, modulation = "bpsk"))]
fn map_symbols(bits: Vec<u8>, modulation: &str) -> PyResult<Vec<Complex64>> {
    turboeq::map_symbols(self::modulation(modulation)?, &bits).map_err(err)
}

fn code_spec(memory: usize, feedback: u32, feedforward: u32) -> PyResult<ConvCodeSpec> {
    let spec = ConvCodeSpec {
        memory,
        feedback,
        feedforward,
        ..ConvCodeSpec::default()
    };
    spec.validate().map_err(err)?;
    Ok(spec)
}

/// Terminated RSC encoding; returns interleaved (systematic, parity) bits.
#[pyfunction]
#[pyo3(signature = (info, memory = 5, feedback = 0o67, feedforward = 0o45))]
fn encode(info: Vec<u8>, memory: usize, feedback: u32, feedforward: u32) -> PyResult<Vec<u8>> {
    turboeq::encode(&code_spec(memory, feedback, feedforward)?, &info).map_err(err)
}

/// Log-MAP decoding; returns `(extrinsic_coded, aposteriori_info)`.
#[pyfunction]
#[pyo3(signature = (apriori_coded, memory = 5, feedback = 0o67, feedforward = 0o45))]
fn decode_siso(
    apriori_coded: Vec<f64>,
    memory: usize,
    feedback: u32,
    feedforward: u32,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let out = turboeq::decode_siso(&code_spec(memory, feedback, feedforward)?, &apriori_coded).map_err(err)?;
    Ok((out.extrinsic_coded, out.aposteriori_info))
}

#[pyclass(frozen)]
struct Permutation {
    inner: CorePermutation,
}

#[pymethods]
impl Permutation {
    #[new]
    fn new(forward: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: CorePermutation::new(forward).map_err(err)?,
        })
    }

    #[staticmethod]
    fn drp(size: usize) -> PyResult<Self> {
        Ok(Self {
            inner: CorePermutation::default_drp(size).map_err(err)?,
        })
    }

    #[staticmethod]
    fn random(size: usize, seed: u64) -> Self {
        Self {
            inner: CorePermutation::random(size, seed),
        }
    }

    #[getter]
    fn forward(&self) -> Vec<usize> {
        self.inner.forward().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn interleave(&self, seq: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.interleave(&seq).map_err(err)
    }

    fn deinterleave(&self, seq: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.deinterleave(&seq).map_err(err)
    }

    fn min_adjacent_spread(&self) -> usize {
        self.inner.min_adjacent_spread()
    }
}

#[pyclass(frozen)]
struct Scenario {
    inner: ScenarioSpec,
}

#[pymethods]
impl Scenario {
    /// A built-in scenario by name (`scenario1`, `scenario2`).
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        ScenarioSpec::builtin_named(name)
            .map(|inner| Self { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown scenario {name:?}")))
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_scenario(text).map_err(err)?,
        })
    }

    fn to_toml(&self) -> String {
        scenario_to_toml(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn info_bits(&self) -> usize {
        self.inner.info_bits
    }

    #[getter]
    fn coded_bits(&self) -> usize {
        self.inner.coded_bits()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn ebno_db(&self) -> Vec<f64> {
        self.inner.ebno_db.clone()
    }

    fn noise_variance(&self, ebno_db: f64) -> f64 {
        turboeq::noise_variance_for(ebno_db, &self.inner)
    }

    fn channel(&self, noise_variance: f64) -> PyResult<Channel> {
        Ok(Channel {
            inner: self.inner.channel(noise_variance).map_err(err)?,
        })
    }

    fn permutation(&self) -> PyResult<Permutation> {
        Ok(Permutation {
            inner: self.inner.permutation().map_err(err)?,
        })
    }

    /// Runs one block through the turbo receiver; returns final-iteration
    /// bit errors per iteration.
    fn simulate_block(&self, equalizer: &str, ebno_db: f64, seed: u64, block: u64) -> PyResult<Vec<usize>> {
        let rx = turboeq::TurboReceiver::new(
            &self.inner,
            turboeq::noise_variance_for(ebno_db, &self.inner),
            equalizer_config(equalizer)?,
        )
        .map_err(err)?;
        Ok(rx.simulate_block(&mut block_rng(seed, block)).map_err(err)?.bit_errors)
    }

    /// Simulates one sweep point; returns bit errors per iteration and the
    /// number of blocks.
    #[pyo3(signature = (equalizer, ebno_db, min_errors, max_blocks, seed = 0))]
    fn simulate_point(
        &self,
        py: Python<'_>,
        equalizer: &str,
        ebno_db: f64,
        min_errors: u64,
        max_blocks: u64,
        seed: u64,
    ) -> PyResult<(Vec<u64>, u64)> {
        let config = equalizer_config(equalizer)?;
        let stopping = StoppingRule { min_errors, max_blocks };
        let scenario = &self.inner;
        let point = py
            .detach(|| core_simulate_point(scenario, config, ebno_db, stopping, seed))
            .map_err(err)?;
        Ok((point.bit_errors, point.blocks))
    }
}

/// Runs a sweep file and returns its rows as dicts.
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, config_path: std::path::PathBuf) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = load_sweep(&config_path).map_err(err)?;
    let records = py.detach(|| core_run_sweep(&cfg)).map_err(err)?;
    records
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scenario", r.scenario)?;
            d.set_item("algorithm", r.algorithm)?;
            d.set_item("budget", r.budget)?;
            d.set_item("ebno_db", r.ebno_db)?;
            d.set_item("iteration", r.iteration)?;
            d.set_item("bit_errors", r.bit_errors)?;
            d.set_item("bits", r.bits)?;
            d.set_item("frames", r.frames)?;
            d.set_item("frame_errors", r.frame_errors)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

/// Eb/N0 at which a `(ebno_db, ber)` curve reaches `target`.
#[pyfunction]
fn ebno_at_target(curve: Vec<(f64, f64)>, target: f64) -> Option<f64> {
    turboeq::sweep::ebno_at_target(&curve, target)
}

/// Runs the verification suite; returns `(all_passed, report_lines)`.
#[pyfunction]
fn verify(py: Python<'_>) -> (bool, Vec<String>) {
    let report = py.detach(turboeq::verify::run_verification_suite);
    (report.all_passed(), report.lines())
}

#[pymodule(name = "turboeq")]
fn turboeq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_class::<Equalizer>()?;
    m.add_class::<Permutation>()?;
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(brute_force_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(map_symbols, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode_siso, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(ebno_at_target, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
