//! Python module `wtot`.
//!
//! Bit strings cross the boundary as text of '0'/'1' characters.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wtot_core::analysis::{self, AttackerId};
use wtot_core::bounds::{self, RateConstants};
use wtot_core::channel::{self, ChannelParams};
use wtot_core::protocol::{self, OtInputs, ProtocolConfig, ProtocolRun};
use wtot_core::rng::{substream, Stream};
use wtot_core::{BitVec, LinearHash};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bits(text: &str) -> PyResult<BitVec> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(value_error(format!("bit strings hold only '0' and '1', found {other:?}"))),
        })
        .collect::<PyResult<Vec<_>>>()
        .map(BitVec::from_bools)
}

fn show_bits(bits: &BitVec) -> String {
    bits.iter().map(|b| if b { '1' } else { '0' }).collect()
}

#[pyclass(name = "ChannelParams", module = "wtot", frozen)]
struct PyChannelParams {
    inner: ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    fn new(eps1: f64, eps2: f64, eps3: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ChannelParams::new(eps1, eps2, eps3).map_err(value_error)?,
        })
    }

    #[getter]
    fn eps1(&self) -> f64 {
        self.inner.eps1
    }

    #[getter]
    fn eps2(&self) -> f64 {
        self.inner.eps2
    }

    #[getter]
    fn eps3(&self) -> f64 {
        self.inner.eps3
    }

    /// (P[both see X], P[only Eve erased], P[only Bob erased], P[both erased]).
    fn joint_law(&self) -> (f64, f64, f64, f64) {
        let d = channel::joint_law(&self.inner);
        (d.p_ok_ok, d.p_ok_e, d.p_e_ok, d.p_e_e)
    }

    fn upper_bound(&self) -> f64 {
        bounds::upper_bound(&self.inner)
    }

    /// None when eps2 < eps3.
    fn lower_bound(&self) -> Option<f64> {
        bounds::lower_bound_besbc(&self.inner)
    }

    fn corollary_rate(&self) -> f64 {
        bounds::corollary_rate(&self.inner)
    }

    /// (rate, (gamma1, gamma2, tau1, tau2)).
    fn general_lower_bound(&self) -> PyResult<(f64, (f64, f64, f64, f64))> {
        let lb = bounds::general_lower_bound(&RateConstants::besbc(&self.inner), self.inner.eps1).map_err(value_error)?;
        let a = lb.argmax;
        Ok((lb.rate, (a.gamma1, a.gamma2, a.tau1, a.tau2)))
    }

    fn __repr__(&self) -> String {
        format!("ChannelParams({}, {}, {})", self.inner.eps1, self.inner.eps2, self.inner.eps3)
    }
}

#[pyclass(name = "LinearHash", module = "wtot", frozen)]
struct PyLinearHash {
    inner: LinearHash,
}

#[pymethods]
impl PyLinearHash {
    #[staticmethod]
    fn sample(input_len: usize, output_len: usize, seed: u64) -> PyResult<Self> {
        let mut rng = substream(seed, Stream::Alice);
        Ok(Self {
            inner: LinearHash::sample(input_len, output_len, &mut rng).map_err(value_error)?,
        })
    }

    /// From the `<l>,<m>:<hex>` text form.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: text.parse().map_err(value_error)?,
        })
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn apply(&self, bits: &str) -> PyResult<String> {
        let out = self.inner.apply(&parse_bits(bits)?).map_err(value_error)?;
        Ok(show_bits(&out))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(name = "ProtocolConfig", module = "wtot", frozen)]
struct PyProtocolConfig {
    inner: ProtocolConfig,
}

#[pymethods]
impl PyProtocolConfig {
    /// Rate is `rate` if given, else `rate_fraction` times the upper bound.
    #[new]
    #[pyo3(signature = (
        n, channel, rate=None, rate_fraction=0.8, seed=0,
        alpha=ProtocolConfig::DEFAULT_ALPHA, delta=ProtocolConfig::DEFAULT_DELTA,
        delta_bar=ProtocolConfig::DEFAULT_DELTA_BAR, delta_tilde=ProtocolConfig::DEFAULT_DELTA_TILDE,
        max_resends=ProtocolConfig::DEFAULT_MAX_RESENDS, order_mask=true,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        channel: &PyChannelParams,
        rate: Option<f64>,
        rate_fraction: f64,
        seed: u64,
        alpha: f64,
        delta: f64,
        delta_bar: f64,
        delta_tilde: f64,
        max_resends: usize,
        order_mask: bool,
    ) -> PyResult<Self> {
        let mut inner = match rate {
            Some(r) => ProtocolConfig::new(n, r, channel.inner),
            None => ProtocolConfig::at_fraction_of_capacity(n, rate_fraction, channel.inner),
        }
        .with_seed(seed)
        .with_slacks(alpha, delta, delta_bar, delta_tilde)
        .with_max_resends(max_resends);
        if !order_mask {
            inner = inner.without_order_mask();
        }
        protocol::derive_dimensions(&inner).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self {
            inner: self.inner.with_seed(seed),
        }
    }

    /// Set sizes, string length and which construction of B applies.
    fn dimensions<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = protocol::derive_dimensions(&self.inner).map_err(value_error)?;
        let out = PyDict::new(py);
        out.set_item("n", d.n)?;
        out.set_item("n_alpha", d.n_alpha)?;
        out.set_item("n_beta", d.n_beta)?;
        out.set_item("k", d.k)?;
        out.set_item("f_alpha_out", d.f_alpha_out)?;
        out.set_item("case", d.case.id())?;
        out.set_item("overlap", d.overlap)?;
        Ok(out)
    }
}

#[pyclass(name = "ProtocolRun", module = "wtot", frozen)]
struct PyProtocolRun {
    inner: ProtocolRun,
}

#[pymethods]
impl PyProtocolRun {
    #[getter]
    fn succeeded(&self) -> bool {
        self.inner.succeeded()
    }

    #[getter]
    fn c(&self) -> bool {
        self.inner.inputs.c
    }

    #[getter]
    fn k0(&self) -> String {
        show_bits(&self.inner.inputs.k0)
    }

    #[getter]
    fn k1(&self) -> String {
        show_bits(&self.inner.inputs.k1)
    }

    #[getter]
    fn k_hat(&self) -> String {
        show_bits(&self.inner.k_hat)
    }

    #[getter]
    fn resend_count(&self) -> usize {
        self.inner.resend_count
    }

    #[getter]
    fn order_bits_agree(&self) -> bool {
        self.inner.s_alice == self.inner.s_bob
    }

    fn transcript_jsonl(&self) -> String {
        self.inner.transcript.to_jsonl()
    }

    fn transcript_bits(&self) -> u64 {
        self.inner.transcript.size_bits()
    }

    /// (Bob erasures in the unselected set, Eve erasures there outside
    /// L0 ∩ L1, nr).
    fn erasure_audit(&self) -> (usize, usize, f64) {
        let a = analysis::renyi_erasure_audit(&self.inner);
        (a.bob_erased, a.eve_erased_outside_overlap, a.threshold)
    }
}

/// One execution with uniform inputs drawn from the config's seed; `c`
/// overrides the choice bit.
#[pyfunction]
#[pyo3(signature = (config, c=None))]
fn run_protocol(config: &PyProtocolConfig, c: Option<bool>) -> PyResult<PyProtocolRun> {
    let mut inputs = OtInputs::for_config(&config.inner).map_err(value_error)?;
    if let Some(c) = c {
        inputs.c = c;
    }
    let inner = protocol::run_protocol(&config.inner, &inputs).map_err(value_error)?;
    Ok(PyProtocolRun { inner })
}

/// Streams `trials` runs and returns totals plus per-attacker
/// `(accuracy, ci_halfwidth)`.
#[pyfunction]
#[pyo3(signature = (config, trials, attackers=Vec::new(), seed=0))]
fn simulate_attacks<'py>(
    py: Python<'py>,
    config: &PyProtocolConfig,
    trials: u64,
    attackers: Vec<String>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ids = attackers
        .iter()
        .map(|a| a.parse::<AttackerId>().map_err(value_error))
        .collect::<PyResult<Vec<_>>>()?;
    let inner = config.inner;
    let report = py
        .detach(|| analysis::simulate_attacks(&inner, trials, &ids, seed))
        .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("trials", report.trials)?;
    out.set_item("completed", report.completed)?;
    out.set_item("decoding_errors", report.decoding_errors)?;
    out.set_item("order_bit_mismatches", report.order_bit_mismatches)?;
    out.set_item("abort_rate", report.aborts.rate())?;
    out.set_item("chernoff_bound", report.chernoff_bound)?;
    out.set_item("bob_audit_failures", report.bob_audit_failures)?;
    out.set_item("eve_audit_failures", report.eve_audit_failures)?;
    let attacks = PyDict::new(py);
    for (id, e) in &report.attacks {
        attacks.set_item(id.name(), (e.accuracy, e.ci_halfwidth))?;
    }
    out.set_item("attacks", attacks)?;
    Ok(out)
}

/// (bits, bias) of the plug-in mutual information of paired symbols.
#[pyfunction]
fn plugin_mi(samples: Vec<(usize, usize)>, size_a: usize, size_b: usize) -> PyResult<(f64, f64)> {
    let mi = analysis::plugin_mi(&samples, size_a, size_b).map_err(value_error)?;
    Ok((mi.bits, mi.bias))
}

#[pymodule]
fn wtot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyLinearHash>()?;
    m.add_class::<PyProtocolConfig>()?;
    m.add_class::<PyProtocolRun>()?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_attacks, m)?)?;
    m.add_function(wrap_pyfunction!(plugin_mi, m)?)?;
    m.add("ATTACKERS", AttackerId::ALL.map(AttackerId::name).to_vec())?;
    Ok(())
}
