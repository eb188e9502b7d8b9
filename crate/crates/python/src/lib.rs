//! Python bindings for the time-bin photon-spin entanglement simulator.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tpc_core::analysis::{fidelity_bound as core_bound, Correlations};
use tpc_core::protocol::{restrict_spin, stabilizer_check};
use tpc_core::rates::chain_rate as core_chain_rate;
use tpc_core::{
    analyze as core_analyze, build_sequence, read_records, run_ideal, simulate_cycles, write_records, Calibration,
    ClickRecord, Error, McSetup, PrepSign, RunConfig,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Full run configuration, editable through its TOML text.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(text) => RunConfig::parse(text).map_err(py_err)?,
            None => RunConfig::default(),
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::load(path).map_err(py_err)? })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn n_photons(&self) -> usize {
        self.inner.protocol.n_photons
    }

    #[setter]
    fn set_n_photons(&mut self, n: usize) {
        self.inner.protocol.n_photons = n;
    }

    #[getter]
    fn zpl_efficiency(&self) -> f64 {
        self.inner.detection.zpl_efficiency
    }

    #[setter]
    fn set_zpl_efficiency(&mut self, eta: f64) {
        self.inner.detection.zpl_efficiency = eta;
    }

    #[getter]
    fn background_rate_hz(&self) -> f64 {
        self.inner.detection.background_rate_hz
    }

    #[setter]
    fn set_background_rate_hz(&mut self, rate: f64) {
        self.inner.detection.background_rate_hz = rate;
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={}, n_photons={})", self.inner.seed, self.inner.protocol.n_photons)
    }
}

/// Detector click records produced by a simulation or read from CSV.
#[pyclass(name = "Records")]
struct PyRecords {
    inner: Vec<ClickRecord>,
}

#[pymethods]
impl PyRecords {
    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self { inner: read_records(std::io::BufReader::new(file)).map_err(py_err)? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        write_records(std::io::BufWriter::new(file), &self.inner).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Rows as tuples in CSV column order.
    fn rows(&self) -> Vec<(u64, String, String, f64, f64, String, bool)> {
        self.inner
            .iter()
            .map(|r| {
                (
                    r.cycle_id,
                    r.port.to_string(),
                    r.arrival_class.to_string(),
                    r.t_ns,
                    r.phase_rad,
                    r.prep_sign.to_string(),
                    r.readout_click,
                )
            })
            .collect()
    }
}

/// Runs the event-level Monte Carlo for `cycles` repetitions.
#[pyfunction]
#[pyo3(signature = (config, cycles, seed = None, workers = 0))]
fn simulate(py: Python<'_>, config: &PyConfig, cycles: u64, seed: Option<u64>, workers: usize) -> PyResult<PyRecords> {
    let cfg = config.inner.clone();
    let seed = seed.unwrap_or(cfg.seed);
    let sim = py
        .detach(move || {
            let setup = McSetup::new(cfg.emitter, cfg.interferometer, cfg.protocol, cfg.detection)?;
            simulate_cycles(cycles, &setup, seed, workers)
        })
        .map_err(py_err)?;
    Ok(PyRecords { inner: sim.records })
}

fn correlations_dict<'py>(py: Python<'py>, c: &Correlations) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let d = pyo3::types::PyDict::new(py);
    d.set_item("c_zz", (c.c_zz.value, c.c_zz.error))?;
    d.set_item("c_xx", (c.c_xx.value, c.c_xx.error))?;
    d.set_item("f_bound", (c.f_bound.value, c.f_bound.error))?;
    d.set_item("significance", c.significance)?;
    let rho: Vec<(f64, f64)> = c.rho.iter().map(|e| (e.value, e.error)).collect();
    d.set_item("rho", rho)?;
    Ok(d)
}

/// Correlation analysis; returns a dict with `raw` and `corrected` sub-dicts.
#[pyfunction]
#[pyo3(signature = (records, config, auto_background = false))]
fn analyze<'py>(
    py: Python<'py>,
    records: &PyRecords,
    config: &PyConfig,
    auto_background: bool,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let cfg = &config.inner;
    let mut acfg = cfg.analysis.clone();
    acfg.auto_background |= auto_background;
    let cal = Calibration::new(&cfg.emitter, &cfg.detection, &cfg.interferometer);
    let report = core_analyze(&records.inner, &cal, &acfg).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("single_click_cycles", report.single_click_cycles)?;
    d.set_item("erased_events", report.erased_events)?;
    d.set_item("background_erased", report.background_erased)?;
    d.set_item("raw", correlations_dict(py, &report.raw)?)?;
    d.set_item("corrected", correlations_dict(py, &report.corrected)?)?;
    d.set_item("report", report.to_string())?;
    Ok(d)
}

/// Noiseless spin-photon state as a row-major list of complex density-matrix entries.
#[pyfunction]
#[pyo3(signature = (n_photons = 1, prep_sign = "minus", phase = 0.0))]
fn ideal_state(n_photons: usize, prep_sign: &str, phase: f64) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let mut cfg = RunConfig::default();
    cfg.protocol.n_photons = n_photons;
    cfg.protocol.prep_sign = prep_sign.parse::<PrepSign>().map_err(PyValueError::new_err)?;
    let seq = build_sequence(&cfg.protocol, &cfg.interferometer).map_err(py_err)?;
    let state = restrict_spin(&run_ideal(&seq, phase).map_err(py_err)?.state).map_err(py_err)?;
    let rho = state.density_matrix();
    Ok((0..rho.nrows()).map(|i| (0..rho.ncols()).map(|j| (rho[(i, j)].re, rho[(i, j)].im)).collect()).collect())
}

/// Stabilizer generators of the ideal chain with their simulated expectation values.
#[pyfunction]
#[pyo3(signature = (n_photons, prep_sign = "minus"))]
fn stabilizers(n_photons: usize, prep_sign: &str) -> PyResult<Vec<(String, f64)>> {
    let mut cfg = RunConfig::default();
    cfg.protocol.n_photons = n_photons;
    cfg.protocol.prep_sign = prep_sign.parse::<PrepSign>().map_err(PyValueError::new_err)?;
    let seq = build_sequence(&cfg.protocol, &cfg.interferometer).map_err(py_err)?;
    let checks = stabilizer_check(&seq).map_err(py_err)?;
    Ok(checks.into_iter().map(|(g, v)| (g.to_string(), v)).collect())
}

/// Heralded n-photon chain rate for per-photon efficiency and sequence duration.
#[pyfunction]
fn chain_rate(efficiency: f64, duration_s: f64, n: usize) -> f64 {
    core_chain_rate(efficiency, duration_s, n)
}

/// Lower bound on the Bell-state fidelity from diagonal populations and C_xx.
#[pyfunction]
fn fidelity_bound(rho: [f64; 4], c_xx: f64) -> f64 {
    core_bound(rho, c_xx)
}

#[pymodule]
fn tpc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRecords>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_state, m)?)?;
    m.add_function(wrap_pyfunction!(stabilizers, m)?)?;
    m.add_function(wrap_pyfunction!(chain_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_bound, m)?)?;
    Ok(())
}
