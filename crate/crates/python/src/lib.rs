//! Python bindings: deployments, pilot books, closed-form link evaluation,
//! power control, figure sweeps and the self-check suite.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use coexist_core::estimation::{self, BookKind, NmseConfig};
use coexist_core::harness::{self, ExperimentSpec, FigureId, ValidationOptions};
use coexist_core::pilots::{self, Estimator};
use coexist_core::powerctl::{self, HumanTargetMode, RatePoint, RegionSetup};
use coexist_core::rates::{self, Receiver, Scheme, SchemeConfig};
use coexist_core::scenario::{self, SystemParams};
use coexist_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        Error::Numerical(_) | Error::Csv(_) | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn human_mode(s: &str) -> PyResult<HumanTargetMode> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(HumanTargetMode::Exact),
        "per-phase" | "per_phase" => Ok(HumanTargetMode::PerPhase),
        other => Err(PyValueError::new_err(format!("unknown human mode `{other}` (expected exact or per-phase)"))),
    }
}

/// Path loss in dB at a distance in meters.
#[pyfunction]
fn path_loss_db(distance_m: f64) -> PyResult<f64> {
    scenario::path_loss_db(distance_m).map_err(to_py)
}

/// Linear large-scale gain at a distance in meters.
#[pyfunction]
fn beta_from_distance(distance_m: f64) -> PyResult<f64> {
    scenario::beta_from_distance(distance_m).map_err(to_py)
}

/// A cell deployment: humans first, then machines.
#[pyclass(frozen, module = "mimo_coexist")]
struct Scenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl Scenario {
    /// Uniform placement in the 20–250 m annulus with the default radio parameters.
    #[staticmethod]
    #[pyo3(signature = (antennas = 100, ci_length = 100, seed = 2024, humans = 5, machines = 45))]
    fn generate(antennas: usize, ci_length: usize, seed: u64, humans: usize, machines: usize) -> PyResult<Self> {
        let mut params = SystemParams::table_one(antennas, ci_length, seed);
        params.humans = humans;
        params.machines = machines;
        Ok(Self { inner: scenario::place_devices(&params).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: scenario::Scenario::from_toml(text).map_err(to_py)? })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    fn with_antennas(&self, antennas: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_antennas(antennas).map_err(to_py)? })
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas()
    }

    #[getter]
    fn ci_length(&self) -> usize {
        self.inner.params().ci_length
    }

    #[getter]
    fn human_count(&self) -> usize {
        self.inner.human_count()
    }

    #[getter]
    fn machine_count(&self) -> usize {
        self.inner.machine_count()
    }

    #[getter]
    fn noise_power(&self) -> f64 {
        self.inner.noise_power()
    }

    #[getter]
    fn beta_min(&self) -> f64 {
        self.inner.beta_min()
    }

    #[getter]
    fn betas(&self) -> Vec<f64> {
        self.inner.betas()
    }

    #[getter]
    fn distances(&self) -> Vec<f64> {
        self.inner.devices().iter().map(|d| d.distance_m).collect()
    }

    /// `"human"` or `"machine"` per device.
    #[getter]
    fn classes(&self) -> Vec<&'static str> {
        self.inner.devices().iter().map(|d| d.class.as_str()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(antennas={}, ci_length={}, humans={}, machines={}, seed={})",
            self.inner.antennas(),
            self.inner.params().ci_length,
            self.inner.human_count(),
            self.inner.machine_count(),
            self.inner.params().rng_seed
        )
    }
}

/// Unit-norm pilot sequences, one per device.
#[pyclass(frozen, module = "mimo_coexist")]
struct PilotBook {
    inner: pilots::PilotBook,
}

#[pymethods]
impl PilotBook {
    #[staticmethod]
    fn orthogonal(length: usize, count: usize) -> PyResult<Self> {
        Ok(Self { inner: pilots::make_orthogonal_book(length, count).map_err(to_py)? })
    }

    /// Welch-bound-equality book from DFT rows `u` (a default selection when omitted).
    #[staticmethod]
    #[pyo3(signature = (length, count, u = None))]
    fn wbe(length: usize, count: usize, u: Option<Vec<usize>>) -> PyResult<Self> {
        Ok(Self { inner: pilots::make_wbe_book(length, count, u.as_deref()).map_err(to_py)? })
    }

    /// Each device draws one of `length` orthogonal sequences at random.
    #[staticmethod]
    fn random(length: usize, count: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: pilots::make_random_assignment_book(length, count, seed).map_err(to_py)? })
    }

    #[getter]
    fn length(&self) -> usize {
        self.inner.length()
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.count()
    }

    /// Row-major `length × count` nested list of complex entries.
    fn sequences(&self) -> Vec<Vec<num_complex::Complex64>> {
        let s = self.inner.sequences();
        (0..s.nrows()).map(|r| s.row(r).iter().copied().collect()).collect()
    }

    /// Spectral radius, Welch sum and row sums of the cross-correlation matrix.
    fn gram_stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let stats = pilots::gram_stats(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("spectral_radius", stats.spectral_radius)?;
        d.set_item("welch_sum", stats.welch_sum)?;
        d.set_item("row_sums", stats.row_sums)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("PilotBook(kind={}, length={}, count={})", self.inner.kind().label(), self.inner.length(), self.inner.count())
    }
}

/// Lowest attainable min-max estimation error.
#[pyfunction]
fn error_floor(count: usize, length: usize, estimator: &str) -> PyResult<f64> {
    pilots::error_floor(count, length, parse::<Estimator>(estimator)?).map_err(to_py)
}

/// `K² / N_p`.
#[pyfunction]
fn welch_lower_bound(length: usize, count: usize) -> f64 {
    pilots::welch_lower_bound(length, count)
}

/// Minimum pilot powers of a Welch-bound-equality book for a common error target.
#[pyfunction]
fn closed_form_power(betas: Vec<f64>, error: f64, noise_power: f64, length: usize, count: usize, estimator: &str) -> PyResult<Vec<f64>> {
    pilots::closed_form_power(&betas, error, noise_power, length, count, parse::<Estimator>(estimator)?).map_err(to_py)
}

/// Monte-Carlo estimation error against pilot SNR as `(snr_db, nmse, std_error)` tuples.
#[pyfunction]
#[pyo3(signature = (snr_db, estimator = "lmmse", book = "wbe", machines = 20, pilot_length = 10, antennas = 50, trials = 2000, seed = 2024))]
#[allow(clippy::too_many_arguments)]
fn nmse_curve(
    py: Python<'_>,
    snr_db: Vec<f64>,
    estimator: &str,
    book: &str,
    machines: usize,
    pilot_length: usize,
    antennas: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let config = NmseConfig {
        machines,
        pilot_length,
        antennas,
        book: parse::<BookKind>(book)?,
        estimator: parse::<Estimator>(estimator)?,
        snr_db,
        trials,
        seed,
    };
    let points = py.detach(|| estimation::nmse_curve(&config)).map_err(to_py)?;
    Ok(points.iter().map(|p| (p.snr_db, p.nmse, p.std_error)).collect())
}

/// Statistical channel inversion pilot powers.
#[pyfunction]
fn sci_pilot_powers(scenario: &Scenario) -> Vec<f64> {
    powerctl::sci_pilot_powers(&scenario.inner)
}

/// Channel-inversion data powers for machines, the cap for humans.
#[pyfunction]
fn sci_data_powers(scenario: &Scenario) -> Vec<f64> {
    powerctl::sci_data_powers(&scenario.inner)
}

/// Closed-form SINRs and rates of every device for one scheme and pilot layout.
#[pyclass(frozen, module = "mimo_coexist")]
struct LinkModel {
    inner: rates::LinkModel,
}

#[pymethods]
impl LinkModel {
    /// `scheme` is `sc1[:alpha]`, `sc2`, `sc3` or `opa[:group]`; pilot powers
    /// default to statistical channel inversion.
    #[new]
    #[pyo3(signature = (scenario, scheme = "sc2", machine_pilot_length = 10, receiver = "mrc", book = "wbe", pilot_powers = None))]
    fn new(
        scenario: &Scenario,
        scheme: &str,
        machine_pilot_length: usize,
        receiver: &str,
        book: &str,
        pilot_powers: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let s = &scenario.inner;
        let scheme = parse::<Scheme>(scheme)?;
        let q = pilot_powers.unwrap_or_else(|| powerctl::sci_pilot_powers(s));
        let (npm, machine_book) = match scheme {
            Scheme::Opa { group_size } => (group_size, pilots::make_grouped_orthogonal_book(group_size, s.machine_count())),
            _ => (
                machine_pilot_length,
                harness::machine_book(parse::<BookKind>(book)?, machine_pilot_length, s.machine_count(), s.params().rng_seed),
            ),
        };
        let config = SchemeConfig::new(scheme, s.params().ci_length, s.human_count(), npm).with_receiver(parse::<Receiver>(receiver)?);
        Ok(Self { inner: rates::LinkModel::new(s, config, &machine_book.map_err(to_py)?, &q).map_err(to_py)? })
    }

    /// One dict per device with its rate and per-phase SINR terms.
    fn evaluate<'py>(&self, py: Python<'py>, p: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let all = self.inner.evaluate(&p).map_err(to_py)?;
        all.iter()
            .map(|b| {
                let d = PyDict::new(py);
                d.set_item("device", b.device)?;
                d.set_item("class", b.class.as_str())?;
                d.set_item("receiver", b.receiver.as_str())?;
                d.set_item("rate", b.rate)?;
                let phases = b
                    .phases
                    .iter()
                    .map(|ph| {
                        let e = PyDict::new(py);
                        e.set_item("prelog", ph.prelog)?;
                        e.set_item("signal", ph.signal)?;
                        e.set_item("noncoherent", ph.noncoherent)?;
                        e.set_item("coherent", ph.coherent)?;
                        e.set_item("noise", ph.noise)?;
                        e.set_item("gamma", ph.gamma)?;
                        e.set_item("sinr", ph.sinr)?;
                        Ok(e)
                    })
                    .collect::<PyResult<Vec<_>>>()?;
                d.set_item("phases", phases)?;
                Ok(d)
            })
            .collect()
    }

    /// Rate of every device in bits/s/Hz.
    fn rates(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.evaluate(&p).map_err(to_py)?.iter().map(|b| b.rate).collect())
    }

    /// Machine SINR as the antenna count grows without bound (`inf` when no interference survives).
    fn asymptotic_sinr_machine(&self, device: usize, p: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.asymptotic_sinr_machine(device, &p).map_err(to_py)?.value())
    }

    fn with_antennas(&self, antennas: usize) -> Self {
        Self { inner: self.inner.with_antennas(antennas) }
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas()
    }
}

fn rate_point<'py>(py: Python<'py>, pt: &RatePoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", &pt.scheme)?;
    d.set_item("receiver", pt.receiver.as_str())?;
    d.set_item("r_h_target", pt.r_h_target)?;
    d.set_item("r_m", pt.r_m)?;
    d.set_item("feasible", pt.feasible)?;
    d.set_item("machine_pilot_length", pt.machine_pilot_length)?;
    d.set_item("alpha", pt.alpha)?;
    d.set_item("p", pt.p.clone())?;
    d.set_item("solver_iterations", pt.solver_iterations)?;
    Ok(d)
}

fn region_setup(scenario: &scenario::Scenario, scheme: &str, book: &str, receiver: &str, mode: &str) -> PyResult<RegionSetup> {
    Ok(RegionSetup::new(parse::<Scheme>(scheme)?, scenario, parse::<BookKind>(book)?)
        .with_receiver(parse::<Receiver>(receiver)?)
        .with_human_mode(human_mode(mode)?))
}

/// Best common machine rate under a common human rate target.
#[pyfunction]
#[pyo3(signature = (scenario, scheme, r_h_target, book = "wbe", receiver = "mrc", human_mode = "exact"))]
fn maxmin_machine_rate<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    scheme: &str,
    r_h_target: f64,
    book: &str,
    receiver: &str,
    human_mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let s = &scenario.inner;
    let setup = region_setup(s, scheme, book, receiver, human_mode)?;
    let q = powerctl::sci_pilot_powers(s);
    let pt = py.detach(|| powerctl::maxmin_machine_rate(s, &setup, &q, r_h_target)).map_err(to_py)?;
    rate_point(py, &pt)
}

/// One rate point per human target in `r_h_grid`.
#[pyfunction]
#[pyo3(signature = (scenario, scheme, r_h_grid, book = "wbe", receiver = "mrc", human_mode = "exact"))]
fn trace_rate_region<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    scheme: &str,
    r_h_grid: Vec<f64>,
    book: &str,
    receiver: &str,
    human_mode: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let s = &scenario.inner;
    let setup = region_setup(s, scheme, book, receiver, human_mode)?;
    let q = powerctl::sci_pilot_powers(s);
    let pts = py.detach(|| powerctl::trace_rate_region(s, &setup, &q, &r_h_grid)).map_err(to_py)?;
    pts.iter().map(|pt| rate_point(py, pt)).collect()
}

/// Largest common human rate with every machine silent.
#[pyfunction]
#[pyo3(signature = (scenario, receiver = "mrc"))]
fn human_rate_ceiling(scenario: &Scenario, receiver: &str) -> PyResult<f64> {
    let s = &scenario.inner;
    let q = powerctl::sci_pilot_powers(s);
    powerctl::human_rate_ceiling(s, s.params().ci_length, s.human_count(), parse::<Receiver>(receiver)?, &q).map_err(to_py)
}

/// Runs a figure's default sweep into `out_dir`; returns the written paths and row count.
#[pyfunction]
#[pyo3(signature = (figure, out_dir, seed = 2024, trials = None))]
fn run_experiment<'py>(py: Python<'py>, figure: &str, out_dir: PathBuf, seed: u64, trials: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = ExperimentSpec::for_figure(parse::<FigureId>(figure)?, seed, out_dir);
    if let Some(t) = trials {
        spec.trials = t;
    }
    let out = py.detach(|| harness::run_experiment(&spec)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("csv", out.csv)?;
    d.set_item("metadata", out.metadata)?;
    d.set_item("rows", out.rows)?;
    Ok(d)
}

/// Runs the self-check suite; one dict per check.
#[pyfunction]
#[pyo3(signature = (seed = 2024, trials = None, frontiers = false))]
fn validate<'py>(py: Python<'py>, seed: u64, trials: Option<usize>, frontiers: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut options = ValidationOptions { seed, frontiers, ..Default::default() };
    if let Some(t) = trials {
        options.nmse_trials = t;
        options.mc_trials = t;
    }
    let report = py.detach(|| harness::validate(&options)).map_err(to_py)?;
    report
        .entries
        .iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("name", &e.name)?;
            d.set_item("passed", e.passed)?;
            d.set_item("measured", e.measured)?;
            d.set_item("expected", e.expected)?;
            d.set_item("tolerance", e.tolerance)?;
            d.set_item("detail", &e.detail)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
pub fn mimo_coexist(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<PilotBook>()?;
    m.add_class::<LinkModel>()?;
    m.add_function(wrap_pyfunction!(path_loss_db, m)?)?;
    m.add_function(wrap_pyfunction!(beta_from_distance, m)?)?;
    m.add_function(wrap_pyfunction!(error_floor, m)?)?;
    m.add_function(wrap_pyfunction!(welch_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_power, m)?)?;
    m.add_function(wrap_pyfunction!(nmse_curve, m)?)?;
    m.add_function(wrap_pyfunction!(sci_pilot_powers, m)?)?;
    m.add_function(wrap_pyfunction!(sci_data_powers, m)?)?;
    m.add_function(wrap_pyfunction!(maxmin_machine_rate, m)?)?;
    m.add_function(wrap_pyfunction!(trace_rate_region, m)?)?;
    m.add_function(wrap_pyfunction!(human_rate_ceiling, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
