//! Python bindings for `kljn-trust`.
//!
//! Composite results (validation reports, session reports, trust reports)
//! are returned as plain dicts and lists decoded from their JSON form.

use std::collections::{BTreeMap, BTreeSet};

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use kljn_trust::kljn::{
    run_key_exchange_with_budget, AttackModel, Attacker, KljnSessionConfig, SessionReport,
    DEFAULT_BUDGET_FACTOR,
};
use kljn_trust::orchestrator::{self, EstablishOptions, NetworkKeyState};
use kljn_trust::trust::Evaluator;
use kljn_trust::{Error, KillSwitchState, SensorId};

create_exception!(kljn_trust_py, KljnTrustError, PyValueError);

fn err(e: Error) -> PyErr {
    KljnTrustError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| KljnTrustError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A sensor network: sensors, wired KLJN links and optional wireless sets.
#[pyclass(module = "kljn_trust_py", frozen, from_py_object)]
#[derive(Clone)]
struct Topology {
    inner: kljn_trust::Topology,
}

#[pymethods]
impl Topology {
    #[new]
    #[pyo3(signature = (sensors, kljn_edges, wireless_sets=None))]
    fn new(
        sensors: Vec<String>,
        kljn_edges: Vec<(String, String)>,
        wireless_sets: Option<BTreeMap<String, Vec<String>>>,
    ) -> PyResult<Self> {
        let ids = sensors
            .into_iter()
            .map(SensorId::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let edges = kljn_edges
            .into_iter()
            .map(|(a, b)| Ok((SensorId::new(a)?, SensorId::new(b)?)))
            .collect::<Result<Vec<_>, Error>>()
            .map_err(err)?;
        let mut inner = kljn_trust::Topology::new(ids, edges).map_err(err)?;
        if let Some(sets) = wireless_sets {
            let sets = sets
                .into_iter()
                .map(|(k, v)| {
                    let peers = v
                        .into_iter()
                        .map(SensorId::new)
                        .collect::<Result<BTreeSet<_>, _>>()?;
                    Ok((SensorId::new(k)?, peers))
                })
                .collect::<Result<Vec<_>, Error>>()
                .map_err(err)?;
            inner = inner.with_wireless_sets(sets);
        }
        Ok(Topology { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        kljn_trust::Topology::from_json(text)
            .map(|inner| Topology { inner })
            .map_err(err)
    }

    /// The reference ten-sensor network A..J with six wired links.
    #[staticmethod]
    fn reference() -> Self {
        Topology {
            inner: kljn_trust::fixtures::reference_topology().with_derived_wireless_sets(),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn sensors(&self) -> Vec<String> {
        self.inner.sensors().iter().map(|s| s.to_string()).collect()
    }

    fn kljn_edges(&self) -> Vec<(String, String)> {
        self.inner
            .kljn_edges()
            .iter()
            .map(|e| (e.lo().to_string(), e.hi().to_string()))
            .collect()
    }

    fn has_wireless_sets(&self) -> bool {
        self.inner.has_wireless_sets()
    }

    /// Copy whose wireless set for each sensor is every peer it has no
    /// wired link with.
    fn with_derived_wireless_sets(&self) -> Self {
        Topology {
            inner: self.inner.with_derived_wireless_sets(),
        }
    }

    /// `(kljn, wireless)` peer lists of one sensor.
    fn peer_sets(&self, sensor: &str) -> PyResult<(Vec<String>, Vec<String>)> {
        let id = self.inner.sensor(sensor).map_err(err)?;
        let sets = self.inner.peer_sets(id).map_err(err)?;
        let names = |s: BTreeSet<SensorId>| s.into_iter().map(|x| x.to_string()).collect();
        Ok((names(sets.kljn), names(sets.wireless)))
    }

    /// Validation report as a dict with `errors` and `warnings`.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.validate())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Topology({} sensors, {} kljn edges)",
            self.inner.len(),
            self.inner.kljn_edges().len()
        )
    }
}

/// Trust-tier coefficients a > b > c.
#[pyclass(module = "kljn_trust_py", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Coefficients {
    inner: kljn_trust::TrustCoefficients,
}

#[pymethods]
impl Coefficients {
    #[staticmethod]
    fn closed_form() -> Self {
        Coefficients {
            inner: kljn_trust::TrustCoefficients::closed_form(),
        }
    }

    #[staticmethod]
    fn fixed_point(tol: f64) -> PyResult<Self> {
        kljn_trust::TrustCoefficients::fixed_point(tol)
            .map(|inner| Coefficients { inner })
            .map_err(err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    /// Residuals `(a, b, c)` of the fixed-point system.
    fn residuals(&self) -> (f64, f64, f64) {
        let r = self.inner.residuals();
        (r.a, r.b, r.c)
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Coefficients(a={}, b={}, c={})",
            self.inner.a, self.inner.b, self.inner.c
        )
    }
}

/// The topology evaluated: wireless sets are derived when none are given.
fn effective(topology: &Topology) -> std::borrow::Cow<'_, kljn_trust::Topology> {
    if topology.inner.has_wireless_sets() {
        std::borrow::Cow::Borrowed(&topology.inner)
    } else {
        std::borrow::Cow::Owned(topology.inner.with_derived_wireless_sets())
    }
}

fn evaluator(
    topology: &Topology,
    killed: Option<Vec<String>>,
    coefficients: Option<Coefficients>,
) -> PyResult<Evaluator> {
    let killed = killed
        .unwrap_or_default()
        .into_iter()
        .map(SensorId::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let coef = coefficients.map(|c| c.inner).unwrap_or_default();
    Evaluator::new(
        &effective(topology),
        &coef,
        &KillSwitchState::with_killed(killed),
    )
    .map_err(err)
}

fn sensor(topology: &Topology, token: &str) -> PyResult<SensorId> {
    topology.inner.sensor(token).cloned().map_err(err)
}

/// Trust of `j` as seen by `i`.
#[pyfunction]
#[pyo3(signature = (topology, i, j, killed=None, coefficients=None))]
fn trust(
    topology: &Topology,
    i: &str,
    j: &str,
    killed: Option<Vec<String>>,
    coefficients: Option<Coefficients>,
) -> PyResult<f64> {
    let ev = evaluator(topology, killed, coefficients)?;
    ev.trust(&sensor(topology, i)?, &sensor(topology, j)?)
        .map_err(err)
}

/// `(K, W, Z)` for evaluator `i` and evaluated `j`.
#[pyfunction]
fn counts(topology: &Topology, i: &str, j: &str) -> PyResult<(u64, u64, u64)> {
    let c = kljn_trust::trust::counts(
        &effective(topology),
        &sensor(topology, i)?,
        &sensor(topology, j)?,
    )
    .map_err(err)?;
    Ok((c.k, c.w, c.z))
}

/// `(order, rows)`: sensor order and the dense matrix, row = evaluator.
#[pyfunction]
#[pyo3(signature = (topology, killed=None, coefficients=None))]
fn trust_matrix(
    topology: &Topology,
    killed: Option<Vec<String>>,
    coefficients: Option<Coefficients>,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let m = evaluator(topology, killed, coefficients)?.matrix();
    Ok((m.order.iter().map(|s| s.to_string()).collect(), m.values))
}

/// Matrix as CSV; rounded to `decimals` unless it is None.
#[pyfunction]
#[pyo3(signature = (topology, killed=None, decimals=Some(3)))]
fn trust_matrix_csv(
    topology: &Topology,
    killed: Option<Vec<String>>,
    decimals: Option<usize>,
) -> PyResult<String> {
    Ok(evaluator(topology, killed, None)?.matrix().to_csv(decimals))
}

/// Peers of `i` as `(sensor, trust)` by descending trust.
#[pyfunction]
#[pyo3(signature = (topology, i, killed=None, coefficients=None))]
fn rank(
    topology: &Topology,
    i: &str,
    killed: Option<Vec<String>>,
    coefficients: Option<Coefficients>,
) -> PyResult<Vec<(String, f64)>> {
    let ev = evaluator(topology, killed, coefficients)?;
    Ok(ev
        .rank(&sensor(topology, i)?)
        .map_err(err)?
        .into_iter()
        .map(|p| (p.sensor.to_string(), p.trust))
        .collect())
}

fn session_config(seed: u64, config_json: Option<&str>) -> PyResult<KljnSessionConfig> {
    let cfg: KljnSessionConfig = match config_json {
        Some(text) => serde_json::from_str(text).map_err(|e| err(Error::Json(e)))?,
        None => KljnSessionConfig::default(),
    };
    Ok(cfg.with_seed(seed))
}

/// Runs one KLJN session and returns its report as a dict. `attack` is
/// None, "wire-substitution" or "current-injection".
#[pyfunction]
#[pyo3(signature = (bits=128, seed=0, config_json=None, attack=None, attack_start=0,
                    injection_amplitude=0.5, budget=None, emit_key=false))]
#[allow(clippy::too_many_arguments)]
fn simulate_kljn<'py>(
    py: Python<'py>,
    bits: usize,
    seed: u64,
    config_json: Option<&str>,
    attack: Option<&str>,
    attack_start: u64,
    injection_amplitude: f64,
    budget: Option<u64>,
    emit_key: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = session_config(seed, config_json)?;
    let model = match attack {
        None => None,
        Some("wire-substitution") => Some(AttackModel::WireSubstitution),
        Some("current-injection") => Some(AttackModel::CurrentInjection {
            relative_amplitude: injection_amplitude,
        }),
        Some(other) => {
            return Err(PyValueError::new_err(format!(
                "unknown attack model {other:?}"
            )))
        }
    };
    let attacker = model.map(|model| Attacker {
        model,
        start_period: attack_start,
    });
    let budget = budget.unwrap_or_else(|| DEFAULT_BUDGET_FACTOR.saturating_mul(bits as u64));
    let (result, exhausted) =
        match py.detach(|| run_key_exchange_with_budget(&cfg, bits, attacker, budget)) {
            Ok(r) => (r, false),
            Err(Error::BudgetExhausted { partial, .. }) => (*partial, true),
            Err(e) => return Err(err(e)),
        };
    to_py(
        py,
        &SessionReport::new(&cfg, bits, attacker, &result, exhausted, emit_key),
    )
}

/// Key-establishment state of a network.
#[pyclass(module = "kljn_trust_py")]
struct NetworkState {
    inner: NetworkKeyState,
}

#[pymethods]
impl NetworkState {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        NetworkKeyState::from_json(text)
            .map(|inner| NetworkState { inner })
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Record counts `(kljn, wireless)`.
    fn record_counts(&self) -> (usize, usize) {
        (
            self.inner.count(orchestrator::Channel::Kljn),
            self.inner.count(orchestrator::Channel::Wireless),
        )
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.records)
    }

    /// Kills `sensor` and returns how many records were newly revoked.
    #[pyo3(signature = (sensor, note=""))]
    fn kill(&mut self, sensor: &str, note: &str) -> PyResult<usize> {
        let id = self.inner.topology.sensor(sensor).map_err(err)?.clone();
        self.inner.apply_kill_event(&id, note).map_err(err)
    }

    fn killed(&self) -> Vec<String> {
        self.inner
            .kill
            .killed()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    /// Trust report (coefficients, matrix, rankings, records, kill log).
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = orchestrator::trust_report(&self.inner, &Default::default()).map_err(err)?;
        to_py(py, &report)
    }
}

/// Establishes keys for every covered pair of `topology`.
#[pyfunction]
#[pyo3(signature = (topology, seed=0, key_bits=128, config_json=None))]
fn establish(
    py: Python<'_>,
    topology: &Topology,
    seed: u64,
    key_bits: usize,
    config_json: Option<&str>,
) -> PyResult<NetworkState> {
    let cfg = session_config(0, config_json)?;
    let opts = EstablishOptions {
        key_bits,
        ..EstablishOptions::default()
    };
    let t = topology.inner.clone();
    py.detach(|| orchestrator::establish_network_keys(&t, &cfg, seed, &opts))
        .map(|inner| NetworkState { inner })
        .map_err(err)
}

#[pymodule]
pub fn kljn_trust_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KljnTrustError", m.py().get_type::<KljnTrustError>())?;
    m.add_class::<Topology>()?;
    m.add_class::<Coefficients>()?;
    m.add_class::<NetworkState>()?;
    m.add_function(wrap_pyfunction!(trust, m)?)?;
    m.add_function(wrap_pyfunction!(counts, m)?)?;
    m.add_function(wrap_pyfunction!(trust_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(trust_matrix_csv, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_kljn, m)?)?;
    m.add_function(wrap_pyfunction!(establish, m)?)?;
    Ok(())
}
