//! Python bindings for the cetm library.

use cetm::dayahead::{self, PriceCurve, ScheduledProfile as CoreScheduled, SchedulingProblem as CoreProblem};
use cetm::demand::{self, AccessHistory, AppId, BenefitWeights, ConsumptionBounds, TrafficProfile};
use cetm::fracprog::{self, LfpProblem, LpProblem};
use cetm::longterm::{self, BundlePlan as CorePlan};
use cetm::realtime::{self, AdmissionParams as CoreAdmission, SlotState};
use cetm::workload;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyfunction]
fn lp_solve(objective: Vec<f64>, constraints: Vec<Vec<f64>>, rhs: Vec<f64>) -> PyResult<Vec<f64>> {
    fracprog::lp_solve(&LpProblem {
        objective,
        constraints,
        rhs,
    })
    .map_err(runtime_err)
}

/// Returns `(x, value, iterations)`.
#[pyfunction]
fn lfp_solve(
    num: Vec<f64>,
    num_offset: f64,
    den: Vec<f64>,
    den_offset: f64,
    constraints: Vec<Vec<f64>>,
    rhs: Vec<f64>,
) -> PyResult<(Vec<f64>, f64, usize)> {
    let sol = fracprog::lfp_solve(&LfpProblem {
        num,
        num_offset,
        den,
        den_offset,
        constraints,
        rhs,
    })
    .map_err(runtime_err)?;
    Ok((sol.x_opt, sol.objective_value, sol.iterations))
}

/// ω (K×N) from foreground access counts (K×N).
#[pyfunction]
#[pyo3(signature = (tau, delta = 0.1, delta_prime = 0.5))]
fn benefit_weights(tau: Vec<Vec<u32>>, delta: f64, delta_prime: f64) -> PyResult<Vec<Vec<f64>>> {
    let tau_bg = vec![vec![0; tau.first().map_or(0, Vec::len)]; tau.len()];
    let w = demand::benefit_weights(&AccessHistory { tau, tau_bg }, delta, delta_prime).map_err(value_err)?;
    Ok(w.omega)
}

#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Bounds {
    #[pyo3(get)]
    b_slot: Vec<Vec<f64>>,
    #[pyo3(get)]
    upper_slot: Vec<Vec<f64>>,
    #[pyo3(get)]
    upper_slot_total: Vec<f64>,
    #[pyo3(get)]
    b_app: Vec<f64>,
    #[pyo3(get)]
    upper_app: Vec<f64>,
}

#[pymethods]
impl Bounds {
    #[new]
    fn new(
        b_slot: Vec<Vec<f64>>,
        upper_slot: Vec<Vec<f64>>,
        upper_slot_total: Vec<f64>,
        b_app: Vec<f64>,
        upper_app: Vec<f64>,
    ) -> Self {
        Bounds {
            b_slot,
            upper_slot,
            upper_slot_total,
            b_app,
            upper_app,
        }
    }
}

impl From<ConsumptionBounds> for Bounds {
    fn from(b: ConsumptionBounds) -> Self {
        Bounds {
            b_slot: b.b_slot,
            upper_slot: b.upper_slot,
            upper_slot_total: b.upper_slot_total,
            b_app: b.b_app,
            upper_app: b.upper_app,
        }
    }
}

impl From<&Bounds> for ConsumptionBounds {
    fn from(b: &Bounds) -> Self {
        ConsumptionBounds {
            b_slot: b.b_slot.clone(),
            upper_slot: b.upper_slot.clone(),
            upper_slot_total: b.upper_slot_total.clone(),
            b_app: b.b_app.clone(),
            upper_app: b.upper_app.clone(),
        }
    }
}

/// Default bounds from a list of daily K×N profiles.
#[pyfunction]
fn default_bounds(days: Vec<Vec<Vec<f64>>>) -> PyResult<Bounds> {
    let days: Vec<TrafficProfile> = days.into_iter().map(|x| TrafficProfile { x }).collect();
    Ok(demand::default_bounds(&days).map_err(value_err)?.into())
}

#[pyclass(frozen)]
struct ScheduledProfile {
    #[pyo3(get)]
    profile: Vec<Vec<f64>>,
    #[pyo3(get)]
    benefit: f64,
    #[pyo3(get)]
    payment: f64,
    #[pyo3(get)]
    cost_efficiency: f64,
    #[pyo3(get)]
    iterations: usize,
}

impl From<CoreScheduled> for ScheduledProfile {
    fn from(s: CoreScheduled) -> Self {
        ScheduledProfile {
            profile: s.profile.x,
            benefit: s.benefit,
            payment: s.payment,
            cost_efficiency: s.cost_efficiency,
            iterations: s.iterations,
        }
    }
}

#[pymethods]
impl ScheduledProfile {
    fn __repr__(&self) -> String {
        format!(
            "ScheduledProfile(benefit={}, payment={}, cost_efficiency={}, iterations={})",
            self.benefit, self.payment, self.cost_efficiency, self.iterations
        )
    }
}

#[pyclass(frozen)]
struct SchedulingProblem(CoreProblem);

#[pymethods]
impl SchedulingProblem {
    #[new]
    #[pyo3(signature = (omega, prices, bounds, strict_paper_matrix = false))]
    fn new(omega: Vec<Vec<f64>>, prices: Vec<f64>, bounds: &Bounds, strict_paper_matrix: bool) -> PyResult<Self> {
        let weights = BenefitWeights::from_omega(omega).map_err(value_err)?;
        let prices = PriceCurve::new(prices).map_err(value_err)?;
        let mut sp = CoreProblem::new(weights, prices, bounds.into()).map_err(value_err)?;
        sp.strict_paper_matrix = strict_paper_matrix;
        Ok(SchedulingProblem(sp))
    }

    fn schedule(&self) -> PyResult<ScheduledProfile> {
        Ok(dayahead::schedule(&self.0).map_err(runtime_err)?.into())
    }

    #[pyo3(signature = (eta = 0.2))]
    fn schedule_pm(&self, eta: f64) -> PyResult<ScheduledProfile> {
        Ok(dayahead::schedule_pm(&self.0, eta).map_err(runtime_err)?.into())
    }

    /// `(benefit, payment, cost_efficiency)` of a K×N profile.
    fn evaluate(&self, profile: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
        self.0.evaluate(&TrafficProfile { x: profile }).map_err(value_err)
    }
}

#[pyclass(frozen)]
struct AdmissionParams(CoreAdmission);

#[pymethods]
impl AdmissionParams {
    #[staticmethod]
    #[pyo3(signature = (kappa = 0.0))]
    fn calibrate(kappa: f64) -> PyResult<Self> {
        Ok(AdmissionParams(
            realtime::calibrate_admission().with_kappa(kappa).map_err(value_err)?,
        ))
    }

    #[getter]
    fn m1(&self) -> f64 {
        self.0.m1
    }

    #[getter]
    fn m2(&self) -> f64 {
        self.0.m2
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    fn accept_probability(&self, g: f64, x: f64, t: f64) -> PyResult<f64> {
        realtime::accept_probability(g, x, t, &self.0).map_err(value_err)
    }
}

/// Bound reset for exhausted app `a1` followed by the greedy reallocation.
/// Returns `(lower, upper, new_allocation)`.
#[pyfunction]
fn reset_and_reallocate(
    allocated: Vec<f64>,
    consumed: Vec<f64>,
    elapsed_min: f64,
    a1: usize,
    omega: Vec<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut state = SlotState::new(0, allocated, 1.0);
    state.consumed = consumed;
    state.elapsed_min = elapsed_min;
    let (lo, hi) = realtime::reset_bounds(&state, AppId(a1), &omega).map_err(value_err)?;
    let x = realtime::reallocate(&state.allocated, &lo, &hi, &omega).map_err(value_err)?;
    Ok((lo, hi, x))
}

#[pyclass(frozen)]
struct BundlePlan(CorePlan);

#[pymethods]
impl BundlePlan {
    #[new]
    fn new(name: &str, base_cost: f64, cap_mb: f64, overage_per_mb: f64) -> PyResult<Self> {
        Ok(BundlePlan(CorePlan::new(name, base_cost, cap_mb, overage_per_mb).map_err(value_err)?))
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(BundlePlan(CorePlan::preset(name).map_err(value_err)?))
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn cap_mb(&self) -> f64 {
        self.0.cap_mb
    }

    fn monthly_cost(&self, x: f64) -> f64 {
        longterm::monthly_cost(x, &self.0)
    }

    #[pyo3(signature = (x, omega_bar = 1.0))]
    fn monthly_ce(&self, x: f64, omega_bar: f64) -> PyResult<f64> {
        longterm::monthly_ce(x, &self.0, omega_bar).map_err(value_err)
    }

    fn peak_volume(&self) -> PyResult<f64> {
        longterm::peak_volume(&self.0).map_err(value_err)
    }
}

/// `(mu, sigma2)` of the log-normal with the given mean and variance.
#[pyfunction]
fn lognormal_params(mean: f64, variance: f64) -> PyResult<(f64, f64)> {
    workload::lognormal_params(mean, variance).map_err(value_err)
}

/// A generated week as JSON, one object per day with `history`, `events` and
/// `profile`.
#[pyfunction]
#[pyo3(signature = (seed, config_json = "{}"))]
fn generate_week(seed: u64, config_json: &str) -> PyResult<String> {
    let mut sc = cetm::cli::Scenario::from_json(config_json).map_err(value_err)?;
    sc.seed = seed;
    let model = sc.workload();
    let rates = model.draw_rates(seed).map_err(value_err)?;
    let week = model.generate_week(&rates, seed).map_err(value_err)?;
    serde_json::to_string(&week).map_err(runtime_err)
}

/// Runs the day-ahead pipeline without writing files and returns the report
/// as JSON.
#[pyfunction]
#[pyo3(signature = (config_json = "{}"))]
fn dayahead_report(config_json: &str) -> PyResult<String> {
    let sc = cetm::cli::Scenario::from_json(config_json).map_err(value_err)?;
    let prep = cetm::cli::prepare(&sc).map_err(value_err)?;
    let r = cetm::cli::dayahead(&sc, &prep).map_err(runtime_err)?;
    serde_json::to_string(&r.report).map_err(runtime_err)
}

#[pymodule]
fn cetm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lp_solve, m)?)?;
    m.add_function(wrap_pyfunction!(lfp_solve, m)?)?;
    m.add_function(wrap_pyfunction!(benefit_weights, m)?)?;
    m.add_function(wrap_pyfunction!(default_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(reset_and_reallocate, m)?)?;
    m.add_function(wrap_pyfunction!(lognormal_params, m)?)?;
    m.add_function(wrap_pyfunction!(generate_week, m)?)?;
    m.add_function(wrap_pyfunction!(dayahead_report, m)?)?;
    m.add_class::<Bounds>()?;
    m.add_class::<SchedulingProblem>()?;
    m.add_class::<ScheduledProfile>()?;
    m.add_class::<AdmissionParams>()?;
    m.add_class::<BundlePlan>()?;
    Ok(())
}
