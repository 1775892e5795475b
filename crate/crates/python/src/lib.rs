use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tm::ga::GaPreset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tm::{Error, Sense, SolverConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capacity(_) | Error::Certificate(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn sense(s: &str) -> PyResult<Sense> {
    s.parse().map_err(to_py)
}

/// A TITL-MARS model.
#[pyclass(name = "Model", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: tm::TitlMarsModel,
}

#[pymethods]
impl PyModel {
    /// Parses the text document format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        tm::parse_model(text).map(|inner| PyModel { inner }).map_err(to_py)
    }

    /// Random model for experiments.
    #[staticmethod]
    #[pyo3(signature = (seed, dim=2, bases=10))]
    fn random(seed: u64, dim: usize, bases: usize) -> Self {
        use tm::model::{random_model, RandomModelSpec};
        let spec = RandomModelSpec {
            dim,
            bases,
            ..RandomModelSpec::default()
        };
        PyModel {
            inner: random_model(&mut ChaCha8Rng::seed_from_u64(seed), &spec),
        }
    }

    fn to_text(&self) -> String {
        tm::serialize_model(&self.inner)
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.try_eval(&x).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_bases(&self) -> usize {
        self.inner.num_bases()
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.lower().to_vec()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.upper().to_vec()
    }

    /// Bases as lists of `(sign, var, knot)` triples.
    #[getter]
    fn bases(&self) -> Vec<Vec<(i64, usize, f64)>> {
        self.inner
            .bases()
            .iter()
            .map(|b| b.terms().iter().map(|t| (t.sign.as_int(), t.var, t.knot)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Model(dim={}, bases={})", self.inner.dim(), self.inner.num_bases())
    }
}

/// Optimizer result.
#[pyclass(name = "Solution", frozen, get_all)]
struct PySolution {
    sense: String,
    x: Vec<f64>,
    value: f64,
    bound: f64,
    gap: f64,
    status: String,
    nodes: u64,
    evaluations: u64,
    seconds: f64,
}

impl From<tm::Solution> for PySolution {
    fn from(s: tm::Solution) -> Self {
        PySolution {
            sense: s.sense.to_string(),
            status: format!("{:?}", s.status).to_lowercase(),
            x: s.x,
            value: s.value,
            bound: s.bound,
            gap: s.gap,
            nodes: s.stats.nodes,
            evaluations: s.stats.evaluations,
            seconds: s.stats.wall_time.as_secs_f64(),
        }
    }
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!("Solution(sense={}, value={}, gap={}, status={})", self.sense, self.value, self.gap, self.status)
    }
}

/// The mixed-integer quadratic program of a model.
#[pyclass(name = "Miqp", frozen)]
struct PyMiqp {
    inner: tm::MiqpProblem,
}

#[pymethods]
impl PyMiqp {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn num_rows(&self) -> usize {
        self.inner.rows.len()
    }

    /// Canonical embedding of a point `x`.
    fn embed(&self, x: Vec<f64>) -> Vec<f64> {
        self.inner.embed(&x)
    }

    /// Model value encoded by `z`.
    fn model_value_at(&self, z: Vec<f64>) -> f64 {
        self.inner.model_value_at(&z)
    }

    fn max_violation(&self, z: Vec<f64>) -> f64 {
        self.inner.max_violation(&z)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }
}

#[pyfunction]
#[pyo3(signature = (x, y, max_basis=40, penalty=3.0))]
fn fit(py: Python<'_>, x: Vec<Vec<f64>>, y: Vec<f64>, max_basis: usize, penalty: f64) -> PyResult<PyModel> {
    let data = tm::Dataset::from_rows(&x, y).map_err(to_py)?;
    let cfg = tm::FitConfig {
        max_basis,
        penalty,
        ..tm::FitConfig::default()
    };
    py.detach(|| tm::fit(&data, &cfg))
        .map(|inner| PyModel { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (model, sense, gap=1e-6, time_limit=600.0))]
fn solve(py: Python<'_>, model: &PyModel, sense: &str, gap: f64, time_limit: f64) -> PyResult<PySolution> {
    let sense = self::sense(sense)?;
    if !(time_limit > 0.0) {
        return Err(PyValueError::new_err("time_limit must be positive"));
    }
    let cfg = SolverConfig {
        gap,
        time_limit: Duration::from_secs_f64(time_limit),
        ..SolverConfig::default()
    };
    py.detach(|| tm::solve(&model.inner, sense, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (model, sense, preset="grefenstette", seed=1))]
fn ga(py: Python<'_>, model: &PyModel, sense: &str, preset: &str, seed: u64) -> PyResult<PySolution> {
    let sense = self::sense(sense)?;
    let params = preset.parse::<GaPreset>().map_err(to_py)?.params(seed);
    py.detach(|| tm::ga::optimize(&model.inner, sense, &params))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn oracle(py: Python<'_>, model: &PyModel, sense: &str) -> PyResult<PySolution> {
    let sense = self::sense(sense)?;
    py.detach(|| tm::oracle_optimum(&model.inner, sense, &tm::OracleConfig::default()))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (model, sense="max"))]
fn build_miqp(model: &PyModel, sense: &str) -> PyResult<PyMiqp> {
    Ok(PyMiqp {
        inner: tm::build_miqp(&model.inner, self::sense(sense)?),
    })
}

#[pyfunction]
fn wake_speed(v0: f64, rotor_radius: f64, r: f64) -> PyResult<f64> {
    tm::windfarm::wake_speed(v0, rotor_radius, r).map_err(to_py)
}

#[pyfunction]
fn combined_speed(v0: f64, upstream: Vec<f64>) -> f64 {
    tm::windfarm::combined_speed(v0, &upstream)
}

#[pyfunction]
fn turbine_power(v: f64) -> f64 {
    tm::windfarm::turbine_power(v)
}

/// Monte Carlo per-cell mean power: `(rows of [x1, x2], y)`.
#[pyfunction]
#[pyo3(signature = (scenario, layouts=1000, turbines=40, seed=0))]
fn power_grid(
    py: Python<'_>,
    scenario: &str,
    layouts: usize,
    turbines: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    use tm::windfarm::{monte_carlo_power_grid, FarmConfig, WindScenario};
    let scenario = WindScenario::load(scenario).map_err(to_py)?;
    let farm = FarmConfig {
        turbines,
        ..FarmConfig::default()
    };
    let data = py
        .detach(|| monte_carlo_power_grid(&farm, &scenario, layouts, seed).and_then(|g| g.to_dataset()))
        .map_err(to_py)?;
    let rows = (0..data.len()).map(|i| data.row(i)).collect();
    Ok((rows, data.y().to_vec()))
}

/// Evaluates one of the analytic test functions `f1`..`f4`.
#[pyfunction]
fn test_function(name: &str, x: Vec<f64>) -> PyResult<f64> {
    let f: tm::bench::TestFunction = name.parse().map_err(to_py)?;
    f.eval(&x).map_err(to_py)
}

#[pymodule]
fn titl_mars(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyMiqp>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(ga, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(build_miqp, m)?)?;
    m.add_function(wrap_pyfunction!(wake_speed, m)?)?;
    m.add_function(wrap_pyfunction!(combined_speed, m)?)?;
    m.add_function(wrap_pyfunction!(turbine_power, m)?)?;
    m.add_function(wrap_pyfunction!(power_grid, m)?)?;
    m.add_function(wrap_pyfunction!(test_function, m)?)?;
    Ok(())
}
