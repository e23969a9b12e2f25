//! Python bindings. Build the cdylib and import it as `tasp`.

use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use tasp_core::geometry::{distance, Configuration as CoreConfig, Footprint};
use tasp_core::plan_io::{trace_jsonl, InputDigests, PlanFile};
use tasp_core::render::{render_svg, RenderOptions};
use tasp_core::symbolic::{self, parse_domain, parse_problem, SearchLimits, SearchMode};
use tasp_core::tasp::{self as core, ExecError, HybridPlan, HybridProblem, SolveError, SolveLimits};
use tasp_core::world::load_scene;

create_exception!(tasp, TaspError, PyException);
create_exception!(tasp, InfeasibleError, TaspError);
create_exception!(tasp, ContractViolation, TaspError);

fn input_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(module = "tasp", name = "Configuration", from_py_object)]
#[derive(Clone, Copy)]
struct PyConfiguration {
    inner: CoreConfig,
}

#[pymethods]
impl PyConfiguration {
    #[new]
    #[pyo3(signature = (x, y, theta, arm = 0.0))]
    fn new(x: f64, y: f64, theta: f64, arm: f64) -> Self {
        PyConfiguration { inner: CoreConfig::new(x, y, theta, arm) }
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.base.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.base.y
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.base.theta
    }

    #[getter]
    fn arm(&self) -> f64 {
        self.inner.arm
    }

    /// Weighted C-space distance for a robot with the given footprint.
    #[pyo3(signature = (other, base_radius, arm_max_reach))]
    fn distance(&self, other: &PyConfiguration, base_radius: f64, arm_max_reach: f64) -> PyResult<f64> {
        let fp = Footprint::new(base_radius, arm_max_reach).map_err(input_err)?;
        Ok(distance(&self.inner, &other.inner, &fp))
    }

    fn as_tuple(&self) -> (f64, f64, f64, f64) {
        let [x, y, t, a] = self.inner.as_array();
        (x, y, t, a)
    }

    fn __repr__(&self) -> String {
        let [x, y, t, a] = self.inner.as_array();
        format!("Configuration(x={x}, y={y}, theta={t}, arm={a})")
    }
}

#[pyclass(module = "tasp", name = "Plan", frozen)]
struct PyPlan {
    plan: HybridPlan,
    file: PlanFile,
}

#[pymethods]
impl PyPlan {
    /// Display names of every step, navigation included.
    fn labels(&self) -> Vec<String> {
        self.plan.labels()
    }

    /// Display names without navigation steps.
    fn skeleton(&self) -> Vec<String> {
        core::skill_skeleton(&self.plan)
    }

    #[getter]
    fn symbolic(&self) -> Vec<String> {
        self.file.symbolic.clone()
    }

    #[getter]
    fn backtracks(&self) -> usize {
        self.plan.stats.backtracks
    }

    #[getter]
    fn resamples(&self) -> usize {
        self.plan.stats.resamples
    }

    /// `(plan, step, skill, attempt, stage, detail)` for every failed refinement attempt.
    fn failures(&self) -> Vec<(usize, usize, String, usize, String, String)> {
        self.plan
            .stats
            .failures
            .iter()
            .map(|f| (f.plan, f.step, f.skill.clone(), f.attempt, f.stage.to_string(), f.detail.clone()))
            .collect()
    }

    /// `(entry, exit)` configurations per step.
    fn endpoints(&self) -> Vec<(PyConfiguration, PyConfiguration)> {
        self.plan
            .steps
            .iter()
            .map(|s| (PyConfiguration { inner: s.cip.entry_config }, PyConfiguration { inner: s.cip.exit_config }))
            .collect()
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    fn __len__(&self) -> usize {
        self.plan.steps.len()
    }
}

#[pyclass(module = "tasp", name = "Problem", frozen)]
struct PyProblem {
    inner: HybridProblem,
    digests: InputDigests,
    scene_text: String,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(domain: &str, problem: &str, scene: &str, skills: &str) -> PyResult<Self> {
        let inner = HybridProblem::from_texts(domain, problem, scene, skills).map_err(input_err)?;
        Ok(PyProblem { inner, digests: InputDigests::of(domain, problem, scene, skills), scene_text: scene.into() })
    }

    #[staticmethod]
    fn from_files(domain: &str, problem: &str, scene: &str, skills: &str) -> PyResult<Self> {
        let read = |p: &str| std::fs::read_to_string(p).map_err(|e| input_err(format!("{p}: {e}")));
        Self::new(&read(domain)?, &read(problem)?, &read(scene)?, &read(skills)?)
    }

    /// Symbolic abstraction of the initial world, as sorted atom strings.
    fn abstract_state(&self) -> Vec<String> {
        self.inner.abstract_state(&self.inner.world).iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn robot(&self) -> PyConfiguration {
        PyConfiguration { inner: self.inner.world.robot_config }
    }

    #[pyo3(signature = (seed = 42, max_samples = 10, max_backtracks = 25, timeout_s = 120.0))]
    fn solve(&self, py: Python<'_>, seed: u64, max_samples: usize, max_backtracks: usize, timeout_s: f64) -> PyResult<PyPlan> {
        let timeout = Duration::try_from_secs_f64(timeout_s).map_err(input_err)?;
        let limits = SolveLimits { seed, max_samples, max_backtracks, timeout, ..SolveLimits::default() };
        let plan = py.detach(|| core::solve(&self.inner, &limits)).map_err(|e| match e {
            SolveError::UnboundAction(_) => input_err(e),
            other => InfeasibleError::new_err(other.to_string()),
        })?;
        let file = PlanFile::new(&plan, self.digests.clone(), seed);
        Ok(PyPlan { plan, file })
    }

    /// Replays a plan under the monitor; returns the trace as JSON lines.
    fn execute(&self, py: Python<'_>, plan: &PyPlan) -> PyResult<String> {
        let steps = &plan.plan.steps;
        match py.detach(|| core::execute(&self.inner, steps, 0.01)) {
            Ok((_, trace)) => Ok(trace_jsonl(&trace)),
            Err((e @ ExecError::ContractViolation { .. }, _)) | Err((e @ ExecError::GoalNotReached, _)) => {
                Err(ContractViolation::new_err(e.to_string()))
            }
        }
    }

    /// Like `execute` but for a serialized plan; digests must match this problem's inputs.
    fn execute_json(&self, py: Python<'_>, plan_json: &str) -> PyResult<String> {
        let file = PlanFile::from_json(plan_json).map_err(input_err)?;
        file.check_digests(&self.digests).map_err(input_err)?;
        let steps = file.planned_steps(&self.inner).map_err(|e| ContractViolation::new_err(e.to_string()))?;
        match py.detach(|| core::execute(&self.inner, &steps, 0.01)) {
            Ok((_, trace)) => Ok(trace_jsonl(&trace)),
            Err((e, _)) => Err(ContractViolation::new_err(e.to_string())),
        }
    }

    #[pyo3(signature = (plan = None, scale = 60.0))]
    fn render(&self, plan: Option<&PyPlan>, scale: f64) -> PyResult<String> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(input_err("scale must be positive"));
        }
        let (world, stat) = load_scene(&self.scene_text).map_err(input_err)?;
        let opts = RenderOptions { scale, ..RenderOptions::default() };
        Ok(render_svg(&world, &stat, plan.map(|p| &p.file), None, &opts))
    }
}

/// Plans on a symbolic domain alone; returns the action strings.
#[pyfunction]
#[pyo3(signature = (domain, problem, exact = false, max_expansions = 1_000_000))]
fn plan_symbolic(domain: &str, problem: &str, exact: bool, max_expansions: usize) -> PyResult<Vec<String>> {
    let d = parse_domain(domain).map_err(input_err)?;
    let p = parse_problem(problem, &d).map_err(input_err)?;
    let task = symbolic::ground(&d, &p);
    let mode = if exact { SearchMode::Exact } else { SearchMode::Additive };
    let limits = SearchLimits { max_expansions, mode, ..SearchLimits::default() };
    let (plan, _) = symbolic::plan_symbolic(&task, &[], &limits).map_err(|e| InfeasibleError::new_err(e.to_string()))?;
    Ok(plan.steps.iter().map(ToString::to_string).collect())
}

#[pymodule]
fn tasp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(plan_symbolic, m)?)?;
    m.add("TaspError", m.py().get_type::<TaspError>())?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add("ContractViolation", m.py().get_type::<ContractViolation>())?;
    Ok(())
}
