//! Python bindings. Times are exact fixed-point internally; `float("inf")`
//! stands for an unusable edge or an unreachable goal.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tdpf_core::flow::{self, FlowScene};
use tdpf_core::io::{graph_to_json, parse_graph, parse_policy, solution_to_json};
use tdpf_core::oracle::min_travel_exhaustive;
use tdpf_core::tdsp::{
    self, best_departure, default_cap, evaluate_policy, extract_path, iterate, SolveError, SolveOptions,
    TimedGraph,
};
use tdpf_core::{fixtures, Fixed, Scalar};

create_exception!(tdpf, NotConvergedError, PyRuntimeError);

type Fn = tdpf_core::TimeFn<Fixed>;
/// `(pieces, default)` of a step function with optional labels.
type Steps<L> = (Vec<(f64, Option<L>)>, Option<L>);

fn time(t: f64) -> PyResult<Fixed> {
    if t.is_nan() || t == f64::NEG_INFINITY || (t.is_finite() && t.abs() >= 9.0e12) {
        return Err(PyValueError::new_err(format!("invalid time {t}")));
    }
    Ok(Fixed::from_f64(t))
}

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solve_error(e: SolveError) -> PyErr {
    match e {
        SolveError::NotConverged { .. } => NotConvergedError::new_err(e.to_string()),
        _ => value_error(e),
    }
}

/// Piecewise-constant travel-time function of the departure time.
///
/// `pieces` is a list of `(breakpoint, value)` with strictly descending
/// breakpoints; a piece holds on `(breakpoint, previous breakpoint]` and
/// `default` holds at or below the last breakpoint.
#[pyclass(name = "TimeFn", module = "tdpf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTimeFn {
    inner: Fn,
}

impl PyTimeFn {
    fn wrap(inner: Fn) -> Self {
        PyTimeFn { inner }
    }
}

#[pymethods]
impl PyTimeFn {
    #[new]
    #[pyo3(signature = (pieces, default = f64::INFINITY))]
    fn new(pieces: Vec<(f64, f64)>, default: f64) -> PyResult<Self> {
        let pieces = pieces
            .into_iter()
            .map(|(p, v)| Ok((time(p)?, time(v)?)))
            .collect::<PyResult<Vec<_>>>()?;
        Fn::new(pieces, time(default)?).map(Self::wrap).map_err(value_error)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self::wrap).map_err(value_error)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("time functions serialize")
    }

    #[getter]
    fn pieces(&self) -> Vec<(f64, f64)> {
        self.inner.pieces().iter().map(|&(p, v)| (p.to_f64(), v.to_f64())).collect()
    }

    #[getter]
    fn default(&self) -> f64 {
        self.inner.default_value().to_f64()
    }

    fn eval(&self, t: f64) -> PyResult<f64> {
        Ok(self.inner.eval(time(t)?).to_f64())
    }

    /// Right limit at `t`.
    fn eval_after(&self, t: f64) -> PyResult<f64> {
        Ok(self.inner.eval_after(time(t)?).to_f64())
    }

    /// `t -> self(t) + f(t + self(t))`: take this edge, then continue with `f`.
    fn chain(&self, f: &PyTimeFn) -> Self {
        Self::wrap(self.inner.chain(&f.inner))
    }

    fn simplify(&self, delta: f64) -> PyResult<Self> {
        self.inner.simplify(time(delta)?).map(Self::wrap).map_err(value_error)
    }

    #[pyo3(signature = (other, eps = 0.0))]
    fn equal(&self, other: &PyTimeFn, eps: f64) -> bool {
        self.inner.equal(&other.inner, eps)
    }

    fn __eq__(&self, other: &PyTimeFn) -> bool {
        self.inner == other.inner
    }

    /// Number of intervals, counting the default one.
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TimeFn({})", self.to_json())
    }
}

/// Pointwise minimum of `fns` and, per piece, the index of the first
/// function attaining it (`None` where all are infinite).
#[pyfunction]
fn min_with_witness(fns: Vec<PyRef<'_, PyTimeFn>>) -> PyResult<(PyTimeFn, Steps<usize>)> {
    let candidates: Vec<(usize, &Fn)> = fns.iter().enumerate().map(|(i, f)| (i, &f.inner)).collect();
    let (min, witness) = tdpf_core::min_with_witness(&candidates).map_err(value_error)?;
    let pieces = witness.pieces().iter().map(|&(p, w)| (p.to_f64(), w)).collect();
    Ok((PyTimeFn::wrap(min), (pieces, *witness.default_value())))
}

/// Time-dependent graph with goal states, keyed by integer state ids.
#[pyclass(name = "Graph", module = "tdpf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    g: TimedGraph<Fixed>,
    positions: Option<BTreeMap<u64, [f64; 2]>>,
}

impl PyGraph {
    fn index(&self, id: u64) -> PyResult<usize> {
        self.g.state(id).ok_or_else(|| PyKeyError::new_err(format!("no state {id}")))
    }
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = parse_graph::<Fixed>(text).map_err(value_error)?;
        Ok(PyGraph {
            g: file.graph,
            positions: file.positions,
        })
    }

    fn to_json(&self) -> String {
        graph_to_json(&self.g, self.positions.as_ref())
    }

    #[getter]
    fn ids(&self) -> Vec<u64> {
        self.g.ids().to_vec()
    }

    #[getter]
    fn goals(&self) -> Vec<u64> {
        self.g.goals().map(|s| self.g.id(s)).collect()
    }

    #[getter]
    fn positions(&self) -> Option<BTreeMap<u64, [f64; 2]>> {
        self.positions.clone()
    }

    fn edge(&self, from: u64, to: u64) -> PyResult<Option<PyTimeFn>> {
        Ok(self.g.edge(self.index(from)?, self.index(to)?).cloned().map(PyTimeFn::wrap))
    }

    fn successors(&self, state: u64) -> PyResult<Vec<u64>> {
        Ok(self.g.successors(self.index(state)?).iter().map(|&s| self.g.id(s)).collect())
    }

    fn k_max(&self) -> PyResult<u64> {
        tdsp::k_max(&self.g).map_err(value_error)
    }

    fn default_cap(&self) -> usize {
        default_cap(&self.g)
    }

    /// Optimal travel-time table and policy. Raises `NotConvergedError` when
    /// `cap` sweeps are not enough.
    #[pyo3(signature = (cap = None))]
    fn solve(&self, py: Python<'_>, cap: Option<usize>) -> PyResult<PySolution> {
        let mut opts = SolveOptions::for_graph(&self.g);
        if let Some(cap) = cap {
            opts.cap = cap;
        }
        let sol = py.detach(|| iterate(&self.g, &opts)).map_err(solve_error)?;
        if !sol.converged {
            return Err(solve_error(SolveError::NotConverged {
                cap: opts.cap,
                residuals: sol.residuals,
            }));
        }
        Ok(PySolution {
            graph: self.clone(),
            sol,
        })
    }

    /// Travel time of each state under the policy in `policy_json`, keyed by id.
    #[pyo3(signature = (policy_json, cap = None))]
    fn evaluate_policy(&self, policy_json: &str, cap: Option<usize>) -> PyResult<BTreeMap<u64, PyTimeFn>> {
        let pi = parse_policy(&self.g, policy_json).map_err(value_error)?;
        let tt = evaluate_policy(&self.g, &pi, cap.unwrap_or_else(|| default_cap(&self.g))).map_err(solve_error)?;
        Ok((0..self.g.len()).map(|s| (self.g.id(s), PyTimeFn::wrap(tt.row(s).clone()))).collect())
    }

    /// Exhaustive search over walks: `(travel time, state ids)`.
    fn min_travel(&self, state: u64, t0: f64) -> PyResult<(f64, Vec<u64>)> {
        let res = min_travel_exhaustive(&self.g, self.index(state)?, time(t0)?).map_err(value_error)?;
        Ok((res.time.to_f64(), res.walk.iter().map(|&s| self.g.id(s)).collect()))
    }

    fn __len__(&self) -> usize {
        self.g.len()
    }

    fn __repr__(&self) -> String {
        format!("Graph({} states, {} edges)", self.g.len(), self.g.edge_count())
    }
}

/// Converged table and policy of a graph.
#[pyclass(name = "Solution", module = "tdpf", frozen)]
struct PySolution {
    graph: PyGraph,
    sol: tdsp::Solution<Fixed>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn iterations(&self) -> usize {
        self.sol.iterations
    }

    #[getter]
    fn k_max(&self) -> Option<u64> {
        self.sol.k_max
    }

    #[getter]
    fn unreachable(&self) -> Vec<u64> {
        self.sol.unreachable.iter().map(|&s| self.graph.g.id(s)).collect()
    }

    fn travel(&self, state: u64) -> PyResult<PyTimeFn> {
        Ok(PyTimeFn::wrap(self.sol.travel.row(self.graph.index(state)?).clone()))
    }

    /// `(pieces, default)` of successor ids; `None` means no move.
    fn policy(&self, state: u64) -> PyResult<Steps<u64>> {
        let g = &self.graph.g;
        let row = self.sol.policy.row(self.graph.index(state)?);
        let id = |k: &Option<usize>| k.map(|s| g.id(s));
        Ok((row.pieces().iter().map(|(p, k)| (p.to_f64(), id(k))).collect(), id(row.default_value())))
    }

    /// Follows the policy from `state` leaving at `t0`. Returns a dict with
    /// `states`, `departures`, `arrivals`, `travel_time` and `arrival_time`.
    fn extract_path(&self, py: Python<'_>, state: u64, t0: f64) -> PyResult<Py<PyAny>> {
        let g = &self.graph.g;
        let p = extract_path(g, &self.sol.policy, &self.sol.travel, self.graph.index(state)?, time(t0)?)
            .map_err(value_error)?;
        let times = |v: &[Fixed]| v.iter().map(|t| t.to_f64()).collect::<Vec<_>>();
        let d = pyo3::types::PyDict::new(py);
        d.set_item("states", p.states.iter().map(|&s| g.id(s)).collect::<Vec<_>>())?;
        d.set_item("departures", times(&p.departures))?;
        d.set_item("arrivals", times(&p.arrivals))?;
        d.set_item("travel_time", p.travel_time.to_f64())?;
        d.set_item("arrival_time", p.arrival_time.to_f64())?;
        Ok(d.into_any().unbind())
    }

    /// Least travel time over departures in `(lo, hi]` and the intervals
    /// attaining it.
    fn best_departure(&self, state: u64, lo: f64, hi: f64) -> PyResult<(f64, Vec<(f64, f64)>)> {
        let row = self.sol.travel.row(self.graph.index(state)?);
        let best = best_departure(row, time(lo)?, time(hi)?).map_err(value_error)?;
        let intervals = best.intervals.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect();
        Ok((best.value.to_f64(), intervals))
    }

    fn to_json(&self) -> String {
        solution_to_json(&self.graph.g, &self.sol)
    }
}

/// Gyre flow scene with its vehicle and roadmap settings.
#[pyclass(name = "Scene", module = "tdpf", frozen)]
struct PyScene {
    scene: FlowScene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        FlowScene::from_json(text).map(|scene| PyScene { scene }).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.scene.to_json()
    }

    /// Flow velocity `(u, v)` at `(x, y)` and time `t`; zero outside the domain.
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let [u, v] = flow::gyre_velocity(&self.scene, [x, y], t).velocity;
        (u, v)
    }

    /// Time to cross from `a` to `b` leaving at `t0`, or `None`.
    fn edge_time(&self, a: (f64, f64), b: (f64, f64), t0: f64) -> Option<f64> {
        flow::edge_time(&self.scene, [a.0, a.1], [b.0, b.1], t0)
    }

    /// Builds the roadmap; state 0 is the start, 1 the goal.
    fn roadmap(&self, py: Python<'_>) -> PyResult<PyGraph> {
        let roadmap = py.detach(|| flow::prm_star(&self.scene)).map_err(value_error)?;
        let g = roadmap
            .graph
            .convert(|x| if x.is_finite() { Fixed::from_f64(x.get()) } else { Fixed::INFINITY })
            .map_err(value_error)?;
        Ok(PyGraph {
            g,
            positions: Some(roadmap.position_map()),
        })
    }
}

#[pymodule]
fn tdpf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeFn>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(min_with_witness, m)?)?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add("TWO_STATE_JSON", fixtures::TWO_STATE_JSON)?;
    m.add("GRID3X3_JSON", fixtures::GRID3X3_JSON)?;
    m.add("GYRE_SCENE_JSON", fixtures::GYRE_SCENE_JSON)?;
    m.add("STILL_SCENE_JSON", fixtures::STILL_SCENE_JSON)?;
    Ok(())
}
