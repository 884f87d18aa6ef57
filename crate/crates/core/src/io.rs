//! JSON file formats for graphs and solutions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcf::{PiecewiseConstant, PolicyFn, TimeFn};
use crate::scalar::Scalar;
use crate::tdsp::{GraphError, PolicyTable, Solution, TimedGraph, TravelTable};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("edge #{index} ({from} -> {to}): {message}")]
    Edge { index: usize, from: u64, to: u64, message: String },
    #[error("state {state}: {message}")]
    State { state: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("solution is for {found} time values but {expected} was requested")]
    Mode { expected: String, found: String },
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeRecord<F> {
    from: u64,
    to: u64,
    #[serde(rename = "fn")]
    f: F,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphRecord<F> {
    states: Vec<u64>,
    goals: Vec<u64>,
    edges: Vec<EdgeRecord<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<BTreeMap<u64, [f64; 2]>>,
}

/// A graph as stored on disk, optionally with planar state positions.
#[derive(Debug, Clone)]
pub struct GraphFile<T: Scalar> {
    pub graph: TimedGraph<T>,
    pub positions: Option<BTreeMap<u64, [f64; 2]>>,
}

/// Parses graph JSON. Bad edge functions are reported with the offending edge.
pub fn parse_graph<T: Scalar>(text: &str) -> Result<GraphFile<T>, IoError> {
    let raw: GraphRecord<serde_json::Value> = serde_json::from_str(text)?;
    let mut edges = Vec::with_capacity(raw.edges.len());
    for (index, e) in raw.edges.into_iter().enumerate() {
        let f = TimeFn::<T>::deserialize(e.f).map_err(|err| IoError::Edge {
            index,
            from: e.from,
            to: e.to,
            message: err.to_string(),
        })?;
        edges.push((e.from, e.to, f));
    }
    let graph = TimedGraph::new(&raw.states, &raw.goals, edges)?;
    Ok(GraphFile {
        graph,
        positions: raw.positions,
    })
}

pub fn graph_to_json<T: Scalar>(g: &TimedGraph<T>, positions: Option<&BTreeMap<u64, [f64; 2]>>) -> String {
    let record = GraphRecord {
        states: g.ids().to_vec(),
        goals: g.goals().map(|s| g.id(s)).collect(),
        edges: g
            .edges()
            .map(|(s, t, f)| EdgeRecord {
                from: g.id(s),
                to: g.id(t),
                f,
            })
            .collect(),
        positions: positions.cloned(),
    };
    serde_json::to_string_pretty(&record).expect("graph serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct StateRecord<T: Scalar> {
    policy: PiecewiseConstant<T, Option<u64>>,
    travel: TimeFn<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct SolutionRecord<T: Scalar> {
    mode: String,
    converged: bool,
    iterations: usize,
    k_max: Option<u64>,
    states: BTreeMap<u64, StateRecord<T>>,
}

/// Tables read back from a solution file, indexed like the graph.
#[derive(Debug, Clone)]
pub struct LoadedSolution<T: Scalar> {
    pub travel: TravelTable<T>,
    pub policy: PolicyTable<T>,
    pub converged: bool,
    pub iterations: usize,
    pub k_max: Option<u64>,
}

pub fn solution_to_json<T: Scalar>(g: &TimedGraph<T>, sol: &Solution<T>) -> String {
    let states = (0..g.len())
        .map(|s| {
            let record = StateRecord {
                policy: sol.policy.row(s).map_values(|k| k.map(|t| g.id(t))),
                travel: sol.travel.row(s).clone(),
            };
            (g.id(s), record)
        })
        .collect();
    let record = SolutionRecord {
        mode: T::MODE.to_string(),
        converged: sol.converged,
        iterations: sol.iterations,
        k_max: sol.k_max,
        states,
    };
    serde_json::to_string_pretty(&record).expect("solution serializes")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(bound = "")]
struct PolicyEntry<T: Scalar> {
    policy: PiecewiseConstant<T, Option<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(bound = "")]
struct PolicyRecord<T: Scalar> {
    states: BTreeMap<u64, PolicyEntry<T>>,
}

/// Checks that `ids` are exactly the graph's states.
fn match_states<'a>(g_ids: &'a [u64], ids: impl Iterator<Item = &'a u64> + Clone, what: &str) -> Result<(), IoError> {
    match_some_states(g_ids, g_ids.iter(), ids, what)
}

fn match_some_states<'a>(
    g_ids: &[u64],
    required: impl Iterator<Item = &'a u64>,
    ids: impl Iterator<Item = &'a u64> + Clone,
    what: &str,
) -> Result<(), IoError> {
    if let Some(missing) = required.into_iter().find(|id| !ids.clone().any(|k| k == *id)) {
        return Err(IoError::State {
            state: missing.to_string(),
            message: format!("missing from {what}"),
        });
    }
    if let Some(extra) = ids.clone().find(|id| !g_ids.contains(id)) {
        return Err(IoError::State {
            state: extra.to_string(),
            message: "not in the graph".into(),
        });
    }
    Ok(())
}

fn policy_row<T: Scalar>(
    g: &TimedGraph<T>,
    id: u64,
    row: &PiecewiseConstant<T, Option<u64>>,
) -> Result<PolicyFn<T>, IoError> {
    let mut unknown = None;
    let mapped = row.map_values(|k| {
        k.and_then(|next| {
            let idx = g.state(next);
            if idx.is_none() {
                unknown = Some(next);
            }
            idx
        })
    });
    match unknown {
        Some(bad) => Err(IoError::State {
            state: id.to_string(),
            message: format!("policy names unknown state {bad}"),
        }),
        None => Ok(mapped),
    }
}

/// Reads the per-state `"policy"` entries of a policy or solution file.
/// Goal states may be left out.
pub fn parse_policy<T: Scalar>(g: &TimedGraph<T>, text: &str) -> Result<PolicyTable<T>, IoError> {
    let raw: PolicyRecord<T> = serde_json::from_str(text)?;
    let ids = g.ids();
    let required = (0..g.len()).filter(|&s| !g.is_goal(s)).map(|s| &ids[s]);
    match_some_states(ids, required, raw.states.keys(), "policy")?;
    let rows = ids
        .iter()
        .map(|id| match raw.states.get(id) {
            Some(rec) => policy_row(g, *id, &rec.policy),
            None => Ok(PolicyFn::constant(None)),
        })
        .collect::<Result<_, _>>()?;
    Ok(PolicyTable { rows })
}

/// Reads a solution file written by [`solution_to_json`] for the same graph.
pub fn parse_solution<T: Scalar>(g: &TimedGraph<T>, text: &str) -> Result<LoadedSolution<T>, IoError> {
    let raw: SolutionRecord<T> = serde_json::from_str(text)?;
    if raw.mode != T::MODE {
        return Err(IoError::Mode {
            expected: T::MODE.to_string(),
            found: raw.mode,
        });
    }
    match_states(g.ids(), raw.states.keys(), "solution")?;
    let mut travel = Vec::with_capacity(g.len());
    let mut policy = Vec::with_capacity(g.len());
    for &id in g.ids() {
        let rec = &raw.states[&id];
        travel.push(rec.travel.clone());
        policy.push(policy_row(g, id, &rec.policy)?);
    }
    Ok(LoadedSolution {
        travel: TravelTable {
            rows: travel,
            iteration: raw.iterations,
        },
        policy: PolicyTable { rows: policy },
        converged: raw.converged,
        iterations: raw.iterations,
        k_max: raw.k_max,
    })
}

/// `(t, value)` corner points tracing the step plot of `f` over `(0, t_end]`,
/// earliest first. Pieces starting at or after `t_end` are dropped; `∞`
/// stretches are kept so the gaps are visible.
pub fn step_samples<T: Scalar, V: Clone + PartialEq>(f: &PiecewiseConstant<T, V>, t_end: T) -> Vec<(T, V)> {
    let mut out = Vec::new();
    let mut intervals: Vec<_> = f.intervals().collect();
    intervals.reverse();
    for iv in intervals {
        let lo = iv.lower.unwrap_or(T::ZERO).max(T::ZERO);
        let hi = iv.upper.unwrap_or(t_end).min(t_end);
        if lo >= hi {
            continue;
        }
        out.push((lo, iv.value.clone()));
        out.push((hi, iv.value.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Fixed, Float};
    use crate::tdsp::solve;

    const TWO_STATE: &str = r#"{
        "states": [0, 1],
        "goals": [1],
        "edges": [
            {"from": 0, "to": 0, "fn": {"pieces": [[0, 1.6]], "default": "inf"}},
            {"from": 0, "to": 1, "fn": {"pieces": [[3.5, 1.2], [0, 5.1]], "default": "inf"}}
        ]
    }"#;

    #[test]
    fn graph_round_trip() {
        let g = parse_graph::<Fixed>(TWO_STATE).unwrap().graph;
        assert_eq!(g.edge_count(), 2);
        let text = graph_to_json(&g, None);
        let h = parse_graph::<Fixed>(&text).unwrap().graph;
        assert_eq!(graph_to_json(&h, None), text);
    }

    #[test]
    fn bad_edge_is_named() {
        let text = TWO_STATE.replace("[[3.5, 1.2], [0, 5.1]]", "[[0, 5.1], [3.5, 1.2]]");
        match parse_graph::<Fixed>(&text) {
            Err(IoError::Edge { index, from, to, message }) => {
                assert_eq!((index, from, to), (1, 0, 1));
                assert!(message.contains("descending"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_graph::<Fixed>("{\"states\": [0, 1],\n \"goals\": 3}").unwrap_err();
        assert!(matches!(err, IoError::Json { line: 2, .. }), "{err}");
    }

    #[test]
    fn solution_round_trip() {
        let g = parse_graph::<Fixed>(TWO_STATE).unwrap().graph;
        let sol = solve(&g, 20).unwrap();
        let text = solution_to_json(&g, &sol);
        assert!(text.contains("\"iterations\": 5"));
        let back = parse_solution(&g, &text).unwrap();
        assert_eq!(back.travel.rows, sol.travel.rows);
        assert_eq!(back.policy.rows, sol.policy.rows);
        assert!(matches!(
            parse_solution(&parse_graph::<Float>(TWO_STATE).unwrap().graph, &text),
            Err(IoError::Mode { .. })
        ));
    }

    #[test]
    fn policy_file_reads_solution_and_rejects_strangers() {
        let g = parse_graph::<Fixed>(TWO_STATE).unwrap().graph;
        let sol = solve(&g, 20).unwrap();
        let pi = parse_policy(&g, &solution_to_json(&g, &sol)).unwrap();
        assert_eq!(pi.rows, sol.policy.rows);
        let text = r#"{"states": {"0": {"policy": {"pieces": [[0, 7]], "default": null}},
                                  "1": {"policy": {"pieces": [], "default": null}}}}"#;
        let err = parse_policy(&g, text).unwrap_err();
        assert!(matches!(err, IoError::State { ref state, .. } if state == "0"), "{err}");
        let text = r#"{"states": {"0": {"policy": {"pieces": [[3, 1], [0, 0]], "default": null}}}}"#;
        let pi = parse_policy(&g, text).unwrap();
        assert_eq!(*pi.rows[1].eval(Fixed::from_f64(2.0)), None);
        let text = r#"{"states": {"1": {"policy": {"pieces": [], "default": null}}}}"#;
        let err = parse_policy(&g, text).unwrap_err();
        assert!(matches!(err, IoError::State { ref state, .. } if state == "0"), "{err}");
    }

    #[test]
    fn step_samples_trace_the_plot() {
        let f = TimeFn::new(
            vec![(Fixed::from_f64(3.5), Fixed::from_f64(1.2)), (Fixed::ZERO, Fixed::from_f64(5.1))],
            Fixed::INFINITY,
        )
        .unwrap();
        let s: Vec<(f64, f64)> = step_samples(&f, Fixed::from_f64(5.0))
            .into_iter()
            .map(|(t, v)| (t.to_f64(), v.to_f64()))
            .collect();
        assert_eq!(s, vec![(0.0, 5.1), (3.5, 5.1), (3.5, 1.2), (5.0, 1.2)]);
    }
}
