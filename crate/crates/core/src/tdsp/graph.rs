use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::pcf::TimeFn;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate state id {0}")]
    DuplicateState(u64),
    #[error("unknown state id {0}")]
    UnknownState(u64),
    #[error("graph has no goal states")]
    NoGoal,
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: u64, to: u64 },
    #[error("edge {from} -> {to}: {reason}")]
    InvalidEdge { from: u64, to: u64, reason: String },
    #[error("every edge time is infinite or zero; k_max is undefined")]
    NoFiniteConstant,
}

/// Directed graph whose edges carry piecewise-constant edge-time functions.
///
/// States are addressed internally by dense index `0..len()`; the external
/// integer ids supplied at construction are kept for I/O.
#[derive(Debug, Clone)]
pub struct TimedGraph<T: Scalar> {
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
    goal: Vec<bool>,
    edges: BTreeMap<(usize, usize), TimeFn<T>>,
    successors: Vec<Vec<usize>>,
}

impl<T: Scalar> TimedGraph<T> {
    /// Validates and assembles a graph. Edge functions must be `∞` for
    /// `t <= 0`, have non-negative breakpoints, and take positive (or
    /// infinite) values.
    pub fn new(
        states: &[u64],
        goals: &[u64],
        edges: impl IntoIterator<Item = (u64, u64, TimeFn<T>)>,
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, &id) in states.iter().enumerate() {
            if index.insert(id, i).is_some() {
                return Err(GraphError::DuplicateState(id));
            }
        }
        let lookup = |id: u64| index.get(&id).copied().ok_or(GraphError::UnknownState(id));

        let mut goal = vec![false; states.len()];
        for &g in goals {
            goal[lookup(g)?] = true;
        }
        if !goal.iter().any(|&g| g) {
            return Err(GraphError::NoGoal);
        }

        let mut edge_map = BTreeMap::new();
        for (from, to, f) in edges {
            let key = (lookup(from)?, lookup(to)?);
            validate_edge(&f).map_err(|reason| GraphError::InvalidEdge { from, to, reason })?;
            if edge_map.insert(key, f).is_some() {
                return Err(GraphError::DuplicateEdge { from, to });
            }
        }

        let mut successors = vec![Vec::new(); states.len()];
        for &(s, t) in edge_map.keys() {
            successors[s].push(t);
        }

        Ok(TimedGraph {
            ids: states.to_vec(),
            index,
            goal,
            edges: edge_map,
            successors,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, state: usize) -> u64 {
        self.ids[state]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn state(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn is_goal(&self, state: usize) -> bool {
        self.goal[state]
    }

    pub fn goals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&s| self.goal[s])
    }

    /// Successors of `state` in ascending index order.
    pub fn successors(&self, state: usize) -> &[usize] {
        &self.successors[state]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&TimeFn<T>> {
        self.edges.get(&(from, to))
    }

    /// All edges ordered by `(from, to)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &TimeFn<T>)> + '_ {
        self.edges.iter().map(|(&(s, t), f)| (s, t, f))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Smallest finite edge value; every walk step costs at least this.
    pub fn min_edge_value(&self) -> Option<T> {
        self.edges
            .values()
            .flat_map(|f| f.pieces().iter().map(|(_, v)| *v))
            .filter(|v| v.is_finite())
            .min()
    }

    pub fn max_edge_value(&self) -> Option<T> {
        self.edges
            .values()
            .flat_map(|f| f.pieces().iter().map(|(_, v)| *v))
            .filter(|v| v.is_finite())
            .max()
    }

    pub fn max_breakpoint(&self) -> T {
        self.edges
            .values()
            .flat_map(|f| f.breakpoints())
            .max()
            .unwrap_or(T::ZERO)
    }

    /// Largest number of pieces on any edge (the `|C_m|` of the growth bound).
    pub fn max_edge_pieces(&self) -> usize {
        self.edges.values().map(|f| f.pieces().len()).max().unwrap_or(0)
    }

    /// Same graph with every breakpoint and value passed through `f`.
    pub fn convert<U: Scalar>(&self, mut f: impl FnMut(T) -> U) -> Result<TimedGraph<U>, GraphError> {
        let goals: Vec<u64> = self.goals().map(|s| self.id(s)).collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (&(s, t), e) in &self.edges {
            let raw = e.pieces().iter().map(|&(p, v)| (f(p), f(v))).collect();
            let converted = TimeFn::new(raw, f(*e.default_value())).map_err(|err| GraphError::InvalidEdge {
                from: self.id(s),
                to: self.id(t),
                reason: err.to_string(),
            })?;
            edges.push((self.id(s), self.id(t), converted));
        }
        TimedGraph::new(&self.ids, &goals, edges)
    }

    /// States from which some goal is reachable through edges that are finite
    /// somewhere.
    pub fn can_reach_goal(&self) -> Vec<bool> {
        let mut predecessors = vec![Vec::new(); self.len()];
        for (&(s, t), f) in &self.edges {
            if f.pieces().iter().any(|(_, v)| v.is_finite()) {
                predecessors[t].push(s);
            }
        }
        let mut reach = self.goal.clone();
        let mut stack: Vec<usize> = self.goals().collect();
        while let Some(t) = stack.pop() {
            for &s in &predecessors[t] {
                if !reach[s] {
                    reach[s] = true;
                    stack.push(s);
                }
            }
        }
        reach
    }

    /// States reachable from `start` through edges that are finite somewhere.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for &t in &self.successors[s] {
                let live = self.edges[&(s, t)].pieces().iter().any(|(_, v)| v.is_finite());
                if live && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        (0..self.len()).filter(|&s| seen[s]).collect()
    }
}

fn validate_edge<T: Scalar>(f: &TimeFn<T>) -> Result<(), String> {
    if f.default_value().is_finite() {
        return Err(format!("must be inf for t <= 0, found default {}", f.default_value()));
    }
    for &(p, v) in f.pieces() {
        if p < T::ZERO {
            return Err(format!("negative breakpoint {p}"));
        }
        if v <= T::ZERO {
            return Err(format!("non-positive edge time {v} on t > {p}"));
        }
    }
    Ok(())
}

/// `ceil(max C / min C)` over every edge breakpoint and finite value, zero
/// excluded: the worst-case number of transitions before the subdomain sets
/// stop growing.
pub fn k_max<T: Scalar>(g: &TimedGraph<T>) -> Result<u64, GraphError> {
    let constants = g.edges.values().flat_map(|f| {
        f.pieces()
            .iter()
            .flat_map(|&(p, v)| [p, v])
            .filter(|c| c.is_finite() && *c != T::ZERO)
    });
    let (min, max) = constants.fold((None, None), |(lo, hi): (Option<T>, Option<T>), c| {
        (Some(lo.map_or(c, |l| l.min(c))), Some(hi.map_or(c, |h| h.max(c))))
    });
    match (min, max) {
        (Some(min), Some(max)) => Ok(max.ceil_ratio(min)),
        _ => Err(GraphError::NoFiniteConstant),
    }
}
