//! Brute-force reference answers.
//!
//! Nothing here shares code with the solver: edge functions are evaluated by
//! a linear scan of their raw pieces and walks are enumerated explicitly.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::pcf::TimeFn;
use crate::scalar::Scalar;
use crate::tdsp::{k_max, TimedGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("edge {from} -> {to} is not a static single-piece edge")]
    NotStatic { from: u64, to: u64 },
    #[error("graph has no finite edge")]
    NoFiniteEdge,
}

/// Outcome of a walk enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkEnumeration<T> {
    /// Minimum travel time over the enumerated walks, `∞` if none reaches a goal.
    pub time: T,
    /// Lexicographically smallest walk attaining `time` (dense indices).
    pub walk: Vec<usize>,
    /// Edge bound the enumeration ran with.
    pub k: usize,
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions<T> {
    /// Drop partial walks that already cost at least the best complete one,
    /// and skip repeated `(state, time)` visits.
    pub prune: bool,
    /// Known upper bound on the answer, used only for pruning.
    pub upper_bound: Option<T>,
}

impl<T> Default for EnumerateOptions<T> {
    fn default() -> Self {
        EnumerateOptions {
            prune: true,
            upper_bound: None,
        }
    }
}

/// Edge time at departure `t`, or its right limit at `t` when `after` is set.
pub fn edge_time_at<T: Scalar>(f: &TimeFn<T>, t: T, after: bool) -> T {
    for &(p, v) in f.pieces() {
        if t > p || (after && t == p) {
            return v;
        }
    }
    *f.default_value()
}

struct Search<'g, T: Scalar> {
    g: &'g TimedGraph<T>,
    t0: T,
    /// Walks leaving at `t0 = 0` are read as leaving at `0+`.
    after: bool,
    prune: bool,
    bound: T,
    best: T,
    best_walk: Vec<usize>,
    walk: Vec<usize>,
    seen: HashMap<(usize, T), usize>,
    nodes: u64,
}

impl<T: Scalar> Search<'_, T> {
    fn visit(&mut self, s: usize, t: T, left: usize) {
        self.nodes += 1;
        let acc = t - self.t0;
        if self.g.is_goal(s) {
            if acc < self.best {
                self.best = acc;
                self.best_walk = self.walk.clone();
            }
            return;
        }
        if left == 0 {
            return;
        }
        if self.prune {
            match self.seen.get(&(s, t)) {
                Some(&done) if done >= left => return,
                _ => {
                    self.seen.insert((s, t), left);
                }
            }
        }
        for &next in self.g.successors(s) {
            let c = edge_time_at(self.g.edge(s, next).expect("successor edge"), t, self.after);
            if !c.is_finite() {
                continue;
            }
            let arrival = t + c;
            let acc = arrival - self.t0;
            if self.prune && (acc >= self.best || acc > self.bound) {
                continue;
            }
            self.walk.push(next);
            self.visit(next, arrival, left - 1);
            self.walk.pop();
        }
    }
}

/// Minimum travel time from `s0` departing at `t0` over all walks of at most
/// `k` edges that end at their first goal.
pub fn enumerate_walks<T: Scalar>(
    g: &TimedGraph<T>,
    s0: usize,
    t0: T,
    k: usize,
    opts: EnumerateOptions<T>,
) -> WalkEnumeration<T> {
    let mut search = Search {
        g,
        t0,
        after: t0 == T::ZERO,
        prune: opts.prune,
        bound: opts.upper_bound.unwrap_or(T::INFINITY),
        best: T::INFINITY,
        best_walk: Vec::new(),
        walk: vec![s0],
        seen: HashMap::new(),
        nodes: 0,
    };
    search.visit(s0, t0, k);
    WalkEnumeration {
        time: search.best,
        walk: search.best_walk,
        k,
        nodes_expanded: search.nodes,
    }
}

/// Exact minimum travel time over all walks, with no edge bound.
///
/// A first pass with `max(k_max, |S| - 1)` edges finds some finite time `B`
/// whenever a goal is reachable; no walk taking at most `B` can have more than
/// `B / min edge time` edges, so a second pass with that bound is exhaustive.
pub fn min_travel_exhaustive<T: Scalar>(
    g: &TimedGraph<T>,
    s0: usize,
    t0: T,
) -> Result<WalkEnumeration<T>, OracleError> {
    let min_edge = g.min_edge_value().ok_or(OracleError::NoFiniteEdge)?;
    let k0 = (k_max(g).unwrap_or(0) as usize).max(g.len().saturating_sub(1)).max(1);
    let first = enumerate_walks(g, s0, t0, k0, EnumerateOptions::default());
    if !first.time.is_finite() {
        return Ok(first);
    }
    let k1 = walk_bound(first.time, min_edge);
    if k1 <= k0 {
        return Ok(first);
    }
    let mut second = enumerate_walks(
        g,
        s0,
        t0,
        k1,
        EnumerateOptions {
            prune: true,
            upper_bound: Some(first.time),
        },
    );
    second.nodes_expanded += first.nodes_expanded;
    Ok(second)
}

/// Largest edge count of a walk whose travel time does not exceed `budget`.
pub fn walk_bound<T: Scalar>(budget: T, min_edge: T) -> usize {
    (budget.to_f64() / min_edge.to_f64()).floor() as usize
}

/// Dijkstra distances to the nearest goal for graphs whose every edge is a
/// single piece `v if t > 0`. `∞` where no goal is reachable.
pub fn static_shortest<T: Scalar>(g: &TimedGraph<T>) -> Result<Vec<T>, OracleError> {
    let mut reverse: Vec<Vec<(usize, T)>> = vec![Vec::new(); g.len()];
    for (s, t, f) in g.edges() {
        match f.pieces() {
            [(p, v)] if *p == T::ZERO && v.is_finite() => reverse[t].push((s, *v)),
            _ => {
                return Err(OracleError::NotStatic {
                    from: g.id(s),
                    to: g.id(t),
                })
            }
        }
    }
    let mut dist = vec![T::INFINITY; g.len()];
    let mut heap = BinaryHeap::new();
    for goal in g.goals() {
        dist[goal] = T::ZERO;
        heap.push(Reverse((T::ZERO, goal)));
    }
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(s, c) in &reverse[u] {
            if g.is_goal(s) {
                continue;
            }
            let nd = d + c;
            if nd < dist[s] {
                dist[s] = nd;
                heap.push(Reverse((nd, s)));
            }
        }
    }
    Ok(dist)
}
