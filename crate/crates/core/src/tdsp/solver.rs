use rayon::prelude::*;
use thiserror::Error;

use super::graph::{k_max, TimedGraph};
use crate::pcf::{min_with_witness, PolicyFn, TimeFn};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("iteration cap must be at least 1")]
    ZeroCap,
    #[error("no non-goal state can reach a goal")]
    UnreachableGoal,
    #[error("not converged after {cap} sweeps; residuals {residuals:?}")]
    NotConverged {
        cap: usize,
        /// `(state id, largest change in the final sweep)` for every row still moving.
        residuals: Vec<(u64, f64)>,
    },
    #[error("policy at state {state} names {successor}, which is not a successor")]
    InvalidPolicy { state: u64, successor: u64 },
}

/// Per-state travel-time functions after some number of sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTable<T: Scalar> {
    pub rows: Vec<TimeFn<T>>,
    pub iteration: usize,
}

impl<T: Scalar> TravelTable<T> {
    pub fn row(&self, state: usize) -> &TimeFn<T> {
        &self.rows[state]
    }

    pub fn max_pieces(&self) -> usize {
        self.rows.iter().map(|r| r.pieces().len()).max().unwrap_or(0)
    }
}

/// Per-state successor choice as a function of departure time.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable<T: Scalar> {
    pub rows: Vec<PolicyFn<T>>,
}

impl<T: Scalar> PolicyTable<T> {
    pub fn row(&self, state: usize) -> &PolicyFn<T> {
        &self.rows[state]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cap: usize,
    /// Tolerance of the convergence test; zero in fixed-point mode.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepStats {
    pub sweep: usize,
    pub rows_changed: usize,
    pub subdomains_changed: usize,
    pub max_row_pieces: usize,
    pub max_subdomains: usize,
}

#[derive(Debug, Clone)]
pub struct Solution<T: Scalar> {
    pub travel: TravelTable<T>,
    pub policy: PolicyTable<T>,
    /// Sweep at which the convergence test first held.
    pub iterations: usize,
    pub converged: bool,
    pub k_max: Option<u64>,
    /// Last sweep that changed any subdomain set (0 if none ever did).
    pub subdomains_settled_at: usize,
    /// States with no route to a goal, pinned to `∞`.
    pub unreachable: Vec<usize>,
    /// `(state id, largest change)` for rows that moved in the final sweep;
    /// empty once converged.
    pub residuals: Vec<(u64, f64)>,
    pub trace: Vec<SweepStats>,
}

/// Default iteration cap.
///
/// `2·k_max + 2` covers the subdomain bound; the second term covers value
/// propagation, which needs as many sweeps as the longest optimal walk has
/// edges (at most `(max breakpoint + (|S|-1)·max value) / min value`).
pub fn default_cap<T: Scalar>(g: &TimedGraph<T>) -> usize {
    let from_kmax = k_max(g).map_or(2, |k| 2 * k as usize + 2);
    let walk = match (g.min_edge_value(), g.max_edge_value()) {
        (Some(lo), Some(hi)) => {
            let span = g.max_breakpoint().to_f64() + (g.len().saturating_sub(1)) as f64 * hi.to_f64();
            (span / lo.to_f64()).ceil() as usize + 2
        }
        _ => 2,
    };
    from_kmax.max(walk)
}

impl SolveOptions {
    pub fn for_graph<T: Scalar>(g: &TimedGraph<T>) -> Self {
        SolveOptions {
            cap: default_cap(g),
            epsilon: T::DEFAULT_EPSILON,
        }
    }
}

fn goal_row<T: Scalar>() -> TimeFn<T> {
    TimeFn::constant(T::ZERO)
}

fn initial_row<T: Scalar>() -> TimeFn<T> {
    TimeFn::from_zero(T::ZERO, T::INFINITY)
}

/// Subdomain set of `chain(edge, row)` given the subdomain set of `row`:
/// the edge's breakpoints plus every `q - v` landing strictly inside the
/// edge piece whose value `v` shifted it. Sets are kept descending.
fn shifted_subdomains<T: Scalar>(edge: &TimeFn<T>, successor_set: &[T], out: &mut Vec<T>) {
    for iv in edge.intervals() {
        let v = *iv.value;
        if let Some(lo) = iv.lower {
            out.push(lo);
        }
        if !v.is_finite() {
            continue;
        }
        let start = match iv.upper {
            Some(hi) => successor_set.partition_point(|&q| q - v >= hi),
            None => 0,
        };
        for &q in &successor_set[start..] {
            let x = q - v;
            if iv.lower.is_some_and(|lo| x <= lo) {
                break;
            }
            out.push(x);
        }
    }
}

fn finish_set<T: Scalar>(mut set: Vec<T>) -> Vec<T> {
    set.sort_unstable_by(|a, b| b.cmp(a));
    set.dedup();
    set
}

fn sets_equal<T: Scalar>(a: &[T], b: &[T], eps: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.close_to(*y, eps))
}

struct Row<T> {
    travel: TimeFn<T>,
    policy: PolicyFn<T>,
    subdomains: Vec<T>,
}

fn sweep_state<T: Scalar>(
    g: &TimedGraph<T>,
    s: usize,
    pinned: bool,
    prev: &[TimeFn<T>],
    prev_sets: &[Vec<T>],
) -> Row<T> {
    if g.is_goal(s) {
        return Row {
            travel: goal_row(),
            policy: PolicyFn::constant(None),
            subdomains: Vec::new(),
        };
    }
    let succ = g.successors(s);
    if pinned || succ.is_empty() {
        return Row {
            travel: TimeFn::constant(T::INFINITY),
            policy: PolicyFn::constant(None),
            subdomains: vec![T::ZERO],
        };
    }
    let immediate: Vec<TimeFn<T>> = succ
        .iter()
        .map(|&t| g.edge(s, t).expect("successor edge").chain(&prev[t]))
        .collect();
    let candidates: Vec<(usize, &TimeFn<T>)> = succ.iter().copied().zip(immediate.iter()).collect();
    let (travel, policy) = min_with_witness(&candidates).expect("at least one successor");

    let mut set = vec![T::ZERO];
    for &t in succ {
        shifted_subdomains(g.edge(s, t).expect("successor edge"), &prev_sets[t], &mut set);
    }
    Row {
        travel,
        policy,
        subdomains: finish_set(set),
    }
}

/// Runs optimal-policy value iteration, returning the tables after the last
/// sweep whether or not they converged.
pub fn iterate<T: Scalar>(g: &TimedGraph<T>, opts: &SolveOptions) -> Result<Solution<T>, SolveError> {
    if opts.cap == 0 {
        return Err(SolveError::ZeroCap);
    }
    let reach = g.can_reach_goal();
    if !(0..g.len()).any(|s| !g.is_goal(s) && reach[s]) && (0..g.len()).any(|s| !g.is_goal(s)) {
        return Err(SolveError::UnreachableGoal);
    }
    let pinned: Vec<bool> = reach.iter().map(|r| !r).collect();
    let unreachable: Vec<usize> = (0..g.len()).filter(|&s| pinned[s]).collect();

    let n = g.len();
    let mut travel: Vec<TimeFn<T>> = (0..n)
        .map(|s| if g.is_goal(s) { goal_row() } else { initial_row() })
        .collect();
    let mut sets: Vec<Vec<T>> = (0..n)
        .map(|s| if g.is_goal(s) { Vec::new() } else { vec![T::ZERO] })
        .collect();
    let mut policy: Vec<PolicyFn<T>> = vec![PolicyFn::constant(None); n];
    let mut trace = Vec::new();
    let mut settled_at = 0;
    let mut residuals = Vec::new();

    for sweep in 1..=opts.cap {
        let rows: Vec<Row<T>> = (0..n)
            .into_par_iter()
            .map(|s| sweep_state(g, s, pinned[s], &travel, &sets))
            .collect();

        let mut rows_changed = 0;
        let mut subdomains_changed = 0;
        residuals.clear();
        for (s, row) in rows.iter().enumerate() {
            if !row.travel.equal(&travel[s], opts.epsilon) {
                rows_changed += 1;
                residuals.push((g.id(s), row.travel.max_difference(&travel[s])));
            }
            if !sets_equal(&row.subdomains, &sets[s], opts.epsilon) {
                subdomains_changed += 1;
            }
        }
        if subdomains_changed > 0 {
            settled_at = sweep;
        }
        trace.push(SweepStats {
            sweep,
            rows_changed,
            subdomains_changed,
            max_row_pieces: rows.iter().map(|r| r.travel.pieces().len()).max().unwrap_or(0),
            max_subdomains: rows.iter().map(|r| r.subdomains.len()).max().unwrap_or(0),
        });

        travel.clear();
        sets.clear();
        policy.clear();
        for row in rows {
            travel.push(row.travel);
            policy.push(row.policy);
            sets.push(row.subdomains);
        }

        if rows_changed == 0 && subdomains_changed == 0 {
            return Ok(Solution {
                travel: TravelTable { rows: travel, iteration: sweep },
                policy: PolicyTable { rows: policy },
                iterations: sweep,
                converged: true,
                k_max: k_max(g).ok(),
                subdomains_settled_at: settled_at,
                unreachable,
                residuals: Vec::new(),
                trace,
            });
        }
    }

    Ok(Solution {
        travel: TravelTable {
            rows: travel,
            iteration: opts.cap,
        },
        policy: PolicyTable { rows: policy },
        iterations: opts.cap,
        converged: false,
        k_max: k_max(g).ok(),
        subdomains_settled_at: settled_at,
        unreachable,
        residuals,
        trace,
    })
}

/// Solves for the optimal travel policy with the given iteration cap and
/// the time type's default tolerance.
pub fn solve<T: Scalar>(g: &TimedGraph<T>, cap: usize) -> Result<Solution<T>, SolveError> {
    solve_with(
        g,
        &SolveOptions {
            cap,
            epsilon: T::DEFAULT_EPSILON,
        },
    )
}

pub fn solve_with<T: Scalar>(g: &TimedGraph<T>, opts: &SolveOptions) -> Result<Solution<T>, SolveError> {
    let solution = iterate(g, opts)?;
    if solution.converged {
        Ok(solution)
    } else {
        Err(SolveError::NotConverged {
            cap: opts.cap,
            residuals: solution.residuals,
        })
    }
}

/// Travel-time table induced by a fixed policy.
pub fn evaluate_policy<T: Scalar>(
    g: &TimedGraph<T>,
    pi: &PolicyTable<T>,
    cap: usize,
) -> Result<TravelTable<T>, SolveError> {
    evaluate_policy_with(
        g,
        pi,
        &SolveOptions {
            cap,
            epsilon: T::DEFAULT_EPSILON,
        },
    )
}

pub fn evaluate_policy_with<T: Scalar>(
    g: &TimedGraph<T>,
    pi: &PolicyTable<T>,
    opts: &SolveOptions,
) -> Result<TravelTable<T>, SolveError> {
    if opts.cap == 0 {
        return Err(SolveError::ZeroCap);
    }
    assert_eq!(pi.rows.len(), g.len(), "policy table size must match the graph");
    for (s, row) in pi.rows.iter().enumerate() {
        if g.is_goal(s) {
            continue;
        }
        for iv in row.intervals() {
            if let Some(t) = *iv.value {
                if t >= g.len() || g.edge(s, t).is_none() {
                    return Err(SolveError::InvalidPolicy {
                        state: g.id(s),
                        successor: if t < g.len() { g.id(t) } else { t as u64 },
                    });
                }
            }
        }
    }

    let n = g.len();
    let mut travel: Vec<TimeFn<T>> = (0..n)
        .map(|s| if g.is_goal(s) { goal_row() } else { initial_row() })
        .collect();
    let mut changed = Vec::new();
    for sweep in 1..=opts.cap {
        let next: Vec<TimeFn<T>> = (0..n)
            .into_par_iter()
            .map(|s| {
                if g.is_goal(s) {
                    return goal_row();
                }
                let mut used: Vec<usize> = pi.rows[s].intervals().filter_map(|iv| *iv.value).collect();
                used.sort_unstable();
                used.dedup();
                let immediate: Vec<TimeFn<T>> = used
                    .iter()
                    .map(|&t| g.edge(s, t).expect("validated policy edge").chain(&travel[t]))
                    .collect();
                TimeFn::splice(&pi.rows[s], |k| {
                    k.and_then(|t| used.binary_search(&t).ok().map(|i| &immediate[i]))
                })
            })
            .collect();
        changed.clear();
        changed.extend(
            (0..n)
                .filter(|&s| !next[s].equal(&travel[s], opts.epsilon))
                .map(|s| (g.id(s), next[s].max_difference(&travel[s]))),
        );
        travel = next;
        if changed.is_empty() {
            return Ok(TravelTable {
                rows: travel,
                iteration: sweep,
            });
        }
    }
    Err(SolveError::NotConverged {
        cap: opts.cap,
        residuals: changed,
    })
}
