use thiserror::Error;

use super::graph::TimedGraph;
use super::solver::{PolicyTable, TravelTable};
use crate::pcf::TimeFn;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("travel time from state {state} at t={time} is infinite")]
    Unreachable { state: u64, time: String },
    #[error("policy is empty at state {state}, t={time}")]
    EmptyPolicy { state: u64, time: String },
    #[error("policy at state {state} names {successor}, which has no edge")]
    MissingEdge { state: u64, successor: u64 },
    #[error("edge {from} -> {to} is infinite at t={time}")]
    InfiniteEdge { from: u64, to: u64, time: String },
    #[error("no goal after {0} steps; policy and table disagree")]
    StepBound(usize),
    #[error("path takes {path} but the table says {table}")]
    TableMismatch { path: String, table: String },
    #[error("departure window ({lo}, {hi}] does not overlap t > 0")]
    EmptyWindow { lo: String, hi: String },
    #[error("travel time is infinite everywhere in the window")]
    NoFiniteDeparture,
}

/// Walk from a start state to a goal, with per-step timing.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult<T> {
    /// Visited states by dense index; the last one is a goal.
    pub states: Vec<usize>,
    /// `departures[k]` leaves `states[k]`, `arrivals[k]` reaches `states[k+1]`.
    pub departures: Vec<T>,
    pub arrivals: Vec<T>,
    pub travel_time: T,
    pub arrival_time: T,
}

impl<T: Scalar> PathResult<T> {
    pub fn departure_time(&self) -> T {
        self.departures.first().copied().unwrap_or(self.arrival_time)
    }

    /// True when some state appears more than once.
    pub fn has_cycle(&self) -> bool {
        let mut seen = self.states.clone();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }
}

/// Follows the policy from `(s0, t0)` until a goal is reached. The walk may
/// revisit states; its total time must equal the table entry at `(s0, t0)`.
///
/// Departure at `t0 = 0` is read as the right limit `0+`, since every edge is
/// infinite at exactly zero. The whole walk then runs an infinitesimal
/// amount late, so every later lookup takes the right limit too.
pub fn extract_path<T: Scalar>(
    g: &TimedGraph<T>,
    pi: &PolicyTable<T>,
    tt: &TravelTable<T>,
    s0: usize,
    t0: T,
) -> Result<PathResult<T>, PathError> {
    let after = t0 == T::ZERO;
    let at = |f: &TimeFn<T>, t: T| if after { *f.eval_after(t) } else { *f.eval(t) };
    let expected = at(tt.row(s0), t0);
    let mut result = PathResult {
        states: vec![s0],
        departures: Vec::new(),
        arrivals: Vec::new(),
        travel_time: T::ZERO,
        arrival_time: t0,
    };
    if g.is_goal(s0) {
        return Ok(result);
    }
    if !expected.is_finite() {
        return Err(PathError::Unreachable {
            state: g.id(s0),
            time: t0.to_string(),
        });
    }
    let min_step = g.min_edge_value().expect("finite travel time implies a finite edge");
    let bound = expected.ceil_ratio(min_step) as usize + 1;

    let (mut s, mut t) = (s0, t0);
    while !g.is_goal(s) {
        if result.departures.len() >= bound {
            return Err(PathError::StepBound(bound));
        }
        let choice = if after { pi.row(s).eval_after(t) } else { pi.row(s).eval(t) };
        let next = choice.ok_or_else(|| PathError::EmptyPolicy {
            state: g.id(s),
            time: t.to_string(),
        })?;
        let edge = g.edge(s, next).ok_or_else(|| PathError::MissingEdge {
            state: g.id(s),
            successor: g.id(next),
        })?;
        let c = at(edge, t);
        if !c.is_finite() {
            return Err(PathError::InfiniteEdge {
                from: g.id(s),
                to: g.id(next),
                time: t.to_string(),
            });
        }
        result.departures.push(t);
        t = t + c;
        result.arrivals.push(t);
        result.states.push(next);
        s = next;
    }
    result.arrival_time = t;
    result.travel_time = t - t0;
    if !result.travel_time.close_to(expected, T::DEFAULT_EPSILON * result.states.len() as f64) {
        return Err(PathError::TableMismatch {
            path: result.travel_time.to_string(),
            table: expected.to_string(),
        });
    }
    Ok(result)
}

/// Departure intervals `(lo, hi]` attaining the minimum travel time.
#[derive(Debug, Clone, PartialEq)]
pub struct BestDeparture<T> {
    /// Ascending in time.
    pub intervals: Vec<(T, T)>,
    pub value: T,
}

/// Minimum of a travel-time row over the departure window `(lo, hi]`.
pub fn best_departure<T: Scalar>(row: &TimeFn<T>, lo: T, hi: T) -> Result<BestDeparture<T>, PathError> {
    let lo = lo.max(T::ZERO);
    if hi <= lo {
        return Err(PathError::EmptyWindow {
            lo: lo.to_string(),
            hi: hi.to_string(),
        });
    }
    let mut clipped: Vec<(T, T, T)> = Vec::new();
    for iv in row.intervals() {
        let a = iv.lower.map_or(lo, |p| p.max(lo));
        let b = iv.upper.map_or(hi, |p| p.min(hi));
        if a < b {
            clipped.push((a, b, *iv.value));
        }
    }
    let value = clipped
        .iter()
        .map(|&(_, _, v)| v)
        .filter(|v| v.is_finite())
        .min()
        .ok_or(PathError::NoFiniteDeparture)?;
    let mut intervals: Vec<(T, T)> = clipped
        .into_iter()
        .filter(|&(_, _, v)| v == value)
        .map(|(a, b, _)| (a, b))
        .collect();
    intervals.reverse();
    Ok(BestDeparture { intervals, value })
}
