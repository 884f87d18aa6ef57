//! Piecewise-constant functions of time.
//!
//! A [`PiecewiseConstant`] stores pieces `(p_k, v_k)` with strictly descending
//! breakpoints. Piece `k` holds on the half-open interval `(p_k, p_{k-1}]`,
//! the first piece is unbounded above, and `default` covers `t <= p_n`:
//!
//! ```text
//!        ╭ v_1      if t > p_1
//!        │ v_2      ef t > p_2
//! f(t) = ┤  ⋮
//!        │ v_n      ef t > p_n
//!        ╰ default  else
//! ```
//!
//! Every constructor returns the canonical form: no two adjacent pieces (the
//! default counting as the lowest piece) carry equal values.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfError {
    #[error("breakpoints must be strictly descending: piece {index} has {found} after {previous}")]
    NotDescending {
        index: usize,
        previous: String,
        found: String,
    },
    #[error("simplification tolerance must be non-negative, got {0}")]
    NegativeTolerance(String),
    #[error("minimum over an empty candidate list")]
    NoCandidates,
}

#[derive(Clone, PartialEq)]
pub struct PiecewiseConstant<T, V> {
    pieces: Vec<(T, V)>,
    default: V,
}

/// Travel or edge time as a function of departure time.
pub type TimeFn<T> = PiecewiseConstant<T, T>;

/// Successor choice as a function of departure time; `None` is the empty successor.
pub type PolicyFn<T> = PiecewiseConstant<T, Option<usize>>;

/// One maximal interval `(lower, upper]` of a function; `None` bounds are infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<'a, T, V> {
    pub lower: Option<T>,
    pub upper: Option<T>,
    pub value: &'a V,
}

impl<T: Scalar, V: Clone + PartialEq> PiecewiseConstant<T, V> {
    /// Builds a function from descending `(breakpoint, value)` pairs.
    pub fn new(pieces: Vec<(T, V)>, default: V) -> Result<Self, PfError> {
        for (index, pair) in pieces.windows(2).enumerate() {
            if pair[1].0 >= pair[0].0 {
                return Err(PfError::NotDescending {
                    index: index + 1,
                    previous: pair[0].0.to_string(),
                    found: pair[1].0.to_string(),
                });
            }
        }
        Ok(Self::canonical(pieces, default))
    }

    /// `v` for every `t`.
    pub fn constant(value: V) -> Self {
        PiecewiseConstant {
            pieces: Vec::new(),
            default: value,
        }
    }

    /// `v` for `t > 0`, `default` otherwise.
    pub fn from_zero(value: V, default: V) -> Self {
        Self::canonical(vec![(T::ZERO, value)], default)
    }

    fn canonical(pieces: Vec<(T, V)>, default: V) -> Self {
        let mut out: Vec<(T, V)> = Vec::with_capacity(pieces.len());
        for (p, v) in pieces {
            match out.last_mut() {
                Some(last) if last.1 == v => last.0 = p,
                _ => out.push((p, v)),
            }
        }
        while out.last().is_some_and(|(_, v)| *v == default) {
            out.pop();
        }
        PiecewiseConstant {
            pieces: out,
            default,
        }
    }

    /// Assembles descending segments `(lower, value)`; the final segment must
    /// be unbounded below and becomes the default.
    fn from_segments(segments: Vec<(Option<T>, V)>) -> Self {
        let mut pieces = Vec::with_capacity(segments.len());
        let mut default = None;
        for (lower, value) in segments {
            match lower {
                Some(p) => {
                    debug_assert!(pieces.last().is_none_or(|(q, _): &(T, V)| p < *q));
                    pieces.push((p, value));
                }
                None => {
                    default = Some(value);
                    break;
                }
            }
        }
        Self::canonical(pieces, default.expect("segments must end unbounded below"))
    }

    pub fn eval(&self, t: T) -> &V {
        let idx = self.pieces.partition_point(|(p, _)| t <= *p);
        self.pieces.get(idx).map_or(&self.default, |(_, v)| v)
    }

    /// Right limit at `t`: the value on the interval just after `t`.
    pub fn eval_after(&self, t: T) -> &V {
        let idx = self.pieces.partition_point(|(p, _)| t < *p);
        self.pieces.get(idx).map_or(&self.default, |(_, v)| v)
    }

    pub fn pieces(&self) -> &[(T, V)] {
        &self.pieces
    }

    pub fn default_value(&self) -> &V {
        &self.default
    }

    /// Number of intervals, counting the default one.
    pub fn len(&self) -> usize {
        self.pieces.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = T> + '_ {
        self.pieces.iter().map(|(p, _)| *p)
    }

    /// Value on the unbounded-above interval.
    pub fn top_value(&self) -> &V {
        self.pieces.first().map_or(&self.default, |(_, v)| v)
    }

    /// All intervals from latest to earliest, the default last.
    pub fn intervals(&self) -> impl Iterator<Item = Interval<'_, T, V>> + '_ {
        let n = self.pieces.len();
        (0..=n).map(move |k| Interval {
            lower: self.pieces.get(k).map(|(p, _)| *p),
            upper: if k == 0 { None } else { Some(self.pieces[k - 1].0) },
            value: if k < n { &self.pieces[k].1 } else { &self.default },
        })
    }

    pub fn map_values<W: Clone + PartialEq>(&self, mut f: impl FnMut(&V) -> W) -> PiecewiseConstant<T, W> {
        PiecewiseConstant::canonical(
            self.pieces.iter().map(|(p, v)| (*p, f(v))).collect(),
            f(&self.default),
        )
    }

    /// Re-expresses breakpoints in another time type, re-canonicalizing.
    pub fn convert_time<U: Scalar>(&self, mut f: impl FnMut(T) -> U) -> Result<PiecewiseConstant<U, V>, PfError> {
        PiecewiseConstant::new(
            self.pieces.iter().map(|(p, v)| (f(*p), v.clone())).collect(),
            self.default.clone(),
        )
    }
}

/// Evaluates one function at non-increasing times in amortized constant time.
pub(crate) struct DescendingCursor {
    idx: usize,
}

impl DescendingCursor {
    pub(crate) fn new() -> Self {
        DescendingCursor { idx: 0 }
    }

    pub(crate) fn at<'f, T: Scalar, V>(&mut self, f: &'f PiecewiseConstant<T, V>, t: T) -> &'f V {
        while self.idx < f.pieces.len() && t <= f.pieces[self.idx].0 {
            self.idx += 1;
        }
        f.pieces.get(self.idx).map_or(&f.default, |(_, v)| v)
    }
}

/// Appends the segments of `g(t) = shift + f(t + shift)` restricted to `(lo, hi]`.
fn push_shifted<T: Scalar>(
    segments: &mut Vec<(Option<T>, T)>,
    f: &TimeFn<T>,
    shift: T,
    lo: Option<T>,
    hi: Option<T>,
) {
    let mut j = match hi {
        None => 0,
        Some(h) => f.pieces.partition_point(|(p, _)| *p - shift >= h),
    };
    loop {
        let (lower, value) = match f.pieces.get(j) {
            Some((p, v)) => (Some(*p - shift), *v),
            None => (None, f.default),
        };
        let reached_bottom = match (lower, lo) {
            (None, _) => true,
            (Some(q), Some(l)) => q <= l,
            (Some(_), None) => false,
        };
        let value = shift + value;
        if reached_bottom {
            segments.push((lo, value));
            return;
        }
        segments.push((lower, value));
        j += 1;
    }
}

impl<T: Scalar> PiecewiseConstant<T, T> {
    /// `v` for `t > 0` and `∞` otherwise, the shape of a static edge time.
    pub fn positive(value: T) -> Self {
        Self::from_zero(value, T::INFINITY)
    }

    /// Composition `h(t) = self(t) + f(t + self(t))`, with `∞` absorbing.
    ///
    /// Each finite piece `v` of `self` contributes the shifted copy
    /// `t ↦ v + f(t + v)` restricted to that piece, so every breakpoint of the
    /// result is a breakpoint of `self` or `p - v` for a breakpoint `p` of `f`.
    pub fn chain(&self, f: &TimeFn<T>) -> TimeFn<T> {
        let mut segments = Vec::with_capacity(self.pieces.len() + f.pieces.len() + 1);
        for iv in self.intervals() {
            let v = *iv.value;
            if v.is_finite() {
                push_shifted(&mut segments, f, v, iv.lower, iv.upper);
            } else {
                segments.push((iv.lower, T::INFINITY));
            }
        }
        Self::from_segments(segments)
    }

    /// Stitches a function from a selector: on each selector interval the
    /// result agrees with the function `pick` returns, or `∞` when it returns
    /// `None`.
    pub fn splice<'a, K: Clone + PartialEq>(
        selector: &PiecewiseConstant<T, K>,
        mut pick: impl FnMut(&K) -> Option<&'a TimeFn<T>>,
    ) -> TimeFn<T> {
        let mut segments = Vec::new();
        for iv in selector.intervals() {
            match pick(iv.value) {
                Some(f) => push_shifted(&mut segments, f, T::ZERO, iv.lower, iv.upper),
                None => segments.push((iv.lower, T::INFINITY)),
            }
        }
        Self::from_segments(segments)
    }

    /// Merges runs of adjacent pieces whose values lie within `delta` of the
    /// latest piece of the run, keeping that latest value.
    pub fn simplify(&self, delta: T) -> Result<TimeFn<T>, PfError> {
        if delta < T::ZERO {
            return Err(PfError::NegativeTolerance(delta.to_string()));
        }
        let mut out: Vec<(T, T)> = Vec::with_capacity(self.pieces.len());
        for &(p, v) in &self.pieces {
            match out.last_mut() {
                Some(last) if within(last.1, v, delta) => last.0 = p,
                _ => out.push((p, v)),
            }
        }
        Ok(Self::canonical(out, self.default))
    }

    /// Breakpoints and values agree within `eps`; `∞` matches only `∞`.
    pub fn equal(&self, other: &TimeFn<T>, eps: f64) -> bool {
        self.pieces.len() == other.pieces.len()
            && self.default.close_to(other.default, eps)
            && self
                .pieces
                .iter()
                .zip(&other.pieces)
                .all(|(a, b)| a.0.close_to(b.0, eps) && a.1.close_to(b.1, eps))
    }

    /// Largest pointwise gap, sampled at every breakpoint of either function
    /// and on both unbounded ends. `∞` where exactly one side is infinite.
    pub fn max_difference(&self, other: &TimeFn<T>) -> f64 {
        let gap = |a: T, b: T| match (a.is_finite(), b.is_finite()) {
            (true, true) => (a.to_f64() - b.to_f64()).abs(),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        };
        let mut worst = gap(*self.top_value(), *other.top_value()).max(gap(self.default, other.default));
        for t in self.breakpoints().chain(other.breakpoints()) {
            worst = worst.max(gap(*self.eval(t), *other.eval(t)));
        }
        worst
    }
}

fn within<T: Scalar>(anchor: T, v: T, delta: T) -> bool {
    if anchor == v {
        return true;
    }
    if !anchor.is_finite() || !v.is_finite() {
        return false;
    }
    let diff = if anchor > v { anchor - v } else { v - anchor };
    diff <= delta
}

/// Pointwise minimum over labelled candidates, with the winning label.
///
/// The result is evaluated on the union of all candidate breakpoints. Ties go
/// to the candidate listed first. The witness is `None` wherever the minimum
/// is `∞`.
#[allow(clippy::type_complexity)]
pub fn min_with_witness<T: Scalar, L: Clone + PartialEq>(
    candidates: &[(L, &TimeFn<T>)],
) -> Result<(TimeFn<T>, PiecewiseConstant<T, Option<L>>), PfError> {
    if candidates.is_empty() {
        return Err(PfError::NoCandidates);
    }
    let mut bps: Vec<T> = candidates.iter().flat_map(|(_, f)| f.breakpoints()).collect();
    bps.sort_unstable_by(|a, b| b.cmp(a));
    bps.dedup();

    let best = |values: &mut dyn Iterator<Item = T>| -> (T, Option<L>) {
        let mut min = T::INFINITY;
        let mut arg = None;
        for (i, v) in values.enumerate() {
            if v < min {
                min = v;
                arg = Some(i);
            }
        }
        (min, arg.map(|i| candidates[i].0.clone()))
    };

    let mut values = Vec::with_capacity(bps.len() + 1);
    let mut labels = Vec::with_capacity(bps.len() + 1);
    let (v, l) = best(&mut candidates.iter().map(|(_, f)| *f.top_value()));
    values.push((bps.first().copied(), v));
    labels.push((bps.first().copied(), l));

    let mut cursors: Vec<DescendingCursor> = candidates.iter().map(|_| DescendingCursor::new()).collect();
    for (i, &t) in bps.iter().enumerate() {
        let lower = bps.get(i + 1).copied();
        let (v, l) = best(&mut candidates.iter().zip(cursors.iter_mut()).map(|((_, f), c)| *c.at(f, t)));
        values.push((lower, v));
        labels.push((lower, l));
    }
    Ok((
        PiecewiseConstant::from_segments(values),
        PiecewiseConstant::from_segments(labels),
    ))
}

impl<T: Scalar, V: fmt::Debug> fmt::Debug for PiecewiseConstant<T, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (p, v)) in self.pieces.iter().enumerate() {
            let kw = if k == 0 { "if" } else { "ef" };
            write!(f, "{v:?} {kw} t>{p}; ")?;
        }
        write!(f, "{:?} else}}", self.default)
    }
}

#[derive(Serialize)]
struct ReprRef<'a, T, V> {
    pieces: &'a [(T, V)],
    default: &'a V,
}

#[derive(Deserialize)]
struct Repr<T, V> {
    pieces: Vec<(T, V)>,
    default: V,
}

impl<T: Scalar, V: Serialize> Serialize for PiecewiseConstant<T, V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReprRef {
            pieces: &self.pieces,
            default: &self.default,
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar, V: Deserialize<'de> + Clone + PartialEq> Deserialize<'de> for PiecewiseConstant<T, V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = Repr::<T, V>::deserialize(deserializer)?;
        Self::new(repr.pieces, repr.default).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Fixed;

    fn fx(x: f64) -> Fixed {
        Fixed::from_f64(x)
    }

    fn tf(pieces: &[(f64, f64)]) -> TimeFn<Fixed> {
        TimeFn::new(pieces.iter().map(|&(p, v)| (fx(p), fx(v))).collect(), Fixed::INFINITY).unwrap()
    }

    fn c01() -> TimeFn<Fixed> {
        tf(&[(3.5, 1.2), (0.0, 5.1)])
    }

    #[test]
    fn eval_uses_left_open_right_closed_pieces() {
        let f = c01();
        assert_eq!(*f.eval(fx(4.0)), fx(1.2));
        assert_eq!(*f.eval(fx(3.5)), fx(5.1));
        assert_eq!(*f.eval(fx(0.0)), Fixed::INFINITY);
        assert_eq!(*f.eval(fx(-2.0)), Fixed::INFINITY);
    }

    #[test]
    fn constants() {
        let goal = TimeFn::<Fixed>::constant(Fixed::ZERO);
        assert_eq!(*goal.eval(fx(-100.0)), Fixed::ZERO);
        assert_eq!(*goal.eval(fx(100.0)), Fixed::ZERO);
        let c00 = TimeFn::positive(fx(1.6));
        assert_eq!(*c00.eval(fx(2.0)), fx(1.6));
        assert_eq!(*c00.eval(fx(-1.0)), Fixed::INFINITY);
    }

    #[test]
    fn rejects_ascending_breakpoints() {
        let err = TimeFn::new(vec![(fx(0.0), fx(1.0)), (fx(3.0), fx(2.0))], Fixed::INFINITY).unwrap_err();
        assert!(matches!(err, PfError::NotDescending { index: 1, .. }));
        assert!(TimeFn::new(vec![(fx(1.0), fx(1.0)), (fx(1.0), fx(2.0))], Fixed::INFINITY).is_err());
    }

    #[test]
    fn canonical_merges_equal_neighbours_and_default() {
        let f = tf(&[(5.0, 2.0), (3.0, 2.0), (1.0, 4.0)]);
        assert_eq!(f.pieces(), &[(fx(3.0), fx(2.0)), (fx(1.0), fx(4.0))]);
        let g = TimeFn::new(vec![(fx(1.0), fx(7.0)), (fx(0.0), fx(3.0))], fx(3.0)).unwrap();
        assert_eq!(g.pieces(), &[(fx(1.0), fx(7.0))]);
    }

    #[test]
    fn chain_self_loop_into_edge() {
        let h = TimeFn::positive(fx(1.6)).chain(&c01());
        assert_eq!(h, tf(&[(1.9, 2.8), (0.0, 6.7)]));
    }

    #[test]
    fn chain_zero_edge_is_identity_on_positive_times() {
        let f = tf(&[(7.0, 3.0), (2.0, 1.0), (0.0, 9.0)]);
        assert_eq!(TimeFn::positive(Fixed::ZERO).chain(&f), f);
    }

    #[test]
    fn chain_into_goal_returns_edge() {
        let goal = TimeFn::constant(Fixed::ZERO);
        assert_eq!(c01().chain(&goal), c01());
    }

    #[test]
    fn min_with_witness_matches_published_optimum() {
        let into_goal = c01();
        let self_loop = tf(&[(1.9, 2.8), (0.3, 4.4), (0.0, 6.0)]);
        let (min, arg) = min_with_witness(&[(0usize, &self_loop), (1usize, &into_goal)]).unwrap();
        assert_eq!(min, tf(&[(3.5, 1.2), (1.9, 2.8), (0.3, 4.4), (0.0, 5.1)]));
        assert_eq!(
            arg.pieces(),
            &[(fx(3.5), Some(1)), (fx(0.3), Some(0)), (fx(0.0), Some(1))]
        );
        assert_eq!(*arg.default_value(), None);
    }

    #[test]
    fn min_with_witness_single_and_ties() {
        let f = c01();
        let (min, arg) = min_with_witness(&[("a", &f)]).unwrap();
        assert_eq!(min, f);
        assert_eq!(arg.pieces(), &[(fx(0.0), Some("a"))]);

        let (_, arg) = min_with_witness(&[("first", &f), ("second", &f)]).unwrap();
        assert_eq!(arg.pieces(), &[(fx(0.0), Some("first"))]);

        assert_eq!(
            min_with_witness::<Fixed, u8>(&[]).unwrap_err(),
            PfError::NoCandidates
        );
    }

    #[test]
    fn witness_may_switch_where_minimum_is_flat() {
        let a = tf(&[(1.0, 9.0), (0.0, 5.0)]);
        let b = tf(&[(1.0, 5.0), (0.0, 9.0)]);
        let (min, arg) = min_with_witness(&[(0u8, &a), (1u8, &b)]).unwrap();
        assert_eq!(min, TimeFn::positive(fx(5.0)));
        assert_eq!(arg.pieces(), &[(fx(1.0), Some(1)), (fx(0.0), Some(0))]);
    }

    #[test]
    fn simplify_cases() {
        let equal = tf(&[(1.0, 2.0), (0.0, 2.0)]);
        assert_eq!(equal.simplify(Fixed::ZERO).unwrap(), TimeFn::positive(fx(2.0)));

        let near = TimeFn::new(vec![(fx(1.0), fx(2.0)), (fx(0.0), fx(2.05))], Fixed::INFINITY).unwrap();
        let merged = near.simplify(fx(0.1)).unwrap();
        assert_eq!(merged.pieces().len(), 1);
        assert!(merged.max_difference(&near) <= 0.1);
        assert_eq!(*merged.eval(fx(0.5)), fx(2.0));

        let far = tf(&[(1.0, 2.0), (0.0, 3.0)]);
        assert_eq!(far.simplify(fx(0.1)).unwrap(), far);
        assert!(far.simplify(fx(-0.1)).is_err());
    }

    #[test]
    fn simplify_anchors_on_latest_value() {
        // 2.0, 2.08, 2.16: chaining neighbours would drift past delta.
        let f = tf(&[(2.0, 2.0), (1.0, 2.08), (0.0, 2.16)]);
        let s = f.simplify(fx(0.1)).unwrap();
        assert_eq!(s, tf(&[(1.0, 2.0), (0.0, 2.16)]));
    }

    #[test]
    fn equality_with_tolerance() {
        let f = c01();
        assert!(f.equal(&f, 0.0));
        assert!(f.equal(&f.simplify(Fixed::ZERO).unwrap(), 0.0));
        let g = tf(&[(3.5, 1.2), (0.0, 5.100001)]);
        assert!(!f.equal(&g, 0.0));
        assert!(f.equal(&g, 1e-6));
        assert!(!f.equal(&TimeFn::constant(fx(1.0)), 1.0));
    }

    #[test]
    fn splice_follows_selector() {
        let sel = PiecewiseConstant::<Fixed, Option<usize>>::new(
            vec![(fx(3.0), Some(1)), (fx(0.0), Some(0))],
            None,
        )
        .unwrap();
        let a = TimeFn::positive(fx(1.6));
        let b = c01();
        let h = TimeFn::splice(&sel, |k| match k {
            Some(0) => Some(&a),
            Some(1) => Some(&b),
            _ => None,
        });
        assert_eq!(h, tf(&[(3.5, 1.2), (3.0, 5.1), (0.0, 1.6)]));
    }

    #[test]
    fn json_round_trip() {
        let f = c01();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"pieces":[[3.5,1.2],[0.0,5.1]],"default":"inf"}"#);
        let back: TimeFn<Fixed> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);

        let policy = PolicyFn::<Fixed>::new(vec![(fx(3.5), Some(1)), (fx(0.0), Some(0))], None).unwrap();
        let s = serde_json::to_string(&policy).unwrap();
        assert_eq!(s, r#"{"pieces":[[3.5,1],[0.0,0]],"default":null}"#);
        assert_eq!(serde_json::from_str::<PolicyFn<Fixed>>(&s).unwrap(), policy);

        let bad = r#"{"pieces":[[0,1],[3,2]],"default":"inf"}"#;
        assert!(serde_json::from_str::<TimeFn<Fixed>>(bad).is_err());
    }
}
