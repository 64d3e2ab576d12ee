//! Piecewise-linear convex value functions for 2-state POMDPs.
//!
//! A value function over the scalar belief `b` = Pr(OK) is the upper
//! envelope of a set of lines (α-vectors). An α-vector's value at `b` is
//!
//! ```text
//! value(b) = v_fail + b * (v_ok - v_fail)
//! ```
//!
//! Each vector also carries its action tag and a reach-probability pair
//! `(p_ok, p_fail_reach)`: the probability, from each state, that the
//! conditional plan behind the vector reaches and successfully executes
//! the monitored action. These propagate through the backups exactly like
//! the value components, minus the cost terms, and are what the online
//! value-adjustment combiner consumes.
//!
//! At two states the exact upper envelope replaces any linear-programming
//! pruning: a vector survives iff it is the strict winner on a subinterval
//! of [0, 1] of positive length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Report, SensorModel, TransitionModel};

/// Tolerance for "two lines are identical" and for strict-winner tests.
pub const ENVELOPE_EPS: f64 = 1e-12;

/// Action tag carried by an α-vector.
///
/// `Skip` marks an action-stage vector copied verbatim into a monitoring
/// stage: choosing the empty monitoring set reproduces the action-stage
/// value function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Continue,
    Abandon,
    Monitor,
    Skip,
}

impl Action {
    /// Tie-break rank: among value-tied vectors prefer continue over skip
    /// over monitor over abandon (never pay a cost or abandon for zero
    /// gain). Lower wins.
    fn rank(self) -> u8 {
        match self {
            Action::Continue => 0,
            Action::Skip => 1,
            Action::Monitor => 2,
            Action::Abandon => 3,
        }
    }
}

/// A line over belief space, tagged with its action and reach pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    /// Value at state OK (b = 1).
    pub v_ok: f64,
    /// Value at state FAIL (b = 0).
    pub v_fail: f64,
    pub action: Action,
    /// Reach probability from state OK.
    pub p_ok: f64,
    /// Reach probability from state FAIL.
    pub p_fail_reach: f64,
}

impl AlphaVector {
    pub fn new(v_ok: f64, v_fail: f64, action: Action, p_ok: f64, p_fail_reach: f64) -> Self {
        AlphaVector { v_ok, v_fail, action, p_ok, p_fail_reach }
    }

    /// Linear value at belief `b`.
    pub fn value(&self, b: f64) -> f64 {
        self.v_fail + b * (self.v_ok - self.v_fail)
    }

    fn identical_to(&self, other: &AlphaVector) -> bool {
        (self.v_ok - other.v_ok).abs() < ENVELOPE_EPS
            && (self.v_fail - other.v_fail).abs() < ENVELOPE_EPS
    }

    /// True when `self` is preferred over `other` under the tie-break
    /// rule, values being equal.
    fn tie_preferred(&self, other: &AlphaVector) -> bool {
        let (ra, rb) = (self.action.rank(), other.action.rank());
        if ra != rb {
            return ra < rb;
        }
        (self.v_ok, self.v_fail) < (other.v_ok, other.v_fail)
    }
}

/// Which of the two per-step decision points a set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Monitoring,
    Action,
}

/// A pruned ℵ-set: the upper envelope of its α-vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSet {
    pub vectors: Vec<AlphaVector>,
    pub stage_kind: StageKind,
}

impl VectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Max over the set's lines at `b`, plus one maximizing vector.
///
/// Ties within [`ENVELOPE_EPS`] are broken by action rank (continue >
/// skip > monitor > abandon), then by the lexicographically smaller
/// `(v_ok, v_fail)`.
pub fn evaluate<'a>(set: &'a VectorSet, b: f64) -> Result<(f64, &'a AlphaVector)> {
    if set.vectors.is_empty() {
        return Err(Error::Contract("evaluate on an empty vector set".to_string()));
    }
    let best_val = set
        .vectors
        .iter()
        .map(|v| v.value(b))
        .fold(f64::NEG_INFINITY, f64::max);
    let best = set
        .vectors
        .iter()
        .filter(|v| v.value(b) >= best_val - ENVELOPE_EPS)
        .reduce(|a, v| if v.tie_preferred(a) { v } else { a })
        .expect("nonempty set has a maximizer");
    Ok((best_val, best))
}

/// Exact upper-envelope pruning over b in [0, 1].
///
/// Returns the minimal subset whose pointwise max equals the input's.
/// Duplicate lines collapse to their tie-break winner; each survivor is
/// the winner at the midpoint of some positive-length subinterval.
/// Action tags and reach pairs ride along unchanged. Survivors come back
/// ordered left to right by where they win.
pub fn prune_envelope(set: &VectorSet) -> VectorSet {
    VectorSet {
        vectors: prune_lines(&set.vectors),
        stage_kind: set.stage_kind,
    }
}

/// One surviving line of an upper envelope: which input line, and from
/// which belief it starts winning (it wins until the next piece's start).
struct Piece {
    idx: usize,
    start: f64,
}

/// Exact upper envelope of lines given as `(v_ok, v_fail)` pairs, by a
/// monotone-chain sweep over lines sorted by slope: O(m log m) instead
/// of enumerating pairwise crossings.
fn upper_envelope(lines: &[(f64, f64)]) -> Vec<Piece> {
    let slope = |i: usize| lines[i].0 - lines[i].1;
    let icpt = |i: usize| lines[i].1;
    let mut order: Vec<usize> = (0..lines.len()).collect();
    order.sort_by(|&a, &b| {
        slope(a)
            .partial_cmp(&slope(b))
            .unwrap()
            .then(icpt(a).partial_cmp(&icpt(b)).unwrap())
    });

    let mut stack: Vec<Piece> = Vec::new();
    for &i in &order {
        loop {
            let Some(top) = stack.last() else {
                stack.push(Piece { idx: i, start: 0.0 });
                break;
            };
            let ds = slope(i) - slope(top.idx);
            if ds <= 0.0 {
                // equal slope: only a strictly higher line can win
                if icpt(i) > icpt(top.idx) {
                    stack.pop();
                    continue;
                }
                break;
            }
            // where the steeper line overtakes the current top
            let x = (icpt(top.idx) - icpt(i)) / ds;
            if x <= top.start {
                stack.pop();
                continue;
            }
            if x >= 1.0 {
                break;
            }
            stack.push(Piece { idx: i, start: x });
            break;
        }
    }
    stack
}

/// Drops envelope pieces that never win by more than [`ENVELOPE_EPS`] at
/// their interval midpoint (the runner-up on a convex envelope is always
/// a neighboring piece), recomputing interval starts after each drop.
fn margin_filter(lines: &[(f64, f64)], mut pieces: Vec<Piece>) -> Vec<Piece> {
    let value = |i: usize, b: f64| lines[i].1 + b * (lines[i].0 - lines[i].1);
    let slope = |i: usize| lines[i].0 - lines[i].1;
    let icpt = |i: usize| lines[i].1;
    loop {
        if pieces.len() <= 1 {
            return pieces;
        }
        pieces[0].start = 0.0;
        for j in 1..pieces.len() {
            let (a, b) = (pieces[j - 1].idx, pieces[j].idx);
            let ds = slope(b) - slope(a);
            pieces[j].start =
                if ds > 0.0 { (icpt(a) - icpt(b)) / ds } else { pieces[j - 1].start };
        }
        let mut drop = None;
        for j in 0..pieces.len() {
            let start = pieces[j].start;
            let end = if j + 1 < pieces.len() { pieces[j + 1].start } else { 1.0 };
            if end - start <= 0.0 {
                drop = Some(j);
                break;
            }
            let mid = 0.5 * (start + end);
            let mut runner_up = f64::NEG_INFINITY;
            if j > 0 {
                runner_up = runner_up.max(value(pieces[j - 1].idx, mid));
            }
            if j + 1 < pieces.len() {
                runner_up = runner_up.max(value(pieces[j + 1].idx, mid));
            }
            if runner_up > f64::NEG_INFINITY
                && value(pieces[j].idx, mid) - runner_up <= ENVELOPE_EPS
            {
                drop = Some(j);
                break;
            }
        }
        match drop {
            Some(j) => {
                pieces.remove(j);
            }
            None => return pieces,
        }
    }
}

fn prune_lines(lines: &[AlphaVector]) -> Vec<AlphaVector> {
    // collapse value-identical lines first so ties at witness points are
    // between genuinely distinct lines; sorting makes duplicates adjacent
    let mut sorted = lines.to_vec();
    sorted.sort_by(|a, b| {
        a.v_ok
            .partial_cmp(&b.v_ok)
            .unwrap()
            .then(a.v_fail.partial_cmp(&b.v_fail).unwrap())
    });
    let mut distinct: Vec<AlphaVector> = Vec::with_capacity(sorted.len());
    for v in sorted {
        if let Some(last) = distinct.last_mut() {
            if last.identical_to(&v) {
                if v.tie_preferred(last) {
                    *last = v;
                }
                continue;
            }
        }
        distinct.push(v);
    }
    if distinct.len() <= 1 {
        return distinct;
    }

    let points: Vec<(f64, f64)> = distinct.iter().map(|v| (v.v_ok, v.v_fail)).collect();
    let pieces = margin_filter(&points, upper_envelope(&points));
    pieces.into_iter().map(|p| distinct[p.idx]).collect()
}

/// Terminal action-stage set: the constant abandon vector against the
/// continue vector worth `plan_value` on success and `fail_value` on a
/// failed precondition.
pub fn terminal_set(plan_value: f64, fail_value: f64, alt_value: f64) -> VectorSet {
    let vectors = vec![
        AlphaVector::new(alt_value, alt_value, Action::Abandon, 0.0, 0.0),
        AlphaVector::new(plan_value, fail_value, Action::Continue, 1.0, 0.0),
    ];
    prune_envelope(&VectorSet { vectors, stage_kind: StageKind::Action })
}

/// Monitoring-stage backup.
///
/// Enumerates every observation strategy (a successor vector for each of
/// the two reports) over the pruned action-stage set `next`:
///
/// ```text
/// v_ok   = -cost + (1 - FN) * h.v_ok   + FN * f.v_ok
/// v_fail = -cost + FP * h.v_fail + (1 - FP) * f.v_fail
/// ```
///
/// where `h` follows a "holds" report and `f` a "failed" report. Reach
/// pairs combine by the same weighted sums without the cost term. Every
/// vector of `next` is also copied verbatim, retagged `Skip` (the empty
/// monitoring set reproduces the action-stage value function). The union
/// is pruned.
///
/// The |next|² pairs are never materialized: at any belief the best
/// strategy chooses its holds-successor and failed-successor
/// independently, so the envelope of all pairs is the interval-wise sum
/// of two |next|-line envelopes. Only the O(|next|) pairs that are
/// optimal somewhere on [0, 1] are generated.
pub fn monitoring_backup(next: &VectorSet, sensor: &SensorModel, cost: f64) -> VectorSet {
    let holds_ok = sensor.pr_given_ok(Report::Holds);
    let failed_ok = sensor.pr_given_ok(Report::Failed);
    let holds_fail = sensor.pr_given_fail(Report::Holds);
    let failed_fail = sensor.pr_given_fail(Report::Failed);

    let mut vectors = Vec::with_capacity(3 * next.len() + 1);
    if !next.is_empty() {
        let h_lines: Vec<(f64, f64)> = next
            .vectors
            .iter()
            .map(|h| (holds_ok * h.v_ok, holds_fail * h.v_fail))
            .collect();
        let f_lines: Vec<(f64, f64)> = next
            .vectors
            .iter()
            .map(|f| (failed_ok * f.v_ok, failed_fail * f.v_fail))
            .collect();
        let h_pieces = upper_envelope(&h_lines);
        let f_pieces = upper_envelope(&f_lines);

        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let h = &next.vectors[h_pieces[i].idx];
            let f = &next.vectors[f_pieces[j].idx];
            vectors.push(AlphaVector::new(
                -cost + holds_ok * h.v_ok + failed_ok * f.v_ok,
                -cost + holds_fail * h.v_fail + failed_fail * f.v_fail,
                Action::Monitor,
                holds_ok * h.p_ok + failed_ok * f.p_ok,
                holds_fail * h.p_fail_reach + failed_fail * f.p_fail_reach,
            ));
            let h_end = if i + 1 < h_pieces.len() { h_pieces[i + 1].start } else { 1.0 };
            let f_end = if j + 1 < f_pieces.len() { f_pieces[j + 1].start } else { 1.0 };
            let x = h_end.min(f_end);
            if x >= 1.0 {
                break;
            }
            if h_end <= x {
                i += 1;
            }
            if f_end <= x {
                j += 1;
            }
        }
    }
    for v in &next.vectors {
        vectors.push(AlphaVector::new(v.v_ok, v.v_fail, Action::Skip, v.p_ok, v.p_fail_reach));
    }
    prune_envelope(&VectorSet { vectors, stage_kind: StageKind::Monitoring })
}

/// Interior action-stage backup (stage t⁺ with t < k in subproblem k).
///
/// The executed action's own precondition cannot fail here, so continuing
/// just propagates the tracked precondition through its spontaneous
/// dynamics; abandoning pays the stage's alternative value from either
/// state.
pub fn action_backup_interior(
    next: &VectorSet,
    trans: &TransitionModel,
    alt_value: f64,
) -> VectorSet {
    let mut vectors = Vec::with_capacity(next.len() + 1);
    vectors.push(AlphaVector::new(alt_value, alt_value, Action::Abandon, 0.0, 0.0));
    for v in &next.vectors {
        vectors.push(AlphaVector::new(
            (1.0 - trans.p_fail) * v.v_ok + trans.p_fail * v.v_fail,
            trans.p_repair * v.v_ok + (1.0 - trans.p_repair) * v.v_fail,
            Action::Continue,
            (1.0 - trans.p_fail) * v.p_ok + trans.p_fail * v.p_fail_reach,
            trans.p_repair * v.p_ok + (1.0 - trans.p_repair) * v.p_fail_reach,
        ));
    }
    prune_envelope(&VectorSet { vectors, stage_kind: StageKind::Action })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(vectors: Vec<AlphaVector>, kind: StageKind) -> VectorSet {
        VectorSet { vectors, stage_kind: kind }
    }

    fn aban(v: f64) -> AlphaVector {
        AlphaVector::new(v, v, Action::Abandon, 0.0, 0.0)
    }

    fn cont(v_ok: f64, v_fail: f64) -> AlphaVector {
        AlphaVector::new(v_ok, v_fail, Action::Continue, 1.0, 0.0)
    }

    #[test]
    fn evaluate_examples() {
        let s = set(vec![aban(12.0), cont(20.0, 10.0)], StageKind::Action);
        let (v, arg) = evaluate(&s, 0.5).unwrap();
        assert!((v - 15.0).abs() < 1e-12);
        assert_eq!(arg.action, Action::Continue);

        // both lines equal 12 at b = 0.2; tie broken to continue
        let (v, arg) = evaluate(&s, 0.2).unwrap();
        assert!((v - 12.0).abs() < 1e-12);
        assert_eq!(arg.action, Action::Continue);

        let single = set(vec![aban(7.0)], StageKind::Action);
        let (v, _) = evaluate(&single, 0.3).unwrap();
        assert_eq!(v, 7.0);

        let empty = set(vec![], StageKind::Action);
        assert!(evaluate(&empty, 0.5).is_err());
    }

    #[test]
    fn prune_drops_pointwise_dominated_line() {
        let s = set(
            vec![aban(12.0), cont(20.0, 10.0), cont(19.5, 9.5)],
            StageKind::Action,
        );
        let p = prune_envelope(&s);
        assert_eq!(p.len(), 2);
        assert!(p.vectors.iter().any(|v| v.v_ok == 12.0 && v.v_fail == 12.0));
        assert!(p.vectors.iter().any(|v| v.v_ok == 20.0 && v.v_fail == 10.0));
    }

    #[test]
    fn prune_drops_jointly_dominated_line() {
        // the monitor line is below max(12, 10 + 10b) everywhere though
        // not pointwise dominated by either survivor
        let monitor = AlphaVector::new(12.3, 10.1, Action::Monitor, 0.9, 0.0);
        let s = set(vec![aban(12.0), cont(20.0, 10.0), monitor], StageKind::Action);
        let p = prune_envelope(&s);
        assert_eq!(p.len(), 2);
        assert!(!p.vectors.iter().any(|v| v.action == Action::Monitor));
    }

    #[test]
    fn prune_singleton_is_identity() {
        let s = set(vec![cont(20.0, 10.0)], StageKind::Action);
        assert_eq!(prune_envelope(&s), s);
    }

    #[test]
    fn terminal_set_examples() {
        // easy3 benchmark stage-3 values: crossover at b* = 2/18
        let s = terminal_set(20.0, 2.0, 4.0);
        assert_eq!(s.len(), 2);
        let bstar = 2.0 / 18.0;
        let (_, below) = evaluate(&s, bstar - 0.01).unwrap();
        let (_, above) = evaluate(&s, bstar + 0.01).unwrap();
        assert_eq!(below.action, Action::Abandon);
        assert_eq!(above.action, Action::Continue);

        // stage-1 values: crossover at 0.2
        let s = terminal_set(20.0, 10.0, 12.0);
        assert_eq!(s.len(), 2);
        let (_, below) = evaluate(&s, 0.19).unwrap();
        let (_, above) = evaluate(&s, 0.21).unwrap();
        assert_eq!(below.action, Action::Abandon);
        assert_eq!(above.action, Action::Continue);

        // degenerate equality collapses to a singleton
        let s = terminal_set(5.0, 5.0, 5.0);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn monitoring_backup_three_piece_envelope() {
        // easy3 benchmark stage-1 terminal set backed up through the sensor
        let next = terminal_set(20.0, 10.0, 12.0);
        let sensor = SensorModel::new(0.3, 0.1);
        let m = monitoring_backup(&next, &sensor, 0.5);
        assert_eq!(m.len(), 3);

        // pieces left to right: skip copy of abandon | monitor | skip
        // copy of continue
        let (_, lo) = evaluate(&m, 0.05).unwrap();
        assert_eq!(lo.action, Action::Skip);
        assert_eq!((lo.v_ok, lo.v_fail), (12.0, 12.0));
        let (_, mid) = evaluate(&m, 0.25).unwrap();
        assert_eq!(mid.action, Action::Monitor);
        assert!((mid.v_ok - 18.7).abs() < 1e-12);
        assert!((mid.v_fail - 10.9).abs() < 1e-12);
        assert!((mid.p_ok - 0.9).abs() < 1e-12);
        assert!(mid.p_fail_reach.abs() < 1e-12);
        let (_, hi) = evaluate(&m, 0.6).unwrap();
        assert_eq!(hi.action, Action::Skip);
        assert_eq!((hi.v_ok, hi.v_fail), (20.0, 10.0));

        // crossing points of the envelope
        let b1: f64 = (12.0 - 10.9) / (18.7 - 10.9); // ≈ 0.141
        let b2: f64 = (10.9 - 10.0) / (10.0 - 7.8); // ≈ 0.409
        assert!((b1 - 0.141).abs() < 1e-3);
        assert!((b2 - 0.409).abs() < 1e-3);
    }

    #[test]
    fn prohibitive_cost_reduces_to_skip_copies() {
        let next = terminal_set(20.0, 10.0, 12.0);
        let sensor = SensorModel::new(0.3, 0.1);
        let m = monitoring_backup(&next, &sensor, 100.0);
        assert_eq!(m.len(), next.len());
        assert!(m.vectors.iter().all(|v| v.action == Action::Skip));
    }

    #[test]
    fn singleton_next_yields_skip_copy() {
        let next = set(vec![cont(20.0, 10.0)], StageKind::Action);
        let sensor = SensorModel::new(0.3, 0.1);
        let m = monitoring_backup(&next, &sensor, 0.5);
        assert_eq!(m.len(), 1);
        assert_eq!(m.vectors[0].action, Action::Skip);
        assert_eq!((m.vectors[0].v_ok, m.vectors[0].v_fail), (20.0, 10.0));
    }

    #[test]
    fn action_backup_interior_examples() {
        // transition of a constant vector is itself; abandon (8, 8) dominated
        let next = set(vec![aban(12.0)], StageKind::Monitoring);
        let a = action_backup_interior(&next, &TransitionModel::new(0.01, 0.0), 8.0);
        assert_eq!(a.len(), 1);
        assert_eq!(a.vectors[0].action, Action::Continue);
        assert!((a.vectors[0].v_ok - 12.0).abs() < 1e-12);
        assert!((a.vectors[0].v_fail - 12.0).abs() < 1e-12);

        // identity transition keeps the continue vectors unchanged
        let next = set(vec![cont(20.0, 10.0)], StageKind::Monitoring);
        let a = action_backup_interior(&next, &TransitionModel::new(0.0, 0.0), 5.0);
        let c = a.vectors.iter().find(|v| v.action == Action::Continue).unwrap();
        assert_eq!((c.v_ok, c.v_fail), (20.0, 10.0));

        // overwhelming alternative leaves only the abandon constant
        let next = set(vec![cont(20.0, 10.0)], StageKind::Monitoring);
        let a = action_backup_interior(&next, &TransitionModel::new(0.0, 0.0), 50.0);
        assert_eq!(a.len(), 1);
        assert_eq!(a.vectors[0].action, Action::Abandon);
    }

    #[test]
    fn monitoring_stage_dominates_action_stage() {
        let next = terminal_set(20.0, 10.0, 12.0);
        let sensor = SensorModel::new(0.3, 0.1);
        let m = monitoring_backup(&next, &sensor, 0.5);
        for i in 0..=1000 {
            let b = i as f64 / 1000.0;
            let (vm, _) = evaluate(&m, b).unwrap();
            let (vn, _) = evaluate(&next, b).unwrap();
            assert!(vm >= vn - 1e-12);
        }
    }

    #[test]
    fn backup_chain_residual_is_finite() {
        // v_ok - p_ok * plan_value stays finite through the backups
        let plan = 20.0;
        let next = terminal_set(plan, 10.0, 12.0);
        let sensor = SensorModel::new(0.3, 0.1);
        let m = monitoring_backup(&next, &sensor, 0.5);
        let a = action_backup_interior(&m, &TransitionModel::new(0.01, 0.0), 8.0);
        for v in next.vectors.iter().chain(&m.vectors).chain(&a.vectors) {
            assert!((v.v_ok - v.p_ok * plan).is_finite());
            assert!((v.v_fail - v.p_fail_reach * plan).is_finite());
            assert!((0.0..=1.0).contains(&v.p_ok));
            assert!((0.0..=1.0).contains(&v.p_fail_reach));
        }
    }

    fn arb_line() -> impl Strategy<Value = AlphaVector> {
        (
            -50.0f64..50.0,
            -50.0f64..50.0,
            prop_oneof![
                Just(Action::Continue),
                Just(Action::Abandon),
                Just(Action::Monitor),
                Just(Action::Skip)
            ],
        )
            .prop_map(|(v_ok, v_fail, action)| AlphaVector::new(v_ok, v_fail, action, 0.5, 0.5))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // pruned and unpruned sets agree everywhere
        #[test]
        fn pruning_soundness(lines in prop::collection::vec(arb_line(), 1..200)) {
            let s = set(lines, StageKind::Action);
            let p = prune_envelope(&s);
            prop_assert!(!p.is_empty());
            for i in 0..200 {
                let b = i as f64 / 199.0;
                let (vp, _) = evaluate(&p, b).unwrap();
                let (vs, _) = evaluate(&s, b).unwrap();
                prop_assert!((vp - vs).abs() < 1e-9, "b={b}: pruned {vp} vs full {vs}");
            }
        }

        // the decomposed monitoring backup equals brute-force
        // enumeration of every (holds, failed) successor pair
        #[test]
        fn monitoring_backup_matches_pair_enumeration(
            lines in prop::collection::vec(arb_line(), 1..12),
            fp in 0.0f64..=1.0, fn_ in 0.0f64..=1.0, cost in 0.0f64..=2.0,
        ) {
            let next = prune_envelope(&set(lines, StageKind::Action));
            let sensor = SensorModel::new(fp, fn_);
            let fast = monitoring_backup(&next, &sensor, cost);

            let holds_ok = sensor.pr_given_ok(Report::Holds);
            let failed_ok = sensor.pr_given_ok(Report::Failed);
            let holds_fail = sensor.pr_given_fail(Report::Holds);
            let failed_fail = sensor.pr_given_fail(Report::Failed);
            let mut brute = Vec::new();
            for h in &next.vectors {
                for f in &next.vectors {
                    brute.push(AlphaVector::new(
                        -cost + holds_ok * h.v_ok + failed_ok * f.v_ok,
                        -cost + holds_fail * h.v_fail + failed_fail * f.v_fail,
                        Action::Monitor,
                        holds_ok * h.p_ok + failed_ok * f.p_ok,
                        holds_fail * h.p_fail_reach + failed_fail * f.p_fail_reach,
                    ));
                }
            }
            for v in &next.vectors {
                brute.push(AlphaVector::new(v.v_ok, v.v_fail, Action::Skip, v.p_ok, v.p_fail_reach));
            }
            let brute = set(brute, StageKind::Monitoring);
            for i in 0..200 {
                let b = i as f64 / 199.0;
                let (vf, _) = evaluate(&fast, b).unwrap();
                let (vb, _) = evaluate(&brute, b).unwrap();
                prop_assert!((vf - vb).abs() < 1e-9, "b={b}: fast {vf} vs brute {vb}");
            }
        }

        // the envelope is convex in b
        #[test]
        fn convexity(
            lines in prop::collection::vec(arb_line(), 1..50),
            b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0, lambda in 0.0f64..=1.0,
        ) {
            let s = set(lines, StageKind::Action);
            let p = prune_envelope(&s);
            let bmix = lambda * b1 + (1.0 - lambda) * b2;
            let (vmix, _) = evaluate(&p, bmix).unwrap();
            let (v1, _) = evaluate(&p, b1).unwrap();
            let (v2, _) = evaluate(&p, b2).unwrap();
            prop_assert!(vmix <= lambda * v1 + (1.0 - lambda) * v2 + 1e-9);
        }
    }
}
