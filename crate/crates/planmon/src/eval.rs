//! Ground truth and measurement: exact expectimax solution of the joint
//! monitoring POMDP at small horizon, exact expectation-tree evaluation
//! of a combiner policy, seeded Monte Carlo simulation, belief grids and
//! error reports.
//!
//! The joint problem is never solved by α-vector dynamic programming
//! over 2^n states. At each monitoring stage the oracle maximizes over
//! every subset of the remaining preconditions and every joint report;
//! report probabilities and posteriors factor across the monitored
//! preconditions. This is exponential in the remaining horizon, so it is
//! gated behind a depth guard (default 3).

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{observe_update, report_likelihood, transition_update, FactoredBelief};
use crate::combine::{combiner_action, npc_monitor, Combiner, ObjectAction};
use crate::error::{Error, Result};
use crate::model::{MonitoringInstance, Report};
use crate::solver::PolicyBundle;

/// Default bound on the remaining horizon the oracle will accept.
pub const DEFAULT_DEPTH_GUARD: usize = 3;
/// Default bound on expectation-tree nodes for exact policy evaluation.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

// ---------------------------------------------------------------------------
// Exact joint expectimax oracle
// ---------------------------------------------------------------------------

type MemoKey = (usize, Vec<u64>);

fn memo_key(b: &[f64], t: usize) -> MemoKey {
    (t, b[t - 1..].iter().map(|x| x.to_bits()).collect())
}

struct Expectimax<'a> {
    inst: &'a MonitoringInstance,
    memo_monitor: HashMap<MemoKey, f64>,
    memo_action: HashMap<MemoKey, f64>,
}

impl<'a> Expectimax<'a> {
    fn new(inst: &'a MonitoringInstance) -> Self {
        Expectimax { inst, memo_monitor: HashMap::new(), memo_action: HashMap::new() }
    }

    /// Optimal value at monitoring stage `t` (1-based) with belief `b`.
    fn monitoring_value(&mut self, b: &[f64], t: usize) -> Result<f64> {
        let key = memo_key(b, t);
        if let Some(&v) = self.memo_monitor.get(&key) {
            return Ok(v);
        }
        let n = self.inst.len();
        let rem = n - t + 1;
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << rem) {
            let monitored: Vec<usize> =
                (0..rem).filter(|i| mask & (1 << i) != 0).map(|i| t + i).collect();
            let cost: f64 = monitored.iter().map(|&k| self.inst.stage(k).monitor_cost).sum();
            let expected = self.expectation_over_reports(b, t, &monitored)?;
            let value = expected - cost;
            if value > best {
                best = value;
            }
        }
        self.memo_monitor.insert(key, best);
        Ok(best)
    }

    fn expectation_over_reports(
        &mut self,
        b: &[f64],
        t: usize,
        monitored: &[usize],
    ) -> Result<f64> {
        let mut expected = 0.0;
        'reports: for rmask in 0u32..(1 << monitored.len()) {
            let mut prob = 1.0;
            let mut posterior = b.to_vec();
            for (i, &k) in monitored.iter().enumerate() {
                let report = if rmask & (1 << i) != 0 { Report::Failed } else { Report::Holds };
                let sensor = &self.inst.stage(k).sensor;
                let lik = report_likelihood(b[k - 1], sensor, report);
                if lik == 0.0 {
                    // zero-probability branches contribute nothing and
                    // are never expanded
                    continue 'reports;
                }
                prob *= lik;
                posterior[k - 1] = observe_update(b[k - 1], sensor, report)?;
            }
            expected += prob * self.action_value(&posterior, t)?;
        }
        Ok(expected)
    }

    /// Optimal value at action stage `t⁺` with post-observation belief.
    fn action_value(&mut self, b: &[f64], t: usize) -> Result<f64> {
        let key = memo_key(b, t);
        if let Some(&v) = self.memo_action.get(&key) {
            return Ok(v);
        }
        let (aban, cont) = self.action_components(b, t)?;
        let v = aban.max(cont);
        self.memo_action.insert(key, v);
        Ok(v)
    }

    /// (abandon value, continue value) at action stage `t⁺`.
    fn action_components(&mut self, b: &[f64], t: usize) -> Result<(f64, f64)> {
        let n = self.inst.len();
        let stage = self.inst.stage(t);
        let cont = if t == n {
            b[n - 1] * self.inst.plan_value + (1.0 - b[n - 1]) * stage.fail_value
        } else {
            let mut next = b.to_vec();
            for k in (t + 1)..=n {
                next[k - 1] = transition_update(b[k - 1], &self.inst.stage(k).transition);
            }
            b[t - 1] * self.monitoring_value(&next, t + 1)?
                + (1.0 - b[t - 1]) * stage.fail_value
        };
        Ok((stage.alt_value, cont))
    }
}

fn check_point(inst: &MonitoringInstance, b: &FactoredBelief, t: usize) -> Result<()> {
    let n = inst.len();
    if t < 1 || t > n {
        return Err(Error::Input(format!("stage {t} out of range 1..={n}")));
    }
    if b.len() != n {
        return Err(Error::Input(format!(
            "belief has {} entries for a {n}-stage instance",
            b.len()
        )));
    }
    Ok(())
}

fn check_guard(inst: &MonitoringInstance, t: usize, depth_guard: usize) -> Result<()> {
    let horizon = inst.len() - t + 1;
    if horizon > depth_guard {
        return Err(Error::DepthGuardExceeded { horizon, guard: depth_guard });
    }
    Ok(())
}

/// Exact optimal expected net value from monitoring stage `t` with
/// belief `b`.
pub fn oracle_value(
    inst: &MonitoringInstance,
    b: &FactoredBelief,
    t: usize,
    depth_guard: usize,
) -> Result<f64> {
    check_point(inst, b, t)?;
    check_guard(inst, t, depth_guard)?;
    Expectimax::new(inst).monitoring_value(&b.probs, t)
}

/// Optimal value and choice at action stage `t⁺` with belief `b`.
/// Abandonment is reported optimal when it is within 1e-9 of the
/// continuation value.
pub fn oracle_action(
    inst: &MonitoringInstance,
    b: &FactoredBelief,
    t: usize,
    depth_guard: usize,
) -> Result<(f64, ObjectAction)> {
    check_point(inst, b, t)?;
    check_guard(inst, t, depth_guard)?;
    let (aban, cont) = Expectimax::new(inst).action_components(&b.probs, t)?;
    let action = if aban >= cont - 1e-9 { ObjectAction::Abandon } else { ObjectAction::Continue };
    Ok((aban.max(cont), action))
}

// ---------------------------------------------------------------------------
// Exact policy evaluation
// ---------------------------------------------------------------------------

struct PolicyEvaluator<'a> {
    bundle: &'a PolicyBundle,
    combiner: Combiner,
    node_budget: u64,
    nodes: u64,
    memo: HashMap<MemoKey, f64>,
}

impl<'a> PolicyEvaluator<'a> {
    fn value(&mut self, b: &[f64], t: usize) -> Result<f64> {
        let key = memo_key(b, t);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let inst = &self.bundle.instance;
        let n = inst.len();
        let fb = FactoredBelief { probs: b.to_vec() };
        let monitored = npc_monitor(self.bundle, &fb, t)?;
        let cost: f64 = monitored.iter().map(|&k| inst.stage(k).monitor_cost).sum();

        let mut expected = 0.0;
        'reports: for rmask in 0u32..(1 << monitored.len()) {
            self.nodes += 1;
            if self.nodes > self.node_budget {
                return Err(Error::NodeBudgetExceeded { budget: self.node_budget });
            }
            let mut prob = 1.0;
            let mut posterior = b.to_vec();
            for (i, &k) in monitored.iter().enumerate() {
                let report = if rmask & (1 << i) != 0 { Report::Failed } else { Report::Holds };
                let sensor = &inst.stage(k).sensor;
                let lik = report_likelihood(b[k - 1], sensor, report);
                if lik == 0.0 {
                    continue 'reports;
                }
                prob *= lik;
                posterior[k - 1] = observe_update(b[k - 1], sensor, report)?;
            }

            let post_belief = FactoredBelief { probs: posterior.clone() };
            let action = combiner_action(self.bundle, &post_belief, t, self.combiner)?;
            let branch = match action {
                ObjectAction::Abandon => inst.stage(t).alt_value,
                ObjectAction::Continue if t == n => {
                    posterior[n - 1] * inst.plan_value
                        + (1.0 - posterior[n - 1]) * inst.stage(n).fail_value
                }
                ObjectAction::Continue => {
                    let mut next = posterior.clone();
                    for k in (t + 1)..=n {
                        next[k - 1] =
                            transition_update(posterior[k - 1], &inst.stage(k).transition);
                    }
                    posterior[t - 1] * self.value(&next, t + 1)?
                        + (1.0 - posterior[t - 1]) * inst.stage(t).fail_value
                }
            };
            expected += prob * branch;
        }
        let v = expected - cost;
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// Exact expected net value of running the combiner from `(b, t)`,
/// assuming the generative model equals the belief model.
pub fn evaluate_policy_exact(
    bundle: &PolicyBundle,
    b: &FactoredBelief,
    t: usize,
    combiner: Combiner,
    node_budget: u64,
) -> Result<f64> {
    check_point(&bundle.instance, b, t)?;
    let mut ev = PolicyEvaluator { bundle, combiner, node_budget, nodes: 0, memo: HashMap::new() };
    ev.value(&b.probs, t)
}

// ---------------------------------------------------------------------------
// Monte Carlo simulation
// ---------------------------------------------------------------------------

/// How one simulated episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Completed,
    AbandonedAt(usize),
    FailedAt(usize),
}

/// One simulated episode.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpisodeOutcome {
    pub terminal: Terminal,
    pub terminal_value: f64,
    pub monitoring_paid: f64,
    pub net_value: f64,
}

/// Runs a single episode: true states sampled from `b`, reports drawn
/// from the sensor models given the true states, the combiner run on the
/// induced beliefs. Monitoring costs are paid whenever a monitor fires.
pub fn run_episode(
    bundle: &PolicyBundle,
    b: &FactoredBelief,
    combiner: Combiner,
    rng: &mut impl Rng,
) -> Result<EpisodeOutcome> {
    let inst = &bundle.instance;
    let n = inst.len();
    let mut ok: Vec<bool> = b.probs.iter().map(|&p| rng.gen_bool(p)).collect();
    let mut belief = b.clone();
    let mut paid = 0.0;

    let finish = |terminal: Terminal, value: f64, paid: f64| EpisodeOutcome {
        terminal,
        terminal_value: value,
        monitoring_paid: paid,
        net_value: value - paid,
    };

    for t in 1..=n {
        let monitored = npc_monitor(bundle, &belief, t)?;
        for &k in &monitored {
            let stage = inst.stage(k);
            paid += stage.monitor_cost;
            let p_holds_report = if ok[k - 1] {
                stage.sensor.pr_given_ok(Report::Holds)
            } else {
                stage.sensor.pr_given_fail(Report::Holds)
            };
            let report = if rng.gen_bool(p_holds_report) { Report::Holds } else { Report::Failed };
            belief.probs[k - 1] = observe_update(belief.probs[k - 1], &stage.sensor, report)?;
        }

        match combiner_action(bundle, &belief, t, combiner)? {
            ObjectAction::Abandon => {
                return Ok(finish(Terminal::AbandonedAt(t), inst.stage(t).alt_value, paid));
            }
            ObjectAction::Continue => {
                if !ok[t - 1] {
                    return Ok(finish(Terminal::FailedAt(t), inst.stage(t).fail_value, paid));
                }
                if t == n {
                    return Ok(finish(Terminal::Completed, inst.plan_value, paid));
                }
                for k in (t + 1)..=n {
                    let trans = &inst.stage(k).transition;
                    ok[k - 1] = if ok[k - 1] {
                        !rng.gen_bool(trans.p_fail)
                    } else {
                        rng.gen_bool(trans.p_repair)
                    };
                    belief.probs[k - 1] = transition_update(belief.probs[k - 1], trans);
                }
            }
        }
    }
    unreachable!("episode terminates at or before stage n")
}

/// Sample mean and standard error of episode net value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimulationResult {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: u64,
}

const SIM_BATCH: u64 = 8192;

/// Seeded Monte Carlo estimate of the combiner's value from `b`.
///
/// Episodes run in independently seeded batches (one generator stream
/// per batch) and batch results combine in index order, so the output is
/// reproducible for a fixed seed regardless of thread scheduling.
pub fn simulate(
    bundle: &PolicyBundle,
    b: &FactoredBelief,
    combiner: Combiner,
    episodes: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if episodes == 0 {
        return Err(Error::Input("episodes must be >= 1".to_string()));
    }
    check_point(&bundle.instance, b, 1)?;
    let batches = episodes.div_ceil(SIM_BATCH);
    let partials: Vec<Result<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let count = SIM_BATCH.min(episodes - batch * SIM_BATCH);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch + 1);
            let mut sum = KahanSum::default();
            let mut sum_sq = KahanSum::default();
            for _ in 0..count {
                let outcome = run_episode(bundle, b, combiner, &mut rng)?;
                sum.add(outcome.net_value);
                sum_sq.add(outcome.net_value * outcome.net_value);
            }
            Ok((sum.total(), sum_sq.total()))
        })
        .collect();

    let mut sum = KahanSum::default();
    let mut sum_sq = KahanSum::default();
    for partial in partials {
        let (s, s2) = partial?;
        sum.add(s);
        sum_sq.add(s2);
    }
    let count = episodes as f64;
    let mean = sum.total() / count;
    let variance = if episodes > 1 {
        ((sum_sq.total() - sum.total() * sum.total() / count) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimulationResult {
        mean,
        std_error: (variance / count).sqrt(),
        episodes,
    })
}

/// Compensated summation so aggregate means do not depend on point
/// ordering noise.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

// ---------------------------------------------------------------------------
// Belief grids
// ---------------------------------------------------------------------------

/// Cartesian-product belief grid in lexicographic order (first
/// coordinate slowest).
pub struct BeliefGrid {
    levels: Vec<f64>,
    idx: Vec<usize>,
    done: bool,
}

/// `|levels|^n` belief points.
pub fn belief_grid(n: usize, levels: &[f64]) -> Result<BeliefGrid> {
    if levels.is_empty() {
        return Err(Error::Input("grid levels must be nonempty".to_string()));
    }
    if n == 0 {
        return Err(Error::Input("grid dimension must be >= 1".to_string()));
    }
    for &l in levels {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::Input(format!("grid level {l} is not in [0, 1]")));
        }
    }
    Ok(BeliefGrid { levels: levels.to_vec(), idx: vec![0; n], done: false })
}

impl Iterator for BeliefGrid {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let point: Vec<f64> = self.idx.iter().map(|&i| self.levels[i]).collect();
        // increment base-|levels| counter, last coordinate fastest
        let mut pos = self.idx.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.idx[pos] += 1;
            if self.idx[pos] < self.levels.len() {
                break;
            }
            self.idx[pos] = 0;
        }
        Some(point)
    }
}

// ---------------------------------------------------------------------------
// Error reports
// ---------------------------------------------------------------------------

/// Exact evaluations at one belief point.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationPoint {
    pub belief: Vec<f64>,
    pub oracle_value: Option<f64>,
    pub npc_value: f64,
    pub vapc_value: f64,
    /// (oracle - policy) / oracle; only when the oracle ran and its
    /// value is strictly positive.
    pub rel_err_npc: Option<f64>,
    pub rel_err_vapc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSide {
    High,
    Low,
}

/// Aggregate statistics over the grid points whose entries all lie on
/// one side of `p`.
#[derive(Debug, Clone, Serialize)]
pub struct BandAggregate {
    pub p: f64,
    pub side: BandSide,
    pub count: usize,
    pub mean_rel_err_npc: Option<f64>,
    pub max_rel_err_npc: Option<f64>,
    pub mean_rel_err_vapc: Option<f64>,
    pub max_rel_err_vapc: Option<f64>,
    /// Mean of (vapc - npc) / npc over points with npc > 0.
    pub mean_improvement_rel: Option<f64>,
    /// Mean of vapc - npc.
    pub mean_improvement_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub points: Vec<EvaluationPoint>,
    pub excluded_nonpositive: usize,
    pub mean_rel_err_npc: Option<f64>,
    pub max_rel_err_npc: Option<f64>,
    pub mean_rel_err_vapc: Option<f64>,
    pub max_rel_err_vapc: Option<f64>,
    pub bands: Vec<BandAggregate>,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sum = KahanSum::default();
    for &v in values {
        sum.add(v);
    }
    Some(sum.total() / values.len() as f64)
}

fn max_of(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::max)
}

fn band_stats(p: f64, side: BandSide, points: &[&EvaluationPoint]) -> BandAggregate {
    let rel_npc: Vec<f64> = points.iter().filter_map(|pt| pt.rel_err_npc).collect();
    let rel_vapc: Vec<f64> = points.iter().filter_map(|pt| pt.rel_err_vapc).collect();
    let improvements_rel: Vec<f64> = points
        .iter()
        .filter(|pt| pt.npc_value > 0.0)
        .map(|pt| (pt.vapc_value - pt.npc_value) / pt.npc_value)
        .collect();
    let abs: Vec<f64> = points.iter().map(|pt| pt.vapc_value - pt.npc_value).collect();
    BandAggregate {
        p,
        side,
        count: points.len(),
        mean_rel_err_npc: mean_of(&rel_npc),
        max_rel_err_npc: max_of(&rel_npc),
        mean_rel_err_vapc: mean_of(&rel_vapc),
        max_rel_err_vapc: max_of(&rel_vapc),
        mean_improvement_rel: mean_of(&improvements_rel),
        mean_improvement_abs: mean_of(&abs).unwrap_or(0.0),
    }
}

/// Evaluates every grid point exactly under both combiners (and the
/// oracle when requested) from stage 1, and aggregates overall and
/// per-band relative errors. Points where the oracle value is not
/// strictly positive are excluded from relative-error statistics and
/// counted.
pub fn error_report(
    bundle: &PolicyBundle,
    grid: Vec<Vec<f64>>,
    with_oracle: bool,
    depth_guard: usize,
    node_budget: u64,
) -> Result<ErrorReport> {
    let inst = &bundle.instance;
    if with_oracle {
        check_guard(inst, 1, depth_guard)?;
    }
    let points: Vec<EvaluationPoint> = grid
        .into_par_iter()
        .map(|probs| -> Result<EvaluationPoint> {
            let b = FactoredBelief::new(probs.clone())?;
            let npc_value = evaluate_policy_exact(bundle, &b, 1, Combiner::Npc, node_budget)?;
            let vapc_value = evaluate_policy_exact(bundle, &b, 1, Combiner::Vapc, node_budget)?;
            let oracle = if with_oracle {
                Some(oracle_value(inst, &b, 1, depth_guard)?)
            } else {
                None
            };
            let rel = |policy: f64| {
                oracle.and_then(|v| if v > 0.0 { Some((v - policy) / v) } else { None })
            };
            Ok(EvaluationPoint {
                rel_err_npc: rel(npc_value),
                rel_err_vapc: rel(vapc_value),
                belief: probs,
                oracle_value: oracle,
                npc_value,
                vapc_value,
            })
        })
        .collect::<Result<_>>()?;

    let excluded_nonpositive = points
        .iter()
        .filter(|pt| matches!(pt.oracle_value, Some(v) if v <= 0.0))
        .count();

    let all_rel_npc: Vec<f64> = points.iter().filter_map(|pt| pt.rel_err_npc).collect();
    let all_rel_vapc: Vec<f64> = points.iter().filter_map(|pt| pt.rel_err_vapc).collect();

    let mut bands = Vec::new();
    for i in 0..=10 {
        let p = i as f64 / 10.0;
        let high: Vec<&EvaluationPoint> = points
            .iter()
            .filter(|pt| pt.belief.iter().all(|&b| b >= p - 1e-9))
            .collect();
        let low: Vec<&EvaluationPoint> = points
            .iter()
            .filter(|pt| pt.belief.iter().all(|&b| b <= p + 1e-9))
            .collect();
        bands.push(band_stats(p, BandSide::High, &high));
        bands.push(band_stats(p, BandSide::Low, &low));
    }

    Ok(ErrorReport {
        excluded_nonpositive,
        mean_rel_err_npc: mean_of(&all_rel_npc),
        max_rel_err_npc: max_of(&all_rel_npc),
        mean_rel_err_vapc: mean_of(&all_rel_vapc),
        max_rel_err_vapc: max_of(&all_rel_vapc),
        bands,
        points,
    })
}

/// VAPC-over-NPC comparison for one neighborhood band: the grid where
/// every coordinate takes a value in {p - 0.1, p - 0.05, p}.
#[derive(Debug, Clone, Serialize)]
pub struct BandImprovement {
    pub p: f64,
    pub count: usize,
    pub mean_npc: f64,
    pub mean_vapc: f64,
    /// Mean of (vapc - npc) / npc over points with npc > 0.
    pub mean_improvement_rel: Option<f64>,
    pub max_improvement_rel: Option<f64>,
    pub mean_improvement_abs: f64,
}

/// Exact NPC-vs-VAPC comparison over neighborhood bands, without the
/// oracle (the horizon may be beyond the depth guard).
pub fn band_improvement(
    bundle: &PolicyBundle,
    ps: &[f64],
    node_budget: u64,
) -> Result<Vec<BandImprovement>> {
    let n = bundle.instance.len();
    ps.iter()
        .map(|&p| {
            let levels: Vec<f64> = [p - 0.1, p - 0.05, p]
                .iter()
                .map(|&l| l.clamp(0.0, 1.0))
                .collect();
            let grid: Vec<Vec<f64>> = belief_grid(n, &levels)?.collect();
            let evaluated: Vec<(f64, f64)> = grid
                .into_par_iter()
                .map(|probs| -> Result<(f64, f64)> {
                    let b = FactoredBelief::new(probs)?;
                    Ok((
                        evaluate_policy_exact(bundle, &b, 1, Combiner::Npc, node_budget)?,
                        evaluate_policy_exact(bundle, &b, 1, Combiner::Vapc, node_budget)?,
                    ))
                })
                .collect::<Result<_>>()?;
            let npc: Vec<f64> = evaluated.iter().map(|e| e.0).collect();
            let vapc: Vec<f64> = evaluated.iter().map(|e| e.1).collect();
            let rel: Vec<f64> = evaluated
                .iter()
                .filter(|(n_val, _)| *n_val > 0.0)
                .map(|(n_val, v_val)| (v_val - n_val) / n_val)
                .collect();
            let abs: Vec<f64> = evaluated.iter().map(|(n_val, v_val)| v_val - n_val).collect();
            Ok(BandImprovement {
                p,
                count: evaluated.len(),
                mean_npc: mean_of(&npc).unwrap_or(0.0),
                mean_vapc: mean_of(&vapc).unwrap_or(0.0),
                mean_improvement_rel: mean_of(&rel),
                max_improvement_rel: max_of(&rel),
                mean_improvement_abs: mean_of(&abs).unwrap_or(0.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_instance, parse_instance, MonitoringInstance};
    use crate::solver::solve_all;
    use crate::pwlc::evaluate as pwlc_evaluate;

    fn easy3() -> MonitoringInstance {
        let path = format!("{}/../../instances/easy3.json", env!("CARGO_MANIFEST_DIR"));
        load_instance(&path).unwrap()
    }

    fn belief(entries: &[f64]) -> FactoredBelief {
        FactoredBelief::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn oracle_terminal_certainty() {
        let inst = easy3();
        let v = oracle_value(&inst, &belief(&[1.0, 1.0, 1.0]), 3, 3).unwrap();
        assert!((v - 20.0f64.max(4.0)).abs() < 1e-12);
    }

    #[test]
    fn oracle_final_stage_abandons_at_low_belief() {
        // abandon (4) beats 0.05*20 + 0.95*2 = 2.9, and stage-3
        // monitoring at cost 0.7 is not worth it here
        let inst = easy3();
        let v = oracle_value(&inst, &belief(&[1.0, 1.0, 0.05]), 3, 3).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_refuses_beyond_depth_guard() {
        let inst = easy3();
        match oracle_value(&inst, &belief(&[1.0, 1.0, 1.0]), 1, 2) {
            Err(Error::DepthGuardExceeded { horizon: 3, guard: 2 }) => {}
            other => panic!("expected depth-guard refusal, got {other:?}"),
        }
    }

    /// easy3 with only precondition 1 failable and preconditions 2, 3
    /// certain, unfailable and prohibitively expensive to monitor.
    fn easy3_single_failure_embedding() -> MonitoringInstance {
        let mut inst = easy3();
        for k in 2..=3 {
            let s = &mut inst.stages[k - 1];
            s.transition.p_fail = 0.0;
            s.prior = 1.0;
            s.monitor_cost = 1e6;
            s.sensor.false_positive = 0.0;
            s.sensor.false_negative = 0.0;
        }
        inst.validate().unwrap();
        inst
    }

    #[test]
    fn oracle_matches_subproblem_dp_under_single_failure_embedding() {
        let inst = easy3_single_failure_embedding();
        let bundle = solve_all(&inst).unwrap();
        let dp = bundle.subproblem(1).monitoring_set(1);
        for i in 0..=50 {
            let b1 = i as f64 / 50.0;
            let (dp_value, _) = pwlc_evaluate(dp, b1).unwrap();
            let joint = oracle_value(&inst, &belief(&[b1, 1.0, 1.0]), 1, 3).unwrap();
            assert!(
                (dp_value - joint).abs() < 1e-9,
                "b1={b1}: dp {dp_value} vs oracle {joint}"
            );
        }
    }

    #[test]
    fn oracle_dominates_policy_values() {
        let inst = easy3();
        let bundle = solve_all(&inst).unwrap();
        for bs in [[0.3, 1.0, 1.0], [0.5, 0.7, 0.9], [0.9, 0.9, 0.9], [0.2, 0.4, 0.6]] {
            let b = belief(&bs);
            let v_star = oracle_value(&inst, &b, 1, 3).unwrap();
            for combiner in [Combiner::Npc, Combiner::Vapc] {
                let v = evaluate_policy_exact(&bundle, &b, 1, combiner, DEFAULT_NODE_BUDGET)
                    .unwrap();
                assert!(v_star >= v - 1e-9, "{bs:?} {combiner:?}: {v_star} < {v}");
            }
        }
    }

    #[test]
    fn oracle_monotone_in_monitoring_costs() {
        let base = easy3();
        let mut dearer = base.clone();
        for s in &mut dearer.stages {
            s.monitor_cost += 0.25;
        }
        for bs in [[0.3, 0.8, 0.9], [0.5, 0.5, 0.5], [0.9, 0.2, 0.7]] {
            let b = belief(&bs);
            let cheap = oracle_value(&base, &b, 1, 3).unwrap();
            let dear = oracle_value(&dearer, &b, 1, 3).unwrap();
            assert!(dear <= cheap + 1e-12);
        }
    }

    #[test]
    fn deterministic_success_policy_value() {
        let json = r#"{
            "name": "certain", "plan_value": 20.0,
            "stages": [
              {"alt_value": 12.0, "fail_value": 10.0, "monitor_cost": 0.5,
               "p_fail": 0.0, "p_repair": 0.0,
               "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0},
              {"alt_value": 8.0, "fail_value": 5.0, "monitor_cost": 0.5,
               "p_fail": 0.0, "p_repair": 0.0,
               "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0}
            ]
        }"#;
        let inst = parse_instance(json).unwrap();
        let bundle = solve_all(&inst).unwrap();
        let b = belief(&[1.0, 1.0]);
        for combiner in [Combiner::Npc, Combiner::Vapc] {
            let v = evaluate_policy_exact(&bundle, &b, 1, combiner, DEFAULT_NODE_BUDGET).unwrap();
            assert!((v - 20.0).abs() < 1e-12);
        }
        let sim = simulate(&bundle, &b, Combiner::Npc, 1000, 7).unwrap();
        assert_eq!(sim.mean, 20.0);
        assert_eq!(sim.std_error, 0.0);
    }

    #[test]
    fn immediate_abandon_policy_value() {
        let inst = easy3();
        let bundle = solve_all(&inst).unwrap();
        // belief low enough that every combiner abandons at stage 1
        let b = belief(&[1.0, 1.0, 0.0]);
        for combiner in [Combiner::Npc, Combiner::Vapc] {
            let v = evaluate_policy_exact(&bundle, &b, 1, combiner, DEFAULT_NODE_BUDGET).unwrap();
            assert!((v - 12.0).abs() < 1e-12, "got {v}");
        }
    }

    #[test]
    fn simulation_is_reproducible_and_consistent_with_exact_value() {
        let inst = easy3();
        let bundle = solve_all(&inst).unwrap();
        let b = belief(&[0.3, 1.0, 1.0]);
        let a = simulate(&bundle, &b, Combiner::Npc, 200_000, 42).unwrap();
        let c = simulate(&bundle, &b, Combiner::Npc, 200_000, 42).unwrap();
        assert_eq!(a.mean, c.mean);
        assert_eq!(a.std_error, c.std_error);
        let exact =
            evaluate_policy_exact(&bundle, &b, 1, Combiner::Npc, DEFAULT_NODE_BUDGET).unwrap();
        assert!(
            (a.mean - exact).abs() <= 3.0 * a.std_error + 1e-9,
            "mean {} vs exact {exact} (se {})",
            a.mean,
            a.std_error
        );
    }

    #[test]
    fn grid_sizes() {
        let levels: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(belief_grid(3, &levels).unwrap().count(), 1331);
        assert_eq!(belief_grid(1, &[0.0, 1.0]).unwrap().count(), 2);
        assert_eq!(belief_grid(5, &[0.8, 0.85, 0.9]).unwrap().count(), 243);
        assert!(belief_grid(3, &[]).is_err());
        // lexicographic order, first coordinate slowest
        let pts: Vec<Vec<f64>> = belief_grid(2, &[0.0, 1.0]).unwrap().collect();
        assert_eq!(
            pts,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn zero_failure_instance_has_zero_error_at_certainty_beliefs() {
        let json = r#"{
            "name": "certain", "plan_value": 20.0,
            "stages": [
              {"alt_value": 12.0, "fail_value": 10.0, "monitor_cost": 0.5,
               "p_fail": 0.0, "p_repair": 0.0,
               "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0},
              {"alt_value": 8.0, "fail_value": 5.0, "monitor_cost": 0.5,
               "p_fail": 0.0, "p_repair": 0.0,
               "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0}
            ]
        }"#;
        let inst = parse_instance(json).unwrap();
        let bundle = solve_all(&inst).unwrap();
        // with p_fail = 0 certainty beliefs stay certain, monitoring is
        // never worth its cost, and both combiners act optimally
        let grid: Vec<Vec<f64>> = belief_grid(2, &[0.0, 1.0]).unwrap().collect();
        let report = error_report(&bundle, grid, true, 3, DEFAULT_NODE_BUDGET).unwrap();
        for pt in &report.points {
            if let Some(e) = pt.rel_err_npc {
                assert!(e.abs() < 1e-9, "{:?}", pt);
            }
            if let Some(e) = pt.rel_err_vapc {
                assert!(e.abs() < 1e-9, "{:?}", pt);
            }
        }
    }

    #[test]
    fn node_budget_refusal() {
        let inst = easy3();
        let bundle = solve_all(&inst).unwrap();
        let b = belief(&[0.3, 0.5, 0.7]);
        match evaluate_policy_exact(&bundle, &b, 1, Combiner::Npc, 1) {
            Err(Error::NodeBudgetExceeded { budget: 1 }) => {}
            other => panic!("expected node-budget refusal, got {other:?}"),
        }
    }
}
