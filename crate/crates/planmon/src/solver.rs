//! Backward-induction solver for the per-precondition single-failure
//! monitoring POMDPs.
//!
//! Subproblem `k` tracks precondition `k` under the assumption no other
//! precondition can fail. It is a k-stage POMDP with two states, one
//! monitoring action and two observations, solved exactly: terminal
//! action-stage set at stage k⁺, then alternating monitoring and interior
//! action backups down to stage 1. All n subproblems together use
//! O(l·n²) space for l the largest set size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MonitoringInstance;
use crate::pwlc::{
    action_backup_interior, monitoring_backup, terminal_set, StageKind, VectorSet,
};

/// Solved value functions for one precondition's subproblem.
///
/// `monitoring_sets[t-1]` is the ℵ-set at monitoring stage `t`,
/// `action_sets[t-1]` the ℵ-set at action stage `t⁺`, for `t` in 1..=k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemPolicy {
    /// 1-based precondition index k.
    pub precondition_index: usize,
    pub monitoring_sets: Vec<VectorSet>,
    pub action_sets: Vec<VectorSet>,
}

impl SubproblemPolicy {
    /// ℵ-set at monitoring stage `t` (1-based).
    pub fn monitoring_set(&self, t: usize) -> &VectorSet {
        &self.monitoring_sets[t - 1]
    }

    /// ℵ-set at action stage `t⁺` (1-based).
    pub fn action_set(&self, t: usize) -> &VectorSet {
        &self.action_sets[t - 1]
    }
}

/// All n subproblem solutions plus the instance they were solved for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub instance: MonitoringInstance,
    pub subproblems: Vec<SubproblemPolicy>,
}

impl PolicyBundle {
    pub fn len(&self) -> usize {
        self.subproblems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subproblems.is_empty()
    }

    /// Subproblem for precondition `k` (1-based).
    pub fn subproblem(&self, k: usize) -> &SubproblemPolicy {
        &self.subproblems[k - 1]
    }
}

/// Per-stage solve statistics for the summary CSV.
#[derive(Debug, Clone, Serialize)]
pub struct StageStat {
    pub subproblem: usize,
    pub stage: usize,
    pub stage_kind: StageKind,
    pub set_size: usize,
    pub solve_micros: u64,
}

/// Solves the single-failure subproblem for precondition `k` (1-based).
pub fn solve_subproblem(inst: &MonitoringInstance, k: usize) -> Result<SubproblemPolicy> {
    let (policy, _) = solve_subproblem_with_stats(inst, k)?;
    Ok(policy)
}

pub fn solve_subproblem_with_stats(
    inst: &MonitoringInstance,
    k: usize,
) -> Result<(SubproblemPolicy, Vec<StageStat>)> {
    let n = inst.len();
    if k < 1 || k > n {
        return Err(Error::Contract(format!(
            "subproblem index {k} out of range 1..={n}"
        )));
    }
    let tracked = inst.stage(k);
    let mut action_sets: Vec<Option<VectorSet>> = vec![None; k];
    let mut monitoring_sets: Vec<Option<VectorSet>> = vec![None; k];
    let mut stats = Vec::with_capacity(2 * k);

    let record = |stats: &mut Vec<StageStat>, stage: usize, set: &VectorSet, micros: u64| {
        stats.push(StageStat {
            subproblem: k,
            stage,
            stage_kind: set.stage_kind,
            set_size: set.len(),
            solve_micros: micros,
        });
    };

    let start = std::time::Instant::now();
    let terminal = terminal_set(inst.plan_value, tracked.fail_value, tracked.alt_value);
    record(&mut stats, k, &terminal, start.elapsed().as_micros() as u64);
    action_sets[k - 1] = Some(terminal);

    for t in (1..=k).rev() {
        let start = std::time::Instant::now();
        let m = monitoring_backup(
            action_sets[t - 1].as_ref().expect("action set built first"),
            &tracked.sensor,
            tracked.monitor_cost,
        );
        record(&mut stats, t, &m, start.elapsed().as_micros() as u64);
        monitoring_sets[t - 1] = Some(m);

        if t > 1 {
            let start = std::time::Instant::now();
            let a = action_backup_interior(
                monitoring_sets[t - 1].as_ref().expect("just built"),
                &tracked.transition,
                inst.stage(t - 1).alt_value,
            );
            record(&mut stats, t - 1, &a, start.elapsed().as_micros() as u64);
            action_sets[t - 2] = Some(a);
        }
    }

    Ok((
        SubproblemPolicy {
            precondition_index: k,
            monitoring_sets: monitoring_sets.into_iter().map(Option::unwrap).collect(),
            action_sets: action_sets.into_iter().map(Option::unwrap).collect(),
        },
        stats,
    ))
}

/// Solves all n subproblems. Subproblems are independent and solved in
/// parallel; the result does not depend on scheduling.
pub fn solve_all(inst: &MonitoringInstance) -> Result<PolicyBundle> {
    let (bundle, _) = solve_all_with_stats(inst)?;
    Ok(bundle)
}

pub fn solve_all_with_stats(
    inst: &MonitoringInstance,
) -> Result<(PolicyBundle, Vec<StageStat>)> {
    let solved: Vec<(SubproblemPolicy, Vec<StageStat>)> = (1..=inst.len())
        .into_par_iter()
        .map(|k| solve_subproblem_with_stats(inst, k))
        .collect::<Result<_>>()?;
    let mut subproblems = Vec::with_capacity(solved.len());
    let mut stats = Vec::new();
    for (policy, s) in solved {
        subproblems.push(policy);
        stats.extend(s);
    }
    Ok((
        PolicyBundle { instance: inst.clone(), subproblems },
        stats,
    ))
}

/// Serializes a bundle to the policy dump format (JSON).
pub fn serialize_bundle(bundle: &PolicyBundle) -> String {
    serde_json::to_string_pretty(bundle).expect("bundle serialization cannot fail")
}

/// Loads a policy dump written by [`serialize_bundle`].
pub fn load_bundle(path: &str) -> Result<PolicyBundle> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let bundle: PolicyBundle =
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    bundle.instance.validate()?;
    if bundle.subproblems.len() != bundle.instance.len() {
        return Err(Error::Validation(vec![format!(
            "policy dump has {} subproblems for a {}-stage instance",
            bundle.subproblems.len(),
            bundle.instance.len()
        )]));
    }
    for (i, sp) in bundle.subproblems.iter().enumerate() {
        let k = i + 1;
        if sp.precondition_index != k
            || sp.monitoring_sets.len() != k
            || sp.action_sets.len() != k
        {
            return Err(Error::Validation(vec![format!(
                "subproblem {k} has inconsistent stage counts"
            )]));
        }
    }
    Ok(bundle)
}
