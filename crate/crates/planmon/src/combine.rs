//! Online combination of the per-precondition policies into joint
//! monitoring and continue/abandon decisions.
//!
//! Both combiners share the same monitoring rule: monitor precondition k
//! at stage t iff subproblem k's own stage-t policy would. They differ in
//! the continue/abandon decision:
//!
//! - NPC applies each subproblem's action-stage set to its own belief and
//!   abandons iff any subproblem abandons.
//! - VAPC walks backward from subproblem n, replacing the nominal plan
//!   value inside each earlier subproblem's vectors with the downstream
//!   subproblem's just-evaluated value, weighted by the vectors' stored
//!   reach probabilities. Abandonment fires at the first subproblem whose
//!   adjusted argmax abandons.
//!
//! Both run in time linear in the total bundle size. Bundles are
//! immutable; adjustment scratch space is per call.

use serde::Serialize;

use crate::belief::FactoredBelief;
use crate::error::{Error, Result};
use crate::pwlc::{evaluate, Action, AlphaVector, VectorSet};
use crate::solver::PolicyBundle;

/// Which combiner to use for the object-level decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Npc,
    Vapc,
}

impl std::str::FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npc" => Ok(Combiner::Npc),
            "vapc" => Ok(Combiner::Vapc),
            other => Err(Error::Input(format!(
                "unknown combiner `{other}` (expected npc or vapc)"
            ))),
        }
    }
}

/// Joint object-level choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectAction {
    Continue,
    Abandon,
}

/// One stage's combined decision.
#[derive(Debug, Clone, Serialize)]
pub struct StepDecision {
    pub stage: usize,
    /// 1-based indices of the preconditions to monitor; all >= stage.
    pub monitor_set: Vec<usize>,
    pub object_action: ObjectAction,
}

fn check_args(bundle: &PolicyBundle, b: &FactoredBelief, t: usize) -> Result<()> {
    let n = bundle.len();
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

/// The shared monitoring rule: indices k >= t whose own stage-t policy
/// selects a monitor-tagged vector at b_k.
pub fn npc_monitor(bundle: &PolicyBundle, b: &FactoredBelief, t: usize) -> Result<Vec<usize>> {
    check_args(bundle, b, t)?;
    let mut out = Vec::new();
    for k in t..=bundle.len() {
        let set = bundle.subproblem(k).monitoring_set(t);
        let (_, arg) = evaluate(set, b.probs[k - 1])?;
        if arg.action == Action::Monitor {
            out.push(k);
        }
    }
    Ok(out)
}

/// NPC object decision: abandon iff any subproblem k >= t abandons at b_k.
pub fn npc_action(bundle: &PolicyBundle, b: &FactoredBelief, t: usize) -> Result<ObjectAction> {
    check_args(bundle, b, t)?;
    for k in t..=bundle.len() {
        let set = bundle.subproblem(k).action_set(t);
        let (_, arg) = evaluate(set, b.probs[k - 1])?;
        if arg.action == Action::Abandon {
            return Ok(ObjectAction::Abandon);
        }
    }
    Ok(ObjectAction::Continue)
}

/// Replaces the nominal plan value inside every vector with
/// `v_hat_next`, weighted by the vector's stored reach pair:
///
/// ```text
/// v'  = v - p_reach * (plan_value - v_hat_next)
/// ```
///
/// Action tags and reach pairs are unchanged and the set is not
/// re-pruned; the adjusted set is consumed at a single belief point.
pub fn adjust_set(set: &VectorSet, plan_value: f64, v_hat_next: f64) -> Result<VectorSet> {
    if v_hat_next > plan_value + 1e-9 {
        return Err(Error::Contract(format!(
            "adjustment value {v_hat_next} exceeds plan value {plan_value}"
        )));
    }
    let gap = plan_value - v_hat_next;
    let vectors = set
        .vectors
        .iter()
        .map(|v| AlphaVector {
            v_ok: v.v_ok - v.p_ok * gap,
            v_fail: v.v_fail - v.p_fail_reach * gap,
            ..*v
        })
        .collect();
    Ok(VectorSet { vectors, stage_kind: set.stage_kind })
}

/// VAPC object decision: backward pass from subproblem n down to t,
/// grounded at n with the unadjusted set.
pub fn vapc_action(bundle: &PolicyBundle, b: &FactoredBelief, t: usize) -> Result<ObjectAction> {
    check_args(bundle, b, t)?;
    let n = bundle.len();
    let plan_value = bundle.instance.plan_value;

    let (mut v_hat, arg) = {
        let set = bundle.subproblem(n).action_set(t);
        let (v, arg) = evaluate(set, b.probs[n - 1])?;
        (v, arg.action)
    };
    if arg == Action::Abandon {
        return Ok(ObjectAction::Abandon);
    }
    for k in (t..n).rev() {
        let adjusted = adjust_set(bundle.subproblem(k).action_set(t), plan_value, v_hat)?;
        let (v, arg) = evaluate(&adjusted, b.probs[k - 1])?;
        if arg.action == Action::Abandon {
            return Ok(ObjectAction::Abandon);
        }
        v_hat = v;
    }
    Ok(ObjectAction::Continue)
}

/// Object decision under the chosen combiner.
pub fn combiner_action(
    bundle: &PolicyBundle,
    b: &FactoredBelief,
    t: usize,
    combiner: Combiner,
) -> Result<ObjectAction> {
    match combiner {
        Combiner::Npc => npc_action(bundle, b, t),
        Combiner::Vapc => vapc_action(bundle, b, t),
    }
}

/// One combined decision: the shared monitoring rule plus the chosen
/// combiner's object decision, both at the supplied belief. Callers that
/// interleave observations run the monitoring rule, update the belief
/// with the reports, then query the object decision themselves.
pub fn run_step(
    bundle: &PolicyBundle,
    b: &FactoredBelief,
    t: usize,
    combiner: Combiner,
) -> Result<StepDecision> {
    let monitor_set = npc_monitor(bundle, b, t)?;
    let object_action = combiner_action(bundle, b, t, combiner)?;
    Ok(StepDecision { stage: t, monitor_set, object_action })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_instance, parse_instance, MonitoringInstance};
    use crate::pwlc::StageKind;
    use crate::solver::solve_all;

    fn easy3() -> MonitoringInstance {
        let path = format!("{}/../../instances/easy3.json", env!("CARGO_MANIFEST_DIR"));
        load_instance(&path).unwrap()
    }

    fn belief(entries: &[f64]) -> FactoredBelief {
        FactoredBelief::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn npc_monitor_examples() {
        let bundle = solve_all(&easy3()).unwrap();
        // b1 = 0.3 sits in subproblem 1's monitor band (~0.141, ~0.409)
        let m = npc_monitor(&bundle, &belief(&[0.3, 1.0, 1.0]), 1).unwrap();
        assert_eq!(m, vec![1]);
        // certainty everywhere: nothing to learn
        let m = npc_monitor(&bundle, &belief(&[1.0, 1.0, 1.0]), 1).unwrap();
        assert!(m.is_empty());
        // at the last stage only precondition n remains
        let m = npc_monitor(&bundle, &belief(&[1.0, 1.0, 0.3]), 3).unwrap();
        assert!(m.iter().all(|&k| k == 3));
    }

    #[test]
    fn npc_action_examples() {
        let bundle = solve_all(&easy3()).unwrap();
        // below the stage-3 crossover 2/18
        assert_eq!(
            npc_action(&bundle, &belief(&[1.0, 1.0, 0.05]), 3).unwrap(),
            ObjectAction::Abandon
        );
        assert_eq!(
            npc_action(&bundle, &belief(&[1.0, 1.0, 1.0]), 1).unwrap(),
            ObjectAction::Continue
        );
        // subproblem 3's stage-1 action set abandons at 0.05
        assert_eq!(
            npc_action(&bundle, &belief(&[1.0, 1.0, 0.05]), 1).unwrap(),
            ObjectAction::Abandon
        );
    }

    #[test]
    fn adjust_set_examples() {
        let set = VectorSet {
            vectors: vec![
                AlphaVector::new(12.0, 12.0, Action::Abandon, 0.0, 0.0),
                AlphaVector::new(20.0, 10.0, Action::Continue, 1.0, 0.0),
            ],
            stage_kind: StageKind::Action,
        };
        // abandon vectors are fixed points of the adjustment
        let adj = adjust_set(&set, 20.0, 18.0).unwrap();
        assert_eq!((adj.vectors[0].v_ok, adj.vectors[0].v_fail), (12.0, 12.0));
        assert_eq!((adj.vectors[1].v_ok, adj.vectors[1].v_fail), (18.0, 10.0));
        // zero adjustment is the identity
        let same = adjust_set(&set, 20.0, 20.0).unwrap();
        assert_eq!(same.vectors, set.vectors);
        // adjustment never adds value
        assert!(adjust_set(&set, 20.0, 21.0).is_err());
        for (a, o) in adj.vectors.iter().zip(&set.vectors) {
            assert!(a.v_ok <= o.v_ok && a.v_fail <= o.v_fail);
        }
    }

    #[test]
    fn vapc_equals_npc_on_one_stage_instances() {
        let json = r#"{
            "name": "one", "plan_value": 20.0,
            "stages": [{"alt_value": 12.0, "fail_value": 10.0, "monitor_cost": 0.5,
                        "p_fail": 0.01, "p_repair": 0.0,
                        "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0}]
        }"#;
        let inst = parse_instance(json).unwrap();
        let bundle = solve_all(&inst).unwrap();
        for i in 0..=100 {
            let b = belief(&[i as f64 / 100.0]);
            assert_eq!(
                npc_action(&bundle, &b, 1).unwrap(),
                vapc_action(&bundle, &b, 1).unwrap()
            );
        }
    }

    #[test]
    fn vapc_grounding_at_certainty() {
        let bundle = solve_all(&easy3()).unwrap();
        let b = belief(&[1.0, 1.0, 1.0]);
        assert_eq!(vapc_action(&bundle, &b, 1).unwrap(), ObjectAction::Continue);
    }

    #[test]
    fn run_step_composes() {
        let bundle = solve_all(&easy3()).unwrap();
        let d = run_step(&bundle, &belief(&[0.3, 1.0, 1.0]), 1, Combiner::Npc).unwrap();
        assert_eq!(d.stage, 1);
        assert_eq!(d.monitor_set, vec![1]);
        // bad stage / combiner tag are input errors
        assert!(run_step(&bundle, &belief(&[0.3, 1.0, 1.0]), 4, Combiner::Npc).is_err());
        assert!("nope".parse::<Combiner>().is_err());
    }
}
