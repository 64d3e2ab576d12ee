//! Problem instances for plan-precondition monitoring.
//!
//! A plan is abstracted to its value parameters: completing it is worth
//! `plan_value`; abandoning it just before step `t` yields the best
//! alternative plan's value `alt_value[t]`; attempting step `t` with a
//! failed precondition and then repairing yields `fail_value[t]`. Each
//! precondition can fail (and possibly recover) spontaneously between
//! steps, and can be queried by a costed, noisy monitor.
//!
//! Conventions used throughout the crate:
//! - state index 0 = precondition holds (OK), index 1 = failed;
//!   a scalar belief `b` is Pr(OK).
//! - a "positive" monitoring report means "precondition holds", so
//!   `false_positive` = Pr(holds-report | failed) and
//!   `false_negative` = Pr(failed-report | holds).
//! - stages are numbered 1..=n.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary monitoring report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    /// The monitor claims the precondition holds.
    Holds,
    /// The monitor claims the precondition has failed.
    Failed,
}

/// Noisy binary sensor for one precondition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Pr(report "holds" | precondition failed).
    pub false_positive: f64,
    /// Pr(report "failed" | precondition holds).
    pub false_negative: f64,
}

impl SensorModel {
    pub fn new(false_positive: f64, false_negative: f64) -> Self {
        SensorModel { false_positive, false_negative }
    }

    /// Pr(report | precondition holds).
    pub fn pr_given_ok(&self, report: Report) -> f64 {
        match report {
            Report::Holds => 1.0 - self.false_negative,
            Report::Failed => self.false_negative,
        }
    }

    /// Pr(report | precondition failed).
    pub fn pr_given_fail(&self, report: Report) -> f64 {
        match report {
            Report::Holds => self.false_positive,
            Report::Failed => 1.0 - self.false_positive,
        }
    }

    /// A sensor is informative when a "holds" report is at least as likely
    /// from a holding precondition as from a failed one (monotone
    /// likelihood ratio).
    pub fn is_informative(&self) -> bool {
        (1.0 - self.false_negative) >= self.false_positive
    }
}

/// Spontaneous two-state transition model for one precondition.
///
/// The implied 2x2 row-stochastic matrix is
/// `[[1 - p_fail, p_fail], [p_repair, 1 - p_repair]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    /// Pr(failed at next stage | holds now).
    pub p_fail: f64,
    /// Pr(holds at next stage | failed now).
    pub p_repair: f64,
}

impl TransitionModel {
    pub fn new(p_fail: f64, p_repair: f64) -> Self {
        TransitionModel { p_fail, p_repair }
    }
}

/// All per-stage parameters of a monitoring problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    /// Value of the best alternative plan if the original plan is
    /// abandoned just before this stage.
    pub alt_value: f64,
    /// Value of attempting this stage's action with a failed precondition
    /// and then executing the best repaired plan.
    pub fail_value: f64,
    /// Cost of monitoring this stage's precondition once.
    pub monitor_cost: f64,
    pub sensor: SensorModel,
    pub transition: TransitionModel,
    /// Initial belief that this stage's precondition holds.
    pub prior: f64,
}

/// A full monitoring-problem instance.
///
/// Immutable after construction; safe to share across concurrent readers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringInstance {
    pub name: String,
    /// Value of completing the original plan.
    pub plan_value: f64,
    pub stages: Vec<StageSpec>,
}

fn check_prob(violations: &mut Vec<String>, what: String, v: f64) {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        violations.push(format!("{what} = {v} is not a probability in [0, 1]"));
    }
}

impl MonitoringInstance {
    /// Number of plan stages.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Stage spec for 1-based stage `t`.
    pub fn stage(&self, t: usize) -> &StageSpec {
        &self.stages[t - 1]
    }

    /// Checks every invariant. Returns the list of warnings (conditions
    /// that are reported but do not invalidate the instance); hard
    /// violations are collected and returned together as a single
    /// validation error.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut violations = Vec::new();
        let mut warnings = Vec::new();
        if self.stages.is_empty() {
            violations.push("instance must have at least one stage".to_string());
        }
        if !self.plan_value.is_finite() {
            violations.push(format!("plan_value = {} is not finite", self.plan_value));
        }
        for (i, s) in self.stages.iter().enumerate() {
            let t = i + 1;
            if !s.alt_value.is_finite() || !s.fail_value.is_finite() {
                violations.push(format!("stage {t}: alt_value/fail_value must be finite"));
                continue;
            }
            if s.alt_value < s.fail_value {
                violations.push(format!(
                    "stage {t}: alt_value {} < fail_value {} (abandoning must be worth at \
                     least as much as failing through, since failure can always be ignored)",
                    s.alt_value, s.fail_value
                ));
            }
            if !(s.monitor_cost >= 0.0) || !s.monitor_cost.is_finite() {
                violations.push(format!(
                    "stage {t}: monitor_cost {} must be a nonnegative finite number",
                    s.monitor_cost
                ));
            }
            check_prob(&mut violations, format!("stage {t}: false_positive"), s.sensor.false_positive);
            check_prob(&mut violations, format!("stage {t}: false_negative"), s.sensor.false_negative);
            check_prob(&mut violations, format!("stage {t}: p_fail"), s.transition.p_fail);
            check_prob(&mut violations, format!("stage {t}: p_repair"), s.transition.p_repair);
            check_prob(&mut violations, format!("stage {t}: prior"), s.prior);
            if s.alt_value.is_finite() && self.plan_value.is_finite() && self.plan_value < s.alt_value {
                warnings.push(format!(
                    "stage {t}: alt_value {} exceeds plan_value {}; abandoning would beat \
                     finishing the plan",
                    s.alt_value, self.plan_value
                ));
            }
        }
        if violations.is_empty() {
            Ok(warnings)
        } else {
            Err(Error::Validation(violations))
        }
    }
}

// ---------------------------------------------------------------------------
// Instance file format
// ---------------------------------------------------------------------------

/// One stage as it appears in the JSON instance format (flat keys).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageFile {
    alt_value: f64,
    fail_value: f64,
    monitor_cost: f64,
    p_fail: f64,
    p_repair: f64,
    false_positive: f64,
    false_negative: f64,
    prior: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    plan_value: f64,
    stages: Vec<StageFile>,
}

impl From<&StageSpec> for StageFile {
    fn from(s: &StageSpec) -> Self {
        StageFile {
            alt_value: s.alt_value,
            fail_value: s.fail_value,
            monitor_cost: s.monitor_cost,
            p_fail: s.transition.p_fail,
            p_repair: s.transition.p_repair,
            false_positive: s.sensor.false_positive,
            false_negative: s.sensor.false_negative,
            prior: s.prior,
        }
    }
}

impl From<StageFile> for StageSpec {
    fn from(s: StageFile) -> Self {
        StageSpec {
            alt_value: s.alt_value,
            fail_value: s.fail_value,
            monitor_cost: s.monitor_cost,
            sensor: SensorModel::new(s.false_positive, s.false_negative),
            transition: TransitionModel::new(s.p_fail, s.p_repair),
            prior: s.prior,
        }
    }
}

/// Parses an instance from its JSON text. Unknown keys are an error.
pub fn parse_instance(json: &str) -> Result<MonitoringInstance> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let inst = MonitoringInstance {
        name: file.name,
        plan_value: file.plan_value,
        stages: file.stages.into_iter().map(StageSpec::from).collect(),
    };
    inst.validate()?;
    Ok(inst)
}

/// Loads and validates an instance file.
pub fn load_instance(path: &str) -> Result<MonitoringInstance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Serializes an instance back to the JSON instance format.
pub fn serialize_instance(inst: &MonitoringInstance) -> String {
    let file = InstanceFile {
        name: inst.name.clone(),
        plan_value: inst.plan_value,
        stages: inst.stages.iter().map(StageFile::from).collect(),
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Derived instances and sanity quantities
// ---------------------------------------------------------------------------

/// Myopic expected value of information of a single perfect monitoring
/// report: the probability the precondition has failed by the queried
/// point times the value gap between abandoning early and discovering
/// the failure late.
pub fn myopic_evoi(p_fail_by: f64, v_alt: f64, v_fail: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_fail_by) {
        return Err(Error::Contract(format!(
            "p_fail_by = {p_fail_by} is not a probability"
        )));
    }
    if v_alt < v_fail {
        return Err(Error::Contract(format!(
            "myopic_evoi requires v_alt >= v_fail, got {v_alt} < {v_fail}"
        )));
    }
    Ok(p_fail_by * (v_alt - v_fail))
}

/// Builds an `n`-stage instance from `base` for scaling studies.
///
/// Sensor, transition, cost and prior parameters cycle through `base`'s
/// stages; alt/fail values interpolate linearly from `base`'s first-stage
/// values down to its last-stage values. Deterministic; this family is the
/// artifact's own construction.
pub fn generate_scaling_family(base: &MonitoringInstance, n: usize) -> Result<MonitoringInstance> {
    if n == 0 {
        return Err(Error::Contract("scaling family requires n >= 1".to_string()));
    }
    let first = &base.stages[0];
    let last = base.stages.last().expect("validated instance is nonempty");
    let lerp = |a: f64, b: f64, i: usize| {
        if n == 1 {
            a
        } else {
            a + (b - a) * (i as f64) / ((n - 1) as f64)
        }
    };
    let stages = (0..n)
        .map(|i| {
            let src = &base.stages[i % base.len()];
            StageSpec {
                alt_value: lerp(first.alt_value, last.alt_value, i),
                fail_value: lerp(first.fail_value, last.fail_value, i),
                monitor_cost: src.monitor_cost,
                sensor: src.sensor,
                transition: src.transition,
                prior: src.prior,
            }
        })
        .collect();
    let inst = MonitoringInstance {
        name: format!("{}_x{}", base.name, n),
        plan_value: base.plan_value,
        stages,
    };
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn easy3_path() -> String {
        format!("{}/../../instances/easy3.json", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn loads_easy3_benchmark_parameters() {
        let inst = load_instance(&easy3_path()).unwrap();
        assert_eq!(inst.len(), 3);
        assert_eq!(inst.plan_value, 20.0);
        let alts: Vec<f64> = inst.stages.iter().map(|s| s.alt_value).collect();
        let fails: Vec<f64> = inst.stages.iter().map(|s| s.fail_value).collect();
        let costs: Vec<f64> = inst.stages.iter().map(|s| s.monitor_cost).collect();
        assert_eq!(alts, vec![12.0, 8.0, 4.0]);
        assert_eq!(fails, vec![10.0, 5.0, 2.0]);
        assert_eq!(costs, vec![0.5, 0.5, 0.7]);
        for s in &inst.stages {
            assert_eq!(s.transition.p_fail, 0.01);
            assert_eq!(s.transition.p_repair, 0.0);
            assert_eq!(s.sensor.false_negative, 0.1);
            assert_eq!(s.sensor.false_positive, 0.3);
            assert!(s.sensor.is_informative());
        }
    }

    #[test]
    fn loads_five_benchmark_parameters() {
        let path = format!("{}/../../instances/five.json", env!("CARGO_MANIFEST_DIR"));
        let inst = load_instance(&path).unwrap();
        assert_eq!(inst.len(), 5);
        assert_eq!(inst.plan_value, 40.0);
        let alts: Vec<f64> = inst.stages.iter().map(|s| s.alt_value).collect();
        let fails: Vec<f64> = inst.stages.iter().map(|s| s.fail_value).collect();
        assert_eq!(alts, vec![25.0, 18.0, 12.0, 7.0, 6.0]);
        assert_eq!(fails, vec![12.0, 11.0, 7.0, 5.0, 2.0]);
        for s in &inst.stages {
            assert_eq!(s.transition.p_fail, 0.05);
            assert_eq!(s.transition.p_repair, 0.1);
        }
    }

    #[test]
    fn alt_below_fail_is_a_validation_error() {
        let json = r#"{
            "name": "bad", "plan_value": 20.0,
            "stages": [{"alt_value": 5.0, "fail_value": 10.0, "monitor_cost": 0.5,
                        "p_fail": 0.01, "p_repair": 0.0,
                        "false_positive": 0.3, "false_negative": 0.1, "prior": 1.0}]
        }"#;
        match parse_instance(json) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|m| m.contains("alt_value 5 < fail_value 10")));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_field_name() {
        let json = r#"{"name": "x", "plan_value": 1.0, "stages": [], "bogus": 3}"#;
        match parse_instance(json) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("bogus")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn plan_below_alt_is_a_warning_not_an_error() {
        let json = r#"{
            "name": "warny", "plan_value": 10.0,
            "stages": [{"alt_value": 12.0, "fail_value": 5.0, "monitor_cost": 0.0,
                        "p_fail": 0.0, "p_repair": 0.0,
                        "false_positive": 0.0, "false_negative": 0.0, "prior": 1.0}]
        }"#;
        let inst = parse_instance(json).unwrap();
        let warnings = inst.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("exceeds plan_value"));
    }

    #[test]
    fn serialize_round_trips() {
        let inst = load_instance(&easy3_path()).unwrap();
        let reparsed = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(inst, reparsed);
    }

    #[test]
    fn myopic_evoi_examples() {
        assert_eq!(myopic_evoi(0.0, 12.0, 10.0).unwrap(), 0.0);
        assert_eq!(myopic_evoi(1.0, 12.0, 10.0).unwrap(), 2.0);
        assert!((myopic_evoi(0.3, 12.0, 10.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(myopic_evoi(0.5, 10.0, 12.0).is_err());
    }

    #[test]
    fn myopic_evoi_is_bilinear() {
        // linear in each factor, zero when either factor is zero
        for i in 0..10 {
            let p = i as f64 / 10.0;
            let gap = i as f64;
            let e = myopic_evoi(p, gap, 0.0).unwrap();
            assert!((e - p * gap).abs() < 1e-12);
            assert_eq!(myopic_evoi(p, 7.0, 7.0).unwrap(), 0.0);
            assert_eq!(myopic_evoi(0.0, gap, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn scaling_family_identity_keeps_stage_parameters() {
        let inst = load_instance(&easy3_path()).unwrap();
        let fam = generate_scaling_family(&inst, 3).unwrap();
        for (a, b) in inst.stages.iter().zip(&fam.stages) {
            assert_eq!(a.sensor, b.sensor);
            assert_eq!(a.transition, b.transition);
            assert_eq!(a.monitor_cost, b.monitor_cost);
            assert_eq!(a.prior, b.prior);
        }
        let alts: Vec<f64> = fam.stages.iter().map(|s| s.alt_value).collect();
        assert_eq!(alts, vec![12.0, 8.0, 4.0]);
    }

    #[test]
    fn scaling_family_interpolates_alt_values() {
        let inst = load_instance(&easy3_path()).unwrap();
        let fam = generate_scaling_family(&inst, 6).unwrap();
        // linearly spaced from 12 down to 4 across 6 stages
        let expect = [12.0, 10.4, 8.8, 7.2, 5.6, 4.0];
        for (s, e) in fam.stages.iter().zip(expect) {
            assert!((s.alt_value - e).abs() < 1e-12);
        }
        fam.validate().unwrap();
    }

    #[test]
    fn scaling_family_400_is_valid() {
        let inst = load_instance(&easy3_path()).unwrap();
        let fam = generate_scaling_family(&inst, 400).unwrap();
        assert_eq!(fam.len(), 400);
        fam.validate().unwrap();
    }
}
