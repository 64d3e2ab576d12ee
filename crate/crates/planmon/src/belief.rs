//! Factored belief tracking over precondition status.
//!
//! Under precondition-failure independence the joint belief factors into
//! one scalar per precondition; no joint table is ever materialized.
//! All updates here are pure functions of their arguments.

use crate::error::{Error, Result};
use crate::model::{Report, SensorModel, TransitionModel};

/// Per-precondition probabilities that each precondition holds.
/// Entry `k` (0-based) is Pr(precondition of stage `k+1` holds).
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredBelief {
    pub probs: Vec<f64>,
}

impl FactoredBelief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::Input(format!(
                    "belief entry {} = {p} is not a probability in [0, 1]",
                    i + 1
                )));
            }
        }
        Ok(FactoredBelief { probs })
    }

    /// Parses the CLI form: comma-separated decimals, one per stage.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let probs = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("bad belief entry `{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if probs.is_empty() {
            return Err(Error::Input("belief must have at least one entry".to_string()));
        }
        FactoredBelief::new(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn debug_check_range(b: f64) -> f64 {
    debug_assert!(
        (-1e-9..=1.0 + 1e-9).contains(&b),
        "belief update left [0, 1]: {b}"
    );
    b
}

/// Bayes posterior Pr(holds | report).
///
/// A report with zero predictive probability is an error; callers that
/// enumerate observation branches must skip branches whose likelihood is
/// exactly zero rather than call this.
pub fn observe_update(b: f64, sensor: &SensorModel, report: Report) -> Result<f64> {
    let num = b * sensor.pr_given_ok(report);
    let denom = num + (1.0 - b) * sensor.pr_given_fail(report);
    if denom == 0.0 {
        return Err(Error::ImpossibleObservation);
    }
    Ok(debug_check_range(num / denom))
}

/// Propagates a belief through one stage of spontaneous dynamics.
pub fn transition_update(b: f64, trans: &TransitionModel) -> f64 {
    debug_check_range(b * (1.0 - trans.p_fail) + (1.0 - b) * trans.p_repair)
}

/// Marginal probability of a report under belief `b`.
pub fn report_likelihood(b: f64, sensor: &SensorModel, report: Report) -> f64 {
    b * sensor.pr_given_ok(report) + (1.0 - b) * sensor.pr_given_fail(report)
}
