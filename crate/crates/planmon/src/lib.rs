//! Decision-theoretic monitoring of plan preconditions.
//!
//! An n-stage plan succeeds only if the precondition of each stage holds
//! when the stage executes. Preconditions can fail (and sometimes
//! recover) spontaneously, and noisy sensors can be polled at a cost
//! before each stage. The toolkit solves one small POMDP per
//! precondition under a single-failure assumption, combines the
//! per-precondition policies online (NPC and value-adjusted VAPC
//! combiners), and measures the combined policies against an exact
//! joint-problem oracle at small horizons.
//!
//! Layout:
//! - [`model`]: instance schema, validation, JSON I/O, scaling families
//! - [`belief`]: factored Bayes/transition updates
//! - [`pwlc`]: two-state α-vector algebra, backups, exact pruning
//! - [`solver`]: per-precondition backward induction
//! - [`combine`]: NPC and VAPC online combination
//! - [`eval`]: exact oracle, exact policy evaluation, simulation,
//!   belief grids and error reports

pub mod belief;
pub mod combine;
pub mod error;
pub mod eval;
pub mod model;
pub mod pwlc;
pub mod solver;

pub use belief::FactoredBelief;
pub use combine::{Combiner, ObjectAction, StepDecision};
pub use error::{Error, Result};
pub use eval::{ErrorReport, SimulationResult};
pub use model::{MonitoringInstance, Report, SensorModel, StageSpec, TransitionModel};
pub use pwlc::{Action, AlphaVector, VectorSet};
pub use solver::{PolicyBundle, SubproblemPolicy};
