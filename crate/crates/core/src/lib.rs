//! Outlier-robust online convex optimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`loss`]: per-round strongly convex losses, the LEARN transform
//!   `g = -a log(exp(-f/a) + b)` with its gate `eta`, and the derived
//!   problem constants.
//! - [`learners`]: projected OGD, LEARN, and the Top-k filter baselines.
//! - [`experts`]: the exponential-weights pool of LEARN instances over a
//!   (step size, radius) grid for unbounded domains.
//! - [`stream`]: clean data generators and the oblivious corruption adversary.
//! - [`harness`]: episodes, clean dynamic regret, path length and bound checks.
//! - [`oracle`]: numerical verification of the inequalities the regret
//!   analysis rests on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experts;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod loss;
pub mod oracle;
pub mod stream;

pub use error::{Error, Result};
pub use experts::{ExpertGrid, ExpertPool};
pub use harness::{LearnerSpec, RegretCurve, RoundRecord, RunConfig, StepSizeSpec};
pub use learners::{Learner, LearnerState, Radius};
pub use loss::{LearnParams, LossFamily, ProblemConstants, RoundLoss, SideInfo};
pub use stream::{CleanGenerator, CorruptionOp, CorruptionPlan};
