//! Tabular learning agents that act through a shield.
//!
//! Two agents are provided: a linear softmax policy trained with the
//! episodic policy gradient, and Q-learning over a table keyed by the
//! feature vector. Both see one of three input representations and pick
//! actions only from the mask the shield gate returns.

mod curve;
mod features;
mod matrix;
mod qlearning;
mod reinforce;
mod train;

pub use curve::{mean_curve, smooth_curve, CurveRow, EpisodeFlag, LearningCurve, CURVE_HEADER, LEDGER_HEADER, SMOOTHING_WINDOW};
pub use features::{FeatureMap, FeatureRepr};
pub use matrix::{run_matrix, AggregateRow, Baseline, Bundle, Cell, Condition, Failure, Manifest, ManifestEntry, MatrixSpec, MANIFEST_FORMAT};
pub use qlearning::{q_update, QTable, Transition};
pub use reinforce::{reinforce_update, SoftmaxPolicy, Step};
pub use train::{random_baseline, train, Agent, TrainConfig};
