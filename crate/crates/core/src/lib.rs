//! Late fusion of basic-emotion probability streams and rule-based
//! compound expression recognition.
//!
//! Several emotion models (for example a static face model, a dynamic face
//! model and an acoustic model) each emit a probability distribution over
//! seven basic emotions per frame. This crate
//!
//! * aligns those streams onto one frame grid ([`temporal`]),
//! * fuses them with per-class Dirichlet weights and optional per-model
//!   weights ([`fusion`]),
//! * searches the weights on a labelled validation set ([`optimizer`]),
//! * maps fused probabilities to seven compound expressions with two
//!   decision rules ([`rules`]),
//! * and scores predictions with macro-F1 and UAR ([`metrics`]).
//!
//! File formats, the synthetic stream generator and the command-line
//! front end live in [`data`] and [`cli`]. Runnable walkthroughs of every
//! capability are in the crate's `examples/` directory.

pub mod cli;
pub mod data;
pub mod emotion;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod optimizer;
pub mod rules;
pub mod temporal;

pub use emotion::{
    BasicEmotion, ClassLabel, CompoundExpression, CompoundScoreVector, CompoundWeightTable, ProbabilityVector,
};
pub use error::{Error, Result};
pub use fusion::{FusedVector, FusionMode, FusionParameters, ModelWeightVector, WeightMatrix};
pub use metrics::{ConfusionMatrix, EvaluationReport};
pub use optimizer::{search, Metric, SearchConfig, SearchResult};
pub use rules::{predict_ce, RuleConfig, RuleKind};
pub use temporal::{AlignedDataset, StreamSpec};
