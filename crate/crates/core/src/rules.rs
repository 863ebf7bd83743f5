//! Rule-based compound expression decisions on top of fused basic-emotion
//! probabilities.
//!
//! * Rule 1 zeroes probabilities below a threshold (1/7 by default) and scores
//!   each compound expression as the plain sum of its two emotions.
//! * Rule 2 scores each compound expression as a fixed convex combination of
//!   its two emotions, with weights from [`CompoundWeightTable`].
//! * Without a rule, compound scores are plain pair sums of the unmasked vector.
//!
//! The decision is always the highest-scoring compound, lowest index on ties.

use serde::{Deserialize, Serialize};

use crate::emotion::{
    argmax, pair_sum_table, BasicEmotion, CompoundExpression, CompoundScoreVector,
    CompoundWeightTable, PairWeights, ProbabilityVector, NUM_COMPOUNDS,
};
use crate::error::{Error, Result};
use crate::fusion::{FusedVector, FusionMode};

/// Chance level for seven classes.
pub const DEFAULT_MASK_THRESHOLD: f64 = 1.0 / 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Threshold masking followed by unweighted pair sums.
    Rule1,
    /// Table-weighted pair scores.
    Rule2,
    /// Unweighted pair sums on the unmasked vector.
    None,
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "rule1" => Ok(RuleKind::Rule1),
            "2" | "rule2" => Ok(RuleKind::Rule2),
            "none" | "0" => Ok(RuleKind::None),
            other => Err(Error::Config(format!("unknown rule '{other}' (expected 1, 2 or none)"))),
        }
    }
}

/// What Rule 1 does when masking removes every emotion that takes part in a
/// compound pair, leaving all seven scores at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AllMaskedPolicy {
    /// Score the unmasked vector with plain pair sums instead.
    #[default]
    UseUnmasked,
    /// Keep the all-zero scores; the tie-break picks the first compound.
    FirstClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleConfig {
    pub rule: RuleKind,
    pub mask_threshold: f64,
    pub table: CompoundWeightTable,
    pub all_masked_policy: AllMaskedPolicy,
}

impl RuleConfig {
    pub fn new(rule: RuleKind) -> Self {
        RuleConfig {
            rule,
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            table: CompoundWeightTable::default(),
            all_masked_policy: AllMaskedPolicy::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        // Zero is accepted: it turns masking into the identity.
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::Parameter(format!(
                "mask threshold must lie in [0, 1), got {threshold}"
            )));
        }
        self.mask_threshold = threshold;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: AllMaskedPolicy) -> Self {
        self.all_masked_policy = policy;
        self
    }
}

/// Degenerate masking outcomes worth reporting per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskEvent {
    /// Every entry fell below the threshold.
    AllMasked,
    /// Only Neutral survived, which belongs to no compound pair.
    NeutralDominant,
}

impl MaskEvent {
    pub fn name(self) -> &'static str {
        match self {
            MaskEvent::AllMasked => "all_masked",
            MaskEvent::NeutralDominant => "neutral_dominant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CePrediction {
    pub compound: CompoundExpression,
    pub scores: CompoundScoreVector,
    /// Set when Rule 1 masking left no compound evidence.
    pub event: Option<MaskEvent>,
}

/// Zeroes every entry strictly below `threshold`. No renormalization.
pub fn rule1_mask(fused: &ProbabilityVector, threshold: f64) -> ProbabilityVector {
    let values = fused.values().map(|p| if p < threshold { 0.0 } else { p });
    ProbabilityVector::from_parts(values, false)
}

fn pair_scores(p: &ProbabilityVector, pairs: &[PairWeights; NUM_COMPOUNDS]) -> CompoundScoreVector {
    CompoundScoreVector::from_array(pairs.map(|row| row.score(p)))
}

/// Plain sum of each compound's two emotions.
pub fn rule1_scores(masked: &ProbabilityVector) -> CompoundScoreVector {
    pair_scores(masked, &pair_sum_table())
}

/// Table-weighted combination of each compound's two emotions.
pub fn rule2_scores(fused: &ProbabilityVector, table: &CompoundWeightTable) -> CompoundScoreVector {
    pair_scores(fused, table.rows())
}

/// Highest-scoring compound; ties go to the lowest canonical index.
pub fn decide(scores: &CompoundScoreVector) -> CompoundExpression {
    CompoundExpression::ALL[argmax(scores.values())]
}

/// Scores `fused` under `cfg` and picks the compound expression.
///
/// Rule 1 only accepts vectors produced by Dirichlet-mode fusion.
pub fn predict_ce(fused: &FusedVector, cfg: &RuleConfig) -> Result<CePrediction> {
    match cfg.rule {
        RuleKind::Rule1 => {
            if fused.mode != FusionMode::Dirichlet {
                return Err(Error::Config(format!(
                    "rule 1 applies only to dirichlet fusion output, got {} fusion",
                    fused.mode
                )));
            }
            let masked = rule1_mask(&fused.probs, cfg.mask_threshold);
            let scores = rule1_scores(&masked);
            if !scores.is_all_zero() {
                return Ok(CePrediction {
                    compound: decide(&scores),
                    scores,
                    event: None,
                });
            }
            let event = if masked[BasicEmotion::Neutral] > 0.0 {
                MaskEvent::NeutralDominant
            } else {
                MaskEvent::AllMasked
            };
            let scores = match cfg.all_masked_policy {
                AllMaskedPolicy::UseUnmasked => rule1_scores(&fused.probs),
                AllMaskedPolicy::FirstClass => scores,
            };
            Ok(CePrediction {
                compound: decide(&scores),
                scores,
                event: Some(event),
            })
        }
        RuleKind::Rule2 => {
            let scores = rule2_scores(&fused.probs, &cfg.table);
            Ok(CePrediction {
                compound: decide(&scores),
                scores,
                event: None,
            })
        }
        RuleKind::None => {
            let scores = rule1_scores(&fused.probs);
            Ok(CePrediction {
                compound: decide(&scores),
                scores,
                event: None,
            })
        }
    }
}
