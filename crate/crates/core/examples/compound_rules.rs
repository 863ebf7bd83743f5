//! Turn fused basic-emotion probabilities into compound expressions.
//!
//! cargo run --example compound_rules

use cefusion::emotion::CompoundWeightTable;
use cefusion::fusion::{FusedVector, FusionMode};
use cefusion::rules::{rule1_mask, AllMaskedPolicy, DEFAULT_MASK_THRESHOLD};
use cefusion::{predict_ce, ClassLabel, CompoundExpression, ProbabilityVector, RuleConfig, RuleKind};

fn main() -> cefusion::Result<()> {
    println!("pair weights:");
    for row in CompoundWeightTable::default().rows() {
        println!(
            "  {} = {} x {} + {} x {}",
            row.compound.short(),
            row.first_weight,
            row.first,
            row.second_weight,
            row.second
        );
    }

    // Sadness and Surprise both high, Fear a little behind.
    let probs = ProbabilityVector::normalized([0.05, 0.05, 0.05, 0.22, 0.03, 0.30, 0.30])?;
    let fused = FusedVector { probs, mode: FusionMode::Dirichlet };
    println!("masked at {DEFAULT_MASK_THRESHOLD:.4}: {:?}", rule1_mask(&probs, DEFAULT_MASK_THRESHOLD).values());
    for rule in [RuleKind::Rule1, RuleKind::Rule2, RuleKind::None] {
        let p = predict_ce(&fused, &RuleConfig::new(rule))?;
        let scores: Vec<String> = CompoundExpression::ALL
            .iter()
            .map(|ce| format!("{}={:.3}", ce.short(), p.scores[*ce]))
            .collect();
        println!("{rule:?}: {} [{}]", p.compound.name(), scores.join(" "));
    }

    // A fused vector that only keeps Neutral after masking.
    let neutral = FusedVector {
        probs: ProbabilityVector::normalized([0.7, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05])?,
        mode: FusionMode::Dirichlet,
    };
    for policy in [AllMaskedPolicy::UseUnmasked, AllMaskedPolicy::FirstClass] {
        let p = predict_ce(&neutral, &RuleConfig::new(RuleKind::Rule1).with_policy(policy))?;
        println!("{policy:?}: {} ({})", p.compound.name(), p.event.map_or("no event", |e| e.name()));
    }
    Ok(())
}
