//! Fuse three model outputs for one frame, in both fusion modes.
//!
//! cargo run --example fusion_basics

use cefusion::fusion::{FusionMode, FusionParameters, ModelWeightVector, WeightMatrix};
use cefusion::{BasicEmotion, ClassLabel, ProbabilityVector};

fn main() -> cefusion::Result<()> {
    let ids = vec!["static".to_string(), "dynamic".to_string(), "audio".to_string()];
    let frame = [
        ProbabilityVector::normalized([0.05, 0.40, 0.30, 0.05, 0.05, 0.10, 0.05])?,
        ProbabilityVector::normalized([0.10, 0.20, 0.45, 0.05, 0.05, 0.10, 0.05])?,
        ProbabilityVector::normalized([0.05, 0.60, 0.05, 0.05, 0.05, 0.15, 0.05])?,
    ];

    // Trust the audio model for Anger, the dynamic model for Disgust.
    let mut rows = vec![[1.0 / 3.0; 7]; 3];
    rows[0][1] = 0.2;
    rows[1][1] = 0.2;
    rows[2][1] = 0.6;
    rows[0][2] = 0.25;
    rows[1][2] = 0.6;
    rows[2][2] = 0.15;
    let w = WeightMatrix::new(rows)?;

    for (mode, v) in [
        (FusionMode::Dirichlet, ModelWeightVector::constant(3, 0.5)?),
        (FusionMode::Hierarchical, ModelWeightVector::new(vec![0.5, 0.25, 0.1])?),
    ] {
        let params = FusionParameters::new(ids.clone(), w.clone(), v, mode)?;
        let fused = params.fuse(&frame)?;
        println!("{mode}:");
        for e in BasicEmotion::ALL {
            println!("  {:<10} {:.4}", e.name(), fused.probs[e]);
        }
        println!("  decision: {}", fused.probs.argmax());
    }

    let uniform = FusionParameters::uniform(ids, FusionMode::Dirichlet)?;
    println!("uniform weights decide {}", uniform.fuse(&frame)?.probs.argmax());
    Ok(())
}
