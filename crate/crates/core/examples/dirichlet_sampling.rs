//! Draw random class-weight matrices and model-weight vectors.
//!
//! cargo run --example dirichlet_sampling

use cefusion::fusion::{stream_rng, ModelWeightVector, WeightMatrix, MODEL_WEIGHT_GRID_LEN};

fn main() -> cefusion::Result<()> {
    let w = WeightMatrix::sample(42, 3, 1.0)?;
    println!("W (rows = models, columns = classes), seed 42:");
    for row in w.rows() {
        println!("  {}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
    for c in 0..7 {
        println!("  column {c} sums to {:.12}", w.column(c).iter().sum::<f64>());
    }

    // Smaller alpha concentrates each column on one model.
    let sharp = WeightMatrix::sample(42, 3, 0.1)?;
    let max_share: f64 = (0..7)
        .map(|c| sharp.column(c).into_iter().fold(0.0, f64::max))
        .sum::<f64>()
        / 7.0;
    println!("alpha 0.1: mean largest share per column {max_share:.3}");

    let mut rng = stream_rng(42, 1);
    let v = ModelWeightVector::sample_with(&mut rng, 3)?;
    println!("model weights {:?} (grid of {MODEL_WEIGHT_GRID_LEN} values)", v.values());
    Ok(())
}
