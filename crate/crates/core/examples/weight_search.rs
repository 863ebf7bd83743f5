//! Random search over fusion weights on a synthetic validation set.
//!
//! cargo run --release --example weight_search

use cefusion::data::{generate_synthetic, preset};
use cefusion::optimizer::{evaluate_params, search, trial_params, VStrategy};
use cefusion::{BasicEmotion, ClassLabel, FusionMode, SearchConfig};

fn main() -> cefusion::Result<()> {
    let corpus = generate_synthetic(&preset("audio-anger-sadness", 1).expect("built-in preset"))?;
    let ds = &corpus.dataset;

    for (mode, v_strategy) in [
        (FusionMode::Dirichlet, VStrategy::GridRandom),
        (FusionMode::Hierarchical, VStrategy::GridRandom),
        (FusionMode::Hierarchical, VStrategy::GridExhaustive),
    ] {
        let cfg = SearchConfig { trials: 1000, seed: 1, mode, v_strategy, ..SearchConfig::default() };
        let baseline = evaluate_params(&trial_params(&cfg, &ds.model_ids, 0)?, ds, cfg.metric)?;
        let result = search(&cfg, ds)?;
        println!(
            "{mode} / {v_strategy:?}: baseline {:.2} -> best {:.2} (trial {})",
            baseline * 100.0,
            result.best_score * 100.0,
            result.trial_index
        );
        if mode == FusionMode::Dirichlet {
            let w = result.best_params.weight_matrix();
            println!("  {:<10} {}", "class", ds.model_ids.join("  "));
            for e in BasicEmotion::ALL {
                let col: Vec<String> = w.column(e.index()).iter().map(|v| format!("{v:>6.3}")).collect();
                println!("  {:<10} {}", e.name(), col.join(" "));
            }
        } else {
            println!("  model weights {:?}", result.best_params.model_weights().values());
        }
    }
    Ok(())
}
