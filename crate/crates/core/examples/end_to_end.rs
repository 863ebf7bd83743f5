//! The whole pipeline through files: synthesize, search, predict, score.
//!
//! cargo run --release --example end_to_end

use cefusion::data::{
    generate_synthetic, preset, read_predictions, write_ce_predictions, DatasetManifest, WeightsFile, MANIFEST_FILE,
};
use cefusion::fusion::FusedVector;
use cefusion::metrics::{confusion_for, AbsentClassPolicy};
use cefusion::{predict_ce, search, CompoundExpression, EvaluationReport, RuleConfig, RuleKind, SearchConfig};

fn main() -> cefusion::Result<()> {
    let dir = std::env::temp_dir().join("cefusion-end-to-end");
    generate_synthetic(&preset("three-model-default", 7).expect("built-in preset"))?.write(&dir)?;

    let manifest = DatasetManifest::load(&dir.join(MANIFEST_FILE))?;
    let dataset = manifest.load_dataset(&dir)?;
    let cfg = SearchConfig { trials: 2000, seed: 7, ..SearchConfig::default() };
    let result = search(&cfg, &dataset)?;
    let weights_path = dir.join("weights.json");
    WeightsFile::from_result(&result, &cfg, &dataset.dataset_id).write(&weights_path)?;
    println!("validation macro-F1 {:.2} -> {}", result.best_score * 100.0, weights_path.display());

    let params = WeightsFile::read(&weights_path)?.to_params()?;
    let truth = dataset.compound_labels.clone().unwrap_or_default();
    for rule in [RuleKind::Rule1, RuleKind::Rule2, RuleKind::None] {
        let cfg = RuleConfig::new(rule);
        let preds = (0..dataset.frame_count)
            .map(|i| predict_ce(&FusedVector { probs: params.fuse(&dataset.frame(i))?.probs, mode: params.mode() }, &cfg))
            .collect::<cefusion::Result<Vec<_>>>()?;
        let path = dir.join(format!("predictions_{rule:?}.csv").to_lowercase());
        write_ce_predictions(&path, &preds)?;

        let read_back = read_predictions::<CompoundExpression>(&path)?;
        let (t, p): (Vec<_>, Vec<_>) = truth
            .iter()
            .zip(&read_back)
            .filter_map(|(t, (_, p))| t.map(|t| (t, *p)))
            .unzip();
        let report = EvaluationReport::from_confusion(confusion_for(&t, &p)?, AbsentClassPolicy::Zero)?;
        println!("{rule:?}: {}  ({})", report.summary_line(), path.display());
    }
    Ok(())
}
