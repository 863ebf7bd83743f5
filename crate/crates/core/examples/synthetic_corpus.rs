//! Generate a synthetic corpus, write it to disk and load it back.
//!
//! cargo run --example synthetic_corpus -- [out_dir]

use cefusion::data::{generate_synthetic, preset, DatasetManifest, MANIFEST_FILE, PRESETS};
use cefusion::metrics::{confusion_for, macro_f1};
use cefusion::ProbabilityVector;

fn main() -> cefusion::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| {
        std::env::temp_dir().join("cefusion-synthetic")
    });
    println!("presets: {}", PRESETS.join(", "));
    let profile = preset("three-model-default", 7).expect("built-in preset");
    let corpus = generate_synthetic(&profile)?;
    for (id, stream) in corpus.dataset.model_ids.iter().zip(&corpus.dataset.streams) {
        let pred: Vec<_> = stream.iter().map(ProbabilityVector::argmax).collect();
        let f1 = macro_f1(&confusion_for(&corpus.basic_labels, &pred)?)?;
        println!("{id:<8} alone: macro-F1 {:.2}", f1 * 100.0);
    }
    let labelled = corpus.compound_labels.iter().filter(|l| l.is_some()).count();
    println!("{labelled} of {} frames carry a compound label", profile.frame_count);

    corpus.write(&out)?;
    let manifest = DatasetManifest::load(&out.join(MANIFEST_FILE))?;
    let reloaded = manifest.load_dataset(&out)?;
    println!("wrote {} and reloaded it identically: {}", out.display(), reloaded == corpus.dataset);
    Ok(())
}
