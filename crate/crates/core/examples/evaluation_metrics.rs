//! Macro-F1, UAR and the confusion matrix.
//!
//! cargo run --example evaluation_metrics

use cefusion::metrics::{confusion, confusion_for, macro_f1, uar, AbsentClassPolicy};
use cefusion::{BasicEmotion, EvaluationReport};

fn main() -> cefusion::Result<()> {
    // Balanced two-class truth, every prediction class 0.
    let truth: Vec<usize> = (0..20).map(|i| i / 10).collect();
    let cm = confusion(&truth, &[0; 20], 2)?;
    println!("one-class predictor: F1 {:.4}  UAR {:.4}", macro_f1(&cm)?, uar(&cm)?);

    use BasicEmotion::*;
    let truth = [Anger, Anger, Sadness, Sadness, Fear, Happiness, Happiness, Neutral];
    let pred = [Anger, Disgust, Sadness, Neutral, Fear, Happiness, Surprise, Neutral];
    let cm = confusion_for(&truth, &pred)?;
    for policy in [AbsentClassPolicy::Zero, AbsentClassPolicy::Exclude] {
        let report = EvaluationReport::from_confusion(cm.clone(), policy)?;
        println!("{policy:?}: {}", report.summary_line());
    }
    print!("{}", EvaluationReport::from_confusion(cm, AbsentClassPolicy::Zero)?.render_table());
    Ok(())
}
