use std::path::Path;
use std::process::{Command, Output};

use cefusion::data::{
    generate_synthetic, preset, read_predictions, write_labels, write_stream, DatasetManifest, ModelEntry,
    SyntheticProfile, WeightsFile, MANIFEST_FILE,
};
use cefusion::fusion::{ModelWeightVector, WeightMatrix};
use cefusion::temporal::RawStream;
use cefusion::{BasicEmotion, ClassLabel, CompoundExpression, EvaluationReport, FusionMode, FusionParameters, StreamSpec};

fn cefusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cefusion")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_corpus(dir: &Path, frames: usize) -> std::path::PathBuf {
    let out = cefusion(&["--seed", "3", "synth", "--preset", "three-model-default", "--frames", &frames.to_string(), "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join(MANIFEST_FILE)
}

#[test]
fn ingest_write_reread_preserves_frames_and_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = small_corpus(dir.path(), 400);
    let manifest = DatasetManifest::load(&manifest_path).unwrap();
    let dataset = manifest.load_dataset(dir.path()).unwrap();

    // Write each aligned stream as a per-frame file at the dataset rate.
    let copy = dir.path().join("aligned");
    std::fs::create_dir_all(&copy).unwrap();
    let models: Vec<ModelEntry> = dataset
        .model_ids
        .iter()
        .zip(&dataset.streams)
        .map(|(id, stream)| {
            let path = copy.join(format!("{id}.csv"));
            write_stream(&path, &RawStream::PerFrame(stream.clone())).unwrap();
            ModelEntry { model_id: id.clone(), path, stream: StreamSpec::per_frame(dataset.fps), class_count: 7, extra_column: None }
        })
        .collect();
    let reread = DatasetManifest { models, labels: vec![], ..manifest }.load_dataset(&copy).unwrap();
    assert_eq!(reread.frame_count, dataset.frame_count);
    for (a, b) in reread.streams.iter().zip(&dataset.streams) {
        assert!(a.iter().zip(b).all(|(x, y)| x.argmax() == y.argmax()));
    }
    assert_eq!(reread.streams, dataset.streams);
}

#[test]
fn eight_class_streams_drop_the_extra_column() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("w2v.csv");
    std::fs::write(&stream, "frame,neutral,anger,disgust,fear,happiness,sadness,surprise,unknown\n0,0.1,0.1,0.1,0.1,0.1,0.1,0.2,0.2\n1,0.8,0,0,0,0,0,0,0.2\n").unwrap();
    let labels = dir.path().join("labels.csv");
    write_labels(&labels, &[Some(BasicEmotion::Surprise), Some(BasicEmotion::Neutral)]).unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(
        &manifest,
        r#"{"dataset_id":"eight","fps":5,"frame_count":2,
            "models":[{"model_id":"w2v","path":"w2v.csv","class_count":8,"extra_column":"unknown",
                       "stream":{"kind":"per_frame","native_fps":5}}],
            "labels":[{"path":"labels.csv","task":"basic"}]}"#,
    )
    .unwrap();
    let ds = DatasetManifest::load(&manifest).unwrap().load_dataset(dir.path()).unwrap();
    let first = ds.streams[0][0].values();
    assert!((first[6] - 0.25).abs() < 1e-15 && (first[0] - 0.125).abs() < 1e-15, "{first:?}");
    assert_eq!(ds.streams[0][1].values()[0], 1.0);
    assert_eq!(ds.basic_labels.unwrap()[0], Some(BasicEmotion::Surprise));
}

#[test]
fn usage_and_configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path(), 100);

    assert_eq!(cefusion(&["synth", "--preset", "three-model-default"]).status.code(), Some(2));
    assert_eq!(cefusion(&["synth", "--preset", "nope", "--out", s(dir.path())]).status.code(), Some(2));
    assert_eq!(cefusion(&["frobnicate"]).status.code(), Some(2));

    // Rule 1 on hierarchical weights.
    let weights = dir.path().join("h.json");
    let ids: Vec<String> = ["static", "dynamic", "audio"].iter().map(|s| s.to_string()).collect();
    let params = FusionParameters::new(
        ids,
        WeightMatrix::uniform(3).unwrap(),
        ModelWeightVector::constant(3, 0.25).unwrap(),
        FusionMode::Hierarchical,
    )
    .unwrap();
    WeightsFile::from_params(&params, None).write(&weights).unwrap();
    let out = dir.path().join("p.csv");
    let r = cefusion(&["predict", "--manifest", s(&manifest), "--weights", s(&weights), "--rule", "1", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
    let r = cefusion(&["predict", "--manifest", s(&manifest), "--weights", s(&weights), "--rule", "2", "--out", s(&out)]);
    assert!(r.status.success());

    // Threshold outside [0, 1) is rejected before any file is touched.
    let r = cefusion(&["predict", "--manifest", "missing.json", "--weights", "missing.json", "--rule", "1", "--mask-threshold", "1.5", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));

    // Optimization without labels.
    let mut m = DatasetManifest::load(&manifest).unwrap();
    m.labels.clear();
    let unlabelled = dir.path().join("unlabelled.json");
    m.save(&unlabelled).unwrap();
    let r = cefusion(&["optimize", "--manifest", s(&unlabelled), "--trials", "5", "--out", s(&dir.path().join("w.json"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("optimization requires labels"));

    // Predictions and labels of different lengths.
    let short = dir.path().join("short.csv");
    write_labels(&short, &[Some(CompoundExpression::SadlyAngry)]).unwrap();
    let r = cefusion(&["eval", "--pred", s(&out), "--labels", s(&short), "--task", "compound"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn data_and_io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path(), 60);
    let r = cefusion(&["optimize", "--manifest", s(&dir.path().join("absent.json")), "--trials", "5", "--out", s(&dir.path().join("w.json"))]);
    assert_eq!(r.status.code(), Some(3));

    let stream = dir.path().join("streams").join("static.csv");
    let text = std::fs::read_to_string(&stream).unwrap();
    let broken = text.replacen("\n1,", "\n1,-", 1);
    std::fs::write(&stream, broken).unwrap();
    let r = cefusion(&["optimize", "--manifest", s(&manifest), "--trials", "5", "--out", s(&dir.path().join("w.json"))]);
    assert_eq!(r.status.code(), Some(3));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("static.csv") && err.contains("row 2") && err.contains("'neutral'"), "{err}");
}

#[test]
fn eval_of_perfect_and_crafted_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    let pred = dir.path().join("pred.csv");
    let truth: Vec<BasicEmotion> = (0..14).map(|i| BasicEmotion::ALL[i % 7]).collect();
    write_labels(&labels, &truth.iter().copied().map(Some).collect::<Vec<_>>()).unwrap();
    let mut text = String::from("frame,prediction\n");
    for (i, e) in truth.iter().enumerate() {
        text.push_str(&format!("{i},{}\n", e.name()));
    }
    std::fs::write(&pred, text).unwrap();
    let r = cefusion(&["eval", "--pred", s(&pred), "--labels", s(&labels), "--task", "basic"]);
    assert!(String::from_utf8_lossy(&r.stdout).contains("F1 = 100.00  UAR = 100.00"));

    // Three classes, 20 frames; confusion [[4,1,2],[2,3,1],[1,1,5]].
    use CompoundExpression::*;
    let classes = [FearfullySurprised, HappilySurprised, SadlySurprised];
    let counts = [[4, 1, 2], [2, 3, 1], [1, 1, 5]];
    let mut t = Vec::new();
    let mut text = String::from("frame,prediction\n");
    for (ti, row) in counts.iter().enumerate() {
        for (pi, &n) in row.iter().enumerate() {
            for _ in 0..n {
                text.push_str(&format!("{},{}\n", t.len(), classes[pi].name()));
                t.push(Some(classes[ti]));
            }
        }
    }
    write_labels(&labels, &t).unwrap();
    std::fs::write(&pred, text).unwrap();
    let report_path = dir.path().join("report.json");
    let r = cefusion(&["eval", "--pred", s(&pred), "--labels", s(&labels), "--task", "compound", "--exclude-absent", "--out", s(&report_path)]);
    assert!(r.status.success());
    let report: EvaluationReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    // Per class: precision 4/7, 3/5, 5/8; recall 4/7, 3/6, 5/7.
    let f1 = |p: f64, r: f64| 2.0 * p * r / (p + r);
    let expected_f1 = (f1(4.0 / 7.0, 4.0 / 7.0) + f1(3.0 / 5.0, 3.0 / 6.0) + f1(5.0 / 8.0, 5.0 / 7.0)) / 3.0;
    let expected_uar = (4.0 / 7.0 + 3.0 / 6.0 + 5.0 / 7.0) / 3.0;
    assert!((report.macro_f1 - expected_f1).abs() < 1e-12, "{} vs {expected_f1}", report.macro_f1);
    assert!((report.uar - expected_uar).abs() < 1e-12);
    assert_eq!(report.frames_evaluated, 20);
}

#[test]
fn synth_from_profile_file_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let profile = SyntheticProfile { frame_count: 150, ..preset("audio-anger-sadness", 9).unwrap() };
    let path = dir.path().join("profile.json");
    profile.write(&path).unwrap();
    let out = dir.path().join("corpus");
    let r = cefusion(&["synth", "--profile", s(&path), "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let loaded = DatasetManifest::load(&out.join(MANIFEST_FILE)).unwrap().load_dataset(&out).unwrap();
    assert_eq!(loaded, generate_synthetic(&profile).unwrap().dataset);
}

#[test]
fn fuse_then_eval_basic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path(), 200);
    let weights = dir.path().join("w.json");
    let fused = dir.path().join("fused.csv");
    assert!(cefusion(&["--seed", "1", "optimize", "--manifest", s(&manifest), "--trials", "50", "--mode", "hierarchical", "--out", s(&weights)]).status.success());
    assert_eq!(WeightsFile::read(&weights).unwrap().mode, FusionMode::Hierarchical);
    assert!(cefusion(&["fuse", "--manifest", s(&manifest), "--weights", s(&weights), "--out", s(&fused)]).status.success());
    assert_eq!(read_predictions::<BasicEmotion>(&fused).unwrap().len(), 200);
    let r = cefusion(&["eval", "--pred", s(&fused), "--labels", s(&dir.path().join("labels_basic.csv")), "--task", "basic"]);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("frames evaluated: 200"));
}
