//! Synthetic model streams with known ground truth.
//!
//! The ground truth is a sequence of contiguous emotion segments. For every
//! output row a model first draws the class it "perceives" from the
//! confusion row of the true class, then emits a Dirichlet vector centred
//! halfway between that class and the confusion row. `concentration`
//! controls how tightly vectors cluster around the centre. Windowed models
//! emit one vector per window for the window's majority label.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::data::{read_json, write_json, write_labels, write_stream, DatasetManifest, LabelTask, LabelsEntry, ModelEntry};
use crate::emotion::{BasicEmotion, ClassLabel, CompoundExpression, ProbabilityVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::fusion::stream_rng;
use crate::temporal::{
    align_stream, resampled_len, window_grid, window_majority_labels, AlignedDataset, RawStream, StreamKind,
    StreamSpec, Window,
};

const CONFUSION_TOLERANCE: f64 = 1e-9;
/// Added to every Dirichlet parameter so classes off the centre stay reachable.
const ALPHA_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticModel {
    pub model_id: String,
    /// Row `e` is the distribution of perceived classes when the truth is `e`.
    pub confusion: Vec<[f64; NUM_EMOTIONS]>,
    pub concentration: f64,
    pub stream: StreamSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProfile {
    pub dataset_id: String,
    pub seed: u64,
    pub frame_count: usize,
    pub fps: f64,
    /// Segment lengths are uniform on `[segment_min_frames, segment_max_frames]`.
    pub segment_min_frames: usize,
    pub segment_max_frames: usize,
    pub models: Vec<SyntheticModel>,
}

impl SyntheticProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("profile fps must be positive, got {}", self.fps)));
        }
        if self.segment_min_frames == 0 || self.segment_min_frames > self.segment_max_frames {
            return Err(Error::Config(format!(
                "segment lengths need 1 <= min <= max, got {}..={}",
                self.segment_min_frames, self.segment_max_frames
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("profile lists no models".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for m in &self.models {
            let ctx = |msg: String| Error::Config(format!("model '{}': {msg}", m.model_id));
            if !ids.insert(m.model_id.as_str()) {
                return Err(ctx("duplicate model_id".into()));
            }
            if m.model_id.is_empty() || m.model_id.contains(['/', '\\']) {
                return Err(ctx("model_id must be a plain file name".into()));
            }
            if m.confusion.len() != NUM_EMOTIONS {
                return Err(ctx(format!("confusion has {} rows, expected {NUM_EMOTIONS}", m.confusion.len())));
            }
            for (e, row) in m.confusion.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > CONFUSION_TOLERANCE {
                    return Err(ctx(format!("confusion row {e} is not a distribution (sum {sum})")));
                }
            }
            if !(m.concentration > 0.0 && m.concentration.is_finite()) {
                return Err(ctx(format!("concentration must be positive, got {}", m.concentration)));
            }
            m.stream.validate().map_err(|e| ctx(e.to_string()))?;
            if m.stream.kind == StreamKind::PerFrame && m.stream.effective_fps() < self.fps && !m.stream.allow_upsample {
                return Err(ctx("per-frame stream slower than the dataset needs allow_upsample".into()));
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let profile: SyntheticProfile = read_json(path)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// A generated corpus: raw streams as they would be stored, the aligned
/// dataset and the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub profile: SyntheticProfile,
    pub raw_streams: Vec<RawStream>,
    pub dataset: AlignedDataset,
    pub basic_labels: Vec<BasicEmotion>,
    pub compound_labels: Vec<Option<CompoundExpression>>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROFILE_FILE: &str = "profile.json";
pub const BASIC_LABELS_FILE: &str = "labels_basic.csv";
pub const COMPOUND_LABELS_FILE: &str = "labels_compound.csv";

impl SyntheticCorpus {
    /// Writes streams, labels, the profile and a manifest into `dir`
    /// (created if missing) and returns the manifest.
    pub fn write(&self, dir: &Path) -> Result<DatasetManifest> {
        let streams_dir = dir.join("streams");
        std::fs::create_dir_all(&streams_dir).map_err(|e| Error::io(&streams_dir, e))?;
        let mut models = Vec::with_capacity(self.profile.models.len());
        for (m, raw) in self.profile.models.iter().zip(&self.raw_streams) {
            let rel = PathBuf::from("streams").join(format!("{}.csv", m.model_id));
            write_stream(&dir.join(&rel), raw)?;
            models.push(ModelEntry {
                model_id: m.model_id.clone(),
                path: rel,
                stream: m.stream.clone(),
                class_count: 7,
                extra_column: None,
            });
        }
        let basic: Vec<_> = self.basic_labels.iter().copied().map(Some).collect();
        write_labels(&dir.join(BASIC_LABELS_FILE), &basic)?;
        write_labels(&dir.join(COMPOUND_LABELS_FILE), &self.compound_labels)?;
        self.profile.write(&dir.join(PROFILE_FILE))?;
        let manifest = DatasetManifest {
            dataset_id: self.profile.dataset_id.clone(),
            fps: self.profile.fps,
            frame_count: self.profile.frame_count,
            models,
            labels: vec![
                LabelsEntry { path: BASIC_LABELS_FILE.into(), task: LabelTask::Basic },
                LabelsEntry { path: COMPOUND_LABELS_FILE.into(), task: LabelTask::Compound },
            ],
        };
        manifest.save(&dir.join(MANIFEST_FILE))?;
        Ok(manifest)
    }
}

/// Contiguous segments as `(emotion, length)`, each emotion differing from
/// the one before.
fn segments<R: Rng>(rng: &mut R, profile: &SyntheticProfile) -> Vec<(BasicEmotion, usize)> {
    let mut out = Vec::new();
    let mut covered = 0;
    let mut prev: Option<BasicEmotion> = None;
    while covered < profile.frame_count {
        let emotion = loop {
            let e = BasicEmotion::ALL[rng.random_range(0..NUM_EMOTIONS)];
            if Some(e) != prev {
                break e;
            }
        };
        let len = rng
            .random_range(profile.segment_min_frames..=profile.segment_max_frames)
            .min(profile.frame_count - covered);
        out.push((emotion, len));
        covered += len;
        prev = Some(emotion);
    }
    out
}

/// Compound label of each segment: its emotion paired with the previous
/// segment's, else with the next one's, when the pair forms a compound.
fn compound_segments(segs: &[(BasicEmotion, usize)]) -> Vec<Option<CompoundExpression>> {
    (0..segs.len())
        .map(|s| {
            let e = segs[s].0;
            let prev = s.checked_sub(1).and_then(|p| CompoundExpression::from_pair(segs[p].0, e));
            prev.or_else(|| segs.get(s + 1).and_then(|n| CompoundExpression::from_pair(e, n.0)))
        })
        .collect()
}

struct Emitter {
    perceive: Vec<WeightedIndex<f64>>,
    centres: Vec<Vec<[f64; NUM_EMOTIONS]>>,
    concentration: f64,
}

impl Emitter {
    fn new(model: &SyntheticModel) -> Result<Self> {
        let perceive = model
            .confusion
            .iter()
            .map(|row| WeightedIndex::new(row.iter().copied()).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        // centres[e][k]: halfway between one-hot k and confusion row e.
        let centres = model
            .confusion
            .iter()
            .map(|row| {
                (0..NUM_EMOTIONS)
                    .map(|k| {
                        let mut c = row.map(|v| 0.5 * v);
                        c[k] += 0.5;
                        c
                    })
                    .collect()
            })
            .collect();
        Ok(Emitter { perceive, centres, concentration: model.concentration })
    }

    fn emit<R: Rng>(&self, rng: &mut R, truth: BasicEmotion) -> ProbabilityVector {
        let e = truth.index();
        let k = self.perceive[e].sample(rng);
        let centre = &self.centres[e][k];
        loop {
            let mut draws = [0.0; NUM_EMOTIONS];
            for (d, c) in draws.iter_mut().zip(centre) {
                let gamma = Gamma::new(ALPHA_FLOOR + self.concentration * c, 1.0).expect("positive shape");
                *d = gamma.sample(rng);
            }
            if draws.iter().sum::<f64>() > 0.0 {
                return ProbabilityVector::renormalized(draws).expect("positive sum");
            }
        }
    }
}

fn per_frame_rows(count: usize, dataset_fps: f64, spec: &StreamSpec) -> Result<usize> {
    let eff = spec.effective_fps();
    let guess = (count as f64 * eff / dataset_fps).floor() as usize;
    (guess.saturating_sub(1)..guess + 3)
        .find(|&len| resampled_len(len, eff, dataset_fps) == count)
        .ok_or_else(|| {
            Error::Config(format!("no stream length at {eff} FPS resamples to {count} frames at {dataset_fps} FPS"))
        })
}

fn generate_model<R: Rng>(
    rng: &mut R,
    model: &SyntheticModel,
    truth: &[BasicEmotion],
    fps: f64,
) -> Result<RawStream> {
    let emitter = Emitter::new(model)?;
    match model.stream.kind {
        StreamKind::PerFrame => {
            let eff = model.stream.effective_fps();
            let rows = per_frame_rows(truth.len(), fps, &model.stream)?;
            let last = truth.len().saturating_sub(1);
            Ok(RawStream::PerFrame(
                (0..rows)
                    .map(|j| {
                        let frame = ((j as f64 * fps / eff) + 1e-9).floor() as usize;
                        emitter.emit(rng, truth[frame.min(last)])
                    })
                    .collect(),
            ))
        }
        StreamKind::Windowed => {
            let duration = truth.len() as f64 / fps;
            let grid = window_grid(duration, model.stream.window_seconds, model.stream.step_seconds);
            let labels = window_majority_labels(truth, fps, &grid);
            Ok(RawStream::Windows(
                grid.iter()
                    .zip(labels)
                    .map(|(&(start_s, end_s), label)| Window {
                        start_s,
                        end_s,
                        probs: label.map_or_else(ProbabilityVector::uniform, |l| emitter.emit(rng, l)),
                    })
                    .collect(),
            ))
        }
    }
}

/// Generates a corpus; identical profiles give identical corpora.
pub fn generate_synthetic(profile: &SyntheticProfile) -> Result<SyntheticCorpus> {
    profile.validate()?;
    let mut rng = stream_rng(profile.seed, 0);
    let segs = segments(&mut rng, profile);
    let seg_ce = compound_segments(&segs);
    let mut basic_labels = Vec::with_capacity(profile.frame_count);
    let mut compound_labels = Vec::with_capacity(profile.frame_count);
    for (&(e, len), &ce) in segs.iter().zip(&seg_ce) {
        basic_labels.extend(std::iter::repeat_n(e, len));
        compound_labels.extend(std::iter::repeat_n(ce, len));
    }

    let raw_streams = profile
        .models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let mut rng = stream_rng(profile.seed, 1 + m as u64);
            generate_model(&mut rng, model, &basic_labels, profile.fps)
        })
        .collect::<Result<Vec<_>>>()?;
    let streams = profile
        .models
        .iter()
        .zip(&raw_streams)
        .map(|(model, raw)| align_stream(raw, &model.stream, profile.frame_count, profile.fps))
        .collect::<Result<Vec<_>>>()?;
    let ids = profile.models.iter().map(|m| m.model_id.clone()).collect();
    let dataset = AlignedDataset::new(profile.dataset_id.clone(), profile.fps, ids, streams)?
        .with_basic_labels(basic_labels.iter().copied().map(Some).collect())?
        .with_compound_labels(compound_labels.clone())?;
    Ok(SyntheticCorpus {
        profile: profile.clone(),
        raw_streams,
        dataset,
        basic_labels,
        compound_labels,
    })
}

/// Confusion rows with `diag` on the diagonal, `extra` moved onto specific
/// confusions, and the remainder spread evenly over the other classes.
pub(crate) fn confusion_matrix(diag: [f64; NUM_EMOTIONS], extra: &[(BasicEmotion, BasicEmotion, f64)]) -> Vec<[f64; NUM_EMOTIONS]> {
    (0..NUM_EMOTIONS)
        .map(|e| {
            let mut row = [0.0; NUM_EMOTIONS];
            row[e] = diag[e];
            for &(t, p, w) in extra {
                if t.index() == e {
                    row[p.index()] += w;
                }
            }
            let free: Vec<usize> = (0..NUM_EMOTIONS).filter(|&k| row[k] == 0.0).collect();
            let rest = 1.0 - row.iter().sum::<f64>();
            for &k in &free {
                row[k] = rest / free.len() as f64;
            }
            row
        })
        .collect()
}

pub const PRESETS: &[&str] = &["three-model-default", "audio-anger-sadness"];

/// Built-in profiles by name, generated with `seed`.
pub fn preset(name: &str, seed: u64) -> Option<SyntheticProfile> {
    use BasicEmotion::*;
    let fps = 5.0;
    match name {
        // One sharp per-frame model at 10 FPS, one biased 2 s windowed
        // model, and a near-uniform but confident model sampled every
        // fifth frame of a 25 FPS source.
        "three-model-default" => Some(SyntheticProfile {
            dataset_id: "synthetic-three-model".into(),
            seed,
            frame_count: 5000,
            fps,
            segment_min_frames: 10,
            segment_max_frames: 40,
            models: vec![
                SyntheticModel {
                    model_id: "static".into(),
                    confusion: confusion_matrix([0.75; NUM_EMOTIONS], &[]),
                    concentration: 8.0,
                    stream: StreamSpec::per_frame(10.0),
                },
                SyntheticModel {
                    model_id: "dynamic".into(),
                    confusion: confusion_matrix(
                        [0.45, 0.4, 0.45, 0.4, 0.7, 0.4, 0.7],
                        &[
                            (Anger, Disgust, 0.35),
                            (Fear, Surprise, 0.35),
                            (Sadness, Neutral, 0.35),
                            (Neutral, Sadness, 0.25),
                            (Disgust, Anger, 0.25),
                        ],
                    ),
                    concentration: 8.0,
                    stream: StreamSpec::windowed(fps, 2.0, 1.0),
                },
                SyntheticModel {
                    model_id: "audio".into(),
                    confusion: confusion_matrix([0.2; NUM_EMOTIONS], &[]),
                    concentration: 30.0,
                    stream: StreamSpec { frame_sampling_step: 5, ..StreamSpec::per_frame(25.0) },
                },
            ],
        }),
        // The visual models confuse Anger and Sadness; the audio model is
        // reliable on exactly those two and never emits them otherwise.
        "audio-anger-sadness" => {
            let visual_extra = [(Anger, Disgust, 0.45), (Sadness, Neutral, 0.45)];
            let mut audio = confusion_matrix([0.2; NUM_EMOTIONS], &[]);
            for (e, row) in audio.iter_mut().enumerate() {
                if e == Anger.index() || e == Sadness.index() {
                    *row = [0.0; NUM_EMOTIONS];
                    row[e] = 0.9;
                    row[Neutral.index()] = 0.1;
                } else {
                    let others = NUM_EMOTIONS - 2;
                    for k in 0..NUM_EMOTIONS {
                        row[k] = if k == Anger.index() || k == Sadness.index() { 0.0 } else { 1.0 / others as f64 };
                    }
                }
            }
            Some(SyntheticProfile {
                dataset_id: "synthetic-audio-anger-sadness".into(),
                seed,
                frame_count: 2500,
                fps,
                segment_min_frames: 10,
                segment_max_frames: 40,
                models: vec![
                    SyntheticModel {
                        model_id: "static".into(),
                        confusion: confusion_matrix([0.75, 0.25, 0.75, 0.75, 0.75, 0.25, 0.75], &visual_extra),
                        concentration: 8.0,
                        stream: StreamSpec::per_frame(fps),
                    },
                    SyntheticModel {
                        model_id: "dynamic".into(),
                        confusion: confusion_matrix([0.7, 0.25, 0.7, 0.7, 0.7, 0.25, 0.7], &visual_extra),
                        concentration: 8.0,
                        stream: StreamSpec::per_frame(fps),
                    },
                    SyntheticModel {
                        model_id: "audio".into(),
                        confusion: audio,
                        concentration: 8.0,
                        stream: StreamSpec::per_frame(fps),
                    },
                ],
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{confusion_for, uar};

    fn small(confusion: Vec<[f64; NUM_EMOTIONS]>, concentration: f64, frames: usize) -> SyntheticProfile {
        SyntheticProfile {
            dataset_id: "t".into(),
            seed: 11,
            frame_count: frames,
            fps: 5.0,
            segment_min_frames: 5,
            segment_max_frames: 20,
            models: vec![SyntheticModel {
                model_id: "m".into(),
                confusion,
                concentration,
                stream: StreamSpec::per_frame(5.0),
            }],
        }
    }

    fn identity() -> Vec<[f64; NUM_EMOTIONS]> {
        confusion_matrix([1.0; NUM_EMOTIONS], &[])
    }

    fn argmax_labels(stream: &[ProbabilityVector]) -> Vec<BasicEmotion> {
        stream.iter().map(ProbabilityVector::argmax).collect()
    }

    #[test]
    fn noiseless_model_matches_truth() {
        let corpus = generate_synthetic(&small(identity(), 1e6, 500)).unwrap();
        assert_eq!(argmax_labels(&corpus.dataset.streams[0]), corpus.basic_labels);
    }

    #[test]
    fn uniform_confusion_is_chance_level() {
        let corpus = generate_synthetic(&small(vec![[1.0 / 7.0; 7]; 7], 8.0, 10_000)).unwrap();
        let cm = confusion_for(&corpus.basic_labels, &argmax_labels(&corpus.dataset.streams[0])).unwrap();
        let u = uar(&cm).unwrap();
        assert!((u - 1.0 / 7.0).abs() < 0.02, "uar {u}");
    }

    #[test]
    fn same_seed_same_corpus() {
        let p = preset("three-model-default", 3).unwrap();
        let p = SyntheticProfile { frame_count: 400, ..p };
        assert_eq!(generate_synthetic(&p).unwrap(), generate_synthetic(&p).unwrap());
        let q = SyntheticProfile { seed: 4, ..p.clone() };
        assert_ne!(generate_synthetic(&p).unwrap().basic_labels, generate_synthetic(&q).unwrap().basic_labels);
    }

    #[test]
    fn segments_and_compound_labels() {
        let corpus = generate_synthetic(&small(identity(), 10.0, 2000)).unwrap();
        let labels = &corpus.basic_labels;
        assert_eq!(labels.len(), 2000);
        for (i, ce) in corpus.compound_labels.iter().enumerate() {
            if let Some(ce) = ce {
                let (a, b) = ce.constituents();
                assert!(labels[i] == a || labels[i] == b);
            }
        }
        assert!(corpus.compound_labels.iter().any(Option::is_some));
    }

    #[test]
    fn presets_validate_and_confusions_are_stochastic() {
        for name in PRESETS {
            let p = preset(name, 0).unwrap();
            p.validate().unwrap();
        }
        assert!(preset("nope", 0).is_none());
        let mut p = small(identity(), 1.0, 10);
        p.models[0].confusion[3][0] += 0.01;
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn written_corpus_loads_back_identically() {
        let p = SyntheticProfile { frame_count: 300, ..preset("three-model-default", 5).unwrap() };
        let corpus = generate_synthetic(&p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = corpus.write(dir.path()).unwrap();
        let loaded = DatasetManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(loaded, manifest);
        assert_eq!(loaded.load_dataset(dir.path()).unwrap(), corpus.dataset);
        assert_eq!(SyntheticProfile::read(&dir.path().join(PROFILE_FILE)).unwrap(), p);
    }
}
