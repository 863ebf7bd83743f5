use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{labels_by_frame, read_json, read_labels, read_stream, write_json, DEFAULT_EXTRA_COLUMN};
use crate::emotion::{BasicEmotion, CompoundExpression};
use crate::error::{Error, Result};
use crate::temporal::{align_stream, AlignedDataset, StreamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTask {
    Basic,
    Compound,
}

impl std::str::FromStr for LabelTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(LabelTask::Basic),
            "compound" => Ok(LabelTask::Compound),
            other => Err(Error::Config(format!("unknown task '{other}' (expected basic or compound)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    /// Stream file, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    pub stream: StreamSpec,
    #[serde(default = "default_class_count")]
    pub class_count: u8,
    /// Name of the column dropped from 8-class streams.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_column: Option<String>,
}

fn default_class_count() -> u8 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsEntry {
    pub path: PathBuf,
    pub task: LabelTask,
}

/// Binds model streams and label files into one evaluable dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    /// Frame rate of the common frame grid.
    pub fps: f64,
    pub frame_count: usize,
    pub models: Vec<ModelEntry>,
    /// At most one entry per task.
    #[serde(default)]
    pub labels: Vec<LabelsEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("manifest fps must be positive, got {}", self.fps)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("manifest lists no models".into()));
        }
        let mut ids = HashSet::new();
        for m in &self.models {
            if !ids.insert(m.model_id.as_str()) {
                return Err(Error::Config(format!("duplicate model_id '{}'", m.model_id)));
            }
            if m.class_count != 7 && m.class_count != 8 {
                return Err(Error::Config(format!(
                    "model '{}' has class_count {}, expected 7 or 8",
                    m.model_id, m.class_count
                )));
            }
            m.stream
                .validate()
                .map_err(|e| Error::Config(format!("model '{}': {e}", m.model_id)))?;
        }
        let mut tasks = HashSet::new();
        if let Some(dup) = self.labels.iter().find(|l| !tasks.insert(l.task)) {
            return Err(Error::Config(format!("more than one labels entry for task {:?}", dup.task)));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest: DatasetManifest = read_json(path)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.model_id.clone()).collect()
    }

    pub fn labels_for(&self, task: LabelTask) -> Option<&LabelsEntry> {
        self.labels.iter().find(|l| l.task == task)
    }

    /// Reads every stream (concurrently), aligns it to the frame grid and
    /// attaches the label files. Relative paths resolve against `base_dir`.
    pub fn load_dataset(&self, base_dir: &Path) -> Result<AlignedDataset> {
        self.validate()?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) };
        let streams = self
            .models
            .par_iter()
            .map(|m| {
                let path = resolve(&m.path);
                let extra = m.extra_column.as_deref().unwrap_or(DEFAULT_EXTRA_COLUMN);
                let raw = read_stream(&path, &m.stream, m.class_count, extra)?;
                align_stream(&raw, &m.stream, self.frame_count, self.fps).map_err(|e| match e {
                    Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dataset = AlignedDataset::new(self.dataset_id.clone(), self.fps, self.model_ids(), streams)?;
        if dataset.frame_count != self.frame_count {
            return Err(Error::Data(format!(
                "streams hold {} frames, manifest declares {}",
                dataset.frame_count, self.frame_count
            )));
        }
        if let Some(entry) = self.labels_for(LabelTask::Basic) {
            let rows = read_labels::<BasicEmotion>(&resolve(&entry.path))?;
            dataset = dataset.with_basic_labels(labels_by_frame(&rows, self.frame_count)?)?;
        }
        if let Some(entry) = self.labels_for(LabelTask::Compound) {
            let rows = read_labels::<CompoundExpression>(&resolve(&entry.path))?;
            dataset = dataset.with_compound_labels(labels_by_frame(&rows, self.frame_count)?)?;
        }
        Ok(dataset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        DatasetManifest {
            dataset_id: "t".into(),
            fps: 5.0,
            frame_count: 10,
            models: vec![ModelEntry {
                model_id: "a".into(),
                path: "a.csv".into(),
                stream: StreamSpec::per_frame(5.0),
                class_count: 7,
                extra_column: None,
            }],
            labels: vec![],
        }
    }

    #[test]
    fn validation() {
        assert!(manifest().validate().is_ok());

        let mut m = manifest();
        m.models.push(m.models[0].clone());
        assert!(matches!(m.validate(), Err(Error::Config(_))));

        let mut m = manifest();
        m.models[0].class_count = 9;
        assert!(m.validate().is_err());

        let mut m = manifest();
        m.labels = vec![
            LabelsEntry { path: "l.csv".into(), task: LabelTask::Basic },
            LabelsEntry { path: "k.csv".into(), task: LabelTask::Basic },
        ];
        assert!(m.validate().is_err());

        let mut m = manifest();
        m.models[0].stream = StreamSpec::windowed(5.0, 0.0, 2.0);
        assert!(m.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_value(manifest()).unwrap();
        assert_eq!(json["models"][0]["stream"]["kind"], "per_frame");
        let parsed: DatasetManifest = serde_json::from_str(
            r#"{"dataset_id":"x","fps":5,"frame_count":3,
                "models":[{"model_id":"w2v","path":"w.csv","class_count":8,"extra_column":"unknown",
                           "stream":{"kind":"windowed","native_fps":5,"window_seconds":4,"step_seconds":2}}],
                "labels":[{"path":"l.csv","task":"basic"}]}"#,
        )
        .unwrap();
        assert!(parsed.validate().is_ok());
        assert_eq!(parsed.models[0].stream.frame_sampling_step, 1);
        assert_eq!(parsed.labels_for(LabelTask::Basic).unwrap().path, PathBuf::from("l.csv"));
    }
}
