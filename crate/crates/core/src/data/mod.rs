//! On-disk formats and the synthetic stream generator.
//!
//! | file            | format                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | stream          | CSV `frame,neutral,...,surprise` (+ `start_s,end_s` windowed)  |
//! | labels          | CSV `frame,label` with class names; empty label = unlabelled  |
//! | manifest        | JSON, see [`DatasetManifest`]                                 |
//! | weights         | JSON, see [`WeightsFile`]                                     |
//! | predictions     | CSV `frame,prediction,<one score column per class>`           |
//! | diagnostics     | CSV `frame,event`                                             |
//!
//! Classes are always referenced by name. Floats are written in the
//! shortest form that parses back to the identical `f64`.

mod labels;
mod manifest;
mod predictions;
mod stream;
mod synthetic;
mod weights;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emotion::{BasicEmotion, NUM_EMOTIONS};
use crate::error::{Error, Result};

pub use labels::{labels_by_frame, read_labels, write_labels, LABEL_COLUMN};
pub use manifest::{DatasetManifest, LabelTask, LabelsEntry, ModelEntry};
pub(crate) use predictions::event_counts;
pub use predictions::{
    read_predictions, write_basic_predictions, write_ce_predictions, write_diagnostics, write_report,
    PREDICTION_COLUMN,
};
pub use stream::{read_stream, write_stream, DEFAULT_EXTRA_COLUMN, END_COLUMN, FRAME_COLUMN, START_COLUMN};
pub use synthetic::{
    generate_synthetic, preset, SyntheticCorpus, SyntheticModel, SyntheticProfile, BASIC_LABELS_FILE, COMPOUND_LABELS_FILE,
    MANIFEST_FILE, PRESETS, PROFILE_FILE,
};
pub use weights::{ModelWeights, Provenance, WeightsFile};

/// One value per basic emotion, serialized as an object keyed by class name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerEmotion<T> {
    pub neutral: T,
    pub anger: T,
    pub disgust: T,
    pub fear: T,
    pub happiness: T,
    pub sadness: T,
    pub surprise: T,
}

impl<T: Copy> PerEmotion<T> {
    pub fn from_array(a: [T; NUM_EMOTIONS]) -> Self {
        PerEmotion {
            neutral: a[0],
            anger: a[1],
            disgust: a[2],
            fear: a[3],
            happiness: a[4],
            sadness: a[5],
            surprise: a[6],
        }
    }

    pub fn to_array(&self) -> [T; NUM_EMOTIONS] {
        [
            self.neutral,
            self.anger,
            self.disgust,
            self.fear,
            self.happiness,
            self.sadness,
            self.surprise,
        ]
    }

    pub fn get(&self, e: BasicEmotion) -> T {
        self.to_array()[e as usize]
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: malformed CSV: {:?}", path.display(), other)),
    }
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Column positions looked up by header name.
pub(crate) struct Header {
    names: Vec<String>,
}

impl Header {
    pub(crate) fn read(path: &Path, reader: &mut csv::Reader<std::fs::File>) -> Result<Self> {
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(|h| h.to_ascii_lowercase())
            .collect();
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::at(path, 0, dup, "duplicate column in header"));
        }
        Ok(Header { names })
    }

    pub(crate) fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn require(&self, path: &Path, name: &str) -> Result<usize> {
        self.position(name)
            .ok_or_else(|| Error::at(path, 0, name, "missing column in header"))
    }

    pub(crate) fn names(&self) -> &[String] {
        &self.names
    }
}
