use std::path::Path;

use crate::data::{csv_error, csv_reader, csv_writer, write_json, Header, FRAME_COLUMN};
use crate::emotion::{BasicEmotion, ClassLabel, ProbabilityVector};
use crate::error::{Error, Result};
use crate::metrics::EvaluationReport;
use crate::rules::{CePrediction, MaskEvent};

pub const PREDICTION_COLUMN: &str = "prediction";
const EVENT_COLUMN: &str = "event";

fn write_rows<L: ClassLabel>(path: &Path, rows: impl Iterator<Item = (L, Vec<f64>)>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![FRAME_COLUMN, PREDICTION_COLUMN];
    header.extend(L::names());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, (label, scores)) in rows.enumerate() {
        let mut record = Vec::with_capacity(header.len());
        record.push(i.to_string());
        record.push(label.name().to_string());
        record.extend(scores.iter().map(|s| s.to_string()));
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per frame: frame index, compound expression and its seven scores.
pub fn write_ce_predictions(path: &Path, predictions: &[CePrediction]) -> Result<()> {
    write_rows(path, predictions.iter().map(|p| (p.compound, p.scores.values().to_vec())))
}

/// One row per frame: frame index, argmax basic emotion and the fused vector.
pub fn write_basic_predictions(path: &Path, fused: &[ProbabilityVector]) -> Result<()> {
    write_rows::<BasicEmotion>(path, fused.iter().map(|p| (p.argmax(), p.values().to_vec())))
}

/// Reads the `frame` and `prediction` columns of a predictions file. Score
/// columns are not interpreted.
pub fn read_predictions<L: ClassLabel>(path: &Path) -> Result<Vec<(u64, L)>> {
    let mut reader = csv_reader(path)?;
    let header = Header::read(path, &mut reader)?;
    let frame_col = header.require(path, FRAME_COLUMN)?;
    let pred_col = header.require(path, PREDICTION_COLUMN)?;
    let mut out: Vec<(u64, L)> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let raw = record.get(frame_col).unwrap_or("");
        let frame: u64 = raw
            .parse()
            .map_err(|_| Error::at(path, row, FRAME_COLUMN, format!("'{raw}' is not a frame index")))?;
        if let Some((prev, _)) = out.last() {
            if frame <= *prev {
                return Err(Error::at(path, row, FRAME_COLUMN, format!("frame {frame} does not increase after {prev}")));
            }
        }
        let name = record.get(pred_col).unwrap_or("");
        let label = L::from_name(name).ok_or_else(|| {
            Error::at(
                path,
                row,
                PREDICTION_COLUMN,
                format!("unknown class '{name}' (expected one of {})", L::names().join(", ")),
            )
        })?;
        out.push((frame, label));
    }
    Ok(out)
}

/// Lists frames whose rule-1 masking removed every compound score.
pub fn write_diagnostics(path: &Path, predictions: &[CePrediction]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([FRAME_COLUMN, EVENT_COLUMN]).map_err(|e| csv_error(path, e))?;
    for (i, p) in predictions.iter().enumerate() {
        if let Some(event) = p.event {
            w.write_record([i.to_string().as_str(), event.name()]).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Counts of each diagnostic event, in `MaskEvent` order.
pub(crate) fn event_counts(predictions: &[CePrediction]) -> [(MaskEvent, usize); 2] {
    let count = |e| predictions.iter().filter(|p| p.event == Some(e)).count();
    [
        (MaskEvent::AllMasked, count(MaskEvent::AllMasked)),
        (MaskEvent::NeutralDominant, count(MaskEvent::NeutralDominant)),
    ]
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<()> {
    write_json(path, report)
}
