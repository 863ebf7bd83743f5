use std::path::Path;

use crate::data::{csv_error, csv_reader, csv_writer, Header};
use crate::emotion::{BasicEmotion, ClassLabel, ProbabilityVector, NUM_EMOTIONS};
use crate::error::{Error, Result};
use crate::temporal::{RawStream, StreamKind, StreamSpec, Window};

pub const FRAME_COLUMN: &str = "frame";
pub const START_COLUMN: &str = "start_s";
pub const END_COLUMN: &str = "end_s";
/// Default name of the eighth column of 8-class model outputs.
pub const DEFAULT_EXTRA_COLUMN: &str = "other";

/// Rows must sum to one within this tolerance before renormalization.
const ROW_SUM_TOLERANCE: f64 = 1e-4;
/// Rows this close to one are already normalized and kept verbatim.
const EXACT_SUM_TOLERANCE: f64 = 1e-12;

fn parse_field(path: &Path, row: usize, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::at(path, row, column, format!("'{raw}' is not a number")))?;
    if v.is_nan() {
        return Err(Error::at(path, row, column, "value is NaN"));
    }
    if !v.is_finite() {
        return Err(Error::at(path, row, column, "value is not finite"));
    }
    Ok(v)
}

/// Reads a probability stream.
///
/// `class_count` is 7 or 8; for 8-class files the column named
/// `extra_column` is dropped after validation and the remaining seven
/// entries renormalized. Every row must sum to one within 1e-4.
pub fn read_stream(path: &Path, spec: &StreamSpec, class_count: u8, extra_column: &str) -> Result<RawStream> {
    if class_count != 7 && class_count != 8 {
        return Err(Error::Parameter(format!("class_count must be 7 or 8, got {class_count}")));
    }
    spec.validate()?;
    let mut reader = csv_reader(path)?;
    let header = Header::read(path, &mut reader)?;

    let frame_col = header.require(path, FRAME_COLUMN)?;
    let class_cols = BasicEmotion::ALL
        .iter()
        .map(|e| header.require(path, e.name()))
        .collect::<Result<Vec<_>>>()?;
    let extra_col = if class_count == 8 {
        Some(header.require(path, &extra_column.to_ascii_lowercase())?)
    } else {
        None
    };
    let window_cols = if spec.kind == StreamKind::Windowed {
        Some((header.require(path, START_COLUMN)?, header.require(path, END_COLUMN)?))
    } else {
        None
    };
    let mut known = vec![frame_col];
    known.extend(&class_cols);
    known.extend(extra_col);
    if let Some((s, e)) = window_cols {
        known.extend([s, e]);
    }
    if let Some((_, name)) = header.names().iter().enumerate().find(|(i, _)| !known.contains(i)) {
        return Err(Error::at(path, 0, name, "unexpected column for this stream"));
    }

    let mut frames = Vec::new();
    let mut windows = Vec::new();
    let mut last_frame: Option<u64> = None;
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |col: usize| record.get(col).unwrap_or("");

        let frame: u64 = field(frame_col)
            .parse()
            .map_err(|_| Error::at(path, row, FRAME_COLUMN, format!("'{}' is not a frame index", field(frame_col))))?;
        if let Some(prev) = last_frame {
            if frame <= prev {
                return Err(Error::at(path, row, FRAME_COLUMN, format!("frame {frame} does not increase after {prev}")));
            }
        }
        last_frame = Some(frame);

        let mut values = [0.0; NUM_EMOTIONS];
        for (slot, (&col, e)) in values.iter_mut().zip(class_cols.iter().zip(BasicEmotion::ALL)) {
            let v = parse_field(path, row, e.name(), field(col))?;
            if v < 0.0 {
                return Err(Error::at(path, row, e.name(), format!("negative probability {v}")));
            }
            *slot = v;
        }
        let mut total: f64 = values.iter().sum();
        if let Some(col) = extra_col {
            let v = parse_field(path, row, extra_column, field(col))?;
            if v < 0.0 {
                return Err(Error::at(path, row, extra_column, format!("negative probability {v}")));
            }
            total += v;
        }
        if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::at(path, row, "*", format!("probabilities sum to {total}, expected 1 within {ROW_SUM_TOLERANCE}")));
        }
        let kept: f64 = values.iter().sum();
        let probs = if (kept - 1.0).abs() <= EXACT_SUM_TOLERANCE {
            ProbabilityVector::normalized(values)?
        } else {
            ProbabilityVector::renormalized(values)
                .map_err(|e| Error::at(path, row, "*", e))?
        };

        match window_cols {
            None => frames.push(probs),
            Some((s, e)) => {
                let start_s = parse_field(path, row, START_COLUMN, field(s))?;
                let end_s = parse_field(path, row, END_COLUMN, field(e))?;
                if end_s <= start_s {
                    return Err(Error::at(path, row, END_COLUMN, format!("window end {end_s} not after start {start_s}")));
                }
                if let Some(prev) = windows.last().map(|w: &Window| w.start_s) {
                    if start_s < prev {
                        return Err(Error::at(path, row, START_COLUMN, format!("window start {start_s} before previous start {prev}")));
                    }
                }
                windows.push(Window { start_s, end_s, probs });
            }
        }
    }
    Ok(match spec.kind {
        StreamKind::PerFrame => RawStream::PerFrame(frames),
        StreamKind::Windowed => RawStream::Windows(windows),
    })
}

/// Writes a stream in the format [`read_stream`] accepts (7 classes).
pub fn write_stream(path: &Path, stream: &RawStream) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![FRAME_COLUMN];
    if matches!(stream, RawStream::Windows(_)) {
        header.extend([START_COLUMN, END_COLUMN]);
    }
    header.extend(BasicEmotion::names());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let mut record = Vec::with_capacity(header.len());
    match stream {
        RawStream::PerFrame(frames) => {
            for (i, p) in frames.iter().enumerate() {
                record.clear();
                record.push(i.to_string());
                record.extend(p.values().iter().map(f64::to_string));
                w.write_record(&record).map_err(|e| csv_error(path, e))?;
            }
        }
        RawStream::Windows(windows) => {
            for (i, win) in windows.iter().enumerate() {
                record.clear();
                record.push(i.to_string());
                record.push(win.start_s.to_string());
                record.push(win.end_s.to_string());
                record.extend(win.probs.values().iter().map(f64::to_string));
                w.write_record(&record).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
