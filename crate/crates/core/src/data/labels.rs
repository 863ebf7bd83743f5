use std::path::Path;

use crate::data::{csv_error, csv_reader, csv_writer, Header, FRAME_COLUMN};
use crate::emotion::ClassLabel;
use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";

/// Reads a `frame,label` file. Labels are class names; an empty label marks
/// an unlabelled frame. Frame indices must strictly increase.
pub fn read_labels<L: ClassLabel>(path: &Path) -> Result<Vec<(u64, Option<L>)>> {
    let mut reader = csv_reader(path)?;
    let header = Header::read(path, &mut reader)?;
    let frame_col = header.require(path, FRAME_COLUMN)?;
    let label_col = header.require(path, LABEL_COLUMN)?;
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        let raw_frame = record.get(frame_col).unwrap_or("");
        let frame: u64 = raw_frame
            .parse()
            .map_err(|_| Error::at(path, row, FRAME_COLUMN, format!("'{raw_frame}' is not a frame index")))?;
        if let Some((prev, _)) = out.last() {
            if frame <= *prev {
                return Err(Error::at(path, row, FRAME_COLUMN, format!("frame {frame} does not increase after {prev}")));
            }
        }
        let name = record.get(label_col).unwrap_or("");
        let label = if name.is_empty() {
            None
        } else {
            Some(L::from_name(name).ok_or_else(|| {
                Error::at(
                    path,
                    row,
                    LABEL_COLUMN,
                    format!("unknown label '{name}' (expected one of {})", L::names().join(", ")),
                )
            })?)
        };
        out.push((frame, label));
    }
    Ok(out)
}

/// Spreads sparse `(frame, label)` rows over `frame_count` frames.
pub fn labels_by_frame<L: ClassLabel>(rows: &[(u64, Option<L>)], frame_count: usize) -> Result<Vec<Option<L>>> {
    let mut out = vec![None; frame_count];
    for &(frame, label) in rows {
        let slot = out.get_mut(frame as usize).ok_or_else(|| {
            Error::Data(format!("label for frame {frame} but dataset has {frame_count} frames"))
        })?;
        *slot = label;
    }
    Ok(out)
}

/// Writes one row per frame, frames numbered from 0.
pub fn write_labels<L: ClassLabel>(path: &Path, labels: &[Option<L>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([FRAME_COLUMN, LABEL_COLUMN]).map_err(|e| csv_error(path, e))?;
    for (i, l) in labels.iter().enumerate() {
        let frame = i.to_string();
        w.write_record([frame.as_str(), l.map_or("", |l| l.name())])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
