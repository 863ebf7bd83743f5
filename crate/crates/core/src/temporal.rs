//! Bringing model streams with different time bases onto one frame grid.
//!
//! Per-frame streams may run at a different rate than the dataset and are
//! resampled by nearest frame. Windowed streams (one vector per time
//! window, possibly overlapping) are expanded to frames by averaging all
//! windows that cover a frame.

use serde::{Deserialize, Serialize};

use crate::emotion::{BasicEmotion, ClassLabel, CompoundExpression, ProbabilityVector, NUM_EMOTIONS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    PerFrame,
    Windowed,
}

/// Time base of one model stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub kind: StreamKind,
    /// Frame rate of the source the stream was computed from.
    pub native_fps: f64,
    #[serde(default)]
    pub window_seconds: f64,
    #[serde(default)]
    pub step_seconds: f64,
    /// A per-frame stream holds one row every `frame_sampling_step` native frames.
    #[serde(default = "default_sampling_step")]
    pub frame_sampling_step: u32,
    /// Allow nearest-frame duplication when the stream is slower than the dataset.
    #[serde(default)]
    pub allow_upsample: bool,
}

fn default_sampling_step() -> u32 {
    1
}

impl StreamSpec {
    pub fn per_frame(native_fps: f64) -> Self {
        StreamSpec {
            kind: StreamKind::PerFrame,
            native_fps,
            window_seconds: 0.0,
            step_seconds: 0.0,
            frame_sampling_step: 1,
            allow_upsample: false,
        }
    }

    pub fn windowed(native_fps: f64, window_seconds: f64, step_seconds: f64) -> Self {
        StreamSpec {
            kind: StreamKind::Windowed,
            native_fps,
            window_seconds,
            step_seconds,
            frame_sampling_step: 1,
            allow_upsample: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.native_fps > 0.0 && self.native_fps.is_finite()) {
            return Err(Error::Parameter(format!("native_fps must be positive, got {}", self.native_fps)));
        }
        if self.frame_sampling_step == 0 {
            return Err(Error::Parameter("frame_sampling_step must be at least 1".into()));
        }
        if self.kind == StreamKind::Windowed && !(self.window_seconds > 0.0 && self.step_seconds > 0.0) {
            return Err(Error::Parameter(format!(
                "windowed stream needs positive window and step, got {} s / {} s",
                self.window_seconds, self.step_seconds
            )));
        }
        Ok(())
    }

    /// Rate of the rows of a per-frame stream after frame sampling.
    pub fn effective_fps(&self) -> f64 {
        self.native_fps / f64::from(self.frame_sampling_step)
    }
}

/// One window-level prediction covering `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start_s: f64,
    pub end_s: f64,
    pub probs: ProbabilityVector,
}

/// A stream as read from disk, before alignment.
#[derive(Debug, Clone, PartialEq)]
pub enum RawStream {
    PerFrame(Vec<ProbabilityVector>),
    Windows(Vec<Window>),
}

impl RawStream {
    pub fn len(&self) -> usize {
        match self {
            RawStream::PerFrame(v) => v.len(),
            RawStream::Windows(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Number of frames a window of `seconds` spans at `fps`.
pub fn frames_in_window(seconds: f64, fps: f64) -> usize {
    (seconds * fps).round() as usize
}

/// Output length when resampling `len` frames from `fps_in` to `fps_out`.
pub fn resampled_len(len: usize, fps_in: f64, fps_out: f64) -> usize {
    // The epsilon keeps exact ratios like 30 * 5 / 30 from rounding up.
    ((len as f64 * fps_out / fps_in) - 1e-9).ceil().max(0.0) as usize
}

/// Nearest-frame resampling: output frame `i` takes input frame
/// `round(i * fps_in / fps_out)`.
///
/// Upsampling (`fps_out > fps_in`) duplicates frames and is refused unless
/// `allow_upsample` is set.
pub fn resample_fps<T: Clone>(stream: &[T], fps_in: f64, fps_out: f64, allow_upsample: bool) -> Result<Vec<T>> {
    if !(fps_in > 0.0 && fps_out > 0.0 && fps_in.is_finite() && fps_out.is_finite()) {
        return Err(Error::Parameter(format!("frame rates must be positive, got {fps_in} -> {fps_out}")));
    }
    if fps_out > fps_in && !allow_upsample {
        return Err(Error::Parameter(format!(
            "upsampling from {fps_in} to {fps_out} FPS requires allow_upsample"
        )));
    }
    if fps_in == fps_out || stream.is_empty() {
        return Ok(stream.to_vec());
    }
    let ratio = fps_in / fps_out;
    let last = stream.len() - 1;
    Ok((0..resampled_len(stream.len(), fps_in, fps_out))
        .map(|i| {
            let src = ((i as f64 * ratio).round() as usize).min(last);
            stream[src].clone()
        })
        .collect())
}

/// Expands window predictions to `frame_count` frames at `fps`.
///
/// Frame `i` sits at `t = i / fps` and is covered by every window with
/// `start_s <= t < end_s`; it receives the renormalized mean of those
/// windows. A frame covered by no window takes the nearest window (the
/// earlier one on equal distance).
pub fn expand_windows(windows: &[Window], frame_count: usize, fps: f64) -> Result<Vec<ProbabilityVector>> {
    if windows.is_empty() {
        return Err(Error::Data("no windows to expand".into()));
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::Parameter(format!("fps must be positive, got {fps}")));
    }
    for (i, w) in windows.iter().enumerate() {
        if !(w.end_s > w.start_s) {
            return Err(Error::Data(format!(
                "window {i} has end {} not after start {}",
                w.end_s, w.start_s
            )));
        }
        if i > 0 && w.start_s < windows[i - 1].start_s {
            return Err(Error::Data(format!("windows not sorted by start at window {i}")));
        }
    }
    let longest = windows.iter().map(|w| w.end_s - w.start_s).fold(0.0, f64::max);

    let mut out = Vec::with_capacity(frame_count);
    for i in 0..frame_count {
        let t = i as f64 / fps;
        // Windows starting after t cannot cover it; those starting more than
        // `longest` before t have already ended.
        let upto = windows.partition_point(|w| w.start_s <= t);
        let mut acc = [0.0; NUM_EMOTIONS];
        let mut covering = 0usize;
        let mut only = None;
        for w in windows[..upto].iter().rev() {
            if w.start_s < t - longest {
                break;
            }
            if t < w.end_s {
                covering += 1;
                only = Some(w);
                for (a, p) in acc.iter_mut().zip(w.probs.values()) {
                    *a += p;
                }
            }
        }
        let probs = match (covering, only) {
            (0, _) => nearest_window(windows, t).probs,
            (1, Some(w)) => w.probs,
            (n, _) => ProbabilityVector::renormalized(acc.map(|a| a / n as f64))?,
        };
        out.push(probs);
    }
    Ok(out)
}

fn nearest_window(windows: &[Window], t: f64) -> &Window {
    let distance = |w: &Window| {
        if t < w.start_s {
            w.start_s - t
        } else {
            (t - w.end_s).max(0.0)
        }
    };
    let mut best = &windows[0];
    let mut best_d = distance(best);
    for w in &windows[1..] {
        let d = distance(w);
        if d < best_d {
            best = w;
            best_d = d;
        }
    }
    best
}

/// Most frequent label, lowest class index on ties.
pub fn majority_label<L: ClassLabel>(labels: &[L]) -> Result<L> {
    if labels.is_empty() {
        return Err(Error::Data("cannot take the majority of zero labels".into()));
    }
    let mut counts = vec![0usize; L::ALL.len()];
    for l in labels {
        counts[l.index()] += 1;
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    Ok(L::ALL[best])
}

/// Majority label of the frames each window covers (`start <= i/fps < end`).
/// Windows covering no frame get `None`.
pub fn window_majority_labels<L: ClassLabel>(
    frame_labels: &[L],
    fps: f64,
    windows: &[(f64, f64)],
) -> Vec<Option<L>> {
    windows
        .iter()
        .map(|&(start, end)| {
            // Candidate range padded by one frame; the filter decides.
            let lo = ((start * fps).floor().max(1.0) as usize - 1).min(frame_labels.len());
            let hi = ((end * fps).ceil().max(0.0) as usize + 1).min(frame_labels.len());
            let covered: Vec<L> = (lo..hi)
                .filter(|&i| {
                    let t = i as f64 / fps;
                    start <= t && t < end
                })
                .map(|i| frame_labels[i])
                .collect();
            majority_label(&covered).ok()
        })
        .collect()
}

/// Window start/end times for a clip of `duration_s` seconds, stepping by
/// `step_s`. The last window may extend past the clip end.
pub fn window_grid(duration_s: f64, window_s: f64, step_s: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * step_s;
        if start >= duration_s && k > 0 {
            break;
        }
        out.push((start, start + window_s));
        if start + window_s >= duration_s {
            break;
        }
        k += 1;
    }
    out
}

/// Aligns a raw stream to `frame_count` frames at `fps` according to `spec`.
/// The result always has exactly `frame_count` vectors or is an error.
pub fn align_stream(raw: &RawStream, spec: &StreamSpec, frame_count: usize, fps: f64) -> Result<Vec<ProbabilityVector>> {
    spec.validate()?;
    let frames = match (raw, spec.kind) {
        (RawStream::PerFrame(rows), StreamKind::PerFrame) => {
            resample_fps(rows, spec.effective_fps(), fps, spec.allow_upsample)?
        }
        (RawStream::Windows(windows), StreamKind::Windowed) => expand_windows(windows, frame_count, fps)?,
        _ => {
            return Err(Error::Config(format!(
                "stream contents do not match declared kind {:?}",
                spec.kind
            )))
        }
    };
    if frames.len() != frame_count {
        return Err(Error::Data(format!(
            "aligned stream has {} frames, dataset declares {}",
            frames.len(),
            frame_count
        )));
    }
    Ok(frames)
}

/// Every model stream on one frame grid, with optional per-frame labels.
///
/// `streams[m][i]` is model `m`'s normalized vector for frame `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    pub dataset_id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub model_ids: Vec<String>,
    pub streams: Vec<Vec<ProbabilityVector>>,
    pub basic_labels: Option<Vec<Option<BasicEmotion>>>,
    pub compound_labels: Option<Vec<Option<CompoundExpression>>>,
}

impl AlignedDataset {
    pub fn new(
        dataset_id: impl Into<String>,
        fps: f64,
        model_ids: Vec<String>,
        streams: Vec<Vec<ProbabilityVector>>,
    ) -> Result<Self> {
        if model_ids.len() != streams.len() {
            return Err(Error::Shape {
                what: "model streams",
                expected: model_ids.len(),
                found: streams.len(),
            });
        }
        if model_ids.is_empty() {
            return Err(Error::Data("dataset has no model streams".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = model_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Data(format!("duplicate model id '{dup}'")));
        }
        let frame_count = streams[0].len();
        for (id, s) in model_ids.iter().zip(&streams) {
            if s.len() != frame_count {
                return Err(Error::Data(format!(
                    "stream '{id}' has {} frames, expected {frame_count}",
                    s.len()
                )));
            }
            if let Some(i) = s.iter().position(|p| !p.is_normalized()) {
                return Err(Error::Data(format!("stream '{id}' frame {i} is not normalized")));
            }
        }
        Ok(AlignedDataset {
            dataset_id: dataset_id.into(),
            fps,
            frame_count,
            model_ids,
            streams,
            basic_labels: None,
            compound_labels: None,
        })
    }

    pub fn with_basic_labels(mut self, labels: Vec<Option<BasicEmotion>>) -> Result<Self> {
        self.check_label_len(labels.len())?;
        self.basic_labels = Some(labels);
        Ok(self)
    }

    pub fn with_compound_labels(mut self, labels: Vec<Option<CompoundExpression>>) -> Result<Self> {
        self.check_label_len(labels.len())?;
        self.compound_labels = Some(labels);
        Ok(self)
    }

    fn check_label_len(&self, len: usize) -> Result<()> {
        if len != self.frame_count {
            return Err(Error::Data(format!(
                "{len} labels for {} frames",
                self.frame_count
            )));
        }
        Ok(())
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    /// The vectors of all models for frame `i`, in `model_ids` order.
    pub fn frame(&self, i: usize) -> Vec<ProbabilityVector> {
        self.streams.iter().map(|s| s[i]).collect()
    }

    /// Model indices reordering this dataset to `ids`. Errors if the sets differ.
    pub fn model_order(&self, ids: &[String]) -> Result<Vec<usize>> {
        if ids.len() != self.model_ids.len() {
            return Err(Error::Data(format!(
                "weights cover models {:?} but dataset has {:?}",
                ids, self.model_ids
            )));
        }
        ids.iter()
            .map(|id| {
                self.model_ids.iter().position(|m| m == id).ok_or_else(|| {
                    Error::Data(format!("model '{id}' not present in dataset {:?}", self.model_ids))
                })
            })
            .collect()
    }
}
