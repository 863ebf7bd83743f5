//! Put a windowed stream and a faster per-frame stream on one frame grid.
//!
//! cargo run --example temporal_alignment

use cefusion::temporal::{
    align_stream, expand_windows, frames_in_window, majority_label, window_grid, RawStream, Window,
};
use cefusion::{BasicEmotion, ProbabilityVector, StreamSpec};

fn main() -> cefusion::Result<()> {
    let fps = 5.0;
    println!("a 2 s window at {fps} FPS spans {} frames", frames_in_window(2.0, fps));

    // 4 s windows every 2 s over a 10 s clip.
    let grid = window_grid(10.0, 4.0, 2.0);
    println!("windows: {grid:?}");
    let emotions = [BasicEmotion::Anger, BasicEmotion::Sadness, BasicEmotion::Fear, BasicEmotion::Surprise];
    let windows: Vec<Window> = grid
        .iter()
        .zip(emotions.iter().cycle())
        .map(|(&(start_s, end_s), &e)| Window { start_s, end_s, probs: ProbabilityVector::one_hot(e) })
        .collect();
    let frames = expand_windows(&windows, 50, fps)?;
    for i in [0, 9, 10, 19, 20] {
        println!("frame {i:>2} (t = {:.1} s): {:?}", i as f64 / fps, frames[i].values());
    }

    // A 10 FPS per-frame stream lands on every second row.
    let rows: Vec<ProbabilityVector> =
        (0..100).map(|i| ProbabilityVector::one_hot(BasicEmotion::ALL[i % 7])).collect();
    let aligned = align_stream(&RawStream::PerFrame(rows), &StreamSpec::per_frame(10.0), 50, fps)?;
    println!("first aligned argmaxes: {:?}", aligned.iter().take(5).map(|p| p.argmax()).collect::<Vec<_>>());

    let labels = [BasicEmotion::Fear, BasicEmotion::Anger, BasicEmotion::Fear, BasicEmotion::Anger];
    println!("majority of {labels:?}: {}", majority_label(&labels)?);
    Ok(())
}
