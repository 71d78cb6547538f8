//! Renders a coda with a quiet interfering click and a doubled "jagged"
//! click, then runs the detector on it.
//!
//! cargo run --release --example detect_clicks

use cdev::detector::{detect_clicks, spacing_entropy, DetectorConfig};
use cdev::observables::ici_stats;
use cdev::signal::AudioClip;
use cdev::synthgen::{add_click, render_coda};

fn main() -> cdev::Result<()> {
    let fs = 32000;
    let onsets = [0.20, 0.40, 0.60, 0.80, 1.00];
    let carriers = [7000.0, 7400.0, 6800.0, 7200.0, 7000.0];
    let amps = [0.8, 0.7, 0.75, 0.8, 0.7];
    let clip = render_coda(fs, 65536, &onsets, &carriers, &amps, &[], 0.003, 0.005, 7);

    let mut samples = clip.samples.clone();
    // another animal far away, 0.3 of the loudest click
    add_click(&mut samples, fs, 1.30, 9000.0, 0.24, 0.003, 0.0);
    // a second peak 10 ms after the third click
    add_click(&mut samples, fs, 0.61, 6800.0, 0.6, 0.003, 1.0);
    let clip = AudioClip::new(samples, fs)?;

    let cfg = DetectorConfig::default();
    let train = detect_clicks(&clip, &cfg)?;
    println!("planted onsets: {onsets:?}");
    println!("detected {} clicks, reference level {:.3}", train.len(), train.reference_level);
    for (t, a) in train.times.iter().zip(&train.amplitudes) {
        println!("  t = {t:.4} s  envelope {a:.3}");
    }
    if let Some((mean, std)) = ici_stats(&train) {
        println!("mean ICI {mean:.4} s, ICI std {std:.5} s, spacing entropy {:.4}", spacing_entropy(&train.times)?);
    }
    Ok(())
}
