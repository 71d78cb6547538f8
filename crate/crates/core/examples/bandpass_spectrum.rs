//! Band-passes a two-tone clip and prints where the power lands.
//!
//! cargo run --release --example bandpass_spectrum

use cdev::signal::{bandpass_filter, periodogram, spectrogram, weighted_mean_frequency, AudioClip};

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> cdev::Result<()> {
    let fs = 32000;
    let tone = |hz: f64, amp: f64| -> Vec<f64> {
        (0..fs as usize)
            .map(|i| amp * (2.0 * std::f64::consts::PI * hz * i as f64 / fs as f64).sin())
            .collect()
    };
    // 100 Hz hum under an 8 kHz tone
    let mix: Vec<f64> = tone(100.0, 0.5).iter().zip(tone(8000.0, 0.2)).map(|(a, b)| a + b).collect();
    let clip = AudioClip::new(mix, fs)?;
    let filtered = bandpass_filter(&clip, 2000.0, 15200.0)?;
    println!("rms before {:.4}, after {:.4} (8 kHz tone alone: {:.4})", rms(&clip.samples), rms(&filtered.samples), 0.2 / 2f64.sqrt());

    for (name, c) in [("raw", &clip), ("filtered", &filtered)] {
        let p = periodogram(c)?;
        println!(
            "{name:>8}: {} bins of {:.2} Hz, peak at {:.1} Hz, weighted mean {:.1} Hz",
            p.len(),
            p.bin_width(),
            p.bin_freqs[p.argmax()],
            weighted_mean_frequency(&p).unwrap_or(f64::NAN)
        );
    }

    let frames = spectrogram(&filtered, 512, 256)?;
    println!("spectrogram: {} frames, first frame peak {:.1} Hz", frames.len(), frames[0].bin_freqs[frames[0].argmax()]);
    Ok(())
}
