use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::AudioClip;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static WINDOWS: RefCell<HashMap<usize, Rc<[f64]>>> = RefCell::new(HashMap::new());
}

/// One-sided power spectrum on a uniform grid from 0 Hz to Nyquist.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bin_freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Spacing between adjacent bins in Hz.
    pub fn bin_width(&self) -> f64 {
        if self.bin_freqs.len() < 2 {
            0.0
        } else {
            self.bin_freqs[1] - self.bin_freqs[0]
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = i;
            }
        }
        best
    }

    /// Copy scaled to unit total power; `None` when the spectrum is silent.
    pub fn normalized(&self) -> Option<Spectrum> {
        let total = self.total_power();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        Some(Spectrum {
            bin_freqs: self.bin_freqs.clone(),
            power: self.power.iter().map(|p| p / total).collect(),
        })
    }

    /// Sums power into `bands` equal-width bands over `[0, top_hz]`, labelled
    /// by band centre. Bins at or above `top_hz` fall into the last band.
    pub fn rebinned(&self, bands: usize, top_hz: f64) -> Spectrum {
        let width = top_hz / bands as f64;
        let mut power = vec![0.0; bands];
        for (f, p) in self.bin_freqs.iter().zip(&self.power) {
            let j = ((f / width).floor().max(0.0) as usize).min(bands - 1);
            power[j] += p;
        }
        Spectrum {
            bin_freqs: (0..bands).map(|j| (j as f64 + 0.5) * width).collect(),
            power,
        }
    }
}

/// Power-weighted mean frequency; `None` for zero total power.
pub fn weighted_mean_frequency(spec: &Spectrum) -> Option<f64> {
    let (num, den) = spec
        .bin_freqs
        .iter()
        .zip(&spec.power)
        .fold((0.0, 0.0), |(n, d), (f, p)| (n + f * p, d + p));
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Periodic Hamming window, cached per thread.
fn hamming(n: usize) -> Rc<[f64]> {
    WINDOWS.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                (0..n)
                    .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / n as f64).cos())
                    .collect()
            })
            .clone()
    })
}

fn windowed_power(samples: &[f64], window: &[f64], sample_rate: u32) -> Spectrum {
    let n = samples.len();
    let nfft = n.next_power_of_two();
    let mut buf: Vec<Complex64> = samples
        .iter()
        .zip(window)
        .map(|(s, w)| Complex64::new(s * w, 0.0))
        .collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(nfft).process(&mut buf));

    let fs = sample_rate as f64;
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs * wss);
    let half = nfft / 2;
    let power = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || k == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let bin_freqs = (0..=half).map(|k| k as f64 * fs / nfft as f64).collect();
    Spectrum { bin_freqs, power }
}

/// Hamming-windowed periodogram of the whole clip, zero-padded to the next
/// power of two, density-scaled and one-sided.
pub fn periodogram(clip: &AudioClip) -> Result<Spectrum> {
    if clip.len() < 2 {
        return Err(Error::data("periodogram needs at least two samples"));
    }
    clip.check_processable()?;
    Ok(windowed_power(&clip.samples, &hamming(clip.len()), clip.sample_rate))
}

/// Hamming-windowed short-time periodograms; frame `k` starts at `k * hop`.
pub fn spectrogram(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Vec<Spectrum>> {
    if hop == 0 || frame_len < 2 || hop > frame_len {
        return Err(Error::config(format!(
            "spectrogram needs 0 < hop <= frame_len, got frame_len={frame_len} hop={hop}"
        )));
    }
    if frame_len > clip.len() {
        return Err(Error::data(format!(
            "frame length {frame_len} exceeds clip length {}",
            clip.len()
        )));
    }
    clip.check_processable()?;
    let window = hamming(frame_len);
    let frames = (clip.len() - frame_len) / hop + 1;
    Ok((0..frames)
        .map(|k| {
            let start = k * hop;
            windowed_power(&clip.samples[start..start + frame_len], &window, clip.sample_rate)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: u32 = 32000;

    fn tone(freq: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / FS as f64).sin())
            .collect()
    }

    #[test]
    fn bin_grid_shape() {
        let clip = AudioClip::new(tone(1000.0, 1000), FS).unwrap();
        let s = periodogram(&clip).unwrap();
        assert_eq!(s.len(), 1024 / 2 + 1);
        assert_eq!(s.bin_freqs[0], 0.0);
        assert_eq!(*s.bin_freqs.last().unwrap(), 16000.0);
        assert!(s.bin_freqs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rebinning_keeps_mass_and_peak() {
        let clip = AudioClip::new(tone(6000.0, 4096), FS).unwrap();
        let s = periodogram(&clip).unwrap().normalized().unwrap();
        let r = s.rebinned(256, 16000.0);
        assert_eq!(r.len(), 256);
        assert!((r.total_power() - 1.0).abs() < 1e-12);
        assert_eq!(r.bin_freqs[r.argmax()], 6000.0 + 31.25);
        assert_eq!(r.bin_width(), 62.5);
    }

    #[test]
    fn zero_clip_zero_power() {
        let s = periodogram(&AudioClip::silence(512, FS)).unwrap();
        assert!(s.power.iter().all(|&p| p == 0.0));
        assert!(s.normalized().is_none());
        assert!(weighted_mean_frequency(&s).is_none());
    }

    #[test]
    fn too_short_is_error() {
        assert!(periodogram(&AudioClip::silence(1, FS)).is_err());
        assert!(periodogram(&AudioClip::silence(0, FS)).is_err());
    }

    #[test]
    fn sine_peak_location() {
        let clip = AudioClip::new(tone(5000.0, 4000), FS).unwrap();
        let s = periodogram(&clip).unwrap();
        let peak = s.bin_freqs[s.argmax()];
        assert!((peak - 5000.0).abs() <= s.bin_width(), "{peak}");
    }

    #[test]
    fn parseval_consistency() {
        // One-sided density sum times fs * sum(w^2) / nfft equals the
        // windowed-signal energy.
        let x: Vec<f64> = (0..3000)
            .map(|i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5)
            .collect();
        let clip = AudioClip::new(x.clone(), FS).unwrap();
        let s = periodogram(&clip).unwrap();
        let w = hamming(x.len());
        let energy: f64 = x.iter().zip(w.iter()).map(|(a, b)| (a * b).powi(2)).sum();
        let wss: f64 = w.iter().map(|v| v * v).sum();
        let nfft = x.len().next_power_of_two() as f64;
        let from_spec = s.total_power() * FS as f64 * wss / nfft;
        assert!((from_spec - energy).abs() <= 1e-6 * energy);
    }

    #[test]
    fn spectrogram_frame_count() {
        let clip = AudioClip::silence(65536, FS);
        assert_eq!(spectrogram(&clip, 512, 256).unwrap().len(), 255);
        assert!(matches!(spectrogram(&AudioClip::silence(100, FS), 512, 256), Err(Error::Data(_))));
        assert!(spectrogram(&clip, 512, 0).is_err());
    }

    #[test]
    fn stationary_tone_constant_argmax() {
        let clip = AudioClip::new(tone(6000.0, 8192), FS).unwrap();
        let frames = spectrogram(&clip, 512, 256).unwrap();
        let first = frames[0].argmax();
        assert!(frames.iter().all(|f| f.argmax() == first));
    }

    #[test]
    fn two_tones_single_transition() {
        let mut x = tone(4000.0, 8192);
        x.extend(tone(10000.0, 8192));
        let clip = AudioClip::new(x, FS).unwrap();
        let frames = spectrogram(&clip, 512, 256).unwrap();
        let peaks: Vec<f64> = frames.iter().map(|f| f.bin_freqs[f.argmax()]).collect();
        // frame oracle: frames entirely before the boundary see 4 kHz, after see 10 kHz
        for (k, p) in peaks.iter().enumerate() {
            let start = k * 256;
            if start + 512 <= 8192 {
                assert!((p - 4000.0).abs() < 100.0);
            } else if start >= 8192 {
                assert!((p - 10000.0).abs() < 100.0);
            }
        }
        let transitions = peaks.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(transitions, 1);
    }
}
