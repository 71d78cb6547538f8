//! DSP primitives: Butterworth band-pass filtering, envelope extraction and
//! Hamming-windowed periodograms / spectrograms.
//!
//! Everything here is a pure function of its inputs and safe to call from
//! many threads at once on distinct clips.

mod filter;
mod spectrum;

pub use filter::{bandpass_filter, Biquad, SosFilter};
pub use spectrum::{periodogram, spectrogram, weighted_mean_frequency, Spectrum};

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Mono audio buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting a zero sample rate and non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::config("sample_rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::data(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// All-zero clip of `len` samples.
    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    /// Copy of this clip with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn check_processable(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::data("empty clip"));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample_rate must be positive"));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::data(format!("non-finite sample at index {i}")));
        }
        Ok(())
    }
}

/// Width in samples of a `window_ms` window at `sample_rate` (at least one).
pub fn window_samples(window_ms: f64, sample_rate: u32) -> usize {
    ((window_ms * sample_rate as f64 / 1000.0).round() as usize).max(1)
}

/// Moving maximum of `|samples|` over a centred window of `window_ms`.
///
/// For a window of `w` samples, output `i` covers
/// `[i - (w-1)/2, i + w/2]` clipped to the clip, so a unit impulse lights up
/// exactly `w` output samples.
pub fn envelope(clip: &AudioClip, window_ms: f64) -> Result<Vec<f64>> {
    if !(window_ms > 0.0) || !window_ms.is_finite() {
        return Err(Error::config(format!(
            "envelope window must be positive, got {window_ms} ms"
        )));
    }
    clip.check_processable()?;
    let w = window_samples(window_ms, clip.sample_rate);
    Ok(moving_max_abs(&clip.samples, w))
}

pub(crate) fn moving_max_abs(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    let mut out = Vec::with_capacity(n);
    // Indices with strictly decreasing |x|; front is the current maximum.
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for i in 0..n {
        let hi = (i + right).min(n - 1);
        while next <= hi {
            let v = x[next].abs();
            while let Some(&back) = dq.back() {
                if x[back].abs() <= v {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(left);
        while let Some(&front) = dq.front() {
            if front < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(x[*dq.front().expect("window is never empty")].abs());
    }
    out
}
