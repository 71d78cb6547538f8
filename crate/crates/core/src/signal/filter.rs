use std::f64::consts::PI;

use num_complex::Complex64;

use super::AudioClip;
use crate::error::{Error, Result};

/// Prototype order of the band-pass design. The resulting band-pass has
/// twice this many poles and is run forward and backward.
pub const BUTTERWORTH_ORDER: usize = 4;

/// State magnitudes below this are flushed to zero. Silent stretches would
/// otherwise decay into subnormals, which are very slow on common CPUs.
const FLUSH: f64 = 1e-300;

/// Second-order section in direct form II transposed, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z1 * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn run(&self, x: &mut [f64], u0: f64) -> f64 {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        // Steady state for a constant input `u0`.
        let dc = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let y0 = dc * u0;
        let mut z2 = b2 * u0 - a2 * y0;
        let mut z1 = b1 * u0 - a1 * y0 + z2;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z1;
            z1 = b1 * input - a1 * y + z2;
            z2 = b2 * input - a2 * y;
            if z1.abs() < FLUSH && z2.abs() < FLUSH {
                z1 = 0.0;
                z2 = 0.0;
            }
            *v = y;
        }
        y0
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Digital Butterworth band-pass of prototype order `order` (must be
    /// even), designed through the analog prototype, low-pass to band-pass
    /// transform and bilinear mapping with pre-warped edges.
    pub fn butterworth_bandpass(
        order: usize,
        low_hz: f64,
        high_hz: f64,
        sample_rate: u32,
    ) -> Result<Self> {
        let fs = sample_rate as f64;
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
            return Err(Error::config(format!(
                "invalid band [{low_hz}, {high_hz}] Hz for sample rate {sample_rate}"
            )));
        }
        if order == 0 || !order.is_multiple_of(2) {
            return Err(Error::config("Butterworth order must be even and positive"));
        }
        let fs2 = 2.0 * fs;
        let wl = fs2 * (PI * low_hz / fs).tan();
        let wh = fs2 * (PI * high_hz / fs).tan();
        let bw = wh - wl;
        let w0 = (wl * wh).sqrt();

        let mut sections = Vec::with_capacity(order);
        // Upper-half-plane prototype poles; conjugates are implied.
        for k in 0..order / 2 {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let p_lp = p * (bw / 2.0);
            let disc = (p_lp * p_lp - w0 * w0).sqrt();
            for p_bp in [p_lp + disc, p_lp - disc] {
                let zd = (fs2 + p_bp) / (fs2 - p_bp);
                // Each analog pole maps to one digital pole; its conjugate
                // comes from the conjugate prototype pole.
                let pole = if zd.im >= 0.0 { zd } else { zd.conj() };
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -2.0 * pole.re, pole.norm_sqr()],
                });
            }
        }
        // Unit gain at the digital image of the geometric centre frequency.
        let omega0 = 2.0 * (w0 / fs2).atan();
        for s in &mut sections {
            let g = s.response(omega0).norm();
            for c in &mut s.b {
                *c /= g;
            }
        }
        Ok(Self { sections })
    }

    /// Complex response at normalised angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    /// Transfer-function degree (number of poles).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Single causal pass, state initialised to the steady state of `x[0]`.
    pub fn filter_in_place(&self, x: &mut [f64]) {
        if x.is_empty() {
            return;
        }
        let mut u0 = x[0];
        for s in &self.sections {
            u0 = s.run(x, u0);
        }
    }

    /// Zero-phase forward-backward filtering with odd reflection padding of
    /// three times the filter order on each side.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * self.order()).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let first = x[0];
        let last = x[n - 1];
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        self.filter_in_place(&mut ext);
        ext.reverse();
        self.filter_in_place(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase Butterworth band-pass of a clip; length and rate unchanged.
pub fn bandpass_filter(clip: &AudioClip, low_hz: f64, high_hz: f64) -> Result<AudioClip> {
    let filter =
        SosFilter::butterworth_bandpass(BUTTERWORTH_ORDER, low_hz, high_hz, clip.sample_rate)?;
    clip.check_processable()?;
    Ok(AudioClip {
        samples: filter.filtfilt(&clip.samples),
        sample_rate: clip.sample_rate,
    })
}
