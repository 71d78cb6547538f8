//! Click detection: band-pass, envelope, thresholded peak picking and an
//! even-spacing preference among competing peak selections.
//!
//! Two thresholds act on envelope peaks. An absolute floor, a multiple of
//! the median envelope, rejects background; a relative threshold, a fraction
//! of the loudest peak, rejects quieter interfering sources. Peaks closer
//! than the minimum separation form groups, and among the selections that
//! keep one or more well-separated peaks per group the detector prefers the
//! largest click count, then the most even spacing (highest
//! [`spacing_entropy`]), then the larger total amplitude, then the earlier
//! first click.

use crate::error::{Error, Result};
use crate::signal::{bandpass_filter, moving_max_abs, window_samples, AudioClip};

/// Floor applied on top of the median-relative floor so that digital
/// silence never produces peaks.
const MIN_FLOOR: f64 = 1e-12;
const SCORE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub min_separation_s: f64,
    pub rel_threshold: f64,
    pub abs_floor_factor: f64,
    pub envelope_window_ms: f64,
    pub max_candidates: usize,
    pub per_group_peaks: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 2000.0,
            band_high_hz: 16000.0,
            min_separation_s: 0.040,
            rel_threshold: 0.4,
            abs_floor_factor: 5.0,
            envelope_window_ms: 2.0,
            max_candidates: 256,
            per_group_peaks: 3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("detector.band_low_hz", self.band_low_hz),
            ("detector.band_high_hz", self.band_high_hz),
            ("detector.min_separation_s", self.min_separation_s),
            ("detector.abs_floor_factor", self.abs_floor_factor),
            ("detector.envelope_window_ms", self.envelope_window_ms),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{key} must be positive, got {v}")));
            }
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return Err(Error::config(format!(
                "detector.rel_threshold must lie in (0, 1), got {}",
                self.rel_threshold
            )));
        }
        if self.band_low_hz >= self.band_high_hz {
            return Err(Error::config("detector.band_low_hz must be below detector.band_high_hz"));
        }
        if self.max_candidates == 0 {
            return Err(Error::config("detector.max_candidates must be positive"));
        }
        if self.per_group_peaks == 0 {
            return Err(Error::config("detector.per_group_peaks must be positive"));
        }
        Ok(())
    }

    /// Pass band actually used at `sample_rate`: the configured upper edge
    /// is capped at 95% of Nyquist, so the 16 kHz default stays realisable
    /// at 32 kHz.
    pub fn effective_band(&self, sample_rate: u32) -> (f64, f64) {
        let cap = 0.95 * sample_rate as f64 / 2.0;
        (self.band_low_hz, self.band_high_hz.min(cap))
    }

    /// Band-pass `clip` with this configuration's pass band.
    pub fn bandpass(&self, clip: &AudioClip) -> Result<AudioClip> {
        let (lo, hi) = self.effective_band(clip.sample_rate);
        bandpass_filter(clip, lo, hi)
    }
}

/// Detected clicks of one clip.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClickTrain {
    /// Click times in seconds, strictly increasing.
    pub times: Vec<f64>,
    /// Sample index of each click.
    pub sample_indices: Vec<usize>,
    /// Envelope value at each click.
    pub amplitudes: Vec<f64>,
    /// Loudest envelope peak; 0 for an empty train.
    pub reference_level: f64,
}

impl ClickTrain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Envelope peak: sample index and envelope height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub amplitude: f64,
}

/// Shannon entropy of the normalised inter-click gaps.
///
/// Fewer than two times give 0. Non-increasing times are a data error.
pub fn spacing_entropy(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::data(format!(
            "click times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(gap_entropy(times.windows(2).map(|w| w[1] - w[0])))
}

fn gap_entropy(gaps: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = gaps.clone().sum();
    -gaps
        .map(|g| {
            let p = g / total;
            if p > 0.0 {
                p * p.ln()
            } else {
                0.0
            }
        })
        .sum::<f64>()
}

fn peak_entropy(peaks: &[Peak]) -> f64 {
    if peaks.len() < 2 {
        return 0.0;
    }
    gap_entropy(peaks.windows(2).map(|w| (w[1].index - w[0].index) as f64))
}

/// Detects clicks in a raw clip (band-pass is applied here).
pub fn detect_clicks(clip: &AudioClip, cfg: &DetectorConfig) -> Result<ClickTrain> {
    cfg.validate()?;
    let filtered = cfg.bandpass(clip)?;
    detect_in_filtered(&filtered, cfg)
}

/// Detection on an already band-passed clip.
pub fn detect_in_filtered(filtered: &AudioClip, cfg: &DetectorConfig) -> Result<ClickTrain> {
    filtered.check_processable()?;
    let fs = filtered.sample_rate;
    let env = moving_max_abs(
        &filtered.samples,
        window_samples(cfg.envelope_window_ms, fs),
    );
    let peaks = thresholded_peaks(&env, cfg);
    if peaks.is_empty() {
        return Ok(ClickTrain::default());
    }
    let reference_level = peaks.iter().fold(0.0f64, |m, p| m.max(p.amplitude));
    let min_gap = min_gap_samples(cfg, fs);
    let chosen = resolve_conflicts(&peaks, min_gap, cfg);
    Ok(ClickTrain {
        times: chosen.iter().map(|p| p.index as f64 / fs as f64).collect(),
        sample_indices: chosen.iter().map(|p| p.index).collect(),
        amplitudes: chosen.iter().map(|p| p.amplitude).collect(),
        reference_level,
    })
}

pub(crate) fn min_gap_samples(cfg: &DetectorConfig, sample_rate: u32) -> usize {
    (cfg.min_separation_s * sample_rate as f64).ceil() as usize
}

/// Envelope local maxima above the absolute floor and the relative
/// threshold. Plateaus count once, at their centre.
pub fn thresholded_peaks(env: &[f64], cfg: &DetectorConfig) -> Vec<Peak> {
    if env.is_empty() {
        return Vec::new();
    }
    let floor = (cfg.abs_floor_factor * median(env)).max(MIN_FLOOR);
    let mut peaks = Vec::new();
    let n = env.len();
    let mut s = 0;
    while s < n {
        let v = env[s];
        let mut e = s;
        while e + 1 < n && env[e + 1] == v {
            e += 1;
        }
        let left_lower = s == 0 || env[s - 1] < v;
        let right_lower = e + 1 == n || env[e + 1] < v;
        if left_lower && right_lower && v > floor {
            peaks.push(Peak {
                index: (s + e) / 2,
                amplitude: v,
            });
        }
        s = e + 1;
    }
    let reference = peaks.iter().fold(0.0f64, |m, p| m.max(p.amplitude));
    let cut = cfg.rel_threshold * reference;
    peaks.retain(|p| p.amplitude >= cut);
    peaks
}

fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Splits time-ordered peaks into groups linked by gaps below `min_gap`.
pub fn group_peaks(peaks: &[Peak], min_gap: usize) -> Vec<Vec<Peak>> {
    let mut groups: Vec<Vec<Peak>> = Vec::new();
    for &p in peaks {
        match groups.last_mut() {
            Some(g) if p.index - g.last().unwrap().index < min_gap => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    groups
}

/// Largest well-separated subsets of a group's strongest peaks.
fn group_alternatives(group: &[Peak], min_gap: usize, keep: usize) -> Vec<Vec<Peak>> {
    let mut top = group.to_vec();
    top.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.index.cmp(&b.index)));
    top.truncate(keep);
    top.sort_by_key(|p| p.index);

    let k = top.len();
    let mut best_size = 0;
    let mut out: Vec<Vec<Peak>> = Vec::new();
    for mask in 1u32..(1u32 << k) {
        let subset: Vec<Peak> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| top[i]).collect();
        if subset.windows(2).any(|w| w[1].index - w[0].index < min_gap) {
            continue;
        }
        if subset.len() > best_size {
            best_size = subset.len();
            out.clear();
        }
        if subset.len() == best_size {
            out.push(subset);
        }
    }
    out
}

/// All candidate selections, one alternative per group, or `None` when the
/// count would exceed `max_candidates`.
pub fn enumerate_candidates(
    peaks: &[Peak],
    min_gap: usize,
    cfg: &DetectorConfig,
) -> Option<Vec<Vec<Peak>>> {
    let groups = group_peaks(peaks, min_gap);
    let alternatives: Vec<Vec<Vec<Peak>>> = groups
        .iter()
        .map(|g| group_alternatives(g, min_gap, cfg.per_group_peaks))
        .collect();
    let mut total: usize = 1;
    for a in &alternatives {
        total = total.checked_mul(a.len())?;
        if total > cfg.max_candidates {
            return None;
        }
    }
    let mut candidates: Vec<Vec<Peak>> = vec![Vec::new()];
    for alts in &alternatives {
        let mut next = Vec::with_capacity(candidates.len() * alts.len());
        for c in &candidates {
            for a in alts {
                let mut merged = c.clone();
                merged.extend_from_slice(a);
                next.push(merged);
            }
        }
        candidates = next;
    }
    Some(candidates)
}

fn better(a: &[Peak], b: &[Peak]) -> bool {
    if a.len() != b.len() {
        return a.len() > b.len();
    }
    let (ea, eb) = (peak_entropy(a), peak_entropy(b));
    if (ea - eb).abs() > SCORE_TOL {
        return ea > eb;
    }
    let amp = |c: &[Peak]| c.iter().map(|p| p.amplitude).sum::<f64>();
    let (aa, ab) = (amp(a), amp(b));
    if (aa - ab).abs() > SCORE_TOL * aa.abs().max(ab.abs()).max(1.0) {
        return aa > ab;
    }
    a.first().map(|p| p.index) < b.first().map(|p| p.index)
}

fn greedy_by_amplitude(peaks: &[Peak], min_gap: usize) -> Vec<Peak> {
    let mut order = peaks.to_vec();
    order.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.index.cmp(&b.index)));
    let mut chosen: Vec<Peak> = Vec::new();
    for p in order {
        if chosen.iter().all(|c| c.index.abs_diff(p.index) >= min_gap) {
            chosen.push(p);
        }
    }
    chosen.sort_by_key(|p| p.index);
    chosen
}

/// Picks the final click set from thresholded peaks.
pub fn resolve_conflicts(peaks: &[Peak], min_gap: usize, cfg: &DetectorConfig) -> Vec<Peak> {
    match enumerate_candidates(peaks, min_gap, cfg) {
        Some(candidates) => {
            let mut best: Option<Vec<Peak>> = None;
            for c in candidates {
                if best.as_ref().is_none_or(|b| better(&c, b)) {
                    best = Some(c);
                }
            }
            best.unwrap_or_default()
        }
        None => greedy_by_amplitude(peaks, min_gap),
    }
}
