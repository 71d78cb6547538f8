//! Outcome variables measured from one clip: click count, inter-click
//! interval statistics, click-level and coda-level spectral statistics.

use crate::detector::{detect_in_filtered, ClickTrain, DetectorConfig};
use crate::error::{Error, Result};
use crate::signal::{periodogram, weighted_mean_frequency, AudioClip, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableConfig {
    /// Samples per click window for click-level spectra.
    pub click_window_samples: usize,
    /// Bands of the stored coda spectrum over `[0, Nyquist]`; 0 keeps the
    /// full periodogram resolution.
    pub spectrum_bands: usize,
}

impl Default for ObservableConfig {
    fn default() -> Self {
        Self {
            click_window_samples: 512,
            spectrum_bands: 256,
        }
    }
}

impl ObservableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spectrum_bands == 1 {
            return Err(Error::config("observables.spectrum_bands must be 0 or at least 2"));
        }
        if self.click_window_samples < 2 {
            return Err(Error::config(
                "observables.click_window_samples must be at least 2",
            ));
        }
        Ok(())
    }
}

/// Names of the scalar observables, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    NClicks,
    MeanIci,
    StdIci,
    SpectralMean,
    SpectralMeanStd,
    CodaSpectralMean,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::NClicks,
        Observable::MeanIci,
        Observable::StdIci,
        Observable::SpectralMean,
        Observable::SpectralMeanStd,
        Observable::CodaSpectralMean,
    ];

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            Observable::NClicks => "n_clicks",
            Observable::MeanIci => "mean_ici",
            Observable::StdIci => "std_ici",
            Observable::SpectralMean => "spectral_mean_hz",
            Observable::SpectralMeanStd => "spectral_mean_std_hz",
            Observable::CodaSpectralMean => "coda_spectral_mean_hz",
        }
    }

    pub fn from_column(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.column() == name)
    }

    /// Click-timing observables use the lower training-range edge as
    /// baseline, spectral ones the upper edge.
    pub fn is_spectral(self) -> bool {
        matches!(
            self,
            Observable::SpectralMean | Observable::SpectralMeanStd | Observable::CodaSpectralMean
        )
    }
}

/// Measurements for one (unit, bit, dose) clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub unit_id: u32,
    pub bit: u32,
    pub dose: f64,
    pub n_clicks: u32,
    pub mean_ici: Option<f64>,
    pub std_ici: Option<f64>,
    pub spectral_mean_hz: Option<f64>,
    pub spectral_mean_std_hz: Option<f64>,
    pub coda_spectral_mean_hz: Option<f64>,
    /// Full-clip spectrum normalised to unit mass.
    pub coda_spectrum: Option<Spectrum>,
}

impl ObservableRecord {
    pub fn value(&self, obs: Observable) -> Option<f64> {
        match obs {
            Observable::NClicks => Some(self.n_clicks as f64),
            Observable::MeanIci => self.mean_ici,
            Observable::StdIci => self.std_ici,
            Observable::SpectralMean => self.spectral_mean_hz,
            Observable::SpectralMeanStd => self.spectral_mean_std_hz,
            Observable::CodaSpectralMean => self.coda_spectral_mean_hz,
        }
    }
}

/// Mean and population standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean inter-click interval and population std of the intervals;
/// `None` below two clicks.
pub fn ici_stats(train: &ClickTrain) -> Option<(f64, f64)> {
    if train.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = train.times.windows(2).map(|w| w[1] - w[0]).collect();
    Some(mean_std(&gaps))
}

/// Per-click power-weighted mean frequencies of `click_window_samples`
/// windows centred on each click (shifted inside the clip at the edges).
/// Silent windows are skipped.
pub fn per_click_means(
    filtered: &AudioClip,
    train: &ClickTrain,
    cfg: &ObservableConfig,
) -> Result<Vec<f64>> {
    let n = filtered.len();
    let w = cfg.click_window_samples.min(n);
    let mut means = Vec::with_capacity(train.len());
    for &idx in &train.sample_indices {
        let start = idx.saturating_sub(w / 2).min(n - w);
        let window = AudioClip {
            samples: filtered.samples[start..start + w].to_vec(),
            sample_rate: filtered.sample_rate,
        };
        if let Some(m) = weighted_mean_frequency(&periodogram(&window)?) {
            means.push(m);
        }
    }
    Ok(means)
}

/// Average of the per-click spectral means and their population std.
/// `filtered` must already be band-passed.
pub fn click_spectral_stats(
    filtered: &AudioClip,
    train: &ClickTrain,
    cfg: &ObservableConfig,
) -> Result<(Option<f64>, Option<f64>)> {
    if train.is_empty() {
        return Ok((None, None));
    }
    let means = per_click_means(filtered, train, cfg)?;
    Ok(match means.len() {
        0 => (None, None),
        1 => (Some(means[0]), None),
        _ => {
            let (m, s) = mean_std(&means);
            (Some(m), Some(s))
        }
    })
}

/// Full-clip weighted mean frequency and unit-mass spectrum, rebinned to
/// `cfg.spectrum_bands` bands. The mean uses full resolution.
/// `filtered` must already be band-passed.
pub fn coda_spectral_stats(
    filtered: &AudioClip,
    cfg: &ObservableConfig,
) -> Result<(Option<f64>, Option<Spectrum>)> {
    let spec = periodogram(filtered)?;
    let Some(norm) = spec.normalized() else {
        return Ok((None, None));
    };
    let mean = weighted_mean_frequency(&norm);
    let stored = match cfg.spectrum_bands {
        0 => norm,
        bands => norm.rebinned(bands, filtered.nyquist()),
    };
    Ok((mean, Some(stored)))
}

/// Runs detection and every observable on one clip.
pub fn measure(
    clip: &AudioClip,
    unit_id: u32,
    bit: u32,
    dose: f64,
    detector: &DetectorConfig,
    cfg: &ObservableConfig,
) -> Result<ObservableRecord> {
    let filtered = detector.bandpass(clip)?;
    let train = detect_in_filtered(&filtered, detector)?;
    let ici = ici_stats(&train);
    let (spectral_mean_hz, spectral_mean_std_hz) = click_spectral_stats(&filtered, &train, cfg)?;
    let (coda_spectral_mean_hz, coda_spectrum) = coda_spectral_stats(&filtered, cfg)?;
    Ok(ObservableRecord {
        unit_id,
        bit,
        dose,
        n_clicks: train.len() as u32,
        mean_ici: ici.map(|v| v.0),
        std_ici: ici.map(|v| v.1),
        spectral_mean_hz,
        spectral_mean_std_hz,
        coda_spectral_mean_hz,
        coda_spectrum,
    })
}

/// Click detection only; the spectral fields are left absent.
pub fn measure_clicks(
    clip: &AudioClip,
    unit_id: u32,
    bit: u32,
    dose: f64,
    detector: &DetectorConfig,
) -> Result<ObservableRecord> {
    let filtered = detector.bandpass(clip)?;
    let train = detect_in_filtered(&filtered, detector)?;
    let ici = ici_stats(&train);
    Ok(ObservableRecord {
        unit_id,
        bit,
        dose,
        n_clicks: train.len() as u32,
        mean_ici: ici.map(|v| v.0),
        std_ici: ici.map(|v| v.1),
        spectral_mean_hz: None,
        spectral_mean_std_hz: None,
        coda_spectral_mean_hz: None,
        coda_spectrum: None,
    })
}
