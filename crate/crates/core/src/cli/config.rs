use std::path::{Path, PathBuf};

use crate::causal::NaConvention;
use crate::corpus::Manifest;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::surrogate::SurrogateConfig;

/// Estimator settings of the `estimate` step.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    /// Baseline dose of click-count and interval observables.
    pub baseline_clicks: f64,
    /// Baseline dose of spectral observables and spectral distances.
    pub baseline_spectral: f64,
    /// Lower dose bound of the restricted effect estimate.
    pub theta_dose_min: f64,
    pub na_convention: NaConvention,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            baseline_clicks: -1.0,
            baseline_spectral: 1.0,
            theta_dose_min: 1.0,
            na_convention: NaConvention::Zero,
        }
    }
}

/// Everything one experiment run needs, read from a flat key=value file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: Manifest,
    pub output_dir: Option<PathBuf>,
    pub estimate: EstimateConfig,
    pub surrogate: SurrogateConfig,
}

const OTHER_KEYS: [&str; 2] = ["output_dir", "profile"];

impl ExperimentConfig {
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| {
            !Manifest::is_manifest_key(k)
                && !OTHER_KEYS.contains(k)
                && !k.starts_with("estimate.")
                && !k.starts_with("surrogate.")
        }) {
            return Err(Error::config(format!("unknown key {k}")));
        }
        let mut kv = kv.clone();
        match kv.get("profile").unwrap_or("default") {
            "default" => {}
            "test" => {
                if !kv.contains("n_units") {
                    kv.insert("n_units", 250);
                }
            }
            other => {
                return Err(Error::config(format!(
                    "invalid value for profile: {other:?} (expected default or test)"
                )))
            }
        }
        let manifest = Manifest::from_kv(&kv)?;

        let d = EstimateConfig::default();
        let na = match kv.get("estimate.na_convention") {
            None => d.na_convention,
            Some(v) => NaConvention::parse(v).ok_or_else(|| {
                Error::config(format!("invalid value for estimate.na_convention: {v:?}"))
            })?,
        };
        let estimate = EstimateConfig {
            baseline_clicks: kv.parse_or("estimate.baseline_clicks", d.baseline_clicks)?,
            baseline_spectral: kv.parse_or("estimate.baseline_spectral", d.baseline_spectral)?,
            theta_dose_min: kv.parse_or("estimate.theta_dose_min", d.theta_dose_min)?,
            na_convention: na,
        };
        for (key, v) in [
            ("estimate.baseline_clicks", estimate.baseline_clicks),
            ("estimate.baseline_spectral", estimate.baseline_spectral),
        ] {
            if !manifest.dose_grid.iter().any(|g| (g - v).abs() <= 1e-9) {
                return Err(Error::config(format!("{key}={v} is not on dose_grid")));
            }
        }

        let s = SurrogateConfig::default();
        let grid = match kv.get("surrogate.max_leaves_grid") {
            None => s.max_leaves_grid.clone(),
            Some(v) => v
                .split(',')
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| {
                        Error::config(format!("invalid value in surrogate.max_leaves_grid: {p:?}"))
                    })
                })
                .collect::<Result<_>>()?,
        };
        let surrogate = SurrogateConfig {
            max_leaves_grid: grid,
            n_trees_max: kv.parse_or("surrogate.n_trees_max", s.n_trees_max)?,
            learning_rate: kv.parse_or("surrogate.learning_rate", s.learning_rate)?,
            patience: kv.parse_or("surrogate.patience", s.patience)?,
            validation_fraction: kv.parse_or("surrogate.validation_fraction", s.validation_fraction)?,
            permutation_repeats: kv.parse_or("surrogate.permutation_repeats", s.permutation_repeats)?,
            min_samples_leaf: kv.parse_or("surrogate.min_samples_leaf", s.min_samples_leaf)?,
            min_rows: kv.parse_or("surrogate.min_rows", s.min_rows)?,
            mse_tolerance: kv.parse_or("surrogate.mse_tolerance", s.mse_tolerance)?,
            stratify: kv.parse_or("surrogate.stratify", s.stratify)?,
            seed: kv.parse_or("surrogate.seed", s.seed)?,
        };
        surrogate.validate()?;

        Ok(Self {
            manifest,
            output_dir: kv.get("output_dir").map(PathBuf::from),
            estimate,
            surrogate,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_kv(&KvMap::parse(&text)?)
    }
}
