use std::path::Path;

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::kv::{join_f64, KvMap};
use crate::observables::ObservableConfig;
use crate::synthgen::SynthConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Top-level manifest keys, in file order.
pub const MANIFEST_KEYS: [&str; 9] = [
    "schema_version",
    "sample_rate",
    "clip_len",
    "n_units",
    "n_bits",
    "covariate_dim",
    "covariate_seed",
    "dose_grid",
    "generator",
];

/// Namespaces carried alongside the top-level keys.
pub const MANIFEST_NAMESPACES: [&str; 3] = ["detector.", "observables.", "planted."];

/// `-1.0, -0.5, ..., 12.5`.
pub fn default_dose_grid() -> Vec<f64> {
    (0..28).map(|k| -1.0 + 0.5 * k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Builtin,
    External,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Builtin => "builtin",
            GeneratorKind::External => "external",
        }
    }
}

/// Everything needed to regenerate or re-measure a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub schema_version: u32,
    pub sample_rate: u32,
    pub clip_len: usize,
    pub n_units: usize,
    pub n_bits: usize,
    pub covariate_dim: usize,
    pub covariate_seed: u64,
    pub dose_grid: Vec<f64>,
    pub generator: GeneratorKind,
    pub detector: DetectorConfig,
    pub observables: ObservableConfig,
    /// Generator constants; builtin corpora only.
    pub synth: Option<SynthConfig>,
}

macro_rules! detector_fields {
    ($m:ident) => {
        $m!(band_low_hz, f64);
        $m!(band_high_hz, f64);
        $m!(min_separation_s, f64);
        $m!(rel_threshold, f64);
        $m!(abs_floor_factor, f64);
        $m!(envelope_window_ms, f64);
        $m!(max_candidates, usize);
        $m!(per_group_peaks, usize);
    };
}

macro_rules! observable_fields {
    ($m:ident) => {
        $m!(click_window_samples, usize);
        $m!(spectrum_bands, usize);
    };
}

impl Manifest {
    /// Builtin-generator manifest over the default dose grid.
    pub fn builtin(n_units: usize, covariate_seed: u64, synth: SynthConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            sample_rate: synth.sample_rate,
            clip_len: synth.clip_len,
            n_units,
            n_bits: synth.n_bits(),
            covariate_dim: synth.covariate_dim,
            covariate_seed,
            dose_grid: default_dose_grid(),
            generator: GeneratorKind::Builtin,
            detector: DetectorConfig::default(),
            observables: ObservableConfig::default(),
            synth: Some(synth),
        }
    }

    /// Number of clips in the corpus.
    pub fn n_files(&self) -> usize {
        self.n_units * self.n_bits * self.dose_grid.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_units == 0 {
            return Err(Error::config("n_units must be positive"));
        }
        if self.n_bits == 0 {
            return Err(Error::config("n_bits must be positive"));
        }
        if self.sample_rate == 0 || self.clip_len < 2 || self.covariate_dim == 0 {
            return Err(Error::config(
                "sample_rate, clip_len and covariate_dim must be positive",
            ));
        }
        if self.dose_grid.is_empty() || self.dose_grid.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("dose_grid must be a non-empty list of finite numbers"));
        }
        if self.dose_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("dose_grid must be strictly increasing"));
        }
        self.detector.validate()?;
        self.observables.validate()?;
        match (&self.generator, &self.synth) {
            (GeneratorKind::Builtin, None) => {
                return Err(Error::config("builtin generator requires planted.* settings"))
            }
            (GeneratorKind::Builtin, Some(s)) => {
                s.validate()?;
                if s.sample_rate != self.sample_rate
                    || s.clip_len != self.clip_len
                    || s.covariate_dim != self.covariate_dim
                    || s.n_bits() != self.n_bits
                {
                    return Err(Error::config(
                        "planted settings disagree with sample_rate, clip_len, covariate_dim or n_bits",
                    ));
                }
            }
            (GeneratorKind::External, _) => {}
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("schema_version", self.schema_version);
        kv.insert("sample_rate", self.sample_rate);
        kv.insert("clip_len", self.clip_len);
        kv.insert("n_units", self.n_units);
        kv.insert("n_bits", self.n_bits);
        kv.insert("covariate_dim", self.covariate_dim);
        kv.insert("covariate_seed", self.covariate_seed);
        kv.insert("dose_grid", join_f64(&self.dose_grid));
        kv.insert("generator", self.generator.name());
        macro_rules! put_det {
            ($f:ident, $t:ty) => {
                kv.insert(concat!("detector.", stringify!($f)), self.detector.$f);
            };
        }
        detector_fields!(put_det);
        macro_rules! put_obs {
            ($f:ident, $t:ty) => {
                kv.insert(concat!("observables.", stringify!($f)), self.observables.$f);
            };
        }
        observable_fields!(put_obs);
        if let Some(s) = &self.synth {
            s.write_kv(&mut kv);
        }
        kv
    }

    /// Reads manifest keys, falling back to defaults for absent ones.
    /// Keys outside the manifest namespaces are ignored here.
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let generator = match kv.get("generator").unwrap_or("builtin") {
            "builtin" => GeneratorKind::Builtin,
            "external" => GeneratorKind::External,
            other => {
                return Err(Error::config(format!(
                    "invalid value for generator: {other:?} (expected builtin or external)"
                )))
            }
        };
        let defaults = SynthConfig::default();
        let sample_rate = kv.parse_or("sample_rate", defaults.sample_rate)?;
        let clip_len = kv.parse_or("clip_len", defaults.clip_len)?;
        let n_bits = kv.parse_or("n_bits", defaults.n_bits())?;
        let covariate_dim = kv.parse_or("covariate_dim", defaults.covariate_dim)?;
        let dose_grid = kv.parse_list_f64("dose_grid")?.unwrap_or_else(default_dose_grid);
        if dose_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("dose_grid must be strictly increasing"));
        }

        let mut detector = DetectorConfig::default();
        macro_rules! get_det {
            ($f:ident, $t:ty) => {
                detector.$f = kv.parse_or::<$t>(concat!("detector.", stringify!($f)), detector.$f)?;
            };
        }
        detector_fields!(get_det);
        let mut observables = ObservableConfig::default();
        macro_rules! get_obs {
            ($f:ident, $t:ty) => {
                observables.$f =
                    kv.parse_or::<$t>(concat!("observables.", stringify!($f)), observables.$f)?;
            };
        }
        observable_fields!(get_obs);

        let synth = match generator {
            GeneratorKind::Builtin => Some(SynthConfig::read_kv(
                kv,
                n_bits,
                sample_rate,
                clip_len,
                covariate_dim,
            )?),
            GeneratorKind::External => None,
        };
        let m = Manifest {
            schema_version: kv.parse_or("schema_version", SCHEMA_VERSION)?,
            sample_rate,
            clip_len,
            n_units: kv.parse_or("n_units", 2500)?,
            n_bits,
            covariate_dim,
            covariate_seed: kv.parse_or("covariate_seed", 1)?,
            dose_grid,
            generator,
            detector,
            observables,
            synth,
        };
        m.validate()?;
        Ok(m)
    }

    /// Whether `key` belongs to the manifest key set.
    pub fn is_manifest_key(key: &str) -> bool {
        MANIFEST_KEYS.contains(&key) || MANIFEST_NAMESPACES.iter().any(|ns| key.starts_with(ns))
    }

    /// Writes `dir/manifest.txt`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.save_as(&dir.join(MANIFEST_FILE))
    }

    pub fn save_as(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_kv().to_text())?;
        Ok(())
    }

    /// Loads `dir/manifest.txt`.
    pub fn load(dir: &Path) -> Result<Self> {
        Self::load_file(&dir.join(MANIFEST_FILE))
    }

    /// Every top-level key must be present and no unknown key is allowed.
    pub fn load_file(path: &Path) -> Result<Self> {
        let kv = KvMap::parse(&std::fs::read_to_string(path)?)?;
        if let Some(k) = MANIFEST_KEYS.iter().find(|k| !kv.contains(k)) {
            return Err(Error::config(format!("{}: missing key {k}", path.display())));
        }
        if let Some(k) = kv.keys().find(|k| !Self::is_manifest_key(k)) {
            return Err(Error::config(format!("{}: unknown key {k}", path.display())));
        }
        Self::from_kv(&kv)
    }
}
