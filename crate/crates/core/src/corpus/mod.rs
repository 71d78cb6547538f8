//! Corpus layout, generation and batch measurement.
//!
//! A corpus is a flat directory of mono 16-bit WAV files, one per
//! (unit, bit, dose), named `unit{unit:05}_bit{bit}_t{dose:+08.3}.wav`,
//! plus `manifest.txt`. The naming convention is the only contract with
//! external generators: any directory that follows it can be measured.

mod manifest;
mod table;
mod wav;

pub use manifest::{
    default_dose_grid, GeneratorKind, Manifest, MANIFEST_FILE, MANIFEST_KEYS, SCHEMA_VERSION,
};
pub use table::{
    read_observables, read_spectra, record_spectra, sort_records, spectra_grids,
    write_observables, write_spectra, SpectrumEntry, OBSERVABLE_COLUMNS, SPECTRA_COLUMNS,
};
pub(crate) use table::csv_writer;
pub use wav::{pcm16, quantize_pcm16, read_wav, write_wav};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::observables::{measure, measure_clicks, ObservableRecord};
use crate::synthgen::{draw_covariates, synth_coda, LatentInput};

/// File name of one clip.
pub fn clip_file_name(unit_id: u32, bit: u32, dose: f64) -> String {
    format!("unit{unit_id:05}_bit{bit}_t{dose:+08.3}.wav")
}

/// Experiment coordinates encoded in a clip file name.
pub fn parse_clip_name(name: &str) -> Option<(u32, u32, f64)> {
    let stem = name
        .strip_suffix(".wav")
        .or_else(|| name.strip_suffix(".WAV"))?;
    let rest = stem.strip_prefix("unit")?;
    let (unit, rest) = rest.split_once("_bit")?;
    let (bit, dose) = rest.split_once("_t")?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(unit) || !digits(bit) {
        return None;
    }
    let dose: f64 = dose.parse().ok()?;
    dose.is_finite()
        .then_some((unit.parse().ok()?, bit.parse().ok()?, dose))
}

fn dir_has_entries(dir: &Path) -> Result<bool> {
    match std::fs::read_dir(dir) {
        Ok(mut it) => Ok(it.next().is_some()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(false),
        Err(e) => Err(e.into()),
    }
}

/// Coordinates of every clip in a builtin experiment, in file order.
fn tasks(m: &Manifest, bits: &[u32]) -> Vec<(u32, u32, f64)> {
    let mut out = Vec::with_capacity(m.n_units * bits.len() * m.dose_grid.len());
    for u in 0..m.n_units as u32 {
        for &b in bits {
            for &d in &m.dose_grid {
                out.push((u, b, d));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub n_files: usize,
    pub manifest_path: PathBuf,
}

/// Synthesises every clip of a builtin manifest into `dir`. A non-empty
/// `dir` is refused unless `overwrite` is set, in which case stale clips
/// and the old manifest are removed first.
pub fn generate_corpus(m: &Manifest, dir: &Path, overwrite: bool) -> Result<GenerateSummary> {
    m.validate()?;
    let synth = m
        .synth
        .as_ref()
        .ok_or_else(|| Error::config("generate requires generator=builtin"))?;
    if dir_has_entries(dir)? {
        if !overwrite {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                format!("{} is not empty (set overwrite to replace it)", dir.display()),
            )));
        }
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if parse_clip_name(name).is_some() || name == MANIFEST_FILE {
                std::fs::remove_file(&path)?;
            }
        }
    }
    std::fs::create_dir_all(dir)?;
    let covariates = draw_covariates(m.covariate_seed, m.n_units, m.covariate_dim);
    let bits: Vec<u32> = (0..m.n_bits as u32).collect();
    let work = tasks(m, &bits);
    info!("generating {} clips into {}", work.len(), dir.display());
    work.par_iter().try_for_each(|&(u, b, d)| {
        let input = LatentInput::single_bit(covariates[u as usize].clone(), m.n_bits, b as usize, d);
        let out = synth_coda(&input, synth)?;
        write_wav(&out.clip, &dir.join(clip_file_name(u, b, d)))
    })?;
    m.save(dir)?;
    Ok(GenerateSummary {
        n_files: work.len(),
        manifest_path: dir.join(MANIFEST_FILE),
    })
}

/// Which observables to compute per clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasureLevel {
    /// Every observable, keeping the coda spectrum.
    #[default]
    Full,
    /// Every observable, dropping the coda spectrum after use.
    Scalars,
    /// Click count and interval statistics only.
    Clicks,
}

fn measure_one(
    clip: &crate::signal::AudioClip,
    (u, b, d): (u32, u32, f64),
    m: &Manifest,
    level: MeasureLevel,
) -> Result<ObservableRecord> {
    match level {
        MeasureLevel::Clicks => measure_clicks(clip, u, b, d, &m.detector),
        MeasureLevel::Full => measure(clip, u, b, d, &m.detector, &m.observables),
        MeasureLevel::Scalars => {
            let mut r = measure(clip, u, b, d, &m.detector, &m.observables)?;
            r.coda_spectrum = None;
            Ok(r)
        }
    }
}

/// Generates and measures a builtin experiment in memory. Clips pass
/// through the same 16-bit quantisation as a WAV round trip, so records
/// equal those of [`measure_corpus`] on the generated corpus. `bits`
/// restricts the sweep; `None` sweeps every bit.
pub fn simulate(m: &Manifest, bits: Option<&[u32]>, level: MeasureLevel) -> Result<Vec<ObservableRecord>> {
    m.validate()?;
    let synth = m
        .synth
        .as_ref()
        .ok_or_else(|| Error::config("simulation requires generator=builtin"))?;
    let all: Vec<u32> = (0..m.n_bits as u32).collect();
    let bits = bits.unwrap_or(&all);
    if let Some(b) = bits.iter().find(|b| **b as usize >= m.n_bits) {
        return Err(Error::config(format!("bit {b} out of range for n_bits={}", m.n_bits)));
    }
    let covariates = draw_covariates(m.covariate_seed, m.n_units, m.covariate_dim);
    let mut records = tasks(m, bits)
        .into_par_iter()
        .map(|(u, b, d)| {
            let input = LatentInput::single_bit(covariates[u as usize].clone(), m.n_bits, b as usize, d);
            let clip = quantize_pcm16(&synth_coda(&input, synth)?.clip);
            measure_one(&clip, (u, b, d), m, level)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_records(&mut records);
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct MeasureReport {
    pub records: Vec<ObservableRecord>,
    /// Files that looked like clips (`.wav` extension).
    pub n_files: usize,
    pub skipped: Vec<SkippedFile>,
    pub manifest: Manifest,
}

/// Measures every clip in `dir` with the settings of its manifest.
///
/// Without a manifest the directory is treated as an external corpus with
/// default settings. Files with unparseable names, unreadable audio or
/// duplicate coordinates are skipped and reported. Doses within 5e-4 of a
/// manifest grid dose snap onto it, undoing the 3-decimal file naming.
pub fn measure_corpus(dir: &Path, level: MeasureLevel) -> Result<MeasureReport> {
    let manifest = if dir.join(MANIFEST_FILE).exists() {
        Manifest::load(dir)?
    } else {
        warn!("{}: no {MANIFEST_FILE}, using default settings", dir.display());
        Manifest {
            generator: GeneratorKind::External,
            synth: None,
            ..Manifest::builtin(1, 0, Default::default())
        }
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        p.is_file()
            && p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
    });
    paths.sort();

    let mut skipped = Vec::new();
    let mut seen = BTreeSet::new();
    let mut jobs = Vec::new();
    for p in &paths {
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let Some((u, b, mut d)) = parse_clip_name(name) else {
            skipped.push(SkippedFile {
                path: p.clone(),
                reason: "file name does not follow unit*_bit*_t*.wav".into(),
            });
            continue;
        };
        if let Some(g) = manifest.dose_grid.iter().find(|g| (**g - d).abs() <= 5e-4) {
            d = *g;
        }
        if !seen.insert((u, b, d.to_bits())) {
            skipped.push(SkippedFile {
                path: p.clone(),
                reason: "duplicate (unit, bit, dose)".into(),
            });
            continue;
        }
        jobs.push((p.clone(), (u, b, d)));
    }

    let results: Vec<(PathBuf, Result<ObservableRecord>)> = jobs
        .into_par_iter()
        .map(|(p, key)| {
            let r = read_wav(&p).and_then(|clip| measure_one(&clip, key, &manifest, level));
            (p, r)
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    for (path, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => skipped.push(SkippedFile {
                path,
                reason: e.to_string(),
            }),
        }
    }
    for s in &skipped {
        warn!("skipped {}: {}", s.path.display(), s.reason);
    }
    sort_records(&mut records);
    Ok(MeasureReport {
        records,
        n_files: paths.len(),
        skipped,
        manifest,
    })
}
