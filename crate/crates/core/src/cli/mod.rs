//! Command-line front end: `synth`, `measure`, `estimate`, `surrogate`.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 for
//! I/O and data errors. `CDEV_THREADS` sets the worker count (0 = all
//! cores).

mod config;
mod report;
mod svg;

pub use config::{EstimateConfig, ExperimentConfig};
pub use report::{write_estimates, EstimateSummary, SignScoreRow, STRATIFIED};
pub use svg::{line_plot, Series};

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::corpus::{
    generate_corpus, measure_corpus, read_observables, read_spectra, spectra_grids,
    write_observables, write_spectra, Manifest, MeasureLevel,
};
use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::surrogate::{consistency_scan, SurrogateConfig};
use crate::synthgen::draw_covariates;

#[derive(Debug, Parser)]
#[command(name = "cdev", version, about = "Causal probing of audio generators with extreme latent values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus with the builtin generator.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
    /// Measure every clip of a corpus into an observables CSV.
    Measure {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write coda spectra next to the CSV.
        #[arg(long)]
        spectra: bool,
    },
    /// Effect curves, strata scores and plots from an observables CSV.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        baseline_clicks: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        baseline_spectral: f64,
    },
    /// Leaf-cap consistency scan of one bit and observable.
    Surrogate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        bit: u32,
        #[arg(long)]
        observable: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// `obs.csv` -> `obs.<suffix>`.
pub fn sidecar_path(csv: &Path, suffix: &str) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("observables");
    csv.with_file_name(format!("{stem}.{suffix}"))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CDEV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("CDEV_THREADS must be a non-negative integer, got {v:?}")))?;
    // a second initialisation in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn cmd_synth(config: &Path, overwrite: bool) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = cfg
        .output_dir
        .ok_or_else(|| Error::config("output_dir is required for synth"))?;
    let s = generate_corpus(&cfg.manifest, &dir, overwrite)?;
    println!("wrote {} files", s.n_files);
    println!("manifest: {}", s.manifest_path.display());
    Ok(())
}

pub fn cmd_measure(input: &Path, out: &Path, spectra: bool) -> Result<()> {
    let level = if spectra { MeasureLevel::Full } else { MeasureLevel::Scalars };
    let report = measure_corpus(input, level)?;
    if report.n_files == 0 {
        return Err(Error::data(format!("{}: no WAV files", input.display())));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_observables(&report.records, BufWriter::new(File::create(out)?))?;
    report.manifest.save_as(&sidecar_path(out, "manifest.txt"))?;
    if spectra {
        let path = sidecar_path(out, "spectra.csv");
        write_spectra(&report.records, BufWriter::new(File::create(&path)?))?;
        println!("spectra: {}", path.display());
    }
    println!(
        "measured {} of {} files, skipped {}",
        report.records.len(),
        report.n_files,
        report.skipped.len()
    );
    for s in &report.skipped {
        eprintln!("warning: skipped {}: {}", s.path.display(), s.reason);
    }
    if 2 * report.skipped.len() > report.n_files {
        return Err(Error::data(format!(
            "more than half of the files were skipped ({} of {})",
            report.skipped.len(),
            report.n_files
        )));
    }
    Ok(())
}

pub fn cmd_estimate(input: &Path, out: &Path, cfg: &EstimateConfig) -> Result<EstimateSummary> {
    let records = read_observables(BufReader::new(File::open(input)?))?;
    let spectra_path = sidecar_path(input, "spectra.csv");
    let grids = if spectra_path.exists() {
        Some(spectra_grids(read_spectra(BufReader::new(File::open(&spectra_path)?))?))
    } else {
        log::warn!("{} not found, spectral distances skipped", spectra_path.display());
        None
    };
    let summary = write_estimates(&records, grids.as_deref(), cfg, out)?;
    println!("wrote {} files to {}", summary.files.len(), out.display());
    for r in summary.sign_scores.iter().filter(|r| r.na_convention == cfg.na_convention) {
        println!(
            "sign score bit {} {}: {:+} over {} strata",
            r.bit,
            r.observable.column(),
            r.score,
            r.n_strata
        );
    }
    Ok(summary)
}

pub fn cmd_surrogate(input: &Path, bit: u32, observable: &str, out: &Path) -> Result<bool> {
    let obs = Observable::from_column(observable).ok_or_else(|| {
        let names: Vec<&str> = Observable::ALL.iter().map(|o| o.column()).collect();
        Error::config(format!("unknown observable {observable:?}; expected one of {}", names.join(", ")))
    })?;
    let records = read_observables(BufReader::new(File::open(input)?))?;
    let manifest_path = sidecar_path(input, "manifest.txt");
    if !manifest_path.exists() {
        return Err(Error::config(format!(
            "{} not found; the covariates are regenerated from the manifest written by measure",
            manifest_path.display()
        )));
    }
    let m = Manifest::load_file(&manifest_path)?;
    let covariates = draw_covariates(m.covariate_seed, m.n_units, m.covariate_dim);
    let cfg = SurrogateConfig {
        stratify: STRATIFIED.contains(&obs),
        ..SurrogateConfig::default()
    };
    let report = consistency_scan(&records, &covariates, m.n_bits, bit, obs, &cfg)?;
    std::fs::create_dir_all(out)?;
    let stem = format!("surrogate_bit{bit}_{}", obs.column());
    report.write_csv(BufWriter::new(File::create(out.join(format!("{stem}.csv")))?))?;
    let summary = report.summary();
    std::fs::write(out.join(format!("{stem}.txt")), &summary)?;
    print!("{summary}");
    Ok(report.consistent())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth { config, overwrite } => cmd_synth(&config, overwrite),
        Command::Measure { input, out, spectra } => cmd_measure(&input, &out, spectra),
        Command::Estimate {
            input,
            out,
            baseline_clicks,
            baseline_spectral,
        } => {
            let cfg = EstimateConfig {
                baseline_clicks,
                baseline_spectral,
                ..EstimateConfig::default()
            };
            cmd_estimate(&input, &out, &cfg).map(|_| ())
        }
        Command::Surrogate {
            input,
            bit,
            observable,
            out,
        } => cmd_surrogate(&input, bit, &observable, &out).map(|_| ()),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
