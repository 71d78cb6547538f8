//! Runs the estimate step as a library call: every effect table, sign
//! score and plot for a small in-memory experiment.
//!
//! cargo run --release --example estimate_report -- [out_dir] [n_units]

use cdev::cli::{write_estimates, EstimateConfig};
use cdev::corpus::{record_spectra, simulate, spectra_grids, Manifest, MeasureLevel};
use cdev::synthgen::SynthConfig;

fn main() -> cdev::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cdev_estimate_example"));
    let n_units: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);

    let m = Manifest::builtin(n_units, 1, SynthConfig::default());
    let records = simulate(&m, None, MeasureLevel::Full)?;
    let grids = spectra_grids(record_spectra(&records));
    let cfg = EstimateConfig::default();
    let summary = write_estimates(&records, Some(&grids), &cfg, &out)?;
    println!("{} files in {}", summary.files.len(), out.display());
    for r in summary.sign_scores.iter().filter(|r| r.na_convention == cfg.na_convention) {
        println!("bit {} {:<8} sign score {:+} ({} of {} strata estimable)", r.bit, r.observable.column(), r.score, r.n_estimable, r.n_strata);
    }
    Ok(())
}
