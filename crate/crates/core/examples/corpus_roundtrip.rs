//! Writes a small builtin corpus to disk, measures it back and prints the
//! first rows of the observables table.
//!
//! cargo run --release --example corpus_roundtrip -- [dir]

use cdev::corpus::{generate_corpus, measure_corpus, write_observables, Manifest, MeasureLevel};
use cdev::synthgen::SynthConfig;

fn main() -> cdev::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cdev_corpus_example"));
    let manifest = Manifest {
        dose_grid: vec![-1.0, 0.0, 1.0, 5.0, 12.5],
        ..Manifest::builtin(3, 1, SynthConfig::default())
    };
    let summary = generate_corpus(&manifest, &dir, true)?;
    println!("wrote {} clips and {}", summary.n_files, summary.manifest_path.display());

    let report = measure_corpus(&dir, MeasureLevel::Scalars)?;
    println!("measured {} of {} files, {} skipped", report.records.len(), report.n_files, report.skipped.len());
    let mut csv = Vec::new();
    write_observables(&report.records, &mut csv)?;
    for line in String::from_utf8_lossy(&csv).lines().take(8) {
        println!("{line}");
    }
    Ok(())
}
