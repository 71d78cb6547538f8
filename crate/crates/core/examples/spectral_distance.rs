//! W1 distance between dose-averaged coda spectra of the spectral-mean bit
//! and its baseline at t = 1.
//!
//! cargo run --release --example spectral_distance -- [n_units]

use cdev::causal::spectral_distance_curve;
use cdev::corpus::{record_spectra, simulate, spectra_grids, Manifest, MeasureLevel};
use cdev::synthgen::SynthConfig;

fn main() -> cdev::Result<()> {
    let n_units: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let m = Manifest::builtin(n_units, 1, SynthConfig::default());
    let records = simulate(&m, Some(&[0, 2]), MeasureLevel::Full)?;
    for grid in spectra_grids(record_spectra(&records)) {
        let d = spectral_distance_curve(&grid, 1.0, Some(1.0))?;
        println!("bit {}: theta {:.1} Hz per unit dose ({:.1} for t >= 1)", grid.bit, d.theta.unwrap_or(f64::NAN), d.theta_restricted.unwrap_or(f64::NAN));
        for (t, w) in d.curve.doses.iter().zip(&d.curve.estimates).step_by(3) {
            println!("  t={t:>5.1}  W1 {:>8.1} Hz", w.unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
