//! Sweeps every bit of the builtin generator and prints, per observable,
//! the ATE at the largest dose for each bit and the bit that dominates.
//!
//! cargo run --release --example planted_recovery -- [n_units] [seed]

use std::time::Instant;

use cdev::causal::{ate_curve, OutcomeGrid};
use cdev::corpus::{simulate, Manifest, MeasureLevel};
use cdev::observables::Observable;
use cdev::synthgen::SynthConfig;

fn main() -> cdev::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_units: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(40);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let manifest = Manifest::builtin(n_units, seed, SynthConfig::default());
    let top = *manifest.dose_grid.last().unwrap();
    let start = Instant::now();
    let records = simulate(&manifest, None, MeasureLevel::Scalars)?;
    println!(
        "{} clips measured in {:.1} s",
        records.len(),
        start.elapsed().as_secs_f64()
    );

    for obs in Observable::ALL {
        let baseline = if obs.is_spectral() { 1.0 } else { -1.0 };
        print!("{:<24}", obs.column());
        let mut best = (0, 0.0f64);
        for bit in 0..manifest.n_bits as u32 {
            let grid = OutcomeGrid::from_records(&records, bit, obs)?;
            let curve = ate_curve(&grid, baseline)?;
            let ate = curve.at(top).unwrap_or(f64::NAN);
            let slope = curve.slope_over(5.0, top).unwrap_or(f64::NAN);
            print!(" {ate:>10.4} ({slope:>8.4})");
            if ate.abs() > best.1 {
                best = (bit, ate.abs());
            }
        }
        println!("  -> bit {}", best.0);
    }
    Ok(())
}
