//! Leaf-cap consistency scan on one bit of the builtin generator, next to
//! the same scan with shuffled outcomes.
//!
//! cargo run --release --example surrogate_consistency -- [n_units] [bit]

use std::time::Instant;

use cdev::corpus::{simulate, Manifest, MeasureLevel};
use cdev::observables::Observable;
use cdev::surrogate::{scan_slice, Slice, SurrogateConfig};
use cdev::synthgen::{draw_covariates, SynthConfig};

fn main() -> cdev::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_units: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let bit: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let m = Manifest::builtin(n_units, 1, SynthConfig::default());
    let records = simulate(&m, Some(&[bit]), MeasureLevel::Clicks)?;
    let covariates = draw_covariates(m.covariate_seed, m.n_units, m.covariate_dim);
    let slice = Slice::build(&records, &covariates, m.n_bits, bit, Observable::NClicks)?;
    let cfg = SurrogateConfig::default();

    let start = Instant::now();
    let report = scan_slice(&slice, Observable::NClicks, &cfg)?;
    print!("{}", report.summary());
    println!("scan took {:.1} s", start.elapsed().as_secs_f64());
    for p in &report.strata[0].outcome_curve {
        println!("  t={:>5.1}  observed {:>7.3}  predicted {:>7.3}", p.dose, p.observed, p.predicted);
    }

    let start = Instant::now();
    let control = scan_slice(&slice.shuffled(42), Observable::NClicks, &cfg)?;
    print!("shuffled control: {}", control.summary());
    println!("control took {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
