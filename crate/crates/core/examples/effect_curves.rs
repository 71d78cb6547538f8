//! Average and incremental effects of the click-count bit, its expected
//! infinitesimal effect and the per-stratum sign scores of the interval
//! observables.
//!
//! cargo run --release --example effect_curves -- [n_units]

use std::collections::BTreeSet;

use cdev::causal::{ate_curve, ice_curve, sign_score, stratified_theta, stratify, theta_of_curve, NaConvention, OutcomeGrid};
use cdev::corpus::{simulate, Manifest, MeasureLevel};
use cdev::observables::Observable;
use cdev::synthgen::SynthConfig;

fn main() -> cdev::Result<()> {
    let n_units: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40);
    let m = Manifest::builtin(n_units, 1, SynthConfig::default());
    let bit = 1;
    let records = simulate(&m, Some(&[bit]), MeasureLevel::Clicks)?;

    let grid = OutcomeGrid::from_records(&records, bit, Observable::NClicks)?;
    let ate = ate_curve(&grid, -1.0)?;
    let ice = ice_curve(&grid)?;
    println!("  dose   ATE n_clicks   ICE");
    for (k, d) in ate.doses.iter().enumerate() {
        let ice_k = ice.estimates.get(k).copied().flatten();
        println!("{d:>6.1} {:>12.3} {:>8}", ate.estimates[k].unwrap_or(f64::NAN), ice_k.map_or("".into(), |v| format!("{v:.3}")));
    }
    println!(
        "theta over the grid {:.4}, over t >= 1 {:.4}",
        theta_of_curve(&ice, None)?,
        theta_of_curve(&ice, Some(1.0))?
    );

    for obs in [Observable::MeanIci, Observable::StdIci] {
        let strata: BTreeSet<u32> = stratify(&records, bit, obs)?.into_keys().collect();
        let thetas = stratified_theta(&records, bit, obs, strata, None)?;
        let cells: Vec<String> = thetas
            .iter()
            .map(|(k, t)| format!("{k}:{}", t.map_or("N/A".into(), |v| format!("{v:+.4}"))))
            .collect();
        println!("{}: {}", obs.column(), cells.join(" "));
        println!(
            "  sign score {} (N/A as 0), {} (N/A as -1)",
            sign_score(&thetas, NaConvention::Zero),
            sign_score(&thetas, NaConvention::MinusOne)
        );
    }
    Ok(())
}
