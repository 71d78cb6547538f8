use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::EstimateConfig;
use super::svg::{line_plot, Series};
use crate::causal::{
    ate_curve, bits_of, dispersion_curve, ice_curve, sign_score, spectral_distance_curve,
    stratified_theta, stratify, theta_of_curve, EffectCurve, NaConvention, OutcomeGrid,
    SpectraGrid,
};
use crate::corpus::csv_writer;
use crate::error::{Error, Result};
use crate::observables::{Observable, ObservableRecord};

/// Observables analysed per click-count stratum.
pub const STRATIFIED: [Observable; 2] = [Observable::MeanIci, Observable::StdIci];

const TRAINING_RANGE: [f64; 2] = [-1.0, 1.0];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn short_name(obs: Observable) -> &'static str {
    match obs {
        Observable::NClicks => "nclicks",
        other => other.column(),
    }
}

/// One line of `sign_scores.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignScoreRow {
    pub bit: u32,
    pub observable: Observable,
    pub na_convention: NaConvention,
    pub score: i32,
    pub n_strata: usize,
    pub n_estimable: usize,
}

/// What `write_estimates` produced.
#[derive(Debug, Clone, Default)]
pub struct EstimateSummary {
    pub files: Vec<PathBuf>,
    pub sign_scores: Vec<SignScoreRow>,
}

struct Out<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Out<'_> {
    fn csv(&mut self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        let path = self.dir.join(name);
        let w = csv_writer(BufWriter::new(File::create(&path)?));
        self.files.push(path);
        Ok(w)
    }

    fn svg(&mut self, name: &str, text: String) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

fn curve_rows(
    w: &mut csv::Writer<BufWriter<File>>,
    curve: &EffectCurve,
    stratum: Option<&str>,
) -> Result<()> {
    for ((d, e), n) in curve.doses.iter().zip(&curve.estimates).zip(&curve.n) {
        let mut row = vec![curve.bit.to_string(), curve.observable.clone()];
        if let Some(s) = stratum {
            row.push(s.to_string());
        }
        row.extend([d.to_string(), opt(*e), n.to_string()]);
        w.write_record(&row)?;
    }
    Ok(())
}

fn plot(curves: &[EffectCurve], title: &str, y_label: &str) -> String {
    let series: Vec<Series> = curves
        .iter()
        .map(|c| Series {
            label: format!("bit {}", c.bit),
            points: c.doses.iter().copied().zip(c.estimates.iter().copied()).collect(),
        })
        .collect();
    line_plot(title, "dose t", y_label, &series, &TRAINING_RANGE)
}

fn baseline_of(obs: Observable, cfg: &EstimateConfig) -> f64 {
    if obs.is_spectral() {
        cfg.baseline_spectral
    } else {
        cfg.baseline_clicks
    }
}

fn range_label(dose_min: Option<f64>) -> String {
    dose_min.map_or("all".into(), |d| format!("t>={d}"))
}

/// Writes every effect table and plot for `records` into `dir`. Spectral
/// distances need `spectra`; without them `wasserstein.csv` has only its
/// header.
pub fn write_estimates(
    records: &[ObservableRecord],
    spectra: Option<&[SpectraGrid]>,
    cfg: &EstimateConfig,
    dir: &Path,
) -> Result<EstimateSummary> {
    if records.is_empty() {
        return Err(Error::data("no observations to estimate from"));
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Out {
        dir,
        files: Vec::new(),
    };
    let bits = bits_of(records);
    let ranges = [None, Some(cfg.theta_dose_min)];

    let mut theta = out.csv("theta_fs.csv")?;
    theta.write_record(["bit", "observable", "stratum", "range", "theta"])?;

    for obs in Observable::ALL {
        let baseline = baseline_of(obs, cfg);
        let name = short_name(obs);
        let mut ate_w = out.csv(&format!("ate_{name}.csv"))?;
        ate_w.write_record(["bit", "observable", "dose", "estimate", "n"])?;
        let mut ice_w = out.csv(&format!("ice_{name}.csv"))?;
        ice_w.write_record(["bit", "observable", "stratum", "dose", "estimate", "n"])?;
        let (mut ates, mut ices) = (Vec::new(), Vec::new());
        for &bit in &bits {
            let grid = OutcomeGrid::from_records(records, bit, obs)?;
            let ate = ate_curve(&grid, baseline)
                .map_err(|e| Error::config(format!("bit {bit}, {}: {e}", obs.column())))?;
            curve_rows(&mut ate_w, &ate, None)?;
            ates.push(ate);
            if grid.doses.len() < 2 {
                continue;
            }
            let ice = ice_curve(&grid)?;
            curve_rows(&mut ice_w, &ice, Some("all"))?;
            for r in ranges {
                let t = theta_of_curve(&ice, r).ok();
                theta.write_record([bit.to_string(), obs.column().into(), "all".into(), range_label(r), opt(t)])?;
            }
            if STRATIFIED.contains(&obs) {
                for (k, g) in stratify(records, bit, obs)? {
                    let ice_k = ice_curve(&g)?;
                    curve_rows(&mut ice_w, &ice_k, Some(&k.to_string()))?;
                    for r in ranges {
                        let t = theta_of_curve(&ice_k, r).ok();
                        theta.write_record([bit.to_string(), obs.column().into(), k.to_string(), range_label(r), opt(t)])?;
                    }
                }
            }
            ices.push(ice);
        }
        ate_w.flush()?;
        ice_w.flush()?;
        out.svg(
            &format!("ate_{name}.svg"),
            plot(&ates, &format!("ATE of {} (baseline t={baseline})", obs.column()), obs.column()),
        )?;
        out.svg(
            &format!("ice_{name}.svg"),
            plot(&ices, &format!("ICE of {}", obs.column()), obs.column()),
        )?;
    }

    let mut disp_w = out.csv("dispersion_nclicks.csv")?;
    disp_w.write_record(["bit", "observable", "dose", "estimate", "n"])?;
    let mut disps = Vec::new();
    for &bit in &bits {
        let grid = OutcomeGrid::from_records(records, bit, Observable::NClicks)?;
        let c = dispersion_curve(&grid, cfg.baseline_clicks)?;
        curve_rows(&mut disp_w, &c, None)?;
        disps.push(c);
    }
    disp_w.flush()?;
    out.svg(
        "dispersion_nclicks.svg",
        plot(&disps, &format!("Dispersion of n_clicks (baseline t={})", cfg.baseline_clicks), "std change"),
    )?;

    let mut sign_rows = Vec::new();
    let mut sign_w = out.csv("sign_scores.csv")?;
    sign_w.write_record(["bit", "observable", "na_convention", "score", "n_strata", "n_estimable"])?;
    for obs in STRATIFIED {
        let mut strata = BTreeSet::new();
        for &bit in &bits {
            strata.extend(stratify(records, bit, obs)?.into_keys());
        }
        for &bit in &bits {
            let thetas = stratified_theta(records, bit, obs, strata.iter().copied(), None)?;
            let n_estimable = thetas.values().filter(|t| t.is_some()).count();
            for na in [NaConvention::Zero, NaConvention::MinusOne] {
                let row = SignScoreRow {
                    bit,
                    observable: obs,
                    na_convention: na,
                    score: sign_score(&thetas, na),
                    n_strata: strata.len(),
                    n_estimable,
                };
                sign_w.write_record([
                    bit.to_string(),
                    obs.column().to_string(),
                    na.name().to_string(),
                    row.score.to_string(),
                    row.n_strata.to_string(),
                    n_estimable.to_string(),
                ])?;
                sign_rows.push(row);
            }
        }
    }
    sign_w.flush()?;

    let mut w1_w = out.csv("wasserstein.csv")?;
    w1_w.write_record(["bit", "observable", "dose", "estimate", "n"])?;
    let mut w1_curves = Vec::new();
    for grid in spectra.unwrap_or(&[]) {
        let d = spectral_distance_curve(grid, cfg.baseline_spectral, Some(cfg.theta_dose_min))
            .map_err(|e| match e {
                Error::Config(m) => Error::config(format!("bit {}: {m}", grid.bit)),
                other => other,
            })?;
        curve_rows(&mut w1_w, &d.curve, None)?;
        for (r, t) in ranges.iter().zip([d.theta, d.theta_restricted]) {
            theta.write_record([grid.bit.to_string(), d.curve.observable.clone(), "all".into(), range_label(*r), opt(t)])?;
        }
        w1_curves.push(d.curve);
    }
    w1_w.flush()?;
    theta.flush()?;
    if !w1_curves.is_empty() {
        out.svg(
            "wasserstein.svg",
            plot(
                &w1_curves,
                &format!("W1 distance of coda spectra to t={}", cfg.baseline_spectral),
                "Hz",
            ),
        )?;
    }
    Ok(EstimateSummary {
        files: out.files,
        sign_scores: sign_rows,
    })
}
