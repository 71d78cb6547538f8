//! Surrogate-model consistency check.
//!
//! For one bit, boosted regression trees of increasing leaf cap regress an
//! observable on the generator input `[t-slot vector | X]`. A bit is
//! CONSISTENT for the observable when its treatment slot is the strictly
//! most important feature at every leaf cap whose validation MSE lies
//! within 10% of the best cap's.

mod gbrt;

pub use gbrt::{fit_boosted, permutation_importance, BinMapper, BoostParams, GbrtModel, Node, Tree};

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::csv_writer;
use crate::error::{Error, Result};
use crate::observables::{Observable, ObservableRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateConfig {
    pub max_leaves_grid: Vec<usize>,
    pub n_trees_max: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub validation_fraction: f64,
    pub permutation_repeats: usize,
    pub min_samples_leaf: usize,
    /// Rows needed to scan a slice or stratum.
    pub min_rows: usize,
    /// Caps within this factor of the best validation MSE qualify.
    pub mse_tolerance: f64,
    /// Also scan each click-count stratum.
    pub stratify: bool,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            max_leaves_grid: vec![2, 3, 5, 8, 13, 21, 34],
            n_trees_max: 500,
            learning_rate: 0.1,
            patience: 20,
            validation_fraction: 0.10,
            permutation_repeats: 10,
            min_samples_leaf: 20,
            min_rows: 50,
            mse_tolerance: 1.10,
            stratify: false,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_leaves_grid.is_empty() || self.max_leaves_grid.iter().any(|l| *l < 2) {
            return Err(Error::config("surrogate.max_leaves_grid entries must be at least 2"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config("surrogate.validation_fraction must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("surrogate.learning_rate must lie in (0, 1]"));
        }
        if self.n_trees_max == 0 || self.patience == 0 {
            return Err(Error::config("surrogate.n_trees_max and surrogate.patience must be positive"));
        }
        if self.min_rows < 2 {
            return Err(Error::config("surrogate.min_rows must be at least 2"));
        }
        if !(self.mse_tolerance >= 1.0) {
            return Err(Error::config("surrogate.mse_tolerance must be at least 1"));
        }
        Ok(())
    }

    fn boost(&self, max_leaves: usize) -> BoostParams {
        BoostParams {
            max_leaves,
            n_trees_max: self.n_trees_max,
            learning_rate: self.learning_rate,
            patience: self.patience,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

/// Feature matrix of one bit's slice: `n_bits` treatment slots (only slot
/// `bit` is non-zero) followed by the unit's covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub bit: u32,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub units: Vec<u32>,
    pub doses: Vec<f64>,
    pub n_clicks: Vec<u32>,
    pub feature_names: Vec<String>,
}

impl Slice {
    /// Rows of `bit` with the observable present. `covariates[u]` is the
    /// covariate vector of unit `u`.
    pub fn build(
        records: &[ObservableRecord],
        covariates: &[Vec<f64>],
        n_bits: usize,
        bit: u32,
        observable: Observable,
    ) -> Result<Self> {
        if bit as usize >= n_bits {
            return Err(Error::config(format!("bit {bit} out of range for n_bits={n_bits}")));
        }
        let dim = covariates.first().map_or(0, |c| c.len());
        let mut feature_names: Vec<String> = (0..n_bits).map(|b| format!("t{b}")).collect();
        feature_names.extend((0..dim).map(|k| format!("x{k}")));
        let mut s = Slice {
            bit,
            x: Vec::new(),
            y: Vec::new(),
            units: Vec::new(),
            doses: Vec::new(),
            n_clicks: Vec::new(),
            feature_names,
        };
        for r in records.iter().filter(|r| r.bit == bit) {
            let Some(v) = r.value(observable) else { continue };
            let cov = covariates.get(r.unit_id as usize).ok_or_else(|| {
                Error::data(format!("no covariates for unit {}", r.unit_id))
            })?;
            let mut row = vec![0.0; n_bits];
            row[bit as usize] = r.dose;
            row.extend_from_slice(cov);
            s.x.push(row);
            s.y.push(v);
            s.units.push(r.unit_id);
            s.doses.push(r.dose);
            s.n_clicks.push(r.n_clicks);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Copy with the outcomes permuted across rows.
    pub fn shuffled(&self, seed: u64) -> Slice {
        let mut y = self.y.clone();
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Slice { y, ..self.clone() }
    }

    fn subset(&self, keep: &[usize]) -> Slice {
        Slice {
            bit: self.bit,
            x: keep.iter().map(|&i| self.x[i].clone()).collect(),
            y: keep.iter().map(|&i| self.y[i]).collect(),
            units: keep.iter().map(|&i| self.units[i]).collect(),
            doses: keep.iter().map(|&i| self.doses[i]).collect(),
            n_clicks: keep.iter().map(|&i| self.n_clicks[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Splits row indices so that a seeded `fraction` of units (at least one,
/// never all) forms the validation set.
pub fn split_by_unit(units: &[u32], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<u32> = units.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_valid = ((fraction * ids.len() as f64).round() as usize).clamp(1, ids.len().saturating_sub(1).max(1));
    let valid: BTreeSet<u32> = ids[..n_valid].iter().copied().collect();
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (i, u) in units.iter().enumerate() {
        if valid.contains(u) {
            val.push(i)
        } else {
            train.push(i)
        }
    }
    (train, val)
}

/// Outcome of one leaf cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CapResult {
    pub max_leaves: usize,
    pub n_trees: usize,
    pub val_mse: f64,
    pub importances: Vec<f64>,
    /// 1 + number of other features at least as important.
    pub treatment_rank: usize,
    pub top_feature: String,
    /// Treatment strictly most important and positive.
    pub treatment_top: bool,
}

/// Mean observed and predicted outcome at one dose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoseFit {
    pub dose: f64,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumScan {
    /// Click-count stratum; `None` for the whole slice.
    pub stratum: Option<u32>,
    pub n_rows: usize,
    pub caps: Vec<CapResult>,
    pub consistent: bool,
    /// Per-dose fit of the best-MSE cap over all rows of the stratum.
    pub outcome_curve: Vec<DoseFit>,
    pub best_model: GbrtModel,
}

impl StratumScan {
    pub fn best_cap(&self) -> &CapResult {
        self.caps
            .iter()
            .min_by(|a, b| a.val_mse.total_cmp(&b.val_mse))
            .expect("scan has caps")
    }

    /// Caps whose validation MSE is within `tolerance` of the best.
    pub fn qualifying(&self, tolerance: f64) -> impl Iterator<Item = &CapResult> {
        let best = self.best_cap().val_mse;
        self.caps
            .iter()
            .filter(move |c| c.val_mse <= tolerance * best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub bit: u32,
    pub observable: Observable,
    pub config: SurrogateConfig,
    pub strata: Vec<StratumScan>,
    /// Strata left out for having fewer than `min_rows` rows.
    pub skipped: Vec<(u32, usize)>,
}

impl ConsistencyReport {
    /// Verdict on the whole slice.
    pub fn consistent(&self) -> bool {
        self.strata
            .iter()
            .find(|s| s.stratum.is_none())
            .is_some_and(|s| s.consistent)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "bit",
            "observable",
            "stratum",
            "max_leaves",
            "val_mse",
            "treatment_rank",
            "top_feature",
            "consistent_flag",
        ])?;
        for s in &self.strata {
            let stratum = s.stratum.map_or("all".to_string(), |k| k.to_string());
            for c in &s.caps {
                out.write_record([
                    self.bit.to_string(),
                    self.observable.column().to_string(),
                    stratum.clone(),
                    c.max_leaves.to_string(),
                    c.val_mse.to_string(),
                    c.treatment_rank.to_string(),
                    c.top_feature.clone(),
                    u8::from(s.consistent).to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Human-readable verdict with the fitting conventions.
    pub fn summary(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "bit {} / {}: {}\n",
            self.bit,
            self.observable.column(),
            if self.consistent() { "CONSISTENT" } else { "NOT CONSISTENT" }
        );
        s.push_str(&format!(
            "leaf caps {:?}; learning rate {}; at most {} trees; patience {}; min leaf {}; \
             validation {}% of units; {} permutation repeats; seed {}; caps within {}x of best MSE qualify\n",
            c.max_leaves_grid,
            c.learning_rate,
            c.n_trees_max,
            c.patience,
            c.min_samples_leaf,
            c.validation_fraction * 100.0,
            c.permutation_repeats,
            c.seed,
            c.mse_tolerance
        ));
        for st in &self.strata {
            let name = st.stratum.map_or("all".into(), |k| format!("n_clicks={k}"));
            let ranks: Vec<String> = st
                .caps
                .iter()
                .map(|c| format!("{}:{}", c.max_leaves, c.treatment_rank))
                .collect();
            s.push_str(&format!(
                "  {name} ({} rows): {} | best cap {} | treatment rank by cap {}\n",
                st.n_rows,
                if st.consistent { "CONSISTENT" } else { "NOT CONSISTENT" },
                st.best_cap().max_leaves,
                ranks.join(" ")
            ));
        }
        for (k, n) in &self.skipped {
            s.push_str(&format!("  n_clicks={k}: skipped, {n} rows\n"));
        }
        s
    }
}

fn scan_stratum(slice: &Slice, stratum: Option<u32>, cfg: &SurrogateConfig) -> Result<StratumScan> {
    let (train, valid) = split_by_unit(&slice.units, cfg.validation_fraction, cfg.seed);
    let t = slice.bit as usize;
    let fits: Vec<(CapResult, GbrtModel)> = cfg
        .max_leaves_grid
        .par_iter()
        .map(|&cap| {
            let model = fit_boosted(&slice.x, &slice.y, &train, &valid, &cfg.boost(cap))?;
            let importances =
                permutation_importance(&model, &slice.x, &slice.y, &valid, cfg.permutation_repeats, cfg.seed);
            let rank = 1 + importances
                .iter()
                .enumerate()
                .filter(|(j, v)| *j != t && **v >= importances[t])
                .count();
            let top = (0..importances.len())
                .fold(0, |best, j| if importances[j] > importances[best] { j } else { best });
            Ok((
                CapResult {
                    max_leaves: cap,
                    n_trees: model.trees.len(),
                    val_mse: model.val_mse(),
                    treatment_top: rank == 1 && importances[t] > 0.0,
                    treatment_rank: rank,
                    top_feature: slice.feature_names[top].clone(),
                    importances,
                },
                model,
            ))
        })
        .collect::<Result<_>>()?;
    let best_mse = fits.iter().map(|f| f.0.val_mse).fold(f64::INFINITY, f64::min);
    let consistent = fits
        .iter()
        .filter(|f| f.0.val_mse <= cfg.mse_tolerance * best_mse)
        .all(|f| f.0.treatment_top);
    let best_model = fits
        .iter()
        .min_by(|a, b| a.0.val_mse.total_cmp(&b.0.val_mse))
        .map(|f| f.1.clone())
        .expect("non-empty cap grid");

    let mut by_dose: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    for i in 0..slice.len() {
        let key = (slice.doses[i] * 1e6).round() as i64 as u64 ^ (1 << 63);
        let e = by_dose.entry(key).or_insert((slice.doses[i], 0.0, 0.0, 0));
        e.1 += slice.y[i];
        e.2 += best_model.predict(&slice.x[i]);
        e.3 += 1;
    }
    let outcome_curve = by_dose
        .into_values()
        .map(|(dose, obs, pred, n)| DoseFit {
            dose,
            observed: obs / n as f64,
            predicted: pred / n as f64,
        })
        .collect();
    Ok(StratumScan {
        stratum,
        n_rows: slice.len(),
        caps: fits.into_iter().map(|f| f.0).collect(),
        consistent,
        outcome_curve,
        best_model,
    })
}

/// Runs the leaf-cap scan on a prepared slice.
pub fn scan_slice(slice: &Slice, observable: Observable, cfg: &SurrogateConfig) -> Result<ConsistencyReport> {
    cfg.validate()?;
    if slice.len() < cfg.min_rows {
        return Err(Error::data(format!(
            "bit {} / {}: {} rows, at least {} needed",
            slice.bit,
            observable.column(),
            slice.len(),
            cfg.min_rows
        )));
    }
    let mut strata = vec![scan_stratum(slice, None, cfg)?];
    let mut skipped = Vec::new();
    if cfg.stratify {
        let counts: BTreeSet<u32> = slice.n_clicks.iter().copied().collect();
        for k in counts {
            let keep: Vec<usize> = (0..slice.len()).filter(|&i| slice.n_clicks[i] == k).collect();
            let units: BTreeSet<u32> = keep.iter().map(|&i| slice.units[i]).collect();
            if keep.len() < cfg.min_rows || units.len() < 2 {
                warn!("bit {} stratum n_clicks={k}: {} rows, skipped", slice.bit, keep.len());
                skipped.push((k, keep.len()));
                continue;
            }
            strata.push(scan_stratum(&slice.subset(&keep), Some(k), cfg)?);
        }
    }
    Ok(ConsistencyReport {
        bit: slice.bit,
        observable,
        config: cfg.clone(),
        strata,
        skipped,
    })
}

/// Builds the slice of `bit` from measurement records and scans it.
pub fn consistency_scan(
    records: &[ObservableRecord],
    covariates: &[Vec<f64>],
    n_bits: usize,
    bit: u32,
    observable: Observable,
    cfg: &SurrogateConfig,
) -> Result<ConsistencyReport> {
    let slice = Slice::build(records, covariates, n_bits, bit, observable)?;
    scan_slice(&slice, observable, cfg)
}
