//! Effect estimators over a randomized dose experiment in which every unit
//! is observed at every dose.
//!
//! All estimators pair units: a difference enters an estimate only when the
//! same unit has a present outcome at both doses involved. Aggregation uses
//! compensated summation in ascending `unit_id` order, so results do not
//! depend on record order.

mod estimators;
mod strata;
mod wasserstein;

pub use estimators::{ate_curve, dispersion_curve, ice_curve, theta_fs, theta_of_curve};
pub use strata::{sign_score, stratified_theta, stratify, NaConvention};
pub use wasserstein::{
    average_spectrum, spectral_distance_curve, wasserstein_1d, SpectraGrid, SpectralDistance,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::observables::{Observable, ObservableRecord};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut s = CompensatedSum::default();
    let mut n = 0usize;
    for v in values {
        s.add(v);
        n += 1;
    }
    (n > 0).then(|| s.value() / n as f64)
}

/// Outcomes of one bit and one observable, per dose and unit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    pub bit: u32,
    pub observable: String,
    /// Ascending doses.
    pub doses: Vec<f64>,
    /// Per dose: present outcomes keyed by unit.
    pub values: Vec<BTreeMap<u32, f64>>,
}

impl OutcomeGrid {
    pub fn new(bit: u32, observable: impl Into<String>, doses: Vec<f64>) -> Result<Self> {
        if doses.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::data("dose grid must be strictly increasing"));
        }
        let values = vec![BTreeMap::new(); doses.len()];
        Ok(Self {
            bit,
            observable: observable.into(),
            doses,
            values,
        })
    }

    /// Index of `dose` on the grid (exact or within 1e-9).
    pub fn dose_index(&self, dose: f64) -> Option<usize> {
        self.doses.iter().position(|d| (d - dose).abs() <= 1e-9)
    }

    /// Records `value` for `unit` at `dose`; duplicate (unit, dose) pairs
    /// are a data error.
    pub fn insert(&mut self, dose: f64, unit: u32, value: f64) -> Result<()> {
        let k = self
            .dose_index(dose)
            .ok_or_else(|| Error::data(format!("dose {dose} not on grid")))?;
        if self.values[k].insert(unit, value).is_some() {
            return Err(Error::data(format!("duplicate outcome for unit {unit} at dose {dose}")));
        }
        Ok(())
    }

    /// Builds the grid of `observable` for `bit` from measurement records;
    /// absent outcomes are left out. The dose grid is every dose seen for
    /// the bit.
    pub fn from_records(records: &[ObservableRecord], bit: u32, observable: Observable) -> Result<Self> {
        let doses = doses_of(records, bit);
        let mut grid = OutcomeGrid::new(bit, observable.column(), doses)?;
        for r in records.iter().filter(|r| r.bit == bit) {
            if let Some(v) = r.value(observable) {
                grid.insert(r.dose, r.unit_id, v)?;
            }
        }
        Ok(grid)
    }

    /// Copy keeping only units observed at every dose. On such a grid all
    /// estimators pair the same units, so incremental effects telescope
    /// exactly into average effects.
    pub fn balanced(&self) -> OutcomeGrid {
        let Some(first) = self.values.first() else {
            return self.clone();
        };
        let keep: Vec<u32> = first
            .keys()
            .copied()
            .filter(|u| self.values.iter().all(|m| m.contains_key(u)))
            .collect();
        OutcomeGrid {
            values: self
                .values
                .iter()
                .map(|m| keep.iter().map(|u| (*u, m[u])).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// Units present at both dose indices, with their two outcomes.
    pub(crate) fn paired(&self, a: usize, b: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let other = &self.values[b];
        self.values[a]
            .iter()
            .filter_map(move |(u, va)| other.get(u).map(|vb| (*va, *vb)))
    }
}

/// Sorted distinct doses recorded for `bit`.
pub fn doses_of(records: &[ObservableRecord], bit: u32) -> Vec<f64> {
    let mut doses: Vec<f64> = records.iter().filter(|r| r.bit == bit).map(|r| r.dose).collect();
    doses.sort_by(f64::total_cmp);
    doses.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    doses
}

/// Sorted distinct bits present in `records`.
pub fn bits_of(records: &[ObservableRecord]) -> Vec<u32> {
    let mut bits: Vec<u32> = records.iter().map(|r| r.bit).collect();
    bits.sort_unstable();
    bits.dedup();
    bits
}

/// Per-dose estimate for one bit and observable.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectCurve {
    pub bit: u32,
    pub observable: String,
    /// Reference dose; `None` for incremental curves.
    pub baseline: Option<f64>,
    pub doses: Vec<f64>,
    /// `None` where no unit could contribute.
    pub estimates: Vec<Option<f64>>,
    /// Units contributing at each dose.
    pub n: Vec<usize>,
}

impl EffectCurve {
    /// Estimate at `dose`, if the dose is on the curve and estimable.
    pub fn at(&self, dose: f64) -> Option<f64> {
        self.doses
            .iter()
            .position(|d| (d - dose).abs() <= 1e-9)
            .and_then(|k| self.estimates[k])
    }

    /// Least-squares slope of the present estimates with `lo <= dose <= hi`.
    pub fn slope_over(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .doses
            .iter()
            .zip(&self.estimates)
            .filter(|(d, _)| **d >= lo - 1e-9 && **d <= hi + 1e-9)
            .filter_map(|(d, e)| e.map(|v| (*d, v)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let mx = mean(pts.iter().map(|p| p.0))?;
        let my = mean(pts.iter().map(|p| p.1))?;
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}
