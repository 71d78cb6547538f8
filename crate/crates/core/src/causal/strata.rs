use std::collections::BTreeMap;

use super::{doses_of, theta_fs, OutcomeGrid};
use crate::error::Result;
use crate::observables::{Observable, ObservableRecord};

/// Splits one bit's outcomes by detected click count. A record enters
/// stratum `k` when its `n_clicks == k` and the observable is present;
/// strata without any such record do not appear. Every stratum grid spans
/// the bit's full dose grid.
pub fn stratify(
    records: &[ObservableRecord],
    bit: u32,
    observable: Observable,
) -> Result<BTreeMap<u32, OutcomeGrid>> {
    let doses = doses_of(records, bit);
    let mut strata: BTreeMap<u32, OutcomeGrid> = BTreeMap::new();
    for r in records.iter().filter(|r| r.bit == bit) {
        let Some(v) = r.value(observable) else {
            continue;
        };
        let grid = match strata.entry(r.n_clicks) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(OutcomeGrid::new(bit, observable.column(), doses.clone())?)
            }
        };
        grid.insert(r.dose, r.unit_id, v)?;
    }
    Ok(strata)
}

/// Per-stratum expected infinitesimal effect over `strata_range`; `None`
/// marks a stratum that is empty or has no estimable grid step.
pub fn stratified_theta(
    records: &[ObservableRecord],
    bit: u32,
    observable: Observable,
    strata_range: impl IntoIterator<Item = u32>,
    dose_min: Option<f64>,
) -> Result<BTreeMap<u32, Option<f64>>> {
    let strata = stratify(records, bit, observable)?;
    Ok(strata_range
        .into_iter()
        .map(|k| {
            let theta = strata.get(&k).and_then(|g| theta_fs(g, dose_min).ok());
            (k, theta)
        })
        .collect())
}

/// How an N/A stratum enters the sign score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NaConvention {
    /// N/A contributes 0.
    #[default]
    Zero,
    /// N/A contributes -1.
    MinusOne,
}

impl NaConvention {
    pub fn name(self) -> &'static str {
        match self {
            NaConvention::Zero => "na_zero",
            NaConvention::MinusOne => "na_minus_one",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "na_zero" | "zero" | "0" => Some(NaConvention::Zero),
            "na_minus_one" | "minus_one" | "-1" => Some(NaConvention::MinusOne),
            _ => None,
        }
    }
}

/// Sum over strata of `sign(theta)`, with `sign(0) = 0`.
pub fn sign_score(theta_by_stratum: &BTreeMap<u32, Option<f64>>, na: NaConvention) -> i32 {
    theta_by_stratum
        .values()
        .map(|t| match t {
            Some(v) if *v > 0.0 => 1,
            Some(v) if *v < 0.0 => -1,
            Some(_) => 0,
            None => match na {
                NaConvention::Zero => 0,
                NaConvention::MinusOne => -1,
            },
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(unit: u32, dose: f64, n: u32, ici: Option<f64>) -> ObservableRecord {
        ObservableRecord {
            unit_id: unit,
            bit: 0,
            dose,
            n_clicks: n,
            mean_ici: ici,
            std_ici: ici.map(|_| 0.0),
            spectral_mean_hz: None,
            spectral_mean_std_hz: None,
            coda_spectral_mean_hz: None,
            coda_spectrum: None,
        }
    }

    #[test]
    fn single_stratum() {
        let recs: Vec<_> = (0..4)
            .flat_map(|u| [0.0, 1.0].map(|d| record(u, d, 5, Some(0.2))))
            .collect();
        let s = stratify(&recs, 0, Observable::MeanIci).unwrap();
        assert_eq!(s.keys().copied().collect::<Vec<_>>(), vec![5]);
        assert_eq!(s[&5].values.iter().map(|m| m.len()).sum::<usize>(), 8);
    }

    #[test]
    fn absent_observables_are_excluded_and_partition_holds() {
        let recs = vec![
            record(0, 0.0, 0, None),
            record(1, 0.0, 3, Some(0.1)),
            record(2, 0.0, 4, Some(0.1)),
            record(3, 0.0, 4, Some(0.1)),
            record(0, 1.0, 1, None),
        ];
        let s = stratify(&recs, 0, Observable::MeanIci).unwrap();
        assert!(!s.contains_key(&0) && !s.contains_key(&1));
        let total: usize = s.values().flat_map(|g| g.values.iter().map(|m| m.len())).sum();
        let present = recs.iter().filter(|r| r.mean_ici.is_some()).count();
        assert_eq!(total, present);
        // click count itself is always present
        let s = stratify(&recs, 0, Observable::NClicks).unwrap();
        let total: usize = s.values().flat_map(|g| g.values.iter().map(|m| m.len())).sum();
        assert_eq!(total, recs.len());
    }

    #[test]
    fn sign_score_basics() {
        let m = |v: &[Option<f64>]| -> BTreeMap<u32, Option<f64>> {
            v.iter().enumerate().map(|(k, t)| (k as u32 + 2, *t)).collect()
        };
        assert_eq!(sign_score(&m(&[Some(1.0); 4]), NaConvention::Zero), 4);
        assert_eq!(sign_score(&m(&[Some(0.5), Some(-0.5), Some(0.0)]), NaConvention::Zero), 0);
        assert_eq!(sign_score(&m(&[Some(0.5), None]), NaConvention::Zero), 1);
        assert_eq!(sign_score(&m(&[Some(0.5), None]), NaConvention::MinusOne), 0);
    }

    #[test]
    fn stratified_theta_marks_missing() {
        let mut recs = Vec::new();
        for u in 0..3 {
            for (i, d) in [0.0, 1.0, 2.0].iter().enumerate() {
                recs.push(record(u, *d, 5, Some(0.3 - 0.01 * i as f64)));
            }
        }
        let t = stratified_theta(&recs, 0, Observable::MeanIci, 4..=6, None).unwrap();
        assert_eq!(t[&4], None);
        assert!((t[&5].unwrap() + 0.01).abs() < 1e-12);
        assert_eq!(t[&6], None);
    }
}
