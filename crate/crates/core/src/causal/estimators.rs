use super::{mean, CompensatedSum, EffectCurve, OutcomeGrid};
use crate::error::{Error, Result};

fn baseline_index(grid: &OutcomeGrid, baseline: f64) -> Result<usize> {
    grid.dose_index(baseline).ok_or_else(|| {
        Error::config(format!(
            "baseline dose {baseline} is not on the grid of bit {} / {}",
            grid.bit, grid.observable
        ))
    })
}

/// Average treatment effect of each dose against `baseline`: the mean of
/// within-unit differences `Y_i(t) - Y_i(baseline)` over units observed at
/// both doses. Exactly zero at the baseline.
pub fn ate_curve(grid: &OutcomeGrid, baseline: f64) -> Result<EffectCurve> {
    let b = baseline_index(grid, baseline)?;
    let mut estimates = Vec::with_capacity(grid.doses.len());
    let mut n = Vec::with_capacity(grid.doses.len());
    for k in 0..grid.doses.len() {
        let diffs: Vec<f64> = grid.paired(k, b).map(|(yt, yb)| yt - yb).collect();
        n.push(diffs.len());
        estimates.push(if k == b && !diffs.is_empty() {
            Some(0.0)
        } else {
            mean(diffs)
        });
    }
    Ok(EffectCurve {
        bit: grid.bit,
        observable: grid.observable.clone(),
        baseline: Some(grid.doses[b]),
        doses: grid.doses.clone(),
        estimates,
        n,
    })
}

fn population_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values.iter().copied())?;
    let var = mean(values.iter().map(|v| (v - m).powi(2)))?;
    Some(var.sqrt())
}

/// Across-unit population standard deviation at each dose minus the same
/// quantity at `baseline`. Doses with fewer than two units are absent.
pub fn dispersion_curve(grid: &OutcomeGrid, baseline: f64) -> Result<EffectCurve> {
    let b = baseline_index(grid, baseline)?;
    let stds: Vec<Option<f64>> = grid
        .values
        .iter()
        .map(|m| population_std(&m.values().copied().collect::<Vec<_>>()))
        .collect();
    let base = stds[b];
    let estimates = stds
        .iter()
        .enumerate()
        .map(|(k, s)| match (s, base) {
            (Some(_), Some(_)) if k == b => Some(0.0),
            (Some(s), Some(base)) => Some(s - base),
            _ => None,
        })
        .collect();
    Ok(EffectCurve {
        bit: grid.bit,
        observable: grid.observable.clone(),
        baseline: Some(grid.doses[b]),
        doses: grid.doses.clone(),
        estimates,
        n: grid.values.iter().map(|m| m.len()).collect(),
    })
}

/// Incremental effect on each grid step: mean forward difference quotient
/// over units observed at both ends, indexed by the left endpoint.
pub fn ice_curve(grid: &OutcomeGrid) -> Result<EffectCurve> {
    if grid.doses.len() < 2 {
        return Err(Error::data(format!(
            "incremental effect needs at least two doses (bit {} / {})",
            grid.bit, grid.observable
        )));
    }
    let steps = grid.doses.len() - 1;
    let mut estimates = Vec::with_capacity(steps);
    let mut n = Vec::with_capacity(steps);
    for k in 0..steps {
        let dt = grid.doses[k + 1] - grid.doses[k];
        let diffs: Vec<f64> = grid.paired(k + 1, k).map(|(hi, lo)| hi - lo).collect();
        n.push(diffs.len());
        estimates.push(mean(diffs).map(|m| m / dt));
    }
    Ok(EffectCurve {
        bit: grid.bit,
        observable: grid.observable.clone(),
        baseline: None,
        doses: grid.doses[..steps].to_vec(),
        estimates,
        n,
    })
}

/// Mean of the present estimates of an incremental curve whose left
/// endpoint is at least `dose_min`.
pub fn theta_of_curve(curve: &EffectCurve, dose_min: Option<f64>) -> Result<f64> {
    let lo = dose_min.unwrap_or(f64::NEG_INFINITY);
    let kept: CompensatedSum = curve
        .doses
        .iter()
        .zip(&curve.estimates)
        .filter(|(d, _)| **d >= lo - 1e-9)
        .filter_map(|(_, e)| *e)
        .collect();
    let count = curve
        .doses
        .iter()
        .zip(&curve.estimates)
        .filter(|(d, e)| **d >= lo - 1e-9 && e.is_some())
        .count();
    if count == 0 {
        return Err(Error::data(format!(
            "no estimable grid step for bit {} / {} with dose >= {lo}",
            curve.bit, curve.observable
        )));
    }
    Ok(kept.value() / count as f64)
}

/// Expected effect of an infinitesimal dose increase: mean of the
/// incremental curve, optionally restricted to steps starting at or above
/// `dose_min`.
pub fn theta_fs(grid: &OutcomeGrid, dose_min: Option<f64>) -> Result<f64> {
    theta_of_curve(&ice_curve(grid)?, dose_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_from(doses: &[f64], mut f: impl FnMut(u32, f64) -> Option<f64>, units: u32) -> OutcomeGrid {
        let mut g = OutcomeGrid::new(1, "y", doses.to_vec()).unwrap();
        for &d in doses {
            for u in 0..units {
                if let Some(v) = f(u, d) {
                    g.insert(d, u, v).unwrap();
                }
            }
        }
        g
    }

    fn default_doses() -> Vec<f64> {
        (0..28).map(|k| -1.0 + 0.5 * k as f64).collect()
    }

    #[test]
    fn ate_constant_is_zero() {
        let g = grid_from(&default_doses(), |_, _| Some(4.2), 10);
        let c = ate_curve(&g, -1.0).unwrap();
        assert!(c.estimates.iter().all(|e| *e == Some(0.0)));
    }

    #[test]
    fn ate_linear_outcome() {
        let g = grid_from(&default_doses(), |_, d| Some(d), 10);
        let c = ate_curve(&g, 1.0).unwrap();
        for (d, e) in c.doses.iter().zip(&c.estimates) {
            assert!((e.unwrap() - (d - 1.0)).abs() < 1e-12);
        }
        assert_eq!(c.at(1.0), Some(0.0));
    }

    #[test]
    fn ate_hand_example() {
        let mut g = OutcomeGrid::new(0, "y", vec![0.0, 1.0]).unwrap();
        g.insert(0.0, 0, 3.0).unwrap();
        g.insert(0.0, 1, 5.0).unwrap();
        g.insert(1.0, 0, 6.0).unwrap();
        g.insert(1.0, 1, 10.0).unwrap();
        let c = ate_curve(&g, 0.0).unwrap();
        assert_eq!(c.at(1.0), Some(4.0));
        assert_eq!(c.n, vec![2, 2]);
    }

    #[test]
    fn ate_pairs_units_and_marks_empty_doses() {
        let mut g = OutcomeGrid::new(0, "y", vec![0.0, 1.0, 2.0]).unwrap();
        g.insert(0.0, 0, 1.0).unwrap();
        g.insert(0.0, 1, 100.0).unwrap();
        g.insert(1.0, 0, 3.0).unwrap();
        let c = ate_curve(&g, 0.0).unwrap();
        // unit 1 has no outcome at dose 1, so only unit 0 is paired
        assert_eq!(c.at(1.0), Some(2.0));
        assert_eq!(c.estimates[2], None);
        assert_eq!(c.n, vec![2, 1, 0]);
        assert!(matches!(ate_curve(&g, 0.25), Err(Error::Config(_))));
    }

    #[test]
    fn dispersion_examples() {
        let mut g = OutcomeGrid::new(0, "y", vec![0.0, 1.0]).unwrap();
        for (u, v) in [(0, 4.0), (1, 6.0)] {
            g.insert(0.0, u, v).unwrap();
        }
        for (u, v) in [(0, 2.0), (1, 8.0)] {
            g.insert(1.0, u, v).unwrap();
        }
        let c = dispersion_curve(&g, 0.0).unwrap();
        assert_eq!(c.at(1.0), Some(2.0));
        assert_eq!(c.at(0.0), Some(0.0));

        let same = grid_from(&default_doses(), |_, d| Some(d * d), 5);
        assert!(dispersion_curve(&same, -1.0).unwrap().estimates.iter().all(|e| *e == Some(0.0)));

        let h = grid_from(&default_doses(), |u, d| Some(u as f64 * d), 5);
        let h2 = grid_from(&default_doses(), |u, d| Some(2.0 * u as f64 * d), 5);
        let (a, b) = (dispersion_curve(&h, -1.0).unwrap(), dispersion_curve(&h2, -1.0).unwrap());
        for (x, y) in a.estimates.iter().zip(&b.estimates) {
            assert!((2.0 * x.unwrap() - y.unwrap()).abs() < 1e-9);
        }

        let single = grid_from(&[0.0, 1.0], |_, d| Some(d), 1);
        assert!(dispersion_curve(&single, 0.0).unwrap().estimates.iter().all(|e| e.is_none()));
    }

    #[test]
    fn ice_examples() {
        let g = grid_from(&default_doses(), |_, d| Some(2.5 * d), 4);
        let c = ice_curve(&g).unwrap();
        assert_eq!(c.doses.len(), 27);
        assert!(c.estimates.iter().all(|e| (e.unwrap() - 2.5).abs() < 1e-12));
        let flat = grid_from(&default_doses(), |_, _| Some(1.0), 4);
        assert!(ice_curve(&flat).unwrap().estimates.iter().all(|e| *e == Some(0.0)));
        assert!(ice_curve(&grid_from(&[0.0], |_, _| Some(1.0), 2)).is_err());
    }

    #[test]
    fn theta_examples() {
        let g = grid_from(&default_doses(), |_, d| Some(-0.7 * d), 4);
        assert!((theta_fs(&g, None).unwrap() + 0.7).abs() < 1e-12);
        assert!((theta_fs(&g, Some(1.0)).unwrap() + 0.7).abs() < 1e-12);

        let curve = |vals: &[f64]| EffectCurve {
            bit: 0,
            observable: "y".into(),
            baseline: None,
            doses: (0..vals.len()).map(|k| k as f64).collect(),
            estimates: vals.iter().map(|v| Some(*v)).collect(),
            n: vec![1; vals.len()],
        };
        assert_eq!(theta_of_curve(&curve(&[1.0, -1.0]), None).unwrap(), 0.0);
        let t = theta_of_curve(&curve(&[0.1, 0.2, 0.3]), Some(1.0)).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
        assert!(theta_of_curve(&curve(&[0.1]), Some(5.0)).is_err());
    }

    #[test]
    fn telescoping_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let doses: Vec<f64> = {
            let mut d: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..12.5)).collect();
            d.sort_by(f64::total_cmp);
            d.dedup();
            d
        };
        let vals: Vec<Vec<f64>> = (0..60)
            .map(|_| doses.iter().map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let g = grid_from(&doses, |u, d| {
            let k = doses.iter().position(|x| *x == d).unwrap();
            Some(vals[u as usize][k])
        }, 60);
        let ice = ice_curve(&g).unwrap();
        for (bi, &base) in doses.iter().enumerate() {
            let ate = ate_curve(&g, base).unwrap();
            for (ti, _) in doses.iter().enumerate() {
                let (lo, hi, sign) = if ti >= bi { (bi, ti, 1.0) } else { (ti, bi, -1.0) };
                let tele: CompensatedSum = (lo..hi)
                    .map(|k| ice.estimates[k].unwrap() * (doses[k + 1] - doses[k]))
                    .collect();
                let want = ate.estimates[ti].unwrap();
                let got = sign * tele.value();
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn baseline_shift_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let doses = default_doses();
        let g = grid_from(&doses, |_, _| Some(rng.random_range(0.0..10.0)), 30);
        let from_s = ate_curve(&g, 3.0).unwrap();
        let from_t = ate_curve(&g, -1.0).unwrap();
        let shift = from_s.at(-1.0).unwrap();
        for (a, b) in from_s.estimates.iter().zip(&from_t.estimates) {
            assert!((a.unwrap() - shift - b.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn order_independent() {
        let doses = [0.0, 1.0, 2.0];
        let mut a = OutcomeGrid::new(0, "y", doses.to_vec()).unwrap();
        let mut b = a.clone();
        let entries: Vec<(f64, u32, f64)> = (0..20u32)
            .flat_map(|u| doses.iter().map(move |&d| (d, u, (u as f64 * 0.37 + d).sin())))
            .collect();
        for &(d, u, v) in &entries {
            a.insert(d, u, v).unwrap();
        }
        for &(d, u, v) in entries.iter().rev() {
            b.insert(d, u, v).unwrap();
        }
        assert_eq!(ate_curve(&a, 0.0).unwrap(), ate_curve(&b, 0.0).unwrap());
        assert_eq!(ice_curve(&a).unwrap(), ice_curve(&b).unwrap());
    }
}
