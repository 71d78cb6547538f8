use super::{theta_of_curve, CompensatedSum, EffectCurve};
use crate::error::{Error, Result};
use crate::signal::Spectrum;

const MASS_TOL: f64 = 1e-9;

fn check_distribution(s: &Spectrum, name: &str) -> Result<()> {
    if s.bin_freqs.len() != s.power.len() || s.power.is_empty() {
        return Err(Error::data(format!("{name}: malformed spectrum")));
    }
    if s.power.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::data(format!("{name}: negative or non-finite mass")));
    }
    let total: CompensatedSum = s.power.iter().copied().collect();
    if (total.value() - 1.0).abs() > MASS_TOL {
        return Err(Error::data(format!(
            "{name}: not normalized (total mass {})",
            total.value()
        )));
    }
    Ok(())
}

/// First Wasserstein distance (Hz) between two unit-mass spectra on the
/// same bin grid: the integral of the absolute CDF difference.
pub fn wasserstein_1d(p: &Spectrum, q: &Spectrum) -> Result<f64> {
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    if p.bin_freqs.len() != q.bin_freqs.len()
        || p.bin_freqs
            .iter()
            .zip(&q.bin_freqs)
            .any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::data("spectra are on different bin grids"));
    }
    let mut cdf_p = CompensatedSum::default();
    let mut cdf_q = CompensatedSum::default();
    let mut total = CompensatedSum::default();
    for j in 0..p.power.len() - 1 {
        cdf_p.add(p.power[j]);
        cdf_q.add(q.power[j]);
        let width = p.bin_freqs[j + 1] - p.bin_freqs[j];
        total.add((cdf_p.value() - cdf_q.value()).abs() * width);
    }
    Ok(total.value())
}

/// Unit-mass spectra of one bit, per dose and unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraGrid {
    pub bit: u32,
    pub doses: Vec<f64>,
    pub spectra: Vec<Vec<(u32, Spectrum)>>,
}

/// Bin-wise mean of unit-mass spectra, renormalised; `None` for an empty
/// list or zero total.
pub fn average_spectrum(spectra: &[&Spectrum]) -> Result<Option<Spectrum>> {
    let Some(first) = spectra.first() else {
        return Ok(None);
    };
    let bins = first.power.len();
    let mut acc = vec![CompensatedSum::default(); bins];
    for s in spectra {
        if s.power.len() != bins {
            return Err(Error::data("spectra are on different bin grids"));
        }
        for (a, p) in acc.iter_mut().zip(&s.power) {
            a.add(*p);
        }
    }
    let avg = Spectrum {
        bin_freqs: first.bin_freqs.clone(),
        power: acc.iter().map(|a| a.value() / spectra.len() as f64).collect(),
    };
    Ok(avg.normalized())
}

/// Distance curve of dose-averaged spectra to the baseline average, with
/// its expected infinitesimal effect.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDistance {
    pub curve: EffectCurve,
    pub theta: Option<f64>,
    pub theta_restricted: Option<f64>,
}

/// W1 distance of each dose's average spectrum to the baseline dose's
/// average spectrum; doses with no spectra are absent.
pub fn spectral_distance_curve(
    grid: &SpectraGrid,
    baseline: f64,
    dose_min: Option<f64>,
) -> Result<SpectralDistance> {
    let b = grid
        .doses
        .iter()
        .position(|d| (d - baseline).abs() <= 1e-9)
        .ok_or_else(|| Error::config(format!("baseline dose {baseline} is not on the grid")))?;
    let averages: Vec<Option<Spectrum>> = grid
        .spectra
        .iter()
        .map(|list| average_spectrum(&list.iter().map(|(_, s)| s).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let base = averages[b].as_ref();
    let estimates: Vec<Option<f64>> = averages
        .iter()
        .enumerate()
        .map(|(k, avg)| match (avg, base) {
            (Some(_), Some(_)) if k == b => Ok(Some(0.0)),
            (Some(a), Some(base)) => wasserstein_1d(a, base).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;
    let curve = EffectCurve {
        bit: grid.bit,
        observable: "coda_spectrum_w1".into(),
        baseline: Some(grid.doses[b]),
        doses: grid.doses.clone(),
        estimates,
        n: grid.spectra.iter().map(|l| l.len()).collect(),
    };
    let slopes = EffectCurve {
        baseline: None,
        doses: curve.doses[..curve.doses.len().saturating_sub(1)].to_vec(),
        estimates: (0..curve.doses.len().saturating_sub(1))
            .map(|k| match (curve.estimates[k], curve.estimates[k + 1]) {
                (Some(a), Some(c)) => Some((c - a) / (curve.doses[k + 1] - curve.doses[k])),
                _ => None,
            })
            .collect(),
        n: curve.n[..curve.n.len().saturating_sub(1)].to_vec(),
        ..curve.clone()
    };
    Ok(SpectralDistance {
        theta: theta_of_curve(&slopes, None).ok(),
        theta_restricted: theta_of_curve(&slopes, dose_min).ok(),
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(bins: usize, df: f64) -> Vec<f64> {
        (0..bins).map(|j| j as f64 * df).collect()
    }

    fn point_mass(bins: usize, df: f64, at: usize) -> Spectrum {
        let mut power = vec![0.0; bins];
        power[at] = 1.0;
        Spectrum {
            bin_freqs: grid(bins, df),
            power,
        }
    }

    fn random_spectrum(rng: &mut ChaCha8Rng, bins: usize) -> Spectrum {
        let raw: Vec<f64> = (0..bins).map(|_| rng.random::<f64>().powi(3)).collect();
        Spectrum {
            bin_freqs: grid(bins, 62.5),
            power: raw,
        }
        .normalized()
        .unwrap()
    }

    #[test]
    fn identity_and_point_masses() {
        let p = point_mass(64, 62.5, 10);
        assert_eq!(wasserstein_1d(&p, &p).unwrap(), 0.0);
        let q = point_mass(64, 62.5, 30);
        assert_eq!(wasserstein_1d(&p, &q).unwrap(), 20.0 * 62.5);
    }

    #[test]
    fn half_mass_example() {
        let mut u = point_mass(8, 62.5, 0);
        u.power[0] = 0.5;
        u.power[1] = 0.5;
        let z = point_mass(8, 62.5, 0);
        assert_eq!(wasserstein_1d(&u, &z).unwrap(), 62.5 / 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = point_mass(8, 62.5, 0);
        let q = point_mass(9, 62.5, 0);
        assert!(wasserstein_1d(&p, &q).is_err());
        let mut r = point_mass(8, 62.5, 0);
        r.power[0] = 2.0;
        assert!(wasserstein_1d(&p, &r).is_err());
        let shifted = Spectrum {
            bin_freqs: grid(8, 50.0),
            power: p.power.clone(),
        };
        assert!(wasserstein_1d(&p, &shifted).is_err());
    }

    #[test]
    fn metric_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let (a, b, c) = (
                random_spectrum(&mut rng, 129),
                random_spectrum(&mut rng, 129),
                random_spectrum(&mut rng, 129),
            );
            let ab = wasserstein_1d(&a, &b).unwrap();
            let ba = wasserstein_1d(&b, &a).unwrap();
            let bc = wasserstein_1d(&b, &c).unwrap();
            let ac = wasserstein_1d(&a, &c).unwrap();
            assert!(ab >= 0.0);
            assert!((ab - ba).abs() <= 1e-12);
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn distance_curve_of_moving_point_mass() {
        let doses: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let g = SpectraGrid {
            bit: 0,
            doses: doses.clone(),
            spectra: doses
                .iter()
                .map(|d| {
                    (0..3u32)
                        .map(|u| (u, point_mass(128, 62.5, 20 + 4 * *d as usize)))
                        .collect()
                })
                .collect(),
        };
        let out = spectral_distance_curve(&g, 1.0, Some(1.0)).unwrap();
        for (d, e) in doses.iter().zip(&out.curve.estimates) {
            assert_eq!(e.unwrap(), (d - 1.0).abs() * 4.0 * 62.5);
        }
        assert_eq!(out.curve.at(1.0), Some(0.0));
        assert_eq!(out.theta_restricted, Some(250.0));

        let flat = SpectraGrid {
            spectra: doses.iter().map(|_| vec![(0, point_mass(16, 1.0, 3))]).collect(),
            ..g.clone()
        };
        let out = spectral_distance_curve(&flat, 1.0, None).unwrap();
        assert!(out.curve.estimates.iter().all(|e| *e == Some(0.0)));
    }

    #[test]
    fn silent_dose_absent() {
        let g = SpectraGrid {
            bit: 0,
            doses: vec![0.0, 1.0],
            spectra: vec![vec![], vec![(0, point_mass(4, 1.0, 1))]],
        };
        let out = spectral_distance_curve(&g, 1.0, None).unwrap();
        assert_eq!(out.curve.estimates, vec![None, Some(0.0)]);
    }
}
