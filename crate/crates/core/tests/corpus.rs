//! Corpus generation and measurement through real WAV files.

use std::collections::BTreeMap;
use std::path::Path;

use cdev::causal::{sign_score, stratified_theta, stratify, NaConvention};
use cdev::corpus::{
    clip_file_name, generate_corpus, measure_corpus, simulate, write_observables, write_wav, Manifest,
    MeasureLevel,
};
use cdev::observables::Observable;
use cdev::signal::AudioClip;
use cdev::synthgen::SynthConfig;

fn small(n_units: usize, seed: u64, grid: &[f64]) -> Manifest {
    Manifest {
        dose_grid: grid.to_vec(),
        ..Manifest::builtin(n_units, seed, SynthConfig::default())
    }
}

fn csv_bytes(records: &[cdev::observables::ObservableRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    write_observables(records, &mut out).unwrap();
    out
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn top_dose_of_click_bit_gives_eleven_clicks() {
    let tmp = tempfile::tempdir().unwrap();
    let m = small(15, 1, &[-1.0, 12.5]);
    generate_corpus(&m, tmp.path(), false).unwrap();
    let report = measure_corpus(tmp.path(), MeasureLevel::Clicks).unwrap();
    assert!(report.skipped.is_empty());
    assert_eq!(report.records.len(), m.n_files());
    let mut counts = BTreeMap::<u32, usize>::new();
    for r in report.records.iter().filter(|r| r.bit == 1 && r.dose == 12.5) {
        *counts.entry(r.n_clicks).or_default() += 1;
    }
    let modal = counts.iter().max_by_key(|(_, c)| **c).map(|(k, _)| *k);
    assert_eq!(modal, Some(11), "{counts:?}");
}

#[test]
fn same_manifest_gives_identical_corpus_and_seed_changes_audio() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = small(2, 1, &[-1.0, 0.0, 4.0]);
    generate_corpus(&m, a.path(), false).unwrap();
    generate_corpus(&m, b.path(), false).unwrap();
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));

    generate_corpus(&small(2, 2, &[-1.0, 0.0, 4.0]), c.path(), false).unwrap();
    let (da, dc) = (dir_bytes(a.path()), dir_bytes(c.path()));
    assert_eq!(da.len(), dc.len());
    assert_eq!(da.keys().collect::<Vec<_>>(), dc.keys().collect::<Vec<_>>());
    let differing = da.iter().filter(|(k, v)| k.ends_with(".wav") && dc[*k] != **v).count();
    assert_eq!(differing, 2 * 5 * 3);
}

#[test]
fn in_memory_simulation_matches_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let m = small(2, 3, &[-1.0, 1.0, 6.5]);
    generate_corpus(&m, tmp.path(), false).unwrap();
    let measured = measure_corpus(tmp.path(), MeasureLevel::Full).unwrap();
    let simulated = simulate(&m, None, MeasureLevel::Full).unwrap();
    assert_eq!(measured.records, simulated);
    assert_eq!(measured.manifest, m);
    // re-measuring gives the same bytes
    let again = measure_corpus(tmp.path(), MeasureLevel::Full).unwrap();
    assert_eq!(csv_bytes(&again.records), csv_bytes(&measured.records));
}

#[test]
fn silent_external_corpus_has_no_clicks() {
    let tmp = tempfile::tempdir().unwrap();
    for (u, b, d) in [(0, 0, -1.0), (0, 0, 0.5), (1, 2, 12.5)] {
        write_wav(&AudioClip::silence(8000, 32000), &tmp.path().join(clip_file_name(u, b, d))).unwrap();
    }
    let report = measure_corpus(tmp.path(), MeasureLevel::Full).unwrap();
    assert_eq!(report.records.len(), 3);
    for r in &report.records {
        assert_eq!(r.n_clicks, 0);
        assert_eq!(r.mean_ici, None);
        assert_eq!(r.std_ici, None);
        assert_eq!(r.spectral_mean_hz, None);
        assert_eq!(r.coda_spectrum, None);
    }
    let text = String::from_utf8(csv_bytes(&report.records)).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",0,,,,,"), "{text}");
}

#[test]
fn click_bit_sign_scores_span_the_estimable_strata() {
    let m = Manifest::builtin(40, 1, SynthConfig::default());
    let records = simulate(&m, Some(&[1]), MeasureLevel::Clicks).unwrap();
    for obs in [Observable::MeanIci, Observable::StdIci] {
        let strata: Vec<u32> = stratify(&records, 1, obs).unwrap().into_keys().collect();
        let thetas = stratified_theta(&records, 1, obs, strata, None).unwrap();
        // two-click codas have a single interval, so their spread is
        // identically zero and so is its effect
        let estimable = thetas.values().filter(|t| t.is_some_and(|v| v != 0.0)).count() as i32;
        assert!(estimable >= 5, "{thetas:?}");
        let score = sign_score(&thetas, NaConvention::Zero);
        assert_eq!(score, -estimable, "{}: {thetas:?}", obs.column());
    }
}
