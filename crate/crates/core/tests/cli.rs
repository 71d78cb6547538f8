//! End-to-end runs of the `cdev` binary on a two-unit corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn cdev(args: &[&str]) -> Output {
    cdev_env(args, &[])
}

fn cdev_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cdev"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn cdev")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, corpus: &Path, extra: &str) -> PathBuf {
    let cfg = dir.join("experiment.txt");
    std::fs::write(&cfg, format!("n_units=2\noutput_dir={}\n{extra}", corpus.display())).unwrap();
    cfg
}

struct Fixture {
    root: PathBuf,
    corpus: PathBuf,
    obs: PathBuf,
}

/// Two-unit corpus measured with spectra, built once per test binary.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let root = scratch("fixture");
        let corpus = root.join("corpus");
        let cfg = write_config(&root, &corpus, "");
        let o = cdev(&["synth", "--config", s(&cfg)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let obs = root.join("obs.csv");
        let o = cdev(&["measure", "--in", s(&corpus), "--out", s(&obs), "--spectra"]);
        assert!(o.status.success(), "{}", stderr(&o));
        Fixture { root, corpus, obs }
    })
}

fn wav_count(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"))
        .count()
}

fn data_rows(csv: &Path) -> Vec<String> {
    std::fs::read_to_string(csv).unwrap().lines().skip(1).map(String::from).collect()
}

#[test]
fn synth_two_units_writes_280_files() {
    let f = fixture();
    assert_eq!(wav_count(&f.corpus), 280);
    assert!(f.corpus.join("manifest.txt").exists());
}

#[test]
fn synth_descending_grid_is_a_config_error() {
    let dir = scratch("descending");
    let cfg = write_config(&dir, &dir.join("c"), "dose_grid=1,0.5,0\n");
    let o = cdev(&["synth", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dose_grid"), "{}", stderr(&o));
    assert!(!dir.join("c").exists());
}

#[test]
fn synth_refuses_non_empty_dir_without_overwrite() {
    let dir = scratch("overwrite");
    let corpus = dir.join("c");
    let cfg = write_config(&dir, &corpus, "n_bits=1\ndose_grid=-1,0,1\n");
    assert!(cdev(&["synth", "--config", s(&cfg)]).status.success());
    let again = cdev(&["synth", "--config", s(&cfg)]);
    assert_eq!(again.status.code(), Some(3));
    let forced = cdev(&["synth", "--config", s(&cfg), "--overwrite"]);
    assert!(forced.status.success(), "{}", stderr(&forced));
    assert_eq!(wav_count(&corpus), 6);
}

#[test]
fn synth_missing_config_file_exits_2() {
    let o = cdev(&["synth", "--config", "/nonexistent/experiment.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn measure_writes_one_row_per_file_and_sidecars() {
    let f = fixture();
    assert_eq!(data_rows(&f.obs).len(), 280);
    assert!(f.root.join("obs.manifest.txt").exists());
    let spectra = data_rows(&f.root.join("obs.spectra.csv"));
    assert!(!spectra.is_empty());
    let header = std::fs::read_to_string(&f.obs).unwrap();
    assert!(header.starts_with(
        "unit_id,bit,dose,n_clicks,mean_ici,std_ici,spectral_mean_hz,spectral_mean_std_hz,coda_spectral_mean_hz\n"
    ));
}

#[test]
fn measure_skips_a_corrupt_wav() {
    let dir = scratch("corrupt");
    let corpus = dir.join("c");
    let cfg = write_config(&dir, &corpus, "n_bits=1\ndose_grid=-1,0,1,2\n");
    assert!(cdev(&["synth", "--config", s(&cfg)]).status.success());
    let victim = corpus.join("unit00001_bit0_t+001.000.wav");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..100]).unwrap();
    let out = dir.join("obs.csv");
    let o = cdev(&["measure", "--in", s(&corpus), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&out).len(), 7);
    assert!(stderr(&o).contains("unit00001_bit0_t+001.000.wav"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("skipped 1"));
    assert!(!dir.join("obs.spectra.csv").exists());
}

#[test]
fn measure_fails_when_most_files_are_unreadable() {
    let dir = scratch("mostly_bad");
    for name in ["unit0_bit0_t0.wav", "unit1_bit0_t0.wav", "unit2_bit0_t0.wav"] {
        std::fs::write(dir.join(name), b"not audio").unwrap();
    }
    let o = cdev(&["measure", "--in", s(&dir), "--out", s(&dir.join("obs.csv"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn measure_missing_directory_exits_3() {
    let o = cdev(&["measure", "--in", "/nonexistent/corpus", "--out", "/tmp/never.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

fn estimate_into(name: &str) -> PathBuf {
    let f = fixture();
    let out = scratch(name);
    let o = cdev(&["estimate", "--in", s(&f.obs), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn estimate_writes_every_report() {
    let out = estimate_into("estimate");
    for name in [
        "ate_nclicks.csv",
        "ate_mean_ici.csv",
        "ate_spectral_mean_hz.csv",
        "ice_nclicks.csv",
        "ice_std_ici.csv",
        "dispersion_nclicks.csv",
        "theta_fs.csv",
        "sign_scores.csv",
        "wasserstein.csv",
        "ate_nclicks.svg",
        "ice_coda_spectral_mean_hz.svg",
        "dispersion_nclicks.svg",
        "wasserstein.svg",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let svg = std::fs::read_to_string(out.join("ate_nclicks.svg")).unwrap();
    assert_eq!(svg.matches("stroke-dasharray").count(), 2);
    assert_eq!(svg.matches("<path").count(), 5);
}

#[test]
fn estimate_ate_is_zero_at_baseline() {
    let out = estimate_into("estimate_baseline");
    for (file, baseline) in [("ate_nclicks.csv", "-1"), ("ate_spectral_mean_hz.csv", "1")] {
        let rows = data_rows(&out.join(file));
        let at_base: Vec<&String> = rows.iter().filter(|r| r.split(',').nth(2) == Some(baseline)).collect();
        assert_eq!(at_base.len(), 5, "{file}");
        for r in at_base {
            assert_eq!(r.split(',').nth(3), Some("0"), "{file}: {r}");
        }
    }
    let w1 = data_rows(&out.join("wasserstein.csv"));
    assert_eq!(w1.len(), 5 * 28);
    assert!(w1.iter().filter(|r| r.split(',').nth(2) == Some("1")).all(|r| r.split(',').nth(3) == Some("0")));
}

#[test]
fn estimate_theta_has_both_ranges() {
    let out = estimate_into("estimate_theta");
    let rows = data_rows(&out.join("theta_fs.csv"));
    for bit in 0..5 {
        for range in ["all", "t>=1"] {
            let n = rows
                .iter()
                .filter(|r| {
                    let f: Vec<&str> = r.split(',').collect();
                    f[0] == bit.to_string() && f[1] == "n_clicks" && f[2] == "all" && f[3] == range
                })
                .count();
            assert_eq!(n, 1, "bit {bit} {range}");
        }
    }
    assert!(rows.iter().any(|r| r.contains("coda_spectrum_w1")));
}

#[test]
fn estimate_custom_baseline_and_off_grid_baseline() {
    let f = fixture();
    let out = scratch("estimate_custom");
    let o = cdev(&["estimate", "--in", s(&f.obs), "--out", s(&out), "--baseline-clicks", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&out.join("ate_nclicks.csv"));
    assert!(rows.iter().filter(|r| r.split(',').nth(2) == Some("0")).all(|r| r.split(',').nth(3) == Some("0")));

    let o = cdev(&["estimate", "--in", s(&f.obs), "--out", s(&out), "--baseline-spectral", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("0.3"), "{}", stderr(&o));
}

#[test]
fn missing_column_exits_2_naming_it() {
    let f = fixture();
    let dir = scratch("missing_column");
    let text = std::fs::read_to_string(&f.obs).unwrap();
    let trimmed: String = text
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            cols.remove(4);
            cols.join(",") + "\n"
        })
        .collect();
    let bad = dir.join("obs.csv");
    std::fs::write(&bad, trimmed).unwrap();
    std::fs::copy(f.root.join("obs.manifest.txt"), dir.join("obs.manifest.txt")).unwrap();

    let o = cdev(&["estimate", "--in", s(&bad), "--out", s(&dir.join("est"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mean_ici"), "{}", stderr(&o));

    let o = cdev(&["surrogate", "--in", s(&bad), "--bit", "1", "--observable", "n_clicks", "--out", s(&dir.join("sur"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mean_ici"), "{}", stderr(&o));
}

#[test]
fn surrogate_writes_report() {
    let f = fixture();
    let out = scratch("surrogate");
    let o = cdev(&["surrogate", "--in", s(&f.obs), "--bit", "1", "--observable", "n_clicks", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("surrogate_bit1_n_clicks.csv")).unwrap();
    assert!(csv.starts_with("bit,observable,stratum,max_leaves,val_mse,treatment_rank,top_feature,consistent_flag\n"));
    assert_eq!(csv.lines().count(), 1 + 7);
    let txt = std::fs::read_to_string(out.join("surrogate_bit1_n_clicks.txt")).unwrap();
    assert!(txt.contains("CONSISTENT"));
}

#[test]
fn surrogate_rejects_bad_arguments() {
    let f = fixture();
    let out = scratch("surrogate_bad");
    let o = cdev(&["surrogate", "--in", s(&f.obs), "--bit", "1", "--observable", "loudness", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("loudness"));
    let o = cdev(&["surrogate", "--in", s(&f.obs), "--bit", "9", "--observable", "n_clicks", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let lonely = out.join("obs.csv");
    std::fs::copy(&f.obs, &lonely).unwrap();
    let o = cdev(&["surrogate", "--in", s(&lonely), "--bit", "1", "--observable", "n_clicks", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("manifest"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(cdev(&["transmogrify"]).status.code(), Some(2));
    assert_eq!(cdev(&["estimate"]).status.code(), Some(2));
}

#[test]
fn rerun_and_thread_count_give_identical_csvs() {
    let f = fixture();
    let out = scratch("rerun");
    let again = out.join("again.csv");
    let o = cdev_env(
        &["measure", "--in", s(&f.corpus), "--out", s(&again), "--spectra"],
        &[("CDEV_THREADS", "3")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&f.obs).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(
        std::fs::read(f.root.join("obs.spectra.csv")).unwrap(),
        std::fs::read(out.join("again.spectra.csv")).unwrap()
    );

    let (e1, e2) = (out.join("e1"), out.join("e2"));
    assert!(cdev(&["estimate", "--in", s(&f.obs), "--out", s(&e1)]).status.success());
    assert!(cdev_env(&["estimate", "--in", s(&again), "--out", s(&e2)], &[("CDEV_THREADS", "1")]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(&e1).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 20);
    for n in names {
        assert_eq!(std::fs::read(e1.join(&n)).unwrap(), std::fs::read(e2.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = cdev_env(&["estimate", "--in", "x.csv", "--out", "y"], &[("CDEV_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn remeasuring_from_the_manifest_alone_reproduces_the_csv() {
    // the corpus manifest, not the experiment config, drives measurement
    let f = fixture();
    let dir = scratch("manifest_only");
    let corpus = dir.join("c");
    std::fs::create_dir_all(&corpus).unwrap();
    for e in std::fs::read_dir(&f.corpus).unwrap() {
        let p = e.unwrap().path();
        std::fs::copy(&p, corpus.join(p.file_name().unwrap())).unwrap();
    }
    let out = dir.join("obs.csv");
    assert!(cdev(&["measure", "--in", s(&corpus), "--out", s(&out), "--spectra"]).status.success());
    assert_eq!(std::fs::read(&f.obs).unwrap(), std::fs::read(&out).unwrap());
}
