mod common;

use std::fs;

use common::*;
use sgl_midas::simulation::{replication_rng, simulate_pseudo_empirical, PseudoEmpiricalConfig};

fn small_scenario(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    fs::write(
        &path,
        r#"{"sample_size": 50, "seed": 11, "replications": 10, "methods": ["FLOW", "LASSO-M"], "nowcast": false}"#,
    )
    .unwrap();
    path
}

#[test]
fn simulate_is_byte_identical_across_runs_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = small_scenario(tmp.path());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for out in [&a, &b] {
        ok(&sglm(&["simulate", "--scenario", p(&sc), "--out", p(out)]));
    }
    assert_eq!(snapshot(&a), snapshot(&b));
    ok(&sglm(&["replay", "--manifest", p(&a.join("manifest.json")), "--out", p(&c)]));
    assert_eq!(snapshot(&a), snapshot(&c));

    let (h, rows) = read_csv(&a.join("results.csv"));
    assert_eq!(h, ["table", "method", "weight", "mean", "se"]);
    assert!(rows.iter().any(|r| r[0] == "forecast_msfe" && r[1] == "LASSO-M"));
    assert!(rows.iter().any(|r| r[0] == "mise" && r[1] == "LASSO-M" && r[2] == "Beta(2,2)"));
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["scenario"]["seed"], 11);
    assert_eq!(manifest["scenario"]["replications"], 10);
}

#[test]
fn simulate_overrides_replications_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = small_scenario(tmp.path());
    let out = tmp.path().join("o");
    ok(&sglm(&["simulate", "--scenario", p(&sc), "--replications", "2", "--seed", "5", "--out", p(&out)]));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["scenario"]["seed"], 5);
    assert_eq!(manifest["scenario"]["replications"], 2);
}

#[test]
fn simulate_rejects_unknown_keys_and_zero_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("bad.json");
    fs::write(&sc, r#"{"sample_size": 50, "sample_sise": 3}"#).unwrap();
    let o = sglm(&["simulate", "--scenario", p(&sc), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sample_sise"), "{}", stderr(&o));

    let sc = small_scenario(tmp.path());
    let o = sglm(&["simulate", "--scenario", p(&sc), "--replications", "0", "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replications must be ≥ 1"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_validation_code() {
    let o = sglm(&["nowcast", "--config", "x.json", "--horizon", "3m"]);
    assert_eq!(o.status.code(), Some(1));
    let o = sglm(&["fit", "--config", "x.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_above_lambda_max_zeroes_penalized_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = example_dir().join("config.json");
    let first = tmp.path().join("first");
    ok(&sglm(&["fit", "--config", p(&cfg), "--lambda", "0.1", "--alpha", "0.5", "--out", p(&first)]));
    let lmax = read_json(&first.join("fit.json"))["lambda_max"].as_f64().unwrap();
    assert!(lmax > 0.0);

    for lambda in [lmax, 2.0 * lmax] {
        let out = tmp.path().join(format!("l{lambda}"));
        ok(&sglm(&["fit", "--config", p(&cfg), "--lambda", &lambda.to_string(), "--alpha", "0.5", "--out", p(&out)]));
        let (h, rows) = read_csv(&out.join("coefficients.csv"));
        assert_eq!(h, ["index", "name", "group", "penalized", "category", "coefficient"]);
        for r in rows.iter().filter(|r| r[3] == "true") {
            assert_eq!(r[5].parse::<f64>().unwrap(), 0.0, "{r:?}");
        }
        let intercept = rows.iter().find(|r| r[1] == "intercept").unwrap();
        assert_eq!(intercept[3], "false");
    }
}

#[test]
fn fit_cv_reports_a_selection_inside_the_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cv");
    ok(&sglm(&["fit", "--config", p(&example_dir().join("config.json")), "--cv", "--out", p(&out)]));
    let fit = read_json(&out.join("fit.json"));
    let best = &fit["cv_best"];
    let alpha = best["alpha"].as_f64().unwrap();
    let lambda = best["lambda"].as_f64().unwrap();
    assert!([0.0, 0.5, 1.0].contains(&alpha));
    let (_, rows) = read_csv(&out.join("cv_surface.csv"));
    assert_eq!(rows.len(), 3 * 50);
    assert!(rows
        .iter()
        .any(|r| r[0].parse::<f64>().unwrap() == alpha && r[1].parse::<f64>().unwrap() == lambda));
    assert_eq!(fit["alpha"].as_f64().unwrap(), alpha);
    assert_eq!(fit["lambda"].as_f64().unwrap(), lambda);
    assert!(fit["converged"].as_bool().unwrap());
}

#[test]
fn malformed_csv_reports_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["config.json", "target.csv", "covariates.csv"] {
        fs::copy(example_dir().join(f), tmp.path().join(f)).unwrap();
    }
    let cov = tmp.path().join("covariates.csv");
    let mut lines: Vec<String> = fs::read_to_string(&cov).unwrap().lines().map(String::from).collect();
    lines[6] = "c01,1,2,not-a-number".into();
    fs::write(&cov, lines.join("\n") + "\n").unwrap();
    let o = sglm(&["fit", "--config", p(&tmp.path().join("config.json")), "--cv", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let target = tmp.path().join("target.csv");
    fs::copy(example_dir().join("covariates.csv"), &cov).unwrap();
    fs::write(&target, "period,value\n1,0.5\n2,0.1\n4,0.3\n").unwrap();
    let o = sglm(&["fit", "--config", p(&tmp.path().join("config.json")), "--cv", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&example_dir().join("config.json"));
    cfg["windw"] = 10.into();
    cfg["target"] = p(&example_dir().join("target.csv")).into();
    cfg["covariates"] = p(&example_dir().join("covariates.csv")).into();
    let path = tmp.path().join("c.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = sglm(&["nowcast", "--config", p(&path), "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("windw"), "{}", stderr(&o));
}

#[test]
fn non_convergence_exits_with_numerical_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&example_dir().join("config.json"));
    cfg["cv"]["solver"] = serde_json::json!({"max_iterations": 1});
    cfg["target"] = p(&example_dir().join("target.csv")).into();
    cfg["covariates"] = p(&example_dir().join("covariates.csv")).into();
    let path = tmp.path().join("c.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = tmp.path().join("o");
    let o = sglm(&["fit", "--config", p(&path), "--lambda", "0.01", "--alpha", "0.5", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("KKT"), "{}", stderr(&o));
    assert!(!read_json(&out.join("fit.json"))["converged"].as_bool().unwrap());
}

fn small_panel(seed: u64) -> sgl_midas::timeseries::MixedFrequencyPanel {
    let mut cfg = PseudoEmpiricalConfig::new(70, 2);
    cfg.n_covariates = 4;
    simulate_pseudo_empirical(&cfg, &mut replication_rng(seed, 0)).unwrap()
}

#[test]
fn window_plus_one_usable_period_gives_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    // target starts at period 1, so one autoregressive lag leaves periods 2..=62 usable
    let cfg = write_project(tmp.path(), &small_panel(3), Some(62), Some(62), serde_json::json!({}));
    let out = tmp.path().join("o");
    ok(&sglm(&["nowcast", "--config", p(&cfg), "--window", "60", "--model", "ar", "--out", p(&out)]));
    let origins = column(&out.join("forecasts.csv"), "origin");
    assert_eq!(origins, ["62"]);
    let train = read_csv(&out.join("fits.csv")).1;
    assert_eq!(train[0][1..3], ["2".to_string(), "61".to_string()]);

    let o = sglm(&["nowcast", "--config", p(&cfg), "--window", "61", "--model", "ar", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn horizon_shifts_the_audited_lag_window() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = example_dir().join("config.json");
    let mut newest = Vec::new();
    for h in ["2m", "1m", "eoq"] {
        let out = tmp.path().join(h);
        ok(&sglm(&["nowcast", "--config", p(&cfg), "--horizon", h, "--model", "ar", "--out", p(&out)]));
        let (_, rows) = read_csv(&out.join("design_audit.csv"));
        let c01 = rows.iter().find(|r| r[1] == "c01").unwrap().clone();
        let c04 = rows.iter().find(|r| r[1] == "c04").unwrap().clone();
        newest.push((c01, c04));
    }
    let tick = |r: &Vec<String>| r[5].parse::<i64>().unwrap() * 3 + r[6].parse::<i64>().unwrap();
    let origin = newest[0].0[0].parse::<i64>().unwrap();
    // c01 has no delay: 1, 2, 3 months of the origin quarter
    for (i, (c01, c04)) in newest.iter().enumerate() {
        assert_eq!(c01[2], (i + 1).to_string());
        assert_eq!(c01[4], (i + 1).to_string());
        assert_eq!(tick(c01), origin * 3 + i as i64 + 1);
        // c04 is published one month late
        assert_eq!(c04[3], "1");
        assert_eq!(c04[4], i.to_string());
        assert_eq!(tick(c04), origin * 3 + i as i64);
        let oldest = c01[7].parse::<i64>().unwrap() * 3 + c01[8].parse::<i64>().unwrap();
        assert_eq!(tick(c01) - oldest, 5);
    }
}

#[test]
fn final_origin_without_realized_value_is_emitted_blank() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&sglm(&["nowcast", "--config", p(&example_dir().join("config.json")), "--model", "ar", "--out", p(&out)]));
    let (_, rows) = read_csv(&out.join("forecasts.csv"));
    let last = rows.last().unwrap();
    assert_eq!(last[0], "72");
    assert!(!last[2].is_empty());
    assert_eq!(last[3], "");
    assert_eq!(last[4], "");
    assert!(rows[..rows.len() - 1].iter().all(|r| !r[4].is_empty()));
}

#[test]
fn nowcast_replays_byte_identically_and_leaves_inputs_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let before = snapshot(&example_dir());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&sglm(&["nowcast", "--config", p(&example_dir().join("config.json")), "--out", p(&a)]));
    ok(&sglm(&["replay", "--manifest", p(&a.join("manifest.json")), "--out", p(&b)]));
    assert_eq!(snapshot(&a), snapshot(&b));
    assert_eq!(before, snapshot(&example_dir()));

    let (h, rows) = read_csv(&a.join("selection.csv"));
    assert_eq!(h, ["origin", "financial", "labor", "real", "survey"]);
    for r in &rows {
        let total: f64 = r[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((0.0..=1.0 + 1e-12).contains(&total));
    }
}

fn write_errors(path: &std::path::Path, errors: &[f64]) {
    let mut s = String::from("origin,error\n");
    for (i, e) in errors.iter().enumerate() {
        s.push_str(&format!("{},{e}\n", i + 1));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn evaluate_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let e: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let half: Vec<f64> = e.iter().map(|v| v / 2.0).collect();
    let (fa, fb, fc) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"), tmp.path().join("c.csv"));
    write_errors(&fa, &e);
    write_errors(&fb, &half);
    write_errors(&fc, &e[..39]);

    let out = tmp.path().join("same");
    ok(&sglm(&["evaluate", "--errors", p(&fa), p(&fa), "--out", p(&out)]));
    let s = read_json(&out.join("evaluation.json"));
    assert_eq!(s["dm_statistic"].as_f64().unwrap(), 0.0);
    assert_eq!(s["relative_rmse"].as_f64().unwrap(), 1.0);
    assert!(column(&out.join("cumsfe.csv"), "cumsfe").iter().all(|v| v.parse::<f64>().unwrap() == 0.0));

    let out = tmp.path().join("half");
    ok(&sglm(&["evaluate", "--errors", p(&fa), p(&fb), "--hac-lags", "3", "--out", p(&out)]));
    let s = read_json(&out.join("evaluation.json"));
    assert!((s["relative_rmse"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(s["hac_lags"], 3);
    let cum = column(&out.join("cumsfe.csv"), "cumsfe");
    let expected: f64 = e.iter().map(|v| 0.75 * v * v).sum();
    assert!((cum.last().unwrap().parse::<f64>().unwrap() - expected).abs() < 1e-9);

    let o = sglm(&["evaluate", "--errors", p(&fa), p(&fc), "--out", p(&tmp.path().join("bad"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("40 and 39"), "{}", stderr(&o));
}

#[test]
fn bundled_example_matches_golden_outputs() {
    let golden = example_dir().join("golden");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = example_dir().join("config.json");
    let runs: [(&str, Vec<&str>); 3] = [
        ("fit", vec!["fit", "--config", p(&cfg), "--cv"]),
        ("nowcast", vec!["nowcast", "--config", p(&cfg)]),
        ("nowcast-ar", vec!["nowcast", "--config", p(&cfg), "--model", "ar"]),
    ];
    for (name, args) in runs {
        let out = tmp.path().join(name);
        let mut args = args.clone();
        args.extend(["--out", p(&out)]);
        ok(&sglm(&args));
        for entry in fs::read_dir(golden.join(name)).unwrap() {
            let entry = entry.unwrap();
            let file = entry.file_name();
            let want = fs::read_to_string(entry.path()).unwrap();
            let got = fs::read_to_string(out.join(&file)).unwrap();
            assert_text_close(&want, &got, &format!("{name}/{}", file.to_string_lossy()));
        }
    }
}

/// Token-wise comparison allowing last-digit floating point differences across platforms.
fn assert_text_close(want: &str, got: &str, what: &str) {
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| c == ',' || c == '\n' || c.is_whitespace() || c == ':' || c == '[' || c == ']')
            .filter(|t| !t.is_empty())
            .map(|t| t.trim_end_matches(',').to_string())
            .collect()
    };
    let (w, g) = (split(want), split(got));
    assert_eq!(w.len(), g.len(), "{what}: token count differs");
    for (a, b) in w.iter().zip(&g) {
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => assert!(
                (x - y).abs() <= 1e-8 * (1.0 + x.abs()),
                "{what}: {x} vs {y}"
            ),
            _ => assert_eq!(a, b, "{what}"),
        }
    }
}
