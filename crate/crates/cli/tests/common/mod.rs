#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgl_midas::timeseries::MixedFrequencyPanel;

pub fn sglm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sglm"))
        .args(args)
        .output()
        .expect("failed to launch sglm")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn ok(o: &Output) {
    assert!(o.status.success(), "sglm failed: {}", stderr(o));
}

pub fn example_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = read_csv(path);
    let i = h.iter().position(|c| c == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Writes `panel` as a project in `dir`: target periods after `target_until`
/// are left empty and covariate values after period `covariates_until` are dropped.
pub fn write_project(
    dir: &Path,
    panel: &MixedFrequencyPanel,
    target_until: Option<i64>,
    covariates_until: Option<i64>,
    extra: serde_json::Value,
) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let mut w = csv::Writer::from_path(dir.join("target.csv")).unwrap();
    w.write_record(["period", "value"]).unwrap();
    let t = &panel.target;
    for (i, v) in t.values().iter().enumerate() {
        let period = t.first_period() + i as i64;
        let value = match target_until {
            Some(last) if period > last => String::new(),
            _ => v.to_string(),
        };
        w.write_record([period.to_string(), value]).unwrap();
    }
    w.flush().unwrap();
    let mut w = csv::Writer::from_path(dir.join("covariates.csv")).unwrap();
    w.write_record(["series_id", "period", "subperiod", "value"]).unwrap();
    let mut series = Vec::new();
    for s in &panel.covariates {
        for (i, v) in s.values().iter().enumerate() {
            let period = s.start_period() + (i / s.m()) as i64;
            if covariates_until.is_some_and(|last| period > last) {
                break;
            }
            w.write_record([s.id().to_string(), period.to_string(), (i % s.m() + 1).to_string(), v.to_string()])
                .unwrap();
        }
        series.push(serde_json::json!({
            "id": s.id(),
            "m": s.m(),
            "delay": s.delay(),
            "q": 2,
            "dictionary": {"family": "legendre", "size": 3},
            "category": s.category().unwrap_or("none"),
        }));
    }
    w.flush().unwrap();
    let mut config = serde_json::json!({
        "target": "target.csv",
        "covariates": "covariates.csv",
        "series": series,
        "ar_lags": 1,
        "window": 60,
    });
    if let serde_json::Value::Object(extra) = extra {
        for (k, v) in extra {
            config[k] = v;
        }
    }
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

/// Byte contents of every file directly in `dir`, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| {
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
