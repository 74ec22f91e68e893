//! Writes the bundled example project: a synthetic quarterly target with
//! monthly covariates in four categories.
//!
//! cargo run -p sgl-midas-cli --example make_example -- data/example

use std::fs;
use std::path::PathBuf;

use sgl_midas::simulation::{replication_rng, simulate_pseudo_empirical, PseudoEmpiricalConfig};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/example".into()));
    fs::create_dir_all(&dir).unwrap();
    let mut cfg = PseudoEmpiricalConfig::new(72, 4);
    cfg.n_covariates = 12;
    let panel = simulate_pseudo_empirical(&cfg, &mut replication_rng(7, 0)).unwrap();

    let mut w = csv::Writer::from_path(dir.join("target.csv")).unwrap();
    w.write_record(["period", "value"]).unwrap();
    let t = &panel.target;
    // the last quarter is left unobserved, so the final nowcast has no realized value
    let n = t.len();
    for (i, v) in t.values().iter().enumerate() {
        let value = if i + 1 < n { v.to_string() } else { String::new() };
        w.write_record([(t.first_period() + i as i64).to_string(), value]).unwrap();
    }
    w.flush().unwrap();

    let mut w = csv::Writer::from_path(dir.join("covariates.csv")).unwrap();
    w.write_record(["series_id", "period", "subperiod", "value"]).unwrap();
    let mut series = Vec::new();
    for s in &panel.covariates {
        for (i, v) in s.values().iter().enumerate() {
            let p = s.start_period() + (i / s.m()) as i64;
            w.write_record([s.id().to_string(), p.to_string(), (i % s.m() + 1).to_string(), v.to_string()])
                .unwrap();
        }
        series.push(serde_json::json!({
            "id": s.id(),
            "m": s.m(),
            "delay": s.delay(),
            "q": 2,
            "dictionary": {"family": "legendre", "size": 3},
            "category": s.category().unwrap(),
        }));
    }
    w.flush().unwrap();

    let config = serde_json::json!({
        "target": "target.csv",
        "covariates": "covariates.csv",
        "series": series,
        "ar_lags": 1,
        "window": 60,
        "horizon": "eoq",
        "cv": {"n_folds": 5, "alpha_grid": [0.0, 0.5, 1.0], "lambda_grid": {"auto": {"n": 50, "ratio": 0.001}}},
        "output_dir": "out",
    });
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config).unwrap() + "\n").unwrap();
}
