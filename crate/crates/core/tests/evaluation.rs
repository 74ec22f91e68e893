use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sgl_midas::design::*;
use sgl_midas::dictionary::DictionarySpec;
use sgl_midas::evaluation::*;
use sgl_midas::solver::least_squares;
use sgl_midas::timeseries::*;
use sgl_midas::tuning::{CvPlan, LambdaGrid};

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// AR(1) target driven by the first covariate's last sub-period; every
/// series is released in time for a contemporaneous nowcast.
fn panel(seed: u64, periods: usize, m: usize, k: usize) -> MixedFrequencyPanel {
    let x: Vec<Vec<f64>> = (0..k).map(|j| normals(seed * 100 + j as u64, (periods + 1) * m)).collect();
    let e = normals(seed * 100 + 99, periods);
    let mut y = Vec::with_capacity(periods);
    let mut prev = 0.0;
    for t in 0..periods {
        // period t + 1 ends at tick (t + 2)·m − 1 of a series starting at period 0
        let v = 0.5 * prev + x[0][(t + 2) * m - 1] + 0.5 * e[t];
        y.push(v);
        prev = v;
    }
    let covariates = x
        .into_iter()
        .enumerate()
        .map(|(j, v)| HighFrequencySeries::new(format!("x{j}"), 0, m, v).unwrap().with_lead(m).unwrap().with_category(if j % 2 == 0 { "even" } else { "odd" }))
        .collect();
    MixedFrequencyPanel::new(LowFrequencySeries::new(1, y).unwrap(), covariates)
}

fn spec(k: usize) -> DesignSpec {
    let mut s = DesignSpec::new(1, (0..k).map(|j| CovariateSpec::dictionary(format!("x{j}"), 1, DictionarySpec::legendre(3))).collect());
    s.unpenalized_intercept = true;
    s
}

fn plan() -> CvPlan {
    CvPlan::default()
        .with_alphas(vec![0.0, 0.5, 1.0])
        .with_lambda_grid(LambdaGrid::Auto { n: 20, ratio: 1e-3 })
}

#[test]
fn diebold_mariano_matches_hand_computation() {
    let a = normals(1, 50);
    let b: Vec<f64> = normals(2, 50).iter().map(|v| 1.3 * v).collect();
    let r = diebold_mariano(&a, &b, DmOptions { hac_lags: Some(0), harvey: false }).unwrap();
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * x - y * y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((r.statistic - mean / (var / n).sqrt()).abs() < 1e-12);
    let flipped = diebold_mariano(&b, &a, DmOptions { hac_lags: Some(0), harvey: false }).unwrap();
    assert_eq!(flipped.statistic, -r.statistic);
    assert_eq!(flipped.p_value, r.p_value);
    let auto = diebold_mariano(&a, &b, DmOptions::default()).unwrap();
    assert_eq!(auto.hac_lags, 3);
    let harvey = diebold_mariano(&a, &b, DmOptions { hac_lags: Some(0), harvey: true }).unwrap();
    assert!(harvey.p_value > r.p_value);
    let same = diebold_mariano(&a, &a, DmOptions::default()).unwrap();
    assert!(same.degenerate && same.p_value == 1.0);
    assert!(diebold_mariano(&a, &b[..49], DmOptions::default()).is_err());
}

#[test]
fn diebold_mariano_size_is_close_to_nominal() {
    let mut rejections = 0;
    for seed in 0..1000u64 {
        let a = normals(10_000 + seed, 200);
        let b = normals(20_000 + seed, 200);
        let r = diebold_mariano(&a, &b, DmOptions::default()).unwrap();
        if r.statistic.abs() > 1.96 {
            rejections += 1;
        }
    }
    assert!((30..=70).contains(&rejections), "{rejections} of 1000");
}

#[test]
fn cumsfe_ends_at_the_sum_of_loss_differentials() {
    let a = normals(3, 40);
    let b = normals(4, 40);
    let c = cumsfe(&a, &b).unwrap();
    let total: f64 = a.iter().zip(&b).map(|(x, y)| x * x - y * y).sum();
    assert!((c[39] - total).abs() < 1e-12);
    assert!(cumsfe(&a, &a).unwrap().iter().all(|v| *v == 0.0));
    let cmp = compare(&a, &b, DmOptions::default()).unwrap();
    assert!((cmp.relative_rmse - rmse(&b) / rmse(&a)).abs() < 1e-15);
}

#[test]
fn rolling_origins_follow_the_window() {
    let p = panel(1, 80, 3, 2);
    let s = spec(2);
    let origins = rolling_origins(&p, &s, 40).unwrap();
    // first usable period is 2; periods 2..=80 give 79 rows
    assert_eq!(origins.len(), 79 - 40);
    for (origin, train) in &origins {
        assert_eq!(train.len(), 40);
        assert_eq!(train.last().unwrap() + 1, *origin);
    }
    assert!(rolling_origins(&p, &s, 79).is_err());
    // covariates one period ahead of the target add the open origin
    let mut shorter = p.clone();
    shorter.target = p.target.truncated(79).unwrap();
    let extra = rolling_origins(&shorter, &s, 40).unwrap();
    assert_eq!(extra.last().unwrap().0, 80);
    assert_eq!(extra.len(), 78 - 40 + 1);
}

#[test]
fn future_responses_never_reach_a_prediction() {
    let p = panel(2, 60, 3, 3);
    let s = spec(3);
    let base = rolling_nowcast(&p, &s, 40, &plan(), NowcastModel::SgLasso, "eoq").unwrap();
    let mut shocked = p.clone();
    let last_period = p.target.last_period();
    let mut y = p.target.values().to_vec();
    *y.last_mut().unwrap() += 1000.0;
    shocked.target = LowFrequencySeries::new(1, y).unwrap();
    let moved = rolling_nowcast(&shocked, &s, 40, &plan(), NowcastModel::SgLasso, "eoq").unwrap();
    for (a, b) in base.records.iter().zip(&moved.records) {
        assert_eq!(a.origin, b.origin);
        if a.origin <= last_period {
            assert_eq!(a.prediction, b.prediction, "origin {}", a.origin);
        }
    }
    let last = moved.records.last().unwrap();
    assert_eq!(last.error, Some(last.realized.unwrap() - last.prediction));
    assert!(last.realized.unwrap() > 900.0);
}

#[test]
fn constant_target_is_predicted_exactly() {
    let mut p = panel(3, 60, 3, 2);
    p.target = LowFrequencySeries::new(1, vec![2.5; 59]).unwrap();
    let out = rolling_nowcast(&p, &spec(2), 40, &plan(), NowcastModel::SgLasso, "eoq").unwrap();
    assert_eq!(out.records.last().unwrap().realized, None);
    for r in &out.records {
        assert!((r.prediction - 2.5).abs() < 1e-8, "{r:?}");
    }
    // the intercept and the lagged target coincide, which least squares reports
    let ar = rolling_nowcast(&p, &spec(2), 40, &plan(), NowcastModel::Baseline(BaselineMethod::Ar), "eoq");
    assert!(matches!(ar, Err(sgl_midas::Error::RankDeficient(_))), "{ar:?}");
}

#[test]
fn autoregression_recovers_the_slope() {
    let e = normals(5, 3000);
    let mut y = vec![0.0; 3000];
    for t in 1..3000 {
        y[t] = 0.6 * y[t - 1] + e[t];
    }
    let target = LowFrequencySeries::new(1, y).unwrap();
    let x = HighFrequencySeries::new("x0", 0, 3, normals(6, 9003)).unwrap();
    let p = MixedFrequencyPanel::new(target, vec![x]);
    let problem = build_design(&p, &spec(1)).unwrap();
    let fit = baseline_fit(&problem, BaselineMethod::Ar, &plan()).unwrap();
    assert!((fit.beta[1] - 0.6).abs() < 0.04, "{}", fit.beta[1]);
    assert!(fit.beta.rows(2, 3).iter().all(|b| *b == 0.0));
}

#[test]
fn ridge_with_a_vanishing_penalty_is_least_squares() {
    let p = panel(7, 200, 3, 3);
    let problem = build_design(&p, &spec(3)).unwrap();
    let tiny = plan().with_lambda_grid(LambdaGrid::Fixed(vec![1e-11]));
    let ridge = baseline_fit(&problem, BaselineMethod::RidgeU, &tiny).unwrap();
    let ols = least_squares(&problem.x, &problem.y).unwrap();
    for j in 0..problem.n_cols() {
        assert!((ridge.beta[j] - ols[j]).abs() < 1e-6, "column {j}: {} vs {}", ridge.beta[j], ols[j]);
    }
}

#[test]
fn principal_component_of_rank_one_data() {
    let f = normals(8, 100);
    let x = DMatrix::from_fn(100, 3, |i, j| f[i] * [1.0, -2.0, 0.5][j] + 3.0);
    let (means, sds, v) = first_principal_component(&x).unwrap();
    assert!((means[0] - (3.0 + f.iter().sum::<f64>() / 100.0)).abs() < 1e-12);
    assert!(sds.iter().all(|s| *s > 0.0));
    let w = 1.0 / 3f64.sqrt();
    assert!((v[0].abs() - w).abs() < 1e-10 && (v[2].abs() - w).abs() < 1e-10);
    assert!(v[0] * v[1] < 0.0);
}

#[test]
fn selection_fractions_count_covariates_by_category() {
    let p = panel(9, 60, 3, 4);
    let problem = build_design(&p, &spec(4)).unwrap();
    let cats = block_categories(&problem.blocks);
    assert_eq!(cats["x1"], "odd");
    let mut beta = vec![0.0; problem.n_cols()];
    beta[problem.blocks[0].columns.start + 1] = 0.3;
    beta[problem.blocks[1].columns.start] = -1.0;
    beta[problem.blocks[3].columns.end - 1] = 2.0;
    let frac = selection_fractions(&beta, &problem.blocks, &cats).unwrap();
    assert_eq!(frac["even"], 0.25);
    assert_eq!(frac["odd"], 0.5);
    assert!(selection_fractions(&beta, &problem.blocks, &HashMap::new()).is_err());
}

#[test]
fn sparse_group_nowcasts_beat_the_autoregression_with_signal() {
    let p = panel(10, 100, 3, 6);
    let s = spec(6);
    let sgl = rolling_nowcast(&p, &s, 60, &plan(), NowcastModel::SgLasso, "eoq").unwrap();
    let ar = rolling_nowcast(&p, &s, 60, &plan(), NowcastModel::Baseline(BaselineMethod::Ar), "eoq").unwrap();
    let e = |o: &RollingOutput| o.records.iter().filter_map(|r| r.error).collect::<Vec<_>>();
    assert!(relative_rmse(&e(&sgl), &e(&ar)).unwrap() < 0.8);
    assert!(sgl.fits.iter().all(|f| f.alpha.is_some() && f.lambda.is_some()));
    assert!(ar.fits.iter().all(|f| f.alpha.is_none()));
}
