//! The workflows behind each subcommand. Every run is described by a [`Job`],
//! which is written to `manifest.json` so the run can be replayed.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sgl_midas::design::Design;
use sgl_midas::evaluation::{
    block_categories, compare, rolling_nowcast, selection_fractions, BaselineMethod, DmOptions, NowcastModel,
};
use sgl_midas::simulation::{run_scenario, Scenario, ScenarioResult};
use sgl_midas::solver::{fit, lambda_max, PenaltySpec, PreparedProblem, SgLassoFit};
use sgl_midas::tuning::{cross_validate_and_fit, CvResult, SgLasso};

use crate::config::{Horizon, ProjectConfig};
use crate::data::{ensure_dir, num, opt, read_errors, write_csv, write_json};
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Sgl,
    Ar,
    PcaOls,
    RidgeU,
    LassoU,
    EnetU,
}

impl ModelArg {
    fn model(self) -> NowcastModel {
        match self {
            ModelArg::Sgl => NowcastModel::SgLasso,
            ModelArg::Ar => NowcastModel::Baseline(BaselineMethod::Ar),
            ModelArg::PcaOls => NowcastModel::Baseline(BaselineMethod::PcaOls),
            ModelArg::RidgeU => NowcastModel::Baseline(BaselineMethod::RidgeU),
            ModelArg::LassoU => NowcastModel::Baseline(BaselineMethod::LassoU),
            ModelArg::EnetU => NowcastModel::Baseline(BaselineMethod::ElasticNetU),
        }
    }

    /// Models that work on unrestricted lags rather than dictionary columns.
    fn unrestricted(self) -> bool {
        matches!(self, ModelArg::PcaOls | ModelArg::RidgeU | ModelArg::LassoU | ModelArg::EnetU)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FitMode {
    Fixed { lambda: f64, alpha: f64 },
    Cv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Simulate {
        scenario: Scenario,
    },
    Fit {
        config: ProjectConfig,
        fit: FitMode,
    },
    Nowcast {
        config: ProjectConfig,
        horizon: Option<Horizon>,
        window: usize,
        model: ModelArg,
    },
    Evaluate {
        errors_a: PathBuf,
        errors_b: PathBuf,
        hac_lags: Option<usize>,
        harvey: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub job: Job,
    pub outputs: Vec<String>,
}

/// Runs `job`, writing its outputs and manifest into `out`.
pub fn execute(job: &Job, out: &Path) -> Result<()> {
    let out = ensure_dir(out)?;
    let (outputs, pending) = match job {
        Job::Simulate { scenario } => (simulate(scenario, &out)?, None),
        Job::Fit { config, fit } => run_fit(config, fit, &out)?,
        Job::Nowcast {
            config,
            horizon,
            window,
            model,
        } => (nowcast(config, *horizon, *window, *model, &out)?, None),
        Job::Evaluate {
            errors_a,
            errors_b,
            hac_lags,
            harvey,
        } => (evaluate(errors_a, errors_b, *hac_lags, *harvey, &out)?, None),
    };
    let manifest = Manifest {
        tool: "sglm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        job: job.clone(),
        outputs,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    match pending {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn simulate(s: &Scenario, out: &Path) -> Result<Vec<String>> {
    let res = run_scenario(s)?;
    write_csv(&out.join("results.csv"), &["table", "method", "weight", "mean", "se"], &result_rows(s, &res))?;
    Ok(vec!["results.csv".into()])
}

fn result_rows(s: &Scenario, res: &ScenarioResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |table: &str, method: &str, weight: &str, v: Option<(f64, f64)>| {
        rows.push(vec![
            table.to_string(),
            method.to_string(),
            weight.to_string(),
            opt(v.map(|x| x.0)),
            opt(v.map(|x| x.1)),
        ]);
    };
    for r in &res.methods {
        push("forecast_msfe", r.method.label(), "", r.forecast.map(|x| (x.mean, x.se)));
    }
    if s.nowcast {
        for r in &res.methods {
            push("nowcast_msfe", r.method.label(), "", r.nowcast.map(|x| (x.mean, x.se)));
        }
    }
    for r in &res.mise {
        push("mise", r.method.label(), &r.weight, Some((r.mise.mean, r.mise.se)));
    }
    push("oracle_msfe", "oracle", "", Some((res.oracle.mean, res.oracle.se)));
    rows
}

#[derive(Serialize)]
struct FitSummary {
    lambda: f64,
    alpha: f64,
    lambda_max: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
    kkt_residual: f64,
    n_rows: usize,
    first_period: i64,
    last_period: i64,
    active_set: Vec<String>,
    active_groups: Vec<String>,
    cv_best: Option<Selected>,
    cv_one_se: Option<Selected>,
}

#[derive(Serialize)]
struct Selected {
    alpha: f64,
    lambda: f64,
    cv_error: f64,
}

fn run_fit(cfg: &ProjectConfig, mode: &FitMode, out: &Path) -> Result<(Vec<String>, Option<CliError>)> {
    let panel = cfg.panel()?;
    let spec = cfg.design_spec(cfg.horizon, false);
    let design = Design::new(&panel, &spec)?;
    let last = panel.target.last_period();
    let periods: Vec<i64> = design.available_periods().into_iter().filter(|&p| p <= last).collect();
    let problem = design.problem(&periods)?;
    let weights = cfg.cv.group_weights.clone();
    let (fitted, cv): (SgLassoFit, Option<CvResult>) = match mode {
        FitMode::Fixed { lambda, alpha } => {
            let penalty = PenaltySpec::new(*lambda, *alpha).with_weights(weights.clone());
            (fit(&problem, &penalty, &cfg.cv.solver)?, None)
        }
        FitMode::Cv => {
            let (cv, f) = cross_validate_and_fit(&SgLasso { weights: weights.clone() }, &problem, &cfg.cv)?;
            (f, Some(cv))
        }
    };
    let prep = PreparedProblem::new(&problem, cfg.cv.solver.standardize)?;
    let lmax = lambda_max(&prep, fitted.alpha, &weights)?;

    let groups = problem.groups.groups();
    let mut group_of = vec![(String::new(), true); problem.n_cols()];
    for g in groups {
        for j in g.indices.iter() {
            group_of[*j] = (g.name.clone(), g.penalized);
        }
    }
    let mut category_of = vec![String::new(); problem.n_cols()];
    for b in &problem.blocks {
        for j in b.columns.clone() {
            category_of[j] = b.category.clone().unwrap_or_default();
        }
    }
    let rows: Vec<Vec<String>> = (0..problem.n_cols())
        .map(|j| {
            vec![
                j.to_string(),
                problem.column_names[j].clone(),
                group_of[j].0.clone(),
                group_of[j].1.to_string(),
                category_of[j].clone(),
                num(fitted.beta[j]),
            ]
        })
        .collect();
    write_csv(
        &out.join("coefficients.csv"),
        &["index", "name", "group", "penalized", "category", "coefficient"],
        &rows,
    )?;
    let mut outputs = vec!["coefficients.csv".to_string(), "fit.json".to_string()];
    if let Some(cv) = &cv {
        let mut rows = Vec::new();
        for (a, alpha) in cv.alphas.iter().enumerate() {
            for (l, lambda) in cv.lambdas[a].iter().enumerate() {
                rows.push(vec![num(*alpha), num(*lambda), num(cv.cv_error[a][l]), num(cv.cv_se[a][l])]);
            }
        }
        write_csv(&out.join("cv_surface.csv"), &["alpha", "lambda", "cv_error", "cv_se"], &rows)?;
        outputs.push("cv_surface.csv".into());
    }
    let sel = |s: &sgl_midas::tuning::Selection| Selected {
        alpha: s.alpha,
        lambda: s.lambda,
        cv_error: s.cv_error,
    };
    let summary = FitSummary {
        lambda: fitted.lambda,
        alpha: fitted.alpha,
        lambda_max: lmax,
        objective: fitted.objective,
        iterations: fitted.iterations,
        converged: fitted.converged,
        kkt_residual: fitted.kkt_residual,
        n_rows: problem.n_rows(),
        first_period: periods[0],
        last_period: *periods.last().unwrap(),
        active_set: fitted.active_set.iter().map(|&j| problem.column_names[j].clone()).collect(),
        active_groups: fitted.active_groups.iter().map(|&g| groups[g].name.clone()).collect(),
        cv_best: cv.as_ref().map(|c| sel(&c.best)),
        cv_one_se: cv.as_ref().map(|c| sel(&c.one_se)),
    };
    write_json(&out.join("fit.json"), &summary)?;
    let pending = (!fitted.converged).then(|| {
        CliError::NotConverged(format!(
            "{} iterations, KKT residual {:e} at lambda {} alpha {}",
            fitted.iterations, fitted.kkt_residual, fitted.lambda, fitted.alpha
        ))
    });
    Ok((outputs, pending))
}

fn nowcast(
    cfg: &ProjectConfig,
    horizon: Option<Horizon>,
    window: usize,
    model: ModelArg,
    out: &Path,
) -> Result<Vec<String>> {
    let panel = cfg.panel()?;
    let spec = cfg.design_spec(horizon, model.unrestricted());
    let label = horizon.map_or("custom", |h| h.label());
    let res = rolling_nowcast(&panel, &spec, window, &cfg.cv, model.model(), label)?;

    let rows: Vec<Vec<String>> = res
        .records
        .iter()
        .map(|r| {
            vec![
                r.origin.to_string(),
                r.horizon.clone(),
                num(r.prediction),
                opt(r.realized),
                opt(r.error),
            ]
        })
        .collect();
    write_csv(
        &out.join("forecasts.csv"),
        &["origin", "horizon", "prediction", "realized", "error"],
        &rows,
    )?;

    let categories = block_categories(&res.blocks);
    let mut cat_names: Vec<String> = categories.values().cloned().collect();
    cat_names.sort();
    cat_names.dedup();
    let mut sel_rows = Vec::new();
    let mut fit_rows = Vec::new();
    for f in &res.fits {
        let frac = selection_fractions(f.beta.as_slice(), &res.blocks, &categories)?;
        let mut row = vec![f.origin.to_string()];
        row.extend(cat_names.iter().map(|c| num(frac.get(c).copied().unwrap_or(0.0))));
        sel_rows.push(row);
        fit_rows.push(vec![
            f.origin.to_string(),
            f.train_periods[0].to_string(),
            f.train_periods.last().unwrap().to_string(),
            opt(f.alpha),
            opt(f.lambda),
            f.beta.iter().filter(|b| **b != 0.0).count().to_string(),
        ]);
    }
    let mut header = vec!["origin"];
    header.extend(cat_names.iter().map(String::as_str));
    write_csv(&out.join("selection.csv"), &header, &sel_rows)?;
    write_csv(
        &out.join("fits.csv"),
        &["origin", "train_first", "train_last", "alpha", "lambda", "nonzero"],
        &fit_rows,
    )?;

    let design = Design::new(&panel, &spec)?;
    let mut audit = Vec::new();
    for r in &res.records {
        for (k, (s, b)) in cfg.series.iter().zip(&res.blocks).enumerate() {
            let pos = design.lag_positions(k, r.origin);
            let (newest, oldest) = (pos[0], pos[pos.len() - 1]);
            audit.push(vec![
                r.origin.to_string(),
                s.id.clone(),
                s.lead_for(horizon).to_string(),
                s.delay.to_string(),
                b.effective_lead.to_string(),
                newest.0.to_string(),
                newest.1.to_string(),
                oldest.0.to_string(),
                oldest.1.to_string(),
            ]);
        }
    }
    write_csv(
        &out.join("design_audit.csv"),
        &[
            "origin",
            "series",
            "lead",
            "delay",
            "effective_lead",
            "newest_period",
            "newest_subperiod",
            "oldest_period",
            "oldest_subperiod",
        ],
        &audit,
    )?;
    Ok(vec![
        "forecasts.csv".into(),
        "selection.csv".into(),
        "fits.csv".into(),
        "design_audit.csv".into(),
    ])
}

#[derive(Serialize)]
struct EvaluationSummary {
    n: usize,
    rmse_a: f64,
    rmse_b: f64,
    /// `rmse_b / rmse_a`: the second file relative to the first.
    relative_rmse: f64,
    dm_statistic: f64,
    dm_p_value: f64,
    hac_lags: usize,
    degenerate: bool,
}

fn evaluate(a: &Path, b: &Path, hac_lags: Option<usize>, harvey: bool, out: &Path) -> Result<Vec<String>> {
    let (oa, ea) = read_errors(a)?;
    let (ob, eb) = read_errors(b)?;
    if ea.len() != eb.len() {
        return Err(CliError::Config(format!(
            "error files have {} and {} observations",
            ea.len(),
            eb.len()
        )));
    }
    for (x, y) in oa.iter().zip(&ob) {
        if let (Some(x), Some(y)) = (x, y) {
            if x != y {
                return Err(CliError::Config(format!("origins are not aligned: {x} vs {y}")));
            }
        }
    }
    let c = compare(&ea, &eb, DmOptions { hac_lags, harvey })?;
    let summary = EvaluationSummary {
        n: ea.len(),
        rmse_a: c.rmse_a,
        rmse_b: c.rmse_b,
        relative_rmse: c.relative_rmse,
        dm_statistic: c.dm.statistic,
        dm_p_value: c.dm.p_value,
        hac_lags: c.dm.hac_lags,
        degenerate: c.dm.degenerate,
    };
    write_json(&out.join("evaluation.json"), &summary)?;
    let rows: Vec<Vec<String>> = c
        .cumsfe
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let origin = oa[i].or(ob[i]).map(|o| o.to_string()).unwrap_or_default();
            vec![(i + 1).to_string(), origin, num(*v)]
        })
        .collect();
    write_csv(&out.join("cumsfe.csv"), &["index", "origin", "cumsfe"], &rows)?;
    Ok(vec!["evaluation.json".into(), "cumsfe.csv".into()])
}
