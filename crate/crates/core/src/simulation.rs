//! Monte Carlo data generating processes and the estimator comparison harness.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    Aggregation, ArGrouping, CovariateSpec, Design, DesignProblem, DesignSpec,
};
use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::solver::least_squares;
use crate::timeseries::{HighFrequencySeries, LowFrequencySeries, MixedFrequencyPanel};
use crate::tuning::{cross_validate_and_fit, CvPlan, LambdaGrid, SgLasso};

/// Beta density `u^{a−1}(1−u)^{b−1} / B(a, b)` for `a, b ≥ 1`.
pub fn beta_weight(u: f64, a: f64, b: f64) -> Result<f64> {
    if !(a >= 1.0 && b >= 1.0) {
        return Err(Error::InvalidParameter(format!("Beta({a}, {b}) needs a, b ≥ 1")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!("u = {u} outside [0, 1]")));
    }
    Ok(u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0) / statrs::function::beta::beta(a, b))
}

/// Weight functions of the relevant covariates, in order.
pub const BETA_WEIGHTS: [(f64, f64); 3] = [(1.0, 3.0), (2.0, 3.0), (2.0, 2.0)];

pub fn weight_label(k: usize) -> String {
    let (a, b) = BETA_WEIGHTS[k];
    format!("Beta({a},{b})")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Innovation {
    Gaussian { variance: f64 },
    /// Unscaled Student-t draws.
    StudentT { df: f64 },
}

impl Innovation {
    fn variance(&self) -> f64 {
        match *self {
            Innovation::Gaussian { variance } => variance,
            Innovation::StudentT { df } => df / (df - 2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HfProcess {
    /// Independent AR(1) processes at the high frequency.
    Ar { rho: f64, innovation: Innovation },
    /// VAR(1) with block-diagonal `Φ` (blocks of 5) and standard normal shocks.
    Var { first_block: f64, other_blocks: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagFraction {
    #[default]
    Full,
    /// Only the most recent `⌈m/2⌉` lags.
    Half,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Training sample size.
    pub sample_size: usize,
    #[serde(default = "d_noise")]
    pub n_noise: usize,
    #[serde(default = "d_m")]
    pub m: usize,
    #[serde(default = "d_rho1")]
    pub rho1: f64,
    #[serde(default = "d_rho2")]
    pub rho2: f64,
    #[serde(default = "d_sigma")]
    pub sigma_u2: f64,
    #[serde(default = "d_process")]
    pub hf_process: HfProcess,
    /// Highest Legendre degree `L`; the dictionary has `L + 1` functions.
    #[serde(default = "d_degree")]
    pub degree: usize,
    #[serde(default)]
    pub lag_fraction: LagFraction,
    #[serde(default = "d_ar")]
    pub ar_lags: usize,
    #[serde(default = "d_burn")]
    pub burn_in: usize,
    /// High-frequency observations of the response period available to the nowcast.
    #[serde(default)]
    pub nowcast_lead: Option<usize>,
    #[serde(default = "d_folds")]
    pub n_folds: usize,
    #[serde(default = "d_alphas")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "d_nlambda")]
    pub n_lambda: usize,
    /// Smallest λ of the grid relative to `λ_max`; by default `10⁻⁴` when the
    /// training rows outnumber the columns and `10⁻²` otherwise.
    #[serde(default)]
    pub lambda_ratio: Option<f64>,
    #[serde(default = "d_reps")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Allows values outside the documented scenario set.
    #[serde(default)]
    pub custom: bool,
    /// Estimators to run, reported in this order.
    #[serde(default = "d_methods")]
    pub methods: Vec<Method>,
    /// Whether nowcasts are produced next to the forecasts.
    #[serde(default = "d_true")]
    pub nowcast: bool,
}

fn d_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn d_true() -> bool {
    true
}

fn d_noise() -> usize {
    7
}
fn d_m() -> usize {
    12
}
fn d_rho1() -> f64 {
    0.3
}
fn d_rho2() -> f64 {
    0.01
}
fn d_sigma() -> f64 {
    1.0
}
fn d_process() -> HfProcess {
    HfProcess::Ar {
        rho: 0.2,
        innovation: Innovation::Gaussian { variance: 5.0 },
    }
}
fn d_degree() -> usize {
    5
}
fn d_ar() -> usize {
    5
}
fn d_burn() -> usize {
    200
}
fn d_folds() -> usize {
    5
}
fn d_alphas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn d_nlambda() -> usize {
    100
}
fn d_reps() -> usize {
    500
}

impl Scenario {
    /// Baseline: AR(0.2) Gaussian covariates, `σ_u² = 1`, `L = 5`, 7 noise covariates.
    pub fn baseline(sample_size: usize) -> Self {
        Self {
            sample_size,
            n_noise: d_noise(),
            m: d_m(),
            rho1: d_rho1(),
            rho2: d_rho2(),
            sigma_u2: d_sigma(),
            hf_process: d_process(),
            degree: d_degree(),
            lag_fraction: LagFraction::Full,
            ar_lags: d_ar(),
            burn_in: d_burn(),
            nowcast_lead: None,
            n_folds: d_folds(),
            alpha_grid: d_alphas(),
            n_lambda: d_nlambda(),
            lambda_ratio: None,
            replications: d_reps(),
            seed: 0,
            custom: false,
            methods: d_methods(),
            nowcast: true,
        }
    }

    pub fn n_relevant(&self) -> usize {
        BETA_WEIGHTS.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.n_relevant() + self.n_noise
    }

    pub fn n_lags(&self) -> usize {
        match self.lag_fraction {
            LagFraction::Full => self.m,
            LagFraction::Half => self.m.div_ceil(2),
        }
    }

    pub fn nowcast_lead(&self) -> usize {
        self.nowcast_lead.unwrap_or(self.m - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replications == 0 {
            return bad("replications must be ≥ 1".into());
        }
        if self.methods.is_empty()
            || (1..self.methods.len()).any(|i| self.methods[..i].contains(&self.methods[i]))
        {
            return bad("methods must be a non-empty list without repeats".into());
        }
        if self.m == 0 || self.sample_size < 2 * self.n_folds || self.n_folds < 2 {
            return bad("need m ≥ 1, at least 2 folds and 2 rows per fold".into());
        }
        if self.nowcast_lead() > self.m {
            return bad(format!("nowcast lead {} exceeds m = {}", self.nowcast_lead(), self.m));
        }
        if self.degree + 1 > self.n_lags() {
            return bad(format!(
                "{} basis functions for {} lags",
                self.degree + 1,
                self.n_lags()
            ));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alpha grid must be a non-empty subset of [0, 1]".into());
        }
        if !(self.sigma_u2 > 0.0) {
            return bad("sigma_u2 must be positive".into());
        }
        if let HfProcess::Ar { rho, innovation } = self.hf_process {
            if !(rho.abs() < 1.0) {
                return bad(format!("rho = {rho} is not stationary"));
            }
            match innovation {
                Innovation::Gaussian { variance } if !(variance > 0.0) => {
                    return bad("innovation variance must be positive".into())
                }
                Innovation::StudentT { df } if !(df > 2.0) => {
                    return bad("Student-t degrees of freedom must exceed 2".into())
                }
                _ => {}
            }
        }
        if (1.0 - self.rho2).powi(2) <= self.rho1.powi(2) || self.rho2.abs() >= 1.0 {
            return bad("(rho1, rho2) is not stationary".into());
        }
        if self.custom {
            return Ok(());
        }
        let documented = [50, 100, 200].contains(&self.sample_size)
            && [7, 47].contains(&self.n_noise)
            && self.m == 12
            && self.rho1 == 0.3
            && self.rho2 == 0.01
            && [1.0, 5.0].contains(&self.sigma_u2)
            && [3, 5, 10].contains(&self.degree)
            && self.ar_lags == 5
            && self.burn_in == 200
            && match self.hf_process {
                HfProcess::Ar { rho, innovation } => {
                    [0.2, 0.7].contains(&rho)
                        && matches!(
                            innovation,
                            Innovation::Gaussian { variance } if variance == 5.0
                        ) | matches!(innovation, Innovation::StudentT { df } if df == 5.0)
                }
                HfProcess::Var {
                    first_block,
                    other_blocks,
                } => first_block == 0.15 && other_blocks == 0.075,
            };
        if documented {
            Ok(())
        } else {
            bad("scenario is outside the documented set; set `custom: true` to run it".into())
        }
    }
}

/// Simulated panel with the true regression function kept for oracle checks.
#[derive(Clone, Debug)]
pub struct SimulatedPanel {
    pub panel: MixedFrequencyPanel,
    /// `Σ_k (1/m) Σ_j ω_k((j−1)/m) x_{t−(j−1)/m,k}` per target period.
    pub signal: Vec<f64>,
}

/// True lag coefficients `ω((j−1)/m)/m` of relevant covariate `k`.
pub fn true_lag_coefficients(k: usize, m: usize) -> Vec<f64> {
    let (a, b) = BETA_WEIGHTS[k];
    (0..m)
        .map(|j| beta_weight(j as f64 / m as f64, a, b).unwrap() / m as f64)
        .collect()
}

fn simulate_covariates<R: Rng>(s: &Scenario, n_ticks: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let k = s.n_covariates();
    let std = Normal::new(0.0, 1.0).unwrap();
    match s.hf_process {
        HfProcess::Ar { rho, innovation } => {
            let sd0 = (innovation.variance() / (1.0 - rho * rho)).sqrt();
            let t = StudentT::new(match innovation {
                Innovation::StudentT { df } => df,
                _ => 5.0,
            })
            .unwrap();
            (0..k)
                .map(|_| {
                    let mut out = Vec::with_capacity(n_ticks);
                    let mut prev = sd0 * std.sample(rng);
                    for _ in 0..n_ticks {
                        let e = match innovation {
                            Innovation::Gaussian { variance } => variance.sqrt() * std.sample(rng),
                            Innovation::StudentT { .. } => t.sample(rng),
                        };
                        prev = rho * prev + e;
                        out.push(prev);
                    }
                    out
                })
                .collect()
        }
        HfProcess::Var {
            first_block,
            other_blocks,
        } => {
            let phi = var_matrix(k, first_block, other_blocks);
            let mut x = DVector::from_fn(k, |_, _| std.sample(rng));
            let mut out = vec![Vec::with_capacity(n_ticks); k];
            for _ in 0..n_ticks {
                let e = DVector::from_fn(k, |_, _| std.sample(rng));
                x = &phi * x + e;
                for (i, v) in x.iter().enumerate() {
                    out[i].push(*v);
                }
            }
            out
        }
    }
}

/// Block-diagonal VAR matrix: 5×5 blocks, the first filled with `first`, the rest with `other`.
pub fn var_matrix(k: usize, first: f64, other: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| {
        if i / 5 != j / 5 {
            0.0
        } else if i / 5 == 0 {
            first
        } else {
            other
        }
    })
}

/// Simulates `n_periods` target periods after burn-in. Covariates start one
/// period earlier so that shifted lag windows stay inside the sample.
pub fn simulate_ardl_midas<R: Rng>(
    s: &Scenario,
    n_periods: usize,
    rng: &mut R,
) -> Result<SimulatedPanel> {
    let m = s.m;
    let total = s.burn_in + n_periods;
    let x = simulate_covariates(s, total * m, rng);
    let weights: Vec<Vec<f64>> = (0..s.n_relevant()).map(|k| true_lag_coefficients(k, m)).collect();
    let (r1, r2) = (s.rho1, s.rho2);
    let var_y = s.sigma_u2 * (1.0 - r2) / ((1.0 + r2) * ((1.0 - r2).powi(2) - r1 * r1));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y_prev2 = var_y.sqrt() * normal.sample(rng);
    let mut y_prev = var_y.sqrt() * normal.sample(rng);
    let mut y = Vec::with_capacity(total);
    let mut signal = Vec::with_capacity(total);
    for t in 0..total {
        // period t covers ticks t·m .. t·m + m − 1; lag j counts back from the last
        let last = t * m + m - 1;
        let mut sig = 0.0;
        for (k, w) in weights.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                sig += wj * x[k][last - j];
            }
        }
        let yt = r1 * y_prev + r2 * y_prev2 + sig + s.sigma_u2.sqrt() * normal.sample(rng);
        y.push(yt);
        signal.push(sig);
        y_prev2 = y_prev;
        y_prev = yt;
    }
    let keep = s.burn_in;
    let target = LowFrequencySeries::new(1, y[keep..].to_vec())?;
    let covariates = x
        .into_iter()
        .enumerate()
        .map(|(k, series)| {
            HighFrequencySeries::new(format!("x{}", k + 1), 0, m, series[(keep - 1) * m..].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedPanel {
        panel: MixedFrequencyPanel::new(target, covariates),
        signal: signal[keep..].to_vec(),
    })
}

/// Estimators compared in the Monte Carlo study, in reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "FLOW")]
    Flow,
    #[serde(rename = "STOCK")]
    Stock,
    #[serde(rename = "MIDDLE")]
    Middle,
    #[serde(rename = "LASSO-U")]
    LassoU,
    #[serde(rename = "LASSO-M")]
    LassoM,
    #[serde(rename = "SGL-M")]
    SglM,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Flow,
        Method::Stock,
        Method::Middle,
        Method::LassoU,
        Method::LassoM,
        Method::SglM,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Flow => "FLOW",
            Method::Stock => "STOCK",
            Method::Middle => "MIDDLE",
            Method::LassoU => "LASSO-U",
            Method::LassoM => "LASSO-M",
            Method::SglM => "SGL-M",
        }
    }

    fn penalized(self) -> bool {
        matches!(self, Method::LassoU | Method::LassoM | Method::SglM)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// `None` when the method is infeasible (more regressors than rows).
    pub forecast: Option<MeanSe>,
    pub nowcast: Option<MeanSe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiseResult {
    pub method: Method,
    pub weight: String,
    pub mise: MeanSe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub replications: usize,
    pub methods: Vec<MethodResult>,
    pub mise: Vec<MiseResult>,
    /// Forecast MSFE of the true conditional mean.
    pub oracle: MeanSe,
}

impl ScenarioResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn mise_of(&self, m: Method, weight: usize) -> Option<MeanSe> {
        let label = weight_label(weight);
        self.mise
            .iter()
            .find(|r| r.method == m && r.weight == label)
            .map(|r| r.mise)
    }
}

/// Outcome of a single replication.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub methods: Vec<Method>,
    /// Squared forecast errors per method (`None` when infeasible).
    pub forecast: Vec<Option<f64>>,
    /// Squared nowcast errors per method; empty when nowcasts are disabled.
    pub nowcast: Vec<Option<f64>>,
    /// MISE per weight function for each penalized MIDAS method that was run.
    pub mise: Vec<(Method, [f64; 3])>,
    pub oracle: f64,
    pub train_periods: Vec<i64>,
    pub holdout_period: i64,
}

fn design_spec(s: &Scenario, method: Method, lead: usize) -> DesignSpec {
    let n_lags = s.n_lags();
    let covariates = (1..=s.n_covariates())
        .map(|k| {
            let id = format!("x{k}");
            let cs = match method {
                Method::Flow => CovariateSpec::aggregate(id, 1, Aggregation::Flow),
                Method::Stock => CovariateSpec::aggregate(id, 1, Aggregation::Stock),
                Method::Middle => CovariateSpec::aggregate(id, 1, Aggregation::Middle),
                Method::LassoU => CovariateSpec::dictionary(id, 1, DictionarySpec::identity(n_lags)),
                Method::LassoM | Method::SglM => {
                    CovariateSpec::dictionary(id, 1, DictionarySpec::legendre(s.degree + 1))
                }
            };
            cs.with_lead(lead).with_n_lags(n_lags)
        })
        .collect();
    let mut spec = DesignSpec::new(s.ar_lags, covariates);
    spec.unpenalized_intercept = method.penalized();
    spec.ar_grouping = ArGrouping::PerLag;
    spec
}

fn cv_plan(s: &Scenario, method: Method, rows: usize, cols: usize) -> CvPlan {
    let alphas = match method {
        Method::SglM => s.alpha_grid.clone(),
        _ => vec![1.0],
    };
    CvPlan::default()
        .with_folds(s.n_folds)
        .with_alphas(alphas)
        .with_lambda_grid(LambdaGrid::Auto {
            n: s.n_lambda,
            ratio: s.lambda_ratio.unwrap_or(if rows > cols { 1e-4 } else { 1e-2 }),
        })
}

struct MethodFit {
    prediction: f64,
    beta: Option<Vec<f64>>,
    problem: DesignProblem,
}

fn fit_method(
    s: &Scenario,
    panel: &MixedFrequencyPanel,
    method: Method,
    lead: usize,
    train: &[i64],
    holdout: i64,
) -> Result<Option<MethodFit>> {
    let spec = design_spec(s, method, lead);
    let design = Design::new(panel, &spec)?;
    let problem = design.problem(train)?;
    let row = DVector::from_vec(design.row(holdout)?);
    let beta = if method.penalized() {
        let (_, fit) = cross_validate_and_fit(
            &SgLasso::default(),
            &problem,
            &cv_plan(s, method, problem.n_rows(), problem.n_cols()),
        )?;
        fit.beta_vector()
    } else {
        if problem.n_cols() >= problem.n_rows() {
            return Ok(None);
        }
        least_squares(&problem.x, &problem.y)?
    };
    Ok(Some(MethodFit {
        prediction: row.dot(&beta),
        beta: Some(beta.as_slice().to_vec()),
        problem,
    }))
}

/// MISE of the implied weight function of relevant covariate `k` over `u_j = (j−1)/m`.
pub fn weight_mise(problem: &DesignProblem, beta: &[f64], k: usize, m: usize) -> f64 {
    let b = DVector::from_column_slice(beta);
    let coef = problem.lag_coefficients(k, &b);
    let truth = true_lag_coefficients(k, m);
    let mf = m as f64;
    (0..m)
        .map(|j| {
            let est = if j < coef.len() { mf * coef[j] } else { 0.0 };
            (est - mf * truth[j]).powi(2)
        })
        .sum::<f64>()
        / mf
}

/// Runs one replication with its own random stream.
pub fn run_replication(s: &Scenario, rep: usize) -> Result<Replication> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(rep as u64);
    let n_periods = s.sample_size + s.ar_lags + 1;
    let sim = simulate_ardl_midas(s, n_periods, &mut rng)?;
    let panel = &sim.panel;
    let first = 1 + s.ar_lags as i64;
    let holdout = n_periods as i64;
    let train: Vec<i64> = (first..holdout).collect();
    let realized = panel.target.get(holdout).unwrap();

    let y = |p: i64| panel.target.get(p).unwrap();
    let oracle_pred =
        s.rho1 * y(holdout - 1) + s.rho2 * y(holdout - 2) + sim.signal[holdout as usize - 1];
    let oracle = (realized - oracle_pred).powi(2);

    let mut forecast = Vec::with_capacity(s.methods.len());
    let mut nowcast = Vec::new();
    let mut mise = Vec::new();
    for &method in &s.methods {
        let f = fit_method(s, panel, method, s.m, &train, holdout)?;
        if let Some(f) = &f {
            if method.penalized() {
                let beta = f.beta.as_ref().unwrap();
                let mut row = [0.0; 3];
                for (k, cell) in row.iter_mut().enumerate() {
                    *cell = weight_mise(&f.problem, beta, k, s.m);
                }
                mise.push((method, row));
            }
        }
        forecast.push(f.map(|f| (realized - f.prediction).powi(2)));
        if s.nowcast {
            let n = fit_method(s, panel, method, s.nowcast_lead(), &train, holdout)?;
            nowcast.push(n.map(|f| (realized - f.prediction).powi(2)));
        }
    }
    Ok(Replication {
        methods: s.methods.clone(),
        forecast,
        nowcast,
        mise,
        oracle,
        train_periods: train,
        holdout_period: holdout,
    })
}

/// Runs every replication (in parallel, results reduced in replication order).
pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    s.validate()?;
    let reps: Vec<Replication> = (0..s.replications)
        .into_par_iter()
        .map(|r| run_replication(s, r))
        .collect::<Result<_>>()?;
    Ok(summarize(&reps))
}

pub fn summarize(reps: &[Replication]) -> ScenarioResult {
    let stat = |vals: Vec<Option<f64>>| -> Option<MeanSe> {
        vals.into_iter().collect::<Option<Vec<f64>>>().map(|v| MeanSe::of(&v))
    };
    let methods_run = reps.first().map(|r| r.methods.clone()).unwrap_or_default();
    let methods = methods_run
        .iter()
        .enumerate()
        .map(|(i, &method)| MethodResult {
            method,
            forecast: stat(reps.iter().map(|r| r.forecast[i]).collect()),
            nowcast: stat(reps.iter().map(|r| r.nowcast.get(i).copied().flatten()).collect()),
        })
        .collect();
    let mut mise = Vec::new();
    for method in [Method::LassoU, Method::LassoM, Method::SglM] {
        for k in 0..BETA_WEIGHTS.len() {
            let v: Vec<f64> = reps
                .iter()
                .filter_map(|r| r.mise.iter().find(|(m, _)| *m == method).map(|(_, row)| row[k]))
                .collect();
            if v.len() == reps.len() && !v.is_empty() {
                mise.push(MiseResult {
                    method,
                    weight: weight_label(k),
                    mise: MeanSe::of(&v),
                });
            }
        }
    }
    let oracle: Vec<f64> = reps.iter().map(|r| r.oracle).collect();
    ScenarioResult {
        replications: reps.len(),
        methods,
        mise,
        oracle: MeanSe::of(&oracle),
    }
}

/// Synthetic quarterly panel with monthly covariates resembling a nowcasting data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoEmpiricalConfig {
    pub n_quarters: usize,
    #[serde(default = "d_pe_cov")]
    pub n_covariates: usize,
    /// Covariates with a nonzero loading; 0 gives a pure-noise panel.
    #[serde(default = "d_pe_signal")]
    pub n_signal: usize,
    #[serde(default = "d_pe_loading")]
    pub loading: f64,
    #[serde(default = "d_pe_ar")]
    pub ar_coefficient: f64,
    #[serde(default = "d_pe_rho")]
    pub covariate_rho: f64,
    #[serde(default = "d_pe_sigma")]
    pub noise_sd: f64,
}

fn d_pe_cov() -> usize {
    40
}
fn d_pe_signal() -> usize {
    4
}
fn d_pe_loading() -> f64 {
    1.0
}
fn d_pe_ar() -> f64 {
    0.4
}
fn d_pe_rho() -> f64 {
    0.5
}
fn d_pe_sigma() -> f64 {
    0.5
}

impl PseudoEmpiricalConfig {
    pub fn new(n_quarters: usize, n_signal: usize) -> Self {
        Self {
            n_quarters,
            n_covariates: d_pe_cov(),
            n_signal,
            loading: d_pe_loading(),
            ar_coefficient: d_pe_ar(),
            covariate_rho: d_pe_rho(),
            noise_sd: d_pe_sigma(),
        }
    }
}

/// Category of pseudo-empirical covariate `k` (0-based).
pub fn pseudo_category(k: usize) -> &'static str {
    ["real", "labor", "survey", "financial"][k % 4]
}

/// `y_t = a y_{t−1} + Σ_{k<n_signal} c (1/3) Σ_j ω_k(j/3) x_{t−j/3,k} + u_t` with
/// monthly AR(1) covariates, one month of publication delay on every fourth
/// series, and the target starting at quarter 1 (covariates two quarters earlier).
pub fn simulate_pseudo_empirical<R: Rng>(
    cfg: &PseudoEmpiricalConfig,
    rng: &mut R,
) -> Result<MixedFrequencyPanel> {
    if cfg.n_signal > cfg.n_covariates || cfg.n_quarters < 3 {
        return Err(Error::InvalidParameter("invalid pseudo-empirical configuration".into()));
    }
    let m = 3;
    let burn = 50;
    let pre = 2;
    let total = burn + pre + cfg.n_quarters;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rho = cfg.covariate_rho;
    let x: Vec<Vec<f64>> = (0..cfg.n_covariates)
        .map(|_| {
            let mut v = normal.sample(rng) / (1.0 - rho * rho).sqrt();
            (0..total * m)
                .map(|_| {
                    v = rho * v + normal.sample(rng);
                    v
                })
                .collect()
        })
        .collect();
    let mut y = vec![0.0; total];
    for t in 1..total {
        let last = t * m + m - 1;
        let mut sig = 0.0;
        for (k, xk) in x.iter().enumerate().take(cfg.n_signal) {
            let w = true_lag_coefficients(k % 3, 6);
            for (j, wj) in w.iter().enumerate() {
                sig += cfg.loading * wj * xk[last - j];
            }
        }
        y[t] = cfg.ar_coefficient * y[t - 1] + sig + cfg.noise_sd * normal.sample(rng);
    }
    let target = LowFrequencySeries::new(1, y[burn + pre..].to_vec())?;
    let covariates = x
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let s = HighFrequencySeries::new(format!("c{:02}", k + 1), 1 - pre as i64, m, v[burn * m..].to_vec())?
                .with_category(pseudo_category(k));
            Ok(if k % 4 == 3 { s.with_delay(1) } else { s })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixedFrequencyPanel::new(target, covariates))
}

/// Re-exported for tests that need per-replication generators.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}
