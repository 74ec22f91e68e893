//! Rolling-window nowcasting, comparison baselines and forecast evaluation.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::design::{CovariateBlock, Design, DesignProblem, DesignSpec};
use crate::error::{Error, Result};
use crate::solver::least_squares;
use crate::timeseries::MixedFrequencyPanel;
use crate::tuning::{cross_validate_and_fit, CvPlan, CvResult, ElasticNet, SgLasso};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    TwoMonth,
    OneMonth,
    EndOfQuarter,
    Custom(String),
}

impl Horizon {
    pub fn label(&self) -> String {
        match self {
            Horizon::TwoMonth => "2m".into(),
            Horizon::OneMonth => "1m".into(),
            Horizon::EndOfQuarter => "eoq".into(),
            Horizon::Custom(s) => s.clone(),
        }
    }
}

/// One out-of-sample prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Target period being predicted.
    pub origin: i64,
    pub horizon: String,
    pub prediction: f64,
    pub realized: Option<f64>,
    /// `realized − prediction`.
    pub error: Option<f64>,
}

impl ForecastRecord {
    pub fn new(origin: i64, horizon: &str, prediction: f64, realized: Option<f64>) -> Self {
        Self {
            origin,
            horizon: horizon.to_string(),
            prediction,
            realized,
            error: realized.map(|r| r - prediction),
        }
    }
}

/// Non-sg-LASSO comparison models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    /// OLS on the intercept and the autoregressive lags.
    Ar,
    /// OLS on the intercept, the autoregressive lags and the first principal
    /// component of the standardized covariate columns.
    PcaOls,
    RidgeU,
    LassoU,
    ElasticNetU,
}

impl BaselineMethod {
    pub fn label(self) -> &'static str {
        match self {
            BaselineMethod::Ar => "AR",
            BaselineMethod::PcaOls => "PCA-OLS",
            BaselineMethod::RidgeU => "Ridge-U",
            BaselineMethod::LassoU => "LASSO-U",
            BaselineMethod::ElasticNetU => "ENet-U",
        }
    }
}

/// A baseline fit expressed as coefficients on the problem's columns.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineFit {
    pub method: BaselineMethod,
    pub beta: DVector<f64>,
    pub cv: Option<CvResult>,
}

impl BaselineFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        row.iter().zip(self.beta.iter()).map(|(a, b)| a * b).sum()
    }
}

fn covariate_columns(problem: &DesignProblem) -> Vec<usize> {
    problem.blocks.iter().flat_map(|b| b.columns.clone()).collect()
}

fn intercept_column(problem: &DesignProblem) -> Result<usize> {
    problem
        .column_names
        .iter()
        .position(|c| c == "intercept")
        .ok_or_else(|| Error::InvalidParameter("baseline needs an intercept column".into()))
}

/// First principal component loadings of the standardized columns `cols`:
/// returns `(mean, sd, loading)` per column.
pub fn first_principal_component(x: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>, DVector<f64>)> {
    let (n, p) = x.shape();
    if n < 2 || p == 0 {
        return Err(Error::InsufficientData("principal component needs 2 rows and 1 column".into()));
    }
    let mut z = x.clone();
    let mut means = Vec::with_capacity(p);
    let mut sds = Vec::with_capacity(p);
    for j in 0..p {
        let mut c = z.column_mut(j);
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let sd = (c.norm_squared() / (n as f64 - 1.0)).sqrt();
        if sd > 0.0 {
            c /= sd;
        }
        means.push(mean);
        sds.push(if sd > 0.0 { sd } else { 1.0 });
    }
    let cov = z.tr_mul(&z) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let imax = eig.eigenvalues.imax();
    let mut v = eig.eigenvectors.column(imax).into_owned();
    // fix the sign so that the largest loading is positive
    let jmax = v.iamax();
    if v[jmax] < 0.0 {
        v = -v;
    }
    Ok((means, sds, v))
}

pub fn baseline_fit(problem: &DesignProblem, method: BaselineMethod, plan: &CvPlan) -> Result<BaselineFit> {
    let p = problem.n_cols();
    let cov_cols = covariate_columns(problem);
    let base_cols: Vec<usize> = (0..p).filter(|j| !cov_cols.contains(j)).collect();
    let mut beta = DVector::zeros(p);
    let mut cv = None;
    match method {
        BaselineMethod::Ar => {
            let x = problem.x.select_columns(&base_cols);
            let b = least_squares(&x, &problem.y)?;
            for (k, &j) in base_cols.iter().enumerate() {
                beta[j] = b[k];
            }
        }
        BaselineMethod::PcaOls => {
            let icol = intercept_column(problem)?;
            let xc = problem.x.select_columns(&cov_cols);
            let (means, sds, v) = first_principal_component(&xc)?;
            let mut x = problem.x.select_columns(&base_cols);
            let n = x.nrows();
            let mut pc = DVector::zeros(n);
            for i in 0..n {
                pc[i] = (0..cov_cols.len()).map(|k| v[k] * (xc[(i, k)] - means[k]) / sds[k]).sum();
            }
            x = x.insert_column(base_cols.len(), 0.0);
            x.set_column(base_cols.len(), &pc);
            let b = least_squares(&x, &problem.y)?;
            for (k, &j) in base_cols.iter().enumerate() {
                beta[j] = b[k];
            }
            let bpc = b[base_cols.len()];
            for (k, &j) in cov_cols.iter().enumerate() {
                beta[j] = bpc * v[k] / sds[k];
                beta[icol] -= bpc * v[k] * means[k] / sds[k];
            }
        }
        BaselineMethod::RidgeU | BaselineMethod::LassoU | BaselineMethod::ElasticNetU => {
            let alphas = match method {
                BaselineMethod::RidgeU => vec![0.0],
                BaselineMethod::LassoU => vec![1.0],
                _ => {
                    let inner: Vec<f64> =
                        plan.alpha_grid.iter().copied().filter(|a| *a > 0.0 && *a < 1.0).collect();
                    if inner.is_empty() {
                        vec![0.5]
                    } else {
                        inner
                    }
                }
            };
            let plan = plan.clone().with_alphas(alphas);
            let (res, fit) = cross_validate_and_fit(&ElasticNet, problem, &plan)?;
            beta = fit.beta_vector();
            cv = Some(res);
        }
    }
    Ok(BaselineFit { method, beta, cv })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NowcastModel {
    SgLasso,
    Baseline(BaselineMethod),
}

impl NowcastModel {
    pub fn label(self) -> &'static str {
        match self {
            NowcastModel::SgLasso => "SGL-M",
            NowcastModel::Baseline(b) => b.label(),
        }
    }
}

/// Fit summary of one rolling origin.
#[derive(Clone, Debug, PartialEq)]
pub struct OriginFit {
    pub origin: i64,
    pub train_periods: Vec<i64>,
    pub beta: DVector<f64>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RollingOutput {
    pub records: Vec<ForecastRecord>,
    pub fits: Vec<OriginFit>,
    pub column_names: Vec<String>,
    pub blocks: Vec<CovariateBlock>,
}

/// Prediction origins and their training periods: every usable observed period
/// after the first `window`, plus the period after the sample when its row can be built.
pub fn rolling_origins(
    panel: &MixedFrequencyPanel,
    spec: &DesignSpec,
    window: usize,
) -> Result<Vec<(i64, Vec<i64>)>> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be ≥ 1".into()));
    }
    let design = Design::new(panel, spec)?;
    let last = panel.target.last_period();
    let available = design.available_periods();
    let observed: Vec<i64> = available.iter().copied().filter(|&p| p <= last).collect();
    let mut out = Vec::new();
    for i in window..observed.len() {
        out.push((observed[i], observed[i - window..i].to_vec()));
    }
    if available.last() == Some(&(last + 1)) && observed.len() >= window {
        out.push((last + 1, observed[observed.len() - window..].to_vec()));
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} usable periods cannot fill a window of {window} plus one origin",
            observed.len()
        )));
    }
    Ok(out)
}

/// Rolling-window out-of-sample predictions. For every origin the target is
/// truncated before the origin, so no later response can reach the fit.
pub fn rolling_nowcast(
    panel: &MixedFrequencyPanel,
    spec: &DesignSpec,
    window: usize,
    plan: &CvPlan,
    model: NowcastModel,
    horizon: &str,
) -> Result<RollingOutput> {
    let origins = rolling_origins(panel, spec, window)?;
    let template = Design::new(panel, spec)?;
    let column_names = template.column_names().to_vec();
    let blocks = template.blocks().to_vec();
    let results: Vec<(ForecastRecord, OriginFit)> = origins
        .par_iter()
        .map(|(origin, train)| {
            let visible = panel.with_target_until(origin - 1)?;
            let design = Design::new(&visible, spec)?;
            let problem = design.problem(train)?;
            let row = design.row(*origin)?;
            let (beta, alpha, lambda) = match model {
                NowcastModel::SgLasso => {
                    let est = SgLasso {
                        weights: plan.group_weights.clone(),
                    };
                    let (cv, fit) = cross_validate_and_fit(&est, &problem, plan)?;
                    (fit.beta_vector(), Some(cv.best.alpha), Some(cv.best.lambda))
                }
                NowcastModel::Baseline(m) => {
                    let f = baseline_fit(&problem, m, plan)?;
                    let sel = f.cv.as_ref().map(|c| c.best);
                    (f.beta, sel.map(|s| s.alpha), sel.map(|s| s.lambda))
                }
            };
            let prediction: f64 = row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            Ok((
                ForecastRecord::new(*origin, horizon, prediction, panel.target.get(*origin)),
                OriginFit {
                    origin: *origin,
                    train_periods: train.clone(),
                    beta,
                    alpha,
                    lambda,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (records, fits) = results.into_iter().unzip();
    Ok(RollingOutput {
        records,
        fits,
        column_names,
        blocks,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DmOptions {
    /// Bartlett bandwidth; defaults to `⌊n^{1/3}⌋`.
    pub hac_lags: Option<usize>,
    /// Harvey–Leybourne–Newbold small-sample correction (one-step horizon).
    pub harvey: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub hac_lags: usize,
    /// Every loss differential is zero.
    pub degenerate: bool,
}

/// Diebold-Mariano statistic for `d_t = e1_t² − e2_t²`; negative values favor model 1.
pub fn diebold_mariano(e1: &[f64], e2: &[f64], opts: DmOptions) -> Result<DmResult> {
    check_lengths(e1, e2)?;
    let n = e1.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("{n} errors; at least 5 are required")));
    }
    let lags = opts.hac_lags.unwrap_or((n as f64).cbrt().floor() as usize);
    let d: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a * a - b * b).collect();
    if d.iter().all(|v| *v == 0.0) {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            hac_lags: lags,
            degenerate: true,
        });
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let c: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let gamma = |k: usize| c[k..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / nf;
    let mut lrv = gamma(0);
    for k in 1..=lags.min(n - 1) {
        lrv += 2.0 * (1.0 - k as f64 / (lags as f64 + 1.0)) * gamma(k);
    }
    let mut stat = if lrv > 0.0 {
        mean / (lrv / nf).sqrt()
    } else {
        f64::INFINITY.copysign(mean)
    };
    let p_value = if opts.harvey {
        stat *= ((nf - 1.0) / nf).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 1.0).unwrap();
        2.0 * (1.0 - t.cdf(stat.abs()))
    } else {
        2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(stat.abs()))
    };
    Ok(DmResult {
        statistic: stat,
        p_value,
        hac_lags: lags,
        degenerate: false,
    })
}

fn check_lengths(e1: &[f64], e2: &[f64]) -> Result<()> {
    if e1.len() != e2.len() {
        return Err(Error::DimensionMismatch(format!(
            "error sequences of lengths {} and {}",
            e1.len(),
            e2.len()
        )));
    }
    Ok(())
}

/// Running sum of `e1_t² − e2_t²`; positive values mean model 1 has larger errors.
pub fn cumsfe(e1: &[f64], e2: &[f64]) -> Result<Vec<f64>> {
    check_lengths(e1, e2)?;
    let mut acc = 0.0;
    Ok(e1
        .iter()
        .zip(e2)
        .map(|(a, b)| {
            acc += a * a - b * b;
            acc
        })
        .collect())
}

pub fn rmse(e: &[f64]) -> f64 {
    (e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt()
}

/// `RMSE(model) / RMSE(benchmark)`.
pub fn relative_rmse(model: &[f64], benchmark: &[f64]) -> Result<f64> {
    check_lengths(model, benchmark)?;
    if model.is_empty() {
        return Err(Error::InsufficientData("no errors".into()));
    }
    Ok(rmse(model) / rmse(benchmark))
}

/// Comparison of model B against benchmark A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rmse_a: f64,
    pub rmse_b: f64,
    pub relative_rmse: f64,
    pub dm: DmResult,
    pub cumsfe: Vec<f64>,
}

pub fn compare(a: &[f64], b: &[f64], opts: DmOptions) -> Result<Comparison> {
    Ok(Comparison {
        rmse_a: rmse(a),
        rmse_b: rmse(b),
        relative_rmse: relative_rmse(b, a)?,
        dm: diebold_mariano(a, b, opts)?,
        cumsfe: cumsfe(a, b)?,
    })
}

/// Fraction of covariates selected in each category: a covariate is selected
/// when any of its coefficients is nonzero; the denominator is the number of covariates.
pub fn selection_fractions(
    beta: &[f64],
    blocks: &[CovariateBlock],
    categories: &HashMap<String, String>,
) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let total = blocks.len() as f64;
    for b in blocks {
        let cat = categories
            .get(&b.series)
            .ok_or_else(|| Error::UnmappedGroup(b.series.clone()))?;
        let entry = out.entry(cat.clone()).or_insert(0.0);
        if b.columns.clone().any(|j| beta[j] != 0.0) {
            *entry += 1.0 / total;
        }
    }
    Ok(out)
}

/// Category map built from the categories recorded in the blocks.
pub fn block_categories(blocks: &[CovariateBlock]) -> HashMap<String, String> {
    blocks
        .iter()
        .filter_map(|b| b.category.clone().map(|c| (b.series.clone(), c)))
        .collect()
}
