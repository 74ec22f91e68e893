//! Blocked K-fold cross-validation over `(λ, α)`.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignProblem;
use crate::error::{Error, Result};
use crate::solver::{
    elastic_net_lambda_max, elastic_net_path, fit_path, lambda_max, GroupWeights,
    PreparedProblem, SgLassoFit, SolverOptions,
};

/// Contiguous folds over `0..n`; the first `n mod k` folds get one extra row.
pub fn make_folds(n: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("{k} folds; at least 2 are required")));
    }
    if n < 2 * k {
        return Err(Error::InsufficientData(format!(
            "too few rows: {n} rows for {k} folds (need at least {})",
            2 * k
        )));
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Log-spaced grid from `lmax` down to `ratio · lmax`.
pub fn lambda_grid(lmax: f64, n: usize, ratio: f64) -> Vec<f64> {
    if !(lmax > 0.0) || n == 0 {
        return vec![0.0];
    }
    if n == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (lmax * ratio).ln());
    (0..n)
        .map(|i| (hi + (lo - hi) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// `n` log-spaced values from `λ_max` down to `ratio · λ_max`, per α.
    Auto { n: usize, ratio: f64 },
    /// The same decreasing grid for every α.
    Fixed(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { n: 100, ratio: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvPlan {
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_alphas")]
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    /// Rows dropped from the training set on each side of the held-out fold.
    #[serde(default)]
    pub embargo: usize,
    #[serde(default)]
    pub group_weights: GroupWeights,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_folds() -> usize {
    5
}

fn default_alphas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            n_folds: default_folds(),
            alpha_grid: default_alphas(),
            lambda_grid: LambdaGrid::default(),
            embargo: 0,
            group_weights: GroupWeights::Unit,
            solver: SolverOptions::default(),
        }
    }
}

impl CvPlan {
    pub fn with_alphas(mut self, alphas: Vec<f64>) -> Self {
        self.alpha_grid = alphas;
        self
    }

    pub fn with_folds(mut self, k: usize) -> Self {
        self.n_folds = k;
        self
    }

    pub fn with_lambda_grid(mut self, grid: LambdaGrid) -> Self {
        self.lambda_grid = grid;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidParameter("empty alpha grid".into()));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("alpha = {a} outside [0, 1]")));
        }
        match &self.lambda_grid {
            LambdaGrid::Auto { n, ratio } => {
                if *n == 0 || !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidParameter(
                        "automatic lambda grid needs n ≥ 1 and 0 < ratio < 1".into(),
                    ));
                }
            }
            LambdaGrid::Fixed(g) => {
                if g.is_empty() || g.iter().any(|l| !(*l >= 0.0)) || g.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(Error::InvalidParameter(
                        "lambda grid must be non-empty, non-negative and strictly decreasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A penalized estimator with a warm-started regularization path.
pub trait PathEstimator: Sync {
    fn lambda_max(&self, prep: &PreparedProblem, alpha: f64) -> Result<f64>;

    fn fit_path(
        &self,
        prep: &PreparedProblem,
        alpha: f64,
        lambdas: &[f64],
        opts: &SolverOptions,
    ) -> Result<Vec<SgLassoFit>>;
}

/// The sparse-group LASSO with the given group weights.
#[derive(Clone, Debug, Default)]
pub struct SgLasso {
    pub weights: GroupWeights,
}

impl PathEstimator for SgLasso {
    fn lambda_max(&self, prep: &PreparedProblem, alpha: f64) -> Result<f64> {
        lambda_max(prep, alpha, &self.weights)
    }

    fn fit_path(
        &self,
        prep: &PreparedProblem,
        alpha: f64,
        lambdas: &[f64],
        opts: &SolverOptions,
    ) -> Result<Vec<SgLassoFit>> {
        fit_path(prep, alpha, lambdas, &self.weights, opts)
    }
}

/// Elastic net on individual coefficients (`α = 0` is ridge, `α = 1` the LASSO).
#[derive(Clone, Copy, Debug, Default)]
pub struct ElasticNet;

impl PathEstimator for ElasticNet {
    fn lambda_max(&self, prep: &PreparedProblem, alpha: f64) -> Result<f64> {
        elastic_net_lambda_max(prep, alpha)
    }

    fn fit_path(
        &self,
        prep: &PreparedProblem,
        alpha: f64,
        lambdas: &[f64],
        opts: &SolverOptions,
    ) -> Result<Vec<SgLassoFit>> {
        elastic_net_path(prep, alpha, lambdas, opts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub alpha_index: usize,
    pub lambda_index: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub cv_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub alphas: Vec<f64>,
    /// λ grid of every α.
    pub lambdas: Vec<Vec<f64>>,
    /// Mean held-out MSE, `[α][λ]`.
    pub cv_error: Vec<Vec<f64>>,
    /// Standard error of the mean over folds, `[α][λ]`.
    pub cv_se: Vec<Vec<f64>>,
    /// Held-out MSE per fold, `[fold][α][λ]`.
    pub fold_errors: Vec<Vec<Vec<f64>>>,
    pub best: Selection,
    pub one_se: Selection,
}

/// Blocked cross-validation of the sparse-group LASSO.
pub fn cross_validate(problem: &DesignProblem, plan: &CvPlan) -> Result<CvResult> {
    let est = SgLasso {
        weights: plan.group_weights.clone(),
    };
    cross_validate_with(&est, problem, plan)
}

/// λ grids of every α, computed on the full problem.
pub fn lambda_grids<E: PathEstimator>(
    est: &E,
    prep: &PreparedProblem,
    plan: &CvPlan,
) -> Result<Vec<Vec<f64>>> {
    plan.alpha_grid
        .iter()
        .map(|&a| match &plan.lambda_grid {
            LambdaGrid::Auto { n, ratio } => Ok(lambda_grid(est.lambda_max(prep, a)?, *n, *ratio)),
            LambdaGrid::Fixed(g) => Ok(g.clone()),
        })
        .collect()
}

/// Blocked cross-validation of any path estimator.
pub fn cross_validate_with<E: PathEstimator>(
    est: &E,
    problem: &DesignProblem,
    plan: &CvPlan,
) -> Result<CvResult> {
    plan.validate()?;
    let n = problem.n_rows();
    let folds = make_folds(n, plan.n_folds)?;
    let standardize = plan.solver.standardize;
    let full = PreparedProblem::new(problem, standardize)?;
    let lambdas = lambda_grids(est, &full, plan)?;

    let fold_errors: Vec<Vec<Vec<f64>>> = folds
        .par_iter()
        .map(|test| {
            let lo = test.start.saturating_sub(plan.embargo);
            let hi = (test.end + plan.embargo).min(n);
            let train: Vec<usize> = (0..lo).chain(hi..n).collect();
            if train.is_empty() {
                return Err(Error::InsufficientData("embargo leaves no training rows".into()));
            }
            let sub = problem.select_rows(&train);
            let prep = PreparedProblem::new(&sub, standardize)?;
            let xt = problem.x.rows(test.start, test.len());
            let yt = problem.y.rows(test.start, test.len());
            plan.alpha_grid
                .iter()
                .zip(&lambdas)
                .map(|(&alpha, grid)| {
                    let path = est.fit_path(&prep, alpha, grid, &plan.solver)?;
                    Ok(path
                        .iter()
                        .map(|f| {
                            let pred = &xt * f.beta_vector();
                            (yt - pred).norm_squared() / test.len() as f64
                        })
                        .collect())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let k = folds.len() as f64;
    let mut cv_error = Vec::with_capacity(lambdas.len());
    let mut cv_se = Vec::with_capacity(lambdas.len());
    for (a, grid) in lambdas.iter().enumerate() {
        let mut means = Vec::with_capacity(grid.len());
        let mut ses = Vec::with_capacity(grid.len());
        for l in 0..grid.len() {
            let vals: Vec<f64> = fold_errors.iter().map(|f| f[a][l]).collect();
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            means.push(mean);
            ses.push((var / k).sqrt());
        }
        cv_error.push(means);
        cv_se.push(ses);
    }

    let sel = |a: usize, l: usize| Selection {
        alpha_index: a,
        lambda_index: l,
        alpha: plan.alpha_grid[a],
        lambda: lambdas[a][l],
        cv_error: cv_error[a][l],
    };
    // sparser wins ties: larger λ, then larger α
    let better = |cand: &Selection, cur: &Selection| {
        (cand.lambda, cand.alpha) > (cur.lambda, cur.alpha)
    };
    let mut best: Option<Selection> = None;
    for a in 0..lambdas.len() {
        for l in 0..lambdas[a].len() {
            let c = sel(a, l);
            if !c.cv_error.is_finite() {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(b) if c.cv_error < b.cv_error || (c.cv_error == b.cv_error && better(&c, &b)) => Some(c),
                keep => keep,
            };
        }
    }
    let best = best.ok_or_else(|| Error::Numerical("no finite cross-validation error".into()))?;
    let bound = best.cv_error + cv_se[best.alpha_index][best.lambda_index];
    let mut one_se = best;
    for a in 0..lambdas.len() {
        for l in 0..lambdas[a].len() {
            let c = sel(a, l);
            if c.cv_error <= bound && better(&c, &one_se) {
                one_se = c;
            }
        }
    }

    Ok(CvResult {
        alphas: plan.alpha_grid.clone(),
        lambdas,
        cv_error,
        cv_se,
        fold_errors,
        best,
        one_se,
    })
}

/// Cross-validates and refits on the whole problem at the selected `(α, λ)`.
pub fn cross_validate_and_fit<E: PathEstimator>(
    est: &E,
    problem: &DesignProblem,
    plan: &CvPlan,
) -> Result<(CvResult, SgLassoFit)> {
    let cv = cross_validate_with(est, problem, plan)?;
    let full = PreparedProblem::new(problem, plan.solver.standardize)?;
    let fit = refit(est, &full, &cv, &cv.best, &plan.solver)?;
    Ok((cv, fit))
}

/// Fit at `sel`, warm-started along the selected α's grid.
pub fn refit<E: PathEstimator>(
    est: &E,
    prep: &PreparedProblem,
    cv: &CvResult,
    sel: &Selection,
    opts: &SolverOptions,
) -> Result<SgLassoFit> {
    let grid = &cv.lambdas[sel.alpha_index][..=sel.lambda_index];
    let mut path = est.fit_path(prep, sel.alpha, grid, opts)?;
    path.pop()
        .ok_or_else(|| Error::Numerical("empty regularization path".into()))
}
