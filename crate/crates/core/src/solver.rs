//! Sparse-group LASSO by block coordinate descent.
//!
//! The solver minimizes `‖y − Xb‖²_T + 2λ Σ_G w_G (α|b_G|₁ + (1−α)|b_G|₂)`
//! on a working problem whose columns are scaled to unit empirical norm.
//! Everything runs on the Gram matrix `XᵀX/T`, so one preparation serves a
//! whole regularization path.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::DesignProblem;
use crate::error::{Error, Result};

/// `sign(z) · max(|z| − t, 0)`.
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Proximal operator of `t·(α|·|₁ + (1−α)|·|₂)` on one group.
pub fn prox_sparse_group(z: &[f64], t: f64, alpha: f64) -> Vec<f64> {
    let mut s = z.to_vec();
    prox_in_place(&mut s, t, alpha);
    s
}

fn prox_in_place(s: &mut [f64], t: f64, alpha: f64) {
    s.iter_mut().for_each(|v| *v = soft_threshold(*v, alpha * t));
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let shrink = (1.0 - alpha) * t;
    if norm <= shrink {
        s.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let f = 1.0 - shrink / norm;
        s.iter_mut().for_each(|v| *v *= f);
    }
}

/// Per-group multipliers of the penalty. Unpenalized groups always get 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupWeights {
    #[default]
    Unit,
    /// `√|G|`.
    SqrtSize,
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default)]
    pub group_weights: GroupWeights,
}

impl PenaltySpec {
    pub fn new(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            group_weights: GroupWeights::Unit,
        }
    }

    pub fn with_weights(mut self, weights: GroupWeights) -> Self {
        self.group_weights = weights;
        self
    }

    fn validate(&self, n_groups: usize) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {} must be ≥ 0", self.lambda)));
        }
        validate_alpha(self.alpha)?;
        if let GroupWeights::Custom(w) = &self.group_weights {
            if w.len() != n_groups {
                return Err(Error::DimensionMismatch(format!(
                    "{} group weights for {n_groups} groups",
                    w.len()
                )));
            }
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidParameter("group weights must be finite and ≥ 0".into()));
            }
        }
        Ok(())
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Maximal coefficient change (working scale) that ends the iteration.
    pub tolerance: f64,
    /// KKT residual required to declare convergence.
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub standardize: bool,
    /// Record the objective after every sweep.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            kkt_tolerance: 1e-6,
            max_iterations: 10_000,
            standardize: true,
            trace: false,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.kkt_tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgLassoFit {
    /// Coefficients on the original column scale.
    pub beta: Vec<f64>,
    /// Objective of the working (standardized) problem at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_set: Vec<usize>,
    pub active_groups: Vec<usize>,
    pub kkt_residual: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Objective after each sweep, if requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl SgLassoFit {
    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }
}

#[derive(Clone, Debug)]
struct PreparedGroup {
    /// Columns of the group with nonzero norm.
    indices: Vec<usize>,
    size: usize,
    penalized: bool,
    lipschitz: f64,
    /// Pseudo-inverse of the group Gram block, for unpenalized multi-column groups.
    pinv: Option<DMatrix<f64>>,
}

/// Sufficient statistics of a least-squares problem in working coordinates.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    n: usize,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    scales: Vec<f64>,
    groups: Vec<PreparedGroup>,
}

impl PreparedProblem {
    pub fn new(problem: &DesignProblem, standardize: bool) -> Result<Self> {
        let n = problem.n_rows();
        if n == 0 {
            return Err(Error::InsufficientData("problem has no rows".into()));
        }
        let nf = n as f64;
        let x = &problem.x;
        let mut gram = x.tr_mul(x) / nf;
        let mut xty = x.tr_mul(&problem.y) / nf;
        let yty = problem.y.norm_squared() / nf;
        let p = x.ncols();
        let mut scales = vec![1.0; p];
        for j in 0..p {
            let d = gram[(j, j)];
            if !(d > 1e-24 * (1.0 + yty)) {
                scales[j] = 0.0;
            } else if standardize {
                scales[j] = d.sqrt();
            }
        }
        for j in 0..p {
            let sj = if scales[j] > 0.0 { 1.0 / scales[j] } else { 0.0 };
            xty[j] *= sj;
            for i in 0..p {
                let si = if scales[i] > 0.0 { 1.0 / scales[i] } else { 0.0 };
                gram[(i, j)] *= si * sj;
            }
        }
        let groups = problem
            .groups
            .groups()
            .iter()
            .map(|g| {
                let indices: Vec<usize> =
                    g.indices.iter().copied().filter(|&j| scales[j] > 0.0).collect();
                let sub = gram.select_rows(&indices).select_columns(&indices);
                let lipschitz = match indices.len() {
                    0 => 0.0,
                    1 => sub[(0, 0)],
                    _ => SymmetricEigen::new(sub.clone()).eigenvalues.max(),
                };
                let pinv = if !g.penalized && indices.len() > 1 {
                    Some(pseudo_inverse(&sub)?)
                } else {
                    None
                };
                Ok(PreparedGroup {
                    indices,
                    size: g.indices.len(),
                    penalized: g.penalized,
                    lipschitz,
                    pinv,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            gram,
            xty,
            yty,
            scales,
            groups,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.scales.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Column scales used for the working problem (0 marks an excluded column).
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    fn weights(&self, w: &GroupWeights) -> Vec<f64> {
        self.groups
            .iter()
            .enumerate()
            .map(|(g, pg)| {
                if !pg.penalized {
                    0.0
                } else {
                    match w {
                        GroupWeights::Unit => 1.0,
                        GroupWeights::SqrtSize => (pg.size as f64).sqrt(),
                        GroupWeights::Custom(v) => v[g],
                    }
                }
            })
            .collect()
    }

    fn to_working(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter().zip(&self.scales).map(|(b, s)| b * s).collect()
    }

    fn to_original(&self, b: &[f64]) -> Vec<f64> {
        b.iter()
            .zip(&self.scales)
            .map(|(v, &s)| if s > 0.0 { v / s } else { 0.0 })
            .collect()
    }

    fn gradient(&self, b: &[f64]) -> Vec<f64> {
        let bv = DVector::from_column_slice(b);
        let g = &self.xty - &self.gram * bv;
        g.as_slice().to_vec()
    }

    /// Objective of the working problem at original-scale coefficients `beta`.
    pub fn objective(&self, beta: &[f64], penalty: &PenaltySpec) -> Result<f64> {
        self.check_len(beta)?;
        penalty.validate(self.groups.len())?;
        let b = self.to_working(beta);
        let r = self.gradient(&b);
        let w = self.weights(&penalty.group_weights);
        Ok(self.objective_working(&b, &r, penalty.lambda, penalty.alpha, &w))
    }

    fn objective_working(&self, b: &[f64], r: &[f64], lambda: f64, alpha: f64, w: &[f64]) -> f64 {
        let mut loss = self.yty;
        for j in 0..b.len() {
            loss -= b[j] * (self.xty[j] + r[j]);
        }
        loss + 2.0 * lambda * self.penalty_value(b, alpha, w)
    }

    fn penalty_value(&self, b: &[f64], alpha: f64, w: &[f64]) -> f64 {
        self.groups
            .iter()
            .zip(w)
            .map(|(g, &wg)| {
                if wg == 0.0 {
                    return 0.0;
                }
                let l1: f64 = g.indices.iter().map(|&j| b[j].abs()).sum();
                let l2 = g.indices.iter().map(|&j| b[j] * b[j]).sum::<f64>().sqrt();
                wg * (alpha * l1 + (1.0 - alpha) * l2)
            })
            .sum()
    }

    fn check_len(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} columns",
                beta.len(),
                self.n_cols()
            )));
        }
        Ok(())
    }

    fn kkt_working(&self, b: &[f64], r: &[f64], lambda: f64, alpha: f64, w: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (g, &wg) in self.groups.iter().zip(w) {
            if wg == 0.0 {
                for &j in &g.indices {
                    worst = worst.max(r[j].abs());
                }
                continue;
            }
            let lw = lambda * wg;
            let norm = g.indices.iter().map(|&j| b[j] * b[j]).sum::<f64>().sqrt();
            if norm > 0.0 {
                for &j in &g.indices {
                    let v = if b[j] != 0.0 {
                        (r[j] - lw * (alpha * b[j].signum() + (1.0 - alpha) * b[j] / norm)).abs()
                    } else {
                        (r[j].abs() - lw * alpha).max(0.0)
                    };
                    worst = worst.max(v);
                }
            } else {
                let s = g
                    .indices
                    .iter()
                    .map(|&j| soft_threshold(r[j], lw * alpha).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max((s - lw * (1.0 - alpha)).max(0.0));
            }
        }
        worst
    }

    /// Least-squares fit of the unpenalized columns alone; returns working coefficients.
    fn unpenalized_start(&self, w: &[f64]) -> Result<Vec<f64>> {
        let free: Vec<usize> = self
            .groups
            .iter()
            .zip(w)
            .filter(|(_, &wg)| wg == 0.0)
            .flat_map(|(g, _)| g.indices.iter().copied())
            .collect();
        let mut b = vec![0.0; self.n_cols()];
        if free.is_empty() {
            return Ok(b);
        }
        let sub = self.gram.select_rows(&free).select_columns(&free);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&j| self.xty[j]));
        let sol = pseudo_inverse(&sub)? * rhs;
        for (k, &j) in free.iter().enumerate() {
            b[j] = sol[k];
        }
        Ok(b)
    }
}

fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eps = 1e-12 * a.amax().max(1e-300) * a.nrows() as f64;
    a.clone()
        .pseudo_inverse(eps)
        .map_err(|e| Error::Numerical(e.to_string()))
}

/// Ordinary least squares; errors on rank deficiency.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::RankDeficient(format!("{p} regressors for {n} observations")));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * (n.max(p) as f64) * f64::EPSILON * 16.0;
    if svd.singular_values.iter().any(|&s| s <= tol) {
        return Err(Error::RankDeficient("design has linearly dependent columns".into()));
    }
    svd.solve(y, tol).map_err(|e| Error::Numerical(e.to_string()))
}

const ANDERSON_DEPTH: usize = 5;

#[derive(Clone, Copy)]
enum Kind {
    SparseGroup,
    ElasticNet,
}

struct State<'a> {
    prep: &'a PreparedProblem,
    b: Vec<f64>,
    r: Vec<f64>,
    weights: Vec<f64>,
    lambda: f64,
    alpha: f64,
    kind: Kind,
    tol: f64,
}

impl<'a> State<'a> {
    fn new(prep: &'a PreparedProblem, b: Vec<f64>, weights: Vec<f64>, kind: Kind, tol: f64) -> Self {
        let r = prep.gradient(&b);
        Self {
            prep,
            b,
            r,
            weights,
            lambda: 0.0,
            alpha: 1.0,
            kind,
            tol,
        }
    }

    fn apply(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.b[j] += delta;
        let p = self.r.len();
        let col = &self.prep.gram.as_slice()[j * p..(j + 1) * p];
        for (ri, gi) in self.r.iter_mut().zip(col) {
            *ri -= gi * delta;
        }
    }

    fn coordinate(&mut self, j: usize, l1: f64, ridge: f64) -> f64 {
        let d = self.prep.gram[(j, j)];
        let z = self.r[j] + d * self.b[j];
        let new = soft_threshold(z, l1) / (d + ridge);
        let delta = new - self.b[j];
        self.apply(j, delta);
        delta.abs()
    }

    fn update_group(&mut self, gi: usize) -> f64 {
        let prep = self.prep;
        let g = &prep.groups[gi];
        if g.indices.is_empty() {
            return 0.0;
        }
        let lw = self.lambda * self.weights[gi];
        if lw == 0.0 {
            return self.update_free(gi);
        }
        match self.kind {
            Kind::ElasticNet => {
                let mut change: f64 = 0.0;
                for &j in &g.indices {
                    change = change.max(self.coordinate(j, lw * self.alpha, lw * (1.0 - self.alpha)));
                }
                change
            }
            Kind::SparseGroup => {
                if g.indices.len() == 1 {
                    return self.coordinate(g.indices[0], lw, 0.0);
                }
                // the whole group is zero iff the partial-residual correlation passes the dual test
                let mut s = 0.0;
                let zero = g.indices.iter().all(|&k| self.b[k] == 0.0);
                for &i in &g.indices {
                    let mut z = self.r[i];
                    if !zero {
                        let pp = prep.scales.len();
                        let col = &prep.gram.as_slice()[i * pp..(i + 1) * pp];
                        for &k in &g.indices {
                            z += col[k] * self.b[k];
                        }
                    }
                    s += soft_threshold(z, lw * self.alpha).powi(2);
                }
                let s = s.sqrt();
                if s <= lw * (1.0 - self.alpha) {
                    let mut change: f64 = 0.0;
                    for &j in &g.indices {
                        let delta = -self.b[j];
                        change = change.max(delta.abs());
                        self.apply(j, delta);
                    }
                    return change;
                }
                if self.alpha == 1.0 {
                    let mut change: f64 = 0.0;
                    for &j in &g.indices {
                        change = change.max(self.coordinate(j, lw, 0.0));
                    }
                    return change;
                }
                self.prox_loop(gi, lw)
            }
        }
    }

    fn prox_loop(&mut self, gi: usize, lw: f64) -> f64 {
        let prep = self.prep;
        let g = &prep.groups[gi];
        let idx = &g.indices;
        let n = idx.len();
        let l = g.lipschitz;
        let start: Vec<f64> = idx.iter().map(|&j| self.b[j]).collect();
        let mut bg = start.clone();
        let mut rg: Vec<f64> = idx.iter().map(|&j| self.r[j]).collect();
        let inner_tol = self.tol * 0.1;
        let pp = prep.scales.len();
        let mut v = vec![0.0; n];
        for _ in 0..10 {
            for k in 0..n {
                v[k] = bg[k] + rg[k] / l;
            }
            prox_in_place(&mut v, lw / l, self.alpha);
            let mut step: f64 = 0.0;
            for k in 0..n {
                let d = v[k] - bg[k];
                if d != 0.0 {
                    step = step.max(d.abs());
                    let col = &prep.gram.as_slice()[idx[k] * pp..(idx[k] + 1) * pp];
                    for (a, &i) in idx.iter().enumerate() {
                        rg[a] -= col[i] * d;
                    }
                }
            }
            bg.copy_from_slice(&v);
            if step < inner_tol {
                break;
            }
        }
        let mut change: f64 = 0.0;
        for k in 0..n {
            let d = bg[k] - start[k];
            change = change.max(d.abs());
            self.apply(idx[k], d);
        }
        change
    }

    fn update_free(&mut self, gi: usize) -> f64 {
        let prep = self.prep;
        let g = &prep.groups[gi];
        match &g.pinv {
            None => {
                let mut change: f64 = 0.0;
                for &j in &g.indices {
                    let delta = self.r[j] / prep.gram[(j, j)];
                    change = change.max(delta.abs());
                    self.apply(j, delta);
                }
                change
            }
            Some(pinv) => {
                let rg = DVector::from_iterator(g.indices.len(), g.indices.iter().map(|&j| self.r[j]));
                let delta = pinv * rg;
                let mut change: f64 = 0.0;
                for (k, &j) in g.indices.iter().enumerate() {
                    change = change.max(delta[k].abs());
                    self.apply(j, delta[k]);
                }
                change
            }
        }
    }

    fn sweep(&mut self, groups: &[usize]) -> f64 {
        let mut change: f64 = 0.0;
        for &g in groups {
            change = change.max(self.update_group(g));
        }
        change
    }

    fn objective(&self) -> f64 {
        match self.kind {
            Kind::SparseGroup => {
                self.prep
                    .objective_working(&self.b, &self.r, self.lambda, self.alpha, &self.weights)
            }
            Kind::ElasticNet => {
                let mut loss = self.prep.yty;
                for j in 0..self.b.len() {
                    loss -= self.b[j] * (self.prep.xty[j] + self.r[j]);
                }
                let mut pen = 0.0;
                for (g, &wg) in self.prep.groups.iter().zip(&self.weights) {
                    for &j in &g.indices {
                        pen += wg
                            * (self.alpha * self.b[j].abs()
                                + 0.5 * (1.0 - self.alpha) * self.b[j] * self.b[j]);
                    }
                }
                loss + 2.0 * self.lambda * pen
            }
        }
    }

    fn kkt(&self) -> f64 {
        match self.kind {
            Kind::SparseGroup => {
                self.prep
                    .kkt_working(&self.b, &self.r, self.lambda, self.alpha, &self.weights)
            }
            Kind::ElasticNet => {
                let mut worst: f64 = 0.0;
                for (g, &wg) in self.prep.groups.iter().zip(&self.weights) {
                    let lw = self.lambda * wg;
                    for &j in &g.indices {
                        let rj = self.r[j] - lw * (1.0 - self.alpha) * self.b[j];
                        let v = if self.b[j] != 0.0 {
                            (rj - lw * self.alpha * self.b[j].signum()).abs()
                        } else {
                            (rj.abs() - lw * self.alpha).max(0.0)
                        };
                        worst = worst.max(v);
                    }
                }
                worst
            }
        }
    }

    /// Anderson extrapolation of the last sweeps; kept only if it lowers the objective.
    fn extrapolate(&mut self, history: &[Vec<f64>]) -> bool {
        let k = history.len() - 1;
        let p = self.b.len();
        let u = DMatrix::from_fn(p, k, |i, j| history[j + 1][i] - history[j][i]);
        let mut m = u.tr_mul(&u);
        let scale = m.trace().max(f64::MIN_POSITIVE);
        for i in 0..k {
            m[(i, i)] += 1e-10 * scale;
        }
        let Some(chol) = m.cholesky() else {
            return false;
        };
        let z = chol.solve(&DVector::from_element(k, 1.0));
        let total = z.sum();
        if !total.is_finite() || total.abs() < 1e-300 {
            return false;
        }
        let mut cand = vec![0.0; p];
        for j in 0..k {
            let c = z[j] / total;
            for (v, h) in cand.iter_mut().zip(&history[j + 1]) {
                *v += c * h;
            }
        }
        if cand.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let r = self.prep.gradient(&cand);
        let before = self.objective();
        let old_b = std::mem::replace(&mut self.b, cand);
        let old_r = std::mem::replace(&mut self.r, r);
        if self.objective() < before {
            true
        } else {
            self.b = old_b;
            self.r = old_r;
            false
        }
    }

    fn solve(&mut self, opts: &SolverOptions) -> SgLassoFit {
        let all: Vec<usize> = (0..self.prep.groups.len()).collect();
        let mut trace = Vec::new();
        let mut sweeps = 0;
        let mut converged = false;
        let mut kkt = f64::INFINITY;
        let record = |s: &Self, trace: &mut Vec<f64>| {
            if opts.trace {
                trace.push(s.objective());
            }
        };
        'outer: while sweeps < opts.max_iterations {
            let change = self.sweep(&all);
            sweeps += 1;
            record(self, &mut trace);
            if change < opts.tolerance {
                kkt = self.kkt();
                if kkt <= opts.kkt_tolerance {
                    converged = true;
                    break;
                }
                continue;
            }
            if sweeps >= opts.max_iterations {
                break;
            }
            let change = self.sweep(&all);
            sweeps += 1;
            record(self, &mut trace);
            if change < opts.tolerance {
                continue;
            }
            let active: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&g| {
                    self.weights[g] == 0.0
                        || self.prep.groups[g].indices.iter().any(|&j| self.b[j] != 0.0)
                })
                .collect();
            let mut history: Vec<Vec<f64>> = vec![self.b.clone()];
            loop {
                if sweeps >= opts.max_iterations {
                    break 'outer;
                }
                let change = self.sweep(&active);
                sweeps += 1;
                if change < opts.tolerance {
                    record(self, &mut trace);
                    break;
                }
                history.push(self.b.clone());
                if history.len() > ANDERSON_DEPTH {
                    self.extrapolate(&history);
                    history.clear();
                    history.push(self.b.clone());
                }
                record(self, &mut trace);
            }
        }
        if !converged {
            kkt = self.kkt();
        }
        let beta = self.prep.to_original(&self.b);
        let active_set: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
        let active_groups = self
            .prep
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.indices.iter().any(|&j| self.b[j] != 0.0))
            .map(|(i, _)| i)
            .collect();
        SgLassoFit {
            beta,
            objective: self.objective(),
            iterations: sweeps,
            converged,
            active_set,
            active_groups,
            kkt_residual: kkt,
            lambda: self.lambda,
            alpha: self.alpha,
            trace,
        }
    }
}

/// Fits the sparse-group LASSO on a prepared problem, optionally from `init`
/// (original-scale coefficients).
pub fn fit_prepared(
    prep: &PreparedProblem,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
    init: Option<&[f64]>,
) -> Result<SgLassoFit> {
    penalty.validate(prep.n_groups())?;
    opts.validate()?;
    let b = match init {
        Some(beta) => {
            prep.check_len(beta)?;
            prep.to_working(beta)
        }
        None => vec![0.0; prep.n_cols()],
    };
    let weights = prep.weights(&penalty.group_weights);
    let mut state = State::new(prep, b, weights, Kind::SparseGroup, opts.tolerance);
    state.lambda = penalty.lambda;
    state.alpha = penalty.alpha;
    Ok(state.solve(opts))
}

/// Fits the sparse-group LASSO on `problem`.
pub fn fit(problem: &DesignProblem, penalty: &PenaltySpec, opts: &SolverOptions) -> Result<SgLassoFit> {
    let prep = PreparedProblem::new(problem, opts.standardize)?;
    fit_prepared(&prep, penalty, opts, None)
}

/// Warm-started fits along a strictly decreasing `lambdas` grid.
pub fn fit_path(
    prep: &PreparedProblem,
    alpha: f64,
    lambdas: &[f64],
    weights: &GroupWeights,
    opts: &SolverOptions,
) -> Result<Vec<SgLassoFit>> {
    check_grid(lambdas)?;
    let mut out: Vec<SgLassoFit> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let penalty = PenaltySpec::new(lambda, alpha).with_weights(weights.clone());
        let init = out.last().map(|f| f.beta.as_slice());
        out.push(fit_prepared(prep, &penalty, opts, init)?);
    }
    Ok(out)
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Largest violation of the optimality conditions at `beta` (original scale),
/// measured on the working problem of `prep`.
pub fn kkt_residual(prep: &PreparedProblem, beta: &[f64], penalty: &PenaltySpec) -> Result<f64> {
    prep.check_len(beta)?;
    penalty.validate(prep.n_groups())?;
    let b = prep.to_working(beta);
    let r = prep.gradient(&b);
    let w = prep.weights(&penalty.group_weights);
    Ok(prep.kkt_working(&b, &r, penalty.lambda, penalty.alpha, &w))
}

/// Smallest `t` with `|S(z, wαt)|₂ ≤ w(1−α)t`.
fn group_threshold(z: &[f64], alpha: f64, w: f64) -> f64 {
    let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if zmax == 0.0 {
        return 0.0;
    }
    if alpha >= 1.0 {
        return zmax / w;
    }
    let l2 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if alpha <= 0.0 {
        return l2 / w;
    }
    let excess = |t: f64| {
        z.iter()
            .map(|&v| soft_threshold(v, w * alpha * t).powi(2))
            .sum::<f64>()
            .sqrt()
            - w * (1.0 - alpha) * t
    };
    let (mut lo, mut hi) = (0.0, (zmax / (w * alpha)).min(l2 / (w * (1.0 - alpha))));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Smallest λ at which every penalized group is zero, in the working scale of `prep`.
pub fn lambda_max(prep: &PreparedProblem, alpha: f64, weights: &GroupWeights) -> Result<f64> {
    validate_alpha(alpha)?;
    PenaltySpec::new(0.0, alpha)
        .with_weights(weights.clone())
        .validate(prep.n_groups())?;
    let w = prep.weights(weights);
    let b = prep.unpenalized_start(&w)?;
    let r = prep.gradient(&b);
    let mut lmax: f64 = 0.0;
    for (g, &wg) in prep.groups.iter().zip(&w) {
        if wg == 0.0 || g.indices.is_empty() {
            continue;
        }
        let z: Vec<f64> = g.indices.iter().map(|&j| r[j]).collect();
        lmax = lmax.max(group_threshold(&z, alpha, wg));
    }
    Ok(lmax)
}

/// Elastic-net fits `‖y − Xb‖²_T + 2λ Σ w_G (α|b_G|₁ + (1−α)/2 |b_G|²)` along a
/// decreasing grid; `alpha = 0` is ridge.
pub fn elastic_net_path(
    prep: &PreparedProblem,
    alpha: f64,
    lambdas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SgLassoFit>> {
    validate_alpha(alpha)?;
    opts.validate()?;
    check_grid(lambdas)?;
    let weights = prep.weights(&GroupWeights::Unit);
    let mut state = State::new(prep, vec![0.0; prep.n_cols()], weights, Kind::ElasticNet, opts.tolerance);
    state.alpha = alpha;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be ≥ 0")));
        }
        state.lambda = lambda;
        out.push(state.solve(opts));
    }
    Ok(out)
}

/// Largest useful elastic-net λ: `max |g_j| / max(α, 10⁻³)` after fitting the free columns.
pub fn elastic_net_lambda_max(prep: &PreparedProblem, alpha: f64) -> Result<f64> {
    validate_alpha(alpha)?;
    let w = prep.weights(&GroupWeights::Unit);
    let b = prep.unpenalized_start(&w)?;
    let r = prep.gradient(&b);
    let mut m: f64 = 0.0;
    for (g, &wg) in prep.groups.iter().zip(&w) {
        if wg > 0.0 {
            for &j in &g.indices {
                m = m.max(r[j].abs());
            }
        }
    }
    Ok(m / alpha.max(1e-3))
}
