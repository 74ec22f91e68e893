//! ARDL-MIDAS design construction.
//!
//! For a response period `τ` the design row is
//! `(1, y_{τ−1}, …, y_{τ−J}, Z_{τ,1} W_1, …, Z_{τ,K} W_K)` where
//! `Z_{τ,k} = (x_{anchor}, x_{anchor − 1/m}, …)` holds `n_k` high-frequency
//! lags of covariate `k`. The anchor is sub-period `h_k` of period `τ`,
//! with `h_k = lead − delay` (so `h_k = m` is the contemporaneous block of
//! period `τ`, `h_k = 0` ends at the last sub-period of `τ − 1`, and negative
//! values reach further back).

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dictionary::{build_weight_matrix, DictionaryFamily, DictionarySpec};
use crate::error::{Error, Result};
use crate::timeseries::{
    check_panel, period_of_tick, Group, GroupStructure, HighFrequencySeries, LagRequest,
    MixedFrequencyPanel,
};

/// Simple temporal aggregation of one period's worth of lags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean of the block.
    Flow,
    /// Most recent value of the block.
    Stock,
    /// Middle lag of the block, ties resolved toward the most recent value.
    Middle,
}

impl Aggregation {
    pub fn label(self) -> &'static str {
        match self {
            Aggregation::Flow => "flow",
            Aggregation::Stock => "stock",
            Aggregation::Middle => "middle",
        }
    }
}

/// How a covariate's lag vector is mapped onto design columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateTransform {
    Dictionary(DictionarySpec),
    Aggregate(Aggregation),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub series: String,
    /// `q_k`: low-frequency periods of high-frequency lags.
    pub lag_periods: usize,
    /// Overrides the lag count `m·q_k`, e.g. to keep only the most recent half.
    #[serde(default)]
    pub n_lags: Option<usize>,
    /// Declared lead before the publication delay; defaults to the series lead.
    #[serde(default)]
    pub lead: Option<usize>,
    pub transform: CovariateTransform,
    /// Category used by [`GroupMode::PerCategory`]; defaults to the series category.
    #[serde(default)]
    pub category: Option<String>,
}

impl CovariateSpec {
    pub fn dictionary(series: impl Into<String>, lag_periods: usize, dict: DictionarySpec) -> Self {
        Self {
            series: series.into(),
            lag_periods,
            n_lags: None,
            lead: None,
            transform: CovariateTransform::Dictionary(dict),
            category: None,
        }
    }

    pub fn aggregate(series: impl Into<String>, lag_periods: usize, method: Aggregation) -> Self {
        Self {
            series: series.into(),
            lag_periods,
            n_lags: None,
            lead: None,
            transform: CovariateTransform::Aggregate(method),
            category: None,
        }
    }

    pub fn with_lead(mut self, lead: usize) -> Self {
        self.lead = Some(lead);
        self
    }

    pub fn with_n_lags(mut self, n: usize) -> Self {
        self.n_lags = Some(n);
        self
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupMode {
    /// One group per covariate.
    #[default]
    PerCovariate,
    /// One group per covariate category.
    PerCategory,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArGrouping {
    /// Intercept and all autoregressive lags form the group `ar`.
    #[default]
    Joint,
    /// Every autoregressive lag is its own group (`ar1`, `ar2`, …).
    PerLag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    /// `J`: number of low-frequency autoregressive lags.
    pub ar_lags: usize,
    pub covariates: Vec<CovariateSpec>,
    #[serde(default = "default_true")]
    pub include_intercept: bool,
    /// Move the intercept into its own unpenalized group.
    #[serde(default)]
    pub unpenalized_intercept: bool,
    #[serde(default)]
    pub group_mode: GroupMode,
    #[serde(default)]
    pub ar_grouping: ArGrouping,
    /// First response period; defaults to the first period with `J` lags available.
    #[serde(default)]
    pub first_period: Option<i64>,
}

fn default_true() -> bool {
    true
}

impl DesignSpec {
    pub fn new(ar_lags: usize, covariates: Vec<CovariateSpec>) -> Self {
        Self {
            ar_lags,
            covariates,
            include_intercept: true,
            unpenalized_intercept: false,
            group_mode: GroupMode::PerCovariate,
            ar_grouping: ArGrouping::Joint,
            first_period: None,
        }
    }
}

/// Per-column centering and scale record (empirical norm `‖x_j‖_T`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub center: f64,
    pub scale: f64,
}

/// Location of one covariate's columns in the design.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateBlock {
    pub series: String,
    pub columns: Range<usize>,
    /// `n_lags × L` matrix mapping lags to columns.
    pub weights: DMatrix<f64>,
    pub m: usize,
    pub effective_lead: i64,
    pub category: Option<String>,
    pub transform: CovariateTransform,
}

/// A regression problem ready for estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub groups: GroupStructure,
    pub scaling: Vec<ColumnScale>,
    /// Response period of every row.
    pub periods: Vec<i64>,
    pub column_names: Vec<String>,
    pub blocks: Vec<CovariateBlock>,
}

impl DesignProblem {
    /// Generic problem from raw arrays.
    pub fn new(y: DVector<f64>, x: DMatrix<f64>, groups: GroupStructure) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} design rows",
                y.len(),
                x.nrows()
            )));
        }
        if groups.n_coefficients() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "groups cover {} coefficients but the design has {} columns",
                groups.n_coefficients(),
                x.ncols()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite entry in the problem".into()));
        }
        let n = x.nrows();
        let column_names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            scaling: column_scaling(&x),
            periods: (0..n as i64).collect(),
            y,
            x,
            groups,
            column_names,
            blocks: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    /// Sub-problem with the given rows (in the given order); scaling is
    /// recomputed on those rows only.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let x = self.x.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.y[r]));
        Self {
            scaling: column_scaling(&x),
            periods: rows.iter().map(|&r| self.periods[r]).collect(),
            x,
            y,
            groups: self.groups.clone(),
            column_names: self.column_names.clone(),
            blocks: self.blocks.clone(),
        }
    }

    pub fn predict(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.x * beta
    }

    /// Implied coefficient on every high-frequency lag of block `b`: `W β_b`.
    pub fn lag_coefficients(&self, block: usize, beta: &DVector<f64>) -> DVector<f64> {
        let blk = &self.blocks[block];
        let coef = beta.rows(blk.columns.start, blk.columns.len());
        &blk.weights * coef
    }

    pub fn block_index(&self, series: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.series == series)
    }
}

fn column_scaling(x: &DMatrix<f64>) -> Vec<ColumnScale> {
    let n = x.nrows().max(1) as f64;
    x.column_iter()
        .map(|c| ColumnScale {
            center: 0.0,
            scale: (c.norm_squared() / n).sqrt(),
        })
        .collect()
}

/// Lag-to-column matrix for simple aggregation of `n_lags` lags in blocks of `m`.
pub fn aggregation_matrix(method: Aggregation, n_lags: usize, m: usize) -> DMatrix<f64> {
    let n_blocks = n_lags.div_ceil(m);
    let mut w = DMatrix::zeros(n_lags, n_blocks);
    for b in 0..n_blocks {
        let start = b * m;
        let len = m.min(n_lags - start);
        match method {
            Aggregation::Flow => {
                for j in start..start + len {
                    w[(j, b)] = 1.0 / len as f64;
                }
            }
            Aggregation::Stock => w[(start, b)] = 1.0,
            Aggregation::Middle => w[(start + len.div_ceil(2) - 1, b)] = 1.0,
        }
    }
    w
}

struct CompiledCovariate<'a> {
    request: LagRequest<'a>,
    weights: DMatrix<f64>,
    names: Vec<String>,
    category: Option<String>,
    transform: CovariateTransform,
}

/// A design specification bound to a panel; produces rows for any period.
pub struct Design<'a> {
    panel: &'a MixedFrequencyPanel,
    spec: &'a DesignSpec,
    covariates: Vec<CompiledCovariate<'a>>,
    column_names: Vec<String>,
    groups: GroupStructure,
    blocks: Vec<CovariateBlock>,
}

impl<'a> Design<'a> {
    pub fn new(panel: &'a MixedFrequencyPanel, spec: &'a DesignSpec) -> Result<Self> {
        let mut covariates = Vec::with_capacity(spec.covariates.len());
        for cs in &spec.covariates {
            let series = panel.covariate(&cs.series).ok_or_else(|| {
                Error::InvalidParameter(format!("panel has no series `{}`", cs.series))
            })?;
            covariates.push(compile_covariate(series, cs)?);
        }

        let mut column_names = Vec::new();
        let mut groups = Vec::new();
        let mut ar_group = Vec::new();
        if spec.include_intercept {
            column_names.push("intercept".to_string());
            if spec.unpenalized_intercept {
                groups.push(Group {
                    name: "intercept".into(),
                    indices: vec![0],
                    penalized: false,
                });
            } else {
                match spec.ar_grouping {
                    ArGrouping::Joint => ar_group.push(0),
                    ArGrouping::PerLag => groups.push(Group {
                        name: "intercept".into(),
                        indices: vec![0],
                        penalized: true,
                    }),
                }
            }
        }
        for j in 1..=spec.ar_lags {
            let col = column_names.len();
            column_names.push(format!("y_lag{j}"));
            match spec.ar_grouping {
                ArGrouping::Joint => ar_group.push(col),
                ArGrouping::PerLag => groups.push(Group {
                    name: format!("ar{j}"),
                    indices: vec![col],
                    penalized: true,
                }),
            }
        }
        if !ar_group.is_empty() {
            groups.insert(
                usize::from(spec.include_intercept && spec.unpenalized_intercept),
                Group {
                    name: "ar".into(),
                    indices: ar_group,
                    penalized: true,
                },
            );
        }

        let mut blocks = Vec::with_capacity(covariates.len());
        let mut category_groups: Vec<Group> = Vec::new();
        for c in &covariates {
            let start = column_names.len();
            column_names.extend(c.names.iter().cloned());
            let columns = start..column_names.len();
            match spec.group_mode {
                GroupMode::PerCovariate => groups.push(Group {
                    name: c.request.series.id().to_string(),
                    indices: columns.clone().collect(),
                    penalized: true,
                }),
                GroupMode::PerCategory => {
                    let cat = c
                        .category
                        .clone()
                        .ok_or_else(|| Error::UnmappedGroup(c.request.series.id().to_string()))?;
                    match category_groups.iter_mut().find(|g| g.name == cat) {
                        Some(g) => g.indices.extend(columns.clone()),
                        None => category_groups.push(Group {
                            name: cat,
                            indices: columns.clone().collect(),
                            penalized: true,
                        }),
                    }
                }
            }
            blocks.push(CovariateBlock {
                series: c.request.series.id().to_string(),
                columns,
                weights: c.weights.clone(),
                m: c.request.series.m(),
                effective_lead: c.request.effective_lead(),
                category: c.category.clone(),
                transform: c.transform,
            });
        }
        groups.extend(category_groups);
        let groups = GroupStructure::new(groups, column_names.len())?;

        Ok(Self {
            panel,
            spec,
            covariates,
            column_names,
            groups,
            blocks,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }

    /// Default first response period.
    pub fn first_period(&self) -> i64 {
        let natural = self.panel.target.first_period() + self.spec.ar_lags as i64;
        self.spec.first_period.map_or(natural, |p| p.max(natural))
    }

    /// Design row for response period `period`; the response itself is not needed.
    pub fn row(&self, period: i64) -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(self.n_cols());
        if self.spec.include_intercept {
            row.push(1.0);
        }
        for j in 1..=self.spec.ar_lags as i64 {
            let v = self.panel.target.get(period - j).ok_or_else(|| {
                Error::InsufficientHistory(format!(
                    "target lag {j} of period {period} is not observed"
                ))
            })?;
            row.push(v);
        }
        for c in &self.covariates {
            let z = lag_vector_for(&c.request, period, self.panel.impute_zero)?;
            for l in 0..c.weights.ncols() {
                let mut acc = 0.0;
                for (j, zj) in z.iter().enumerate() {
                    acc += zj * c.weights[(j, l)];
                }
                row.push(acc);
            }
        }
        Ok(row)
    }

    pub fn row_available(&self, period: i64) -> bool {
        self.row(period).map(|r| r.iter().all(|v| v.is_finite())).unwrap_or(false)
    }

    /// Rows for the given response periods, without responses.
    pub fn rows(&self, periods: &[i64]) -> Result<DMatrix<f64>> {
        let mut x = DMatrix::zeros(periods.len(), self.n_cols());
        for (i, &p) in periods.iter().enumerate() {
            for (j, v) in self.row(p)?.into_iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        Ok(x)
    }

    /// Periods (observed or the one right after the sample) whose predictor row can be built.
    pub fn available_periods(&self) -> Vec<i64> {
        (self.first_period()..=self.panel.target.last_period() + 1)
            .filter(|&p| self.row_available(p))
            .collect()
    }

    /// Problem over the given observed response periods.
    pub fn problem(&self, periods: &[i64]) -> Result<DesignProblem> {
        let x = self.rows(periods)?;
        let mut y = DVector::zeros(periods.len());
        for (i, &p) in periods.iter().enumerate() {
            y[i] = self.panel.target.get(p).ok_or_else(|| {
                Error::InsufficientData(format!("target is not observed at period {p}"))
            })?;
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel("non-finite value in the design".into()));
        }
        Ok(DesignProblem {
            scaling: column_scaling(&x),
            y,
            x,
            groups: self.groups.clone(),
            periods: periods.to_vec(),
            column_names: self.column_names.clone(),
            blocks: self.blocks.clone(),
        })
    }

    /// `(period, subperiod)` of every lag used by covariate `k` in the row of `period`.
    pub fn lag_positions(&self, k: usize, period: i64) -> Vec<(i64, usize)> {
        let req = &self.covariates[k].request;
        req.window(period)
            .rev()
            .map(|t| period_of_tick(t, req.series.m()))
            .collect()
    }

    pub fn blocks(&self) -> &[CovariateBlock] {
        &self.blocks
    }
}

fn compile_covariate<'a>(
    series: &'a HighFrequencySeries,
    cs: &CovariateSpec,
) -> Result<CompiledCovariate<'a>> {
    if cs.lag_periods == 0 {
        return Err(Error::InvalidParameter(format!(
            "series `{}`: lag depth must be at least 1",
            cs.series
        )));
    }
    let m = series.m();
    let n_lags = cs.n_lags.unwrap_or(m * cs.lag_periods);
    if n_lags == 0 || n_lags > m * cs.lag_periods {
        return Err(Error::InvalidParameter(format!(
            "series `{}`: {n_lags} lags requested from {} periods at m = {m}",
            cs.series, cs.lag_periods
        )));
    }
    let lead = cs.lead.unwrap_or(series.lead());
    if lead > m {
        return Err(Error::InvalidParameter(format!(
            "series `{}`: lead {lead} exceeds m = {m}",
            cs.series
        )));
    }
    let (weights, names) = match cs.transform {
        CovariateTransform::Dictionary(dict) => {
            if dict.size > n_lags {
                return Err(Error::InvalidParameter(format!(
                    "series `{}`: {} basis functions for {n_lags} lags",
                    cs.series, dict.size
                )));
            }
            let w = build_weight_matrix(&dict, n_lags)?.into_inner();
            let names = match dict.family {
                DictionaryFamily::Identity => {
                    (1..=dict.size).map(|l| format!("{}_lag{l}", cs.series)).collect()
                }
                _ => (0..dict.size).map(|l| format!("{}_w{l}", cs.series)).collect(),
            };
            (w, names)
        }
        CovariateTransform::Aggregate(method) => {
            let w = aggregation_matrix(method, n_lags, m);
            let names = (1..=w.ncols())
                .map(|b| format!("{}_{}{b}", cs.series, method.label()))
                .collect();
            (w, names)
        }
    };
    Ok(CompiledCovariate {
        request: LagRequest {
            series,
            lead,
            n_lags,
        },
        weights,
        names,
        category: cs
            .category
            .clone()
            .or_else(|| series.category().map(str::to_string)),
        transform: cs.transform,
    })
}

fn lag_vector_for(req: &LagRequest<'_>, period: i64, impute_zero: bool) -> Result<Vec<f64>> {
    let s = req.series;
    let anchor = req.anchor(period);
    let mut out = Vec::with_capacity(req.n_lags);
    for j in 0..req.n_lags as i64 {
        let t = anchor - j;
        match s.at_tick(t) {
            Some(v) => out.push(v),
            None if impute_zero && t < s.first_tick() => out.push(0.0),
            None => {
                let (p, sub) = period_of_tick(t, s.m());
                return Err(Error::InsufficientHistory(format!(
                    "series `{}` has no value at period {p}, sub-period {sub} (needed for period {period})",
                    s.id()
                )));
            }
        }
    }
    Ok(out)
}

/// The raw lag vector `(x_{anchor}, x_{anchor − 1/m}, …)` of `n_lags` values
/// that covariate `series` contributes to the row of `period`.
pub fn lag_vector(
    series: &HighFrequencySeries,
    period: i64,
    lead: usize,
    n_lags: usize,
    impute_zero: bool,
) -> Result<Vec<f64>> {
    lag_vector_for(
        &LagRequest {
            series,
            lead,
            n_lags,
        },
        period,
        impute_zero,
    )
}

/// Validates the panel for `spec` and builds the problem over all response
/// periods from the first admissible one to the last observed target.
pub fn build_design(panel: &MixedFrequencyPanel, spec: &DesignSpec) -> Result<DesignProblem> {
    let design = Design::new(panel, spec)?;
    let first = design.first_period();
    let last = panel.target.last_period();
    if first > last {
        return Err(Error::InsufficientHistory(format!(
            "{} target observations cannot supply {} autoregressive lags",
            panel.target.len(),
            spec.ar_lags
        )));
    }
    let violations = check_panel(
        panel,
        &design
            .covariates
            .iter()
            .map(|c| c.request.clone())
            .collect::<Vec<_>>(),
        spec.ar_lags,
        first,
        last,
    );
    if let Some(v) = violations.first() {
        let msg = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(match v {
            crate::timeseries::Violation::InsufficientHistory { .. }
            | crate::timeseries::Violation::InsufficientCoverage { .. }
            | crate::timeseries::Violation::InsufficientTargetHistory { .. } => {
                Error::InsufficientHistory(msg)
            }
            _ => Error::InvalidPanel(msg),
        });
    }
    let periods: Vec<i64> = (first..=last).collect();
    design.problem(&periods)
}

/// Simple aggregates of one covariate: a row per target period and a column
/// per lagged period.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedSeries {
    pub series: String,
    pub periods: Vec<i64>,
    pub values: DMatrix<f64>,
}

/// FLOW/STOCK/MIDDLE aggregates of every covariate over `lag_periods`
/// periods, for each target period, using each series' own lead and delay.
pub fn aggregate_simple(
    panel: &MixedFrequencyPanel,
    method: Aggregation,
    lag_periods: usize,
) -> Result<Vec<AggregatedSeries>> {
    let periods: Vec<i64> =
        (panel.target.first_period()..=panel.target.last_period()).collect();
    panel
        .covariates
        .iter()
        .map(|s| {
            let spec = DesignSpec {
                include_intercept: false,
                ..DesignSpec::new(
                    0,
                    vec![CovariateSpec::aggregate(s.id(), lag_periods, method)],
                )
            };
            let design = Design::new(panel, &spec)?;
            Ok(AggregatedSeries {
                series: s.id().to_string(),
                values: design.rows(&periods)?,
                periods: periods.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::{tick, LowFrequencySeries};
    use approx::assert_abs_diff_eq;

    // x at tick t equals t, so every lookup is an index check
    fn tick_panel(m: usize, periods: i64) -> MixedFrequencyPanel {
        let target = LowFrequencySeries::new(1, (1..=periods).map(|p| p as f64 * 10.0).collect())
            .unwrap();
        let start = -4;
        let n = (periods - start + 2) as usize * m;
        let first = tick(start, 1, m);
        let x = HighFrequencySeries::new("x", start, m, (0..n).map(|i| (first + i as i64) as f64).collect())
            .unwrap();
        MixedFrequencyPanel::new(target, vec![x])
    }

    #[test]
    fn constant_dictionary_reproduces_flow() {
        let panel = tick_panel(3, 8);
        let mut spec = DesignSpec::new(
            0,
            vec![CovariateSpec::dictionary("x", 1, DictionarySpec::legendre(1)).with_lead(0)],
        );
        spec.include_intercept = false;
        let prob = build_design(&panel, &spec).unwrap();
        assert_eq!(prob.n_cols(), 1);
        let flow = aggregate_simple(&panel, Aggregation::Flow, 1).unwrap();
        let x = panel.covariate("x").unwrap();
        for (i, &t) in prob.periods.iter().enumerate() {
            // row of period t + 1 with lead 0 averages period t
            let expected = (x.get(t - 1, 3).unwrap() + x.get(t - 1, 2).unwrap() + x.get(t - 1, 1).unwrap()) / 3.0;
            assert_abs_diff_eq!(prob.x[(i, 0)], expected, epsilon = 1e-14);
            let f = flow[0].values[(flow[0].periods.iter().position(|&p| p == t).unwrap(), 0)];
            assert_abs_diff_eq!(prob.x[(i, 0)], f, epsilon = 1e-14);
        }
    }

    #[test]
    fn pure_autoregression_layout() {
        let panel = tick_panel(3, 8);
        let spec = DesignSpec::new(2, vec![]);
        let prob = build_design(&panel, &spec).unwrap();
        assert_eq!(prob.n_cols(), 3);
        assert_eq!(prob.groups.len(), 1);
        assert_eq!(prob.n_rows(), 6);
        assert_eq!(prob.periods[0], 3);
        assert_eq!(prob.column_names, ["intercept", "y_lag1", "y_lag2"]);
        for i in 0..prob.n_rows() {
            let t = prob.periods[i] as f64;
            assert_eq!(prob.y[i], t * 10.0);
            assert_eq!(prob.x[(i, 0)], 1.0);
            assert_eq!(prob.x[(i, 1)], (t - 1.0) * 10.0);
            assert_eq!(prob.x[(i, 2)], (t - 2.0) * 10.0);
        }
    }

    #[test]
    fn quarterly_monthly_lag_vector() {
        // m = 3, one month into the quarter after a one month delay, 12 lags
        let panel = tick_panel(3, 8);
        let x = panel.covariate("x").unwrap();
        let t = 5; // information quarter; the row predicts t + 1
        let z = lag_vector(x, t + 1, 1, 12, false).unwrap();
        assert_eq!(z.len(), 12);
        // x_{t+1/3} is month 1 of quarter t + 1, then back one month at a time
        let expected: Vec<f64> = (0..12).map(|j| (tick(t + 1, 1, 3) - j) as f64).collect();
        assert_eq!(z, expected);
        assert_eq!(z[1], x.get(t, 3).unwrap()); // x_{t + 0/3}
        assert_eq!(z[11], (tick(t, 3, 3) - 10) as f64); // x_{t − 10/3}
    }

    #[test]
    fn lead_shift_moves_window_one_subperiod() {
        let panel = tick_panel(3, 8);
        let x = panel.covariate("x").unwrap();
        for lead in 0..3 {
            let a = lag_vector(x, 6, lead, 7, false).unwrap();
            let b = lag_vector(x, 6, lead + 1, 7, false).unwrap();
            assert_eq!(&a[..6], &b[1..]);
            assert_eq!(b[0], a[0] + 1.0);
        }
    }

    #[test]
    fn delay_is_subtracted_from_lead() {
        let target = LowFrequencySeries::new(1, vec![0.0; 6]).unwrap();
        let x = HighFrequencySeries::new("x", -2, 3, (0..30).map(f64::from).collect())
            .unwrap()
            .with_delay(1);
        let panel = MixedFrequencyPanel::new(target, vec![x]);
        let spec = DesignSpec::new(
            0,
            vec![CovariateSpec::dictionary("x", 1, DictionarySpec::identity(3)).with_lead(2)],
        );
        let design = Design::new(&panel, &spec).unwrap();
        assert_eq!(design.blocks()[0].effective_lead, 1);
        // most recent value used for period 4: month 1 of quarter 4
        assert_eq!(design.lag_positions(0, 4), vec![(4, 1), (3, 3), (3, 2)]);
    }

    #[test]
    fn aggregation_matrices() {
        let values: Vec<f64> = (1..=12).map(f64::from).collect();
        let z = DMatrix::from_row_slice(1, 12, &values);
        let flow = &z * aggregation_matrix(Aggregation::Flow, 12, 12);
        assert_abs_diff_eq!(flow[(0, 0)], 6.5, epsilon = 1e-14);
        let middle = &z * aggregation_matrix(Aggregation::Middle, 12, 12);
        assert_eq!(middle[(0, 0)], 6.0);
        let stock = &z * aggregation_matrix(Aggregation::Stock, 12, 12);
        assert_eq!(stock[(0, 0)], 1.0);
        // two lagged periods of m = 3
        let z = DMatrix::from_row_slice(1, 6, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let flow = &z * aggregation_matrix(Aggregation::Flow, 6, 3);
        assert_eq!((flow[(0, 0)], flow[(0, 1)]), (2.0, 5.0));
        let middle = &z * aggregation_matrix(Aggregation::Middle, 6, 3);
        assert_eq!((middle[(0, 0)], middle[(0, 1)]), (2.0, 5.0));
        // half lags of m = 12 keep the 3rd most recent as middle
        let m = aggregation_matrix(Aggregation::Middle, 6, 12);
        assert_eq!(m.shape(), (6, 1));
        assert_eq!(m[(2, 0)], 1.0);
    }

    #[test]
    fn group_structure_per_covariate_and_category() {
        let target = LowFrequencySeries::new(1, vec![0.0; 10]).unwrap();
        let mk = |id: &str, cat: &str| {
            HighFrequencySeries::new(id, -1, 3, vec![1.0; 40])
                .unwrap()
                .with_category(cat)
        };
        let panel = MixedFrequencyPanel::new(
            target,
            vec![mk("a", "macro"), mk("b", "fin"), mk("c", "macro")],
        );
        let covs = ["a", "b", "c"]
            .iter()
            .map(|s| CovariateSpec::dictionary(*s, 1, DictionarySpec::legendre(2)))
            .collect::<Vec<_>>();
        let mut spec = DesignSpec::new(1, covs);
        let prob = build_design(&panel, &spec).unwrap();
        assert_eq!(prob.groups.len(), 1 + 3);
        assert_eq!(prob.groups.groups()[0].indices, vec![0, 1]);
        spec.group_mode = GroupMode::PerCategory;
        let prob = build_design(&panel, &spec).unwrap();
        let names: Vec<_> = prob.groups.groups().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["ar", "macro", "fin"]);
        assert_eq!(prob.groups.groups()[1].indices, vec![2, 3, 6, 7]);
        spec.unpenalized_intercept = true;
        spec.ar_grouping = ArGrouping::PerLag;
        let prob = build_design(&panel, &spec).unwrap();
        assert!(!prob.groups.groups()[0].penalized);
        assert_eq!(prob.groups.groups()[1].name, "ar1");
    }

    #[test]
    fn insufficient_history_is_an_error() {
        let target = LowFrequencySeries::new(1, vec![0.0; 10]).unwrap();
        let x = HighFrequencySeries::new("x", 1, 3, vec![1.0; 30]).unwrap();
        let panel = MixedFrequencyPanel::new(target, vec![x]);
        let spec = DesignSpec::new(
            0,
            vec![CovariateSpec::dictionary("x", 4, DictionarySpec::legendre(3))],
        );
        assert!(matches!(
            build_design(&panel, &spec),
            Err(Error::InsufficientHistory(_))
        ));
        let imputed = panel.clone().with_impute_zero(true);
        let prob = build_design(&imputed, &spec).unwrap();
        assert_eq!(prob.n_rows(), 10);
    }

    #[test]
    fn too_many_basis_functions() {
        let panel = tick_panel(3, 8);
        let spec = DesignSpec::new(
            0,
            vec![CovariateSpec::dictionary("x", 1, DictionarySpec::legendre(4))],
        );
        assert!(Design::new(&panel, &spec).is_err());
    }

    #[test]
    fn building_twice_is_bit_identical() {
        let panel = tick_panel(3, 8);
        let spec = DesignSpec::new(
            1,
            vec![CovariateSpec::dictionary("x", 2, DictionarySpec::legendre(3)).with_lead(2)],
        );
        let a = build_design(&panel, &spec).unwrap();
        let b = build_design(&panel, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.x.iter().zip(b.x.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}
