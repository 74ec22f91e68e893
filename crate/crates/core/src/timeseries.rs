//! Data model for aligned mixed-frequency observations.
//!
//! Time is an integer low-frequency period `t` plus a sub-period
//! `s ∈ 1..=m`. Sub-period `s` of period `t` sits at time `t - (m - s)/m`,
//! so sub-period `m` coincides with the period itself. Internally every
//! high-frequency observation is addressed by a *tick* `t·m + s − 1`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Low-frequency target series `y_t`, observed on consecutive integer periods.
#[derive(Clone, Debug, PartialEq)]
pub struct LowFrequencySeries {
    start: i64,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl LowFrequencySeries {
    /// Series whose first value belongs to period `start`.
    pub fn new(start: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPanel("target series is empty".into()));
        }
        Ok(Self {
            start,
            values,
            labels: None,
        })
    }

    /// Attach decorative calendar labels, one per period.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} periods",
                labels.len(),
                self.values.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn first_period(&self) -> i64 {
        self.start
    }

    pub fn last_period(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Value at `period`, if observed.
    pub fn get(&self, period: i64) -> Option<f64> {
        let offset = period - self.start;
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    /// Copy of the series restricted to periods `<= last`.
    pub fn truncated(&self, last: i64) -> Result<Self> {
        let keep = (last - self.start + 1).clamp(0, self.values.len() as i64) as usize;
        let mut out = Self::new(self.start, self.values[..keep].to_vec())?;
        if let Some(labels) = &self.labels {
            out.labels = Some(labels[..keep].to_vec());
        }
        Ok(out)
    }
}

/// High-frequency covariate sampled `m` times per low-frequency period.
#[derive(Clone, Debug, PartialEq)]
pub struct HighFrequencySeries {
    id: String,
    start_period: i64,
    m: usize,
    delay: usize,
    lead: usize,
    lag_periods: usize,
    category: Option<String>,
    values: Vec<f64>,
}

impl HighFrequencySeries {
    /// `values[0]` is sub-period 1 of `start_period`. The alignment defaults
    /// to no delay, no lead and one period of lags.
    pub fn new(id: impl Into<String>, start_period: i64, m: usize, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if m == 0 {
            return Err(Error::InvalidParameter(format!(
                "series `{id}`: m must be at least 1"
            )));
        }
        Ok(Self {
            id,
            start_period,
            m,
            delay: 0,
            lead: 0,
            lag_periods: 1,
            category: None,
            values,
        })
    }

    /// Publication delay in sub-periods.
    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    /// Sub-periods of the current period available at prediction time, `0..=m`.
    pub fn with_lead(mut self, lead: usize) -> Result<Self> {
        if lead > self.m {
            return Err(Error::InvalidParameter(format!(
                "series `{}`: lead {lead} exceeds m = {}",
                self.id, self.m
            )));
        }
        self.lead = lead;
        Ok(self)
    }

    /// Number of low-frequency periods of lags requested by default.
    pub fn with_lag_periods(mut self, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter(format!(
                "series `{}`: lag depth must be at least 1",
                self.id
            )));
        }
        self.lag_periods = q;
        Ok(self)
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn lead(&self) -> usize {
        self.lead
    }

    pub fn lag_periods(&self) -> usize {
        self.lag_periods
    }

    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_period(&self) -> i64 {
        self.start_period
    }

    /// Tick of the first stored observation.
    pub fn first_tick(&self) -> i64 {
        tick(self.start_period, 1, self.m)
    }

    /// Tick of the last stored observation.
    pub fn last_tick(&self) -> i64 {
        self.first_tick() + self.values.len() as i64 - 1
    }

    /// Observation at `tick`, if stored.
    pub fn at_tick(&self, tick: i64) -> Option<f64> {
        let offset = tick - self.first_tick();
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied()
    }

    /// Observation at sub-period `s` of `period`.
    pub fn get(&self, period: i64, subperiod: usize) -> Option<f64> {
        if subperiod == 0 || subperiod > self.m {
            return None;
        }
        self.at_tick(tick(period, subperiod, self.m))
    }
}

/// Tick of sub-period `s` (1-based) of `period` at frequency `m`.
pub fn tick(period: i64, subperiod: usize, m: usize) -> i64 {
    period * m as i64 + subperiod as i64 - 1
}

/// Inverse of [`tick`]: `(period, subperiod)`.
pub fn period_of_tick(tick: i64, m: usize) -> (i64, usize) {
    let m = m as i64;
    (tick.div_euclid(m), (tick.rem_euclid(m) + 1) as usize)
}

/// Target series plus high-frequency covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedFrequencyPanel {
    pub target: LowFrequencySeries,
    pub covariates: Vec<HighFrequencySeries>,
    /// Number of low-frequency autoregressive lags requested by default.
    pub ar_lags: usize,
    /// Replace missing pre-sample covariate values by zero instead of failing.
    pub impute_zero: bool,
}

impl MixedFrequencyPanel {
    pub fn new(target: LowFrequencySeries, covariates: Vec<HighFrequencySeries>) -> Self {
        Self {
            target,
            covariates,
            ar_lags: 0,
            impute_zero: false,
        }
    }

    pub fn with_ar_lags(mut self, lags: usize) -> Self {
        self.ar_lags = lags;
        self
    }

    pub fn with_impute_zero(mut self, impute: bool) -> Self {
        self.impute_zero = impute;
        self
    }

    pub fn covariate(&self, id: &str) -> Option<&HighFrequencySeries> {
        self.covariates.iter().find(|c| c.id == id)
    }

    /// Copy with the target truncated at `last` (covariates untouched).
    pub fn with_target_until(&self, last: i64) -> Result<Self> {
        Ok(Self {
            target: self.target.truncated(last)?,
            ..self.clone()
        })
    }
}

/// One problem found by [`validate_panel`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonFiniteTarget { period: i64 },
    NonFiniteCovariate { series: String, index: usize },
    DuplicateSeries { series: String },
    InsufficientTargetHistory { lags: usize, available: usize },
    InsufficientHistory { series: String, needed: usize, available: usize },
    InsufficientCoverage { series: String, period: i64 },
    InvalidLead { series: String, lead: usize, m: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteTarget { period } => {
                write!(f, "target: non-finite value at period {period}")
            }
            Violation::NonFiniteCovariate { series, index } => {
                write!(f, "series `{series}`: non-finite value at index {index}")
            }
            Violation::DuplicateSeries { series } => write!(f, "series `{series}` appears twice"),
            Violation::InsufficientTargetHistory { lags, available } => write!(
                f,
                "target: {lags} autoregressive lags requested but only {available} periods observed"
            ),
            Violation::InsufficientHistory {
                series,
                needed,
                available,
            } => write!(
                f,
                "series `{series}`: insufficient pre-sample history ({needed} sub-period values needed before the series start, {available} available)"
            ),
            Violation::InsufficientCoverage { series, period } => write!(
                f,
                "series `{series}`: no data for the lag window of period {period}"
            ),
            Violation::InvalidLead { series, lead, m } => {
                write!(f, "series `{series}`: lead {lead} outside 0..={m}")
            }
        }
    }
}

/// Lag window requested from one covariate, used by validation and design.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LagRequest<'a> {
    pub series: &'a HighFrequencySeries,
    /// Declared lead (before subtracting the publication delay).
    pub lead: usize,
    pub n_lags: usize,
}

impl LagRequest<'_> {
    /// Lead net of publication delay; may be negative.
    pub fn effective_lead(&self) -> i64 {
        self.lead as i64 - self.series.delay as i64
    }

    /// Tick of the most recent observation used for the row of `period`.
    pub fn anchor(&self, period: i64) -> i64 {
        period * self.series.m as i64 + self.effective_lead() - 1
    }

    /// Ticks `anchor, anchor − 1, …` covered by the window of `period`.
    pub fn window(&self, period: i64) -> std::ops::RangeInclusive<i64> {
        let anchor = self.anchor(period);
        (anchor - self.n_lags as i64 + 1)..=anchor
    }
}

/// Checks the panel against its own alignment metadata: the default lead and
/// lag depth of every covariate, and `panel.ar_lags`. Returns every violation
/// found; the panel is usable iff the list is empty.
pub fn validate_panel(panel: &MixedFrequencyPanel) -> Vec<Violation> {
    let requests: Vec<LagRequest<'_>> = panel
        .covariates
        .iter()
        .map(|s| LagRequest {
            series: s,
            lead: s.lead,
            n_lags: s.m * s.lag_periods,
        })
        .collect();
    let first_row = panel.target.first_period() + panel.ar_lags as i64;
    check_panel(panel, &requests, panel.ar_lags, first_row, panel.target.last_period())
}

pub(crate) fn check_panel(
    panel: &MixedFrequencyPanel,
    requests: &[LagRequest<'_>],
    ar_lags: usize,
    first_row: i64,
    last_row: i64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, v) in panel.target.values().iter().enumerate() {
        if !v.is_finite() {
            out.push(Violation::NonFiniteTarget {
                period: panel.target.first_period() + i as i64,
            });
        }
    }
    if ar_lags >= panel.target.len() {
        out.push(Violation::InsufficientTargetHistory {
            lags: ar_lags,
            available: panel.target.len(),
        });
    }
    let mut seen = HashSet::new();
    for s in &panel.covariates {
        if !seen.insert(s.id.as_str()) {
            out.push(Violation::DuplicateSeries {
                series: s.id.clone(),
            });
        }
        for (index, v) in s.values.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFiniteCovariate {
                    series: s.id.clone(),
                    index,
                });
            }
        }
    }
    for req in requests {
        let s = req.series;
        if req.lead > s.m {
            out.push(Violation::InvalidLead {
                series: s.id.clone(),
                lead: req.lead,
                m: s.m,
            });
            continue;
        }
        if first_row > last_row {
            continue;
        }
        let earliest = *req.window(first_row).start();
        if earliest < s.first_tick() && !panel.impute_zero {
            out.push(Violation::InsufficientHistory {
                series: s.id.clone(),
                needed: (s.first_tick() - earliest) as usize,
                available: 0,
            });
        }
        let latest = req.anchor(last_row);
        if latest > s.last_tick() {
            let mut period = last_row;
            while period > first_row && req.anchor(period - 1) > s.last_tick() {
                period -= 1;
            }
            out.push(Violation::InsufficientCoverage {
                series: s.id.clone(),
                period,
            });
        }
    }
    out
}

/// A named block of coefficient indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub indices: Vec<usize>,
    /// Unpenalized groups are excluded from the penalty (e.g. a free intercept).
    pub penalized: bool,
}

/// Partition of the coefficient indices `0..p` into groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    groups: Vec<Group>,
    p: usize,
}

impl GroupStructure {
    /// Validates the partition property: disjoint, non-empty groups covering `0..p`.
    pub fn new(groups: Vec<Group>, p: usize) -> Result<Self> {
        let mut hit = vec![false; p];
        let mut total = 0;
        for g in &groups {
            if g.indices.is_empty() {
                return Err(Error::InvalidParameter(format!("group `{}` is empty", g.name)));
            }
            for &j in &g.indices {
                if j >= p {
                    return Err(Error::InvalidParameter(format!(
                        "group `{}` references index {j} but p = {p}",
                        g.name
                    )));
                }
                if hit[j] {
                    return Err(Error::InvalidParameter(format!(
                        "index {j} belongs to more than one group"
                    )));
                }
                hit[j] = true;
                total += 1;
            }
        }
        if total != p {
            return Err(Error::InvalidParameter(format!(
                "groups cover {total} of {p} coefficients"
            )));
        }
        Ok(Self { groups, p })
    }

    /// Every coefficient in its own penalized group.
    pub fn singletons(p: usize) -> Self {
        let groups = (0..p)
            .map(|j| Group {
                name: format!("x{j}"),
                indices: vec![j],
                penalized: true,
            })
            .collect();
        Self { groups, p }
    }

    /// Contiguous groups with the given sizes, all penalized.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let mut groups = Vec::with_capacity(sizes.len());
        for (i, &n) in sizes.iter().enumerate() {
            groups.push(Group {
                name: format!("g{i}"),
                indices: (start..start + n).collect(),
                penalized: true,
            });
            start += n;
        }
        Self::new(groups, start)
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of coefficients `p`.
    pub fn n_coefficients(&self) -> usize {
        self.p
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    /// Group index of every coefficient.
    pub fn membership(&self) -> Vec<usize> {
        let mut out = vec![0; self.p];
        for (gi, g) in self.groups.iter().enumerate() {
            for &j in &g.indices {
                out[j] = gi;
            }
        }
        out
    }
}
