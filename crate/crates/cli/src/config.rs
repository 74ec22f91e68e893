//! Project configuration: data files, per-series metadata and tuning choices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sgl_midas::design::{Aggregation, ArGrouping, CovariateSpec, DesignSpec, GroupMode};
use sgl_midas::dictionary::DictionarySpec;
use sgl_midas::timeseries::{HighFrequencySeries, MixedFrequencyPanel};
use sgl_midas::tuning::CvPlan;

use crate::data::{assemble_series, read_covariates, read_target};
use crate::error::{CliError, Result};

/// Nowcast horizon relative to the end of the target period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Horizon {
    #[serde(rename = "2m")]
    #[value(name = "2m")]
    TwoMonth,
    #[serde(rename = "1m")]
    #[value(name = "1m")]
    OneMonth,
    #[serde(rename = "eoq")]
    #[value(name = "eoq")]
    EndOfQuarter,
}

impl Horizon {
    pub fn label(self) -> &'static str {
        match self {
            Horizon::TwoMonth => "2m",
            Horizon::OneMonth => "1m",
            Horizon::EndOfQuarter => "eoq",
        }
    }

    /// Sub-periods of the target period observed at this horizon, before delays.
    pub fn default_lead(self, m: usize) -> usize {
        match self {
            Horizon::TwoMonth => m.saturating_sub(2),
            Horizon::OneMonth => m.saturating_sub(1),
            Horizon::EndOfQuarter => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub id: String,
    pub m: usize,
    #[serde(default)]
    pub delay: usize,
    /// Lead used when no horizon is requested; defaults to `m`.
    #[serde(default)]
    pub lead: Option<usize>,
    /// Leads per horizon label (`2m`, `1m`, `eoq`), overriding the defaults.
    #[serde(default)]
    pub leads: BTreeMap<String, usize>,
    /// Low-frequency periods of lags.
    #[serde(default = "d_one")]
    pub q: usize,
    #[serde(default)]
    pub n_lags: Option<usize>,
    /// Defaults to a Legendre dictionary with up to 4 functions.
    #[serde(default)]
    pub dictionary: Option<DictionarySpec>,
    #[serde(default)]
    pub aggregate: Option<Aggregation>,
    #[serde(default)]
    pub category: Option<String>,
}

fn d_one() -> usize {
    1
}
fn d_true() -> bool {
    true
}
fn d_window() -> usize {
    60
}

impl SeriesConfig {
    pub fn n_lags(&self) -> usize {
        self.n_lags.unwrap_or(self.m * self.q)
    }

    pub fn lead_for(&self, horizon: Option<Horizon>) -> usize {
        match horizon {
            Some(h) => self
                .leads
                .get(h.label())
                .copied()
                .unwrap_or_else(|| h.default_lead(self.m)),
            None => self.lead.unwrap_or(self.m),
        }
    }

    pub fn category_or_id(&self) -> String {
        self.category.clone().unwrap_or_else(|| self.id.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// `period,value` CSV; relative paths are resolved against the config file.
    pub target: PathBuf,
    /// Long `series_id,period,subperiod,value` CSV.
    pub covariates: PathBuf,
    pub series: Vec<SeriesConfig>,
    #[serde(default = "d_one")]
    pub ar_lags: usize,
    #[serde(default = "d_true")]
    pub include_intercept: bool,
    #[serde(default = "d_true")]
    pub unpenalized_intercept: bool,
    #[serde(default)]
    pub group_mode: GroupMode,
    #[serde(default)]
    pub ar_grouping: ArGrouping,
    /// Replace pre-sample covariate values by zero instead of failing.
    #[serde(default)]
    pub impute_zero: bool,
    #[serde(default)]
    pub cv: CvPlan,
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default)]
    pub horizon: Option<Horizon>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ProjectConfig {
    /// Loads a config and makes its file paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ProjectConfig = crate::data::read_json(path)?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let base = base.canonicalize().map_err(|e| CliError::io(base, e))?;
        for p in [&mut cfg.target, &mut cfg.covariates] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        for p in [&self.target, &self.covariates] {
            if !p.is_file() {
                return bad(format!("data file {} does not exist", p.display()));
            }
        }
        if self.series.is_empty() {
            return bad("no series configured".into());
        }
        for (i, s) in self.series.iter().enumerate() {
            if self.series[..i].iter().any(|o| o.id == s.id) {
                return bad(format!("series `{}` configured twice", s.id));
            }
            if s.m == 0 || s.q == 0 {
                return bad(format!("series `{}` needs m ≥ 1 and q ≥ 1", s.id));
            }
            if s.dictionary.is_some() && s.aggregate.is_some() {
                return bad(format!("series `{}` sets both a dictionary and an aggregate", s.id));
            }
            for key in s.leads.keys() {
                if !["2m", "1m", "eoq"].contains(&key.as_str()) {
                    return bad(format!("series `{}` has unknown horizon `{key}` in leads", s.id));
                }
            }
        }
        if self.window == 0 {
            return bad("window must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn panel(&self) -> Result<MixedFrequencyPanel> {
        let target = read_target(&self.target)?;
        let mut raw = read_covariates(&self.covariates)?;
        let mut covariates = Vec::with_capacity(self.series.len());
        for s in &self.series {
            let obs = raw.remove(&s.id).ok_or_else(|| {
                CliError::Config(format!("series `{}` not found in {}", s.id, self.covariates.display()))
            })?;
            let (start, values) = assemble_series(&self.covariates, &s.id, s.m, obs)?;
            let mut hf = HighFrequencySeries::new(s.id.clone(), start, s.m, values)?
                .with_delay(s.delay)
                .with_lead(s.lead.unwrap_or(s.m))?
                .with_lag_periods(s.q)?;
            if let Some(c) = &s.category {
                hf = hf.with_category(c.clone());
            }
            covariates.push(hf);
        }
        Ok(MixedFrequencyPanel::new(target, covariates)
            .with_ar_lags(self.ar_lags)
            .with_impute_zero(self.impute_zero))
    }

    /// Design specification at `horizon`; `unrestricted` replaces every
    /// dictionary by the identity (U-MIDAS).
    pub fn design_spec(&self, horizon: Option<Horizon>, unrestricted: bool) -> DesignSpec {
        let covariates = self
            .series
            .iter()
            .map(|s| {
                let n_lags = s.n_lags();
                let cs = match (s.aggregate, unrestricted) {
                    (Some(a), _) => CovariateSpec::aggregate(s.id.clone(), s.q, a),
                    (None, true) => CovariateSpec::dictionary(s.id.clone(), s.q, DictionarySpec::identity(n_lags)),
                    (None, false) => CovariateSpec::dictionary(
                        s.id.clone(),
                        s.q,
                        s.dictionary.unwrap_or(DictionarySpec::legendre(n_lags.min(4))),
                    ),
                };
                let cs = cs.with_lead(s.lead_for(horizon)).with_category(s.category_or_id());
                if s.n_lags.is_some() {
                    cs.with_n_lags(n_lags)
                } else {
                    cs
                }
            })
            .collect();
        let mut spec = DesignSpec::new(self.ar_lags, covariates);
        spec.include_intercept = self.include_intercept;
        spec.unpenalized_intercept = self.unpenalized_intercept;
        spec.group_mode = self.group_mode;
        spec.ar_grouping = self.ar_grouping;
        spec
    }
}
