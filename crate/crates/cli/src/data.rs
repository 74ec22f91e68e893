//! CSV ingestion and output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sgl_midas::timeseries::{tick, LowFrequencySeries};

use crate::error::{CliError, Result};

/// One row of the long covariate file.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub period: i64,
    pub subperiod: usize,
    pub value: f64,
    pub line: u64,
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn header_index(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_error(path, 1, format!("missing column `{name}`")))
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_error(path, line, format!("missing field `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_error(path, line, format!("cannot parse {name} `{raw}`")))
}

fn records(path: &Path) -> Result<(csv::StringRecord, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok((headers, out))
}

/// Reads a `period,value` target file. Periods must be consecutive; trailing
/// rows with an empty value mark periods not yet observed and are dropped.
pub fn read_target(path: &Path) -> Result<LowFrequencySeries> {
    let (headers, rows) = records(path)?;
    let ip = header_index(path, &headers, "period")?;
    let iv = header_index(path, &headers, "value")?;
    let mut start = None;
    let mut values = Vec::new();
    let mut previous: Option<i64> = None;
    let mut trailing: Option<u64> = None;
    for (line, rec) in &rows {
        let period: i64 = field(path, *line, rec, ip, "period")?;
        if let Some(p) = previous {
            if period != p + 1 {
                return Err(parse_error(path, *line, format!("expected period {}, found {period}", p + 1)));
            }
        }
        previous = Some(period);
        if rec.get(iv).unwrap_or("").is_empty() {
            if start.is_none() {
                return Err(parse_error(path, *line, "the first target value is empty"));
            }
            trailing.get_or_insert(*line);
            continue;
        }
        if let Some(gap) = trailing {
            return Err(parse_error(path, gap, "empty target value before the end of the file"));
        }
        let v: f64 = field(path, *line, rec, iv, "value")?;
        start.get_or_insert(period);
        values.push(v);
    }
    let start = start.ok_or_else(|| parse_error(path, 1, "no target observations"))?;
    Ok(LowFrequencySeries::new(start, values)?)
}

/// Reads the long `series_id,period,subperiod,value` covariate file, grouped by series.
pub fn read_covariates(path: &Path) -> Result<BTreeMap<String, Vec<Observation>>> {
    let (headers, rows) = records(path)?;
    let is = header_index(path, &headers, "series_id")?;
    let ip = header_index(path, &headers, "period")?;
    let isub = header_index(path, &headers, "subperiod")?;
    let iv = header_index(path, &headers, "value")?;
    let mut out: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    for (line, rec) in &rows {
        let id = rec.get(is).unwrap_or("");
        if id.is_empty() {
            return Err(parse_error(path, *line, "empty series_id"));
        }
        out.entry(id.to_string()).or_default().push(Observation {
            period: field(path, *line, rec, ip, "period")?,
            subperiod: field(path, *line, rec, isub, "subperiod")?,
            value: field(path, *line, rec, iv, "value")?,
            line: *line,
        });
    }
    Ok(out)
}

/// Orders one series' observations in time and checks that they are contiguous.
/// Returns the first period and the values.
pub fn assemble_series(path: &Path, id: &str, m: usize, mut obs: Vec<Observation>) -> Result<(i64, Vec<f64>)> {
    for o in &obs {
        if o.subperiod == 0 || o.subperiod > m {
            return Err(parse_error(
                path,
                o.line,
                format!("subperiod {} of `{id}` outside 1..={m}", o.subperiod),
            ));
        }
        if !o.value.is_finite() {
            return Err(parse_error(path, o.line, format!("non-finite value for `{id}`")));
        }
    }
    obs.sort_by_key(|o| tick(o.period, o.subperiod, m));
    let first = obs
        .first()
        .ok_or_else(|| CliError::Config(format!("series `{id}` has no observations")))?;
    if first.subperiod != 1 {
        return Err(parse_error(path, first.line, format!("series `{id}` must start at subperiod 1")));
    }
    let t0 = tick(first.period, 1, m);
    for (i, o) in obs.iter().enumerate() {
        let t = tick(o.period, o.subperiod, m);
        if t != t0 + i as i64 {
            let what = if t < t0 + i as i64 { "duplicate" } else { "gap before" };
            return Err(parse_error(
                path,
                o.line,
                format!("{what} period {} subperiod {} of `{id}`", o.period, o.subperiod),
            ));
        }
    }
    Ok((first.period, obs.into_iter().map(|o| o.value).collect()))
}

/// Full-precision decimal text; empty for missing values.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io(path, std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, std::io::Error::other(e.to_string())))?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

/// Reads a forecast or error file: uses the `error` column and, when present,
/// the `origin` column. Rows with an empty error are skipped.
pub fn read_errors(path: &Path) -> Result<(Vec<Option<i64>>, Vec<f64>)> {
    let (headers, rows) = records(path)?;
    let ie = header_index(path, &headers, "error")?;
    let io = headers.iter().position(|h| h == "origin");
    let mut origins = Vec::new();
    let mut errors = Vec::new();
    for (line, rec) in &rows {
        if rec.get(ie).unwrap_or("").is_empty() {
            continue;
        }
        errors.push(field(path, *line, rec, ie, "error")?);
        origins.push(match io {
            Some(i) => Some(field(path, *line, rec, i, "origin")?),
            None => None,
        });
    }
    Ok((origins, errors))
}
