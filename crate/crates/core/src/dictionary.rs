//! Polynomial dictionaries for MIDAS weight functions on `[0, 1]`.
//!
//! The weight function of a covariate is approximated by a linear combination
//! of dictionary functions, `ω(u) ≈ Σ_l β_l w_l(u)`. The default dictionary is
//! the shifted Legendre family; general shifted Jacobi polynomials, plain
//! power (Almon) polynomials and an identity dictionary (one free coefficient
//! per lag, the unrestricted U-MIDAS case) are also available.
//!
//! `size` always counts basis functions, i.e. polynomials of degree
//! `0..size`. Jacobi polynomials keep the classical normalization
//! `P_n(1) = binom(n + a, n)` (so every Legendre polynomial equals 1 at `u = 1`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dictionary family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DictionaryFamily {
    /// Shifted Jacobi polynomials with parameters `a, b > −1`.
    Jacobi { a: f64, b: f64 },
    /// Shifted Legendre polynomials, identical to `Jacobi { a: 0, b: 0 }`.
    Legendre,
    /// Monomials `u^k`. Numerically inferior to the orthogonal families:
    /// the columns become nearly collinear quickly as the degree grows.
    Power,
    /// Piecewise-constant indicators of `size` equal bins of `[0, 1]`. On a
    /// grid with `size` lags this is the identity, i.e. unrestricted lags.
    Identity,
}

/// A dictionary family together with its number of basis functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct DictionarySpec {
    pub family: DictionaryFamily,
    pub size: usize,
}

// flat serialized form: {"family": "jacobi", "a": 1.0, "b": 0.0, "size": 4}
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    family: String,
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
}

impl TryFrom<SpecRepr> for DictionarySpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        let family = match r.family.as_str() {
            "legendre" => DictionaryFamily::Legendre,
            "power" | "almon" => DictionaryFamily::Power,
            "identity" | "unrestricted" => DictionaryFamily::Identity,
            "jacobi" => DictionaryFamily::Jacobi {
                a: r.a.unwrap_or(0.0),
                b: r.b.unwrap_or(0.0),
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown dictionary family `{other}`"
                )))
            }
        };
        if !matches!(family, DictionaryFamily::Jacobi { .. }) && (r.a.is_some() || r.b.is_some()) {
            return Err(Error::InvalidParameter(
                "parameters `a`/`b` only apply to the jacobi family".into(),
            ));
        }
        let spec = DictionarySpec { family, size: r.size };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<DictionarySpec> for SpecRepr {
    fn from(d: DictionarySpec) -> Self {
        let (family, a, b) = match d.family {
            DictionaryFamily::Legendre => ("legendre", None, None),
            DictionaryFamily::Power => ("power", None, None),
            DictionaryFamily::Identity => ("identity", None, None),
            DictionaryFamily::Jacobi { a, b } => ("jacobi", Some(a), Some(b)),
        };
        SpecRepr {
            family: family.into(),
            size: d.size,
            a,
            b,
        }
    }
}

impl DictionarySpec {
    pub fn legendre(size: usize) -> Self {
        Self {
            family: DictionaryFamily::Legendre,
            size,
        }
    }

    pub fn jacobi(a: f64, b: f64, size: usize) -> Self {
        Self {
            family: DictionaryFamily::Jacobi { a, b },
            size,
        }
    }

    pub fn power(size: usize) -> Self {
        Self {
            family: DictionaryFamily::Power,
            size,
        }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            family: DictionaryFamily::Identity,
            size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidParameter(
                "dictionary needs at least one basis function".into(),
            ));
        }
        if let DictionaryFamily::Jacobi { a, b } = self.family {
            check_jacobi_params(a, b)?;
        }
        Ok(())
    }

    /// Values of all `size` basis functions at `u`.
    pub fn basis(&self, u: f64) -> Result<Vec<f64>> {
        self.validate()?;
        check_unit(u)?;
        Ok(match self.family {
            DictionaryFamily::Legendre => jacobi_all(0.0, 0.0, self.size - 1, u),
            DictionaryFamily::Jacobi { a, b } => jacobi_all(a, b, self.size - 1, u),
            DictionaryFamily::Power => {
                let mut out = Vec::with_capacity(self.size);
                let mut acc = 1.0;
                for _ in 0..self.size {
                    out.push(acc);
                    acc *= u;
                }
                out
            }
            DictionaryFamily::Identity => {
                // grid points j/size land on bin j despite rounding in u·size
                let bin = ((u * self.size as f64 + 1e-9).floor() as usize).min(self.size - 1);
                let mut out = vec![0.0; self.size];
                out[bin] = 1.0;
                out
            }
        })
    }
}

fn check_jacobi_params(a: f64, b: f64) -> Result<()> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi parameters must exceed -1, got ({a}, {b})"
        )));
    }
    Ok(())
}

fn check_unit(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidParameter(format!("u = {u} outside [0, 1]")));
    }
    Ok(())
}

/// Shifted Jacobi polynomial `P_n^{(a,b)}(2u − 1)`.
pub fn jacobi_eval(a: f64, b: f64, degree: usize, u: f64) -> Result<f64> {
    check_jacobi_params(a, b)?;
    check_unit(u)?;
    Ok(jacobi_all(a, b, degree, u)[degree])
}

/// `P_0 … P_max_degree` at `2u − 1` via the three-term recurrence.
fn jacobi_all(a: f64, b: f64, max_degree: usize, u: f64) -> Vec<f64> {
    let x = 2.0 * u - 1.0;
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree == 0 {
        return out;
    }
    // the generic coefficients divide by (a + b) at n = 0
    out.push((a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0));
    let ab = a + b;
    for n in 1..max_degree {
        let nf = n as f64;
        let s = 2.0 * nf + ab;
        let denom = (nf + 1.0) * (nf + ab + 1.0);
        let ca = (s + 1.0) * (s + 2.0) / (2.0 * denom);
        let cb = (s + 1.0) * (a * a - b * b) / (2.0 * denom * s);
        let cc = (a + nf) * (b + nf) * (s + 2.0) / (denom * s);
        let next = (ca * x + cb) * out[n] - cc * out[n - 1];
        out.push(next);
    }
    out
}

/// `n × L` matrix with entries `(1/n)·w_l((j − 1)/n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn n_lags(&self) -> usize {
        self.entries.nrows()
    }

    pub fn size(&self) -> usize {
        self.entries.ncols()
    }
}

/// Weight matrix on the lag grid `u_j = (j − 1)/m`, `j = 1..m`; the most
/// recent observation gets `u = 0`. Columns are ordered by increasing degree.
pub fn build_weight_matrix(spec: &DictionarySpec, m: usize) -> Result<WeightMatrix> {
    if m == 0 {
        return Err(Error::InvalidParameter("weight grid needs m >= 1".into()));
    }
    spec.validate()?;
    let scale = 1.0 / m as f64;
    let mut entries = DMatrix::zeros(m, spec.size);
    for j in 0..m {
        let row = spec.basis(j as f64 * scale)?;
        for (l, w) in row.into_iter().enumerate() {
            entries[(j, l)] = scale * w;
        }
    }
    Ok(WeightMatrix { entries })
}

/// `Σ_l coeffs_l · w_l(u)`.
pub fn weight_function_eval(coeffs: &[f64], spec: &DictionarySpec, u: f64) -> Result<f64> {
    if coeffs.len() != spec.size {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a dictionary of size {}",
            coeffs.len(),
            spec.size
        )));
    }
    let basis = spec.basis(u)?;
    Ok(coeffs.iter().zip(&basis).map(|(c, w)| c * w).sum())
}
