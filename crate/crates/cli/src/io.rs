//! Ensemble files.
//!
//! ```text
//! {"dim": d, "states": [
//!     {"type": "pure", "amplitudes": [[re, im], ...]},
//!     {"type": "mixed", "matrix": [[[re, im], ...], ...]}
//! ]}
//! ```
//!
//! Numbers are written with 17 significant digits so every `f64` survives a
//! round trip exactly. Inputs are never renormalized: a pure amplitude vector
//! or a mixed trace more than 1e-8 away from one is rejected.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use pgm_core::state::{validate_density, DensityMatrix, Ensemble};
use serde_json::Value;

use crate::error::CliError;

/// Tolerance on norms, traces and Hermiticity of file inputs.
pub const INPUT_TOL: f64 = 1e-8;

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum StateEntry {
    Pure(Vec<C64>),
    Mixed(Vec<Vec<C64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleFile {
    pub dim: usize,
    pub states: Vec<StateEntry>,
}

fn parse_err(path: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        location: path.to_string(),
        message: message.into(),
    }
}

fn parse_complex(v: &Value, path: &str) -> Result<C64, CliError> {
    let pair = v
        .as_array()
        .ok_or_else(|| parse_err(path, "expected a [re, im] pair"))?;
    if pair.len() != 2 {
        return Err(parse_err(
            path,
            format!("expected a [re, im] pair, found {} elements", pair.len()),
        ));
    }
    let re = pair[0]
        .as_f64()
        .ok_or_else(|| parse_err(&format!("{path}[0]"), "expected a number"))?;
    let im = pair[1]
        .as_f64()
        .ok_or_else(|| parse_err(&format!("{path}[1]"), "expected a number"))?;
    Ok(Complex::new(re, im))
}

fn parse_vector(v: &Value, path: &str) -> Result<Vec<C64>, CliError> {
    v.as_array()
        .ok_or_else(|| parse_err(path, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, z)| parse_complex(z, &format!("{path}[{i}]")))
        .collect()
}

impl EnsembleFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let root: Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let obj = root
            .as_object()
            .ok_or_else(|| parse_err("$", "expected an object"))?;
        let dim = obj
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| parse_err("dim", "expected a positive integer"))?
            as usize;
        let states = obj
            .get("states")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err("states", "expected an array"))?;
        let mut out = Vec::with_capacity(states.len());
        for (i, st) in states.iter().enumerate() {
            let path = format!("states[{i}]");
            let kind = st.get("type").and_then(Value::as_str).ok_or_else(|| {
                parse_err(&format!("{path}.type"), "expected \"pure\" or \"mixed\"")
            })?;
            let entry = match kind {
                "pure" => {
                    let p = format!("{path}.amplitudes");
                    let amps = st
                        .get("amplitudes")
                        .ok_or_else(|| parse_err(&p, "missing field"))?;
                    StateEntry::Pure(parse_vector(amps, &p)?)
                }
                "mixed" => {
                    let p = format!("{path}.matrix");
                    let rows = st
                        .get("matrix")
                        .and_then(Value::as_array)
                        .ok_or_else(|| parse_err(&p, "expected an array of rows"))?;
                    let rows = rows
                        .iter()
                        .enumerate()
                        .map(|(r, row)| parse_vector(row, &format!("{p}[{r}]")))
                        .collect::<Result<Vec<_>, _>>()?;
                    StateEntry::Mixed(rows)
                }
                other => {
                    return Err(parse_err(
                        &format!("{path}.type"),
                        format!("unknown state type {other:?}"),
                    ))
                }
            };
            out.push(entry);
        }
        Ok(Self { dim, states: out })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { location, message } => CliError::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    /// Validates every entry and assembles the ensemble.
    pub fn to_ensemble(&self) -> Result<Ensemble, CliError> {
        if self.dim == 0 {
            return Err(parse_err("dim", "expected a positive integer"));
        }
        let d = self.dim;
        let mut states = Vec::with_capacity(self.states.len());
        for (i, entry) in self.states.iter().enumerate() {
            let invalid = |message: String| CliError::InvalidState { index: i, message };
            let rho = match entry {
                StateEntry::Pure(amps) => {
                    if amps.len() != d {
                        return Err(invalid(format!(
                            "{} amplitudes for dimension {d}",
                            amps.len()
                        )));
                    }
                    DensityMatrix::pure(DVector::from_column_slice(amps), INPUT_TOL)
                }
                StateEntry::Mixed(rows) => {
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        return Err(invalid(format!("matrix is not {d}x{d}")));
                    }
                    validate_density(DMatrix::from_fn(d, d, |r, c| rows[r][c]), INPUT_TOL)
                }
            };
            states.push(rho.map_err(|e| invalid(e.to_string()))?);
        }
        Ensemble::new(states).map_err(CliError::from)
    }

    /// Pure states keep their amplitude vectors; everything else is written
    /// as a matrix.
    pub fn from_ensemble(e: &Ensemble) -> Self {
        let states = e
            .states()
            .iter()
            .map(|s| match s.pure_vector() {
                Some(v) => StateEntry::Pure(v.iter().copied().collect()),
                None => {
                    let m = s.matrix();
                    StateEntry::Mixed(
                        (0..m.nrows())
                            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
                            .collect(),
                    )
                }
            })
            .collect();
        Self {
            dim: e.dim(),
            states,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{{\n  \"dim\": {},\n  \"states\": [", self.dim);
        for (i, st) in self.states.iter().enumerate() {
            let sep = if i + 1 < self.states.len() { "," } else { "" };
            match st {
                StateEntry::Pure(v) => {
                    let _ = writeln!(
                        out,
                        "    {{\"type\": \"pure\", \"amplitudes\": {}}}{sep}",
                        fmt_vector(v)
                    );
                }
                StateEntry::Mixed(rows) => {
                    out.push_str("    {\"type\": \"mixed\", \"matrix\": [\n");
                    for (r, row) in rows.iter().enumerate() {
                        let rsep = if r + 1 < rows.len() { "," } else { "" };
                        let _ = writeln!(out, "      {}{rsep}", fmt_vector(row));
                    }
                    let _ = writeln!(out, "    ]}}{sep}");
                }
            }
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Decimal with 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_vector(v: &[C64]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|z| format!("[{}, {}]", fmt_f64(z.re), fmt_f64(z.im)))
        .collect();
    format!("[{}]", parts.join(", "))
}
