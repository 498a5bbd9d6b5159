//! JSON state files.
//!
//! ```json
//! {"format_version": "1", "kind": "density", "dim": 2,
//!  "data": [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]]}
//! {"format_version": "1", "kind": "classical", "dim": 2, "data": [0.25, 0.75]}
//! ```
//!
//! Numbers are written in shortest round-trip form, so write then read is
//! bit-exact.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::matcore::{CMat, HermitianOperator, State};
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "1";
/// Allowed deviation of a classical vector's sum from one.
pub const CLASSICAL_SUM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Density,
    Classical,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("field '{field}': {msg}"))
}

fn number(v: &Value, field: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| field_err(field, format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(field_err(field, "not finite"));
    }
    Ok(x)
}

fn array<'a>(v: &'a Value, field: &str, len: usize) -> Result<&'a Vec<Value>> {
    let a = v.as_array().ok_or_else(|| field_err(field, "expected an array"))?;
    if a.len() != len {
        return Err(field_err(field, format!("expected {len} entries, found {}", a.len())));
    }
    Ok(a)
}

/// Parses a state file from a JSON string.
pub fn parse_state(text: &str) -> Result<State> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    let obj = v.as_object().ok_or_else(|| Error::Parse("state file must be a JSON object".into()))?;
    let get = |k: &str| obj.get(k).ok_or_else(|| field_err(k, "missing"));

    match get("format_version")? {
        Value::String(s) if s == FORMAT_VERSION => {}
        other => return Err(field_err("format_version", format!("expected \"{FORMAT_VERSION}\", got {other}"))),
    }
    let kind = match get("kind")?.as_str() {
        Some("density") => StateKind::Density,
        Some("classical") => StateKind::Classical,
        _ => return Err(field_err("kind", "expected \"density\" or \"classical\"")),
    };
    let dim = get("dim")?
        .as_u64()
        .filter(|&d| d > 0)
        .ok_or_else(|| field_err("dim", "expected a positive integer"))? as usize;
    let data = get("data")?;

    match kind {
        StateKind::Classical => {
            let rows = array(data, "data", dim)?;
            let p = rows
                .iter()
                .enumerate()
                .map(|(i, x)| number(x, &format!("data[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            if let Some(i) = p.iter().position(|&x| x < 0.0) {
                return Err(field_err(&format!("data[{i}]"), "negative probability"));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > CLASSICAL_SUM_TOL {
                return Err(field_err("data", format!("probabilities sum to {s}, not 1")));
            }
            State::classical(&p)
        }
        StateKind::Density => {
            let rows = array(data, "data", dim)?;
            let mut m = CMat::zeros(dim, dim);
            for (i, row) in rows.iter().enumerate() {
                let row = array(row, &format!("data[{i}]"), dim)?;
                for (j, z) in row.iter().enumerate() {
                    let f = format!("data[{i}][{j}]");
                    let pair = array(z, &f, 2)?;
                    m[(i, j)] = C64::new(number(&pair[0], &f)?, number(&pair[1], &f)?);
                }
            }
            State::from_matrix(m).map_err(|e| match e {
                Error::InvalidState(msg) => field_err("data", msg),
                e => e,
            })
        }
    }
}

pub fn read_state(path: impl AsRef<Path>) -> Result<State> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_state(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// JSON value of a state file. Only diagonal states can be written as
/// `classical`; by default they are.
pub fn state_json(state: &State, kind: Option<StateKind>) -> Value {
    let m = state.op().matrix();
    let n = state.dim();
    let kind = match (kind, state.op().is_diagonal(0.0)) {
        (Some(StateKind::Density), _) | (_, false) => StateKind::Density,
        _ => StateKind::Classical,
    };
    let data: Value = match kind {
        StateKind::Classical => Value::from(state.op().diagonal_real()),
        StateKind::Density => (0..n)
            .map(|i| (0..n).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into(),
    };
    json!({"format_version": FORMAT_VERSION, "kind": kind, "dim": n, "data": data})
}

pub fn state_to_string(state: &State, kind: Option<StateKind>) -> String {
    serde_json::to_string_pretty(&state_json(state, kind)).expect("state JSON is always serialisable")
}

pub fn write_state(path: impl AsRef<Path>, state: &State, kind: Option<StateKind>) -> Result<()> {
    std::fs::write(path, state_to_string(state, kind) + "\n")?;
    Ok(())
}

/// Builds a density state from row-major `(re, im)` entries.
pub fn density_from_entries(dim: usize, entries: &[(f64, f64)]) -> Result<State> {
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch(entries.len(), dim * dim));
    }
    let m = CMat::from_row_iterator(dim, dim, entries.iter().map(|&(re, im)| C64::new(re, im)));
    State::new(HermitianOperator::new_checked(m, 1e-9)?)
}

