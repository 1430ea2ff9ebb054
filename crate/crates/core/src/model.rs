//! Polytope instances `P = {x >= 0 : Ax = b}` and their JSON wire format.
//!
//! The wire format is a single object:
//!
//! ```text
//! { "A": [[a11, ..., a1n], ..., [am1, ..., amn]], "b": [b1, ..., bm], "label": "optional" }
//! ```
//!
//! Numbers are written as the shortest decimal that round-trips to the same
//! binary64 value, so `load(dump(inst)) == inst` bit for bit.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A polytope given in equality form: `A x = b`, `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl PolytopeInstance {
    /// Builds an instance, checking shapes and finiteness (not rank).
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, label: Option<String>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Parse("constraint matrix must be non-empty".into()));
        }
        if b.len() != a.nrows() {
            return Err(Error::Parse(format!(
                "b has length {} but A has {} rows",
                b.len(),
                a.nrows()
            )));
        }
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if !a[(i, j)].is_finite() {
                    return Err(Error::NonFiniteEntry {
                        location: format!("A[{i}][{j}]"),
                    });
                }
            }
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                location: format!("b[{i}]"),
            });
        }
        Ok(Self { a, b, label })
    }

    /// Builds an instance from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>], b: &[f64], label: Option<String>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Parse("\"A\" must have at least one row".into()));
        }
        let n = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Parse(format!(
                "ragged rows: row 0 has {n} entries, row {i} has {}",
                r.len()
            )));
        }
        let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
        Self::new(a, DVector::from_column_slice(b), label)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Number of equations.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Expected dimension `n - m` (saturating).
    pub fn dim(&self) -> usize {
        self.n().saturating_sub(self.m())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("finite instance serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("finite instance serializes")
    }

    fn to_wire(&self) -> InstanceJson {
        InstanceJson {
            a: (0..self.m())
                .map(|i| self.a.row(i).iter().copied().collect())
                .collect(),
            b: self.b.iter().copied().collect(),
            label: self.label.clone(),
        }
    }
}

/// Reads an instance from a byte stream; shapes are inferred, rank is not checked.
pub fn load_instance<R: Read>(source: R) -> Result<PolytopeInstance> {
    let wire: InstanceJson =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    PolytopeInstance::from_rows(&wire.a, &wire.b, wire.label)
}

pub fn load_instance_str(text: &str) -> Result<PolytopeInstance> {
    load_instance(text.as_bytes())
}

/// Outcome of [`validate`]. Failures are reported here rather than as errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub numeric_rank: usize,
    pub rank_tol_used: f64,
    pub is_full_row_rank: bool,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// True when the instance satisfies every standing assumption we can check.
    pub fn is_ok(&self) -> bool {
        self.messages.is_empty()
    }
}

/// Scale-aware default rank tolerance: `1e-10 * max column norm`.
pub fn default_rank_tol(a: &DMatrix<f64>) -> f64 {
    let scale = a
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    1e-10 * scale.max(f64::MIN_POSITIVE)
}

/// Checks `m < n`, nonzero rows and full row rank (singular values above `rank_tol`).
pub fn validate(inst: &PolytopeInstance, rank_tol: f64) -> ValidationReport {
    assert!(rank_tol > 0.0, "rank_tol must be positive");
    let (m, n) = (inst.m(), inst.n());
    let mut messages = Vec::new();
    if m >= n {
        messages.push(format!("need m < n, got m = {m}, n = {n}"));
    }
    for (i, row) in inst.a().row_iter().enumerate() {
        if row.iter().all(|v| *v == 0.0) {
            messages.push(format!("row {i} of A is identically zero"));
        }
    }
    let numeric_rank = inst
        .a()
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > rank_tol)
        .count();
    let is_full_row_rank = numeric_rank == m;
    if !is_full_row_rank {
        messages.push(format!(
            "A has numeric rank {numeric_rank} < m = {m} at tolerance {rank_tol:e}"
        ));
    }
    ValidationReport {
        numeric_rank,
        rank_tol_used: rank_tol,
        is_full_row_rank,
        messages,
    }
}

/// [`validate`] with the default tolerance, turned into a `Result`.
pub fn ensure_valid(inst: &PolytopeInstance) -> Result<ValidationReport> {
    let report = validate(inst, default_rank_tol(inst.a()));
    if !report.is_full_row_rank {
        return Err(Error::RankDeficient {
            rank: report.numeric_rank,
            m: inst.m(),
        });
    }
    if inst.m() >= inst.n() {
        return Err(Error::Precondition(report.messages.join("; ")));
    }
    Ok(report)
}
