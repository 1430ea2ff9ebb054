//! Instance families: simplices, 2-way transportation polytopes (Birkhoff
//! included), 3-way planar transportation polytopes and seeded random
//! instances. Every constructor returns a full-row-rank system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{default_rank_tol, validate, PolytopeInstance};
use crate::numerics::seeded_rng;

const BALANCE_REL_TOL: f64 = 1e-12;

/// Row and column sums of a 2-way transportation polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margins2Way {
    rows: Vec<f64>,
    cols: Vec<f64>,
}

impl Margins2Way {
    pub fn new(rows: Vec<f64>, cols: Vec<f64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Domain("margins must be non-empty".into()));
        }
        if let Some(v) = rows.iter().chain(&cols).find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("margins must be positive, got {v}")));
        }
        let row_sum: f64 = rows.iter().sum();
        let col_sum: f64 = cols.iter().sum();
        if (row_sum - col_sum).abs() > BALANCE_REL_TOL * row_sum.max(col_sum) {
            return Err(Error::UnbalancedMargins { row_sum, col_sum });
        }
        Ok(Self { rows, cols })
    }

    /// `r = c = 1` in `k` dimensions: doubly stochastic matrices.
    pub fn birkhoff(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k], vec![1.0; k])
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn cols(&self) -> &[f64] {
        &self.cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSign {
    Plus,
    Minus,
}

/// Which family an instance came from; stored as its JSON `label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyTag {
    Simplex { alphas: Vec<f64>, beta: f64 },
    Transport2Way { rows: Vec<f64>, cols: Vec<f64> },
    Planar3Way { r: usize },
    PhaseTransition { k: usize, eps: f64, sign: PhaseSign },
    Random { m: usize, n: usize, seed: u64 },
}

impl FamilyTag {
    pub fn to_label(&self) -> String {
        serde_json::to_string(self).expect("family tags serialize")
    }

    pub fn from_label(label: &str) -> Option<Self> {
        serde_json::from_str(label).ok()
    }
}

/// `{x >= 0 : Σ α_j x_j = β}`.
pub fn gen_simplex(alphas: &[f64], beta: f64) -> Result<PolytopeInstance> {
    if alphas.len() < 2 {
        return Err(Error::Domain("a simplex needs at least two variables".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::Domain(format!("alphas must be positive, got {a}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let a = DMatrix::from_row_slice(1, alphas.len(), alphas);
    let tag = FamilyTag::Simplex {
        alphas: alphas.to_vec(),
        beta,
    };
    PolytopeInstance::new(a, DVector::from_element(1, beta), Some(tag.to_label()))
}

/// Transportation polytope `T(r, c)`.
///
/// Variable `ξ_ij` sits at index `i·l + j`. All `k` row equations are kept,
/// the last of the `l` column equations is dropped, so `m = k + l - 1`.
pub fn gen_transport(margins: &Margins2Way) -> Result<PolytopeInstance> {
    let tag = FamilyTag::Transport2Way {
        rows: margins.rows.clone(),
        cols: margins.cols.clone(),
    };
    transport_system(margins, tag)
}

fn transport_system(margins: &Margins2Way, tag: FamilyTag) -> Result<PolytopeInstance> {
    let (k, l) = (margins.rows.len(), margins.cols.len());
    if k * l < 2 || k + l > k * l {
        return Err(Error::Domain(format!(
            "a {k}×{l} transportation polytope is a single point"
        )));
    }
    let m = k + l - 1;
    let mut a = DMatrix::zeros(m, k * l);
    let mut b = DVector::zeros(m);
    for i in 0..k {
        for j in 0..l {
            a[(i, i * l + j)] = 1.0;
        }
        b[i] = margins.rows[i];
    }
    for j in 0..l - 1 {
        for i in 0..k {
            a[(k + j, i * l + j)] = 1.0;
        }
        b[k + j] = margins.cols[j];
    }
    PolytopeInstance::new(a, b, Some(tag.to_label()))
}

pub fn gen_birkhoff(k: usize) -> Result<PolytopeInstance> {
    gen_transport(&Margins2Way::birkhoff(k)?)
}

/// Index of `ξ_ijk` in the lexicographic ordering.
pub fn planar3_index(r: usize, i: usize, j: usize, k: usize) -> usize {
    (i * r + j) * r + k
}

/// 3-way planar transportation polytope `P_r`: `r×r×r` arrays whose line sums
/// along each axis are all 1.
///
/// The `3r²` line equations are dependent; rows are kept greedily in the order
/// (sums over i), (sums over j), (sums over k) whenever they are independent of
/// the rows already kept.
pub fn gen_planar3(r: usize) -> Result<PolytopeInstance> {
    if r < 2 {
        return Err(Error::Domain(format!("planar3 needs r >= 2, got {r}")));
    }
    let n = r * r * r;
    let mut candidates: Vec<DVector<f64>> = Vec::with_capacity(3 * r * r);
    for axis in 0..3 {
        for p in 0..r {
            for q in 0..r {
                let mut row = DVector::zeros(n);
                for s in 0..r {
                    let idx = match axis {
                        0 => planar3_index(r, s, p, q),
                        1 => planar3_index(r, p, s, q),
                        _ => planar3_index(r, p, q, s),
                    };
                    row[idx] = 1.0;
                }
                candidates.push(row);
            }
        }
    }
    let kept = select_independent(&candidates, 1e-9);
    let m = kept.len();
    let a = DMatrix::from_fn(m, n, |i, j| candidates[kept[i]][j]);
    let tag = FamilyTag::Planar3Way { r };
    PolytopeInstance::new(a, DVector::from_element(m, 1.0), Some(tag.to_label()))
}

// Greedy rank-revealing selection by Gram-Schmidt with one reorthogonalization pass.
fn select_independent(rows: &[DVector<f64>], rel_tol: f64) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut v = row.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > rel_tol * row.norm() {
            basis.push(v / norm);
            kept.push(idx);
        }
    }
    kept
}

/// The two `k×k` instances with margins `(1, …, 1, 2 ± eps)` on both sides.
/// Returns `(plus, minus)`.
pub fn gen_phase_transition(k: usize, eps: f64) -> Result<(PolytopeInstance, PolytopeInstance)> {
    if k < 3 {
        return Err(Error::Domain(format!("phase transition needs k >= 3, got {k}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 1), got {eps}")));
    }
    let build = |sign: PhaseSign| {
        let last = match sign {
            PhaseSign::Plus => 2.0 + eps,
            PhaseSign::Minus => 2.0 - eps,
        };
        let mut margin = vec![1.0; k];
        margin[k - 1] = last;
        let margins = Margins2Way::new(margin.clone(), margin)?;
        transport_system(&margins, FamilyTag::PhaseTransition { k, eps, sign })
    };
    Ok((build(PhaseSign::Plus)?, build(PhaseSign::Minus)?))
}

/// Seeded random instance with nonempty interior and bounded feasible set.
///
/// Row 0 is all ones, which confines `P` to a scaled simplex; the other rows
/// are standard normal. `b = A x⁺` for a random `x⁺ ∈ [0.5, 1.5]ⁿ`, which is
/// an interior witness.
pub fn gen_random(m: usize, n: usize, seed: u64) -> Result<PolytopeInstance> {
    if m == 0 || m >= n {
        return Err(Error::Precondition(format!(
            "gen_random needs 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut a = DMatrix::from_element(m, n, 1.0);
    for i in 1..m {
        for j in 0..n {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let witness = DVector::from_fn(n, |_, _| rng.uniform_in(0.5, 1.5));
    let b = &a * &witness;
    let tag = FamilyTag::Random { m, n, seed };
    let inst = PolytopeInstance::new(a, b, Some(tag.to_label()))?;
    let report = validate(&inst, default_rank_tol(inst.a()));
    if !report.is_full_row_rank {
        return Err(Error::RankDeficient {
            rank: report.numeric_rank,
            m,
        });
    }
    Ok(inst)
}
