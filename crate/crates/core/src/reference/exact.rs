//! Exact volume of a bounded H-polytope by Lasserre's facet recursion:
//!
//! ```text
//! vol_d {Gu <= h} = (1/d) Σ_i (h_i / ‖g_i‖) · vol_{d-1}(facet i)
//! ```
//!
//! Each facet is re-expressed in an orthonormal chart of its hyperplane. Face
//! volumes are memoized by the set of hyperplanes that cut them out, since the
//! same face is reached along every ordering of that set.
//!
//! The identity only holds for non-empty faces, so the vertices of the top
//! polytope are enumerated first: the face cut out by a set of hyperplanes is
//! non-empty exactly when some vertex is tight on all of them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::HPolytope;
use crate::error::{Error, Result};

// Row norms below this (rows are unit at the top level) mean the constraint is
// constant on the current face.
const ZERO_NORMAL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-10;
const PARALLEL_TOL: f64 = 1e-12;
const TIGHT_TOL: f64 = 1e-9;
const MAX_VERTEX_CANDIDATES: u128 = 5_000_000;

struct Recursion {
    memo: HashMap<Vec<usize>, f64>,
    /// Sorted tight-constraint sets, one per vertex of the top polytope.
    vertices: Vec<Vec<usize>>,
}

/// Rows normalized to unit normals, duplicates and vacuous rows removed.
/// `None` means the region is empty or flat on this face.
fn normalize(g: &DMatrix<f64>, h: &DVector<f64>, ids: &[usize]) -> Option<(DMatrix<f64>, DVector<f64>, Vec<usize>)> {
    let d = g.ncols();
    let mut rows: Vec<(DVector<f64>, f64, usize)> = Vec::with_capacity(ids.len());
    for (r, &id) in ids.iter().enumerate() {
        let normal: DVector<f64> = g.row(r).transpose();
        let norm = normal.norm();
        if norm <= ZERO_NORMAL {
            if h[r] < -FEAS_TOL {
                return None;
            }
            continue;
        }
        let (normal, offset) = (normal / norm, h[r] / norm);
        let mut merged = false;
        for (other, other_offset, other_id) in rows.iter_mut() {
            let cos = other.dot(&normal);
            if cos > 1.0 - PARALLEL_TOL {
                if offset < *other_offset {
                    *other_offset = offset;
                    *other_id = id;
                }
                merged = true;
                break;
            }
            if cos < -1.0 + PARALLEL_TOL && offset + *other_offset <= FEAS_TOL {
                // opposite half-spaces meeting in (at most) a hyperplane
                return None;
            }
        }
        if !merged {
            rows.push((normal, offset, id));
        }
    }
    let g = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].0[j]);
    let h = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    Some((g, h, rows.into_iter().map(|r| r.2).collect()))
}

/// Orthonormal basis (d × (d-1)) of the complement of a unit vector, taken
/// from the Householder reflector that maps it onto a coordinate axis.
fn complement_basis(normal: &DVector<f64>) -> DMatrix<f64> {
    let d = normal.len();
    let k = normal.iamax();
    let mut v = normal.clone();
    v[k] += normal[k].signum();
    let vv = v.norm_squared();
    let reflector = DMatrix::identity(d, d) - (&v * v.transpose()) * (2.0 / vv);
    let cols: Vec<usize> = (0..d).filter(|c| *c != k).collect();
    reflector.select_columns(&cols)
}

fn interval_length(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for r in 0..g.nrows() {
        let c = g[(r, 0)];
        if c > 0.0 {
            hi = hi.min(h[r] / c);
        } else if c < 0.0 {
            lo = lo.max(h[r] / c);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Unbounded);
    }
    Ok((hi - lo).max(0.0))
}

impl Recursion {
    fn nonempty(&self, face: &[usize]) -> bool {
        self.vertices
            .iter()
            .any(|tight| face.iter().all(|id| tight.binary_search(id).is_ok()))
    }

    fn volume(&mut self, g: &DMatrix<f64>, h: &DVector<f64>, ids: &[usize], face: &[usize]) -> Result<f64> {
        if let Some(v) = self.memo.get(face) {
            return Ok(*v);
        }
        if !self.nonempty(face) {
            self.memo.insert(face.to_vec(), 0.0);
            return Ok(0.0);
        }
        let value = self.compute(g, h, ids, face)?;
        self.memo.insert(face.to_vec(), value);
        Ok(value)
    }

    fn compute(&mut self, g: &DMatrix<f64>, h: &DVector<f64>, ids: &[usize], face: &[usize]) -> Result<f64> {
        let Some((g, h, ids)) = normalize(g, h, ids) else {
            return Ok(0.0);
        };
        let d = g.ncols();
        if d == 1 {
            return interval_length(&g, &h);
        }
        if g.nrows() <= d {
            // fewer than d + 1 half-spaces cannot bound a d-dimensional region
            return Err(Error::Unbounded);
        }
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for i in 0..g.nrows() {
            if h[i] == 0.0 {
                continue;
            }
            let normal: DVector<f64> = g.row(i).transpose();
            let chart = complement_basis(&normal);
            let origin = &normal * h[i];
            let others: Vec<usize> = (0..g.nrows()).filter(|r| *r != i).collect();
            let sub_g = g.select_rows(&others) * &chart;
            let sub_h = DVector::from_iterator(
                others.len(),
                others.iter().map(|&r| h[r] - g.row(r).dot(&origin.transpose())),
            );
            let sub_ids: Vec<usize> = others.iter().map(|&r| ids[r]).collect();
            let mut sub_face = face.to_vec();
            let pos = sub_face.binary_search(&ids[i]).unwrap_or_else(|p| p);
            sub_face.insert(pos, ids[i]);
            let facet = self.volume(&sub_g, &sub_h, &sub_ids, &sub_face)?;
            total += h[i] * facet;
            magnitude += (h[i] * facet).abs();
        }
        let vol = total / d as f64;
        if !vol.is_finite() {
            return Err(Error::NumericalDegeneracy("non-finite face volume".into()));
        }
        if vol < 0.0 {
            if -vol > 1e-8 * magnitude / d as f64 {
                return Err(Error::NumericalDegeneracy(format!(
                    "negative face volume {vol:e} in dimension {d}"
                )));
            }
            return Ok(0.0);
        }
        Ok(vol)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Advances `combo` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Tight sets of all vertices of `{Gu <= h}`, from every non-singular choice
/// of `d` constraints whose solution satisfies the rest.
fn vertex_tight_sets(hp: &HPolytope) -> Result<Vec<Vec<usize>>> {
    let (rows, d) = (hp.g.nrows(), hp.g.ncols());
    if rows < d {
        return Err(Error::Unbounded);
    }
    if binomial(rows, d) > MAX_VERTEX_CANDIDATES {
        return Err(Error::NumericalDegeneracy(format!(
            "{rows} constraints in dimension {d} are too many for vertex enumeration"
        )));
    }
    let norms: Vec<f64> = hp.g.row_iter().map(|r| r.norm()).collect();
    let scale = 1.0 + hp.h.amax();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut combo: Vec<usize> = (0..d).collect();
    loop {
        let sub = hp.g.select_rows(&combo);
        let rhs = DVector::from_iterator(d, combo.iter().map(|&r| hp.h[r]));
        let lu = sub.lu();
        let det = lu.determinant().abs();
        let volume_of_normals: f64 = combo.iter().map(|&r| norms[r]).product();
        if det > 1e-10 * volume_of_normals {
            if let Some(v) = lu.solve(&rhs) {
                let slack = &hp.h - &hp.g * &v;
                let tol = TIGHT_TOL * scale;
                if slack.iter().zip(&norms).all(|(s, n)| *s >= -tol * n) {
                    let tight: Vec<usize> = (0..rows).filter(|&r| slack[r].abs() <= tol * norms[r]).collect();
                    if !found.contains(&tight) {
                        found.push(tight);
                    }
                }
            }
        }
        if !next_combination(&mut combo, rows) {
            break;
        }
    }
    Ok(found)
}

/// Volume of `{u : Gu <= h}` in `R^d` by facet recursion. Errors with
/// `Unbounded` if the recursion reaches an open interval.
pub(super) fn lasserre_volume(hp: &HPolytope) -> Result<f64> {
    let ids: Vec<usize> = (0..hp.h.len()).collect();
    let vertices = vertex_tight_sets(hp)?;
    if vertices.is_empty() {
        return Ok(0.0);
    }
    let mut rec = Recursion {
        memo: HashMap::new(),
        vertices,
    };
    rec.compute(&hp.g, &hp.h, &ids, &[])
}
