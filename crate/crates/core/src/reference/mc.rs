//! Rejection sampling in a certified bounding box.
//!
//! The box comes from log-barrier path following on `{Gu <= h}`: for the
//! central point `u(t)` of `min t·cᵀu - Σ ln(h - Gu)` the duality gap is at
//! most `N/t`, so `cᵀu(t) - N/t` bounds `min cᵀu` from below.

use nalgebra::{DMatrix, DVector};

use super::HPolytope;
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

const CHUNK: u64 = 1 << 16;
const NEWTON_DECREMENT_TOL: f64 = 1e-14;
const MAX_NEWTON: usize = 200;
const ESCAPE: f64 = 1e12;
const BOX_GAP: f64 = 1e-8;

fn slacks(g: &DMatrix<f64>, h: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
    h - g * u
}

fn barrier_value(t: f64, c: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let s = slacks(g, h, u);
    if s.iter().any(|v| !(*v > 0.0)) {
        return f64::INFINITY;
    }
    t * c.dot(u) - s.iter().map(|v| v.ln()).sum::<f64>()
}

/// Damped Newton centering for `t·cᵀu - Σ ln(h - Gu)` from a strictly feasible `u`.
fn center(
    t: f64,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    mut u: DVector<f64>,
    stop: impl Fn(&DVector<f64>) -> bool,
) -> Result<DVector<f64>> {
    for _ in 0..MAX_NEWTON {
        if stop(&u) {
            return Ok(u);
        }
        let s = slacks(g, h, &u);
        let inv = s.map(|v| 1.0 / v);
        let grad = c * t + g.transpose() * &inv;
        let mut scaled = g.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            row *= inv[r];
        }
        // Newton system (SᵀS) step = -grad through the triangular factor of S,
        // which keeps the square-root conditioning near the boundary.
        let r = scaled.qr().unpack_r();
        let Some(w) = r.transpose().solve_lower_triangular(&grad) else {
            return Err(Error::Unbounded);
        };
        let Some(step) = r.solve_upper_triangular(&w) else {
            return Err(Error::Unbounded);
        };
        let step = -step;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unbounded);
        }
        let decrement = -grad.dot(&step);
        if decrement <= NEWTON_DECREMENT_TOL {
            return Ok(u);
        }
        let f0 = barrier_value(t, c, g, h, &u);
        let mut alpha = 1.0;
        loop {
            let trial = &u + &step * alpha;
            if barrier_value(t, c, g, h, &trial) <= f0 - 0.25 * alpha * decrement {
                u = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-16 {
                return Ok(u);
            }
        }
        if u.amax() > ESCAPE {
            return Err(Error::Unbounded);
        }
    }
    Ok(u)
}

/// A point with `Gu < h` strictly, by a phase-one barrier on `Gu - s <= h`.
pub(super) fn interior_point(hp: &HPolytope) -> Result<DVector<f64>> {
    let (rows, d) = (hp.g.nrows(), hp.g.ncols());
    let mut g = DMatrix::zeros(rows, d + 1);
    g.view_mut((0, 0), (rows, d)).copy_from(&hp.g);
    g.column_mut(d).fill(-1.0);
    let mut y = DVector::zeros(d + 1);
    y[d] = hp.h.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let mut c = DVector::zeros(d + 1);
    c[d] = 1.0;
    let mut t = 1.0;
    while t < 1e14 {
        y = center(t, &c, &g, &hp.h, y, |y| y[d] < 0.0)?;
        if y[d] < 0.0 {
            return Ok(y.rows(0, d).into_owned());
        }
        t *= 8.0;
    }
    Err(Error::NumericalDegeneracy(
        "region has no interior point".into(),
    ))
}

/// Axis-aligned box containing `{Gu <= h}`: `(lower, upper)` per coordinate.
pub(super) fn bounding_box(hp: &HPolytope) -> Result<(DVector<f64>, DVector<f64>)> {
    let d = hp.dim();
    let n_rows = hp.g.nrows() as f64;
    let start = interior_point(hp)?;
    let mut lower = DVector::zeros(d);
    let mut upper = DVector::zeros(d);
    for k in 0..d {
        for sign in [1.0, -1.0] {
            // minimize sign·u_k
            let mut c = DVector::zeros(d);
            c[k] = sign;
            let mut u = start.clone();
            let mut t = 1.0;
            loop {
                u = center(t, &c, &hp.g, &hp.h, u, |_| false)?;
                let gap = n_rows / t;
                if gap <= BOX_GAP * (1.0 + u[k].abs()) {
                    // twice the nominal gap covers inexact centering
                    let bound = sign * u[k] - 2.0 * gap;
                    if sign > 0.0 {
                        lower[k] = bound;
                    } else {
                        upper[k] = -bound;
                    }
                    break;
                }
                t *= 10.0;
            }
        }
    }
    Ok((lower, upper))
}

fn contains(hp: &HPolytope, u: &[f64]) -> bool {
    hp.g.row_iter().zip(hp.h.iter()).all(|(row, h)| {
        row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() <= *h
    })
}

fn count_chunk(hp: &HPolytope, lo: &DVector<f64>, hi: &DVector<f64>, seed: u64, chunk: u64, len: u64) -> u64 {
    let mut rng = RandomStream::substream(seed, chunk);
    let d = lo.len();
    let mut u = vec![0.0; d];
    let mut hits = 0;
    for _ in 0..len {
        for k in 0..d {
            u[k] = rng.uniform_in(lo[k], hi[k]);
        }
        if contains(hp, &u) {
            hits += 1;
        }
    }
    hits
}

/// Acceptance count over `samples` box draws. Samples are split into fixed
/// chunks with their own sub-streams, so the count does not depend on `threads`.
pub(super) fn accepted(
    hp: &HPolytope,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    samples: u64,
    seed: u64,
    threads: usize,
) -> u64 {
    let chunks = samples.div_ceil(CHUNK);
    let len_of = |c: u64| CHUNK.min(samples - c * CHUNK);
    let threads = threads.max(1) as u64;
    if threads == 1 {
        return (0..chunks).map(|c| count_chunk(hp, lo, hi, seed, c, len_of(c))).sum();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                scope.spawn(move || {
                    (w..chunks)
                        .step_by(threads as usize)
                        .map(|c| count_chunk(hp, lo, hi, seed, c, len_of(c)))
                        .sum::<u64>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampling worker panicked"))
            .sum()
    })
}
