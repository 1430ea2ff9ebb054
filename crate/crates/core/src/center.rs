//! Analytic center of `{x >= 0 : Ax = b}`: the maximizer of
//! `f(x) = n + Σ ln x_j`.
//!
//! Solved by an infeasible-start damped Newton method on the KKT system
//! `1/x = Aᵀλ`, `Ax = b`, started from the all-ones vector. While the iterate
//! is primal infeasible the line search asks for a decrease of the full
//! residual norm; once `Ax = b` holds it switches to an Armijo test on `f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PolytopeInstance;
use crate::numerics::kkt_solve;

// Fraction of the distance to the orthant boundary a step may cover.
const BOUNDARY_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-14;
const NEWTON_REGION: f64 = 1e-2;
// Phase-one stall window: the primal residual must halve within this many steps.
const STALL_WINDOW: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Bound on `‖Ax - b‖ / (1 + ‖b‖)`.
    pub feas_tol: f64,
    /// Bound on `max_j |x_j (Aᵀλ)_j - 1|`.
    pub stat_tol: f64,
    pub max_iterations: usize,
    /// Abort with `PossiblyUnbounded` once `‖x‖∞` exceeds this.
    pub divergence_bound: f64,
    pub line_search_beta: f64,
    pub line_search_sigma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-10,
            stat_tol: 1e-9,
            max_iterations: 200,
            divergence_bound: 1e12,
            line_search_beta: 0.5,
            line_search_sigma: 0.01,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        let ok = self.feas_tol > 0.0
            && self.stat_tol > 0.0
            && self.max_iterations >= 1
            && self.divergence_bound > 1.0
            && (0.0..1.0).contains(&self.line_search_beta)
            && self.line_search_beta > 0.0
            && (0.0..1.0).contains(&self.line_search_sigma)
            && self.line_search_sigma > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid solver config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterResult {
    /// The analytic center, strictly positive.
    pub z: DVector<f64>,
    /// `f(z) = n + Σ ln z_j`.
    pub f_value: f64,
    /// Multipliers with `Aᵀλ ≈ 1/z`.
    pub dual: DVector<f64>,
    pub primal_residual: f64,
    pub stationarity_residual: f64,
    pub iterations: usize,
}

/// Snapshot handed to an observer after every accepted step.
#[derive(Debug, Clone)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub x: &'a DVector<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub step: f64,
    pub feasible_phase: bool,
}

/// `f(x) = n + Σ ln x_j`; `-inf` outside the open orthant.
pub fn objective(x: &DVector<f64>) -> f64 {
    if x.iter().any(|v| !(*v > 0.0)) {
        return f64::NEG_INFINITY;
    }
    x.len() as f64 + x.iter().map(|v| v.ln()).sum::<f64>()
}

pub fn objective_gradient(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| 1.0 / v)
}

fn primal_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    (a * x - b).norm() / (1.0 + b.norm())
}

fn stationarity_residual(a: &DMatrix<f64>, x: &DVector<f64>, dual: &DVector<f64>) -> f64 {
    (a.transpose() * dual)
        .component_mul(x)
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max)
}

// Least-squares multipliers for Aᵀλ = 1/x, weighted by x: min ‖diag(x)Aᵀλ - 1‖.
fn least_squares_dual(a: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    let mut bt = a.transpose();
    for (j, mut row) in bt.row_iter_mut().enumerate() {
        row *= x[j];
    }
    let qr = bt.qr();
    let rhs = qr.q().transpose() * DVector::from_element(x.len(), 1.0);
    qr.unpack_r()
        .solve_upper_triangular(&rhs)
        .ok_or(Error::SingularGram { ratio: 0.0 })
}

fn kkt_residual_norm(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    dual: &DVector<f64>,
) -> f64 {
    let rd = a.transpose() * dual - x.map(|v| 1.0 / v);
    let rp = a * x - b;
    (rd.norm_squared() + rp.norm_squared()).sqrt()
}

/// Computes the analytic center with the default observer (none).
pub fn analytic_center(inst: &PolytopeInstance, cfg: &SolverConfig) -> Result<CenterResult> {
    analytic_center_observed(inst, cfg, |_| {})
}

pub fn analytic_center_observed<F>(
    inst: &PolytopeInstance,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<CenterResult>
where
    F: FnMut(&Iterate<'_>),
{
    cfg.check()?;
    let (a, b) = (inst.a(), inst.b());
    let n = inst.n();
    let mut x = DVector::from_element(n, 1.0);
    let mut dual = least_squares_dual(a, &x)?;
    let mut history: Vec<f64> = Vec::new();
    let ln_bound = cfg.divergence_bound.ln() * n as f64;

    for iteration in 0..cfg.max_iterations {
        let rp = a * &x - b;
        let p_res = rp.norm() / (1.0 + b.norm());
        let s_res = stationarity_residual(a, &x, &dual);
        if p_res <= cfg.feas_tol && s_res <= cfg.stat_tol {
            return Ok(CenterResult {
                f_value: objective(&x),
                z: x,
                dual,
                primal_residual: p_res,
                stationarity_residual: s_res,
                iterations: iteration,
            });
        }
        let norm_inf = x.amax();
        if norm_inf > cfg.divergence_bound || objective(&x) > ln_bound {
            return Err(Error::PossiblyUnbounded { norm: norm_inf });
        }

        let feasible = p_res <= cfg.feas_tol;
        if !feasible {
            history.push(p_res);
            if history.len() > STALL_WINDOW {
                let old = history[history.len() - 1 - STALL_WINDOW];
                if p_res > 0.5 * old {
                    return Err(Error::NoInterior { residual: p_res });
                }
            }
        }

        let h = x.map(|v| 1.0 / (v * v));
        let rd = a.transpose() * &dual - x.map(|v| 1.0 / v);
        let (dx, ddual) = kkt_solve(&h, a, &rd, &rp)?;

        let mut t = 1.0_f64;
        for (xj, dj) in x.iter().zip(dx.iter()) {
            if *dj < 0.0 {
                t = t.min(-BOUNDARY_FRACTION * xj / dj);
            }
        }

        if feasible {
            let f0 = objective(&x);
            let slope = objective_gradient(&x).dot(&dx);
            // Inside the quadratic region a full Newton step is safe for the
            // self-concordant barrier; Armijo cannot resolve gains below ulp(f).
            if slope.abs() < NEWTON_REGION {
                x += &dx * t;
            } else {
                loop {
                    let trial = &x + &dx * t;
                    if objective(&trial) >= f0 + cfg.line_search_sigma * t * slope {
                        x = trial;
                        break;
                    }
                    t *= cfg.line_search_beta;
                    if t < MIN_STEP {
                        // Newton direction no longer ascends: numerically converged in x.
                        break;
                    }
                }
            }
            dual += &ddual;
        } else {
            let r0 = kkt_residual_norm(a, b, &x, &dual);
            loop {
                let trial = &x + &dx * t;
                let trial_dual = &dual + &ddual * t;
                if trial.iter().all(|v| *v > 0.0)
                    && kkt_residual_norm(a, b, &trial, &trial_dual)
                        <= (1.0 - cfg.line_search_sigma * t) * r0
                {
                    x = trial;
                    dual = trial_dual;
                    break;
                }
                t *= cfg.line_search_beta;
                if t < MIN_STEP {
                    return Err(Error::NoInterior { residual: p_res });
                }
            }
        }

        observer(&Iterate {
            iteration,
            x: &x,
            objective: objective(&x),
            primal_residual: primal_residual(a, b, &x),
            step: t,
            feasible_phase: feasible,
        });
    }
    Err(Error::MaxIterations {
        iterations: cfg.max_iterations,
    })
}

/// Recomputes `(primal_residual, stationarity_residual)` for `res.z` from
/// scratch, recovering the multipliers by least squares.
pub fn center_certificate(inst: &PolytopeInstance, res: &CenterResult) -> Result<(f64, f64)> {
    let z = &res.z;
    if z.len() != inst.n() || z.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(
            "certificate needs a strictly positive point of length n".into(),
        ));
    }
    let dual = least_squares_dual(inst.a(), z)?;
    Ok((
        primal_residual(inst.a(), inst.b(), z),
        stationarity_residual(inst.a(), z, &dual),
    ))
}
