//! The analytic-center volume estimate and its certified bounds.
//!
//! With `z` the analytic center and `B = A·diag(z)`:
//!
//! ```text
//! ln E       = n + Σ ln z_j + ½ ln det AAᵀ - ½ ln det BBᵀ
//! ln upper   = ln E - (m/2) ln α₀
//! ln lower   = ln E + ln 2Γ((m+2)/2) - (m/2) ln π - (m+2)/2 - (m/2) ln(m+2)
//! ln gauss   = ln E - (m/2) ln 2π
//! ```
//!
//! `α₀ ∈ (0, 1)` is the root of `√α·F(α) = 1` where
//! `F(α) = (1/2π) ∫ (1 + ατ²)^(-1/2α) dτ`. Substituting `σ = √α·τ` and using
//! the Beta integral gives `√α·F(α) = Γ(q - ½) / (2√π Γ(q))` with `q = 1/2α`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::center::{analytic_center, CenterResult, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{ensure_valid, PolytopeInstance};
use crate::numerics::{gram_logdet, log_gamma};

/// Largest natural-log value for which a linear-scale volume is reported.
pub const LINEAR_SCALE_LIMIT: f64 = 700.0;

const ALPHA_BRACKET: (f64, f64) = (1e-6, 1.0 - 1e-6);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub ln_estimate: f64,
    pub ln_gaussian: f64,
    pub ln_upper: f64,
    pub ln_lower: f64,
    /// `ln E - (m/2) ln(2πe)`: leading term of the asymptotic lower bound,
    /// without its non-explicit prefactor. Informational only.
    pub ln_lower_asymptotic_reference: f64,
    pub m: usize,
    pub n: usize,
}

impl VolumeEstimate {
    /// `E` itself when it fits comfortably in binary64.
    pub fn estimate_linear(&self) -> Option<f64> {
        to_linear(self.ln_estimate)
    }

    /// Whether `ln_volume` lies inside `[ln_lower - slack, ln_upper + slack]`.
    pub fn brackets(&self, ln_volume: f64, slack: f64) -> bool {
        self.ln_lower - slack <= ln_volume && ln_volume <= self.ln_upper + slack
    }
}

pub fn to_linear(ln_value: f64) -> Option<f64> {
    (ln_value < LINEAR_SCALE_LIMIT).then(|| ln_value.exp())
}

/// Constants of the two certified bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub alpha0: f64,
    /// `-½ ln α₀`, added once per equation to get the upper bound.
    pub ln_upper_factor_per_m: f64,
}

impl BoundConstants {
    pub fn get() -> Self {
        let alpha0 = alpha0();
        Self {
            alpha0,
            ln_upper_factor_per_m: -0.5 * alpha0.ln(),
        }
    }

    /// `ln [2Γ((m+2)/2) / (π^(m/2) e^((m+2)/2) (m+2)^(m/2))]`.
    pub fn ln_lower_part2(m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Precondition("bounds need m >= 1".into()));
        }
        let mf = m as f64;
        let half = 0.5 * (mf + 2.0);
        Ok(2f64.ln() + log_gamma(half)? - 0.5 * mf * PI.ln() - half - 0.5 * mf * (mf + 2.0).ln())
    }
}

/// `ln(√α·F(α))` via the gamma-ratio closed form.
pub fn ln_sqrt_alpha_f(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let q = 0.5 / alpha;
    Ok(log_gamma(q - 0.5)? - log_gamma(q)? - (2.0 * PI.sqrt()).ln())
}

/// `F(α) = (1/2π) ∫ (1 + ατ²)^(-1/2α) dτ`, closed form.
pub fn f_integral(alpha: f64) -> Result<f64> {
    Ok((ln_sqrt_alpha_f(alpha)? - 0.5 * alpha.ln()).exp())
}

/// Root of `√α·F(α) = 1` on `(0, 1)` by bisection, to absolute accuracy `tol`.
///
/// `√α·F(α)` increases from 0 to +∞ on the interval, so the bracket
/// `[1e-6, 1 - 1e-6]` always straddles the root.
pub fn compute_alpha0(tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 1e-4) {
        return Err(Error::Domain(format!("tol must lie in (0, 1e-4), got {tol}")));
    }
    let (mut lo, mut hi) = ALPHA_BRACKET;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ln_sqrt_alpha_f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `α₀` to 1e-13, computed once per process.
pub fn alpha0() -> f64 {
    static ALPHA0: OnceLock<f64> = OnceLock::new();
    *ALPHA0.get_or_init(|| compute_alpha0(1e-13).expect("fixed tolerance is valid"))
}

/// `ln E(A, b)` from a solved center.
pub fn ln_estimate(inst: &PolytopeInstance, center: &CenterResult) -> Result<f64> {
    let z = &center.z;
    if z.len() != inst.n() || z.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(
            "center must be a positive vector of length n".into(),
        ));
    }
    let mut scaled = inst.a().clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= z[j];
    }
    let ln_det_a = gram_logdet(inst.a())?.value;
    let ln_det_b = gram_logdet(&scaled)?.value;
    let ln_prod: f64 = z.iter().map(|v| v.ln()).sum();
    Ok(inst.n() as f64 + ln_prod + 0.5 * (ln_det_a - ln_det_b))
}

/// Upper bound, lower bound and the asymptotic reference for a given `ln E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBounds {
    pub ln_upper: f64,
    pub ln_lower: f64,
    pub ln_lower_asymptotic_reference: f64,
}

pub fn bounds(ln_est: f64, m: usize) -> Result<LogBounds> {
    let lower = BoundConstants::ln_lower_part2(m)?;
    let mf = m as f64;
    Ok(LogBounds {
        ln_upper: ln_est + mf * BoundConstants::get().ln_upper_factor_per_m,
        ln_lower: ln_est + lower,
        ln_lower_asymptotic_reference: ln_est - 0.5 * mf * (2.0 * PI * std::f64::consts::E).ln(),
    })
}

/// Maximum-entropy Gaussian value `ln E - (m/2) ln 2π`.
pub fn gaussian_approx(ln_est: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Precondition("gaussian approximation needs m >= 1".into()));
    }
    Ok(ln_est - 0.5 * m as f64 * (2.0 * PI).ln())
}

pub fn assemble(inst: &PolytopeInstance, center: &CenterResult) -> Result<VolumeEstimate> {
    let ln_est = ln_estimate(inst, center)?;
    let b = bounds(ln_est, inst.m())?;
    Ok(VolumeEstimate {
        ln_estimate: ln_est,
        ln_gaussian: gaussian_approx(ln_est, inst.m())?,
        ln_upper: b.ln_upper,
        ln_lower: b.ln_lower,
        ln_lower_asymptotic_reference: b.ln_lower_asymptotic_reference,
        m: inst.m(),
        n: inst.n(),
    })
}

/// Validates, solves for the center and packages the estimate.
pub fn estimate_with_center(
    inst: &PolytopeInstance,
    cfg: &SolverConfig,
) -> Result<(VolumeEstimate, CenterResult)> {
    ensure_valid(inst)?;
    let center = analytic_center(inst, cfg)?;
    Ok((assemble(inst, &center)?, center))
}

pub fn estimate_full(inst: &PolytopeInstance, cfg: &SolverConfig) -> Result<VolumeEstimate> {
    estimate_with_center(inst, cfg).map(|(est, _)| est)
}
