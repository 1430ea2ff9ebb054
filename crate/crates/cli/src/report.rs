use polyvol::reference::ReferenceVolume;
use polyvol::{CenterResult, PolytopeInstance, VolumeEstimate};
use serde::Serialize;

pub const SCHEMA: &str = "polyvol/1";

#[derive(Debug, Serialize)]
pub struct CenterSummary {
    pub min: f64,
    pub max: f64,
    pub geomean: f64,
}

impl CenterSummary {
    pub fn of(center: &CenterResult) -> Self {
        let z = &center.z;
        let ln_mean = z.iter().map(|v| v.ln()).sum::<f64>() / z.len() as f64;
        Self {
            min: z.min(),
            max: z.max(),
            geomean: ln_mean.exp(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub primal_residual: f64,
    pub stationarity_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub instance_label: String,
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub ln_estimate: f64,
    pub ln_gaussian: f64,
    pub ln_upper: f64,
    pub ln_lower: f64,
    pub ln_lower_asymptotic_reference: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    pub center_summary: CenterSummary,
    pub solver: SolverSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceVolume>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich_ok: Option<bool>,
}

impl Report {
    pub fn new(inst: &PolytopeInstance, est: &VolumeEstimate, center: &CenterResult) -> Self {
        Self {
            schema: SCHEMA,
            instance_label: inst.label().unwrap_or_default().to_string(),
            n: est.n,
            m: est.m,
            dim: inst.dim(),
            ln_estimate: est.ln_estimate,
            ln_gaussian: est.ln_gaussian,
            ln_upper: est.ln_upper,
            ln_lower: est.ln_lower,
            ln_lower_asymptotic_reference: est.ln_lower_asymptotic_reference,
            estimate: est.estimate_linear(),
            center_summary: CenterSummary::of(center),
            solver: SolverSummary {
                iterations: center.iterations,
                primal_residual: center.primal_residual,
                stationarity_residual: center.stationarity_residual,
            },
            reference: None,
            sandwich_ok: None,
        }
    }

    pub fn attach(&mut self, reference: ReferenceVolume, est: &VolumeEstimate) {
        self.sandwich_ok = Some(reference.within(est));
        self.reference = Some(reference);
    }
}

#[derive(Debug, Serialize)]
pub struct PhaseBranch {
    pub zeta_kk: f64,
    pub max_zeta: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct PhaseDemo {
    pub schema: &'static str,
    pub k: usize,
    pub eps: f64,
    pub plus: PhaseBranch,
    pub minus: PhaseBranch,
}

#[derive(Debug, Serialize)]
pub struct Planar3Row {
    pub r: usize,
    pub n: usize,
    pub m: usize,
    pub ln_estimate: f64,
    pub main_term: f64,
    pub difference: f64,
}

#[derive(Debug, Serialize)]
pub struct Alpha0Report {
    pub alpha0: f64,
    pub upper_factor: f64,
}
