//! Ground-truth volumes for checking the estimate: closed forms, an exact
//! facet recursion for low dimension, Monte Carlo beyond it, the gamma-density
//! identity for a single equation and the Canfield–McKay Birkhoff asymptotic.
//!
//! Volumes are measured in the affine span of `P` with the metric of `Rⁿ`.
//! Working in the coordinates of an orthonormal null basis of `A` makes that
//! the ordinary Lebesgue measure of `R^(n-m)`.

mod exact;
mod mc;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::center::{objective, CenterResult};
use crate::error::{Error, Result};
use crate::estimator::VolumeEstimate;
use crate::model::PolytopeInstance;
use crate::numerics::{gram_logdet, log_gamma, NullBasis};

pub const EXACT_DIM_CAP: usize = 6;
pub const MC_DIM_CAP: usize = 12;
pub const MC_MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedFormSimplex,
    ExactRecursive,
    MonteCarlo,
    CanfieldMcKayAsymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceVolume {
    pub ln_volume: f64,
    pub method: VolumeMethod,
    /// Standard error of `ln_volume`; Monte Carlo only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error_ln: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ReferenceVolume {
    fn deterministic(ln_volume: f64, method: VolumeMethod) -> Self {
        Self {
            ln_volume,
            method,
            std_error_ln: None,
            samples: None,
            seed: None,
        }
    }

    /// `ln_lower <= ln_volume <= ln_upper`, widened by 3σ for Monte Carlo.
    pub fn within(&self, est: &VolumeEstimate) -> bool {
        let slack = 3.0 * self.std_error_ln.unwrap_or(0.0);
        est.brackets(self.ln_volume, slack)
    }
}

/// `{u ∈ R^d : G u <= h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl HPolytope {
    pub fn new(g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.ncols() == 0 {
            return Err(Error::Precondition("H-polytope needs dimension >= 1".into()));
        }
        if g.nrows() != h.len() {
            return Err(Error::Precondition(format!(
                "G has {} rows but h has {} entries",
                g.nrows(),
                h.len()
            )));
        }
        Ok(Self { g, h })
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    /// Same region in coordinates rotated by the orthogonal matrix `q`:
    /// `{w : (G q) w <= h}`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Self {
        Self {
            g: &self.g * q,
            h: self.h.clone(),
        }
    }
}

/// Image of `P` under the chart `x = x₀ + V u`: the constraint `x_j >= 0`
/// becomes `-(row j of V)·u <= (x₀)_j`.
pub fn to_hpolytope(inst: &PolytopeInstance, nb: &NullBasis) -> Result<HPolytope> {
    if nb.basis.nrows() != inst.n() || nb.point.len() != inst.n() {
        return Err(Error::Precondition("null basis does not match instance".into()));
    }
    HPolytope::new(-nb.basis.clone(), nb.point.clone())
}

/// Exact volume with the default dimension cap.
pub fn volume_exact(hp: &HPolytope) -> Result<ReferenceVolume> {
    volume_exact_capped(hp, EXACT_DIM_CAP)
}

pub fn volume_exact_capped(hp: &HPolytope, cap: usize) -> Result<ReferenceVolume> {
    let dim = hp.dim();
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap });
    }
    let vol = exact::lasserre_volume(hp)?;
    if !(vol > 0.0) {
        return Err(Error::NumericalDegeneracy(format!(
            "region has zero volume ({vol:e})"
        )));
    }
    Ok(ReferenceVolume::deterministic(vol.ln(), VolumeMethod::ExactRecursive))
}

/// Axis-aligned box that provably contains the region.
pub fn bounding_box(hp: &HPolytope) -> Result<(DVector<f64>, DVector<f64>)> {
    mc::bounding_box(hp)
}

/// Rejection-sampling estimate of the volume (single worker).
pub fn volume_mc(hp: &HPolytope, samples: u64, seed: u64) -> Result<ReferenceVolume> {
    volume_mc_sharded(hp, samples, seed, 1)
}

/// Rejection sampling split over `threads` workers; the result is identical
/// for every worker count.
pub fn volume_mc_sharded(
    hp: &HPolytope,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<ReferenceVolume> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let dim = hp.dim();
    if dim > MC_DIM_CAP {
        return Err(Error::DimensionTooLarge { dim, cap: MC_DIM_CAP });
    }
    let (lo, hi) = mc::bounding_box(hp)?;
    let ln_box: f64 = lo.iter().zip(hi.iter()).map(|(l, h)| (h - l).ln()).sum();
    let hits = mc::accepted(hp, &lo, &hi, samples, seed, threads);
    if hits == 0 {
        return Err(Error::ZeroAcceptance);
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    // delta method on ln p̂, with the add-one proportion in the variance so
    // that an all-accepting box does not report zero uncertainty
    let p_var = (hits as f64 + 1.0) / (n + 2.0);
    Ok(ReferenceVolume {
        ln_volume: ln_box + p.ln(),
        method: VolumeMethod::MonteCarlo,
        std_error_ln: Some(((1.0 - p_var) / (p_var * n)).sqrt()),
        samples: Some(samples),
        seed: Some(seed),
    })
}

/// `ln vol {x >= 0 : Σ α_j x_j = β} = (n-1) ln β + ½ ln Σα² - ln (n-1)! - Σ ln α`.
pub fn simplex_ln_volume(alphas: &[f64], beta: f64) -> Result<ReferenceVolume> {
    if alphas.len() < 2 || alphas.iter().any(|a| !(*a > 0.0)) || !(beta > 0.0) {
        return Err(Error::Domain(
            "simplex volume needs n >= 2, positive alphas and beta".into(),
        ));
    }
    let n = alphas.len() as f64;
    let sum_sq: f64 = alphas.iter().map(|a| a * a).sum();
    let ln_prod: f64 = alphas.iter().map(|a| a.ln()).sum();
    let ln_vol = (n - 1.0) * beta.ln() + 0.5 * sum_sq.ln() - log_gamma(n)? - ln_prod;
    Ok(ReferenceVolume::deterministic(ln_vol, VolumeMethod::ClosedFormSimplex))
}

fn check_normalized_simplex(inst: &PolytopeInstance) -> Result<usize> {
    let n = inst.n();
    if inst.m() != 1 || n < 2 {
        return Err(Error::Precondition(format!(
            "density oracle needs m = 1 and n >= 2, got m = {}, n = {n}",
            inst.m()
        )));
    }
    let beta = inst.b()[0];
    if (beta - n as f64).abs() > 1e-12 * n as f64 {
        return Err(Error::Precondition(format!(
            "density oracle needs beta = n = {n}, got {beta}; rescale by the dilation law"
        )));
    }
    Ok(n)
}

/// `ln p_Y(n)` for `Y` a sum of `n` standard exponentials: the Gamma(n, 1)
/// density `n^(n-1) e^(-n) / (n-1)!` at its mean.
pub fn ln_density_oracle_m1(inst: &PolytopeInstance, center: &CenterResult) -> Result<f64> {
    let n = check_normalized_simplex(inst)?;
    if center.z.len() != n {
        return Err(Error::Precondition("center does not match instance".into()));
    }
    let nf = n as f64;
    Ok((nf - 1.0) * nf.ln() - nf - log_gamma(nf)?)
}

pub fn density_oracle_m1(inst: &PolytopeInstance, center: &CenterResult) -> Result<f64> {
    ln_density_oracle_m1(inst, center).map(f64::exp)
}

/// `ln [vol P / (e^f(z) √det AAᵀ)]`, the other side of the density identity.
pub fn ln_density_from_volume(
    inst: &PolytopeInstance,
    center: &CenterResult,
    ln_volume: f64,
) -> Result<f64> {
    Ok(ln_volume - objective(&center.z) - 0.5 * gram_logdet(inst.a())?.value)
}

/// `ln` of the Canfield–McKay main term for the `k×k` Birkhoff polytope:
/// `-(k - ½) ln 2π - (k-1)² ln k + 1/3 + k²`. Asymptotic; for reporting.
pub fn canfield_mckay_lnvol(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Precondition(format!("Canfield–McKay needs k >= 2, got {k}")));
    }
    let kf = k as f64;
    Ok(-(kf - 0.5) * (2.0 * PI).ln() - (kf - 1.0).powi(2) * kf.ln() + 1.0 / 3.0 + kf * kf)
}

pub fn canfield_mckay_reference(k: usize) -> Result<ReferenceVolume> {
    Ok(ReferenceVolume::deterministic(
        canfield_mckay_lnvol(k)?,
        VolumeMethod::CanfieldMcKayAsymptotic,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::center::{analytic_center, SolverConfig};
    use crate::generators::{gen_birkhoff, gen_random, gen_simplex, gen_transport, Margins2Way};
    use crate::numerics::{nullspace, seeded_rng};
    use proptest::prelude::*;

    fn chart(inst: &PolytopeInstance) -> HPolytope {
        to_hpolytope(inst, &nullspace(inst).unwrap()).unwrap()
    }

    fn unit_square() -> HPolytope {
        HPolytope::new(
            DMatrix::from_row_slice(4, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]),
        )
        .unwrap()
    }

    fn triangle() -> HPolytope {
        HPolytope::new(
            DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn segment_chart_has_length_two_root_two() {
        let hp = chart(&gen_simplex(&[1.0, 1.0], 2.0).unwrap());
        assert_eq!((hp.dim(), hp.g.nrows()), (1, 2));
        let v = volume_exact(&hp).unwrap();
        assert!((v.ln_volume - (2.0 * 2f64.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn birkhoff2_is_a_segment_of_length_two() {
        // vertices [[1,0],[0,1]] and [[0,1],[1,0]] are 2 apart in R⁴
        let v = volume_exact(&chart(&gen_birkhoff(2).unwrap())).unwrap();
        assert!((v.ln_volume - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn birkhoff3_chart_counts() {
        let hp = chart(&gen_birkhoff(3).unwrap());
        assert_eq!((hp.dim(), hp.g.nrows()), (4, 9));
    }

    #[test]
    fn square_and_triangle() {
        assert!(volume_exact(&unit_square()).unwrap().ln_volume.abs() < 1e-12);
        assert!((volume_exact(&triangle()).unwrap().ln_volume - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn redundant_and_duplicate_rows_do_not_change_volume() {
        let sq = unit_square();
        let g = DMatrix::from_row_slice(
            7,
            2,
            &[-1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0, 0.0, 3.0],
        );
        let h = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0, 2.0, 5.0, 3.0]);
        let padded = HPolytope::new(g, h).unwrap();
        let a = volume_exact(&sq).unwrap().ln_volume;
        let b = volume_exact(&padded).unwrap().ln_volume;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn exact_rejects_unbounded_and_large() {
        let half_plane = HPolytope::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DVector::from_vec(vec![0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(volume_exact(&half_plane).unwrap_err(), Error::Unbounded);
        let cube7 = HPolytope::new(
            DMatrix::identity(7, 7),
            DVector::from_element(7, 1.0),
        )
        .unwrap();
        assert_eq!(
            volume_exact(&cube7).unwrap_err(),
            Error::DimensionTooLarge { dim: 7, cap: 6 }
        );
    }

    #[test]
    fn simplex_closed_form_matches_exact() {
        let alphas = [1.0, 2.0, 4.0];
        let inst = gen_simplex(&alphas, 3.0).unwrap();
        let exact = volume_exact(&chart(&inst)).unwrap().ln_volume;
        // β = n: vol = n^n √Σα² / (n! Πα)
        let at_n = 3.0 * 3f64.ln() + 0.5 * 21f64.ln() - 6f64.ln() - 8f64.ln();
        assert!((exact - at_n).abs() < 1e-8);
        let closed = simplex_ln_volume(&alphas, 3.0).unwrap();
        assert_eq!(closed.method, VolumeMethod::ClosedFormSimplex);
        assert!((closed.ln_volume - at_n).abs() < 1e-12);
        // dilation law τ^(n-1)
        let scaled = simplex_ln_volume(&alphas, 7.5).unwrap().ln_volume;
        assert!((scaled - at_n - 2.0 * 2.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mc_square_and_triangle() {
        let sq = volume_mc(&unit_square(), 100_000, 1).unwrap();
        let se = sq.std_error_ln.unwrap();
        assert!(sq.ln_volume.abs() <= 3.0 * se.max(1e-12), "{sq:?}");
        let tri = volume_mc(&triangle(), 100_000, 1).unwrap();
        assert!((tri.ln_volume - 0.5f64.ln()).abs() <= 3.0 * tri.std_error_ln.unwrap());
        assert_eq!(tri.samples, Some(100_000));
        assert_eq!(tri.seed, Some(1));
    }

    #[test]
    fn mc_preconditions() {
        assert!(matches!(volume_mc(&unit_square(), 10, 1), Err(Error::Precondition(_))));
        let cube13 = HPolytope::new(
            DMatrix::from_fn(26, 13, |i, j| if i / 2 == j { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 }),
            DVector::from_element(26, 1.0),
        )
        .unwrap();
        assert!(matches!(
            volume_mc(&cube13, 20_000, 1),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn mc_thread_count_does_not_matter() {
        let hp = chart(&gen_birkhoff(3).unwrap());
        let one = volume_mc_sharded(&hp, 300_000, 4, 1).unwrap();
        let three = volume_mc_sharded(&hp, 300_000, 4, 3).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn bounding_box_contains_vertices_of_triangle() {
        let (lo, hi) = bounding_box(&triangle()).unwrap();
        for k in 0..2 {
            assert!(lo[k] <= 0.0 && lo[k] > -1e-6);
            assert!(hi[k] >= 1.0 && hi[k] < 1.0 + 1e-6);
        }
    }

    #[test]
    fn birkhoff3_exact_and_mc_agree() {
        let hp = chart(&gen_birkhoff(3).unwrap());
        let exact = volume_exact(&hp).unwrap();
        let mc = volume_mc(&hp, 400_000, 11).unwrap();
        let se = mc.std_error_ln.unwrap();
        assert!((exact.ln_volume - mc.ln_volume).abs() <= 3.0 * se, "{exact:?} {mc:?}");
    }

    #[test]
    fn density_identity_two_ways() {
        let cfg = SolverConfig::default();
        // n = 2, α = (1, 1): 2e⁻² both ways
        let inst = gen_simplex(&[1.0, 1.0], 2.0).unwrap();
        let c = analytic_center(&inst, &cfg).unwrap();
        let lhs = density_oracle_m1(&inst, &c).unwrap();
        assert!((lhs - 2.0 * (-2f64).exp()).abs() < 1e-14);
        let ln_vol = (2.0 * 2f64.sqrt()).ln();
        let rhs = ln_density_from_volume(&inst, &c, ln_vol).unwrap().exp();
        assert!((lhs - rhs).abs() < 1e-12);
        // n = 3, α = 1: 9e⁻³/2
        let inst = gen_simplex(&[1.0; 3], 3.0).unwrap();
        let c = analytic_center(&inst, &cfg).unwrap();
        let lhs = density_oracle_m1(&inst, &c).unwrap();
        assert!((lhs - 4.5 * (-3f64).exp()).abs() < 1e-14);
        let ln_vol = volume_exact(&chart(&inst)).unwrap().ln_volume;
        let rhs = ln_density_from_volume(&inst, &c, ln_vol).unwrap().exp();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn density_oracle_preconditions() {
        let cfg = SolverConfig::default();
        let inst = gen_simplex(&[1.0, 1.0], 3.0).unwrap();
        let c = analytic_center(&inst, &cfg).unwrap();
        assert!(matches!(density_oracle_m1(&inst, &c), Err(Error::Precondition(_))));
        let t = gen_birkhoff(2).unwrap();
        let c = analytic_center(&t, &cfg).unwrap();
        assert!(density_oracle_m1(&t, &c).is_err());
    }

    #[test]
    fn canfield_mckay_substitution() {
        let k2 = -1.5 * (2.0 * PI).ln() - 2f64.ln() + 1.0 / 3.0 + 4.0;
        assert!((canfield_mckay_lnvol(2).unwrap() - k2).abs() < 1e-14);
        let k3 = -2.5 * (2.0 * PI).ln() - 4.0 * 3f64.ln() + 1.0 / 3.0 + 9.0;
        assert!((canfield_mckay_lnvol(3).unwrap() - k3).abs() < 1e-14);
        assert!(canfield_mckay_lnvol(1).is_err());
        assert_eq!(
            canfield_mckay_reference(3).unwrap().method,
            VolumeMethod::CanfieldMcKayAsymptotic
        );
    }

    #[test]
    fn transport_2x3_exact_matches_mc() {
        let m = Margins2Way::new(vec![1.0, 2.0], vec![0.5, 1.5, 1.0]).unwrap();
        let hp = chart(&gen_transport(&m).unwrap());
        let exact = volume_exact(&hp).unwrap();
        let mc = volume_mc(&hp, 200_000, 2).unwrap();
        assert!((exact.ln_volume - mc.ln_volume).abs() <= 3.0 * mc.std_error_ln.unwrap());
    }

    fn random_orthogonal(seed: u64, d: usize) -> DMatrix<f64> {
        let mut rng = seeded_rng(seed);
        DMatrix::from_fn(d, d, |_, _| rng.standard_normal()).qr().q()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn exact_volume_is_chart_invariant(seed in 0u64..100_000, m in 1usize..3, extra in 1usize..5) {
            let inst = gen_random(m, m + extra, seed).unwrap();
            let hp = chart(&inst);
            let q = random_orthogonal(seed + 1, hp.dim());
            let a = volume_exact(&hp).unwrap().ln_volume;
            let b = volume_exact(&hp.rotated(&q)).unwrap().ln_volume;
            prop_assert!((a - b).abs() <= 1e-8);
        }

        #[test]
        fn simplex_exact_matches_closed_form(seed in 0u64..100_000, n in 2usize..7) {
            let mut rng = seeded_rng(seed);
            let alphas: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.2, 5.0)).collect();
            let beta = rng.uniform_in(0.5, 4.0);
            let inst = gen_simplex(&alphas, beta).unwrap();
            let exact = volume_exact(&chart(&inst)).unwrap().ln_volume;
            let closed = simplex_ln_volume(&alphas, beta).unwrap().ln_volume;
            prop_assert!((exact - closed).abs() <= 1e-8, "{} vs {}", exact, closed);
        }
    }

    #[test]
    fn exact_and_mc_concordance() {
        for seed in 0..20u64 {
            let m = 1 + (seed % 2) as usize;
            let extra = 1 + (seed % 3) as usize;
            let hp = chart(&gen_random(m, m + extra, seed).unwrap());
            assert!(hp.dim() <= 4);
            let exact = volume_exact(&hp).unwrap();
            let mc = volume_mc(&hp, 100_000, seed).unwrap();
            let se = mc.std_error_ln.unwrap();
            assert!(
                (exact.ln_volume - mc.ln_volume).abs() <= 3.0 * se,
                "seed {seed}: {exact:?} {mc:?}"
            );
        }
    }

    #[test]
    fn exact_matches_mc_on_unequal_margins() {
        // unequal margins give facet hyperplanes that miss the polytope
        let cases: [(&[f64], &[f64]); 4] = [
            (&[1.0, 3.0], &[0.5, 1.5, 2.0]),
            (&[2.0, 0.7, 1.3], &[0.4, 3.6]),
            (&[1.0, 1.0, 2.5], &[0.3, 1.2, 3.0]),
            (&[0.6, 2.4], &[0.2, 0.8, 1.0, 1.0]),
        ];
        for (i, (rows, cols)) in cases.iter().enumerate() {
            let inst = gen_transport(&Margins2Way::new(rows.to_vec(), cols.to_vec()).unwrap()).unwrap();
            let hp = chart(&inst);
            let exact = volume_exact(&hp).unwrap();
            let mc = volume_mc(&hp, 400_000, 7 + i as u64).unwrap();
            let se = mc.std_error_ln.unwrap();
            assert!(
                (exact.ln_volume - mc.ln_volume).abs() <= 4.0 * se,
                "case {i}: {exact:?} {mc:?}"
            );
        }
    }
}
