//! Dense linear-algebra kernels shared by the solver, the estimator and the
//! reference oracles. Determinants are only ever handled as logarithms.

mod rng;
mod special;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::PolytopeInstance;

pub use rng::{seeded_rng, RandomStream};
pub use special::log_gamma;

/// Triangular pivots smaller than this fraction of the largest one are
/// treated as a rank loss.
pub const PIVOT_REL_TOL: f64 = 1e-13;

/// `ln det(M Mᵀ)` together with the pivot spread of its factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramLogDet {
    pub value: f64,
    /// Ratio of largest to smallest triangular pivot.
    pub condition_hint: f64,
}

/// Orthonormal chart of the affine subspace `{x : Ax = b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullBasis {
    /// `n × (n - m)`, orthonormal columns spanning `ker A`.
    pub basis: DMatrix<f64>,
    /// Minimum-norm solution of `Ax = b`.
    pub point: DVector<f64>,
}

impl NullBasis {
    /// Maps chart coordinates `u` back to `x = point + basis·u`.
    pub fn lift(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.point + &self.basis * u
    }
}

fn check_pivots(diag: impl Iterator<Item = f64>) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for d in diag {
        let d = d.abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo > PIVOT_REL_TOL * hi) || !lo.is_finite() {
        return Err(Error::SingularGram {
            ratio: if hi > 0.0 { lo / hi } else { 0.0 },
        });
    }
    Ok((lo, hi))
}

/// `ln det(M Mᵀ)` for an `m × n` matrix of full row rank.
///
/// Factors `Mᵀ = QR` and sums `2 ln |R_ii|`; the Gram matrix itself is never formed.
pub fn gram_logdet(m: &DMatrix<f64>) -> Result<GramLogDet> {
    if m.nrows() == 0 || m.nrows() > m.ncols() {
        return Err(Error::SingularGram { ratio: 0.0 });
    }
    let r = m.transpose().qr().unpack_r();
    let diag = (0..m.nrows()).map(|i| r[(i, i)]);
    let (lo, hi) = check_pivots(diag.clone())?;
    let value = 2.0 * diag.map(|d| d.abs().ln()).sum::<f64>();
    Ok(GramLogDet {
        value,
        condition_hint: hi / lo,
    })
}

/// Orthonormal basis of `ker A` and the minimum-norm solution of `Ax = b`.
///
/// Householder QR of `[Aᵀ | I]` yields a square orthogonal `Q`; its first `m`
/// columns span the row space of `A`, the rest its orthogonal complement.
pub fn nullspace(inst: &PolytopeInstance) -> Result<NullBasis> {
    let (m, n) = (inst.m(), inst.n());
    if m >= n {
        return Err(Error::Precondition(format!("nullspace needs m < n, got {m} >= {n}")));
    }
    let mut aug = DMatrix::zeros(n, m + n);
    aug.view_mut((0, 0), (n, m)).copy_from(&inst.a().transpose());
    aug.view_mut((0, m), (n, n)).fill_with_identity();
    let qr = aug.qr();
    let q = qr.q();
    let r = qr.unpack_r();
    check_pivots((0..m).map(|i| r[(i, i)]))?;

    let r1 = r.view((0, 0), (m, m)).into_owned();
    let y = r1
        .transpose()
        .solve_lower_triangular(inst.b())
        .ok_or(Error::SingularGram { ratio: 0.0 })?;
    let point = q.columns(0, m) * y;
    let basis = q.columns(m, n - m).into_owned();
    Ok(NullBasis { basis, point })
}

/// Solves the equality-constrained Newton system
///
/// ```text
/// [ diag(h)  Aᵀ ] [ dx  ]     [ r_dual   ]
/// [ A        0  ] [ dnu ] = - [ r_primal ]
/// ```
///
/// by eliminating `dx` and factoring the Schur complement `A diag(1/h) Aᵀ`
/// (through a QR of `diag(h)^(-1/2) Aᵀ`).
pub fn kkt_solve(
    h_diag: &DVector<f64>,
    a: &DMatrix<f64>,
    r_dual: &DVector<f64>,
    r_primal: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    assert_eq!(h_diag.len(), n);
    assert_eq!(r_dual.len(), n);
    assert_eq!(r_primal.len(), m);
    if let Some(bad) = h_diag.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::Domain(format!("kkt_solve needs h > 0, got {bad}")));
    }
    let inv_sqrt_h = h_diag.map(|h| 1.0 / h.sqrt());
    let mut scaled = a.transpose();
    for (j, mut row) in scaled.row_iter_mut().enumerate() {
        row *= inv_sqrt_h[j];
    }
    let r = scaled.qr().unpack_r();
    check_pivots((0..m).map(|i| r[(i, i)]))?;

    let h_inv_rd = r_dual.component_div(h_diag);
    let rhs = r_primal - a * &h_inv_rd;
    // RᵀR dnu = rhs
    let w = r
        .transpose()
        .solve_lower_triangular(&rhs)
        .ok_or(Error::SingularGram { ratio: 0.0 })?;
    let dnu = r
        .solve_upper_triangular(&w)
        .ok_or(Error::SingularGram { ratio: 0.0 })?;
    let dx = -(r_dual + a.transpose() * &dnu).component_div(h_diag);
    Ok((dx, dnu))
}
