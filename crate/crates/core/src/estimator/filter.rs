//! Dimension-generic Kalman filter primitives.

use nalgebra::{DMatrix, SMatrix, SVector};

/// Largest innovation-covariance condition number accepted by an update.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("innovation covariance is singular or ill-conditioned (condition number {condition:e})")]
pub struct SingularInnovation {
    pub condition: f64,
}

/// Second-order truncation of exp(A·Ts): I + A·Ts + A²·Ts²/2.
pub fn discretize<const N: usize>(a: &SMatrix<f64, N, N>, ts: f64) -> SMatrix<f64, N, N> {
    let at = a * ts;
    SMatrix::<f64, N, N>::identity() + at + at * at * 0.5
}

/// Innovation covariance when the measurement itself is a function of both the
/// raw sensor reading and the state:
///
/// S = F R Fᵀ + G P Gᵀ + C P Cᵀ − 2 G P Cᵀ
///
/// `f` is ∂z/∂(raw reading), `g` is ∂z/∂x, `c` is the observation Jacobian.
/// The symmetric part is returned.
pub fn innovation_covariance_full<const N: usize, const M: usize, const K: usize>(
    f: &SMatrix<f64, M, K>,
    r: &SMatrix<f64, K, K>,
    g: &SMatrix<f64, M, N>,
    p: &SMatrix<f64, N, N>,
    c: &SMatrix<f64, M, N>,
) -> SMatrix<f64, M, M> {
    let s = f * r * f.transpose() + g * p * g.transpose() + c * p * c.transpose()
        - (g * p * c.transpose()) * 2.0;
    (s + s.transpose()) * 0.5
}

/// Condition number of a small square matrix from its singular values.
pub fn condition_number<const M: usize>(s: &SMatrix<f64, M, M>) -> f64 {
    let d = DMatrix::from_column_slice(M, M, s.as_slice());
    let sv = d.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn invert_guarded<const M: usize>(
    s: &SMatrix<f64, M, M>,
) -> Result<SMatrix<f64, M, M>, SingularInnovation> {
    let condition = condition_number(s);
    if condition > MAX_CONDITION_NUMBER {
        return Err(SingularInnovation { condition });
    }
    let d = DMatrix::from_column_slice(M, M, s.as_slice());
    let inv = d
        .try_inverse()
        .ok_or(SingularInnovation { condition })?;
    Ok(SMatrix::<f64, M, M>::from_column_slice(inv.as_slice()))
}

/// Squared Mahalanobis distance of an innovation.
pub fn mahalanobis_squared<const M: usize>(
    innovation: &SVector<f64, M>,
    s_inv: &SMatrix<f64, M, M>,
) -> f64 {
    (innovation.transpose() * s_inv * innovation)[(0, 0)]
}

/// Kalman update with the covariance in Joseph form:
///
/// K = P Cᵀ S⁻¹, x ← x + K·innovation, P ← (I − KC) P (I − KC)ᵀ + K R Kᵀ
///
/// `r` is the measurement noise as seen in innovation space. Returns the gain.
pub fn joseph_update<const N: usize, const M: usize>(
    x: &mut SVector<f64, N>,
    p: &mut SMatrix<f64, N, N>,
    innovation: &SVector<f64, M>,
    c: &SMatrix<f64, M, N>,
    s: &SMatrix<f64, M, M>,
    r: &SMatrix<f64, M, M>,
) -> Result<SMatrix<f64, N, M>, SingularInnovation> {
    let s_inv = invert_guarded(s)?;
    let k = *p * c.transpose() * s_inv;
    *x += k * innovation;
    let ikc = SMatrix::<f64, N, N>::identity() - k * c;
    let updated = ikc * *p * ikc.transpose() + k * r * k.transpose();
    *p = (updated + updated.transpose()) * 0.5;
    Ok(k)
}

/// Average P with its transpose.
pub fn symmetrize<const N: usize>(p: &mut SMatrix<f64, N, N>) {
    *p = (*p + p.transpose()) * 0.5;
}
