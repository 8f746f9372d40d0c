//! SO(3) helpers: skew matrices, Rodrigues exponential, logarithm and the
//! left Jacobian with its inverse.
//!
//! Coefficient functions switch to Taylor series below `SMALL_ANGLE` so that
//! none of them divides by a vanishing angle.

use nalgebra::{Matrix3, Vector3};

use crate::scalar::Real;

const SMALL_ANGLE: f64 = 1e-2;

/// `w×`, the matrix with `skew(w) * x == w.cross(x)`.
#[inline]
pub fn skew<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -w.z, w.y, w.z, z, -w.x, -w.y, w.x, z)
}

/// Inverse of [`skew`]; reads the lower-left entries of `m` without checking symmetry.
#[inline]
pub fn unskew<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// `sin θ / θ`
fn coef_a<T: Real>(theta: T) -> T {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::one() - t2 / T::lit(6.0) * (T::one() - t2 / T::lit(20.0) * (T::one() - t2 / T::lit(42.0)))
    } else {
        theta.sin() / theta
    }
}

/// `(1 − cos θ) / θ²`
fn coef_b<T: Real>(theta: T) -> T {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::lit(0.5) - t2 / T::lit(24.0) * (T::one() - t2 / T::lit(30.0) * (T::one() - t2 / T::lit(56.0)))
    } else {
        (T::one() - theta.cos()) / (theta * theta)
    }
}

/// `(θ − sin θ) / θ³`
fn coef_c<T: Real>(theta: T) -> T {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::lit(1.0 / 6.0) - t2 / T::lit(120.0) * (T::one() - t2 / T::lit(42.0) * (T::one() - t2 / T::lit(72.0)))
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// `(1 − (θ/2) cot(θ/2)) / θ²`
fn coef_d<T: Real>(theta: T) -> T {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::lit(1.0 / 12.0) + t2 / T::lit(720.0) + t2 * t2 / T::lit(30240.0) + t2 * t2 * t2 / T::lit(1_209_600.0)
    } else {
        let half = theta / T::lit(2.0);
        (T::one() - half * half.cos() / half.sin()) / (theta * theta)
    }
}

/// `(θ²/2 + cos θ − 1) / θ⁴`
fn coef_e<T: Real>(theta: T) -> T {
    if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::lit(1.0 / 24.0) - t2 / T::lit(720.0) * (T::one() - t2 / T::lit(56.0) * (T::one() - t2 / T::lit(90.0)))
    } else {
        let t2 = theta * theta;
        (t2 / T::lit(2.0) + theta.cos() - T::one()) / (t2 * t2)
    }
}

/// Rodrigues formula.
pub fn exp_so3<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = skew(phi);
    Matrix3::identity() + k * coef_a(theta) + k * k * coef_b(theta)
}

/// Principal logarithm, returning the rotation vector with angle in `[0, π]`.
///
/// Near `π` the axis is read from the symmetric part of `R`, where the
/// antisymmetric part has lost its precision.
pub fn log_so3<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let two = T::lit(2.0);
    let w = unskew(&(r - r.transpose())) / two;
    let s = w.norm();
    let c = ((r.trace() - T::one()) / two).clamp(-T::one(), T::one());
    let theta = s.atan2(c);
    if theta < T::pi() - T::lit(0.1) {
        return w / coef_a(theta);
    }
    let sym = (r + r.transpose()) / two;
    let outer = (sym - Matrix3::identity() * c) / (T::one() - c);
    let (mut i, mut best) = (0, outer[(0, 0)]);
    for j in 1..3 {
        if outer[(j, j)] > best {
            i = j;
            best = outer[(j, j)];
        }
    }
    let mut axis: Vector3<T> = outer.column(i).into_owned() / best.max(T::eps()).sqrt();
    axis /= axis.norm();
    if axis.dot(&w) < T::zero() {
        axis = -axis;
    }
    axis * theta
}

/// Left Jacobian `Σ (φ×)^k / (k+1)!`.
pub fn left_jacobian<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = skew(phi);
    Matrix3::identity() + k * coef_b(theta) + k * k * coef_c(theta)
}

/// Second integral kernel `Σ (φ×)^k / (k+2)!`, so that
/// `∫₀ᵗ ∫₀ˢ exp(ω× r) dr ds = t² Γ₂(ω t)`.
pub fn second_jacobian<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = skew(phi);
    Matrix3::identity() * T::lit(0.5) + k * coef_c(theta) + k * k * coef_e(theta)
}

/// Closed-form inverse of [`left_jacobian`]; singular at `θ = 2π`.
pub fn left_jacobian_inv<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = skew(phi);
    Matrix3::identity() - k * T::lit(0.5) + k * k * coef_d(theta)
}

/// Angle of a rotation matrix, in `[0, π]`.
pub fn rotation_angle<T: Real>(r: &Matrix3<T>) -> T {
    let two = T::lit(2.0);
    let s = (unskew(&(r - r.transpose())) / two).norm();
    let c = ((r.trace() - T::one()) / two).clamp(-T::one(), T::one());
    s.atan2(c)
}
