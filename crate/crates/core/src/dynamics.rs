//! Error-state systems: the log-linear left-invariant error and the
//! angular-velocity error subsystem.
//!
//! With `η = X_b⁻¹ X̄_r = exp(hat(ζ))` and `ν̃ = ν_b − ν̄`, the algebra error
//! evolves exactly as
//!
//! ```text
//! ζ̇ = (C△ − ad(ν̄)) ζ + U_ζ ν̃
//! ```
//!
//! The vehicle input difference is split as `ν̃ = B_u u + B_d d`, where
//! `u = (thrust, ω_x, ω_y, ω_z)` and `d = (d_a, d_ω)`.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector4, Vector6};

use crate::error::Result;
use crate::scalar::Real;
use crate::se23::{self, AlgebraVector, GroupState, InputVector, Matrix9, Vector9};
use crate::so3::skew;

pub type Matrix9x4<T> = SMatrix<T, 9, 4>;
pub type Matrix9x6<T> = SMatrix<T, 9, 6>;
pub type Matrix4x9<T> = SMatrix<T, 4, 9>;

/// `[0₅ₓ₄; I₄]`: thrust along body z and the three body rates.
pub fn input_matrix<T: Real>() -> Matrix9x4<T> {
    let mut b = Matrix9x4::zeros();
    b.fixed_view_mut::<4, 4>(5, 0).fill_with_identity();
    b
}

/// `[0₃ₓ₆; I₆]`: specific-force and body-rate disturbances.
pub fn disturbance_matrix<T: Real>() -> Matrix9x6<T> {
    let mut b = Matrix9x6::zeros();
    b.fixed_view_mut::<6, 6>(3, 0).fill_with_identity();
    b
}

/// Linear part of the algebra error dynamics for a fixed reference input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaSystem<T: Real> {
    pub a: Matrix9<T>,
    pub b_u: Matrix9x4<T>,
    pub b_d: Matrix9x6<T>,
    pub nu_bar: InputVector<T>,
}

impl<T: Real> ZetaSystem<T> {
    /// `A + B_u K`.
    pub fn closed_loop(&self, k: &Matrix4x9<T>) -> Matrix9<T> {
        self.a + self.b_u * k
    }
}

/// `A = C△ − ad(ν̄)`.
pub fn zeta_system<T: Real>(nu_bar: &InputVector<T>) -> ZetaSystem<T> {
    ZetaSystem {
        a: se23::c_triangle::<T>() - se23::ad_matrix(nu_bar.as_vector()),
        b_u: input_matrix(),
        b_d: disturbance_matrix(),
        nu_bar: *nu_bar,
    }
}

/// Left-invariant tracking error `η = X_b⁻¹ X̄_r`.
pub fn left_error<T: Real>(vehicle: &GroupState<T>, reference: &GroupState<T>) -> GroupState<T> {
    vehicle.inverse().compose(reference)
}

/// Exact algebra error derivative for a raw input difference `ν̃`.
pub fn zeta_rhs_input<T: Real>(zeta: &AlgebraVector<T>, nu_bar: &InputVector<T>, nu_tilde: &Vector9<T>) -> Result<Vector9<T>> {
    let u = se23::u_zeta(zeta)?;
    let a = se23::c_triangle::<T>() - se23::ad_matrix(nu_bar.as_vector());
    Ok(a * zeta.0 + u * nu_tilde)
}

/// Exact algebra error derivative `A ζ + U_ζ B_u u + U_ζ B_d d`.
pub fn zeta_rhs_exact<T: Real>(
    zeta: &AlgebraVector<T>,
    nu_bar: &InputVector<T>,
    u: &Vector4<T>,
    d: &Vector6<T>,
) -> Result<Vector9<T>> {
    let lifted = input_matrix::<T>() * u + disturbance_matrix::<T>() * d;
    zeta_rhs_input(zeta, nu_bar, &lifted)
}

/// The linear closed loop `(A + B_u K) ζ + d_lifted`.
pub fn zeta_rhs_closed_loop<T: Real>(
    zeta: &Vector9<T>,
    a: &Matrix9<T>,
    b_u: &Matrix9x4<T>,
    k: &Matrix4x9<T>,
    d_lifted: &Vector9<T>,
) -> Vector9<T> {
    (a + b_u * k) * zeta + d_lifted
}

/// Rate error expressed in the reference frame: `ω̄_r − R_rb ω_b`.
pub fn omega_error<T: Real>(omega_ref: &Vector3<T>, r_rb: &Matrix3<T>, omega_body: &Vector3<T>) -> Vector3<T> {
    omega_ref - r_rb * omega_body
}

/// Closed-loop rate-error dynamics `−ω̄ × e + K_ω e + d_α`.
pub fn omega_error_rhs<T: Real>(err: &Vector3<T>, omega_ref: &Vector3<T>, k_omega: &Matrix3<T>, d_alpha: &Vector3<T>) -> Vector3<T> {
    -omega_ref.cross(err) + k_omega * err + d_alpha
}

/// System matrix of the rate-error dynamics for a constant reference rate.
pub fn omega_error_matrix<T: Real>(omega_ref: &Vector3<T>) -> Matrix3<T> {
    -skew(omega_ref)
}
