//! Control laws: dynamic inversion of the algebra error, the angular
//! acceleration command and the body moment.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{input_matrix, Matrix4x9};
use crate::error::{Error, Result};
use crate::record::{plain_vector, row_major};
use crate::scalar::Real;
use crate::se23::{u_zeta, AlgebraVector, Vector9};

/// Rigid-body parameters of the vehicle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    #[serde(with = "row_major")]
    pub inertia: Matrix3<f64>,
    pub mass: f64,
    #[serde(with = "plain_vector")]
    pub gravity: Vector3<f64>,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            inertia: Matrix3::from_diagonal(&Vector3::new(0.0820, 0.0845, 0.1377)),
            mass: 1.0,
            gravity: Vector3::new(0.0, 0.0, -9.81),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {}", self.mass)));
        }
        let sym = (self.inertia - self.inertia.transpose()).norm();
        if sym > 1e-12 * self.inertia.norm() || self.inertia.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("inertia"));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput("gravity must be finite".into()));
        }
        Ok(())
    }

    /// Thrust force for a specific-force magnitude.
    pub fn thrust(&self, specific_force: f64) -> f64 {
        self.mass * specific_force
    }
}

/// `B_uᵀ U_ζ B_u`, the actuated block of the input distortion.
pub fn actuated_block<T: Real>(zeta: &AlgebraVector<T>) -> Result<Matrix4<T>> {
    let bu = input_matrix::<T>();
    Ok(bu.transpose() * u_zeta(zeta)? * bu)
}

/// Input `u` such that the actuated rows of `U_ζ B_u u` equal `K ζ`.
///
/// Only four of the nine error directions are actuated, so the remaining
/// rows keep a second-order term reported by [`inversion_remainder`].
pub fn dynamic_inversion_zeta<T: Real>(zeta: &AlgebraVector<T>, k_zeta: &Matrix4x9<T>) -> Result<Vector4<T>> {
    let m = actuated_block(zeta)?;
    m.lu().solve(&(k_zeta * zeta.0)).ok_or(Error::Singular("actuated block of U_zeta"))
}

/// `U_ζ B_u u − B_u K ζ` for the inverted input; zero in the actuated rows.
pub fn inversion_remainder<T: Real>(zeta: &AlgebraVector<T>, k_zeta: &Matrix4x9<T>) -> Result<Vector9<T>> {
    let bu = input_matrix::<T>();
    let u = dynamic_inversion_zeta(zeta, k_zeta)?;
    let mut r = u_zeta(zeta)? * (bu * u) - bu * (k_zeta * zeta.0);
    r.fixed_rows_mut::<4>(5).fill(T::zero());
    Ok(r)
}

/// Body angular acceleration command `R_br (ω̄̇_r − K_ω e)`.
pub fn angular_rate_command<T: Real>(
    rate_dot_ref: &Vector3<T>,
    omega_err: &Vector3<T>,
    r_br: &Matrix3<T>,
    k_omega: &Matrix3<T>,
) -> Vector3<T> {
    r_br * (rate_dot_ref - k_omega * omega_err)
}

/// Euler moment `J ω̇ + ω × J ω`.
pub fn moment<T: Real>(inertia: &Matrix3<T>, omega_dot_cmd: &Vector3<T>, omega_body: &Vector3<T>) -> Vector3<T> {
    inertia * omega_dot_cmd + omega_body.cross(&(inertia * omega_body))
}
