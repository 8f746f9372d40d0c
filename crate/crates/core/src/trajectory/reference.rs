//! Reference signals: a sample carries the group reference, its input and
//! the body angular acceleration.

use nalgebra::Vector3;

use crate::error::Result;
use crate::se23::{GroupState, InputVector};
use crate::so3::{exp_so3, left_jacobian, second_jacobian};
use crate::trajectory::flatness::{flatness_reference, FlatOutputs};
use crate::trajectory::minsnap::MinSnapTrajectory;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSample {
    pub state: GroupState<f64>,
    pub input: InputVector<f64>,
    pub rate_dot: Vector3<f64>,
    pub flat: Option<FlatOutputs>,
}

/// A time-parametrized reference for the closed loop.
pub trait Reference: Send + Sync {
    fn sample(&self, t: f64) -> Result<ReferenceSample>;
}

/// Reference driven by a constant body-frame input: the attitude rotates at a
/// fixed body rate while a fixed body-frame specific force acts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantTwist {
    pub start: GroupState<f64>,
    pub input: InputVector<f64>,
    pub gravity: Vector3<f64>,
}

impl Reference for ConstantTwist {
    /// Closed form:
    /// `R = R₀ exp(ω t)`, `v = v₀ + g t + R₀ t J(ωt) a`,
    /// `p = p₀ + v₀ t + g t²/2 + R₀ t² Γ₂(ωt) a`.
    fn sample(&self, t: f64) -> Result<ReferenceSample> {
        let w = self.input.rate();
        let a = self.input.accel();
        let phi = w * t;
        let r0 = self.start.rotation();
        let v0 = self.start.velocity();
        let p0 = self.start.position();
        let state = GroupState::from_parts_unchecked(
            r0 * exp_so3(&phi),
            v0 + self.gravity * t + r0 * left_jacobian(&phi) * a * t,
            p0 + v0 * t + self.gravity * (0.5 * t * t) + r0 * second_jacobian(&phi) * a * (t * t),
        );
        Ok(ReferenceSample { state, input: self.input, rate_dot: Vector3::zeros(), flat: None })
    }
}

/// Minimum-snap trajectory mapped through flatness.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatReference {
    pub trajectory: MinSnapTrajectory,
    pub gravity: Vector3<f64>,
}

impl FlatReference {
    pub fn new(trajectory: MinSnapTrajectory, gravity: Vector3<f64>) -> Self {
        Self { trajectory, gravity }
    }
}

impl Reference for FlatReference {
    fn sample(&self, t: f64) -> Result<ReferenceSample> {
        flatness_reference(&FlatOutputs::from_trajectory(&self.trajectory, t), t, &self.gravity)
    }
}
