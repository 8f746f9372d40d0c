//! Differential flatness: flat outputs `(x, y, z, ψ)` and their derivatives
//! to attitude, body-frame specific force, body rate and angular
//! acceleration.

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::se23::{GroupState, InputVector};
use crate::so3::unskew;
use crate::trajectory::minsnap::MinSnapTrajectory;
use crate::trajectory::reference::ReferenceSample;

const THRUST_EPS: f64 = 1e-6;
const HEADING_EPS: f64 = 1e-9;

/// Flat outputs and their derivatives, `derivs[d]` holding the `d`-th one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatOutputs {
    pub derivs: [Vector4<f64>; 5],
}

impl FlatOutputs {
    pub fn from_trajectory(traj: &MinSnapTrajectory, t: f64) -> Self {
        Self { derivs: std::array::from_fn(|d| traj.eval(t, d)) }
    }

    fn xyz(&self, d: usize) -> Vector3<f64> {
        self.derivs[d].xyz()
    }

    fn yaw(&self, d: usize) -> f64 {
        self.derivs[d][3]
    }
}

/// Unit vector `u = w/‖w‖` with its first two derivatives.
fn normalize(w: Vector3<f64>, dw: Vector3<f64>, ddw: Vector3<f64>) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let s = w.norm();
    let u = w / s;
    let ds = u.dot(&dw);
    let du = (dw - u * ds) / s;
    let dds = du.dot(&dw) + u.dot(&ddw);
    let ddu = (ddw - du * (2.0 * ds) - u * dds) / s;
    (u, du, ddu)
}

/// Reference state and input at one time instant from the flat outputs.
pub fn flatness_reference(flat: &FlatOutputs, t: f64, gravity: &Vector3<f64>) -> Result<ReferenceSample> {
    let f = flat.xyz(2) - gravity;
    if f.norm() <= THRUST_EPS {
        return Err(Error::FreeFall { t });
    }
    let thrust = f.norm();
    let (z, dz, ddz) = normalize(f, flat.xyz(3), flat.xyz(4));

    let (psi, dpsi, ddpsi) = (flat.yaw(0), flat.yaw(1), flat.yaw(2));
    let xc = Vector3::new(psi.cos(), psi.sin(), 0.0);
    let dxc = Vector3::new(-psi.sin(), psi.cos(), 0.0) * dpsi;
    let ddxc = Vector3::new(-psi.cos(), -psi.sin(), 0.0) * (dpsi * dpsi) + Vector3::new(-psi.sin(), psi.cos(), 0.0) * ddpsi;

    let w = z.cross(&xc);
    if w.norm() <= HEADING_EPS {
        return Err(Error::Singular("heading is undefined when thrust is horizontal along the yaw direction"));
    }
    let dw = dz.cross(&xc) + z.cross(&dxc);
    let ddw = ddz.cross(&xc) + dz.cross(&dxc) * 2.0 + z.cross(&ddxc);
    let (y, dy, ddy) = normalize(w, dw, ddw);
    let x = y.cross(&z);
    let dx = dy.cross(&z) + y.cross(&dz);
    let ddx = ddy.cross(&z) + dy.cross(&dz) * 2.0 + y.cross(&ddz);

    let r = Matrix3::from_columns(&[x, y, z]);
    let dr = Matrix3::from_columns(&[dx, dy, dz]);
    let ddr = Matrix3::from_columns(&[ddx, ddy, ddz]);
    let omega_hat = r.transpose() * dr;
    let omega = unskew(&((omega_hat - omega_hat.transpose()) * 0.5));
    let k = r.transpose() * ddr;
    let rate_dot = unskew(&((k - k.transpose()) * 0.5));

    let state = GroupState::from_parts_unchecked(r, flat.xyz(1), flat.xyz(0));
    Ok(ReferenceSample {
        state,
        input: InputVector::new(Vector3::new(0.0, 0.0, thrust), omega),
        rate_dot,
        flat: Some(*flat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::skew;
    use crate::trajectory::min_snap;
    use approx::assert_relative_eq;

    const G: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

    fn flat(p: [Vector3<f64>; 5], yaw: [f64; 5]) -> FlatOutputs {
        FlatOutputs {
            derivs: std::array::from_fn(|d| Vector4::new(p[d].x, p[d].y, p[d].z, yaw[d])),
        }
    }

    #[test]
    fn hover() {
        let f = flat([Vector3::new(1.0, 2.0, 3.0), Vector3::zeros(), Vector3::zeros(), Vector3::zeros(), Vector3::zeros()], [0.0; 5]);
        let s = flatness_reference(&f, 0.0, &G).unwrap();
        assert_relative_eq!(*s.state.rotation(), Matrix3::identity(), epsilon = 1e-15);
        assert_eq!(s.input.accel(), Vector3::new(0.0, 0.0, 9.81));
        assert_eq!(s.input.rate(), Vector3::zeros());
        assert_eq!(*s.state.position(), Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn constant_horizontal_acceleration_tilts() {
        let a = Vector3::new(9.81, 0.0, 0.0);
        let f = flat([Vector3::zeros(), Vector3::zeros(), a, Vector3::zeros(), Vector3::zeros()], [0.0; 5]);
        let s = flatness_reference(&f, 0.0, &G).unwrap();
        let r = s.state.rotation();
        assert_relative_eq!(r.column(2).into_owned(), Vector3::new(1.0, 0.0, 1.0).normalize(), epsilon = 1e-15);
        assert_relative_eq!(s.input.accel().z, 9.81 * 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(s.input.rate(), Vector3::zeros());
        assert_relative_eq!(r * s.input.accel() + G, a, epsilon = 1e-12);
    }

    #[test]
    fn free_fall_is_rejected() {
        let f = flat([Vector3::zeros(), Vector3::zeros(), G, Vector3::zeros(), Vector3::zeros()], [0.0; 5]);
        assert_eq!(flatness_reference(&f, 1.5, &G).unwrap_err(), Error::FreeFall { t: 1.5 });
    }

    #[test]
    fn rates_match_finite_differences() {
        let w = [
            Vector4::new(0.0, 0.0, 0.0, 0.0),
            Vector4::new(2.0, 1.0, 1.0, 0.4),
            Vector4::new(3.0, -1.0, 0.5, -0.3),
        ];
        let traj = min_snap(&w, &[0.0, 1.2, 2.5]).unwrap();
        let at = |t: f64| flatness_reference(&FlatOutputs::from_trajectory(&traj, t), t, &G).unwrap();
        let h = 1e-4;
        for &t in &[0.3, 0.9, 1.7, 2.2] {
            let s = at(t);
            let dr = (at(t + h).state.rotation() - at(t - h).state.rotation()) / (2.0 * h);
            assert_relative_eq!(dr, s.state.rotation() * skew(&s.input.rate()), epsilon = 1e-6);
            let dw = (at(t + h).input.rate() - at(t - h).input.rate()) / (2.0 * h);
            assert_relative_eq!(dw, s.rate_dot, epsilon = 1e-5);
            let r = s.state.rotation();
            assert_relative_eq!((r.transpose() * r), Matrix3::identity(), epsilon = 1e-12);
            // Body z along the specific force.
            let fw = traj.eval(t, 2).xyz() - G;
            assert_relative_eq!(r.column(2).into_owned(), fw.normalize(), epsilon = 1e-12);
        }
    }
}
