//! Fixed-step RK4 for the vehicle kinematics on SE2(3) and the rigid-body
//! rate dynamics.

use nalgebra::{Matrix3, Vector3};

use crate::error::Result;
use crate::se23::{c_matrix, hat, project_to_group, GroupState, InputVector, Matrix5};

/// `Ẋ = X (C + hat ν) + (hat ν_g − C) X`.
pub fn group_rhs(x: &Matrix5<f64>, nu: &InputVector<f64>, nu_g: &InputVector<f64>) -> Matrix5<f64> {
    let c = c_matrix::<f64>();
    x * (c + hat(nu.as_vector())) + (hat(nu_g.as_vector()) - c) * x
}

/// One RK4 step with inputs held constant, followed by re-projection.
pub fn step_group(x: &GroupState<f64>, nu: &InputVector<f64>, nu_g: &InputVector<f64>, dt: f64) -> Result<GroupState<f64>> {
    step_group_with(x, 0.0, dt, |_| *nu, nu_g)
}

/// One RK4 step with a time-varying input.
pub fn step_group_with<F>(x: &GroupState<f64>, t: f64, dt: f64, nu: F, nu_g: &InputVector<f64>) -> Result<GroupState<f64>>
where
    F: Fn(f64) -> InputVector<f64>,
{
    let m = x.to_matrix();
    let h = dt / 2.0;
    let mid = nu(t + h);
    let k1 = group_rhs(&m, &nu(t), nu_g);
    let k2 = group_rhs(&(m + k1 * h), &mid, nu_g);
    let k3 = group_rhs(&(m + k2 * h), &mid, nu_g);
    let k4 = group_rhs(&(m + k3 * dt), &nu(t + dt), nu_g);
    project_to_group(&(m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)))
}

/// Euler's equation `ω̇ = J⁻¹ (M − ω × J ω)`.
pub fn omega_rhs(omega: &Vector3<f64>, moment: &Vector3<f64>, inertia: &Matrix3<f64>, inertia_inv: &Matrix3<f64>) -> Vector3<f64> {
    inertia_inv * (moment - omega.cross(&(inertia * omega)))
}

/// One RK4 step of the rate dynamics with the moment held constant.
pub fn step_omega(omega: &Vector3<f64>, moment: &Vector3<f64>, inertia: &Matrix3<f64>, dt: f64) -> Vector3<f64> {
    let inv = inertia.try_inverse().expect("inertia must be invertible");
    let f = |w: &Vector3<f64>| omega_rhs(w, moment, inertia, &inv);
    let k1 = f(omega);
    let k2 = f(&(omega + k1 * (dt / 2.0)));
    let k3 = f(&(omega + k2 * (dt / 2.0)));
    let k4 = f(&(omega + k3 * dt));
    omega + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::zeta_rhs_input;
    use crate::se23::{exp_group, log_group, AlgebraVector, Vector9};
    use crate::so3::exp_so3;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const G: Vector3<f64> = Vector3::new(0.0, 0.0, -9.81);

    #[test]
    fn zero_inputs_integrate_position() {
        let x = exp_group(&AlgebraVector::from_slots(
            Vector3::new(1.0, 2.0, 3.0),
            Vector3::new(0.5, -0.2, 0.1),
            Vector3::new(0.3, 0.2, -0.1),
        ));
        let y = step_group(&x, &InputVector::zeros(), &InputVector::zeros(), 0.01).unwrap();
        assert_relative_eq!(*y.rotation(), *x.rotation(), epsilon = 1e-15);
        assert_relative_eq!(*y.velocity(), *x.velocity(), epsilon = 1e-15);
        assert_relative_eq!(*y.position(), x.position() + x.velocity() * 0.01, epsilon = 1e-15);
    }

    #[test]
    fn quarter_turn() {
        let nu = InputVector::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0));
        let n = 1000;
        let dt = PI / 2.0 / n as f64;
        let mut x = GroupState::identity();
        for _ in 0..n {
            x = step_group(&x, &nu, &InputVector::zeros(), dt).unwrap();
        }
        assert_relative_eq!(*x.rotation(), exp_so3(&Vector3::new(0.0, 0.0, PI / 2.0)), epsilon = 1e-12);
    }

    fn run(dt: f64, t_end: f64) -> GroupState<f64> {
        let nu = |t: f64| InputVector::new(Vector3::new(1.0 + t.sin(), 0.5 * t.cos(), 9.81), Vector3::new(0.8 * (2.0 * t).sin(), 0.4, -0.3 * t));
        let g = InputVector::gravity(G);
        let mut x = GroupState::identity();
        let n = (t_end / dt).round() as usize;
        for i in 0..n {
            x = step_group_with(&x, i as f64 * dt, dt, nu, &g).unwrap();
        }
        x
    }

    #[test]
    fn fourth_order_convergence() {
        let reference = run(0.001, 2.0).to_matrix();
        let coarse = (run(0.04, 2.0).to_matrix() - reference).norm();
        let fine = (run(0.02, 2.0).to_matrix() - reference).norm();
        assert!(coarse / fine >= 15.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn projection_keeps_rotation_orthonormal() {
        let nu = InputVector::new(Vector3::new(0.0, 0.0, 9.81), Vector3::new(5.0, 5.0, 1.0));
        let mut x = GroupState::identity();
        for _ in 0..1000 {
            x = step_group(&x, &nu, &InputVector::gravity(G), 1e-3).unwrap();
            assert!(x.orthonormality_error() <= 1e-9);
        }
    }

    #[test]
    fn free_rotation_conserves_energy() {
        let j = Matrix3::from_diagonal(&Vector3::new(0.0820, 0.0845, 0.1377));
        let mut w = Vector3::new(0.3, 2.0, 0.1);
        let energy = |w: &Vector3<f64>| 0.5 * w.dot(&(j * w));
        let e0 = energy(&w);
        for _ in 0..10_000 {
            w = step_omega(&w, &Vector3::zeros(), &j, 1e-3);
        }
        assert!((energy(&w) - e0).abs() <= 1e-8);
    }

    #[test]
    fn principal_axis_spin_is_constant() {
        let j = Matrix3::from_diagonal(&Vector3::new(0.0820, 0.0845, 0.1377));
        let w0 = Vector3::new(0.0, 0.0, 3.0);
        let w = step_omega(&w0, &Vector3::zeros(), &j, 0.01);
        assert_eq!(w, w0);
    }

    #[test]
    fn unit_inertia_constant_moment_is_linear() {
        let m = Vector3::new(0.2, -0.1, 0.4);
        let mut w = Vector3::zeros();
        for _ in 0..100 {
            w = step_omega(&w, &m, &Matrix3::identity(), 0.01);
        }
        assert_relative_eq!(w, m, epsilon = 1e-12);
    }

    #[test]
    fn log_error_matches_algebra_ode() {
        let g = InputVector::gravity(G);
        let nu_r = |t: f64| InputVector::new(Vector3::new(0.5 * t.sin(), 1.0, 9.81), Vector3::new(0.3, -0.2 * t.cos(), 0.5));
        let nu_b = |t: f64| InputVector::new(Vector3::new(0.7 * (1.3 * t).sin(), 0.8, 10.0 + 0.2 * t.cos()), Vector3::new(0.2 + 0.1 * t.sin(), -0.1, 0.45 + 0.05 * (3.0 * t).cos()));
        let mut xb = GroupState::identity();
        let mut xr = exp_group(&AlgebraVector::from_slots(Vector3::new(0.1, 0.2, -0.1), Vector3::new(0.05, 0.0, 0.1), Vector3::new(0.1, -0.2, 0.15)));
        let mut z = log_group(&xb.inverse().compose(&xr)).unwrap().0;
        let f = |t: f64, z: &Vector9<f64>| zeta_rhs_input(&AlgebraVector(*z), &nu_r(t), &(nu_b(t).0 - nu_r(t).0)).unwrap();
        let dt = 1e-3;
        let mut worst: f64 = 0.0;
        for i in 0..2000 {
            let t = i as f64 * dt;
            let k1 = f(t, &z);
            let k2 = f(t + dt / 2.0, &(z + k1 * (dt / 2.0)));
            let k3 = f(t + dt / 2.0, &(z + k2 * (dt / 2.0)));
            let k4 = f(t + dt, &(z + k3 * dt));
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            xb = step_group_with(&xb, t, dt, nu_b, &g).unwrap();
            xr = step_group_with(&xr, t, dt, nu_r, &g).unwrap();
            let logged = log_group(&xb.inverse().compose(&xr)).unwrap().0;
            worst = worst.max((logged - z).amax());
        }
        assert!(worst <= 1e-6, "worst {worst:e}");
    }
}
