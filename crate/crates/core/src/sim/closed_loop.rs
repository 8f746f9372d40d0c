//! Full nonlinear closed loop.
//!
//! The vehicle state is `(X_b, ω_b)`. The outer loop reads
//! `ζ = log(X_b⁻¹ X̄_r)`, inverts the input distortion for the thrust and the
//! rate command `ω_c = ω̄ + u_ω`, and the inner loop tracks `ω_c` with the
//! moment `M = J (ω̇_c − K_ω e) + ω × J ω`, `e = ω_c − ω_b`. The feed-forward
//! `ω̇_c` differentiates `u_ω` along the exact `ζ̇`. Disturbances enter the
//! body specific force and the body angular acceleration, so that
//! `ė = K_ω e + d_α` and the algebra system sees `−e` in its rate channel.

use nalgebra::{Matrix3, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::zeta_rhs_input;
use crate::error::{Error, Result};
use crate::record::plain_vector;
use crate::se23::{exp_group, log_group, project_to_group, AlgebraVector, GroupState, InputVector, Matrix5, Matrix9, Vector9};
use crate::sim::disturbance::DisturbanceSignal;
use crate::sim::integrate::group_rhs;
use crate::synthesis::cascade::CertBundle;
use crate::synthesis::control::{angular_rate_command, dynamic_inversion_zeta, moment};
use crate::trajectory::Reference;

/// Violation tolerance on the Lyapunov level.
pub const LEVEL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosedLoopConfig {
    pub dt: f64,
    pub duration: f64,
    /// Initial algebra error `ζ(0)`.
    #[serde(with = "plain_vector")]
    pub initial_offset: Vector9<f64>,
    /// Log every n-th step (summaries always use every step).
    pub log_every: usize,
    /// Integrate the algebra error ODE alongside the vehicle.
    pub track_zeta_ode: bool,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 10.0,
            initial_offset: Vector9::zeros(),
            log_every: 1,
            track_zeta_ode: false,
        }
    }
}

impl ClosedLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidInput(format!("dt ({}) and duration ({}) must be positive", self.dt, self.duration)));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidInput("log_every must be at least 1".into()));
        }
        let angle = AlgebraVector(self.initial_offset).rot().norm();
        if angle >= std::f64::consts::PI - crate::se23::CHART_MARGIN {
            return Err(Error::OutsideChart { angle });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Extremes collected over every integration step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub max_lyap_zeta: f64,
    pub max_lyap_omega: f64,
    pub time_of_max_zeta: f64,
    pub first_violation: Option<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_zeta: Vector9<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_omega_err: Vector3<f64>,
    /// `max_t ‖ζ_log − ζ_ode‖∞` when the ODE is tracked.
    pub max_ode_mismatch: Option<f64>,
}

/// Time series of one closed-loop run. All series share `t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimLog {
    pub t: Vec<f64>,
    pub vehicle: Vec<GroupState<f64>>,
    pub reference: Vec<GroupState<f64>>,
    pub zeta: Vec<Vector9<f64>>,
    pub zeta_ode: Vec<Vector9<f64>>,
    /// Rate-loop error `ω_c − ω_b`.
    pub omega_err: Vec<Vector3<f64>>,
    /// `(thrust, ω_x, ω_y, ω_z)` from the inversion.
    pub u: Vec<Vector4<f64>>,
    pub moment: Vec<Vector3<f64>>,
    /// `(d_a, d_α)`.
    pub disturbance: Vec<Vector6<f64>>,
    pub lyap_zeta: Vec<f64>,
    pub lyap_omega: Vec<f64>,
    pub summary: LogSummary,
    pub aborted: Option<String>,
}

#[derive(Clone, Copy)]
struct State {
    x: Matrix5<f64>,
    w: Vector3<f64>,
    z: Vector9<f64>,
}

impl State {
    fn plus(&self, k: &State, h: f64) -> State {
        State { x: self.x + k.x * h, w: self.w + k.w * h, z: self.z + k.z * h }
    }
}

#[derive(Clone, Copy)]
struct Signals {
    reference: GroupState<f64>,
    zeta: Vector9<f64>,
    e: Vector3<f64>,
    u: Vector4<f64>,
    moment: Vector3<f64>,
    d: Vector6<f64>,
}

struct Plant<'a> {
    bundle: &'a CertBundle,
    reference: &'a dyn Reference,
    disturbance: &'a DisturbanceSignal,
    gravity: InputVector<f64>,
    j_inv: Matrix3<f64>,
    track_ode: bool,
}

/// `η = X_b⁻¹ X̄` using the true matrix inverse so that RK4 stages off the
/// group still see a smooth field.
fn left_error_matrix(x: &Matrix5<f64>, r: &GroupState<f64>) -> Result<GroupState<f64>> {
    let rb = x.fixed_view::<3, 3>(0, 0).into_owned();
    let inv = rb.try_inverse().ok_or(Error::Singular("vehicle attitude block"))?;
    let v = x.fixed_view::<3, 1>(0, 3).into_owned();
    let p = x.fixed_view::<3, 1>(0, 4).into_owned();
    Ok(GroupState::from_parts_unchecked(inv * r.rotation(), inv * (r.velocity() - v), inv * (r.position() - p)))
}

impl Plant<'_> {
    fn rate_input(&self, zeta: &Vector9<f64>) -> Result<Vector3<f64>> {
        let u = dynamic_inversion_zeta(&AlgebraVector(*zeta), &self.bundle.k_zeta)?;
        Ok(Vector3::new(u[1], u[2], u[3]))
    }

    fn eval(&self, t: f64, s: &State) -> Result<(State, Signals)> {
        let r = self.reference.sample(t)?;
        let nu_bar = r.input;
        let zeta = log_group(&left_error_matrix(&s.x, &r.state)?)?.0;
        let u = dynamic_inversion_zeta(&AlgebraVector(zeta), &self.bundle.k_zeta)?;

        let mut dbuf = [0.0; 6];
        self.disturbance.eval_into(t, &mut dbuf);
        let d = Vector6::from_column_slice(&dbuf);
        let d_a = d.fixed_rows::<3>(0).into_owned();
        let d_alpha = d.fixed_rows::<3>(3).into_owned();

        let accel = nu_bar.accel() + Vector3::new(0.0, 0.0, u[0]) + d_a;
        let omega_c = nu_bar.rate() + Vector3::new(u[1], u[2], u[3]);
        let e = omega_c - s.w;
        let nu_b = InputVector::new(accel, s.w);
        let nu_tilde = nu_b.0 - nu_bar.0;
        let zeta_dot = zeta_rhs_input(&AlgebraVector(zeta), &nu_bar, &nu_tilde)?;

        let speed = zeta_dot.norm();
        let u_rate_dot = if speed > 0.0 {
            let eps = 1e-6 / speed;
            (self.rate_input(&(zeta + zeta_dot * eps))? - self.rate_input(&(zeta - zeta_dot * eps))?) / (2.0 * eps)
        } else {
            Vector3::zeros()
        };
        let omega_c_dot = r.rate_dot + u_rate_dot;
        let omega_dot_cmd = angular_rate_command(&omega_c_dot, &e, &Matrix3::identity(), &self.bundle.k_omega);
        let inertia = &self.bundle.vehicle.inertia;
        let m = moment(inertia, &omega_dot_cmd, &s.w);
        let w_dot = self.j_inv * (m - s.w.cross(&(inertia * s.w))) - d_alpha;

        let x_dot = group_rhs(&s.x, &nu_b, &self.gravity);
        let z_dot = if self.track_ode {
            zeta_rhs_input(&AlgebraVector(s.z), &nu_bar, &nu_tilde)?
        } else {
            Vector9::zeros()
        };
        Ok((
            State { x: x_dot, w: w_dot, z: z_dot },
            Signals { reference: r.state, zeta, e, u, moment: m, d },
        ))
    }
}

/// Simulates the certified closed loop against `reference` under one
/// disturbance realization with six channels `(d_a, d_α)`.
///
/// Failures inside the loop (leaving the logarithm chart, projection
/// failure) end the run early and are reported in `SimLog::aborted`.
pub fn run_closed_loop(
    bundle: &CertBundle,
    reference: &dyn Reference,
    disturbance: &DisturbanceSignal,
    config: &ClosedLoopConfig,
) -> Result<SimLog> {
    config.validate()?;
    if disturbance.channels() != 6 {
        return Err(Error::InvalidInput(format!("expected 6 disturbance channels, got {}", disturbance.channels())));
    }
    let inertia = bundle.vehicle.inertia;
    let plant = Plant {
        bundle,
        reference,
        disturbance,
        gravity: InputVector::gravity(bundle.vehicle.gravity),
        j_inv: inertia.try_inverse().ok_or(Error::NotPositiveDefinite("inertia"))?,
        track_ode: config.track_zeta_ode,
    };
    let p_zeta = Matrix9::from_column_slice(bundle.zeta.p.as_slice());
    let p_omega = bundle.omega.as_ref().map(|o| Matrix3::from_column_slice(o.p.as_slice()));

    let r0 = reference.sample(0.0)?;
    let eta0 = exp_group(&AlgebraVector(config.initial_offset));
    let x0 = r0.state.compose(&eta0.inverse());
    let u0 = dynamic_inversion_zeta(&AlgebraVector(config.initial_offset), &bundle.k_zeta)?;
    let w0 = r0.input.rate() + Vector3::new(u0[1], u0[2], u0[3]);
    let mut state = State { x: x0.to_matrix(), w: w0, z: config.initial_offset };

    let mut log = SimLog::default();
    let n = config.steps();
    let dt = config.dt;
    let record = |log: &mut SimLog, k: usize, t: f64, s: &State, sig: &Signals| {
        let vz = sig.zeta.dot(&(p_zeta * sig.zeta));
        let vw = p_omega.map_or(0.0, |p| sig.e.dot(&(p * sig.e)));
        let sm = &mut log.summary;
        if vz > sm.max_lyap_zeta {
            sm.max_lyap_zeta = vz;
            sm.time_of_max_zeta = t;
        }
        sm.max_lyap_omega = sm.max_lyap_omega.max(vw);
        if sm.first_violation.is_none() && (vz > 1.0 + LEVEL_TOL || vw > 1.0 + LEVEL_TOL) {
            sm.first_violation = Some(t);
        }
        sm.max_abs_zeta = sm.max_abs_zeta.sup(&sig.zeta.abs());
        sm.max_abs_omega_err = sm.max_abs_omega_err.sup(&sig.e.abs());
        if plant.track_ode {
            let gap = (sig.zeta - s.z).amax();
            sm.max_ode_mismatch = Some(sm.max_ode_mismatch.unwrap_or(0.0).max(gap));
        }
        if k.is_multiple_of(config.log_every) || k == n {
            log.t.push(t);
            log.vehicle.push(GroupState::from_parts_unchecked(
                s.x.fixed_view::<3, 3>(0, 0).into_owned(),
                s.x.fixed_view::<3, 1>(0, 3).into_owned(),
                s.x.fixed_view::<3, 1>(0, 4).into_owned(),
            ));
            log.reference.push(sig.reference);
            log.zeta.push(sig.zeta);
            if plant.track_ode {
                log.zeta_ode.push(s.z);
            }
            log.omega_err.push(sig.e);
            log.u.push(sig.u);
            log.moment.push(sig.moment);
            log.disturbance.push(sig.d);
            log.lyap_zeta.push(vz);
            log.lyap_omega.push(vw);
        }
    };

    for k in 0..=n {
        let t = k as f64 * dt;
        let (k1, sig) = match plant.eval(t, &state) {
            Ok(v) => v,
            Err(e) => {
                log.aborted = Some(format!("t = {t}: {e}"));
                break;
            }
        };
        record(&mut log, k, t, &state, &sig);
        if k == n {
            break;
        }
        let step = (|| -> Result<State> {
            let h = dt / 2.0;
            let (k2, _) = plant.eval(t + h, &state.plus(&k1, h))?;
            let (k3, _) = plant.eval(t + h, &state.plus(&k2, h))?;
            let (k4, _) = plant.eval(t + dt, &state.plus(&k3, dt))?;
            let mut next = state.plus(&k1, dt / 6.0).plus(&k2, dt / 3.0).plus(&k3, dt / 3.0).plus(&k4, dt / 6.0);
            next.x = project_to_group(&next.x)?.to_matrix();
            Ok(next)
        })();
        match step {
            Ok(s) => state = s,
            Err(e) => {
                log.aborted = Some(format!("t = {t}: {e}"));
                break;
            }
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::disturbance::{DisturbanceKind, DisturbanceSpec};
    use crate::synthesis::cascade::{certify_cascade, CascadeOptions, DisturbanceBounds, LqrWeights};
    use crate::synthesis::control::VehicleParams;
    use crate::trajectory::{ConstantTwist, Envelope};

    fn setup(da: f64, dw: f64) -> (CertBundle, ConstantTwist) {
        let env = Envelope {
            accel: Vector3::new(7.5, 7.5, 0.0),
            rate: Vector3::new(5.0, 5.0, 1.0),
            rate_dot: Vector3::zeros(),
        };
        let vehicle = VehicleParams::default();
        let opts = CascadeOptions { surface_samples: 200, group_samples: 50, ..Default::default() };
        let b = certify_cascade(&vehicle, &env, &DisturbanceBounds::uniform(da, dw), &LqrWeights::default(), &opts).unwrap();
        let r = ConstantTwist {
            start: GroupState::identity(),
            input: InputVector::new(env.accel, env.rate),
            gravity: vehicle.gravity,
        };
        (b, r)
    }

    #[test]
    fn equilibrium_stays_at_zero() {
        let (b, r) = setup(0.1, 0.1);
        let cfg = ClosedLoopConfig { duration: 2.0, ..Default::default() };
        let log = run_closed_loop(&b, &r, &DisturbanceSignal::silent(6), &cfg).unwrap();
        assert!(log.aborted.is_none());
        assert_eq!(log.t.len(), 2001);
        assert!(log.summary.max_abs_zeta.amax() <= 1e-9, "{}", log.summary.max_abs_zeta.amax());
        assert!(log.summary.max_abs_omega_err.amax() <= 1e-9);
    }

    #[test]
    fn initial_error_decays() {
        let (b, r) = setup(0.1, 0.1);
        let mut z0 = Vector9::zeros();
        z0[0] = 0.05;
        z0[4] = -0.03;
        z0[8] = 0.02;
        let cfg = ClosedLoopConfig { duration: 20.0, initial_offset: z0, log_every: 10, ..Default::default() };
        let log = run_closed_loop(&b, &r, &DisturbanceSignal::silent(6), &cfg).unwrap();
        assert!(log.aborted.is_none());
        let v0 = log.lyap_zeta[0];
        assert!(*log.lyap_zeta.last().unwrap() < 1e-3 * v0);
        // After the transient the level decreases monotonically.
        let tail = &log.lyap_zeta[log.lyap_zeta.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    }

    #[test]
    fn logged_error_matches_algebra_ode() {
        let (b, r) = setup(1.0, 0.1);
        let dist = DisturbanceSpec {
            kind: DisturbanceKind::Sinusoid,
            bounds: vec![1.0, 1.0, 1.0, 0.1, 0.1, 0.1],
            freq_range: (0.1, 10.0),
            seed: 5,
        }
        .realize()
        .unwrap();
        let cfg = ClosedLoopConfig { duration: 5.0, track_zeta_ode: true, log_every: 100, ..Default::default() };
        let log = run_closed_loop(&b, &r, &dist, &cfg).unwrap();
        assert!(log.aborted.is_none());
        assert!(log.summary.max_ode_mismatch.unwrap() <= 1e-6, "{:?}", log.summary.max_ode_mismatch);
        assert!(log.summary.max_abs_zeta.amax() > 1e-3);
    }

    #[test]
    fn rate_loop_error_matches_linear_dynamics() {
        // With ω_b(0) = ω_c(0), e obeys ė = K_ω e + d_α exactly.
        let (b, r) = setup(0.1, 0.1);
        let dist = DisturbanceSpec {
            kind: DisturbanceKind::Sinusoid,
            bounds: vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
            freq_range: (0.1, 10.0),
            seed: 8,
        }
        .realize()
        .unwrap();
        let cfg = ClosedLoopConfig { duration: 3.0, ..Default::default() };
        let log = run_closed_loop(&b, &r, &dist, &cfg).unwrap();
        let mut e = Vector3::zeros();
        let dt = cfg.dt;
        let f = |t: f64, e: &Vector3<f64>| {
            let d = dist.eval(t);
            b.k_omega * e + Vector3::new(d[3], d[4], d[5])
        };
        let mut worst: f64 = 0.0;
        for (k, logged) in log.omega_err.iter().enumerate() {
            worst = worst.max((logged - e).amax());
            let t = k as f64 * dt;
            let k1 = f(t, &e);
            let k2 = f(t + dt / 2.0, &(e + k1 * (dt / 2.0)));
            let k3 = f(t + dt / 2.0, &(e + k2 * (dt / 2.0)));
            let k4 = f(t + dt, &(e + k3 * dt));
            e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        assert!(worst <= 1e-7, "worst {worst:e}");
    }

    #[test]
    fn same_inputs_same_log() {
        let (b, r) = setup(0.1, 0.1);
        let dist = DisturbanceSpec {
            kind: DisturbanceKind::Square,
            bounds: vec![0.1; 6],
            freq_range: (0.1, 10.0),
            seed: 2,
        }
        .realize()
        .unwrap();
        let cfg = ClosedLoopConfig { duration: 1.0, ..Default::default() };
        let a = run_closed_loop(&b, &r, &dist, &cfg).unwrap();
        let c = run_closed_loop(&b, &r, &dist, &cfg).unwrap();
        assert_eq!(a, c);
    }
}
