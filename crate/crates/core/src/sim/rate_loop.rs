//! Stand-alone angular-velocity tracking loop against a reference attitude
//! spinning at a constant body rate.
//!
//! The error is `e = ω̄ − R_rb ω_b` with `R_rb = R̄ᵀ R_b`; the commanded
//! angular acceleration is `R_br (ω̄̇ − K_ω e)` realized through the Euler
//! moment, and the disturbance enters as `ω̇_b = ω̇_cmd − R_br d_α`, which
//! gives `ė = −ω̄ × e + K_ω e + d_α`.

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::omega_error;
use crate::error::{Error, Result};
use crate::record::{plain_vector, row_major};
use crate::sim::disturbance::{draw_tones, DisturbanceFamily, DisturbanceKind, DisturbanceSignal};
use crate::sim::integrate::omega_rhs;
use crate::sim::monte_carlo::pick_kind;
use crate::so3::{exp_so3, skew};
use crate::synthesis::control::{angular_rate_command, moment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateLoopConfig {
    #[serde(with = "plain_vector")]
    pub rate: Vector3<f64>,
    #[serde(with = "row_major")]
    pub inertia: Matrix3<f64>,
    pub dt: f64,
    pub duration: f64,
}

/// Rate error history of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateLog {
    pub t: Vec<f64>,
    pub err: Vec<Vector3<f64>>,
}

impl RateLog {
    pub fn max_abs(&self) -> Vector3<f64> {
        self.err.iter().fold(Vector3::zeros(), |m, e| m.sup(&e.abs()))
    }
}

fn orthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Simulates one run with a three-channel angular-acceleration disturbance.
pub fn simulate_rate_loop(cfg: &RateLoopConfig, k_omega: &Matrix3<f64>, disturbance: &DisturbanceSignal) -> Result<RateLog> {
    if disturbance.channels() != 3 {
        return Err(Error::InvalidInput("rate loop needs three disturbance channels".into()));
    }
    let j = cfg.inertia;
    let j_inv = j.try_inverse().ok_or(Error::NotPositiveDefinite("inertia"))?;
    let w_ref = cfg.rate;
    let ref_att = |t: f64| exp_so3(&(w_ref * t));

    // State: attitude and body rate.
    let field = |t: f64, r: &Matrix3<f64>, w: &Vector3<f64>| -> (Matrix3<f64>, Vector3<f64>) {
        let r_rb = ref_att(t).transpose() * r;
        let e = omega_error(&w_ref, &r_rb, w);
        let r_br = r_rb.transpose();
        let cmd = angular_rate_command(&Vector3::zeros(), &e, &r_br, k_omega);
        let m = moment(&j, &cmd, w);
        let d = disturbance.eval(t);
        let w_dot = omega_rhs(w, &m, &j, &j_inv) - r_br * Vector3::new(d[0], d[1], d[2]);
        (r * skew(w), w_dot)
    };

    let mut r = Matrix3::identity();
    let mut w = w_ref;
    let n = (cfg.duration / cfg.dt).round() as usize;
    let dt = cfg.dt;
    let mut log = RateLog::default();
    for k in 0..=n {
        let t = k as f64 * dt;
        log.t.push(t);
        log.err.push(omega_error(&w_ref, &(ref_att(t).transpose() * r), &w));
        if k == n {
            break;
        }
        let h = dt / 2.0;
        let (a1, b1) = field(t, &r, &w);
        let (a2, b2) = field(t + h, &(r + a1 * h), &(w + b1 * h));
        let (a3, b3) = field(t + h, &(r + a2 * h), &(w + b2 * h));
        let (a4, b4) = field(t + dt, &(r + a3 * dt), &(w + b3 * dt));
        r = orthonormalize(&(r + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0)));
        w += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (dt / 6.0);
    }
    Ok(log)
}

/// Runs `runs` independent disturbance realizations; run `i` draws from the
/// ChaCha8 stream `i` of `seed`.
pub fn rate_loop_monte_carlo(
    cfg: &RateLoopConfig,
    k_omega: &Matrix3<f64>,
    bound: &Vector3<f64>,
    family: DisturbanceFamily,
    freq_range: (f64, f64),
    runs: usize,
    seed: u64,
) -> Result<Vec<RateLog>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let kind: DisturbanceKind = pick_kind(family, &mut rng);
            let tones = draw_tones(&mut rng, bound.as_slice(), freq_range);
            simulate_rate_loop(cfg, k_omega, &DisturbanceSignal { kind, tones })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::omega_error_rhs;

    fn cfg() -> RateLoopConfig {
        RateLoopConfig {
            rate: Vector3::new(5.0, 5.0, 1.0),
            inertia: Matrix3::from_diagonal(&Vector3::new(0.0820, 0.0845, 0.1377)),
            dt: 1e-3,
            duration: 2.0,
        }
    }

    #[test]
    fn no_disturbance_no_error() {
        let log = simulate_rate_loop(&cfg(), &(-Matrix3::identity()), &DisturbanceSignal::silent(3)).unwrap();
        assert!(log.max_abs().amax() < 1e-9);
    }

    #[test]
    fn error_follows_linear_error_dynamics() {
        let k = Matrix3::from_diagonal(&Vector3::new(-1.0, -2.0, -1.5));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sig = DisturbanceSignal { kind: DisturbanceKind::Sinusoid, tones: draw_tones(&mut rng, &[0.1, 0.1, 0.1], (0.1, 10.0)) };
        let c = cfg();
        let log = simulate_rate_loop(&c, &k, &sig).unwrap();
        let mut e = Vector3::zeros();
        let f = |t: f64, e: &Vector3<f64>| {
            let d = sig.eval(t);
            omega_error_rhs(e, &c.rate, &k, &Vector3::new(d[0], d[1], d[2]))
        };
        let dt = c.dt;
        let mut worst: f64 = 0.0;
        for (i, logged) in log.err.iter().enumerate() {
            worst = worst.max((logged - e).amax());
            let t = i as f64 * dt;
            let k1 = f(t, &e);
            let k2 = f(t + dt / 2.0, &(e + k1 * (dt / 2.0)));
            let k3 = f(t + dt / 2.0, &(e + k2 * (dt / 2.0)));
            let k4 = f(t + dt, &(e + k3 * dt));
            e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        assert!(worst < 1e-8, "worst {worst:e}");
    }
}
