use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::plain_vector;
use crate::trajectory::reference::Reference;

const SAMPLE_RATE: f64 = 1000.0;
const MARGIN: f64 = 1.05;

/// Per-axis magnitudes of the reference input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    /// Body-frame specific force, m/s².
    #[serde(with = "plain_vector")]
    pub accel: Vector3<f64>,
    /// Body rate, rad/s.
    #[serde(with = "plain_vector")]
    pub rate: Vector3<f64>,
    /// Body angular acceleration, rad/s².
    #[serde(with = "plain_vector", default = "Vector3::zeros")]
    pub rate_dot: Vector3<f64>,
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        let all = self.accel.iter().chain(self.rate.iter()).chain(self.rate_dot.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("envelope entries must be finite".into()));
        }
        Ok(())
    }

    /// Per-axis maximum of two envelopes.
    pub fn sup(&self, other: &Envelope) -> Envelope {
        Envelope {
            accel: self.accel.sup(&other.accel),
            rate: self.rate.sup(&other.rate),
            rate_dot: self.rate_dot.sup(&other.rate_dot),
        }
    }
}

/// Per-axis maxima of `|ā|`, `|ω̄|` and `|ω̄̇|` sampled at 1 kHz over
/// `[t0, t1]`, inflated by 5%.
pub fn reference_envelope(reference: &dyn Reference, t0: f64, t1: f64) -> Result<Envelope> {
    if !(t1 >= t0) {
        return Err(Error::InvalidInput(format!("envelope interval [{t0}, {t1}] is empty")));
    }
    let n = ((t1 - t0) * SAMPLE_RATE).ceil() as usize;
    let mut env = Envelope {
        accel: Vector3::zeros(),
        rate: Vector3::zeros(),
        rate_dot: Vector3::zeros(),
    };
    for i in 0..=n {
        let t = (t0 + i as f64 / SAMPLE_RATE).min(t1);
        let s = reference.sample(t)?;
        env.accel = env.accel.sup(&s.input.accel().abs());
        env.rate = env.rate.sup(&s.input.rate().abs());
        env.rate_dot = env.rate_dot.sup(&s.rate_dot.abs());
    }
    env.accel *= MARGIN;
    env.rate *= MARGIN;
    env.rate_dot *= MARGIN;
    Ok(env)
}
