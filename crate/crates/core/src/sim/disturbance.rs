//! Bounded random disturbance signals.
//!
//! Every channel carries one tone with amplitude drawn from `(0, bound]`,
//! frequency log-uniform over the configured band and uniform phase. Square
//! waves use the sign of the same sinusoid, so `|d_i(t)| ≤ bound_i` holds
//! exactly in both cases. Draws come from ChaCha8 seeded with a `u64`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    Sinusoid,
    Square,
}

/// Waveforms a Monte-Carlo campaign draws from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceFamily {
    Sinusoid,
    Square,
    /// Each run picks sinusoid or square with equal probability.
    #[default]
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    pub kind: DisturbanceKind,
    /// Per-channel amplitude bound.
    pub bounds: Vec<f64>,
    /// Frequency band in Hz.
    pub freq_range: (f64, f64),
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    pub phase: f64,
}

impl Tone {
    pub fn eval(&self, kind: DisturbanceKind, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let s = (std::f64::consts::TAU * self.frequency * t + self.phase).sin();
        match kind {
            DisturbanceKind::Sinusoid => self.amplitude * s,
            DisturbanceKind::Square => self.amplitude * s.signum(),
        }
    }
}

/// A realized disturbance: one tone per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSignal {
    pub kind: DisturbanceKind,
    pub tones: Vec<Tone>,
}

impl DisturbanceSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.freq_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("frequency band ({lo}, {hi}) must satisfy 0 < lo <= hi")));
        }
        if self.bounds.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidInput("disturbance bounds must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn realize(&self) -> Result<DisturbanceSignal> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(DisturbanceSignal { kind: self.kind, tones: draw_tones(&mut rng, &self.bounds, self.freq_range) })
    }
}

/// Draws one tone per bound; a zero bound gives a silent channel.
pub fn draw_tones<R: Rng>(rng: &mut R, bounds: &[f64], (lo, hi): (f64, f64)) -> Vec<Tone> {
    bounds
        .iter()
        .map(|&b| {
            let amplitude = b * (1.0 - rng.random::<f64>());
            let frequency = (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp();
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            Tone { amplitude, frequency, phase }
        })
        .collect()
}

impl DisturbanceSignal {
    /// A signal that is identically zero on `channels` channels.
    pub fn silent(channels: usize) -> Self {
        Self {
            kind: DisturbanceKind::Sinusoid,
            tones: vec![Tone { amplitude: 0.0, frequency: 1.0, phase: 0.0 }; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.tones.len()
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for (o, tone) in out.iter_mut().zip(&self.tones) {
            *o = tone.eval(self.kind, t);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.tones.len()];
        self.eval_into(t, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: DisturbanceKind, seed: u64) -> DisturbanceSpec {
        DisturbanceSpec { kind, bounds: vec![0.1, 1.0, 0.0, 2.5], freq_range: (0.1, 10.0), seed }
    }

    #[test]
    fn signals_respect_bounds() {
        for kind in [DisturbanceKind::Sinusoid, DisturbanceKind::Square] {
            for seed in 0..20 {
                let s = spec(kind, seed);
                let sig = s.realize().unwrap();
                for tone in &sig.tones {
                    assert!((0.1..=10.0).contains(&tone.frequency));
                }
                for i in 0..2000 {
                    let v = sig.eval(i as f64 * 0.005);
                    for (x, b) in v.iter().zip(&s.bounds) {
                        assert!(x.abs() <= *b);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_bound_is_silent_and_square_is_two_level() {
        let sig = spec(DisturbanceKind::Square, 3).realize().unwrap();
        let a = sig.tones[1].amplitude;
        assert!(a > 0.0);
        for i in 0..500 {
            let v = sig.eval(i as f64 * 0.013);
            assert_eq!(v[2], 0.0);
            assert_eq!(v[1].abs(), a);
        }
    }

    #[test]
    fn same_seed_same_signal() {
        let a = spec(DisturbanceKind::Sinusoid, 9).realize().unwrap();
        let b = spec(DisturbanceKind::Sinusoid, 9).realize().unwrap();
        let c = spec(DisturbanceKind::Sinusoid, 10).realize().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bad_band_is_rejected() {
        let mut s = spec(DisturbanceKind::Sinusoid, 0);
        s.freq_range = (0.0, 1.0);
        assert!(s.realize().is_err());
    }
}
