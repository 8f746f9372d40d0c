use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::sim::closed_loop::LEVEL_TOL;
use crate::synthesis::ellipsoid::Ellipsoid;

/// Level-set statistics of a series against `{x : xᵀ P x ≤ 1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub max_level: f64,
    pub time_of_max: f64,
    /// First time the level exceeds `1 + 1e-6`.
    pub first_violation: Option<f64>,
    pub violations: usize,
    /// `1 − max level`.
    pub min_margin: f64,
    /// Mean of `1 − level`.
    pub mean_margin: f64,
}

impl ContainmentReport {
    pub fn contained(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Evaluates `xᵀ P x` along a logged series.
pub fn verify_containment<'a, I>(t: &[f64], series: I, e: &Ellipsoid<f64>) -> ContainmentReport
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut r = ContainmentReport::default();
    let mut sum = 0.0;
    for (k, x) in series.into_iter().enumerate() {
        let v = e.value(&DVector::from_column_slice(x));
        let time = t.get(k).copied().unwrap_or(f64::NAN);
        if k == 0 || v > r.max_level {
            r.max_level = v;
            r.time_of_max = time;
        }
        if v > 1.0 + LEVEL_TOL {
            r.violations += 1;
            r.first_violation.get_or_insert(time);
        }
        sum += 1.0 - v;
        r.samples += 1;
    }
    r.min_margin = 1.0 - r.max_level;
    r.mean_margin = if r.samples > 0 { sum / r.samples as f64 } else { 0.0 };
    r
}
