//! Independent closed-loop runs under random bounded disturbances, merged
//! in run order.

use nalgebra::{Vector3, Vector6};
use crate::se23::Vector9;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::plain_vector;
use crate::sim::closed_loop::{run_closed_loop, ClosedLoopConfig, SimLog};
use crate::sim::disturbance::{draw_tones, DisturbanceFamily, DisturbanceKind, DisturbanceSignal};
use crate::synthesis::cascade::CertBundle;
use crate::trajectory::Reference;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub runs: usize,
    pub seed: u64,
    pub family: DisturbanceFamily,
    /// Hz.
    pub freq_range: (f64, f64),
    /// Keep full logs of the first this many runs.
    pub keep_logs: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            runs: 100,
            seed: 0,
            family: DisturbanceFamily::Mixed,
            freq_range: (0.1, 10.0),
            keep_logs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub index: usize,
    pub kind: DisturbanceKind,
    pub max_lyap_zeta: f64,
    pub max_lyap_omega: f64,
    pub first_violation: Option<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_zeta: Vector9<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_omega_err: Vector3<f64>,
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: Vec<RunReport>,
    /// Runs that left the certified set or aborted.
    pub violations: usize,
    pub max_lyap_zeta: f64,
    pub max_lyap_omega: f64,
    #[serde(with = "plain_vector")]
    pub max_abs_zeta: Vector9<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_omega_err: Vector3<f64>,
}

pub(crate) fn pick_kind<R: Rng>(family: DisturbanceFamily, rng: &mut R) -> DisturbanceKind {
    match family {
        DisturbanceFamily::Sinusoid => DisturbanceKind::Sinusoid,
        DisturbanceFamily::Square => DisturbanceKind::Square,
        DisturbanceFamily::Mixed => {
            if rng.random_bool(0.5) {
                DisturbanceKind::Square
            } else {
                DisturbanceKind::Sinusoid
            }
        }
    }
}

/// Disturbance of run `index`: ChaCha8 seeded with `seed` on stream `index`.
pub fn run_disturbance(bundle: &CertBundle, cfg: &MonteCarloConfig, index: usize) -> DisturbanceSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let kind = pick_kind(cfg.family, &mut rng);
    let b = Vector6::new(
        bundle.bounds.accel.x,
        bundle.bounds.accel.y,
        bundle.bounds.accel.z,
        bundle.bounds.alpha.x,
        bundle.bounds.alpha.y,
        bundle.bounds.alpha.z,
    );
    DisturbanceSignal { kind, tones: draw_tones(&mut rng, b.as_slice(), cfg.freq_range) }
}

/// Runs the campaign in parallel; the report is ordered by run index and
/// identical for identical inputs.
pub fn monte_carlo(
    bundle: &CertBundle,
    reference: &dyn Reference,
    cfg: &MonteCarloConfig,
    loop_cfg: &ClosedLoopConfig,
) -> Result<(MonteCarloReport, Vec<SimLog>)> {
    if cfg.runs == 0 {
        return Err(Error::InvalidInput("at least one Monte-Carlo run is required".into()));
    }
    let results: Vec<(RunReport, Option<SimLog>)> = (0..cfg.runs)
        .into_par_iter()
        .map(|index| {
            let dist = run_disturbance(bundle, cfg, index);
            let log = run_closed_loop(bundle, reference, &dist, loop_cfg)?;
            let s = &log.summary;
            let report = RunReport {
                index,
                kind: dist.kind,
                max_lyap_zeta: s.max_lyap_zeta,
                max_lyap_omega: s.max_lyap_omega,
                first_violation: s.first_violation,
                max_abs_zeta: s.max_abs_zeta,
                max_abs_omega_err: s.max_abs_omega_err,
                aborted: log.aborted.clone(),
            };
            Ok((report, (index < cfg.keep_logs).then_some(log)))
        })
        .collect::<Result<_>>()?;

    let mut logs = Vec::new();
    let mut runs = Vec::with_capacity(results.len());
    for (r, l) in results {
        runs.push(r);
        logs.extend(l);
    }
    let violations = runs.iter().filter(|r| r.first_violation.is_some() || r.aborted.is_some()).count();
    let report = MonteCarloReport {
        violations,
        max_lyap_zeta: runs.iter().map(|r| r.max_lyap_zeta).fold(0.0, f64::max),
        max_lyap_omega: runs.iter().map(|r| r.max_lyap_omega).fold(0.0, f64::max),
        max_abs_zeta: runs.iter().fold(Vector9::zeros(), |m, r| m.sup(&r.max_abs_zeta)),
        max_abs_omega_err: runs.iter().fold(Vector3::zeros(), |m, r| m.sup(&r.max_abs_omega_err)),
        runs,
    };
    Ok((report, logs))
}
