//! Pushes an algebra-space ellipsoid through the exponential map to obtain
//! position, velocity and attitude error sets on the group.

use nalgebra::{DMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::plain_vector;
use crate::se23::{exp_group, AlgebraVector, GroupState, Vector9, CHART_MARGIN};
use crate::synthesis::ellipsoid::Ellipsoid;

const SAMPLE_SEED: u64 = 0x5e23;

/// Points on the surface of `{x : xᵀ Q⁻¹ x ≤ 1}` (scaled by each shell radius).
///
/// Includes the extreme point of every coordinate and every principal axis,
/// both signs, followed by `n` pseudo-random directions.
pub fn surface_points(q: &DMatrix<f64>, n: usize, shells: &[f64]) -> Result<Vec<nalgebra::DVector<f64>>> {
    let dim = q.nrows();
    let chol = q.clone().cholesky().ok_or(Error::NotPositiveDefinite("ellipsoid shape"))?;
    let l = chol.l();
    let mut base = Vec::with_capacity(n + 4 * dim);
    for i in 0..dim {
        let col = q.column(i) / q[(i, i)].sqrt();
        base.push(col.clone_owned());
        base.push(-col);
    }
    let eig = q.clone().symmetric_eigen();
    for i in 0..dim {
        let axis = eig.eigenvectors.column(i) * eig.eigenvalues[i].max(0.0).sqrt();
        base.push(axis.clone_owned());
        base.push(-axis);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for _ in 0..n {
        let y = nalgebra::DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let norm: f64 = y.norm();
        if norm > 0.0 {
            base.push(&l * (y / norm));
        }
    }
    let mut out = Vec::with_capacity(base.len() * shells.len());
    for &s in shells {
        out.extend(base.iter().map(|x| x * s));
    }
    Ok(out)
}

/// Worst-case group errors over a mapped set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSetSummary {
    pub max_position_error: f64,
    pub max_velocity_error: f64,
    pub max_attitude_angle: f64,
    #[serde(with = "plain_vector")]
    pub max_abs_position: Vector3<f64>,
    #[serde(with = "plain_vector")]
    pub max_abs_velocity: Vector3<f64>,
}

/// Samples of the algebra set and their images on the group.
#[derive(Clone, Debug)]
pub struct GroupSet {
    pub algebra: Vec<Vector9<f64>>,
    pub group: Vec<GroupState<f64>>,
    pub summary: GroupSetSummary,
}

/// Maps `n` surface samples (plus interior shells) of a 9-dimensional
/// ellipsoid through `exp`.
pub fn ellipsoid_to_group(e: &Ellipsoid<f64>, n: usize) -> Result<GroupSet> {
    if e.dim() != 9 {
        return Err(Error::InvalidInput(format!("expected a 9-dimensional ellipsoid, got {}", e.dim())));
    }
    let radius = e.block_radius(6, 3)?;
    if radius >= std::f64::consts::PI - CHART_MARGIN {
        return Err(Error::OutsideChart { angle: radius });
    }
    let q = e.shape()?;
    let points = surface_points(&q, n, &[0.5, 1.0])?;
    let mut summary = GroupSetSummary::default();
    let mut algebra = Vec::with_capacity(points.len());
    let mut group = Vec::with_capacity(points.len());
    for x in points {
        let z = Vector9::from_column_slice(x.as_slice());
        let g = exp_group(&AlgebraVector(z));
        let s = &mut summary;
        s.max_position_error = s.max_position_error.max(g.position().norm());
        s.max_velocity_error = s.max_velocity_error.max(g.velocity().norm());
        s.max_attitude_angle = s.max_attitude_angle.max(AlgebraVector(z).rot().norm());
        s.max_abs_position = s.max_abs_position.sup(&g.position().abs());
        s.max_abs_velocity = s.max_abs_velocity.sup(&g.velocity().abs());
        algebra.push(z);
        group.push(g);
    }
    Ok(GroupSet { algebra, group, summary })
}
