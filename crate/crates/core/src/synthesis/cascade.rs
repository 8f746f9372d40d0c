//! Cascade certification: the rate-error set first, then the algebra-error
//! set driven by the rate-error bound, with a fixed-point refinement over the
//! nonlinear input distortion.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::{omega_error_matrix, zeta_system, Matrix4x9};
use crate::error::{Error, Result};
use crate::record::{dyn_vector, plain_vector, row_major};
use crate::se23::{u_zeta, AlgebraVector, InputVector, Matrix9, Vector9, CHART_MARGIN};
use crate::synthesis::care::lqr_gain;
use crate::synthesis::control::{inversion_remainder, VehicleParams};
use crate::synthesis::ellipsoid::{invariant_ellipsoid, Ellipsoid, InvariantCertificate, Objective};
use crate::synthesis::mapping::{ellipsoid_to_group, surface_points, GroupSetSummary};
use crate::trajectory::Envelope;

/// Worst-case disturbance magnitudes per axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceBounds {
    /// Specific-force disturbance, m/s².
    #[serde(with = "plain_vector")]
    pub accel: Vector3<f64>,
    /// Angular-acceleration disturbance, rad/s².
    #[serde(with = "plain_vector")]
    pub alpha: Vector3<f64>,
}

impl DisturbanceBounds {
    pub fn uniform(accel: f64, alpha: f64) -> Self {
        Self {
            accel: Vector3::repeat(accel),
            alpha: Vector3::repeat(alpha),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.accel.iter().chain(self.alpha.iter()).any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidInput("disturbance bounds must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Diagonal LQR weights for both loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqrWeights {
    #[serde(with = "plain_vector")]
    pub q_omega: Vector3<f64>,
    #[serde(with = "plain_vector")]
    pub r_omega: Vector3<f64>,
    #[serde(with = "plain_vector")]
    pub q_zeta: Vector9<f64>,
    #[serde(with = "plain_vector")]
    pub r_zeta: nalgebra::Vector4<f64>,
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q_omega: Vector3::repeat(1.0),
            r_omega: Vector3::repeat(1.0),
            q_zeta: Vector9::repeat(1.0),
            r_zeta: nalgebra::Vector4::repeat(1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeOptions {
    pub objective: Objective,
    /// Bound the state-dependent input distortion and the inversion remainder
    /// over the set and iterate to a fixed point. When off, the certificate
    /// treats the distortion as cancelled and only reports its size.
    pub refine: bool,
    pub max_iterations: usize,
    /// Random surface directions used when bounding the distortion.
    pub surface_samples: usize,
    /// Largest tolerated relative growth of the bounds.
    pub max_inflation: f64,
    /// Samples for the mapped group set.
    pub group_samples: usize,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            objective: Objective::Trace,
            refine: false,
            max_iterations: 5,
            surface_samples: 4000,
            max_inflation: 0.5,
            group_samples: 2000,
        }
    }
}

/// Serialized form of an [`InvariantCertificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    #[serde(with = "row_major")]
    pub p: DMatrix<f64>,
    pub alpha: f64,
    #[serde(with = "row_major")]
    pub a_cl: DMatrix<f64>,
    #[serde(with = "row_major")]
    pub b: DMatrix<f64>,
    #[serde(with = "dyn_vector")]
    pub bounds: DVector<f64>,
    #[serde(with = "dyn_vector")]
    pub weights: DVector<f64>,
}

impl From<&InvariantCertificate<f64>> for CertificateRecord {
    fn from(c: &InvariantCertificate<f64>) -> Self {
        Self {
            p: c.ellipsoid.p.clone(),
            alpha: c.ellipsoid.alpha,
            a_cl: c.a_cl.clone(),
            b: c.b.clone(),
            bounds: c.bounds.clone(),
            weights: c.weights.clone(),
        }
    }
}

impl CertificateRecord {
    pub fn certificate(&self) -> InvariantCertificate<f64> {
        InvariantCertificate {
            ellipsoid: Ellipsoid { p: self.p.clone(), alpha: self.alpha },
            a_cl: self.a_cl.clone(),
            b: self.b.clone(),
            bounds: self.bounds.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn ellipsoid(&self) -> Ellipsoid<f64> {
        Ellipsoid { p: self.p.clone(), alpha: self.alpha }
    }
}

/// Outcome of the distortion analysis over the certified set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    /// Fixed-point iterations performed (zero when refinement is off).
    pub iterations: usize,
    /// `max(b − b_nominal) / max(b_nominal)`, where `b` bounds the input
    /// distortion and inversion remainder over the returned set.
    pub inflation: f64,
    /// The returned certificate accounts for the distortion and remainder.
    pub covers_distortion: bool,
}

/// Everything a simulation or verification run needs from certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertBundle {
    pub vehicle: VehicleParams,
    pub envelope: Envelope,
    pub bounds: DisturbanceBounds,
    pub weights: LqrWeights,
    /// Hurwitz rate gain `K_ω`; the commanded angular acceleration is `ω̄̇ − K_ω e`.
    #[serde(with = "row_major")]
    pub k_omega: Matrix3<f64>,
    /// Absent when the angular-acceleration disturbance is zero.
    pub omega: Option<CertificateRecord>,
    /// Per-axis rate-error bounds, rad/s.
    #[serde(with = "plain_vector")]
    pub omega_bound: Vector3<f64>,
    /// Euclidean radius of the rate-error set, rad/s.
    pub omega_radius: f64,
    /// The rate certificate also holds for the body-frame loop `ė = K_ω e − d`.
    pub omega_frame_free: bool,
    /// `K_ζ` with the closed loop `A + B_u K_ζ`.
    #[serde(with = "row_major")]
    pub k_zeta: Matrix4x9<f64>,
    pub zeta: CertificateRecord,
    /// Per-row disturbance bounds of the algebra system before refinement.
    #[serde(with = "plain_vector")]
    pub zeta_nominal_bounds: Vector9<f64>,
    /// Per-row bounds the certificate was computed with.
    #[serde(with = "plain_vector")]
    pub zeta_bounds: Vector9<f64>,
    pub refinement: Refinement,
    pub group: GroupSetSummary,
}

impl CertBundle {
    pub fn zeta_ellipsoid(&self) -> Ellipsoid<f64> {
        self.zeta.ellipsoid()
    }

    pub fn omega_ellipsoid(&self) -> Option<Ellipsoid<f64>> {
        self.omega.as_ref().map(|o| o.ellipsoid())
    }

    /// Largest dissipation-matrix eigenvalue over both certificates.
    pub fn max_residual(&self) -> f64 {
        let z = self.zeta.certificate().residual();
        match &self.omega {
            Some(o) => z.max(o.certificate().residual()),
            None => z,
        }
    }

    /// Recomputes the certificate checks from the stored data.
    pub fn check(&self) -> Result<()> {
        let tol = 1e-8;
        let r = self.max_residual();
        if r > tol {
            return Err(Error::Infeasible(format!("stored certificate residual {r:e} exceeds {tol:e}")));
        }
        let sys = zeta_system(&self.reference_input());
        let acl = sys.closed_loop(&self.k_zeta);
        if (DMatrix::from_column_slice(9, 9, acl.as_slice()) - &self.zeta.a_cl).amax() > 1e-12 {
            return Err(Error::Infeasible("stored algebra closed loop does not match the gains".into()));
        }
        Ok(())
    }

    /// The constant reference input the algebra certificate was computed for.
    pub fn reference_input(&self) -> InputVector<f64> {
        InputVector::new(self.envelope.accel, self.envelope.rate)
    }
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

fn to_dmatrix<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

/// Per-row supremum over the sampled set surface of
/// `Σ_j |(U_ζ B_d)_ij| d_j + |r_i(ζ)|`.
fn distortion_bounds(q: &DMatrix<f64>, k: &Matrix4x9<f64>, d: &Vector6<f64>, samples: usize) -> Result<Vector9<f64>> {
    let mut sup = Vector9::zeros();
    for x in surface_points(q, samples, &[1.0])? {
        let z = AlgebraVector(Vector9::from_column_slice(x.as_slice()));
        let u = u_zeta(&z)?;
        let ubd = u.fixed_columns::<6>(3).abs() * d;
        let rem = inversion_remainder(&z, k)?.abs();
        sup = sup.sup(&(ubd + rem));
    }
    Ok(sup)
}

/// Runs the full cascade for a reference envelope and disturbance bounds.
pub fn certify_cascade(
    vehicle: &VehicleParams,
    envelope: &Envelope,
    bounds: &DisturbanceBounds,
    weights: &LqrWeights,
    options: &CascadeOptions,
) -> Result<CertBundle> {
    vehicle.validate()?;
    envelope.validate()?;
    bounds.validate()?;

    let (k_omega, omega, omega_bound, omega_radius, omega_frame_free) =
        rate_stage(envelope, bounds, weights, options).map_err(|e| e.in_stage("rate loop"))?;
    algebra_stage(envelope, bounds, weights, options, omega_radius)
        .map_err(|e| e.in_stage("algebra loop"))
        .map(|a| CertBundle {
            vehicle: *vehicle,
            envelope: *envelope,
            bounds: *bounds,
            weights: *weights,
            k_omega,
            omega,
            omega_bound,
            omega_radius,
            omega_frame_free,
            k_zeta: a.k_zeta,
            zeta: a.zeta,
            zeta_nominal_bounds: a.nominal,
            zeta_bounds: a.used,
            refinement: a.refinement,
            group: a.group,
        })
}

type RateStage = (Matrix3<f64>, Option<CertificateRecord>, Vector3<f64>, f64, bool);

fn rate_stage(
    envelope: &Envelope,
    bounds: &DisturbanceBounds,
    weights: &LqrWeights,
    options: &CascadeOptions,
) -> Result<RateStage> {
    let a_w = omega_error_matrix(&envelope.rate);
    let (k_lqr, _) = lqr_gain(
        &to_dmatrix(&a_w),
        &DMatrix::identity(3, 3),
        &diag(weights.q_omega.as_slice()),
        &diag(weights.r_omega.as_slice()),
    )?;
    let k_omega = -Matrix3::from_column_slice(k_lqr.as_slice());
    let (omega, omega_bound, omega_radius, omega_frame_free) = if bounds.alpha.amax() > 0.0 {
        let cert = invariant_ellipsoid(
            &to_dmatrix(&(a_w + k_omega)),
            &DMatrix::identity(3, 3),
            &DVector::from_column_slice(bounds.alpha.as_slice()),
            options.objective,
        )?;
        let e = &cert.ellipsoid;
        let axis = Vector3::from_fn(|i, _| e.axis_bound(i).unwrap_or(f64::INFINITY));
        let radius = e.block_radius(0, 3)?;
        let frame_free = cert.residual_for(&to_dmatrix(&k_omega)) <= 1e-8;
        (Some(CertificateRecord::from(&cert)), axis, radius, frame_free)
    } else {
        (None, Vector3::zeros(), 0.0, true)
    };
    Ok((k_omega, omega, omega_bound, omega_radius, omega_frame_free))
}

struct AlgebraStage {
    k_zeta: Matrix4x9<f64>,
    zeta: CertificateRecord,
    nominal: Vector9<f64>,
    used: Vector9<f64>,
    refinement: Refinement,
    group: GroupSetSummary,
}

fn algebra_stage(
    envelope: &Envelope,
    bounds: &DisturbanceBounds,
    weights: &LqrWeights,
    options: &CascadeOptions,
    omega_radius: f64,
) -> Result<AlgebraStage> {
    let sys = zeta_system(&InputVector::new(envelope.accel, envelope.rate));
    let (k_lqr, _) = lqr_gain(
        &to_dmatrix(&sys.a),
        &to_dmatrix(&sys.b_u),
        &diag(weights.q_zeta.as_slice()),
        &diag(weights.r_zeta.as_slice()),
    )?;
    let k_zeta = -Matrix4x9::from_column_slice(k_lqr.as_slice());
    let a_cl = to_dmatrix(&sys.closed_loop(&k_zeta));
    let eye9 = DMatrix::<f64>::identity(9, 9);

    // The rate error enters in the body frame, so only its norm is frame-free.
    let mut nominal = Vector9::zeros();
    nominal.fixed_rows_mut::<3>(3).copy_from(&bounds.accel);
    nominal.fixed_rows_mut::<3>(6).fill(omega_radius);
    let d6 = Vector6::from_fn(|i, _| nominal[i + 3]);

    let certify = |b: &Vector9<f64>| invariant_ellipsoid(&a_cl, &eye9, &DVector::from_column_slice(b.as_slice()), options.objective);
    let chart_check = |cert: &InvariantCertificate<f64>| -> Result<()> {
        let r = cert.ellipsoid.block_radius(6, 3)?;
        if r >= std::f64::consts::PI - CHART_MARGIN {
            return Err(Error::Infeasible(format!(
                "algebra set reaches rotation angle {r:.3} rad, outside the logarithm chart"
            )));
        }
        Ok(())
    };

    let mut used = nominal;
    let mut cert = certify(&used)?;
    chart_check(&cert)?;
    let scale = nominal.amax();
    let measure = |cert: &InvariantCertificate<f64>| -> Result<(Vector9<f64>, f64)> {
        let q = cert.ellipsoid.shape()?;
        let need = distortion_bounds(&q, &k_zeta, &d6, options.surface_samples)?.sup(&nominal);
        Ok((need, (need - nominal).amax() / scale))
    };
    let mut refinement = Refinement::default();
    if options.refine {
        let mut converged = false;
        for it in 1..=options.max_iterations.max(1) {
            refinement.iterations = it;
            let (need, inflation) = measure(&cert)?;
            refinement.inflation = inflation;
            if inflation > options.max_inflation {
                return Err(Error::Infeasible(format!(
                    "input distortion over the set grows the disturbance bound by {:.1}% (limit {:.1}%)",
                    100.0 * inflation,
                    100.0 * options.max_inflation
                )));
            }
            if need.iter().zip(used.iter()).all(|(n, u)| n <= u) {
                converged = true;
                break;
            }
            used = used.sup(&(nominal + (need - nominal) * 1.05));
            cert = certify(&used)?;
            chart_check(&cert)?;
        }
        if !converged {
            return Err(Error::Infeasible(format!(
                "distortion bounds did not reach a fixed point in {} iterations",
                options.max_iterations
            )));
        }
        refinement.covers_distortion = true;
    } else {
        refinement.inflation = measure(&cert)?.1;
    }

    let group = ellipsoid_to_group(&cert.ellipsoid, options.group_samples)?.summary;
    Ok(AlgebraStage { k_zeta, zeta: CertificateRecord::from(&cert), nominal, used, refinement, group })
}

/// `true` when `{xᵀ P_outer x ≤ 1}` contains `{xᵀ P_inner x ≤ 1}`,
/// i.e. `P_outer⁻¹ − P_inner⁻¹ ⪰ −tol`.
pub fn set_contains(outer: &Ellipsoid<f64>, inner: &Ellipsoid<f64>, tol: f64) -> Result<bool> {
    let diff = outer.shape()? - inner.shape()?;
    Ok(diff.symmetric_eigenvalues().min() >= -tol)
}

/// `A_cl` of the algebra system as a fixed-size matrix.
pub fn zeta_closed_loop(bundle: &CertBundle) -> Matrix9<f64> {
    Matrix9::from_column_slice(bundle.zeta.a_cl.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spinning_envelope() -> Envelope {
        Envelope {
            accel: Vector3::new(7.5, 7.5, 0.0),
            rate: Vector3::new(5.0, 5.0, 1.0),
            rate_dot: Vector3::zeros(),
        }
    }

    fn quick() -> CascadeOptions {
        CascadeOptions { surface_samples: 400, group_samples: 100, ..Default::default() }
    }

    #[test]
    fn rate_loop_with_unit_weights() {
        let b = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::uniform(0.1, 0.1),
            &LqrWeights::default(),
            &quick(),
        )
        .unwrap();
        assert_relative_eq!(b.k_omega, -Matrix3::identity(), epsilon = 1e-9);
        assert_relative_eq!(b.omega_radius, 0.03f64.sqrt(), epsilon = 1e-6);
        assert!(b.omega_frame_free);
        assert!(b.max_residual() <= 1e-8);
        b.check().unwrap();
    }

    #[test]
    fn zero_rate_disturbance_uses_accel_only() {
        let b = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::uniform(0.1, 0.0),
            &LqrWeights::default(),
            &quick(),
        )
        .unwrap();
        assert!(b.omega.is_none());
        assert_eq!(b.omega_bound, Vector3::zeros());
        assert_eq!(b.zeta_nominal_bounds.fixed_rows::<3>(6).amax(), 0.0);
        assert_eq!(b.zeta_nominal_bounds.fixed_rows::<3>(3), Vector3::repeat(0.1));
        assert!(b.zeta_bounds.iter().zip(b.zeta_nominal_bounds.iter()).all(|(u, n)| u >= n));
    }

    #[test]
    fn all_zero_disturbance_is_an_error() {
        let r = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::default(),
            &LqrWeights::default(),
            &quick(),
        );
        assert_eq!(r.unwrap_err().root(), &Error::ZeroDisturbance);
    }

    #[test]
    fn bundle_roundtrip_preserves_checks() {
        let b = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::uniform(0.1, 0.1),
            &LqrWeights::default(),
            &quick(),
        )
        .unwrap();
        let json = serde_json::to_string(&b).unwrap();
        let back: CertBundle = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.max_residual(), b.max_residual());
    }

    #[test]
    fn distortion_is_reported_without_refinement() {
        let b = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::uniform(0.1, 0.1),
            &LqrWeights::default(),
            &quick(),
        )
        .unwrap();
        assert_eq!(b.refinement.iterations, 0);
        assert!(!b.refinement.covers_distortion);
        assert!(b.refinement.inflation > 0.0);
        assert_eq!(b.zeta_bounds, b.zeta_nominal_bounds);
    }

    #[test]
    fn refinement_reaches_fixed_point_for_small_disturbance() {
        let opts = CascadeOptions { refine: true, ..quick() };
        let bounds = DisturbanceBounds::uniform(0.002, 0.002);
        let b = certify_cascade(&VehicleParams::default(), &spinning_envelope(), &bounds, &LqrWeights::default(), &opts).unwrap();
        assert!(b.refinement.covers_distortion);
        assert!(b.refinement.iterations >= 1);
        assert!(b.refinement.inflation <= 0.5);
        assert!(b.zeta_bounds.iter().zip(b.zeta_nominal_bounds.iter()).all(|(u, n)| u >= n));
        assert!(b.zeta_bounds.fixed_rows::<3>(0).amax() > 0.0);
        assert!(b.max_residual() <= 1e-8);

        // The returned set covers its own distortion.
        let q = b.zeta_ellipsoid().shape().unwrap();
        let d6 = Vector6::from_fn(|i, _| b.zeta_nominal_bounds[i + 3]);
        let need = distortion_bounds(&q, &b.k_zeta, &d6, 400).unwrap();
        assert!(need.iter().zip(b.zeta_bounds.iter()).all(|(n, u)| n <= u));
    }

    #[test]
    fn refinement_rejects_large_distortion() {
        let opts = CascadeOptions { refine: true, ..quick() };
        let r = certify_cascade(
            &VehicleParams::default(),
            &spinning_envelope(),
            &DisturbanceBounds::uniform(1.0, 0.1),
            &LqrWeights::default(),
            &opts,
        );
        assert!(matches!(r.as_ref().map_err(Error::root), Err(Error::Infeasible(_))));
        assert!(r.unwrap_err().to_string().starts_with("algebra loop: "));
    }

    #[test]
    fn containment_check() {
        let small = Ellipsoid { p: DMatrix::identity(2, 2) * 4.0, alpha: 1.0 };
        let big = Ellipsoid { p: DMatrix::identity(2, 2), alpha: 1.0 };
        assert!(set_contains(&big, &small, 0.0).unwrap());
        assert!(!set_contains(&small, &big, 0.0).unwrap());
    }
}
