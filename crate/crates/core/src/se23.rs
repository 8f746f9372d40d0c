//! The extended pose group SE2(3) and its Lie algebra.
//!
//! Group elements are the 5×5 double-homogeneous matrices
//!
//! ```text
//! [ R  v  p ]
//! [ 0  1  0 ]
//! [ 0  0  1 ]
//! ```
//!
//! and algebra vectors are stacked in `(p, v, R)` slot order, i.e. the wedge is
//! `[[x_R×, x_v, x_p], [0, 0, 0], [0, 0, 0]]`. With this ordering the
//! constant kinematic coupling `C△` is `[[0, I, 0], [0, 0, 0], [0, 0, 0]]`
//! and `[hat(ζ), C] = hat(C△ ζ)`.

use std::ops::Mul;

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{self, skew};

pub type Vector9<T> = SVector<T, 9>;
pub type Matrix9<T> = SMatrix<T, 9, 9>;
pub type Matrix5<T> = SMatrix<T, 5, 5>;

/// Slot offsets inside a 9-vector.
pub const P_SLOT: usize = 0;
pub const V_SLOT: usize = 3;
pub const R_SLOT: usize = 6;

/// Rotation angles at or beyond `π − CHART_MARGIN` are rejected by the logarithm.
pub const CHART_MARGIN: f64 = 1e-6;

fn tolerance<T: Real>(nominal: f64) -> T {
    T::lit(nominal).max(T::eps() * T::lit(100.0))
}

/// An element of SE2(3): attitude, velocity and position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupState<T: Real> {
    rotation: Matrix3<T>,
    velocity: Vector3<T>,
    position: Vector3<T>,
}

impl<T: Real> GroupState<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            velocity: Vector3::zeros(),
            position: Vector3::zeros(),
        }
    }

    /// Builds a state, rejecting rotation blocks that are not orthonormal with det +1.
    pub fn new(rotation: Matrix3<T>, velocity: Vector3<T>, position: Vector3<T>) -> Result<Self> {
        let tol = tolerance::<T>(1e-9);
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if ortho > tol {
            return Err(Error::NotARotation { distance: ortho.to_f64_lossy() });
        }
        if (rotation.determinant() - T::one()).abs() > tol {
            return Err(Error::Reflection);
        }
        Ok(Self { rotation, velocity, position })
    }

    /// Builds a state without validating the rotation block.
    pub fn from_parts_unchecked(rotation: Matrix3<T>, velocity: Vector3<T>, position: Vector3<T>) -> Self {
        Self { rotation, velocity, position }
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn velocity(&self) -> &Vector3<T> {
        &self.velocity
    }

    pub fn position(&self) -> &Vector3<T> {
        &self.position
    }

    /// The 5×5 matrix embedding.
    pub fn to_matrix(&self) -> Matrix5<T> {
        let mut m = Matrix5::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.velocity);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&self.position);
        m
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            velocity: -(rt * self.velocity),
            position: -(rt * self.position),
        }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            rotation: self.rotation * rhs.rotation,
            velocity: self.rotation * rhs.velocity + self.velocity,
            position: self.rotation * rhs.position + self.position,
        }
    }

    /// Group adjoint: `Ad_X ξ = vee(X hat(ξ) X⁻¹)`.
    pub fn adjoint(&self) -> Matrix9<T> {
        let r = &self.rotation;
        let mut m = Matrix9::zeros();
        for slot in [P_SLOT, V_SLOT, R_SLOT] {
            m.fixed_view_mut::<3, 3>(slot, slot).copy_from(r);
        }
        m.fixed_view_mut::<3, 3>(P_SLOT, R_SLOT).copy_from(&(skew(&self.position) * r));
        m.fixed_view_mut::<3, 3>(V_SLOT, R_SLOT).copy_from(&(skew(&self.velocity) * r));
        m
    }

    /// Frobenius distance of the rotation block from orthonormality.
    pub fn orthonormality_error(&self) -> T {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).norm()
    }
}

impl<T: Real> Mul for GroupState<T> {
    type Output = GroupState<T>;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

impl<'a, T: Real> Mul<&'a GroupState<T>> for &'a GroupState<T> {
    type Output = GroupState<T>;

    fn mul(self, rhs: &'a GroupState<T>) -> Self::Output {
        self.compose(rhs)
    }
}

/// A Lie-algebra coordinate vector, slots `(p, v, R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraVector<T: Real>(pub Vector9<T>);

impl<T: Real> AlgebraVector<T> {
    pub fn zeros() -> Self {
        Self(Vector9::zeros())
    }

    pub fn from_slots(p: Vector3<T>, v: Vector3<T>, r: Vector3<T>) -> Self {
        let mut x = Vector9::zeros();
        x.fixed_rows_mut::<3>(P_SLOT).copy_from(&p);
        x.fixed_rows_mut::<3>(V_SLOT).copy_from(&v);
        x.fixed_rows_mut::<3>(R_SLOT).copy_from(&r);
        Self(x)
    }

    pub fn p(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(P_SLOT).into_owned()
    }

    pub fn v(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(V_SLOT).into_owned()
    }

    pub fn rot(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(R_SLOT).into_owned()
    }

    pub fn as_vector(&self) -> &Vector9<T> {
        &self.0
    }
}

impl<T: Real> From<Vector9<T>> for AlgebraVector<T> {
    fn from(v: Vector9<T>) -> Self {
        Self(v)
    }
}

/// A vehicle or reference input `(ν_p, ν_v, ν_R)`: position slot zero for
/// physical inputs, specific force in the velocity slot, body rate in the
/// rotation slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputVector<T: Real>(pub Vector9<T>);

impl<T: Real> InputVector<T> {
    pub fn zeros() -> Self {
        Self(Vector9::zeros())
    }

    /// Physical input with a zero position slot.
    pub fn new(accel: Vector3<T>, rate: Vector3<T>) -> Self {
        let a = AlgebraVector::from_slots(Vector3::zeros(), accel, rate);
        Self(a.0)
    }

    /// Gravity expressed as an input: `g` in the velocity slot.
    pub fn gravity(g: Vector3<T>) -> Self {
        Self::new(g, Vector3::zeros())
    }

    pub fn accel(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(V_SLOT).into_owned()
    }

    pub fn rate(&self) -> Vector3<T> {
        self.0.fixed_rows::<3>(R_SLOT).into_owned()
    }

    pub fn as_vector(&self) -> &Vector9<T> {
        &self.0
    }

    pub fn as_algebra(&self) -> AlgebraVector<T> {
        AlgebraVector(self.0)
    }
}

/// Wedge map from ℝ⁹ into the 5×5 matrix algebra.
pub fn hat<T: Real>(x: &Vector9<T>) -> Matrix5<T> {
    let mut m = Matrix5::zeros();
    let x = AlgebraVector(*x);
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&x.rot()));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&x.v());
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&x.p());
    m
}

/// Vee map; rejects matrices outside the algebra pattern beyond `1e-12`.
pub fn vee<T: Real>(m: &Matrix5<T>) -> Result<AlgebraVector<T>> {
    let top = m.fixed_view::<3, 3>(0, 0);
    let sym = top + top.transpose();
    let mut residual = sym.norm() + top.diagonal().norm();
    residual += m.fixed_view::<2, 5>(3, 0).norm();
    let tol = tolerance::<T>(1e-12) * T::one().max(m.norm());
    if residual > tol {
        return Err(Error::NotInAlgebra { residual: residual.to_f64_lossy() });
    }
    let r = Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]);
    let v = m.fixed_view::<3, 1>(0, 3).into_owned();
    let p = m.fixed_view::<3, 1>(0, 4).into_owned();
    Ok(AlgebraVector::from_slots(p, v, r))
}

/// Closed-form exponential: `R = exp(x_R×)`, `v = J_l x_v`, `p = J_l x_p`.
pub fn exp_group<T: Real>(x: &AlgebraVector<T>) -> GroupState<T> {
    let phi = x.rot();
    let jl = so3::left_jacobian(&phi);
    GroupState {
        rotation: so3::exp_so3(&phi),
        velocity: jl * x.v(),
        position: jl * x.p(),
    }
}

/// Principal logarithm; fails when the rotation angle reaches `π − 1e-6`.
pub fn log_group<T: Real>(x: &GroupState<T>) -> Result<AlgebraVector<T>> {
    let angle = so3::rotation_angle(&x.rotation);
    if angle >= T::pi() - T::lit(CHART_MARGIN) {
        return Err(Error::OutsideChart { angle: angle.to_f64_lossy() });
    }
    let phi = so3::log_so3(&x.rotation);
    let jinv = so3::left_jacobian_inv(&phi);
    Ok(AlgebraVector::from_slots(jinv * x.position, jinv * x.velocity, phi))
}

/// Algebra adjoint: `hat(ad(x) y) = [hat(x), hat(y)]`.
pub fn ad_matrix<T: Real>(x: &Vector9<T>) -> Matrix9<T> {
    let x = AlgebraVector(*x);
    let wr = skew(&x.rot());
    let mut m = Matrix9::zeros();
    for slot in [P_SLOT, V_SLOT, R_SLOT] {
        m.fixed_view_mut::<3, 3>(slot, slot).copy_from(&wr);
    }
    m.fixed_view_mut::<3, 3>(P_SLOT, R_SLOT).copy_from(&skew(&x.p()));
    m.fixed_view_mut::<3, 3>(V_SLOT, R_SLOT).copy_from(&skew(&x.v()));
    m
}

/// The constant matrix `C` that embeds `ṗ = v` in the mixed-invariant dynamics.
pub fn c_matrix<T: Real>() -> Matrix5<T> {
    let mut c = Matrix5::zeros();
    c[(3, 4)] = T::one();
    c
}

/// `C△`, the linear operator with `hat(ζ) C − C hat(ζ) = hat(C△ ζ)`.
pub fn c_triangle<T: Real>() -> Matrix9<T> {
    let mut c = Matrix9::zeros();
    c.fixed_view_mut::<3, 3>(P_SLOT, V_SLOT).fill_with_identity();
    c
}

/// Blocks of the algebra left Jacobian `Φ(ad ζ) = Σ ad^k / (k+1)!`, which is
/// block upper triangular: `[[J, 0, M_p], [0, J, M_v], [0, 0, J]]`.
#[derive(Clone, Copy, Debug)]
pub struct DexpBlocks<T: Real> {
    pub j: Matrix3<T>,
    pub j_inv: Matrix3<T>,
    pub m_p: Matrix3<T>,
    pub m_v: Matrix3<T>,
}

impl<T: Real> DexpBlocks<T> {
    pub fn new(zeta: &AlgebraVector<T>) -> Self {
        let phi = zeta.rot();
        let d = skew(&phi);
        let sp = skew(&zeta.p());
        let sv = skew(&zeta.v());

        // ad^k has top-right blocks S_k with S_1 = x×, S_{k+1} = D S_k + x× D^k.
        let mut dk = d;
        let mut s_p = sp;
        let mut s_v = sv;
        let mut coef = T::lit(0.5);
        let mut m_p = s_p * coef;
        let mut m_v = s_v * coef;
        let tiny = T::eps() * T::lit(0.1);
        for k in 2..80 {
            s_p = d * s_p + sp * dk;
            s_v = d * s_v + sv * dk;
            dk *= d;
            coef /= T::lit((k + 1) as f64);
            let tp = s_p * coef;
            let tv = s_v * coef;
            m_p += tp;
            m_v += tv;
            let scale = T::one().max(m_p.norm()).max(m_v.norm());
            if tp.norm().max(tv.norm()) <= tiny * scale && dk.norm() * coef <= tiny {
                break;
            }
        }
        Self {
            j: so3::left_jacobian(&phi),
            j_inv: so3::left_jacobian_inv(&phi),
            m_p,
            m_v,
        }
    }

    /// The full 9×9 matrix `Φ(ad ζ)`.
    pub fn phi(&self) -> Matrix9<T> {
        let mut m = Matrix9::zeros();
        for slot in [P_SLOT, V_SLOT, R_SLOT] {
            m.fixed_view_mut::<3, 3>(slot, slot).copy_from(&self.j);
        }
        m.fixed_view_mut::<3, 3>(P_SLOT, R_SLOT).copy_from(&self.m_p);
        m.fixed_view_mut::<3, 3>(V_SLOT, R_SLOT).copy_from(&self.m_v);
        m
    }

    /// `Φ(ad ζ)⁻¹`, using the block-triangular structure.
    pub fn phi_inv(&self) -> Matrix9<T> {
        let ji = &self.j_inv;
        let mut m = Matrix9::zeros();
        for slot in [P_SLOT, V_SLOT, R_SLOT] {
            m.fixed_view_mut::<3, 3>(slot, slot).copy_from(ji);
        }
        m.fixed_view_mut::<3, 3>(P_SLOT, R_SLOT).copy_from(&(-(ji * self.m_p * ji)));
        m.fixed_view_mut::<3, 3>(V_SLOT, R_SLOT).copy_from(&(-(ji * self.m_v * ji)));
        m
    }
}

fn check_chart<T: Real>(zeta: &AlgebraVector<T>) -> Result<()> {
    let angle = zeta.rot().norm();
    if angle >= T::pi() - T::lit(CHART_MARGIN) {
        return Err(Error::OutsideChart { angle: angle.to_f64_lossy() });
    }
    Ok(())
}

/// Input-distortion matrix `U_ζ = f(ad ζ)` with `f(z) = −z e^{−z} / (1 − e^{−z})`.
///
/// Since `f(z) = −1 / Φ(z)` with `Φ(z) = (e^z − 1)/z` entire, `U_ζ` is the
/// negated inverse of the algebra left Jacobian. `U_0 = −I`.
pub fn u_zeta<T: Real>(zeta: &AlgebraVector<T>) -> Result<Matrix9<T>> {
    check_chart(zeta)?;
    Ok(-DexpBlocks::new(zeta).phi_inv())
}

/// `U_ζ⁻¹ = −Φ(ad ζ)`.
pub fn u_zeta_inv<T: Real>(zeta: &AlgebraVector<T>) -> Result<Matrix9<T>> {
    check_chart(zeta)?;
    Ok(-DexpBlocks::new(zeta).phi())
}

/// Re-projects an integrated 5×5 matrix onto the group: the rotation block is
/// replaced by its polar factor and the bottom rows are reset.
pub fn project_to_group<T: Real>(m: &Matrix5<T>) -> Result<GroupState<T>> {
    let block: Matrix3<T> = m.fixed_view::<3, 3>(0, 0).into_owned();
    if block.determinant() <= T::zero() {
        return Err(Error::Reflection);
    }
    let svd = block.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Singular("polar decomposition")),
    };
    let rotation = u * vt;
    let distance = (block - rotation).norm();
    if distance > T::lit(1e-3) {
        return Err(Error::NotARotation { distance: distance.to_f64_lossy() });
    }
    Ok(GroupState {
        rotation,
        velocity: m.fixed_view::<3, 1>(0, 3).into_owned(),
        position: m.fixed_view::<3, 1>(0, 4).into_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec9(rng: &mut ChaCha8Rng, scale: f64) -> Vector9<f64> {
        Vector9::from_fn(|_, _| rng.random_range(-scale..scale))
    }

    /// Truncated power series with scaling and squaring.
    fn expm_series<const N: usize>(m: &SMatrix<f64, N, N>, terms: usize) -> SMatrix<f64, N, N> {
        let norm = m.norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = m / 2f64.powi(squarings as i32);
        let mut term = SMatrix::<f64, N, N>::identity();
        let mut sum = term;
        for k in 1..terms {
            term = term * scaled / k as f64;
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vector9::<f64>::zeros()), Matrix5::zeros());
        let x = AlgebraVector::from_slots(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros(), Vector3::zeros());
        let m = hat(&x.0);
        let mut expected = Matrix5::zeros();
        expected[(0, 4)] = 1.0;
        assert_eq!(m, expected);
    }

    #[test]
    fn hat_structure_and_vee_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = random_vec9(&mut rng, 3.0);
            let m = hat(&x);
            assert_eq!(m.fixed_view::<2, 5>(3, 0).norm(), 0.0);
            let top = m.fixed_view::<3, 3>(0, 0);
            assert_eq!(top + top.transpose(), Matrix3::zeros());
            assert_eq!(vee(&m).unwrap().0, x);
        }
        let v = Vector9::from_iterator((1..=9).map(|i| i as f64));
        assert_eq!(vee(&hat(&v)).unwrap().0, v);
        assert_eq!(vee(&Matrix5::<f64>::zeros()).unwrap().0, Vector9::zeros());
    }

    #[test]
    fn vee_rejects_non_algebra() {
        let mut m = hat(&Vector9::from_element(1.0));
        m[(0, 1)] += 1e-6;
        assert!(matches!(vee(&m), Err(Error::NotInAlgebra { .. })));
        let mut m = Matrix5::<f64>::zeros();
        m[(4, 4)] = 1.0;
        assert!(vee(&m).is_err());
    }

    #[test]
    fn exp_identity_and_pure_translation() {
        let id = exp_group(&AlgebraVector::<f64>::zeros());
        assert_eq!(id, GroupState::identity());
        let x = AlgebraVector::from_slots(Vector3::new(1.0, -2.0, 3.0), Vector3::new(0.5, 0.0, -1.0), Vector3::zeros());
        let g = exp_group(&x);
        assert_eq!(*g.rotation(), Matrix3::identity());
        assert_eq!(*g.velocity(), x.v());
        assert_eq!(*g.position(), x.p());
    }

    #[test]
    fn exp_quarter_turn_against_series() {
        let x = AlgebraVector::from_slots(
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::zeros(),
            Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
        );
        let g = exp_group(&x);
        let two_over_pi = 2.0 / std::f64::consts::PI;
        assert_relative_eq!(*g.position(), Vector3::new(two_over_pi, two_over_pi, 0.0), epsilon = 1e-12);
        let series = expm_series(&hat(&x.0), 40);
        assert_relative_eq!(g.to_matrix(), series, epsilon = 1e-12);
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(*g.rotation(), rz, epsilon = 1e-12);
    }

    #[test]
    fn exp_agrees_with_plain_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let mut x = random_vec9(&mut rng, 1.0);
            let n = x.norm();
            if n > 2.0 {
                x *= 2.0 / n;
            }
            let g = exp_group(&AlgebraVector(x)).to_matrix();
            // Plain 30-term series, no scaling.
            let h = hat(&x);
            let mut term = Matrix5::identity();
            let mut sum = term;
            for k in 1..30 {
                term = term * h / k as f64;
                sum += term;
            }
            assert!((g - sum).amax() < 1e-10);
        }
    }

    #[test]
    fn log_roundtrip_and_branch_cut() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(log_group(&GroupState::<f64>::identity()).unwrap(), AlgebraVector::zeros());
        for _ in 0..200 {
            let mut x = random_vec9(&mut rng, 3.0);
            let r = x.fixed_rows::<3>(R_SLOT).norm();
            if r > 3.0 {
                let scaled = x.fixed_rows::<3>(R_SLOT) * (3.0 / r);
                x.fixed_rows_mut::<3>(R_SLOT).copy_from(&scaled);
            }
            let back = log_group(&exp_group(&AlgebraVector(x))).unwrap();
            assert!((back.0 - x).amax() < 1e-9, "{:?}", (back.0 - x).amax());
        }
        let half_turn = AlgebraVector::from_slots(Vector3::zeros(), Vector3::zeros(), Vector3::new(std::f64::consts::PI, 0.0, 0.0));
        assert!(matches!(log_group(&exp_group(&half_turn)), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn ad_is_the_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(ad_matrix(&Vector9::<f64>::zeros()), Matrix9::zeros());
        for _ in 0..100 {
            let x = random_vec9(&mut rng, 2.0);
            let y = random_vec9(&mut rng, 2.0);
            let lhs = hat(&(ad_matrix(&x) * y));
            let rhs = hat(&x) * hat(&y) - hat(&y) * hat(&x);
            assert!((lhs - rhs).amax() < 1e-12);
        }
        let nu = InputVector::new(Vector3::new(7.5, 7.5, 0.0), Vector3::new(5.0, 5.0, 1.0));
        let ad = ad_matrix(nu.as_vector());
        assert_eq!(ad.fixed_view::<3, 3>(P_SLOT, R_SLOT).norm(), 0.0);
    }

    #[test]
    fn c_triangle_identity() {
        let c: Matrix5<f64> = c_matrix();
        let nonzero: Vec<_> = c.iter().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(c[(3, 4)], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = random_vec9(&mut rng, 2.0);
            let lhs = hat(&z) * c - c * hat(&z);
            let rhs = hat(&(c_triangle() * z));
            assert!((lhs - rhs).amax() <= 1e-14);
        }
        let z = AlgebraVector::from_slots(Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0), Vector3::new(7.0, 8.0, 9.0));
        let out = AlgebraVector(c_triangle() * z.0);
        assert_eq!(out.p(), z.v());
        assert_eq!(out.v(), Vector3::zeros());
        assert_eq!(out.rot(), Vector3::zeros());
    }

    #[test]
    fn group_adjoint_is_exp_of_ad() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = random_vec9(&mut rng, 1.5);
            let lhs = exp_group(&AlgebraVector(x)).adjoint();
            let rhs = expm_series(&ad_matrix(&x), 30);
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn adjoint_conjugates_hat() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = exp_group(&AlgebraVector(random_vec9(&mut rng, 1.0)));
        let y = random_vec9(&mut rng, 1.0);
        let lhs = hat(&(g.adjoint() * y));
        let rhs = g.to_matrix() * hat(&y) * g.inverse().to_matrix();
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn inverse_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = exp_group(&AlgebraVector(random_vec9(&mut rng, 1.0)));
        let b = exp_group(&AlgebraVector(random_vec9(&mut rng, 1.0)));
        assert_relative_eq!((a * b).to_matrix(), a.to_matrix() * b.to_matrix(), epsilon = 1e-14);
        assert_relative_eq!((a * a.inverse()).to_matrix(), Matrix5::identity(), epsilon = 1e-14);
    }

    #[test]
    fn u_zeta_at_origin_is_minus_identity() {
        let u = u_zeta(&AlgebraVector::<f64>::zeros()).unwrap();
        assert_eq!(u, -Matrix9::identity());
    }

    #[test]
    fn u_zeta_first_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut z = random_vec9(&mut rng, 1.0);
            z *= 1e-4 / z.norm();
            let u = u_zeta(&AlgebraVector(z)).unwrap();
            let approx = -Matrix9::identity() + ad_matrix(&z) / 2.0;
            assert!((u - approx).amax() < 1e-8);
        }
    }

    #[test]
    fn u_zeta_solves_the_dexp_identity() {
        // U (e^{ad} − I) = −ad
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let mut z = random_vec9(&mut rng, 2.0);
            let r = z.fixed_rows::<3>(R_SLOT).norm();
            if r > 3.0 {
                z.fixed_rows_mut::<3>(R_SLOT).scale_mut(3.0 / r);
            }
            let ad = ad_matrix(&z);
            let u = u_zeta(&AlgebraVector(z)).unwrap();
            let lhs = u * (expm_series(&ad, 30) - Matrix9::identity());
            assert!((lhs + ad).amax() < 1e-10);
            let prod = u * u_zeta_inv(&AlgebraVector(z)).unwrap();
            assert!((prod - Matrix9::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn u_zeta_rejects_branch() {
        let z = AlgebraVector::from_slots(Vector3::zeros(), Vector3::zeros(), Vector3::new(0.0, std::f64::consts::PI, 0.0));
        assert!(matches!(u_zeta(&z), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn projection_repairs_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = exp_group(&AlgebraVector(random_vec9(&mut rng, 1.0)));
        assert_relative_eq!(project_to_group(&g.to_matrix()).unwrap().to_matrix(), g.to_matrix(), epsilon = 1e-14);

        // Unit-Frobenius skew perturbation.
        let w = Vector3::new(0.3, -0.2, 0.9);
        let k = skew(&w) / skew(&w).norm();
        let mut m = g.to_matrix();
        let drifted: Matrix3<f64> = g.rotation() * (Matrix3::identity() + k * 1e-6);
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&drifted);
        m[(3, 0)] = 1e-9;
        let fixed = project_to_group(&m).unwrap();
        assert!(fixed.orthonormality_error() < 1e-14);
        assert!((fixed.rotation() - g.rotation()).norm() <= 1e-6);
        // Polar oracle: M (MᵀM)^{-1/2}.
        let eig = (drifted.transpose() * drifted).symmetric_eigen();
        let lam: Vector3<f64> = eig.eigenvalues;
        let inv_sqrt = eig.eigenvectors * Matrix3::from_diagonal(&lam.map(|l| 1.0 / l.sqrt())) * eig.eigenvectors.transpose();
        assert_relative_eq!(*fixed.rotation(), drifted * inv_sqrt, epsilon = 1e-12);
        assert_eq!(fixed.to_matrix().fixed_view::<2, 5>(3, 0), Matrix5::<f64>::identity().fixed_view::<2, 5>(3, 0));

        let mut bad = Matrix5::<f64>::identity();
        bad[(0, 0)] = -1.0;
        assert!(project_to_group(&bad).is_err());
        let mut far = Matrix5::<f64>::identity();
        far[(0, 1)] = 0.1;
        assert!(matches!(project_to_group(&far), Err(Error::NotARotation { .. })));
    }

    #[test]
    fn checked_constructor() {
        assert!(GroupState::new(Matrix3::<f64>::identity(), Vector3::zeros(), Vector3::zeros()).is_ok());
        assert!(GroupState::new(Matrix3::<f64>::identity() * 1.1, Vector3::zeros(), Vector3::zeros()).is_err());
        let flip = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert_eq!(GroupState::new(flip, Vector3::zeros(), Vector3::zeros()), Err(Error::Reflection));
    }

    #[test]
    fn single_precision_roundtrip() {
        let x = AlgebraVector::<f32>::from_slots(
            Vector3::new(0.3, -0.1, 0.2),
            Vector3::new(1.0, 0.5, -0.5),
            Vector3::new(0.4, 0.2, -0.7),
        );
        let back = log_group(&exp_group(&x)).unwrap();
        assert!((back.0 - x.0).amax() < 1e-5);
        assert!((u_zeta(&x).unwrap() * u_zeta_inv(&x).unwrap() - Matrix9::identity()).amax() < 1e-5);
    }
}
