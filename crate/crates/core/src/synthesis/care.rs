//! Continuous algebraic Riccati equation and the LQR gain.
//!
//! `Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q = 0` is solved with the matrix sign
//! function of the Hamiltonian, then polished with Newton-Kleinman steps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::synthesis::lyapunov::solve_lyapunov;

const SIGN_MAX_ITER: usize = 100;
const NEWTON_STEPS: usize = 3;

/// Stabilizing solution of the CARE.
pub fn solve_care<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::InvalidInput("care dimensions do not agree".into()));
    }
    let r_chol = r.clone().cholesky().ok_or(Error::NotPositiveDefinite("R"))?;
    let g = b * r_chol.solve(&b.transpose());
    let q = (q + q.transpose()) * T::lit(0.5);

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = matrix_sign(h)?;
    let eye = DMatrix::<T>::identity(n, n);
    // [W12; W22 + I] P = −[W11 + I; W21]
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, T::eps() * T::lit(100.0))
        .map_err(|_| Error::NotStabilizable)?;
    let mut p = (&p + p.transpose()) * T::lit(0.5);

    for _ in 0..NEWTON_STEPS {
        let k = r_chol.solve(&(b.transpose() * &p));
        let acl = a - b * &k;
        if max_real_part(&acl) >= T::zero() {
            return Err(Error::NotStabilizable);
        }
        let rhs = &q + k.transpose() * r * &k;
        p = solve_lyapunov(&acl.transpose(), &rhs)?;
    }
    let k = r_chol.solve(&(b.transpose() * &p));
    if max_real_part(&(a - b * &k)) >= T::zero() || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotStabilizable);
    }
    Ok(p)
}

/// LQR gain `K = R⁻¹ Bᵀ P` (so that `u = −K x`) and the CARE solution `P`.
pub fn lqr_gain<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let p = solve_care(a, b, q, r)?;
    let r_chol = r.clone().cholesky().ok_or(Error::NotPositiveDefinite("R"))?;
    let k = r_chol.solve(&(b.transpose() * &p));
    Ok((k, p))
}

/// `‖Aᵀ P + P A − P B R⁻¹ Bᵀ P + Q‖_F`.
pub fn care_residual<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, q: &DMatrix<T>, r: &DMatrix<T>, p: &DMatrix<T>) -> T {
    let rinv_bt = r.clone().try_inverse().map(|ri| ri * b.transpose());
    match rinv_bt {
        Some(rb) => (a.transpose() * p + p * a - p * b * rb * p + q).norm(),
        None => T::max_value().unwrap_or(T::one() / T::eps()),
    }
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn max_real_part<T: Real>(a: &DMatrix<T>) -> T {
    a.complex_eigenvalues().iter().map(|l| l.re).fold(-T::max_value().unwrap(), |x, y| x.max(y))
}

/// Newton iteration for `sign(H)` with determinant scaling.
fn matrix_sign<T: Real>(mut z: DMatrix<T>) -> Result<DMatrix<T>> {
    let dim = T::lit(z.nrows() as f64);
    let tol = T::lit(1e-13);
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::NotStabilizable)?;
        let det = z.clone().lu().determinant().abs();
        let c = if det > T::zero() && det.is_finite() {
            det.powf(T::one() / dim)
        } else {
            T::one()
        };
        let next = (&z / c + inv * c) * T::lit(0.5);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotStabilizable);
        }
        let change = (&next - &z).norm();
        z = next;
        if change <= tol * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::NotStabilizable)
}
