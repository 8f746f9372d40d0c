//! Continuous Lyapunov equation `A X + X Aᵀ + Q = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `A X + X Aᵀ + Q = 0` through the Kronecker form
/// `(I ⊗ A + A ⊗ I) vec X = −vec Q`, followed by one refinement step.
///
/// Unique whenever no two eigenvalues of `A` sum to zero.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "lyapunov dimensions: A is {:?}, Q is {:?}",
            a.shape(),
            q.shape()
        )));
    }
    let eye = DMatrix::<T>::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let lu = op.clone().lu();
    let pivots = lu.u().diagonal().map(|v| v.abs());
    if pivots.min() <= pivots.max() * T::eps() * T::lit((n * n) as f64) {
        return Err(Error::Singular("lyapunov operator"));
    }
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let mut x = lu.solve(&rhs).ok_or(Error::Singular("lyapunov operator"))?;
    let r = &rhs - &op * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("lyapunov operator"));
    }
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * T::lit(0.5))
}

/// `‖A X + X Aᵀ + Q‖_F`.
pub fn lyapunov_residual<T: Real>(a: &DMatrix<T>, x: &DMatrix<T>, q: &DMatrix<T>) -> T {
    (a * x + x * a.transpose() + q).norm()
}
