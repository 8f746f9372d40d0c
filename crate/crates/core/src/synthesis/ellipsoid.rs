//! Invariant ellipsoids for `ẋ = A x + B d` with a per-channel bound
//! `|d_i| ≤ b_i`.
//!
//! For a decay rate `α ∈ (0, −2 max Re λ(A))` the shape `Q` solves
//!
//! ```text
//! A Q + Q Aᵀ + α Q + (1/α) B W Bᵀ = 0,    W = (Σ b) diag(b)
//! ```
//!
//! and `E = {x : xᵀ Q⁻¹ x ≤ 1}` is invariant, since every `d` in the box
//! satisfies `dᵀ W⁻¹ d ≤ Σ b_i² / (b_i Σ b) = 1`. `α` is chosen by
//! golden-section search over the selected objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::synthesis::care::max_real_part;
use crate::synthesis::lyapunov::solve_lyapunov;

const GOLDEN_TOL: f64 = 1e-6;
const CERT_TOL: f64 = 1e-8;

/// Size measure minimized over `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Trace,
    LogDet,
}

/// `{x : xᵀ P x ≤ 1}` together with the decay rate that certifies it.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid<T: Real> {
    pub p: DMatrix<T>,
    pub alpha: T,
}

impl<T: Real> Ellipsoid<T> {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `Q = P⁻¹`.
    pub fn shape(&self) -> Result<DMatrix<T>> {
        let chol = self.p.clone().cholesky().ok_or(Error::NotPositiveDefinite("ellipsoid P"))?;
        let q = chol.inverse();
        Ok((&q + q.transpose()) * T::lit(0.5))
    }

    /// `xᵀ P x`.
    pub fn value(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.p * x))
    }

    pub fn contains(&self, x: &DVector<T>, tol: T) -> bool {
        self.value(x) <= T::one() + tol
    }

    /// Largest `|x_i|` over the set: `sqrt(Q_ii)`.
    pub fn axis_bound(&self, i: usize) -> Result<T> {
        Ok(self.shape()?[(i, i)].sqrt())
    }

    /// `sqrt(λ_max)` of the diagonal block of `Q` on the given coordinates.
    pub fn block_radius(&self, start: usize, len: usize) -> Result<T> {
        let q = self.shape()?;
        let block = q.view((start, start), (len, len)).into_owned();
        Ok(block.symmetric_eigenvalues().max().max(T::zero()).sqrt())
    }
}

/// Invariant set plus the data needed to re-check it independently.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCertificate<T: Real> {
    pub ellipsoid: Ellipsoid<T>,
    pub a_cl: DMatrix<T>,
    /// Disturbance input matrix restricted to channels with a nonzero bound.
    pub b: DMatrix<T>,
    /// Bounds of the retained channels.
    pub bounds: DVector<T>,
    /// Diagonal of `W`.
    pub weights: DVector<T>,
}

impl<T: Real> InvariantCertificate<T> {
    /// Largest eigenvalue of the dissipation block matrix
    ///
    /// ```text
    /// [ AᵀP + PA + αP    P B W^½ ]
    /// [ W^½ Bᵀ P         −α I    ]
    /// ```
    ///
    /// which is negative semidefinite exactly when the set is invariant.
    pub fn residual(&self) -> T {
        let p = &self.ellipsoid.p;
        let alpha = self.ellipsoid.alpha;
        let n = p.nrows();
        let m = self.b.ncols();
        let mut bw = self.b.clone();
        for (j, w) in self.weights.iter().enumerate() {
            bw.column_mut(j).scale_mut(w.sqrt());
        }
        let top = self.a_cl.transpose() * p + p * &self.a_cl + p * alpha;
        let off = p * bw;
        let mut big = DMatrix::zeros(n + m, n + m);
        big.view_mut((0, 0), (n, n)).copy_from(&top);
        big.view_mut((0, n), (n, m)).copy_from(&off);
        big.view_mut((n, 0), (m, n)).copy_from(&off.transpose());
        big.view_mut((n, n), (m, m)).copy_from(&(DMatrix::identity(m, m) * -alpha));
        let big = (&big + big.transpose()) * T::lit(0.5);
        big.symmetric_eigenvalues().max()
    }

    pub fn is_valid(&self) -> bool {
        self.residual() <= T::lit(CERT_TOL)
    }

    /// Checks that the same `P`, `α` and `W` also certify another system matrix.
    pub fn residual_for(&self, a_cl: &DMatrix<T>) -> T {
        let mut other = self.clone();
        other.a_cl = a_cl.clone();
        other.residual()
    }
}

/// Smallest (by `objective`) invariant ellipsoid for `ẋ = A x + B d`,
/// `|d_i| ≤ bounds_i`.
pub fn invariant_ellipsoid<T: Real>(
    a_cl: &DMatrix<T>,
    b: &DMatrix<T>,
    bounds: &DVector<T>,
    objective: Objective,
) -> Result<InvariantCertificate<T>> {
    let n = a_cl.nrows();
    if a_cl.ncols() != n || b.nrows() != n || b.ncols() != bounds.len() {
        return Err(Error::InvalidInput("ellipsoid dimensions do not agree".into()));
    }
    if bounds.iter().any(|v| *v < T::zero() || !v.is_finite()) {
        return Err(Error::InvalidInput("disturbance bounds must be finite and nonnegative".into()));
    }
    let max_re = max_real_part(a_cl);
    if max_re >= T::zero() {
        return Err(Error::NotHurwitz { max_real: max_re.to_f64_lossy() });
    }
    let keep: Vec<usize> = (0..bounds.len()).filter(|&i| bounds[i] > T::zero()).collect();
    if keep.is_empty() {
        return Err(Error::ZeroDisturbance);
    }
    let b = b.select_columns(&keep);
    let bounds = bounds.select_rows(&keep);
    let total = bounds.sum();
    let weights = bounds.map(|v| v * total);
    let mut bwbt = DMatrix::zeros(n, n);
    for (j, w) in weights.iter().enumerate() {
        let col = b.column(j);
        bwbt += col * col.transpose() * *w;
    }

    let shape_at = |alpha: T| -> Result<DMatrix<T>> {
        let shifted = a_cl + DMatrix::identity(n, n) * (alpha / T::lit(2.0));
        solve_lyapunov(&shifted, &(&bwbt / alpha))
    };
    let score = |alpha: T| -> T {
        match shape_at(alpha).ok().and_then(|q| q.cholesky()) {
            Some(chol) => match objective {
                Objective::Trace => {
                    let l = chol.l();
                    (&l * l.transpose()).trace()
                }
                Objective::LogDet => chol.l().diagonal().iter().fold(T::zero(), |s, v| s + v.ln()) * T::lit(2.0),
            },
            None => T::max_value().unwrap(),
        }
    };

    let hi_edge = -max_re * T::lit(2.0);
    let (mut lo, mut hi) = (hi_edge * T::lit(1e-9), hi_edge * (T::one() - T::lit(1e-9)));
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = hi - (hi - lo) * ratio;
    let mut x2 = lo + (hi - lo) * ratio;
    let (mut f1, mut f2) = (score(x1), score(x2));
    while hi - lo > T::lit(GOLDEN_TOL) * hi {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * ratio;
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * ratio;
            f2 = score(x2);
        }
    }
    let alpha = if f1 <= f2 { x1 } else { x2 };
    let q = shape_at(alpha)?;
    let chol = q.cholesky().ok_or(Error::NotPositiveDefinite("invariant shape Q (uncontrollable disturbance directions)"))?;
    let p = chol.inverse();
    let p = (&p + p.transpose()) * T::lit(0.5);
    Ok(InvariantCertificate {
        ellipsoid: Ellipsoid { p, alpha },
        a_cl: a_cl.clone(),
        b,
        bounds,
        weights,
    })
}
