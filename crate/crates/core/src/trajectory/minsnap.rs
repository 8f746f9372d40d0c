//! Minimum-snap piecewise polynomials through fixed waypoints.
//!
//! Each segment is a degree-7 polynomial per flat output `(x, y, z, ψ)` in
//! local time. The waypoints are interpolated, the trajectory starts and ends
//! at rest (velocity, acceleration and jerk zero) and interior joints are C⁴.
//! The equality-constrained quadratic program is solved through its KKT
//! system.

use nalgebra::{DMatrix, DVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ORDER: usize = 8;
const AXES: usize = 4;

/// One polynomial piece: `coeffs[axis][k]` multiplies `τ^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySegment {
    pub coeffs: [[f64; ORDER]; AXES],
    pub duration: f64,
}

/// `k! / (k − d)!`, zero when `d > k`.
fn falling(k: usize, d: usize) -> f64 {
    if d > k {
        return 0.0;
    }
    ((k - d + 1)..=k).map(|v| v as f64).product()
}

/// Row of `d`-th derivative basis values at local time `tau`.
fn basis(tau: f64, d: usize) -> [f64; ORDER] {
    let mut row = [0.0; ORDER];
    for (k, r) in row.iter_mut().enumerate().skip(d) {
        *r = falling(k, d) * tau.powi((k - d) as i32);
    }
    row
}

impl PolySegment {
    /// `d`-th derivative of all four outputs at local time `tau`.
    pub fn eval(&self, tau: f64, d: usize) -> Vector4<f64> {
        let b = basis(tau, d);
        Vector4::from_fn(|axis, _| self.coeffs[axis].iter().zip(b.iter()).map(|(c, v)| c * v).sum())
    }

    /// `∫₀ᵀ (p⁽⁴⁾)² dτ` per axis.
    pub fn snap_cost(&self) -> Vector4<f64> {
        let h = snap_hessian(self.duration);
        Vector4::from_fn(|axis, _| {
            let c = DVector::from_row_slice(&self.coeffs[axis]);
            c.dot(&(&h * &c))
        })
    }
}

/// `H_jk = j!/(j−4)! · k!/(k−4)! · T^{j+k−7} / (j+k−7)` for `j, k ≥ 4`.
fn snap_hessian(t: f64) -> DMatrix<f64> {
    DMatrix::from_fn(ORDER, ORDER, |j, k| {
        if j < 4 || k < 4 {
            0.0
        } else {
            let e = (j + k - 7) as i32;
            falling(j, 4) * falling(k, 4) * t.powi(e) / e as f64
        }
    })
}

/// Piecewise trajectory over absolute times `times[0] .. times[m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSnapTrajectory {
    pub times: Vec<f64>,
    pub segments: Vec<PolySegment>,
}

impl MinSnapTrajectory {
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("at least two knot times")
    }

    /// `d`-th derivative at absolute time `t`. Outside the time span the
    /// trajectory holds its end points at rest.
    pub fn eval(&self, t: f64, d: usize) -> Vector4<f64> {
        if t <= self.start_time() || t >= self.end_time() {
            if d > 0 {
                return Vector4::zeros();
            }
            let (seg, tau) = if t <= self.start_time() {
                (&self.segments[0], 0.0)
            } else {
                let s = self.segments.last().unwrap();
                (s, s.duration)
            };
            return seg.eval(tau, 0);
        }
        let i = self.times.partition_point(|&x| x <= t).saturating_sub(1).min(self.segments.len() - 1);
        self.segments[i].eval(t - self.times[i], d)
    }

    pub fn snap_cost(&self) -> Vector4<f64> {
        self.segments.iter().map(|s| s.snap_cost()).sum()
    }
}

/// Minimum-snap trajectory through `waypoints` (x, y, z, yaw) at `times`.
pub fn min_snap(waypoints: &[Vector4<f64>], times: &[f64]) -> Result<MinSnapTrajectory> {
    if waypoints.len() < 2 || waypoints.len() != times.len() {
        return Err(Error::InvalidInput(format!(
            "need at least two waypoints with one time each (got {} waypoints, {} times)",
            waypoints.len(),
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("waypoint times must be finite and strictly increasing".into()));
    }
    if waypoints.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("waypoints must be finite".into()));
    }
    let m = waypoints.len() - 1;
    let durations: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let n = ORDER * m;
    let n_con = 6 * m + 2;

    let mut a = DMatrix::zeros(n_con, n);
    let mut row = 0;
    let put = |a: &mut DMatrix<f64>, row: usize, seg: usize, vals: &[f64; ORDER], sign: f64| {
        for (k, v) in vals.iter().enumerate() {
            a[(row, seg * ORDER + k)] += sign * v;
        }
    };
    // Row layout: the right-hand side is filled per axis below.
    for seg in 0..m {
        put(&mut a, row, seg, &basis(0.0, 0), 1.0);
        put(&mut a, row + 1, seg, &basis(durations[seg], 0), 1.0);
        row += 2;
    }
    for d in 1..=3 {
        put(&mut a, row, 0, &basis(0.0, d), 1.0);
        put(&mut a, row + 1, m - 1, &basis(durations[m - 1], d), 1.0);
        row += 2;
    }
    for seg in 0..m.saturating_sub(1) {
        for d in 1..=4 {
            put(&mut a, row, seg, &basis(durations[seg], d), 1.0);
            put(&mut a, row, seg + 1, &basis(0.0, d), -1.0);
            row += 1;
        }
    }
    debug_assert_eq!(row, n_con);

    let mut kkt = DMatrix::zeros(n + n_con, n + n_con);
    for (seg, &t) in durations.iter().enumerate() {
        let h = snap_hessian(t) * 2.0;
        kkt.view_mut((seg * ORDER, seg * ORDER), (ORDER, ORDER)).copy_from(&h);
    }
    kkt.view_mut((n, 0), (n_con, n)).copy_from(&a);
    kkt.view_mut((0, n), (n, n_con)).copy_from(&a.transpose());
    let lu = kkt.lu();

    let mut segments: Vec<PolySegment> = durations
        .iter()
        .map(|&duration| PolySegment { coeffs: [[0.0; ORDER]; AXES], duration })
        .collect();
    for axis in 0..AXES {
        let mut rhs = DVector::zeros(n + n_con);
        for seg in 0..m {
            rhs[n + 2 * seg] = waypoints[seg][axis];
            rhs[n + 2 * seg + 1] = waypoints[seg + 1][axis];
        }
        let sol = lu.solve(&rhs).ok_or(Error::Singular("minimum-snap KKT system"))?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("minimum-snap KKT system"));
        }
        for (seg, s) in segments.iter_mut().enumerate() {
            s.coeffs[axis].copy_from_slice(sol.rows(seg * ORDER, ORDER).as_slice());
        }
    }
    Ok(MinSnapTrajectory { times: times.to_vec(), segments })
}
