//! Figure data: projected set hulls and bound-versus-trajectory histories.
//!
//! A set file has the header `projection,element,index,x,y,z`. Projection
//! names are `{pos,vel,rot}_{xy,xz,yz}` for planar hulls and
//! `{pos,vel,rot}_xyz` for spatial ones. `vertex` rows carry coordinates
//! (`z` left empty for planar hulls, whose vertices run counter-clockwise);
//! `face` rows carry three zero-based vertex indices of an outward triangle.
//!
//! A history file has the header `t,level_zeta,level_omega`, then
//! `zeta_*` and `omega_err_*` samples, then the constant per-axis bounds
//! `bound_*` and `bound_omega_*`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chull::ConvexHullWrapper;
use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::se23::Vector9;
use crate::sim::logio::{fmt_f64, LoggedErrors};
use crate::so3::log_so3;
use crate::synthesis::cascade::CertBundle;
use crate::synthesis::ellipsoid::Ellipsoid;
use crate::synthesis::mapping::ellipsoid_to_group;

const BLOCKS: [(&str, usize); 3] = [("pos", 0), ("vel", 3), ("rot", 6)];
const PLANES: [(&str, usize, usize); 3] = [("xy", 0, 1), ("xz", 0, 2), ("yz", 1, 2)];
const ZETA: [&str; 9] = ["px", "py", "pz", "vx", "vy", "vz", "rx", "ry", "rz"];
const XYZ: [&str; 3] = ["x", "y", "z"];

/// Boundary points of a planar ellipse projection.
const RING: usize = 256;
/// Points on a spatial ellipsoid projection.
const SPHERE: usize = 1500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Algebra,
    Group,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Algebra => "algebra",
            Space::Group => "group",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Hull2 {
    pub vertices: Vec<Vector2<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Hull3 {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

/// All projections of one set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SetHulls {
    pub planar: Vec<(String, Hull2)>,
    pub spatial: Vec<(String, Hull3)>,
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn hull_2d(points: &[Vector2<f64>]) -> Hull2 {
    let mut pts: Vec<Vector2<f64>> = points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()).copied().collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Hull2 { vertices: pts };
    }
    let mut out: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for p in &pts {
        while out.len() >= 2 && cross(&out[out.len() - 2], &out[out.len() - 1], p) <= 0.0 {
            out.pop();
        }
        out.push(*p);
    }
    let lower = out.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while out.len() >= lower && cross(&out[out.len() - 2], &out[out.len() - 1], p) <= 0.0 {
            out.pop();
        }
        out.push(*p);
    }
    out.pop();
    Hull2 { vertices: out }
}

pub fn hull_3d(points: &[Vector3<f64>]) -> Result<Hull3> {
    let raw: Vec<Vec<f64>> = points.iter().map(|p| vec![p.x, p.y, p.z]).collect();
    let hull = ConvexHullWrapper::try_new(&raw, None).map_err(|e| Error::InvalidInput(format!("convex hull: {e:?}")))?;
    let (verts, idx) = hull.vertices_indices();
    // The hull library's output order is not stable between runs, so sort
    // vertices lexicographically and faces by their smallest index.
    let mut order: Vec<usize> = (0..verts.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (&verts[a], &verts[b]);
        va[0].total_cmp(&vb[0]).then(va[1].total_cmp(&vb[1])).then(va[2].total_cmp(&vb[2]))
    });
    let mut rank = vec![0; verts.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let mut faces: Vec<[usize; 3]> = idx
        .chunks_exact(3)
        .map(|f| {
            let f = [rank[f[0]], rank[f[1]], rank[f[2]]];
            let m = (0..3).min_by_key(|&i| f[i]).unwrap_or(0);
            [f[m], f[(m + 1) % 3], f[(m + 2) % 3]]
        })
        .collect();
    faces.sort_unstable();
    Ok(Hull3 { vertices: order.iter().map(|&i| Vector3::new(verts[i][0], verts[i][1], verts[i][2])).collect(), faces })
}

fn sub2(q: &DMatrix<f64>, i: usize, j: usize) -> Matrix2<f64> {
    Matrix2::new(q[(i, i)], q[(i, j)], q[(j, i)], q[(j, j)])
}

fn sub3(q: &DMatrix<f64>, s: usize) -> Matrix3<f64> {
    q.fixed_view::<3, 3>(s, s).into_owned()
}

/// Hulls of the exact projections of the ellipsoid `xᵀPx ≤ 1`.
pub fn algebra_hulls(e: &Ellipsoid<f64>) -> Result<SetHulls> {
    let q = e.shape()?;
    let mut out = SetHulls::default();
    for (name, s) in BLOCKS {
        for (plane, a, b) in PLANES {
            let l = sub2(&q, s + a, s + b).cholesky().ok_or(Error::NotPositiveDefinite("projected shape"))?.l();
            let ring: Vec<Vector2<f64>> = (0..RING)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / RING as f64;
                    l * Vector2::new(th.cos(), th.sin())
                })
                .collect();
            out.planar.push((format!("{name}_{plane}"), hull_2d(&ring)));
        }
    }
    for (name, s) in BLOCKS {
        let l = sub3(&q, s).cholesky().ok_or(Error::NotPositiveDefinite("projected shape"))?.l();
        let pts: Vec<Vector3<f64>> = fibonacci_sphere(SPHERE).into_iter().map(|u| l * u).collect();
        out.spatial.push((format!("{name}_xyz"), hull_3d(&pts)?));
    }
    Ok(out)
}

fn fibonacci_sphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * k as f64;
            Vector3::new(r * th.cos(), r * th.sin(), z)
        })
        .collect()
}

/// Hulls of `n` mapped samples in group coordinates `(p, v, log R)`.
pub fn group_hulls(e: &Ellipsoid<f64>, n: usize) -> Result<SetHulls> {
    let set = ellipsoid_to_group(e, n)?;
    let coords: Vec<Vector9<f64>> = set
        .group
        .iter()
        .map(|g| {
            let r = log_so3(g.rotation());
            let (p, v) = (g.position(), g.velocity());
            Vector9::from_iterator(p.iter().chain(v.iter()).chain(r.iter()).copied())
        })
        .collect();
    let mut out = SetHulls::default();
    for (name, s) in BLOCKS {
        for (plane, a, b) in PLANES {
            let pts: Vec<Vector2<f64>> = coords.iter().map(|c| Vector2::new(c[s + a], c[s + b])).collect();
            out.planar.push((format!("{name}_{plane}"), hull_2d(&pts)));
        }
    }
    for (name, s) in BLOCKS {
        let pts: Vec<Vector3<f64>> = coords.iter().map(|c| c.fixed_rows::<3>(s).into_owned()).collect();
        out.spatial.push((format!("{name}_xyz"), hull_3d(&pts)?));
    }
    Ok(out)
}

pub fn write_set_csv<W: Write>(hulls: &SetHulls, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["projection", "element", "index", "x", "y", "z"])?;
    for (name, h) in &hulls.planar {
        for (i, v) in h.vertices.iter().enumerate() {
            out.write_record([name.as_str(), "vertex", &i.to_string(), &fmt_f64(v.x), &fmt_f64(v.y), ""])?;
        }
    }
    for (name, h) in &hulls.spatial {
        for (i, v) in h.vertices.iter().enumerate() {
            out.write_record([name.as_str(), "vertex", &i.to_string(), &fmt_f64(v.x), &fmt_f64(v.y), &fmt_f64(v.z)])?;
        }
        for (i, f) in h.faces.iter().enumerate() {
            out.write_record([name.as_str(), "face", &i.to_string(), &f[0].to_string(), &f[1].to_string(), &f[2].to_string()])?;
        }
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn history_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "level_zeta", "level_omega"].iter().map(|s| s.to_string()).collect();
    h.extend(ZETA.iter().map(|c| format!("zeta_{c}")));
    h.extend(XYZ.iter().map(|c| format!("omega_err_{c}")));
    h.extend(ZETA.iter().map(|c| format!("bound_{c}")));
    h.extend(XYZ.iter().map(|c| format!("bound_omega_{c}")));
    h
}

pub fn write_history_csv<W: Write>(log: &LoggedErrors, bundle: &CertBundle, w: W) -> Result<()> {
    let e = bundle.zeta_ellipsoid();
    let ew = bundle.omega_ellipsoid();
    let bounds: Vec<String> = (0..9)
        .map(|i| e.axis_bound(i).map(fmt_f64))
        .chain(bundle.omega_bound.iter().map(|b| Ok(fmt_f64(*b))))
        .collect::<Result<_>>()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(history_header())?;
    for k in 0..log.t.len() {
        let (z, w) = (&log.zeta[k], &log.omega_err[k]);
        let lz = e.value(&DVector::from_column_slice(z.as_slice()));
        let lw = ew.as_ref().map_or(0.0, |ew| ew.value(&DVector::from_column_slice(w.as_slice())));
        let mut row: Vec<String> = [log.t[k], lz, lw].iter().chain(z.iter()).chain(w.iter()).map(|v| fmt_f64(*v)).collect();
        row.extend(bounds.iter().cloned());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// One certified scenario with the logs to plot against it.
pub struct Scenario<'a> {
    pub label: &'a str,
    pub bundle: &'a CertBundle,
    pub logs: &'a [LoggedErrors],
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `set_{algebra,group}_{label}.csv` for every scenario and
/// `history_{label}_run{NNN}.csv` for every log. Returns the paths in
/// writing order.
pub fn export_figures(dir: &Path, scenarios: &[Scenario<'_>], group_samples: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for sc in scenarios {
        let e = sc.bundle.zeta_ellipsoid();
        for space in [Space::Algebra, Space::Group] {
            let hulls = match space {
                Space::Algebra => algebra_hulls(&e)?,
                Space::Group => group_hulls(&e, group_samples)?,
            };
            let path = dir.join(format!("set_{}_{}.csv", space.name(), sc.label));
            write_set_csv(&hulls, create(&path)?)?;
            written.push(path);
        }
        for (i, log) in sc.logs.iter().enumerate() {
            let path = dir.join(format!("history_{}_run{i:03}.csv", sc.label));
            write_history_csv(log, sc.bundle, create(&path)?)?;
            written.push(path);
        }
    }
    Ok(written)
}
