//! CSV form of a [`SimLog`]: a header row and one row per logged step.
//!
//! Column order:
//! `t`, `zeta_{px,py,pz,vx,vy,vz,rx,ry,rz}`, `omega_err_{x,y,z}`,
//! `u_thrust`, `u_w{x,y,z}`, `moment_{x,y,z}`, `d_a{x,y,z}`,
//! `d_alpha_{x,y,z}`, `lyap_zeta`, `lyap_omega`, `pos_{x,y,z}`,
//! `vel_{x,y,z}`, `att_{x,y,z}`, `ref_pos_{x,y,z}`, `ref_vel_{x,y,z}`,
//! `ref_att_{x,y,z}` and, when tracked, `zeta_ode_*`. Attitudes are rotation
//! vectors. Floats use the shortest representation that round-trips.

use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::se23::{GroupState, Vector9};
use crate::sim::closed_loop::SimLog;
use crate::so3::log_so3;

const ZETA: [&str; 9] = ["px", "py", "pz", "vx", "vy", "vz", "rx", "ry", "rz"];
const XYZ: [&str; 3] = ["x", "y", "z"];

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Column names for a log, with or without the ODE copy.
pub fn header(with_ode: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(ZETA.iter().map(|c| format!("zeta_{c}")));
    h.extend(XYZ.iter().map(|c| format!("omega_err_{c}")));
    h.push("u_thrust".into());
    h.extend(XYZ.iter().map(|c| format!("u_w{c}")));
    h.extend(XYZ.iter().map(|c| format!("moment_{c}")));
    h.extend(XYZ.iter().map(|c| format!("d_a{c}")));
    h.extend(XYZ.iter().map(|c| format!("d_alpha_{c}")));
    h.push("lyap_zeta".into());
    h.push("lyap_omega".into());
    for prefix in ["pos", "vel", "att", "ref_pos", "ref_vel", "ref_att"] {
        h.extend(XYZ.iter().map(|c| format!("{prefix}_{c}")));
    }
    if with_ode {
        h.extend(ZETA.iter().map(|c| format!("zeta_ode_{c}")));
    }
    h
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn push_state(row: &mut Vec<String>, g: &GroupState<f64>) {
    row.extend(g.position().iter().map(|v| fmt_f64(*v)));
    row.extend(g.velocity().iter().map(|v| fmt_f64(*v)));
    row.extend(log_so3(g.rotation()).iter().map(|v| fmt_f64(*v)));
}

pub fn write_log_csv<W: Write>(log: &SimLog, w: W) -> Result<()> {
    let with_ode = !log.zeta_ode.is_empty();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header(with_ode))?;
    for k in 0..log.t.len() {
        let mut row = Vec::with_capacity(64);
        row.push(fmt_f64(log.t[k]));
        let nums = log.zeta[k]
            .iter()
            .chain(log.omega_err[k].iter())
            .chain(log.u[k].iter())
            .chain(log.moment[k].iter())
            .chain(log.disturbance[k].iter())
            .chain(std::iter::once(&log.lyap_zeta[k]))
            .chain(std::iter::once(&log.lyap_omega[k]));
        row.extend(nums.map(|v| fmt_f64(*v)));
        push_state(&mut row, &log.vehicle[k]);
        push_state(&mut row, &log.reference[k]);
        if with_ode {
            row.extend(log.zeta_ode[k].iter().map(|v| fmt_f64(*v)));
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// The columns of a logged run needed to re-check containment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoggedErrors {
    pub t: Vec<f64>,
    pub zeta: Vec<Vector9<f64>>,
    pub omega_err: Vec<Vector3<f64>>,
}

impl From<&SimLog> for LoggedErrors {
    fn from(log: &SimLog) -> Self {
        Self { t: log.t.clone(), zeta: log.zeta.clone(), omega_err: log.omega_err.clone() }
    }
}

pub fn read_log_csv<R: Read>(r: R) -> Result<LoggedErrors> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("log is missing column `{name}`")))
    };
    let t_col = col("t")?;
    let z_cols: Vec<usize> = ZETA.iter().map(|c| col(&format!("zeta_{c}"))).collect::<Result<_>>()?;
    let w_cols: Vec<usize> = XYZ.iter().map(|c| col(&format!("omega_err_{c}"))).collect::<Result<_>>()?;
    let mut out = LoggedErrors::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidInput(format!("row {}: column {} is not a number", line + 2, headers.get(i).unwrap_or("?"))))
        };
        out.t.push(get(t_col)?);
        out.zeta.push(Vector9::from_iterator(z_cols.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?));
        out.omega_err.push(Vector3::from_iterator(w_cols.iter().map(|&i| get(i)).collect::<Result<Vec<_>>>()?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector4, Vector6};

    fn sample_log() -> SimLog {
        let mut log = SimLog::default();
        for k in 0..3 {
            let x = k as f64;
            log.t.push(x * 0.1);
            log.zeta.push(Vector9::from_fn(|i, _| x / 3.0 + i as f64 * 1e-17));
            log.omega_err.push(Vector3::new(0.1, 0.2, x));
            log.u.push(Vector4::new(1.0, 2.0, 3.0, 4.0));
            log.moment.push(Vector3::zeros());
            log.disturbance.push(Vector6::repeat(0.1 * x));
            log.lyap_zeta.push(x);
            log.lyap_omega.push(0.5);
            log.vehicle.push(GroupState::identity());
            log.reference.push(GroupState::identity());
        }
        log
    }

    #[test]
    fn roundtrip_is_exact() {
        let log = sample_log();
        let mut buf = Vec::new();
        write_log_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), header(false).len());
        assert_eq!(text.lines().count(), 4);
        let back = read_log_csv(&buf[..]).unwrap();
        assert_eq!(back.t, log.t);
        assert_eq!(back.zeta, log.zeta);
        assert_eq!(back.omega_err, log.omega_err);
    }

    #[test]
    fn missing_column_is_named() {
        let err = read_log_csv("t,zeta_px\n0,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("zeta_py"));
    }
}
