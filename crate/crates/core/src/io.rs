//! Trajectory CSV: fixed column order, 17 significant digits per value.
//! The averaged rotation is not stored; readers rebuild it from `R` and `t`.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::geometry::{Mat3, Vec3};
use crate::kinematics::{spin, SwimmerParams};
use crate::sim::{Trajectory, TrajectoryRow};

pub const TRAJECTORY_HEADER: [&str; 21] = [
    "t", "px", "py", "pz", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "s", "zeta1", "zeta2",
    "rho", "eta", "pbx", "pby", "pbz",
];

/// 17 significant digits in scientific notation; round-trips every f64.
#[inline]
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{}", TRAJECTORY_HEADER.join(","))?;
    let mut fields: Vec<f64> = Vec::with_capacity(TRAJECTORY_HEADER.len());
    for row in &traj.rows {
        fields.clear();
        fields.push(row.t);
        fields.extend(row.p.iter());
        for i in 0..3 {
            for j in 0..3 {
                fields.push(row.r[(i, j)]);
            }
        }
        fields.extend([row.s, row.zeta1, row.zeta2, row.rho, row.eta]);
        fields.extend(row.p_bar.iter());
        write_row(&mut out, &fields)?;
    }
    out.flush()
}

/// Writes a header line and numeric rows in the trajectory number format.
pub fn write_columns<W, I>(out: W, header: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        write_row(&mut out, &row)?;
    }
    out.flush()
}

fn write_row<W: Write>(out: &mut W, fields: &[f64]) -> io::Result<()> {
    for (k, x) in fields.iter().enumerate() {
        if k > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{x:.16e}")?;
    }
    out.write_all(b"\n")
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("trajectory has no rows")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a trajectory CSV; `swimmer` supplies the spin used to rebuild `R̄`.
pub fn read_trajectory_csv<R: Read>(input: R, swimmer: &SwimmerParams) -> Result<Trajectory, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| CsvError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(CsvError::Malformed {
            line: 1,
            message: format!("expected header `{}`", TRAJECTORY_HEADER.join(",")),
        });
    }
    let mut traj = Trajectory::default();
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CsvError::Malformed { line, message };
        if record.len() != TRAJECTORY_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", TRAJECTORY_HEADER.len(), record.len())));
        }
        let mut v = [0.0; 21];
        for (k, field) in record.iter().enumerate() {
            v[k] = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("column `{}`: cannot parse `{field}`", TRAJECTORY_HEADER[k])))?;
        }
        let t = v[0];
        if let Some(prev) = traj.rows.last() {
            if !(t > prev.t) {
                return Err(bad(format!("time {t} does not increase")));
            }
        }
        let r = Mat3::from_row_slice(&v[4..13]);
        traj.rows.push(TrajectoryRow {
            t,
            p: Vec3::new(v[1], v[2], v[3]),
            r,
            s: v[13],
            zeta1: v[14],
            zeta2: v[15],
            rho: v[16],
            eta: v[17],
            p_bar: Vec3::new(v[18], v[19], v[20]),
            r_bar: r * spin(swimmer, t).transpose(),
        });
    }
    if traj.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(traj)
}
