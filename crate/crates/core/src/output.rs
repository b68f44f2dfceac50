//! CSV and JSON writers. Floats are written with 17 significant digits so
//! they parse back to the same bits; lines end with `\n`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analysis::EnsembleStats;
use crate::error::{Result, SicaError};
use crate::integrator::Trajectory;

#[inline]
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    if traj.is_empty() {
        return Err(SicaError::domain("refusing to write an empty trajectory"));
    }
    let mut out = String::with_capacity(traj.len() * 140);
    out.push_str("t,S,I,C,A,N\n");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(x.s),
            fmt_f64(x.i),
            fmt_f64(x.c),
            fmt_f64(x.a),
            fmt_f64(x.total())
        );
    }
    Ok(out)
}

pub fn stats_csv(stats: &EnsembleStats) -> String {
    let mut out = String::from("t");
    for c in &stats.compartments {
        let l = c.compartment.label();
        let _ = write!(out, ",mean_{l},var_{l},q025_{l},q50_{l},q975_{l}");
    }
    out.push('\n');
    for (k, t) in stats.times.iter().enumerate() {
        out.push_str(&fmt_f64(*t));
        for c in &stats.compartments {
            for col in [&c.mean, &c.variance, &c.q025, &c.q50, &c.q975] {
                out.push(',');
                out.push_str(&fmt_f64(col[k]));
            }
        }
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes to JSON");
    s.push('\n');
    s
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| SicaError::io(path, e))
}

/// Writes the `t,S,I,C,A,N` table. An empty trajectory is an error and no
/// file is created.
pub fn write_trajectory_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let text = trajectory_csv(traj)?;
    write_text(path, &text)
}

pub fn write_stats_csv(stats: &EnsembleStats, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &stats_csv(stats))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &to_json(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SicaState;

    #[test]
    fn csv_layout() {
        let tr = Trajectory::from_samples(
            vec![0.0, 0.5],
            vec![SicaState::new(1.0, 0.1, 0.2, 0.3), SicaState::new(0.9, 0.2, 0.2, 0.3)],
        )
        .unwrap();
        let csv = trajectory_csv(&tr).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,S,I,C,A,N");
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
        assert_eq!(lines.len(), 3);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        for line in &lines[1..] {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((v[5] - (v[1] + v[2] + v[3] + v[4])).abs() <= 1e-12 * v[5]);
        }
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 799.199_200_000_000_1, 1e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn empty_trajectory_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let tr = Trajectory::from_samples(vec![], vec![]).unwrap();
        assert!(write_trajectory_csv(&tr, &path).is_err());
        assert!(!path.exists());
    }
}
