//! Trajectory CSV export and import.
//!
//! Header is `t,k,u,z1,z2,z,p_cum`, or `t,k,u1,u2,z1,z2,z,p_cum` for
//! dual-requirement runs. Values use `.` as the decimal separator and the
//! shortest representation that parses back to the identical float, so a
//! write/read round trip is lossless. Lines end with a line feed.

use super::{Sample, Trajectory};
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse `{value}` as a number")]
    BadNumber { line: usize, value: String },
    #[error("unrecognized header `{0}`")]
    BadHeader(String),
}

pub const HEADER_SINGLE: &str = "t,k,u,z1,z2,z,p_cum";
pub const HEADER_DUAL: &str = "t,k,u1,u2,z1,z2,z,p_cum";

pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory) -> io::Result<()> {
    if traj.dual_u {
        writeln!(out, "{HEADER_DUAL}")?;
        for s in &traj.samples {
            writeln!(out, "{},{},{},{},{},{},{},{}", s.t, s.k, s.u1, s.u2, s.z1, s.z2, s.z, s.p_cum)?;
        }
    } else {
        writeln!(out, "{HEADER_SINGLE}")?;
        for s in &traj.samples {
            writeln!(out, "{},{},{},{},{},{},{}", s.t, s.k, s.u1, s.z1, s.z2, s.z, s.p_cum)?;
        }
    }
    Ok(())
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, traj).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Read samples back from CSV. Only the sample table survives a round trip;
/// events, per-lesson work and per-class extras are not part of the format.
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Trajectory, CsvError> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(CsvError::BadHeader(String::new())),
    };
    let dual_u = match header.trim_end() {
        HEADER_SINGLE => false,
        HEADER_DUAL => true,
        other => return Err(CsvError::BadHeader(other.to_string())),
    };
    let expected = if dual_u { 8 } else { 7 };
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(CsvError::FieldCount { line: lineno, expected, found: fields.len() });
        }
        let num = |s: &str| -> Result<f64, CsvError> {
            s.parse().map_err(|_| CsvError::BadNumber { line: lineno, value: s.to_string() })
        };
        let t = num(fields[0])?;
        let k = num(fields[1])? as u8;
        let (u1, u2, rest) = if dual_u {
            (num(fields[2])?, num(fields[3])?, &fields[4..])
        } else {
            (num(fields[2])?, 0.0, &fields[3..])
        };
        samples.push(Sample {
            t,
            k,
            u1,
            u2,
            z1: num(rest[0])?,
            z2: num(rest[1])?,
            z: num(rest[2])?,
            p_cum: num(rest[3])?,
        });
    }
    Ok(Trajectory {
        dual_u,
        samples,
        per_lesson_work: Vec::new(),
        events: Vec::new(),
        focus: None,
        class_peaks: None,
        final_classes: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> Sample {
        Sample { t, k: 1, u1: 0.1 + t, u2: 0.0, z1: t / 3.0, z2: 0.0, z: t / 3.0, p_cum: t * t }
    }

    #[test]
    fn round_trip_is_bitwise_lossless() {
        let traj = Trajectory {
            dual_u: false,
            samples: vec![sample(0.0), sample(0.1), sample(1e-13), sample(42.424242424242)],
            per_lesson_work: vec![(0, 1.0)],
            events: Vec::new(),
            focus: None,
            class_peaks: None,
            final_classes: None,
        };
        let text = trajectory_to_csv(&traj);
        let back = read_trajectory_csv(text.as_bytes()).unwrap();
        assert_eq!(back.samples, traj.samples);
        assert!(!back.dual_u);
    }

    #[test]
    fn dual_header_round_trips() {
        let traj = Trajectory {
            dual_u: true,
            samples: vec![Sample { t: 0.5, k: 0, u1: 50.0, u2: 4.0, z1: 1.0, z2: 2.0, z: 3.0, p_cum: 0.25 }],
            per_lesson_work: Vec::new(),
            events: Vec::new(),
            focus: None,
            class_peaks: None,
            final_classes: None,
        };
        let text = trajectory_to_csv(&traj);
        assert!(text.starts_with(HEADER_DUAL));
        let back = read_trajectory_csv(text.as_bytes()).unwrap();
        assert_eq!(back.samples, traj.samples);
        assert!(back.dual_u);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            read_trajectory_csv("nope\n1,2,3".as_bytes()),
            Err(CsvError::BadHeader(_))
        ));
        let bad = format!("{HEADER_SINGLE}\n1,1,2\n");
        assert!(matches!(read_trajectory_csv(bad.as_bytes()), Err(CsvError::FieldCount { .. })));
        let bad = format!("{HEADER_SINGLE}\n1,1,x,0,0,0,0\n");
        assert!(matches!(read_trajectory_csv(bad.as_bytes()), Err(CsvError::BadNumber { .. })));
    }
}
