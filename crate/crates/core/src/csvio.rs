//! Line-oriented CSV files for landmark sets, keyframe trajectories and
//! dense matrices. Comma separated, LF line endings, mandatory header, and
//! floats written with 17 significant digits so files round-trip bitwise.

use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::sim::{Landmark, Trajectory};

pub const LANDMARK_HEADER: [&str; 6] = ["id", "x", "y", "z", "score", "track_prob"];

pub const KEYFRAME_HEADER: [&str; 16] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22",
];

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parameter(format!(
            "unexpected CSV header {:?}, expected {:?}",
            found.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

fn parse_f64(field: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parameter(format!("line {line}: `{field}` is not a number")))
}

pub fn write_landmarks<W: Write>(landmarks: &[Landmark], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(LANDMARK_HEADER)?;
    for lm in landmarks {
        let p = lm.position;
        w.write_record([
            lm.id.to_string(),
            fmt(p.x),
            fmt(p.y),
            fmt(p.z),
            fmt(lm.score),
            fmt(lm.track_prob),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_landmarks<R: Read>(input: R) -> Result<Vec<Landmark>> {
    let mut r = reader(input);
    check_header(r.headers()?, &LANDMARK_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("line {line}: bad landmark id `{}`", &rec[0])))?;
        let v: Vec<f64> = (1..6).map(|i| parse_f64(&rec[i], line)).collect::<Result<_>>()?;
        if !(0.0..=1.0).contains(&v[4]) {
            return Err(Error::Parameter(format!("line {line}: track_prob {} outside [0, 1]", v[4])));
        }
        out.push(Landmark {
            id,
            position: Vector3::new(v[0], v[1], v[2]),
            score: v[3],
            track_prob: v[4],
        });
    }
    Ok(out)
}

/// One row per keyframe: time, position, velocity and the world-from-body
/// rotation in row-major order.
pub fn write_keyframes<W: Write>(trajectory: &Trajectory, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(KEYFRAME_HEADER)?;
    for k in 0..trajectory.num_keyframes() {
        let p = trajectory.positions[k];
        let v = trajectory.velocities[k];
        let r = trajectory.rotations[k];
        let mut row = vec![fmt(trajectory.keyframe_times[k])];
        row.extend(p.iter().chain(v.iter()).map(|&x| fmt(x)));
        for i in 0..3 {
            row.extend((0..3).map(|j| fmt(r[(i, j)])));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

pub fn read_keyframes<R: Read>(input: R) -> Result<Vec<Keyframe>> {
    let mut r = reader(input);
    check_header(r.headers()?, &KEYFRAME_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let v: Vec<f64> = rec.iter().map(|f| parse_f64(f, line)).collect::<Result<_>>()?;
        out.push(Keyframe {
            t: v[0],
            position: Vector3::new(v[1], v[2], v[3]),
            velocity: Vector3::new(v[4], v[5], v[6]),
            rotation: Matrix3::from_row_slice(&v[7..16]),
        });
    }
    Ok(out)
}

/// Dense matrix with a `c0..c{n-1}` header and one row per matrix row.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record((0..m.ncols()).map(|j| format!("c{j}")))?;
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| fmt(m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut r = reader(input);
    let ncols = r.headers()?.len();
    let mut data = Vec::new();
    let mut nrows = 0;
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        for f in rec.iter() {
            data.push(parse_f64(f, line)?);
        }
        nrows += 1;
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{make_circular_trajectory, sample_landmarks, Aabb};

    #[test]
    fn landmarks_round_trip_bitwise() {
        let bounds = Aabb::new(Vector3::new(-3.0, -2.0, -1.0), Vector3::new(5.0, 4.0, 3.0));
        let mut lms = sample_landmarks(25, bounds, (0.0, 1.0), 17).unwrap();
        lms[3].track_prob = 0.1 + 0.2;
        let mut buf = Vec::new();
        write_landmarks(&lms, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,x,y,z,score,track_prob\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_landmarks(&buf[..]).unwrap(), lms);
    }

    #[test]
    fn keyframes_round_trip() {
        let traj = make_circular_trajectory(10.0, 0.2, 1.0, 0.1, 6.0, 0.4, 0.01).unwrap();
        let mut buf = Vec::new();
        write_keyframes(&traj, &mut buf).unwrap();
        let kfs = read_keyframes(&buf[..]).unwrap();
        assert_eq!(kfs.len(), traj.num_keyframes());
        for (k, kf) in kfs.iter().enumerate() {
            assert_eq!(kf.t, traj.keyframe_times[k]);
            assert_eq!(kf.position, traj.positions[k]);
            assert_eq!(kf.velocity, traj.velocities[k]);
            assert_eq!(kf.rotation, traj.rotations[k]);
        }
    }

    #[test]
    fn matrix_round_trip_and_bad_input() {
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0) - 1e-300);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(read_matrix(&buf[..]).unwrap(), m);

        assert!(read_landmarks("id,x,y\n0,1,2\n".as_bytes()).is_err());
        let bad = "id,x,y,z,score,track_prob\n0,1,2,3,0.5,1.5\n";
        assert!(read_landmarks(bad.as_bytes()).is_err());
        let bad = "id,x,y,z,score,track_prob\n0,1,oops,3,0.5,1\n";
        assert!(read_landmarks(bad.as_bytes()).is_err());
    }
}
