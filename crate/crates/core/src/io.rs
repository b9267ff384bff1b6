//! Plain-text artifacts: CSV tables with 17 significant digits, JSON
//! documents and the run manifest.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebraic::SkewPolygon;
use crate::error::{Result, VfeError};
use crate::spectral::{GridSpec, SpectralState, Trajectory};

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| VfeError::Parse(format!("not a number: {field:?}")))
}

fn parse_usize(field: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| VfeError::Parse(format!("not an index: {field:?}")))
}

fn csv_err(e: csv::Error) -> VfeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => VfeError::Io(io),
        other => VfeError::Parse(format!("{other:?}")),
    }
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(VfeError::Parse(format!("unexpected columns {found:?}, want {header:?}")));
    }
    r.records().map(|rec| rec.map_err(csv_err)).collect()
}

fn vec3(rec: &csv::StringRecord, first: usize) -> Result<Vector3<f64>> {
    Ok(Vector3::new(parse_f64(&rec[first])?, parse_f64(&rec[first + 1])?, parse_f64(&rec[first + 2])?))
}

pub const POLYGON_COLUMNS: [&str; 9] = ["k", "s_k", "X1", "X2", "X3", "T1", "T2", "T3", "virtual_flag"];
pub const TRAJECTORY_COLUMNS: [&str; 5] = ["t", "X1", "X2", "X3", "h"];
pub const STATE_COLUMNS: [&str; 8] = ["j", "s", "X1", "X2", "X3", "T1", "T2", "T3"];

/// One vertex of a polygon table. `x` includes the polygon's vertical offset;
/// `t` is the tangent on the side that starts at the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonRow {
    pub k: usize,
    pub s: f64,
    pub x: Vector3<f64>,
    pub t: Vector3<f64>,
    pub virtual_vertex: bool,
}

pub fn polygon_rows(poly: &SkewPolygon) -> Vec<PolygonRow> {
    (0..poly.len())
        .map(|k| {
            let mut x = poly.vertices[k];
            x.z += poly.vertical_offset;
            PolygonRow { k, s: poly.arc_length(k), x, t: poly.tangents[k], virtual_vertex: poly.virtual_vertex[k] }
        })
        .collect()
}

pub fn write_polygon_csv<W: Write>(poly: &SkewPolygon, out: W) -> Result<()> {
    let rows = polygon_rows(poly).into_iter().map(|r| {
        let mut rec = vec![r.k.to_string(), fmt17(r.s)];
        rec.extend(r.x.iter().chain(r.t.iter()).map(|v| fmt17(*v)));
        rec.push(u8::from(r.virtual_vertex).to_string());
        rec
    });
    write_table(out, &POLYGON_COLUMNS, rows)
}

pub fn read_polygon_csv<R: Read>(input: R) -> Result<Vec<PolygonRow>> {
    read_table(input, &POLYGON_COLUMNS)?
        .iter()
        .map(|rec| {
            let flag = match rec[8].trim() {
                "0" => false,
                "1" => true,
                other => return Err(VfeError::Parse(format!("virtual_flag must be 0 or 1, got {other:?}"))),
            };
            Ok(PolygonRow {
                k: parse_usize(&rec[0])?,
                s: parse_f64(&rec[1])?,
                x: vec3(rec, 2)?,
                t: vec3(rec, 5)?,
                virtual_vertex: flag,
            })
        })
        .collect()
}

/// `X(0, t)` and the centre height at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySamples {
    pub times: Vec<f64>,
    pub corner: Vec<Vector3<f64>>,
    pub height: Vec<f64>,
}

impl From<&Trajectory> for TrajectorySamples {
    fn from(t: &Trajectory) -> Self {
        TrajectorySamples { times: t.times.clone(), corner: t.corner.clone(), height: t.height.clone() }
    }
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let rows = (0..traj.times.len()).map(|k| {
        let c = traj.corner[k];
        vec![fmt17(traj.times[k]), fmt17(c.x), fmt17(c.y), fmt17(c.z), fmt17(traj.height[k])]
    });
    write_table(out, &TRAJECTORY_COLUMNS, rows)
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectorySamples> {
    let recs = read_table(input, &TRAJECTORY_COLUMNS)?;
    let mut s = TrajectorySamples {
        times: Vec::with_capacity(recs.len()),
        corner: Vec::with_capacity(recs.len()),
        height: Vec::with_capacity(recs.len()),
    };
    for rec in &recs {
        s.times.push(parse_f64(&rec[0])?);
        s.corner.push(vec3(rec, 1)?);
        s.height.push(parse_f64(&rec[4])?);
    }
    if s.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VfeError::Parse("trajectory times are not strictly increasing".into()));
    }
    Ok(s)
}

pub fn write_state_csv<W: Write>(state: &SpectralState, out: W) -> Result<()> {
    let rows = (0..state.x.len()).map(|j| {
        let mut rec = vec![j.to_string(), fmt17(state.arc_length(j))];
        rec.extend(state.x[j].iter().chain(state.t[j].iter()).map(|v| fmt17(*v)));
        rec
    });
    write_table(out, &STATE_COLUMNS, rows)
}

/// Reads a state table; `m`, `n` and `time` come from the run manifest.
pub fn read_state_csv<R: Read>(input: R, m: u32, n: usize, time: f64) -> Result<SpectralState> {
    let recs = read_table(input, &STATE_COLUMNS)?;
    if recs.len() * m as usize != n {
        return Err(VfeError::Parse(format!("{} rows do not cover N / M = {n} / {m} nodes", recs.len())));
    }
    let mut state = SpectralState { m, n, time, x: Vec::with_capacity(recs.len()), t: Vec::with_capacity(recs.len()) };
    for (j, rec) in recs.iter().enumerate() {
        if parse_usize(&rec[0])? != j {
            return Err(VfeError::Parse(format!("row {j} is out of order")));
        }
        state.x.push(vec3(rec, 2)?);
        state.t.push(vec3(rec, 5)?);
    }
    Ok(state)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub index: usize,
    pub step: usize,
    pub time: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub file: String,
    pub sha256: String,
}

/// Describes one simulation run and the files it produced. Paths are
/// relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub producer: String,
    pub spec: GridSpec,
    pub trajectory_file: String,
    pub dumps: Vec<DumpRecord>,
    pub checksums: Vec<FileChecksum>,
    /// Not covered by the determinism guarantee of the data files.
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_slice(&fs::read(path)?)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(VfeError::Parse(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Re-hashes every listed file under `dir` and reports the first mismatch.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for c in &self.checksums {
            let actual = sha256_file(&dir.join(&c.file))?;
            if actual != c.sha256 {
                return Err(VfeError::Parse(format!("checksum mismatch for {}", c.file)));
            }
        }
        Ok(())
    }

    pub fn load_trajectory(&self, dir: &Path) -> Result<TrajectorySamples> {
        read_trajectory_csv(fs::File::open(dir.join(&self.trajectory_file))?)
    }

    pub fn load_dump(&self, dir: &Path, dump: &DumpRecord) -> Result<SpectralState> {
        read_state_csv(fs::File::open(dir.join(&dump.file))?, self.spec.m, self.spec.n, dump.time)
    }
}

/// Writes `trajectory.csv`, one `state_<index>.csv` per dump and
/// `manifest.json` into `dir`, returning the manifest path.
pub fn save_run(dir: &Path, traj: &Trajectory, wall_time_seconds: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut checksums = Vec::new();
    let mut record = |name: &str, bytes: Vec<u8>| -> Result<()> {
        fs::write(dir.join(name), &bytes)?;
        checksums.push(FileChecksum { file: name.to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    };
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf)?;
    record("trajectory.csv", buf)?;
    let dt = traj.spec.dt();
    let mut dumps = Vec::with_capacity(traj.dumps.len());
    for (index, state) in traj.dumps.iter().enumerate() {
        let file = format!("state_{index}.csv");
        let mut buf = Vec::new();
        write_state_csv(state, &mut buf)?;
        record(&file, buf)?;
        dumps.push(DumpRecord { index, step: (state.time / dt).round() as usize, time: state.time, file });
    }
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        producer: format!("vfe {}", env!("CARGO_PKG_VERSION")),
        spec: traj.spec,
        trajectory_file: "trajectory.csv".into(),
        dumps,
        checksums,
        wall_time_seconds,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

/// Reads a run back from its manifest after checking every checksum.
pub fn load_run(manifest_path: &Path) -> Result<Trajectory> {
    let manifest = RunManifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    manifest.verify(dir)?;
    let samples = manifest.load_trajectory(dir)?;
    let dumps = manifest
        .dumps
        .iter()
        .map(|d| manifest.load_dump(dir, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        spec: manifest.spec,
        times: samples.times,
        corner: samples.corner,
        height: samples.height,
        dumps,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::{build_polygon, RationalTime};
    use crate::spectral::{run, GridSpec};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn polygon_tables_round_trip() {
        let mut poly = build_polygon(&RationalTime::new(3, 1, 4).unwrap()).unwrap();
        poly.vertical_offset = 0.25;
        let mut buf = Vec::new();
        write_polygon_csv(&poly, &mut buf).unwrap();
        let rows = read_polygon_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, polygon_rows(&poly));
        assert_eq!(rows.iter().filter(|r| r.virtual_vertex).count(), 6);
        let json = serde_json::to_string(&poly).unwrap();
        let back: SkewPolygon = serde_json::from_str(&json).unwrap();
        assert_eq!(back, poly);
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(read_trajectory_csv("t,X1,X2\n0,1,2\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,X1,X2,X3,h\n0,1,2,3,x\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,X1,X2,X3,h\n1,0,0,0,0\n0,0,0,0,0\n".as_bytes()).is_err());
        assert!(read_polygon_csv("k,s_k,X1,X2,X3,T1,T2,T3,virtual_flag\n0,0,0,0,0,1,0,0,2\n".as_bytes()).is_err());
    }

    #[test]
    fn run_directory_round_trip() {
        let spec = GridSpec::with_final_time(3, 8, 40, 0.05).unwrap();
        let traj = run(&spec, &[0.0, 0.025, 0.05]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = save_run(dir.path(), &traj, 0.5).unwrap();
        let manifest = RunManifest::load(&path).unwrap();
        manifest.verify(dir.path()).unwrap();
        assert_eq!(manifest.spec, spec);
        let samples = manifest.load_trajectory(dir.path()).unwrap();
        assert_eq!(samples, TrajectorySamples::from(&traj));
        for (d, state) in manifest.dumps.iter().zip(&traj.dumps) {
            assert_eq!(&manifest.load_dump(dir.path(), d).unwrap(), state);
        }
        let back = load_run(&path).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.dumps, traj.dumps);
        fs::write(dir.path().join("state_1.csv"), "tampered").unwrap();
        assert!(manifest.verify(dir.path()).is_err());
        assert!(load_run(&path).is_err());
    }

    #[test]
    fn identical_runs_give_identical_files() {
        let spec = GridSpec::with_final_time(4, 8, 30, 0.03).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_run(a.path(), &run(&spec, &[0.01]).unwrap(), 1.0).unwrap();
        save_run(b.path(), &run(&spec, &[0.01]).unwrap(), 2.0).unwrap();
        for f in ["trajectory.csv", "state_0.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }
}
