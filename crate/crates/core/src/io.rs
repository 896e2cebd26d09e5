//! File formats shared with external tooling.
//!
//! Every file carries a schema tag: CSVs as a leading `# schema:` comment
//! (readers skip comment lines), JSON as a top-level `schema` field.
//! Floats are written in shortest round-trip form so identical runs produce
//! byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use crate::abm::SessionRecord;
use crate::dynamics::{Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::spectral::Spectrum;

pub const TRAJECTORY_SCHEMA: &str = "trajectory/v1";
pub const SESSIONS_SCHEMA: &str = "sessions/v1";
pub const SPECTRUM_SCHEMA: &str = "spectrum/v1";
pub const SWEEP_SCHEMA: &str = "eigencycle-sweep/v1";
pub const MEASURED_SCHEMA: &str = "measured-sets/v1";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Lines of a CSV body with 1-based line numbers, comments and blanks skipped.
fn csv_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

// ---------------------------------------------------------------------------
// trajectories: `t,x1,x2,x3,x4` plus a JSON metadata sidecar

#[derive(Debug, Serialize, Deserialize)]
struct TrajectorySidecar {
    schema: String,
    dt: f64,
    t0: f64,
    #[serde(flatten)]
    meta: TrajectoryMeta,
}

/// Sidecar path convention: `orbit.csv` -> `orbit.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn write_trajectory_csv(path: &Path, t: &Trajectory) -> Result<()> {
    let mut out = String::with_capacity(t.len() * 48);
    out.push_str(&format!("# schema: {TRAJECTORY_SCHEMA}\n"));
    out.push_str("t,x1,x2,x3,x4\n");
    for (i, s) in t.samples.iter().enumerate() {
        out.push_str(&format!("{},{},{},{},{}\n", t.time_of(i), s[0], s[1], s[2], s[3]));
    }
    write_file(path, &out)?;

    let sidecar = TrajectorySidecar {
        schema: TRAJECTORY_SCHEMA.into(),
        dt: t.dt,
        t0: t.t0,
        meta: t.meta.clone(),
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write_file(&sidecar_path(path), &(json + "\n"))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = read_file(path)?;
    let mut lines = csv_lines(&text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 0, detail: "empty trajectory file".into() })?;
    if header != "t,x1,x2,x3,x4" {
        return Err(Error::Parse {
            line: line_no,
            detail: format!("expected header t,x1,x2,x3,x4, got {header:?}"),
        });
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse { line, detail: format!("expected 5 fields, got {}", fields.len()) });
        }
        let mut nums = [0.0; 5];
        for (k, f) in fields.iter().enumerate() {
            nums[k] = f
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line, detail: format!("field {}: {e}", k + 1) })?;
        }
        times.push(nums[0]);
        samples.push(Vector4::new(nums[1], nums[2], nums[3], nums[4]));
    }
    if samples.len() < 2 {
        return Err(Error::Parse { line: 0, detail: "trajectory needs at least 2 rows".into() });
    }

    let meta_path = sidecar_path(path);
    let (dt, t0, meta) = if meta_path.exists() {
        let sc: TrajectorySidecar = serde_json::from_str(&read_file(&meta_path)?)
            .map_err(|e| Error::Parse { line: 0, detail: format!("{}: {e}", meta_path.display()) })?;
        (sc.dt, sc.t0, sc.meta)
    } else {
        (times[1] - times[0], times[0], TrajectoryMeta::default())
    };
    Trajectory::new(samples, dt, t0, meta)
}

// ---------------------------------------------------------------------------
// session records: `session_id,period,n1,n2,n3,n4`

pub fn write_sessions_csv(path: &Path, records: &[SessionRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# schema: {SESSIONS_SCHEMA}\n"));
    out.push_str("session_id,period,n1,n2,n3,n4\n");
    for r in records {
        for (i, c) in r.periods.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.session_id, i + 1, c[0], c[1], c[2], c[3]));
        }
    }
    write_file(path, &out)
}

/// Parses and validates session records. Every row of a session must carry
/// the same population size and periods must be consecutive from 1.
pub fn read_sessions_csv(path: &Path, a: f64) -> Result<Vec<SessionRecord>> {
    let text = read_file(path)?;
    let mut lines = csv_lines(&text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 0, detail: "empty sessions file".into() })?;
    if header != "session_id,period,n1,n2,n3,n4" {
        return Err(Error::Parse {
            line: line_no,
            detail: format!("expected header session_id,period,n1,n2,n3,n4, got {header:?}"),
        });
    }

    let mut records: Vec<SessionRecord> = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse { line, detail: format!("expected 6 fields, got {}", fields.len()) });
        }
        let id = fields[0].trim();
        let period: usize = fields[1]
            .trim()
            .parse()
            .map_err(|e| Error::Parse { line, detail: format!("period: {e}") })?;
        let mut counts = [0u32; 4];
        for k in 0..4 {
            counts[k] = fields[k + 2]
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line, detail: format!("n{}: {e}", k + 1) })?;
        }
        let total: u32 = counts.iter().sum();

        match records.last_mut() {
            Some(r) if r.session_id == id => {
                if total as usize != r.population_size {
                    return Err(Error::Parse {
                        line,
                        detail: format!(
                            "session {id}: counts sum to {total}, expected population {}",
                            r.population_size
                        ),
                    });
                }
                if period != r.periods.len() + 1 {
                    return Err(Error::Parse {
                        line,
                        detail: format!(
                            "session {id}: period {period} out of order (expected {})",
                            r.periods.len() + 1
                        ),
                    });
                }
                r.periods.push(counts);
            }
            _ => {
                if records.iter().any(|r| r.session_id == id) {
                    return Err(Error::Parse {
                        line,
                        detail: format!("session {id}: rows are not contiguous"),
                    });
                }
                if period != 1 {
                    return Err(Error::Parse {
                        line,
                        detail: format!("session {id}: first period is {period}, expected 1"),
                    });
                }
                if total == 0 {
                    return Err(Error::Parse {
                        line,
                        detail: format!("session {id}: empty population"),
                    });
                }
                records.push(SessionRecord {
                    session_id: id.to_string(),
                    a,
                    population_size: total as usize,
                    periods: vec![counts],
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Parse { line: 0, detail: "no session rows".into() });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// spectra: eigenvalues as [re, im], vectors as arrays of [re, im]

#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub schema: String,
    pub source: String,
    pub jacobian: [[f64; 4]; 4],
    pub pairs: Vec<EigenPairJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EigenPairJson {
    pub eigenvalue: [f64; 2],
    pub eigenvector: [[f64; 2]; 4],
}

impl From<&Spectrum> for SpectrumJson {
    fn from(s: &Spectrum) -> Self {
        let mut jacobian = [[0.0; 4]; 4];
        for (r, row) in jacobian.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = s.jacobian[(r, c)];
            }
        }
        SpectrumJson {
            schema: SPECTRUM_SCHEMA.into(),
            source: format!("{:?}", s.source).to_lowercase(),
            jacobian,
            pairs: s
                .pairs
                .iter()
                .map(|p| EigenPairJson {
                    eigenvalue: [p.value.re, p.value.im],
                    eigenvector: [
                        [p.vector[0].re, p.vector[0].im],
                        [p.vector[1].re, p.vector[1].im],
                        [p.vector[2].re, p.vector[2].im],
                        [p.vector[3].re, p.vector[3].im],
                    ],
                })
                .collect(),
        }
    }
}

pub fn write_spectrum_json(path: &Path, s: &Spectrum) -> Result<()> {
    let json = serde_json::to_string_pretty(&SpectrumJson::from(s)).expect("spectrum serializes");
    write_file(path, &(json + "\n"))
}

// ---------------------------------------------------------------------------
// per-subspace ellipse descriptors for external plotting

pub const ELLIPSES_SCHEMA: &str = "lissajous/v1";

#[derive(Debug, Serialize)]
struct EllipsesJson<'a> {
    schema: &'static str,
    subspaces: &'a [crate::eigencycle::SubspaceEllipse],
}

pub fn write_ellipses_json(path: &Path, ellipses: &[crate::eigencycle::SubspaceEllipse]) -> Result<()> {
    let doc = EllipsesJson { schema: ELLIPSES_SCHEMA, subspaces: ellipses };
    let json = serde_json::to_string_pretty(&doc).expect("ellipses serialize");
    write_file(path, &(json + "\n"))
}

// ---------------------------------------------------------------------------
// eigencycle sweep: `a,s12,s13,s14,s23,s24,s34`

pub fn write_sweep_csv(path: &Path, rows: &[(f64, crate::eigencycle::EigencycleSet)]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# schema: {SWEEP_SCHEMA}\n"));
    out.push_str("a,s12,s13,s14,s23,s24,s34\n");
    for (a, set) in rows {
        let v = &set.values;
        out.push_str(&format!("{a},{},{},{},{},{},{}\n", v[0], v[1], v[2], v[3], v[4], v[5]));
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// measured / theoretical set reports:
// `source,a,L12,L13,L14,L23,L24,L34,axis1,axis3,axis2,n_samples`

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredRow {
    pub source: String,
    pub a: f64,
    pub values: [f64; 6],
    /// Rotation axis in (x1, x3, x2) order.
    pub axis: [f64; 3],
    pub n_samples: usize,
}

pub fn write_measured_csv(path: &Path, rows: &[MeasuredRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# schema: {MEASURED_SCHEMA}\n"));
    out.push_str("source,a,L12,L13,L14,L23,L24,L34,axis1,axis3,axis2,n_samples\n");
    for r in rows {
        let v = &r.values;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.source, r.a, v[0], v[1], v[2], v[3], v[4], v[5], r.axis[0], r.axis[1], r.axis[2], r.n_samples
        ));
    }
    write_file(path, &out)
}

pub fn read_measured_csv(path: &Path) -> Result<Vec<MeasuredRow>> {
    let text = read_file(path)?;
    let mut lines = csv_lines(&text);
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 0, detail: "empty report file".into() })?;
    if header != "source,a,L12,L13,L14,L23,L24,L34,axis1,axis3,axis2,n_samples" {
        return Err(Error::Parse { line: line_no, detail: format!("unexpected header {header:?}") });
    }
    let mut rows = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse { line, detail: format!("expected 12 fields, got {}", fields.len()) });
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line, detail: format!("field {}: {e}", k + 1) })
        };
        rows.push(MeasuredRow {
            source: fields[0].trim().to_string(),
            a: num(1)?,
            values: [num(2)?, num(3)?, num(4)?, num(5)?, num(6)?, num(7)?],
            axis: [num(8)?, num(9)?, num(10)?],
            n_samples: fields[11]
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line, detail: format!("n_samples: {e}") })?,
        });
    }
    Ok(rows)
}

/// Inserts or replaces rows keyed by (source, a), keeping the file sorted so
/// repeated runs are byte-identical.
pub fn merge_measured_csv(path: &Path, new_rows: &[MeasuredRow]) -> Result<()> {
    let mut rows = if path.exists() { read_measured_csv(path)? } else { Vec::new() };
    for nr in new_rows {
        rows.retain(|r| !(r.source == nr.source && r.a == nr.a));
        rows.push(nr.clone());
    }
    rows.sort_by(|x, y| {
        x.a.partial_cmp(&y.a).unwrap().then_with(|| x.source.cmp(&y.source))
    });
    write_measured_csv(path, &rows)
}
