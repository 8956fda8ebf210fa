//! Artifact files: atomic writes, fixed-precision CSV, the trajectory file
//! format and its reader.

use anyhow::{bail, Context};
use binormal_core::curve::{yh_at, CurveTrajectory, InvariantDrift};
use binormal_core::geom3::{apply_a, apply_plus_a};
use binormal_core::selfsimilar::TraceAtInfinity;
use binormal_core::Vec3;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const TRAJECTORY_COLUMNS: [&str; 10] = ["s", "G1", "G2", "G3", "T1", "T2", "T3", "c", "h", "y"];

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_text(columns: &[&str], rows: &[Vec<f64>], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_num(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result blocks serialize to JSON");
    s.push('\n');
    s
}

/// An output directory.
#[derive(Clone, Debug)]
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutDir { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn sub(&self, name: &str) -> OutDir {
        OutDir::new(self.root.join(name))
    }

    pub fn text(&self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let p = self.path(name);
        write_atomic(&p, text.as_bytes())?;
        Ok(p)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.text(name, &json_text(value))
    }
}

/// Header of a trajectory file, stored as one JSON comment line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub a: f64,
    pub alpha: f64,
    pub c0: f64,
    pub g0: Vec3,
    pub t0: Vec3,
    pub s_max: f64,
    pub tol: f64,
    pub ds: f64,
    /// Invariant defects over the written rows.
    pub drift: InvariantDrift,
    /// Invariant defects over the accepted integration steps.
    pub step_drift: InvariantDrift,
    pub steps: usize,
    pub trace: Option<TraceAtInfinity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub header: TrajectoryHeader,
    /// `(s, G1, G2, G3, T1, T2, T3, c, h, y)`.
    pub rows: Vec<[f64; 10]>,
}

fn row_drift(a: f64, alpha: f64, rows: &[[f64; 10]]) -> InvariantDrift {
    let mut d = InvariantDrift::default();
    for r in rows {
        let (s, g, t, c) = (r[0], Vec3::new(r[1], r[2], r[3]), Vec3::new(r[4], r[5], r[6]), r[7]);
        let fi = (apply_plus_a(a, g).dot(t) - s).abs();
        let e = 0.25 * apply_a(a, t).cross(t).norm_sq() + 0.25 * (c * c + alpha).powi(2);
        d.unit_tangent = d.unit_tangent.max((t.norm() - 1.0).abs());
        d.first_integral = d.first_integral.max(fi);
        d.first_integral_rel = d.first_integral_rel.max(fi / (1.0 + s.abs()));
        d.curvature_law = d.curvature_law.max((c * c + a * t.z + alpha).abs());
        d.energy = d.energy.max((e - 0.25 * a * a).abs());
    }
    d
}

impl TrajectoryFile {
    /// Rows on the uniform grid `[-S, S]` with spacing close to `ds`.
    pub fn build(
        traj: &CurveTrajectory,
        ds: f64,
        trace: Result<TraceAtInfinity, String>,
    ) -> TrajectoryFile {
        let a = traj.a();
        let s_max = traj.s_max();
        let rows: Vec<[f64; 10]> = traj
            .uniform_samples(-s_max, s_max, ds)
            .iter()
            .map(|p| {
                let yh = yh_at(a, p);
                [
                    p.s,
                    p.g.x,
                    p.g.y,
                    p.g.z,
                    p.t.x,
                    p.t.y,
                    p.t.z,
                    p.tp.norm(),
                    yh.h,
                    yh.y,
                ]
            })
            .collect();
        let st = traj.state(0.0);
        let (trace, trace_error) = match trace {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e)),
        };
        // drift is taken over the rows as they will be read back
        let rounded: Vec<[f64; 10]> = rows
            .iter()
            .map(|r| r.map(|x| fmt_num(x).parse().unwrap()))
            .collect();
        let header = TrajectoryHeader {
            a,
            alpha: traj.params.alpha,
            c0: traj.params.c0,
            g0: st.g,
            t0: st.t,
            s_max,
            tol: traj.tol,
            ds,
            drift: row_drift(a, traj.params.alpha, &rounded),
            step_drift: traj.drift,
            steps: traj.n_steps(),
            trace,
            trace_error,
        };
        TrajectoryFile { header, rows }
    }

    pub fn to_text(&self) -> String {
        let header = serde_json::to_string(&self.header).expect("header serializes");
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.to_vec()).collect();
        csv_text(&TRAJECTORY_COLUMNS, &rows, &[header])
    }

    pub fn parse(text: &str) -> anyhow::Result<TrajectoryFile> {
        let mut lines = text.lines();
        let first = lines.next().context("empty trajectory file")?;
        let json = first.strip_prefix("# ").context("missing header line")?;
        let header: TrajectoryHeader = serde_json::from_str(json).context("bad header")?;
        let cols = lines.next().context("missing column line")?;
        if cols != TRAJECTORY_COLUMNS.join(",") {
            bail!("unexpected columns {cols:?}");
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("row {k}"))?;
            let row: [f64; 10] = vals
                .try_into()
                .map_err(|_| anyhow::anyhow!("row {k} does not have 10 columns"))?;
            rows.push(row);
        }
        let file = TrajectoryFile { header, rows };
        file.check()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> anyhow::Result<TrajectoryFile> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        TrajectoryFile::parse(&text)
    }

    /// Rows strictly increasing in `s`.
    pub fn check(&self) -> anyhow::Result<()> {
        if self.rows.is_empty() {
            bail!("no rows");
        }
        if let Some(k) = self.rows.windows(2).position(|w| !(w[1][0] > w[0][0])) {
            bail!("rows not increasing in s at row {}", k + 1);
        }
        Ok(())
    }

    /// Invariant defects recomputed from the rows.
    pub fn rescan_drift(&self) -> InvariantDrift {
        row_drift(self.header.a, self.header.alpha, &self.rows)
    }
}
