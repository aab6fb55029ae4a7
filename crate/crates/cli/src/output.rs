//! Artifact files: CSV tables, JSON summaries, gnuplot data and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use optdiv::hjb2d::{ActionSet, ValueField};
use optdiv::model::GridSpec;
use optdiv::solver1d::OneDimSolution;
use optdiv::solver2d::{PolicyField, RegionMap, Region, SolveReport};
use optdiv::{Error, Result};
use serde::{Deserialize, Serialize};

pub const VALUE_CSV: &str = "value.csv";
pub const POLICY_CSV: &str = "policy.csv";
pub const SUMMARY_2D: &str = "summary2d.json";
pub const REGIONS_DAT: &str = "regions.dat";
pub const REGIONS_GP: &str = "regions.gp";
pub const VALUE_1D_CSV: &str = "value1d.csv";
pub const BANDS_JSON: &str = "bands.json";

pub fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write(dir, name, &(body + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `n,m,x1,x2,v`; floats use the shortest representation that reads back exactly.
pub fn value_csv(v: &ValueField) -> String {
    let g = v.grid;
    let mut s = String::with_capacity(g.len() * 40);
    s.push_str("n,m,x1,x2,v\n");
    for n in 0..g.rows() {
        for m in 0..g.cols() {
            let _ = writeln!(s, "{n},{m},{},{},{}", g.x1(n), g.x2(m), v.get(n, m));
        }
    }
    s
}

/// `n,m,label,argmax`; the argmax set is written as `E0|E1`.
pub fn policy_csv(pol: &PolicyField, map: &RegionMap) -> String {
    let g = pol.grid;
    let mut s = String::with_capacity(g.len() * 16);
    s.push_str("n,m,label,argmax\n");
    for n in 0..g.rows() {
        for m in 0..g.cols() {
            let _ = writeln!(s, "{n},{m},{},{}", map.get(n, m).name(), pol.get(n, m));
        }
    }
    s
}

fn csv_rows<'a>(text: &'a str, header: &str, path: &Path) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::Io(format!("{}: expected header '{header}'", path.display())));
    }
    Ok(lines.enumerate().map(|(i, l)| (i + 2, l.split(',').collect())))
}

fn field<T: std::str::FromStr>(cols: &[&str], k: usize, line: usize, path: &Path) -> Result<T> {
    cols.get(k)
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::Io(format!("{}:{line}: bad column {}", path.display(), k + 1)))
}

/// Reads a value table written by [`value_csv`] for the given grid.
pub fn read_value_csv(path: &Path, grid: GridSpec) -> Result<ValueField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut vals = vec![f64::NAN; grid.len()];
    let mut count = 0;
    for (line, cols) in csv_rows(&text, "n,m,x1,x2,v", path)? {
        let n: usize = field(&cols, 0, line, path)?;
        let m: usize = field(&cols, 1, line, path)?;
        if n > grid.n_max || m > grid.m_max {
            return Err(Error::Io(format!("{}:{line}: node ({n}, {m}) outside the configured grid", path.display())));
        }
        vals[grid.index(n, m)] = field(&cols, 4, line, path)?;
        count += 1;
    }
    if count != grid.len() || vals.iter().any(|v| v.is_nan()) {
        return Err(Error::Io(format!(
            "{}: table does not cover the configured grid ({count} rows for {} nodes)",
            path.display(),
            grid.len()
        )));
    }
    ValueField::from_values(grid, vals)
}

pub fn read_policy_csv(path: &Path, grid: GridSpec) -> Result<PolicyField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut acts = vec![None; grid.len()];
    for (line, cols) in csv_rows(&text, "n,m,label,argmax", path)? {
        let n: usize = field(&cols, 0, line, path)?;
        let m: usize = field(&cols, 1, line, path)?;
        if n > grid.n_max || m > grid.m_max {
            return Err(Error::Io(format!("{}:{line}: node ({n}, {m}) outside the configured grid", path.display())));
        }
        let set = ActionSet::parse(cols.get(3).copied().unwrap_or(""))
            .map_err(|e| Error::Io(format!("{}:{line}: {e}", path.display())))?;
        acts[grid.index(n, m)] = Some(set);
    }
    let acts: Option<Vec<ActionSet>> = acts.into_iter().collect();
    let acts = acts.ok_or_else(|| Error::Io(format!("{}: table does not cover the configured grid", path.display())))?;
    PolicyField::from_actions(grid, acts)
}

/// Region codes as `x1 x2 code` blocks separated by blank lines, one block
/// per `x1`, as gnuplot's `pm3d`/`image` styles expect.
pub fn regions_dat(map: &RegionMap) -> String {
    let g = map.grid;
    let mut s = String::with_capacity(g.len() * 20);
    s.push_str("# x1 x2 code (");
    for r in Region::ALL {
        let _ = write!(s, " {}={}", r.code(), r.name());
    }
    s.push_str(" )\n");
    for n in 0..g.rows() {
        for m in 0..g.cols() {
            let _ = writeln!(s, "{} {} {}", g.x1(n), g.x2(m), map.get(n, m).code());
        }
        s.push('\n');
    }
    s
}

pub fn regions_gp(title: &str) -> String {
    format!(
        "# render with: gnuplot {REGIONS_GP}\n\
         set terminal pngcairo size 900,800\n\
         set output 'regions.png'\n\
         set title '{title}'\n\
         set xlabel 'x1'\n\
         set ylabel 'x2'\n\
         set cbrange [-0.5:6.5]\n\
         set palette maxcolors 7\n\
         set cbtics ('C' 0, 'B1' 1, 'B2' 2, 'B0' 3, 'A0' 4, 'A1' 5, 'A2' 6)\n\
         plot '{REGIONS_DAT}' using 1:2:3 with image notitle\n"
    )
}

/// `x,value,label`
pub fn value_1d_csv(sol: &OneDimSolution) -> String {
    let mut s = String::from("x,value,label\n");
    for (k, (v, l)) in sol.values.iter().zip(&sol.labels).enumerate() {
        let _ = writeln!(s, "{},{v},{}", sol.x(k), l.name());
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointOut {
    pub x1: f64,
    pub x2: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentOut {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub nodes: usize,
    pub horizontal_extent: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelStats {
    pub label: String,
    pub count: usize,
    pub components: usize,
}

/// Summary of a two-dimensional solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary2d {
    pub a0_points: Vec<PointOut>,
    pub b0_components: usize,
    pub residual_max: f64,
    pub iterations: usize,
    /// Band endpoints; filled by one-dimensional solves only.
    pub breakpoints: Vec<f64>,
    pub grid: GridSpec,
    pub report: SolveReport,
    pub labels: Vec<LabelStats>,
    /// Sizes of the no-pay components lying strictly above the line.
    pub c_components_in_d2: Vec<usize>,
    pub a1_segments: Vec<SegmentOut>,
    pub a2_segments: Vec<SegmentOut>,
}

/// Summary of a one-dimensional solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary1d {
    pub a0_points: Vec<f64>,
    pub b0_components: usize,
    pub residual_max: f64,
    pub iterations: usize,
    pub breakpoints: Vec<f64>,
    pub kind: String,
    pub delta: f64,
    pub dx: f64,
    pub c_bar: Vec<[f64; 2]>,
    pub intervals: Vec<(String, f64, f64)>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Configuration file text, byte for byte.
    pub config: String,
    pub config_path: String,
    pub mode: String,
    pub threads: usize,
    pub seed: u64,
    pub wall_seconds: f64,
    pub artifacts: Vec<String>,
}

impl Manifest {
    /// Manifests of different commands live side by side.
    pub fn file_name(command: &str) -> String {
        format!("manifest-{command}.json")
    }
}
