//! Tabular CSV/JSON writers for spectra, rapidities, occupations, phase
//! diagrams and trajectories.
//!
//! CSV: comma separated, header row, metadata as leading `# key: value` lines.
//! JSON: `{"metadata": {...}, "columns": [...], "data": {column: [values]}}`.
//! Floats use the shortest round-trip representation, so equal inputs give
//! byte-identical files.

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};

use crate::effective::SpectrumResult;
use crate::oracle::Trajectory;
use crate::thirdq::{CovarianceMatrix, RapiditySpectrum};
use crate::zak::{band_clusters, PhaseDiagram};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // JSON has no NaN; undefined values become null.
            Cell::Float(v) if !v.is_finite() => Value::Null,
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        // Drop the sign of negative zero.
        "0".into()
    } else if v.abs() < 1e-4 || v.abs() >= 1e16 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table { metadata: Vec::new(), columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut meta = Map::new();
        for (k, v) in &self.metadata {
            meta.insert(k.clone(), json!(v));
        }
        let mut data = Map::new();
        for (i, name) in self.columns.iter().enumerate() {
            data.insert(name.clone(), Value::Array(self.rows.iter().map(|r| r[i].json()).collect()));
        }
        let doc = json!({ "metadata": meta, "columns": self.columns, "data": data });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Columns `index, re_E, im_E, pt_class`.
pub fn spectrum_table(spectrum: &SpectrumResult) -> Table {
    let mut t = Table::new(&["index", "re_E", "im_E", "pt_class"]);
    for (i, (e, cls)) in spectrum.eigenvalues.iter().zip(&spectrum.pt_class).enumerate() {
        t.push(vec![i.into(), e.re.into(), e.im.into(), cls.as_str().into()]);
    }
    t
}

/// Right eigenvectors as a JSON array of columns, each an array of `[re, im]`.
pub fn eigenvectors_json(spectrum: &SpectrumResult) -> String {
    let cols: Vec<Value> = spectrum
        .right_vectors
        .columns()
        .into_iter()
        .map(|col| Value::Array(col.iter().map(|z| json!([z.re, z.im])).collect()))
        .collect();
    serde_json::to_string(&Value::Array(cols)).expect("serializable")
}

/// Columns `index, re_beta, im_beta, degeneracy_id`. Degenerate rapidities
/// (within `1e-8` of the largest modulus) share an id and are listed
/// together, groups in (Re, Im) order of their mean.
pub fn rapidity_table(spectrum: &RapiditySpectrum) -> Table {
    let scale = spectrum.betas.iter().map(|b| b.norm()).fold(1.0, f64::max);
    let clusters = band_clusters(&spectrum.betas, 1e-8 * scale);
    let mut t = Table::new(&["index", "re_beta", "im_beta", "degeneracy_id"]);
    let mut index = 0usize;
    for (id, cl) in clusters.iter().enumerate() {
        for &i in cl {
            let b = spectrum.betas[i];
            t.push(vec![index.into(), b.re.into(), b.im.into(), id.into()]);
            index += 1;
        }
    }
    t
}

/// `n x n` JSON array of `[re, im]` pairs.
pub fn covariance_json(cov: &CovarianceMatrix) -> String {
    complex_matrix_json(&cov.entries)
}

pub fn complex_matrix_json(m: &Array2<C64>) -> String {
    let rows: Vec<Value> =
        m.rows().into_iter().map(|r| Value::Array(r.iter().map(|z| json!([z.re, z.im])).collect())).collect();
    serde_json::to_string(&Value::Array(rows)).expect("serializable")
}

/// Columns `site, ness_occ, mbs_occ` (sites 1-based).
pub fn occupation_table(ness: &[f64], mbs: &[f64]) -> Table {
    assert_eq!(ness.len(), mbs.len());
    let mut t = Table::new(&["site", "ness_occ", "mbs_occ"]);
    for (i, (a, b)) in ness.iter().zip(mbs).enumerate() {
        t.push(vec![(i + 1).into(), (*a).into(), (*b).into()]);
    }
    t
}

/// Columns `theta, gamma, re_nu, im_nu, class`, rows in grid order.
pub fn phase_diagram_table(pd: &PhaseDiagram) -> Table {
    let range = |g: &[f64]| match (g.first(), g.last()) {
        (Some(a), Some(b)) => format!("{}..{} ({} points)", fmt_float(*a), fmt_float(*b), g.len()),
        _ => "empty".into(),
    };
    let which = match pd.which {
        crate::zak::Description::Effective => "effective",
        crate::zak::Description::Liouvillean => "liouvillean",
    };
    let mut t = Table::new(&["theta", "gamma", "re_nu", "im_nu", "class"])
        .meta("which", which)
        .meta("n_k", pd.n_k)
        .meta("theta", range(&pd.theta_grid))
        .meta("gamma", range(&pd.gamma_grid));
    for row in &pd.cells {
        for cell in row {
            let nu = cell.nu.unwrap_or(C64::new(f64::NAN, f64::NAN));
            t.push(vec![cell.theta.into(), cell.gamma.into(), nu.re.into(), nu.im.into(), cell.class.as_str().into()]);
        }
    }
    t
}

/// Columns `t, n_1..n_n, trace_distance`.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let n = traj.occupations.first().map_or(0, Vec::len);
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("n_{i}")));
    cols.push("trace_distance".into());
    let mut t = Table::new(&cols);
    if let Some(rate) = traj.fitted_rate {
        t = t.meta("fitted_rate", fmt_float(rate));
    }
    for (i, &time) in traj.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(traj.occupations[i].iter().map(|&v| Cell::from(v)));
        row.push(traj.trace_distance[i].into());
        t.push(row);
    }
    t
}
