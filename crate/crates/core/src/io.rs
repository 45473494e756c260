//! CSV ingestion, result files and report rendering.
//!
//! Three matrix layouts are read and written:
//!
//! * `csv` — all-numeric rows, no header;
//! * `labeled-csv` — a header row, then one label plus numeric cells per row
//!   (`Gene-Symbol,S1,S2,...`);
//! * `complex-csv` — all-numeric rows holding `re,im` column pairs.
//!
//! Numbers are written with 17 significant digits so a write/read cycle is
//! exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{ComparisonReport, ErrorReport, PlantedGmp};
use crate::gmp::{GsvPair, DEFAULT_RANK_TOL};
use crate::linalg::CMat;
use crate::newton::NewtonConfig;
use crate::solver::{angular_distance, Method, SolverConfig, SweepResult};

/// A labeled data matrix: one row per gene, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub row_labels: Vec<String>,
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    Csv,
    LabeledCsv,
    ComplexCsv,
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "labeled-csv" => Ok(MatrixFormat::LabeledCsv),
            "complex-csv" => Ok(MatrixFormat::ComplexCsv),
            other => Err(Error::InvalidConfig(format!("unknown matrix format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

/// Everything a command-line run can tune.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub newton: NewtonConfig,
    pub svd_tol: f64,
    pub max_k: Option<usize>,
    pub rank_tol: f64,
    pub seed: u64,
    pub output_format: ReportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            method: Method::default(),
            newton: solver.newton,
            svd_tol: solver.svd_tol,
            max_k: None,
            rank_tol: DEFAULT_RANK_TOL,
            seed: 0,
            output_format: ReportFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        for (name, v) in [("svd_tol", self.svd_tol), ("rank_tol", self.rank_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_k == Some(0) {
            return Err(Error::InvalidConfig("max_k must be positive".into()));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            newton: NewtonConfig { seed: self.seed, ..self.newton },
            svd_tol: self.svd_tol,
            max_k: self.max_k,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

// ---------------------------------------------------------------- reading

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn records(text: &str, path: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { path: path.into(), row, col: 0, msg: e.to_string() }
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec.position().map_or(out.len() + 1, |p| p.line() as usize);
        out.push((row, rec));
    }
    Ok(out)
}

fn number(cell: &str, path: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = cell
        .parse()
        .map_err(|_| Error::Parse { path: path.into(), row, col, msg: format!("'{cell}' is not a number") })?;
    if !v.is_finite() {
        return Err(Error::NonFinite { path: path.into(), row, col });
    }
    Ok(v)
}

fn numeric_rows(recs: &[(usize, csv::StringRecord)], skip: usize, path: &str) -> Result<Vec<Vec<f64>>> {
    recs.iter()
        .map(|(row, rec)| rec.iter().enumerate().skip(skip).map(|(c, cell)| number(cell, path, *row, c + 1)).collect())
        .collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c])
}

/// Parse an all-numeric CSV body; `path` only labels errors.
pub fn parse_csv(text: &str, path: &str) -> Result<DMatrix<f64>> {
    let recs = records(text, path)?;
    Ok(to_matrix(&numeric_rows(&recs, 0, path)?))
}

/// Parse a labeled CSV body: header row, then `label,v1,v2,...`.
pub fn parse_labeled_csv(text: &str, id: &str) -> Result<Dataset> {
    let recs = records(text, id)?;
    let Some(((_, header), body)) = recs.split_first() else {
        return Err(Error::Parse { path: id.into(), row: 1, col: 1, msg: "missing header row".into() });
    };
    if header.len() < 2 {
        return Err(Error::Parse { path: id.into(), row: 1, col: 2, msg: "header has no data columns".into() });
    }
    let row_labels = body.iter().map(|(_, rec)| rec[0].to_string()).collect();
    let values = to_matrix(&numeric_rows(body, 1, id)?);
    Ok(Dataset { id: id.into(), row_labels, values })
}

/// Parse a CSV body of `re,im` column pairs.
pub fn parse_complex_csv(text: &str, path: &str) -> Result<CMat> {
    let raw = parse_csv(text, path)?;
    if raw.ncols() % 2 != 0 {
        return Err(Error::Parse {
            path: path.into(),
            row: 1,
            col: raw.ncols(),
            msg: "complex csv needs an even number of columns (re,im pairs)".into(),
        });
    }
    Ok(CMat::from_fn(raw.nrows(), raw.ncols() / 2, |r, c| Complex64::new(raw[(r, 2 * c)], raw[(r, 2 * c + 1)])))
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

pub fn read_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_csv(&read_text(path)?, &path.display().to_string())
}

/// The dataset id is the file stem.
pub fn read_labeled_csv(path: &Path) -> Result<Dataset> {
    let mut ds = parse_labeled_csv(&read_text(path)?, &path.display().to_string())?;
    ds.id = path.file_stem().map_or_else(|| ds.id.clone(), |s| s.to_string_lossy().into_owned());
    Ok(ds)
}

pub fn read_complex_csv(path: &Path) -> Result<CMat> {
    parse_complex_csv(&read_text(path)?, &path.display().to_string())
}

/// Any supported layout as a complex matrix (labels dropped).
pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<CMat> {
    match format {
        MatrixFormat::Csv => Ok(crate::linalg::complexify(&read_csv(path)?)),
        MatrixFormat::LabeledCsv => Ok(crate::linalg::complexify(&read_labeled_csv(path)?.values)),
        MatrixFormat::ComplexCsv => read_complex_csv(path),
    }
}

// ---------------------------------------------------------------- writing

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn join<I: IntoIterator<Item = String>>(cells: I) -> String {
    cells.into_iter().collect::<Vec<_>>().join(",")
}

pub fn format_csv(x: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..x.nrows() {
        out.push_str(&join((0..x.ncols()).map(|c| fmt_f64(x[(r, c)]))));
        out.push('\n');
    }
    out
}

pub fn format_complex_csv(x: &CMat) -> String {
    let mut out = String::new();
    for r in 0..x.nrows() {
        out.push_str(&join((0..x.ncols()).flat_map(|c| [fmt_f64(x[(r, c)].re), fmt_f64(x[(r, c)].im)])));
        out.push('\n');
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn format_labeled_csv(ds: &Dataset, label_header: &str) -> String {
    let mut out = join(std::iter::once(csv_cell(label_header)).chain((1..=ds.values.ncols()).map(|c| format!("S{c}"))));
    out.push('\n');
    for (r, label) in ds.row_labels.iter().enumerate() {
        out.push_str(&join(std::iter::once(csv_cell(label)).chain((0..ds.values.ncols()).map(|c| fmt_f64(ds.values[(r, c)])))));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, x: &DMatrix<f64>) -> Result<()> {
    Ok(fs::write(path, format_csv(x))?)
}

pub fn write_complex_csv(path: &Path, x: &CMat) -> Result<()> {
    Ok(fs::write(path, format_complex_csv(x))?)
}

/// Write a matrix that may be complex: plain csv when every imaginary part is zero.
pub fn write_matrix(path: &Path, x: &CMat) -> Result<()> {
    if x.iter().all(|z| z.im == 0.0) {
        write_csv(path, &x.map(|z| z.re))
    } else {
        write_complex_csv(path, x)
    }
}

pub fn write_labeled_csv(path: &Path, ds: &Dataset) -> Result<()> {
    Ok(fs::write(path, format_labeled_csv(ds, "Gene-Symbol"))?)
}

/// `index,alpha,beta` rows of the planted values.
pub fn format_truth(planted: &PlantedGmp) -> String {
    let mut out = String::from("index,alpha,beta\n");
    for q in planted.truth() {
        let _ = writeln!(out, "{},{},{}", q.index, fmt_f64(q.alpha), fmt_f64(q.beta));
    }
    out
}

pub fn write_truth(path: &Path, planted: &PlantedGmp) -> Result<()> {
    Ok(fs::write(path, format_truth(planted))?)
}

pub fn parse_truth(text: &str, path: &str) -> Result<Vec<GsvPair>> {
    let recs = records(text, path)?;
    let Some(((row, header), body)) = recs.split_first() else {
        return Ok(Vec::new());
    };
    if header.iter().collect::<Vec<_>>() != ["index", "alpha", "beta"] {
        return Err(Error::Parse { path: path.into(), row: *row, col: 1, msg: "expected header index,alpha,beta".into() });
    }
    body.iter()
        .map(|(row, rec)| {
            if rec.len() != 3 {
                return Err(Error::Parse { path: path.into(), row: *row, col: rec.len(), msg: "expected 3 columns".into() });
            }
            let index = rec[0]
                .parse()
                .map_err(|_| Error::Parse { path: path.into(), row: *row, col: 1, msg: format!("bad index '{}'", &rec[0]) })?;
            Ok(GsvPair { index, alpha: number(&rec[1], path, *row, 2)?, beta: number(&rec[2], path, *row, 3)? })
        })
        .collect()
}

pub fn read_truth(path: &Path) -> Result<Vec<GsvPair>> {
    parse_truth(&read_text(path)?, &path.display().to_string())
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub index: usize,
    pub theta: f64,
}

/// Computed pairs of one matrix pair, with their θ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sizes: (usize, usize, usize),
    pub method: Method,
    pub pairs: Vec<GsvPair>,
    pub theta: Vec<ThetaEntry>,
    pub crossing_index: Option<usize>,
    pub solver_calls: usize,
    pub wall_time_s: f64,
}

impl SpectrumReport {
    pub fn from_pairs(sizes: (usize, usize, usize), method: Method, pairs: Vec<GsvPair>, wall_time_s: f64) -> Self {
        let theta: Vec<ThetaEntry> = pairs.iter().map(|q| ThetaEntry { index: q.index, theta: angular_distance(q) }).collect();
        let ts: Vec<(usize, f64)> = theta.iter().map(|t| (t.index, t.theta)).collect();
        let crossing_index = crate::solver::equal_significance_index(&ts);
        Self { sizes, method, pairs, theta, crossing_index, solver_calls: 0, wall_time_s }
    }

    pub fn from_sweep(sizes: (usize, usize, usize), method: Method, sweep: &SweepResult, wall_time_s: f64) -> Self {
        Self {
            sizes,
            method,
            pairs: sweep.computed.clone(),
            theta: sweep.theta.iter().map(|&(index, theta)| ThetaEntry { index, theta }).collect(),
            crossing_index: sweep.crossing_index,
            solver_calls: sweep.cost.solver_calls,
            wall_time_s,
        }
    }
}

/// Something with json, csv and text renderings.
pub trait Report {
    fn to_json(&self) -> Result<String>;
    fn to_csv(&self) -> String;
    fn to_text(&self) -> String;
}

fn pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn star(flag: bool) -> &'static str {
    if flag {
        "*"
    } else {
        ""
    }
}

impl Report for SpectrumReport {
    fn to_json(&self) -> Result<String> {
        pretty(self)
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("index,alpha,beta,theta,crossing\n");
        for (q, t) in self.pairs.iter().zip(&self.theta) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                q.index,
                fmt_f64(q.alpha),
                fmt_f64(q.beta),
                fmt_f64(t.theta),
                star(self.crossing_index == Some(q.index))
            );
        }
        out
    }

    fn to_text(&self) -> String {
        let (m, p, n) = self.sizes;
        let mut out = format!("(m, p, n) = ({m}, {p}, {n})  method = {}\n", self.method);
        let _ = writeln!(out, "{:>6}  {:>22}  {:>22}  {:>22}", "i", "alpha_i", "beta_i", "theta_i");
        for (q, t) in self.pairs.iter().zip(&self.theta) {
            let _ = writeln!(
                out,
                "{:>6}  {:>22.15}  {:>22.15}  {:>22.15}{}",
                q.index,
                q.alpha,
                q.beta,
                t.theta,
                if self.crossing_index == Some(q.index) { "  *" } else { "" }
            );
        }
        if let Some(k) = self.crossing_index {
            let _ = writeln!(out, "equal significance at i = {k}");
        }
        out
    }
}

const ERROR_CSV_HEADER: &str = "m,p,n,method,err1,err2,err3,err4,wall_time_s\n";

fn error_row(r: &ErrorReport) -> String {
    let (m, p, n) = r.sizes;
    format!(
        "{m},{p},{n},{},{},{},{},{},{}\n",
        r.method,
        fmt_f64(r.err1),
        fmt_f64(r.err2),
        fmt_f64(r.err3),
        fmt_f64(r.err4),
        fmt_f64(r.wall_time_s)
    )
}

fn error_table(reports: &[ErrorReport]) -> String {
    let mut out = format!(
        "{:>18}  {:>8}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}\n",
        "(m, p, n)", "method", "Err1", "Err2", "Err3", "Err4", "time (s)"
    );
    for r in reports {
        let (m, p, n) = r.sizes;
        let _ = writeln!(
            out,
            "{:>18}  {:>8}  {:>10.2e}  {:>10.2e}  {:>10.2e}  {:>10.2e}  {:>10.3}",
            format!("({m}, {p}, {n})"),
            r.method.name(),
            r.err1,
            r.err2,
            r.err3,
            r.err4,
            r.wall_time_s
        );
    }
    out
}

impl Report for ErrorReport {
    fn to_json(&self) -> Result<String> {
        pretty(self)
    }

    fn to_csv(&self) -> String {
        format!("{ERROR_CSV_HEADER}{}", error_row(self))
    }

    fn to_text(&self) -> String {
        error_table(std::slice::from_ref(self))
    }
}

impl Report for [ErrorReport] {
    fn to_json(&self) -> Result<String> {
        pretty(self)
    }

    fn to_csv(&self) -> String {
        let mut out = ERROR_CSV_HEADER.to_string();
        for r in self {
            out.push_str(&error_row(r));
        }
        out
    }

    fn to_text(&self) -> String {
        error_table(self)
    }
}

impl Report for Vec<ErrorReport> {
    fn to_json(&self) -> Result<String> {
        self.as_slice().to_json()
    }

    fn to_csv(&self) -> String {
        self.as_slice().to_csv()
    }

    fn to_text(&self) -> String {
        self.as_slice().to_text()
    }
}

impl Report for ComparisonReport {
    fn to_json(&self) -> Result<String> {
        pretty(self)
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("dataset,index,alpha,beta,theta,crossing\n");
        for d in &self.datasets {
            for (q, &(_, t)) in d.pairs.iter().zip(&d.theta) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_cell(&d.id),
                    q.index,
                    fmt_f64(q.alpha),
                    fmt_f64(q.beta),
                    fmt_f64(t),
                    star(d.equal_significance_index == Some(q.index))
                );
            }
        }
        out
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        for d in &self.datasets {
            let _ = writeln!(out, "theta_l{{{}}}  ({} solves)", d.id, d.solver_calls);
            let _ = writeln!(out, "{:>6}  {:>22}", "l", "theta_l");
            for &(i, t) in &d.theta {
                let mark = if d.equal_significance_index == Some(i) { "  *" } else { "" };
                let _ = writeln!(out, "{i:>6}  {t:>22.15}{mark}");
            }
            match d.equal_significance_index {
                Some(k) => {
                    let _ = writeln!(out, "genelet of equal significance: l = {k}\n");
                }
                None => out.push('\n'),
            }
        }
        out
    }
}

pub fn render<R: Report + ?Sized>(report: &R, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => Ok(report.to_csv()),
        ReportFormat::Text => Ok(report.to_text()),
    }
}

pub fn write_report<R: Report + ?Sized>(report: &R, format: ReportFormat, path: &Path) -> Result<()> {
    Ok(fs::write(path, render(report, format)?)?)
}
