//! Artifact files: `<name>.csv`, `<name>.summary.json` and a gnuplot
//! script `<name>.plot` that renders the CSV.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use hetforce_core::fit::FitResult;
use hetforce_core::Params;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every double
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// One pass/fail check reported in the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `< 1e-8`.
    pub condition: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("< {limit:e}"),
            pass: value < limit,
        }
    }

    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("{target} +/- {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("> {limit:e}"),
            pass: value > limit,
        }
    }

    pub fn holds(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: pass as u8 as f64,
            condition: "holds".into(),
            pass,
        }
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "value": self.value, "condition": self.condition, "pass": self.pass })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

/// Everything an experiment reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: &'static str,
    pub table: DataTable,
    pub outputs: Map<String, Value>,
    pub fit: Option<FitResult>,
    pub checks: Vec<Check>,
    pub error: Option<ErrorRecord>,
    pub plot: PlotSpec,
}

impl Report {
    pub fn new(experiment: &'static str, table: DataTable, plot: PlotSpec) -> Self {
        Self {
            experiment,
            table,
            outputs: Map::new(),
            fit: None,
            checks: Vec::new(),
            error: None,
            plot,
        }
    }

    pub fn output(&mut self, key: &str, value: Value) {
        self.outputs.insert(key.to_string(), value);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn params_json(p: &Params) -> Value {
    json!({
        "alpha": p.alpha(),
        "beta": p.beta(),
        "nu": p.nu(),
        "mu": p.mu(),
        "omega": p.omega(),
        "a": p.a(),
        "epsilon": p.epsilon(),
        "delta": p.saddle_value(),
        "expansion": p.expansion(),
        "contraction": p.contraction(),
    })
}

pub fn fit_json(fit: &FitResult) -> Value {
    json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "n_points": fit.n_points,
    })
}

/// Inputs echoed into the summary next to the [`Report`].
pub struct SummaryContext<'a> {
    pub params: &'a Params,
    pub forcing: String,
    pub inputs: Value,
    pub tolerances: Value,
}

/// The summary without its `metadata` field, which is the only part that
/// varies between identical runs.
pub fn summary_payload(report: &Report, ctx: &SummaryContext<'_>) -> Value {
    json!({
        "experiment": report.experiment,
        "params": params_json(ctx.params),
        "forcing": ctx.forcing,
        "inputs": ctx.inputs,
        "tolerances": ctx.tolerances,
        "outputs": Value::Object(report.outputs.clone()),
        "fit": report.fit.as_ref().map(fit_json),
        "checks": report.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        "passed": report.passed() && report.error.is_none(),
        "error": report.error.as_ref().map(|e| json!({ "kind": e.kind, "message": e.message })),
    })
}

pub fn summary_json(report: &Report, ctx: &SummaryContext<'_>) -> String {
    let mut v = summary_payload(report, ctx);
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    v["metadata"] = json!({ "generated_unix_time": stamp, "version": env!("CARGO_PKG_VERSION") });
    let mut text = serde_json::to_string_pretty(&v).expect("json values serialise");
    text.push('\n');
    text
}

/// Which CSV columns to draw and how.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: usize,
    pub ys: Vec<usize>,
    pub logx: bool,
    pub logy: bool,
    pub title: &'static str,
}

pub fn plot_script(name: &str, table: &DataTable, spec: &PlotSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{name}.png'");
    let _ = writeln!(s, "set title '{}'", spec.title);
    let _ = writeln!(s, "set xlabel '{}'", table.columns.get(spec.x).copied().unwrap_or(""));
    if spec.logx {
        let _ = writeln!(s, "set logscale x");
    }
    if spec.logy {
        let _ = writeln!(s, "set logscale y");
    }
    let series: Vec<String> = spec
        .ys
        .iter()
        .map(|&y| format!("'{name}.csv' using {}:{} with linespoints", spec.x + 1, y + 1))
        .collect();
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

/// Writes the three artifacts; returns their paths.
pub fn write_artifacts(dir: &Path, report: &Report, ctx: &SummaryContext<'_>) -> io::Result<[PathBuf; 3]> {
    std::fs::create_dir_all(dir)?;
    let name = report.experiment;
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.summary.json"));
    let plot = dir.join(format!("{name}.plot"));
    std::fs::write(&csv, report.table.to_csv())?;
    std::fs::write(&json, summary_json(report, ctx))?;
    std::fs::write(&plot, plot_script(name, &report.table, &report.plot))?;
    Ok([csv, json, plot])
}
