//! Report files: CSV tables, flat JSON summaries and SVG snapshots.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! re-parses to the exact `f64` that was computed. Nothing time-dependent goes
//! into these files; wall-clock timings are kept in a separate file by the
//! runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::Result;
use crate::mesh::TriodState;
use crate::scenarios::{ConvergenceRow, EpsilonRow, MassConditioningRow, SystemConditioningRow, TracedRun};

/// Curve colours: red, green, blue.
pub const CURVE_COLOURS: [&str; 3] = ["#d62728", "#2ca02c", "#1f77b4"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Empty field for a missing value.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    /// Column by header name, parsed as floats (`None` for empty cells).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| if r[k].is_empty() { None } else { r[k].parse().ok() })
                .collect(),
        )
    }
}

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new(&["J", "N", "E1", "EOC1", "E2", "EOC2", "E3", "EOC3", "E4", "EOC4"]);
    for r in rows {
        let e = [r.errors.e1, r.errors.e2, r.errors.e3, r.errors.e4];
        let mut row = vec![r.elements.to_string(), r.steps.to_string()];
        for k in 0..4 {
            row.push(fmt_f64(e[k]));
            row.push(fmt_opt(r.eoc[k]));
        }
        t.push(row);
    }
    t
}

pub fn epsilon_table(rows: &[EpsilonRow]) -> Table {
    let mut t = Table::new(&["epsilon", "N_tot", "E_ang", "EOC_ang", "E_pos", "EOC_pos"]);
    for r in rows {
        t.push(vec![
            fmt_f64(r.epsilon),
            r.n_tot.to_string(),
            fmt_f64(r.e_ang),
            fmt_opt(r.eoc_ang),
            fmt_f64(r.e_pos),
            fmt_opt(r.eoc_pos),
        ]);
    }
    t
}

/// Surface-tension coefficients and angles of each relaxed state.
pub fn junction_table(rows: &[EpsilonRow]) -> Table {
    let mut t = Table::new(&[
        "epsilon", "sigma1", "sigma2", "sigma3", "theta1", "theta2", "theta3", "sine_residual", "junction_x",
        "junction_y",
    ]);
    for r in rows {
        let b = &r.balance;
        let p = r.final_state.junction();
        t.push(vec![
            fmt_f64(r.epsilon),
            fmt_f64(b.sigma[0]),
            fmt_f64(b.sigma[1]),
            fmt_f64(b.sigma[2]),
            fmt_f64(b.theta[0]),
            fmt_f64(b.theta[1]),
            fmt_f64(b.theta[2]),
            fmt_f64(b.residual),
            fmt_f64(p.x),
            fmt_f64(p.y),
        ]);
    }
    t
}

pub fn mass_conditioning_table(rows: &[MassConditioningRow]) -> Table {
    let mut t = Table::new(&["l", "epsilon", "lambda_max", "lambda_min", "cond2", "EOC"]);
    for (l, r) in rows.iter().enumerate() {
        t.push(vec![
            (l + 1).to_string(),
            fmt_f64(r.epsilon),
            fmt_f64(r.spectrum.lambda_max),
            fmt_f64(r.spectrum.lambda_min),
            fmt_f64(r.spectrum.cond2),
            fmt_opt(r.spectrum.eoc_vs_previous),
        ]);
    }
    t
}

pub fn system_conditioning_table(rows: &[SystemConditioningRow], epsilons: (f64, f64)) -> Table {
    let a = format!("cond2_eps_{}", fmt_f64(epsilons.0));
    let b = format!("cond2_eps_{}", fmt_f64(epsilons.1));
    let mut t = Table::new(&["J", "h", "delta", &a, &b, "ratio"]);
    for r in rows {
        t.push(vec![
            r.elements.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.delta),
            fmt_f64(r.cond_a),
            fmt_f64(r.cond_b),
            fmt_f64(r.ratio),
        ]);
    }
    t
}

/// Minimal segment length over time for one or more runs.
pub fn trace_table(runs: &[TracedRun]) -> Table {
    let mut t = Table::new(&["delta", "step", "time", "min_segment_length"]);
    for run in runs {
        for &(n, time, len) in &run.trace {
            t.push(vec![fmt_f64(run.params.delta), n.to_string(), fmt_f64(time), fmt_f64(len)]);
        }
    }
    t
}

/// Flat `key -> value` document; keys are kept sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(pub BTreeMap<String, Value>);

impl Summary {
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(key.into(), value.into());
    }

    /// Adds every leaf of `value` under `prefix`, joining nested keys with
    /// dots. Arrays stay whole.
    pub fn flatten(&mut self, prefix: &str, value: &Value) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    self.flatten(&format!("{prefix}.{k}"), v);
                }
            }
            Value::Null => {}
            other => {
                self.0.insert(prefix.to_string(), other.clone());
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.0)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Polyline drawing of a triod in `[-1.2, 1.2]^2` with the y axis pointing up.
pub fn svg_snapshot(state: &TriodState, title: &str) -> String {
    let mut s = String::new();
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.2 -1.2 2.4 2.4\" width=\"480\" height=\"480\">\n",
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    s.push_str("<rect x=\"-1.2\" y=\"-1.2\" width=\"2.4\" height=\"2.4\" fill=\"white\"/>\n");
    s.push_str("<g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"0.006\">\n");
    for (curve, colour) in state.curves().iter().zip(CURVE_COLOURS) {
        let pts: Vec<String> = curve
            .nodes()
            .iter()
            .map(|p| format!("{:.6},{:.6}", p.x, p.y))
            .collect();
        let _ = writeln!(s, "<polyline stroke=\"{colour}\" points=\"{}\"/>", pts.join(" "));
        for p in curve.nodes() {
            let _ = writeln!(s, "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"0.008\" fill=\"{colour}\"/>", p.x, p.y);
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
