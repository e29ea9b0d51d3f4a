//! Rendering to JSON, CSV, and plain tables.
//!
//! JSON is canonicalized so that identical runs produce byte-identical
//! output: every float is rewritten in a fixed scientific form with 17
//! significant digits, and non-finite values become null. Integers pass
//! through untouched.

use std::io::Write;

use berwald::geodesic::TraceResult;
use berwald::report::{CheckReport, Verdict};
use serde::Serialize;
use serde_json::Value;

/// Serialize to canonical pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let raw = serde_json::to_value(value).expect("value serializes");
    let canon = canonicalize(raw);
    let mut text = serde_json::to_string_pretty(&canon).expect("canonical json renders");
    text.push('\n');
    text
}

fn canonicalize(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                Value::Number(n)
            } else {
                match n.as_f64() {
                    Some(f) if f.is_finite() => Value::Number(
                        serde_json::Number::from_string_unchecked(format!("{f:.16e}")),
                    ),
                    _ => Value::Null,
                }
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        other => other,
    }
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn verdict_word(v: &Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Skip(_) => "skip",
    }
}

fn verdict_detail(rep: &CheckReport) -> String {
    match &rep.verdict {
        Verdict::Skip(reason) => reason.clone(),
        _ => rep
            .residuals
            .iter()
            .max_by(|a, b| {
                let ra = a.value.abs() / a.tolerance;
                let rb = b.value.abs() / b.tolerance;
                ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|r| r.name.clone())
            .unwrap_or_default(),
    }
}

/// One CSV row per report: check, point, verdict, worst residual.
pub fn check_csv(reports: &[CheckReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "check",
        "x1",
        "x2",
        "y1",
        "y2",
        "verdict",
        "max_residual",
        "detail",
    ])
    .expect("csv header");
    for rep in reports {
        w.write_record([
            rep.check.clone(),
            fmt_float(rep.point.x[0]),
            fmt_float(rep.point.x[1]),
            fmt_float(rep.point.y[0]),
            fmt_float(rep.point.y[1]),
            verdict_word(&rep.verdict).to_string(),
            fmt_float(rep.max_residual()),
            verdict_detail(rep),
        ])
        .expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Human-readable check table, grouped by point.
pub fn check_table(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    let mut last_point: Option<[f64; 4]> = None;
    for rep in reports {
        let key = [
            rep.point.x[0],
            rep.point.x[1],
            rep.point.y[0],
            rep.point.y[1],
        ];
        if last_point != Some(key) {
            last_point = Some(key);
            out.push_str(&format!(
                "point x = ({:+.6}, {:+.6}), y = ({:+.6}, {:+.6})\n",
                key[0], key[1], key[2], key[3]
            ));
        }
        let detail = match &rep.verdict {
            Verdict::Skip(reason) => format!("({reason})"),
            _ => {
                let worst = rep.max_residual();
                if rep.residuals.is_empty() {
                    String::new()
                } else {
                    format!("worst {worst:.3e} [{}]", verdict_detail(rep))
                }
            }
        };
        out.push_str(&format!(
            "  {:<24} {:<4} {}\n",
            rep.check,
            verdict_word(&rep.verdict),
            detail
        ));
    }
    out
}

pub fn summary_line(reports: &[CheckReport]) -> String {
    let passed = reports.iter().filter(|r| r.passed()).count();
    let failed = reports.iter().filter(|r| r.failed()).count();
    let skipped = reports.iter().filter(|r| r.skipped()).count();
    format!("summary: {passed} passed, {failed} failed, {skipped} skipped\n")
}

/// Flat per-point scalars for the inspect command's CSV and table output.
#[derive(Serialize)]
pub struct InspectRow {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
    pub f: Option<f64>,
    pub det_g: Option<f64>,
    pub eps: Option<f64>,
    pub main_scalar: Option<f64>,
    pub hamel: Option<f64>,
    pub phi: Option<f64>,
    pub phi_v2: Option<f64>,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub f_bar: Option<f64>,
    pub det_g_bar: Option<f64>,
    pub main_scalar_bar: Option<f64>,
    pub status: String,
}

fn opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn inspect_csv(rows: &[InspectRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "x1",
        "x2",
        "y1",
        "y2",
        "f",
        "det_g",
        "eps",
        "main_scalar",
        "hamel",
        "phi",
        "phi_v2",
        "sigma",
        "rho",
        "p",
        "q",
        "f_bar",
        "det_g_bar",
        "main_scalar_bar",
        "status",
    ])
    .expect("csv header");
    for r in rows {
        w.write_record([
            fmt_float(r.x1),
            fmt_float(r.x2),
            fmt_float(r.y1),
            fmt_float(r.y2),
            opt_float(r.f),
            opt_float(r.det_g),
            opt_float(r.eps),
            opt_float(r.main_scalar),
            opt_float(r.hamel),
            opt_float(r.phi),
            opt_float(r.phi_v2),
            opt_float(r.sigma),
            opt_float(r.rho),
            opt_float(r.p),
            opt_float(r.q),
            opt_float(r.f_bar),
            opt_float(r.det_g_bar),
            opt_float(r.main_scalar_bar),
            r.status.clone(),
        ])
        .expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

pub fn inspect_table(rows: &[InspectRow]) -> String {
    let cell = |v: Option<f64>| match v {
        Some(v) => format!("{v:+.6e}"),
        None => "-".to_string(),
    };
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "point x = ({:+.6}, {:+.6}), y = ({:+.6}, {:+.6})   [{}]\n",
            r.x1, r.x2, r.y1, r.y2, r.status
        ));
        out.push_str(&format!(
            "  base:        F = {}  det g = {}  eps = {}  I = {}  hamel = {}\n",
            cell(r.f),
            cell(r.det_g),
            cell(r.eps),
            cell(r.main_scalar),
            cell(r.hamel),
        ));
        out.push_str(&format!(
            "  factor:      phi = {}  phi_v2 = {}  sigma = {}  rho = {}\n",
            cell(r.phi),
            cell(r.phi_v2),
            cell(r.sigma),
            cell(r.rho),
        ));
        out.push_str(&format!(
            "  transfer:    p = {}  q = {}\n",
            cell(r.p),
            cell(r.q),
        ));
        out.push_str(&format!(
            "  transformed: F = {}  det g = {}  I = {}\n",
            cell(r.f_bar),
            cell(r.det_g_bar),
            cell(r.main_scalar_bar),
        ));
    }
    out
}

/// Geodesic CSV: the mandated header, every accepted step of every trace,
/// and a comment footer per trace with its summary statistics.
pub fn geodesic_csv(traces: &[TraceResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x1", "x2", "y1", "y2", "F", "exited"])
        .expect("csv header");
    let mut text = String::new();
    for (i, tr) in traces.iter().enumerate() {
        for (j, row) in tr.rows.iter().enumerate() {
            let exited_here = tr.exited && j + 1 == tr.rows.len();
            w.write_record([
                fmt_float(row.t),
                fmt_float(row.x[0]),
                fmt_float(row.x[1]),
                fmt_float(row.y[0]),
                fmt_float(row.y[1]),
                fmt_float(row.f),
                exited_here.to_string(),
            ])
            .expect("csv row");
        }
        text.push_str(&format!(
            "# trace {i}: steps={}, exited={}, chord_deviation={}, f_drift={}\n",
            tr.rows.len().saturating_sub(1),
            tr.exited,
            fmt_float(tr.chord_deviation),
            fmt_float(tr.f_drift),
        ));
    }
    let body = String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8");
    body + &text
}

pub fn geodesic_table(traces: &[TraceResult]) -> String {
    let mut out = String::new();
    for (i, tr) in traces.iter().enumerate() {
        let first = tr.rows.first();
        let start = first
            .map(|r| {
                format!(
                    "x = ({:+.6}, {:+.6}), y = ({:+.6}, {:+.6})",
                    r.x[0], r.x[1], r.y[0], r.y[1]
                )
            })
            .unwrap_or_default();
        out.push_str(&format!(
            "trace {i}: {start}\n  steps {:>6}  exited {:<5}  chord deviation {:.3e}  norm drift {:.3e}\n",
            tr.rows.len().saturating_sub(1),
            tr.exited,
            tr.chord_deviation,
            tr.f_drift,
        ));
    }
    out
}

/// Write `text` to the configured sink.
pub fn emit(output: Option<&std::path::PathBuf>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_pins_floats_and_keeps_integers() {
        #[derive(Serialize)]
        struct Sample {
            count: usize,
            value: f64,
            bad: f64,
        }
        let text = to_canonical_json(&Sample {
            count: 3,
            value: 0.1,
            bad: f64::NAN,
        });
        assert!(text.contains("\"count\": 3"));
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(text.contains("\"bad\": null"));
    }

    #[test]
    fn csv_uses_dot_decimal_and_comma_delimiter() {
        let rows = vec![InspectRow {
            x1: 0.5,
            x2: -0.25,
            y1: 1.0,
            y2: 0.0,
            f: Some(1.5),
            det_g: None,
            eps: None,
            main_scalar: None,
            hamel: None,
            phi: None,
            phi_v2: None,
            sigma: None,
            rho: None,
            p: None,
            q: None,
            f_bar: None,
            det_g_bar: None,
            main_scalar_bar: None,
            status: "ok".to_string(),
        }];
        let text = inspect_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x1,x2,y1,y2,f,det_g,eps,main_scalar,hamel,phi,phi_v2,sigma,rho,p,q,f_bar,det_g_bar,main_scalar_bar,status"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("5.0000000000000000e-1,-2.5000000000000000e-1,"));
        assert!(!row.contains(';'));
    }
}
