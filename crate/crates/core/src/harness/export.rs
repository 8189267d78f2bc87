use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ccdf::CcdfTable;
use super::compare::{Comparison, ComparisonRow};
use super::eval::{EvalReport, MeanStd, REPORT_SCHEMA};
use crate::cli::write_atomic;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Utility,
    Loss,
    Delay,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Utility, Metric::Loss, Metric::Delay];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Utility => "utility",
            Metric::Loss => "loss",
            Metric::Delay => "delay",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Utility => "throughput utility",
            Metric::Loss => "loss ratio",
            Metric::Delay => "delay (s)",
        }
    }

    pub fn table(self, report: &EvalReport) -> &CcdfTable {
        match self {
            Metric::Utility => &report.ccdf.utility,
            Metric::Loss => &report.ccdf.loss,
            Metric::Delay => &report.ccdf.delay,
        }
    }
}

pub fn report_to_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn read_report_json(path: &Path) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: EvalReport = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if r.schema_version != REPORT_SCHEMA {
        return Err(Error::Config(format!(
            "{}: unsupported report schema '{}'",
            path.display(),
            r.schema_version
        )));
    }
    Ok(r)
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    policy: String,
    utility_mean: f64,
    utility_std: f64,
    loss_mean: f64,
    loss_std: f64,
    no_loss_fraction: f64,
    utility_above_08: f64,
    best_utility: bool,
    best_loss: bool,
}

pub fn write_comparison_csv<W: Write>(c: &Comparison, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &c.rows {
        w.serialize(CsvRow {
            policy: r.policy_id.clone(),
            utility_mean: r.reward_utility.mean,
            utility_std: r.reward_utility.std,
            loss_mean: r.reward_loss.mean,
            loss_std: r.reward_loss.std,
            no_loss_fraction: r.no_loss_fraction,
            utility_above_08: r.utility_above_08,
            best_utility: r.best_utility,
            best_loss: r.best_loss,
        })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_comparison_csv<R: Read>(input: R) -> Result<Vec<ComparisonRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let r = row?;
            Ok(ComparisonRow {
                policy_id: r.policy,
                reward_utility: MeanStd {
                    mean: r.utility_mean,
                    std: r.utility_std,
                },
                reward_loss: MeanStd {
                    mean: r.loss_mean,
                    std: r.loss_std,
                },
                no_loss_fraction: r.no_loss_fraction,
                utility_above_08: r.utility_above_08,
                best_utility: r.best_utility,
                best_loss: r.best_loss,
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CcdfRow {
    policy: String,
    x: f64,
    ccdf: f64,
}

/// One CSV of `(policy, x, ccdf)` rows for a metric.
pub fn write_ccdf_csv<W: Write>(reports: &[EvalReport], metric: Metric, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let t = metric.table(r);
        for (&x, &c) in t.x.iter().zip(&t.ccdf) {
            w.serialize(CcdfRow {
                policy: r.policy_id.clone(),
                x,
                ccdf: c,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Reads a CCDF CSV back into `(policy, x, ccdf)` series, in file order.
pub fn read_ccdf_csv<R: Read>(input: R) -> Result<Vec<(String, Vec<f64>, Vec<f64>)>> {
    let mut out: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut rd = csv::Reader::from_reader(input);
    for row in rd.deserialize::<CcdfRow>() {
        let row = row?;
        match out.last_mut() {
            Some((p, xs, cs)) if *p == row.policy => {
                xs.push(row.x);
                cs.push(row.ccdf);
            }
            _ => out.push((row.policy, vec![row.x], vec![row.ccdf])),
        }
    }
    Ok(out)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step plot of one metric's CCDF, one polyline per report.
pub fn ccdf_svg(reports: &[EvalReport], metric: Metric) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 170.0, 20.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let lo = reports.iter().map(|r| metric.table(r).x[0]).fold(f64::INFINITY, f64::min);
    let hi = reports
        .iter()
        .map(|r| *metric.table(r).x.last().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sx = |x: f64| left + (x - lo) / span * pw;
    let sy = |y: f64| top + (1.0 - y) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (sx(lo + f * span), sy(f));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            x,
            top + ph + 18.0,
            lo + f * span
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{f:.2}</text>"#, left - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 10.0,
        metric.label()
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">P(X &gt; x)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, r) in reports.iter().enumerate() {
        let t = metric.table(r);
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = format!("{:.2},{:.2}", sx(lo), sy(1.0));
        let mut prev = 1.0;
        for (&x, &c) in t.x.iter().zip(&t.ccdf) {
            let _ = write!(pts, " {:.2},{:.2} {:.2},{:.2}", sx(x), sy(prev), sx(x), sy(c));
            prev = c;
        }
        let _ = write!(pts, " {:.2},{:.2}", sx(hi), sy(prev));
        let _ = writeln!(
            s,
            r#"<polyline data-policy="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>"#,
            escape(&r.policy_id)
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 10.0,
            left + pw + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + pw + 35.0,
            ly + 4.0,
            escape(&r.policy_id)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// File-name-safe form of a policy id.
pub fn slug(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

/// Writes one JSON report per policy, the comparison (CSV and JSON), and a
/// CSV and an SVG per metric into `dir`. Returns the written paths.
pub fn export_comparison(dir: &Path, reports: &[EvalReport], comparison: &Comparison) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let p = dir.join(format!("report_{i:02}_{}.json", slug(&r.policy_id)));
        write_atomic(&p, report_to_json(r).as_bytes())?;
        written.push(p);
    }
    let mut buf = Vec::new();
    write_comparison_csv(comparison, &mut buf)?;
    let p = dir.join("comparison.csv");
    write_atomic(&p, &buf)?;
    written.push(p);
    let p = dir.join("comparison.json");
    write_atomic(&p, serde_json::to_string_pretty(comparison).expect("serializes").as_bytes())?;
    written.push(p);
    for m in Metric::ALL {
        let mut buf = Vec::new();
        write_ccdf_csv(reports, m, &mut buf)?;
        let p = dir.join(format!("ccdf_{}.csv", m.name()));
        write_atomic(&p, &buf)?;
        written.push(p);
        let p = dir.join(format!("ccdf_{}.svg", m.name()));
        write_atomic(&p, ccdf_svg(reports, m).as_bytes())?;
        written.push(p);
    }
    Ok(written)
}
