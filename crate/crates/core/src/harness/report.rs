//! Markdown report and SVG figures for a result bundle.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::svg::{Figure, Series, SeriesStyle};
use super::{
    load_bundle, read_table, ResultBundle, DEGREE_DIST_TABLE, MAX_DEGREE_TABLE, PPP_TABLE, REGIME_TABLE, VERIFY_TABLE,
    ZERO_FRACTION_TABLE,
};
use crate::error::{Error, Result};
use crate::ppp::frechet_quantile;

pub const REPORT_FILE: &str = "report.md";
pub const FIGURE_DIR: &str = "figures";

/// Files written by `emit_report`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub report: PathBuf,
    pub figures: Vec<PathBuf>,
    /// Inputs that were expected but absent or unreadable.
    pub missing: Vec<String>,
}

struct Loaded {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Loaded {
    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn numbers(&self, names: &[&str]) -> Vec<Vec<f64>> {
        let idx: Vec<Option<usize>> = names.iter().map(|n| self.col(n)).collect();
        self.rows
            .iter()
            .map(|r| {
                idx.iter()
                    .map(|i| i.and_then(|i| r.get(i)).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }
}

fn markdown_table(out: &mut String, t: &Loaded) {
    let _ = writeln!(out, "| {} |", t.header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(t.header.len()));
    for r in &t.rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out.push('\n');
}

fn no_data(out: &mut String) {
    out.push_str("no data\n\n");
}

fn number(v: &Value, path: &[&str]) -> Option<f64> {
    let mut cur = v;
    for p in path {
        cur = cur.get(p)?;
    }
    cur.as_f64()
}

/// Write `report.md` and the figures into the bundle directory.
///
/// Works on partial bundles: whatever is missing is listed and its section
/// says "no data".
pub fn emit_report(dir: impl AsRef<Path>) -> Result<ReportOutput> {
    let dir = dir.as_ref();
    let fig_dir = dir.join(FIGURE_DIR);
    fs::create_dir_all(&fig_dir).map_err(|e| Error::io(&fig_dir, e))?;
    let mut missing = Vec::new();
    let bundle: Option<ResultBundle> = match load_bundle(dir) {
        Ok(b) => Some(b),
        Err(e) => {
            missing.push(e.to_string());
            None
        }
    };
    let summary = bundle.as_ref().map(|b| b.summary.clone()).unwrap_or(Value::Null);
    let mut tables: BTreeMap<&str, Loaded> = BTreeMap::new();
    if let Some(b) = &bundle {
        for entry in &b.manifest.tables {
            let path = dir.join(&entry.file);
            match read_table(&path) {
                Ok((header, rows)) => {
                    let key = [DEGREE_DIST_TABLE, MAX_DEGREE_TABLE, PPP_TABLE, ZERO_FRACTION_TABLE, REGIME_TABLE, VERIFY_TABLE]
                        .iter()
                        .map(|t| t.0)
                        .find(|f| *f == entry.file);
                    if let Some(k) = key {
                        tables.insert(k, Loaded { header, rows });
                    }
                }
                Err(e) => missing.push(e.to_string()),
            }
        }
    }

    let mut out = String::from("# Experiment report\n\n");
    let mut figures = Vec::new();
    let mut save = |name: &str, fig: &Figure| -> Result<()> {
        let path = fig_dir.join(name);
        fs::write(&path, fig.render()).map_err(|e| Error::io(&path, e))?;
        figures.push(path);
        Ok(())
    };

    out.push_str("## Configuration\n\n");
    match &bundle {
        Some(b) => {
            let c = &b.manifest.config;
            let _ = writeln!(out, "- experiment: {:?}", c.experiment);
            let _ = writeln!(out, "- model: {} (m = {})", c.model.name(), c.model.m());
            let _ = writeln!(out, "- fitness: {}", super::spec_label(&c.fitness));
            let _ = writeln!(out, "- n0 = {}, n_target = {}, replications = {}", c.n0, c.n_target, c.replications);
            let _ = writeln!(out, "- master seed {}, {} threads", c.master_seed, b.manifest.threads);
            let _ = writeln!(out, "- complete: {}", b.manifest.complete);
            for n in &b.manifest.notes {
                let _ = writeln!(out, "- note: {n}");
            }
            out.push('\n');
        }
        None => no_data(&mut out),
    }

    out.push_str("## Degree distribution\n\n");
    match tables.get(DEGREE_DIST_TABLE.0) {
        Some(t) if !t.rows.is_empty() => {
            let rows = t.numbers(&["replication", "n", "k", "p_n_k"]);
            let n_final = rows.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
            let mut reps = std::collections::BTreeSet::new();
            let mut pk: BTreeMap<u64, f64> = BTreeMap::new();
            for r in rows.iter().filter(|r| r[1] == n_final) {
                reps.insert(r[0] as u64);
                *pk.entry(r[2] as u64).or_default() += r[3];
            }
            let count = reps.len().max(1) as f64;
            let mut ccdf = Vec::new();
            let mut tail = 0.0;
            for (&k, &p) in pk.iter().rev() {
                tail += p / count;
                if k >= 1 {
                    ccdf.push((k as f64, tail));
                }
            }
            ccdf.reverse();
            let mut fig = Figure {
                title: format!("Degree CCDF at n = {n_final}"),
                x_label: "k".into(),
                y_label: "P(Z ≥ k)".into(),
                log_x: true,
                log_y: true,
                series: vec![Series::new("empirical", ccdf.clone(), SeriesStyle::Markers)],
            };
            if let (Some(e), Some(&(k0, c0))) = (number(&summary, &["tail_prediction", "exponent"]), ccdf.first()) {
                let k_end = ccdf.last().map_or(k0 * 10.0, |p| p.0);
                let slope = -(e - 1.0);
                let line = vec![(k0, c0), (k_end, c0 * (k_end / k0).powf(slope))];
                fig.series.push(Series::new(format!("predicted slope {slope:.3}"), line, SeriesStyle::Dashed));
                let _ = writeln!(out, "Predicted p(k) exponent {e:.4}, CCDF slope {slope:.4}.\n");
            }
            save("degree_ccdf.svg", &fig)?;
            out.push_str("![degree CCDF](figures/degree_ccdf.svg)\n\n");
            if let (Some(emp), Some(th)) = (summary["mean_pk"].as_array(), summary["theory_pk"].as_array()) {
                out.push_str("| k | mean p_n(k) | p(k) |\n|---|---|---|\n");
                for (k, (a, b)) in emp.iter().zip(th).enumerate() {
                    let _ = writeln!(out, "| {k} | {:.6} | {:.6} |", a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
                }
                if let Some(tv) = number(&summary, &["total_variation"]) {
                    let _ = writeln!(out, "\nTotal variation over k ≤ {}: {tv:.5}", emp.len() - 1);
                }
                out.push('\n');
            }
        }
        _ => no_data(&mut out),
    }

    out.push_str("## Maximum degree\n\n");
    let max_rows = tables.get(MAX_DEGREE_TABLE.0).map(|t| t.numbers(&["replication", "n", "I_n", "max_Z", "S_n", "u_n"]));
    match &max_rows {
        Some(rows) if !rows.is_empty() => {
            let mut by_rep: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
            let mut by_n: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for r in rows {
                by_rep.entry(r[0] as u64).or_default().push((r[1], r[3]));
                if r[3] > 0.0 {
                    by_n.entry(r[1] as u64).or_default().push(r[3].ln());
                }
            }
            let many = by_rep.len() > 1;
            let mut series: Vec<Series> = by_rep
                .into_iter()
                .take(100)
                .map(|(rep, pts)| Series {
                    background: many,
                    ..Series::new(format!("replication {rep}"), pts, SeriesStyle::Line)
                })
                .collect();
            let geo: Vec<(f64, f64)> = by_n.iter().map(|(&n, l)| (n as f64, (l.iter().sum::<f64>() / l.len() as f64).exp())).collect();
            series.push(Series::new("geometric mean", geo.clone(), SeriesStyle::Markers));
            if let (Some(b), Some(&(n0, y0))) = (number(&summary, &["predicted_slope"]), geo.first()) {
                let n1 = geo.last().map_or(n0, |p| p.0);
                series.push(Series::new(format!("slope {b:.3}"), vec![(n0, y0), (n1, y0 * (n1 / n0).powf(b))], SeriesStyle::Dashed));
            }
            save(
                "max_degree.svg",
                &Figure {
                    title: "Maximum in-degree".into(),
                    x_label: "n".into(),
                    y_label: "max Z_n".into(),
                    log_x: true,
                    log_y: true,
                    series,
                },
            )?;
            out.push_str("![max degree](figures/max_degree.svg)\n\n");
            for (label, key) in [
                ("fitted slope", "max_degree_slope"),
                ("predicted slope", "predicted_slope"),
                ("persistent maximizer fraction", "persistence_fraction"),
            ] {
                if let Some(v) = number(&summary, &[key]) {
                    let _ = writeln!(out, "- {label}: {v:.4}");
                }
            }
            out.push('\n');
        }
        _ => no_data(&mut out),
    }

    out.push_str("## Point-process limit\n\n");
    let ppp = tables.get(PPP_TABLE.0);
    match (number(&summary, &["g01"]), number(&summary, &["alpha"]), ppp) {
        (Some(g), Some(alpha), Some(ppp)) => {
            // Prefer simulated maxima; fall back to the point-process draws.
            let simulated: Vec<f64> = match &max_rows {
                Some(rows) if !rows.is_empty() => {
                    let n_final = rows.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
                    rows.iter().filter(|r| r[1] == n_final).map(|r| r[3] / r[5]).collect()
                }
                _ => Vec::new(),
            };
            let (label, mut values) = if simulated.is_empty() {
                ("sup over Π", ppp.numbers(&["sup_value"]).into_iter().map(|r| r[0]).collect::<Vec<_>>())
            } else {
                ("max Z_n / u_n", simulated)
            };
            values.retain(|v| v.is_finite());
            values.sort_by(f64::total_cmp);
            let len = values.len() as f64;
            let qq: Vec<(f64, f64)> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| (frechet_quantile(g, alpha, (i as f64 + 0.5) / len), v))
                .collect();
            let hi = qq.iter().map(|p| p.0.max(p.1)).filter(|v| v.is_finite()).fold(0.0, f64::max);
            save(
                "ppp_qq.svg",
                &Figure {
                    title: format!("QQ plot against exp(-{g:.5} x^-{:.2})", alpha - 1.0),
                    x_label: "limit quantile".into(),
                    y_label: label.into(),
                    log_x: false,
                    log_y: false,
                    series: vec![
                        Series::new(label, qq, SeriesStyle::Markers),
                        Series::new("y = x", vec![(0.0, 0.0), (hi, hi)], SeriesStyle::Dashed),
                    ],
                },
            )?;
            out.push_str("![QQ plot](figures/ppp_qq.svg)\n\n");
            for key in ["ks_sup", "ks_argmax", "ks_critical"] {
                if let Some(v) = number(&summary, &[key]) {
                    let _ = writeln!(out, "- {key}: {v:.4}");
                }
            }
            out.push('\n');
        }
        (_, _, Some(ppp)) => {
            let n = ppp.rows.len();
            let _ = writeln!(out, "{n} point-process samples; no closed-form limit law in this regime.\n");
        }
        _ => no_data(&mut out),
    }

    out.push_str("## Zero in-degree fraction\n\n");
    match tables.get(ZERO_FRACTION_TABLE.0) {
        Some(t) if !t.rows.is_empty() => {
            let mut by_n: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for r in t.numbers(&["n", "zero_indegree_fraction"]) {
                let e = by_n.entry(r[0] as u64).or_default();
                e.0 += r[1];
                e.1 += 1;
            }
            out.push_str("| n | mean fraction |\n|---|---|\n");
            for (n, (s, c)) in by_n {
                let _ = writeln!(out, "| {n} | {:.5} |", s / c as f64);
            }
            out.push('\n');
        }
        _ => no_data(&mut out),
    }

    for (title, key) in [("Regime scan", REGIME_TABLE.0), ("Verification", VERIFY_TABLE.0)] {
        let _ = writeln!(out, "## {title}\n");
        match tables.get(key) {
            Some(t) if !t.rows.is_empty() => markdown_table(&mut out, t),
            _ => no_data(&mut out),
        }
    }

    if !missing.is_empty() {
        out.push_str("## Missing inputs\n\n");
        for m in &missing {
            let _ = writeln!(out, "- {m}");
        }
        out.push('\n');
    }
    let report = dir.join(REPORT_FILE);
    fs::write(&report, out).map_err(|e| Error::io(&report, e))?;
    Ok(ReportOutput { report, figures, missing })
}
