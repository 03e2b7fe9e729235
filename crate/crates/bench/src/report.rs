//! CSV and SVG output for result tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Algorithm;
use crate::experiment::{ResultRow, ResultTable};
use crate::BenchError;

pub const CSV_HEADER: [&str; 7] = ["algorithm", "ratio", "mean_cost", "feasible_rate", "mean_makespan", "reps", "seed"];

/// The value shown in the cost column. With `signed_infeasible`, a cell with no
/// feasible trial shows the negated mean cost of all trials, or -1 when
/// that mean is zero.
pub fn displayed_cost(row: &ResultRow, signed_infeasible: bool) -> Option<f64> {
    match (row.mean_cost, signed_infeasible) {
        (Some(c), _) => Some(c),
        (None, false) => None,
        (None, true) if row.mean_cost_all > 0.0 => Some(-row.mean_cost_all),
        (None, true) => Some(-1.0),
    }
}

pub fn results_csv(table: &ResultTable, signed_infeasible: bool) -> Result<String, BenchError> {
    if table.rows.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &table.rows {
        let cost = displayed_cost(r, signed_infeasible).map(|c| c.to_string()).unwrap_or_default();
        w.write_record([
            r.algorithm.name().to_string(),
            r.ratio.to_string(),
            cost,
            r.feasible_rate.to_string(),
            r.mean_makespan.to_string(),
            r.reps.to_string(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per trial; wall-clock time is left out so reruns compare equal.
pub fn trials_csv(table: &ResultTable) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "ratio", "trial", "seed", "feasible", "cost", "makespan"])?;
    for t in &table.trials {
        w.write_record([
            t.algorithm.name().to_string(),
            t.ratio.to_string(),
            t.index.to_string(),
            t.seed.to_string(),
            t.feasible.to_string(),
            t.cost.to_string(),
            t.makespan.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const PALETTE: [&str; 4] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759"];

/// Grouped bars: one group per deadline ratio, one bar per algorithm.
/// Negative (signed infeasible) cells hang below the axis.
pub fn results_svg(table: &ResultTable, signed_infeasible: bool) -> Result<String, BenchError> {
    if table.rows.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let mut ratios: Vec<f64> = Vec::new();
    let mut algs: Vec<Algorithm> = Vec::new();
    for r in &table.rows {
        if !ratios.contains(&r.ratio) {
            ratios.push(r.ratio);
        }
        if !algs.contains(&r.algorithm) {
            algs.push(r.algorithm);
        }
    }
    let values: Vec<f64> = table.rows.iter().filter_map(|r| displayed_cost(r, signed_infeasible)).collect();
    let top = values.iter().copied().fold(0.0, f64::max);
    let bottom = values.iter().copied().fold(0.0, f64::min);
    let span = if top - bottom > 0.0 { top - bottom } else { 1.0 };

    let (w, h, margin) = (120.0 * ratios.len() as f64 + 140.0, 360.0, 50.0);
    let plot_h = h - 2.0 * margin;
    let y_of = |v: f64| margin + (top - v) / span * plot_h;
    let bar_w = 90.0 / algs.len() as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{margin}" y="20">mean cost ($) by deadline ratio</text>"#);
    let zero = y_of(0.0);
    let _ = writeln!(s, r#"<line x1="{margin}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#, w - 90.0);
    for (gi, ratio) in ratios.iter().enumerate() {
        let gx = margin + 10.0 + 120.0 * gi as f64;
        for (ai, alg) in algs.iter().enumerate() {
            let Some(row) = table.row(*alg, *ratio) else { continue };
            let Some(v) = displayed_cost(row, signed_infeasible) else { continue };
            let (y0, y1) = (y_of(v.max(0.0)), y_of(v.min(0.0)));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{alg} r={ratio}: {v}</title></rect>"#,
                gx + bar_w * ai as f64,
                bar_w - 2.0,
                (y1 - y0).max(0.5),
                PALETTE[ai % PALETTE.len()],
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">r={ratio}</text>"#, gx + 30.0, h - margin + 20.0);
    }
    for (ai, alg) in algs.iter().enumerate() {
        let y = margin + 16.0 * ai as f64;
        let _ = writeln!(s, r#"<rect x="{:.2}" y="{y}" width="10" height="10" fill="{}"/>"#, w - 80.0, PALETTE[ai % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{alg}</text>"#, w - 65.0, y + 9.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `results.csv`, `trials.csv` and `results.svg` into `dir`.
pub fn emit_results(table: &ResultTable, dir: &Path, signed_infeasible: bool) -> Result<Vec<PathBuf>, BenchError> {
    let files = [
        ("results.csv", results_csv(table, signed_infeasible)?),
        ("trials.csv", trials_csv(table)?),
        ("results.svg", results_svg(table, signed_infeasible)?),
    ];
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io(dir.to_path_buf(), e))?;
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| BenchError::Io(path.clone(), e))?;
        written.push(path);
    }
    Ok(written)
}
