//! CSV and SVG output for experiment batteries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::battery::{ComparisonReport, Metric};
use crate::HarnessError;

pub const RESULTS_HEADER: [&str; 11] = [
    "scenario",
    "n",
    "speed_kmh",
    "instance",
    "method",
    "duration_s",
    "dec_j",
    "drone_nodes",
    "search_duration_s",
    "ras_violations",
    "error",
];

pub const AGGREGATE_HEADER: [&str; 14] = [
    "scenario",
    "n",
    "speed_kmh",
    "baseline",
    "method",
    "metric",
    "paired",
    "ratio_count",
    "wins",
    "baseline_mean",
    "method_mean",
    "mean_reduction_pct",
    "ci_low_pct",
    "ci_high_pct",
];

pub const TIMING_HEADER: [&str; 7] = ["scenario", "n", "speed_kmh", "instance", "method", "search_s", "finalize_s"];

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn results_csv(reports: &[ComparisonReport]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER)?;
    for rep in reports {
        let c = &rep.cell;
        for r in &rep.results {
            w.write_record([
                c.scenario.clone(),
                c.n.to_string(),
                num(c.speed_kmh),
                r.instance.to_string(),
                r.method.clone(),
                num(r.duration),
                num(r.dec),
                r.drone_nodes.to_string(),
                num(r.search_duration),
                r.ras_violations.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

pub fn aggregate_csv(reports: &[ComparisonReport]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AGGREGATE_HEADER)?;
    for rep in reports {
        let c = &rep.cell;
        for a in &rep.aggregates {
            w.write_record([
                c.scenario.clone(),
                c.n.to_string(),
                num(c.speed_kmh),
                a.baseline.clone(),
                a.method.clone(),
                a.metric.name().to_string(),
                a.paired.to_string(),
                a.ratio_count.to_string(),
                a.wins.to_string(),
                num(a.baseline_mean),
                num(a.method_mean),
                num(a.mean_reduction_pct),
                num(a.ci_low_pct),
                num(a.ci_high_pct),
            ])?;
        }
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

pub fn timing_csv(reports: &[ComparisonReport]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TIMING_HEADER)?;
    for rep in reports {
        let c = &rep.cell;
        for t in &rep.timings {
            w.write_record([
                c.scenario.clone(),
                c.n.to_string(),
                num(c.speed_kmh),
                t.instance.to_string(),
                t.method.clone(),
                num(t.search_s),
                num(t.finalize_s),
            ])?;
        }
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

/// Line chart of mean duration reduction against truck speed, one line per node count.
pub fn reduction_chart(reports: &[ComparisonReport], baseline: &str, method: &str) -> String {
    let mut series: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for rep in reports {
        if let Some(a) = rep.aggregate(baseline, method, Metric::Duration) {
            if a.mean_reduction_pct.is_finite() {
                series.entry(rep.cell.n).or_default().push((rep.cell.speed_kmh, a.mean_reduction_pct));
            }
        }
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, mut y1) = all.iter().fold((0.0f64, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 70.0, 140.0, 40.0, 50.0);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="15" text-anchor="middle">Mean duration reduction of {} vs {}</text>"#,
        w / 2.0,
        escape(method),
        escape(baseline)
    );
    let (ax0, ay0) = (sx(x0), sy(y0));
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{}" y2="{ay0}" stroke="black"/>"#, sx(x1));
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{ax0}" y2="{}" stroke="black"/>"#, sy(y1));
    for k in 0..=4 {
        let yv = y0 + (y1 - y0) * k as f64 / 4.0;
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{yv:.1}</text>"#,
            left - 6.0,
            sy(yv) + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{xv:.0}</text>"#,
            sx(xv),
            h - bottom + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">truck speed (km/h)</text>"#,
        sx((x0 + x1) / 2.0),
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 {})">reduction (%)</text>"#,
        sy((y0 + y1) / 2.0),
        sy((y0 + y1) / 2.0)
    );
    for (idx, (n, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = top + 10.0 + 18.0 * idx as f64;
        let lx = w - right + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">n = {n}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `results.csv`, `aggregate.csv` and one SVG per estimator compared
/// against the truck-only tour. Returns the paths written.
pub fn emit_report(reports: &[ComparisonReport], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<(), HarnessError> {
        let p = out_dir.join(name);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    put("results.csv", &results_csv(reports)?)?;
    put("aggregate.csv", &aggregate_csv(reports)?)?;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for rep in reports {
        for a in rep.aggregates.iter().filter(|a| a.metric == Metric::Duration) {
            let key = (a.baseline.clone(), a.method.clone());
            if !pairs.contains(&key) {
                pairs.push(key);
            }
        }
    }
    for (b, m) in pairs {
        let name = format!("reduction_{}_vs_{}.svg", m.to_lowercase(), b.to_lowercase());
        put(&name, reduction_chart(reports, &b, &m).as_bytes())?;
    }
    Ok(written)
}

/// Wall-clock timings go to their own file so the other outputs stay reproducible.
pub fn emit_timing(reports: &[ComparisonReport], out_dir: &Path) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(out_dir)?;
    let p = out_dir.join("timing.csv");
    fs::write(&p, timing_csv(reports)?)?;
    Ok(p)
}
