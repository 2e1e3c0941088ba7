//! CSV and SVG emission for sweeps and profile slices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiments::{ProfileRun, Slice, SweepResult};

/// 17 significant digits, enough to reparse the exact double.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::from("nu,e\n");
    for &(nu, e) in &result.pairs {
        let _ = writeln!(s, "{},{}", num(nu), num(e));
    }
    s
}

pub fn sweep_summary_csv(result: &SweepResult) -> String {
    format!(
        "slope,intercept,r2\n{},{},{}\n",
        num(result.fit.slope),
        num(result.fit.intercept),
        num(result.fit.r2)
    )
}

pub fn slice_csv(slice: &Slice) -> String {
    let mut s = String::from("xi,v\n");
    for (xi, v) in slice.xi.iter().zip(&slice.values) {
        let _ = writeln!(s, "{},{}", num(*xi), num(*v));
    }
    s
}

pub struct Series<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

/// Minimal line plot: frame, axis ticks at the data extremes, one polyline per series.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(s, r#"<text x="{M}" y="{}" text-anchor="middle">{x0:.3}</text>"#, H - M + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x1:.3}</text>"#, W - M, H - M + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, M - 4.0, H - M);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, M - 4.0, M + 4.0);
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - M - 120.0,
            M + 16.0 + 14.0 * k as f64,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

/// Write `sweep.csv`, `sweep_summary.csv` and optionally `sweep.svg`.
pub fn emit_sweep(result: &SweepResult, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    write(dir.join("sweep.csv"), &sweep_csv(result), &mut written)?;
    write(dir.join("sweep_summary.csv"), &sweep_summary_csv(result), &mut written)?;
    if plots {
        let fit: Vec<(f64, f64)> = result
            .pairs
            .iter()
            .map(|&(nu, _)| (nu, result.fit.slope * nu + result.fit.intercept))
            .collect();
        let svg = svg_plot(
            "squared distance between diffusive and diffusion-less runs",
            "nu",
            "e(nu)",
            &[
                Series { label: "e(nu)".into(), points: &result.pairs },
                Series { label: "linear fit".into(), points: &fit },
            ],
        );
        write(dir.join("sweep.svg"), &svg, &mut written)?;
    }
    Ok(written)
}

pub fn slice_file_name(nu: f64, t: f64) -> String {
    format!("slice_nu{nu}_t{t}.csv")
}

/// Write one `xi,v` CSV per run and time, plus an optional overlay plot per time.
pub fn emit_profiles(runs: &[ProfileRun], dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for run in runs {
        for slice in &run.slices {
            write(dir.join(slice_file_name(run.nu, slice.time)), &slice_csv(slice), &mut written)?;
        }
    }
    if plots {
        let mut times: Vec<f64> = runs.iter().flat_map(|r| r.slices.iter().map(|s| s.time)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for t in times {
            let pts: Vec<(String, Vec<(f64, f64)>)> = runs
                .iter()
                .filter_map(|r| {
                    r.slice_at(t).map(|s| {
                        (
                            format!("nu = {}", r.nu),
                            s.xi.iter().copied().zip(s.values.iter().copied()).collect(),
                        )
                    })
                })
                .collect();
            let series: Vec<Series<'_>> = pts
                .iter()
                .map(|(label, p)| Series { label: label.clone(), points: p })
                .collect();
            let svg = svg_plot(&format!("v(0, xi, {t})"), "xi", "v", &series);
            write(dir.join(format!("slices_t{t}.svg")), &svg, &mut written)?;
        }
    }
    Ok(written)
}
