//! CSV and SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{ConvergenceRecord, GroupKey, RateFit};
use crate::error::{Error, Result};

pub const RECORDS_HEADER: [&str; 15] = [
    "method", "pde", "tau", "eps", "gamma", "NX", "NY", "NZ", "hX", "rel_l2", "cond", "kappaW", "truncated", "seed",
    "wall_ms",
];

const RATES_HEADER: [&str; 9] =
    ["method", "pde", "tau", "gamma", "slope", "intercept", "r_squared", "points_used", "excluded"];

/// 17 significant digits.
fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    Error::Io { path: path.to_path_buf(), source }
}

/// `records.csv` contents.
pub fn records_csv(records: &[ConvergenceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let here = Path::new("records.csv");
    w.write_record(RECORDS_HEADER).map_err(|e| csv_error(here, e))?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.pde.clone(),
            r.tau.to_string(),
            real(r.eps),
            real(r.gamma),
            r.n_x.to_string(),
            r.n_y.to_string(),
            r.n_z.to_string(),
            real(r.h_x),
            real(r.rel_l2),
            opt(r.cond_logged),
            opt(r.kappa_w),
            r.truncated.to_string(),
            r.seed.to_string(),
            r.wall_ms.to_string(),
        ])
        .map_err(|e| csv_error(here, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io { path: here.to_path_buf(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

fn rates_csv(fits: &[(GroupKey, Result<RateFit>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let here = Path::new("rates.csv");
    w.write_record(RATES_HEADER).map_err(|e| csv_error(here, e))?;
    for (k, fit) in fits {
        let cols = match fit {
            Ok(f) => [
                real(f.slope),
                real(f.intercept),
                real(f.r_squared),
                f.points_used.to_string(),
                f.excluded.to_string(),
            ],
            Err(_) => Default::default(),
        };
        let mut row = vec![k.method.name().to_string(), k.pde.clone(), k.tau.to_string(), real(k.gamma)];
        row.extend(cols);
        w.write_record(&row).map_err(|e| csv_error(here, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io { path: here.to_path_buf(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Log-log plot of `rel_l2` against `h_X`, one polyline per method and
/// `gamma`, with a dashed line of slope `tau` for reference.
pub fn render_svg(title: &str, tau: u32, records: &[&ConvergenceRecord]) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.h_x > 0.0 && r.rel_l2 > 0.0 && r.rel_l2.is_finite())
        .map(|r| (r.h_x.log10(), r.rel_l2.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, xml_escape(title));
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let bound = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
        }
    };
    let (x0, x1) = bound(|p| p.0);
    let (y0, y1) = bound(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = writeln!(
        svg,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">log10 h_X</text>"#, w / 2.0, h - 20.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">log10 relative L2 error</text>"#,
        h / 2.0,
        h / 2.0
    );

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        if !(r.h_x > 0.0 && r.rel_l2 > 0.0 && r.rel_l2.is_finite()) {
            continue;
        }
        let label = format!("{} gamma={}", r.method.name(), r.gamma);
        let p = (r.h_x.log10(), r.rel_l2.log10());
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(p),
            None => series.push((label, vec![p])),
        }
    }
    for (i, (label, mut v)) in series.into_iter().enumerate() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = v.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.join(" "));
        for (x, y) in &v {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{colour}">{}</text>"#,
            w - m - 150.0,
            m + 16.0 + 14.0 * i as f64,
            xml_escape(&label)
        );
    }
    // Reference slope through the smallest-h point.
    let anchor = pts.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    let (ya, yb) = (anchor.1, anchor.1 + tau as f64 * (x1 - anchor.0));
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
        sx(anchor.0),
        sy(ya),
        sx(x1),
        sy(yb.min(y1))
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="11" fill="gray">slope {tau}</text>"#,
        m + 8.0,
        h - m - 8.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `records.csv`, `rates.csv` and, when `plots` is set, one SVG per
/// `(pde, tau)`. Returns the written paths.
pub fn emit_outputs(
    records: &[ConvergenceRecord],
    fits: &[(GroupKey, Result<RateFit>)],
    dir: &Path,
    plots: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut written = vec![
        write(dir.join("records.csv"), &records_csv(records)?)?,
        write(dir.join("rates.csv"), &rates_csv(fits)?)?,
    ];
    if plots {
        let mut groups: Vec<(String, u32)> = Vec::new();
        for r in records {
            let k = (r.pde.clone(), r.tau);
            if !groups.contains(&k) {
                groups.push(k);
            }
        }
        for (pde, tau) in groups {
            let sel: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.pde == pde && r.tau == tau).collect();
            let svg = render_svg(&format!("{pde}, tau = {tau}"), tau, &sel);
            let name: String = pde.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            written.push(write(dir.join(format!("convergence_{name}_tau{tau}.svg")), &svg)?);
        }
    }
    Ok(written)
}
