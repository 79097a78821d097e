//! BER-versus-SNR series and a minimal SVG line chart.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::SweepRecord;
use crate::turbo::Scheme;
use crate::{Error, Result};

/// Zero BER is drawn at this value on the log axis.
pub const DEFAULT_BER_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub snr_db: f64,
    pub ber: f64,
    /// Value to draw: `max(ber, floor)`.
    pub plotted: f64,
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub scheme: Scheme,
    pub outer_iter: usize,
    pub points: Vec<PlotPoint>,
}

impl Series {
    pub fn label(&self) -> String {
        match self.scheme {
            Scheme::Turbo => format!("turbo, iteration {}", self.outer_iter),
            other => other.name().replace('_', " "),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub floor: f64,
    pub series: Vec<Series>,
}

/// Groups records into one series per `(scheme, outer_iter)`, ordered by
/// scheme then iteration, with points sorted by SNR.
pub fn plot_data(records: &[SweepRecord], floor: f64) -> Result<PlotData> {
    if records.is_empty() {
        return Err(Error::Empty("plot: no records"));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(Error::InvalidParameter(format!("BER floor must lie in (0, 1), got {floor}")));
    }
    let mut keys: Vec<(Scheme, usize)> = records.iter().map(|r| (r.scheme, r.outer_iter)).collect();
    keys.sort();
    keys.dedup();
    let series = keys
        .into_iter()
        .map(|(scheme, outer_iter)| {
            let mut points: Vec<PlotPoint> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.outer_iter == outer_iter)
                .map(|r| PlotPoint {
                    snr_db: r.snr_db,
                    ber: r.ber,
                    plotted: r.ber.max(floor),
                    clipped: r.ber < floor,
                })
                .collect();
            points.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
            Series {
                scheme,
                outer_iter,
                points,
            }
        })
        .collect();
    Ok(PlotData { floor, series })
}

impl PlotData {
    /// Long-format table: `series,scheme,outer_iter,snr_db,ber,plotted_ber,clipped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,scheme,outer_iter,snr_db,ber,plotted_ber,clipped\n");
        for s in &self.series {
            for p in &s.points {
                writeln!(
                    out,
                    "{},{},{},{:.16e},{:.16e},{:.16e},{}",
                    s.label(),
                    s.scheme,
                    s.outer_iter,
                    p.snr_db,
                    p.ber,
                    p.plotted,
                    p.clipped
                )
                .unwrap();
            }
        }
        out
    }

    /// Log-scale BER chart; clipped points are drawn hollow.
    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 480.0;
        const LEFT: f64 = 80.0;
        const RIGHT: f64 = 200.0;
        const TOP: f64 = 30.0;
        const BOTTOM: f64 = 60.0;
        const COLORS: [&str; 8] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
        ];

        let all = self.series.iter().flat_map(|s| &s.points);
        let (mut x0, mut x1) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.snr_db), hi.max(p.snr_db))
        });
        if x1 - x0 < 1e-9 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        let top_decade = all.clone().map(|p| p.plotted.log10().ceil()).fold(f64::NEG_INFINITY, f64::max).min(0.0);
        let bottom_decade = self.floor.log10().floor();
        let (y0, y1) = (bottom_decade, top_decade.max(bottom_decade + 1.0));
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |ber: f64| TOP + (y1 - ber.log10()) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        let (gx0, gx1, gy0, gy1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let mut decade = y0;
        while decade <= y1 + 1e-9 {
            let y = py(10f64.powf(decade));
            writeln!(svg, r##"<line x1="{gx0}" y1="{y:.2}" x2="{gx1}" y2="{y:.2}" stroke="#ddd"/>"##).unwrap();
            writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#,
                gx0 - 6.0,
                y + 4.0,
                decade as i32
            )
            .unwrap();
            decade += 1.0;
        }
        let step = nice_step(x1 - x0);
        let mut tick = (x0 / step).ceil() * step;
        while tick <= x1 + 1e-9 {
            let x = px(tick);
            writeln!(svg, r##"<line x1="{x:.2}" y1="{gy0}" x2="{x:.2}" y2="{gy1}" stroke="#eee"/>"##).unwrap();
            writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#, gy1 + 18.0).unwrap();
            tick += step;
        }
        writeln!(
            svg,
            r#"<rect x="{gx0}" y="{gy0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            gx1 - gx0,
            gy1 - gy0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#,
            (gx0 + gx1) / 2.0,
            H - 18.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">BER</text>"#,
            (gy0 + gy1) / 2.0,
            (gy0 + gy1) / 2.0
        )
        .unwrap();

        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let coords: Vec<String> =
                s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.snr_db), py(p.plotted))).collect();
            writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            )
            .unwrap();
            for p in &s.points {
                let fill = if p.clipped { "white" } else { color };
                writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}" stroke="{color}"/>"#,
                    px(p.snr_db),
                    py(p.plotted)
                )
                .unwrap();
            }
            let ly = TOP + 16.0 + 18.0 * i as f64;
            let lx = W - RIGHT + 14.0;
            writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            )
            .unwrap();
            writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, s.label()).unwrap();
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Writes `<stem>_series.csv` and `<stem>.svg` next to `stem` and returns the
/// series and the two paths.
pub fn emit_plot_data(records: &[SweepRecord], floor: f64, stem: &Path) -> Result<(PlotData, [PathBuf; 2])> {
    let data = plot_data(records, floor)?;
    let name = stem.file_name().and_then(|n| n.to_str()).unwrap_or("plot");
    let series_path = stem.with_file_name(format!("{name}_series.csv"));
    let svg_path = stem.with_file_name(format!("{name}.svg"));
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(&series_path, data.to_csv()).map_err(|e| Error::io(&series_path, e))?;
    std::fs::write(&svg_path, data.to_svg()).map_err(|e| Error::io(&svg_path, e))?;
    Ok((data, [series_path, svg_path]))
}
