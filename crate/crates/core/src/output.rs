//! CSV, JSON and SVG writers for sweep records, and the overlay reader.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::CurveRecord;

pub const CSV_HEADER: [&str; 5] = ["d_tot_km", "curve_id", "rate_bits_per_use", "rate_clamped", "notes"];
pub const OVERLAY_HEADER: [&str; 2] = ["d_tot_km", "rate_bits_per_use"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::invalid(format!("unknown format `{other}`"))),
        }
    }
}

/// Positional decimal notation with `sig` significant digits.
pub fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // Round in scientific notation first so the exponent reflects rounding.
    let sci = format!("{:.*e}", sig.saturating_sub(1), x);
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = sig as i32 - 1 - exp;
    let rounded: f64 = sci.parse().unwrap_or(x);
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, rounded)
    } else {
        format!("{rounded:.0}")
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| format_significant(v, 10)).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[CurveRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            format_significant(r.d_tot, 10),
            r.curve_id.clone(),
            opt_num(r.rate_raw),
            opt_num(r.rate_clamped),
            r.notes.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[CurveRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Log-scale rate axis limits of the plot, in bits per use.
pub const PLOT_RATE_RANGE: (f64, f64) = (1e-8, 10.0);

/// Curve pairs drawn as a single shaded band.
const BANDS: [(&str, &str, &str); 2] = [
    ("capacity", "capacity-lower", "capacity-upper"),
    ("dv-best-semi", "dv-best-semi-low", "dv-best-semi-high"),
];

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    d_min: f64,
    d_max: f64,
}

impl Frame {
    fn x(&self, d: f64) -> f64 {
        let span = (self.d_max - self.d_min).max(f64::MIN_POSITIVE);
        self.left + (d - self.d_min) / span * (self.width - self.left - self.right)
    }

    fn y(&self, r: f64) -> f64 {
        let (lo, hi) = (PLOT_RATE_RANGE.0.log10(), PLOT_RATE_RANGE.1.log10());
        let v = r.max(PLOT_RATE_RANGE.0).min(PLOT_RATE_RANGE.1).log10();
        self.top + (hi - v) / (hi - lo) * (self.height - self.top - self.bottom)
    }
}

/// Clamped rates of one curve in distance order, keeping only points that
/// fall on the plotted rate range.
fn points(records: &[CurveRecord], curve: &str) -> Vec<(f64, Option<f64>)> {
    let mut v: Vec<(f64, Option<f64>)> = records
        .iter()
        .filter(|r| r.curve_id == curve)
        .map(|r| (r.d_tot, r.rate_clamped.filter(|&x| x >= PLOT_RATE_RANGE.0)))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn polyline_segments(frame: &Frame, pts: &[(f64, Option<f64>)]) -> Vec<String> {
    let mut segs = Vec::new();
    let mut cur = String::new();
    for &(d, r) in pts {
        match r {
            Some(r) => {
                let _ = write!(cur, "{:.2},{:.2} ", frame.x(d), frame.y(r));
            }
            None if !cur.is_empty() => segs.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        segs.push(cur);
    }
    segs.into_iter().map(|s| s.trim_end().to_string()).collect()
}

/// Renders a log-rate versus distance plot, one series per curve, with
/// optional overlay points drawn as squares.
pub fn render_svg(records: &[CurveRecord], overlay: &[(f64, f64)], title: &str) -> String {
    let mut curves: Vec<&str> = Vec::new();
    for r in records {
        if !curves.contains(&r.curve_id.as_str()) {
            curves.push(&r.curve_id);
        }
    }
    let d_min = records.iter().map(|r| r.d_tot).fold(f64::INFINITY, f64::min);
    let d_max = records.iter().map(|r| r.d_tot).fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame { width: 720.0, height: 480.0, left: 70.0, right: 170.0, top: 40.0, bottom: 50.0, d_min, d_max };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, frame.width / 2.0, xml_escape(title));

    // Axes and decade grid lines.
    let (x0, x1) = (frame.x(d_min), frame.x(d_max));
    let (y0, y1) = (frame.y(PLOT_RATE_RANGE.0), frame.y(PLOT_RATE_RANGE.1));
    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}"/>"#, x1 - x0, y0 - y1);
    let (lo, hi) = (PLOT_RATE_RANGE.0.log10().round() as i32, PLOT_RATE_RANGE.1.log10().round() as i32);
    for e in lo..=hi {
        let y = frame.y(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x0:.2}" x2="{x1:.2}" y1="{y:.2}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">1e{e}</text>"#, x0 - 6.0, y + 4.0);
    }
    for i in 0..=5 {
        let d = d_min + (d_max - d_min) * i as f64 / 5.0;
        let x = frame.x(d);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{}</text>"#, y0 + 18.0, format_significant(d, 3));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">total distance (km)</text>"#, (x0 + x1) / 2.0, frame.height - 10.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">rate (bits per relay use)</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);

    let mut drawn: Vec<&str> = Vec::new();
    let mut legend: Vec<(String, &str)> = Vec::new();
    for &c in &curves {
        if drawn.contains(&c) {
            continue;
        }
        let color = PALETTE[legend.len() % PALETTE.len()];
        let band = BANDS.iter().find(|(_, lo, hi)| {
            (c == *lo || c == *hi) && curves.contains(lo) && curves.contains(hi)
        });
        if let Some(&(name, lo, hi)) = band {
            drawn.extend([lo, hi]);
            let (pl, ph) = (points(records, lo), points(records, hi));
            let _ = writeln!(s, r#"<g class="series band" data-curve="{name}">"#);
            let lower: Vec<(f64, f64)> = pl.iter().map(|&(d, r)| (d, r.unwrap_or(PLOT_RATE_RANGE.0))).collect();
            let upper: Vec<(f64, f64)> = ph.iter().map(|&(d, r)| (d, r.unwrap_or(PLOT_RATE_RANGE.0))).collect();
            let mut poly = String::new();
            for &(d, r) in upper.iter().chain(lower.iter().rev()) {
                let _ = write!(poly, "{:.2},{:.2} ", frame.x(d), frame.y(r));
            }
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.25" stroke="none"/>"#, poly.trim_end());
            for p in [&pl, &ph] {
                for seg in polyline_segments(&frame, p) {
                    let _ = writeln!(s, r#"<polyline points="{seg}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
                }
            }
            let _ = writeln!(s, "</g>");
            legend.push((format!("{lo} .. {hi}"), color));
        } else {
            drawn.push(c);
            let _ = writeln!(s, r#"<g class="series" data-curve="{}">"#, xml_escape(c));
            for seg in polyline_segments(&frame, &points(records, c)) {
                let _ = writeln!(s, r#"<polyline points="{seg}" fill="none" stroke="{color}" stroke-width="2"/>"#);
            }
            let _ = writeln!(s, "</g>");
            legend.push((c.to_string(), color));
        }
    }

    if !overlay.is_empty() {
        let _ = writeln!(s, r#"<g class="overlay">"#);
        for &(d, r) in overlay {
            if r < PLOT_RATE_RANGE.0 || d < d_min || d > d_max {
                continue;
            }
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="black"/>"#, frame.x(d) - 3.5, frame.y(r) - 3.5);
        }
        let _ = writeln!(s, "</g>");
        legend.push(("data".to_string(), "black"));
    }

    let lx = frame.width - frame.right + 12.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, (name, color)) in legend.iter().enumerate() {
        let y = frame.top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="{color}" stroke-width="3"/>"#, lx + 18.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 24.0, y + 4.0, xml_escape(name));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes `records` to `path` in the requested format.
pub fn emit_outputs(
    records: &[CurveRecord],
    format: OutputFormat,
    path: &Path,
    overlay: &[(f64, f64)],
    title: &str,
) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(records, &mut out)?,
        OutputFormat::Json => write_json(records, &mut out)?,
        OutputFormat::Svg => out.write_all(render_svg(records, overlay, title).as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

/// Reads user-supplied measured points from a two-column CSV file.
pub fn load_overlay_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    parse_overlay_points(&text)
}

pub fn parse_overlay_points(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut saw_header = false;
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if !saw_header {
            if row.iter().collect::<Vec<_>>() != OVERLAY_HEADER {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected header `{}`", OVERLAY_HEADER.join(",")),
                });
            }
            saw_header = true;
            continue;
        }
        if row.len() != 2 {
            return Err(Error::Parse { line, msg: format!("expected 2 fields, found {}", row.len()) });
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            let v: f64 = row[i]
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("{what} `{}` is not a number", &row[i]) })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse { line, msg: format!("{what} must be finite") })
            }
        };
        let d = num(0, "distance")?;
        let r = num(1, "rate")?;
        if d < 0.0 {
            return Err(Error::Parse { line, msg: format!("negative distance {d}") });
        }
        if r < 0.0 {
            return Err(Error::Parse { line, msg: format!("negative rate {r}") });
        }
        out.push((d, r));
    }
    if !saw_header {
        return Err(Error::Parse { line: 1, msg: "empty overlay file".into() });
    }
    Ok(out)
}
