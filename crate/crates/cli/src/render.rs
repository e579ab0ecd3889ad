//! ASCII and SVG renderings of slope polygons.
//!
//! ASCII mode prints slope-run-length notation; SVG mode draws the polygons
//! on a lattice grid with breakpoints marked. Rendering converts exact
//! rationals to floats for coordinates only; no computation happens here.

use fcrystal_core::polygon::Polygon;
use num::ToPrimitive;

pub fn polygon_ascii(label: &str, p: &Polygon) -> String {
    let body = if p.is_empty() {
        "(empty)".to_string()
    } else {
        p.segments()
            .iter()
            .map(|(s, m)| format!("{s} x{m}"))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let bps: Vec<String> = p.breakpoints().iter().map(|b| b.to_string()).collect();
    if bps.is_empty() {
        format!("{label} (h={}): {body}", p.height())
    } else {
        format!(
            "{label} (h={}): {body}   breakpoints: {}",
            p.height(),
            bps.join(" ")
        )
    }
}

const SCALE: f64 = 48.0;
const PAD: f64 = 36.0;

/// Draws the given labelled polygons into one SVG document with integer
/// gridlines and marked breakpoints.
pub fn polygons_svg(items: &[(&str, &Polygon)]) -> String {
    let max_h = items.iter().map(|(_, p)| p.height()).max().unwrap_or(1).max(1);
    let max_total = items
        .iter()
        .map(|(_, p)| p.total().to_f64().unwrap_or(0.0))
        .fold(1.0_f64, f64::max)
        .ceil();
    let width = PAD * 2.0 + max_h as f64 * SCALE;
    let height = PAD * 2.0 + max_total * SCALE;
    let x = |u: f64| PAD + u * SCALE;
    let y = |v: f64| height - PAD - v * SCALE;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" width=\"{width:.0}\" height=\"{height:.0}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // lattice gridlines
    for gx in 0..=max_h {
        out.push_str(&format!(
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            x(gx as f64),
            y(0.0),
            y(max_total)
        ));
    }
    let mut gy = 0.0;
    while gy <= max_total {
        out.push_str(&format!(
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            x(0.0),
            y(gy),
            x(max_h as f64)
        ));
        gy += 1.0;
    }

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];
    for (idx, (label, p)) in items.iter().enumerate() {
        let color = colors[idx % colors.len()];
        let mut pts = vec![(0.0_f64, 0.0_f64)];
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (s, m) in p.segments() {
            cx += *m as f64;
            cy += s.to_f64().unwrap_or(0.0) * *m as f64;
            pts.push((cx, cy));
        }
        let path: Vec<String> = pts
            .iter()
            .map(|(u, v)| format!("{:.1},{:.1}", x(*u), y(*v)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for bp in p.breakpoints() {
            let v = bp.x2.to_f64().unwrap_or(0.0);
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"{color}\"/>\n",
                x(bp.x1 as f64),
                y(v)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\" font-size=\"14\">{label}</text>\n",
            PAD,
            16.0 + idx as f64 * 16.0
        ));
    }
    out.push_str("</svg>\n");
    out
}
