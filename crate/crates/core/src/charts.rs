//! Minimal SVG bar charts for the report directory.
//!
//! Hand-rolled on purpose: the output must be byte-identical across runs
//! and platforms, so every coordinate is formatted with a fixed precision
//! and nothing depends on system fonts beyond a generic family name.

use std::path::Path;

use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 76.0;

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render labelled non-negative values as a vertical bar chart.
pub fn render_bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut svg = String::with_capacity(4096);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" \
         height=\"{HEIGHT:.0}\" viewBox=\"0 0 {WIDTH:.0} {HEIGHT:.0}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH:.0}\" height=\"{HEIGHT:.0}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        esc(title)
    ));

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let baseline = MARGIN_TOP + plot_h;

    if bars.is_empty() {
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" \
             font-size=\"14\" text-anchor=\"middle\">no data</text>\n",
            WIDTH / 2.0,
            MARGIN_TOP + plot_h / 2.0
        ));
        svg.push_str("</svg>\n");
        return svg;
    }

    let max = bars.iter().map(|(_, v)| *v).fold(0.0f64, f64::max).max(1e-12);
    // Axis and gridlines at 0, ½ and the maximum.
    for (frac, label) in [(0.0, 0.0), (0.5, max / 2.0), (1.0, max)] {
        let y = baseline - plot_h * frac;
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#cccccc\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0,
            trim_number(label)
        ));
    }

    let slot = plot_w / bars.len() as f64;
    let bar_w = (slot * 0.6).min(80.0);
    for (i, (label, value)) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let h = plot_h * (value / max);
        svg.push_str(&format!(
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" \
             fill=\"#4878a8\"/>\n",
            x - bar_w / 2.0,
            baseline - h
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            baseline - h - 5.0,
            trim_number(*value)
        ));
        // Slanted labels keep long names legible without measuring text.
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\" transform=\"rotate(-30 {x:.1} {:.1})\">{}</text>\n",
            baseline + 16.0,
            baseline + 16.0,
            esc(label)
        ));
    }
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT:.1}\" y1=\"{baseline:.1}\" x2=\"{:.1}\" \
         y2=\"{baseline:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Fixed-precision value label: integers stay integers, fractions keep
/// four significant decimals. Purely textual, so output is reproducible.
fn trim_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e12 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
