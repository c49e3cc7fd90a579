//! Minimal static SVG line charts for the Fig.-1 style panels.

use std::fmt::Write;

use super::fig1::{Fig1Panel, Fig1Series};
use super::sweep::{MatchKind, SweepPoint};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 5] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

type Extract = fn(&SweepPoint) -> Option<f64>;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_max(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let exp = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * exp >= v {
            return m * exp;
        }
    }
    10.0 * exp
}

#[allow(clippy::too_many_arguments)]
fn panel(
    svg: &mut String,
    series: &[(usize, &Fig1Series)],
    ox: f64,
    oy: f64,
    title: &str,
    ylabel: &str,
    value: Extract,
) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let (x0, y0) = (ox + MARGIN_L, oy + MARGIN_T);
    let x_max = 0.55;
    let y_max = nice_max(
        series.iter().flat_map(|(_, s)| s.records.iter().filter_map(|r| r.point().and_then(value))).fold(0.0, f64::max),
    );
    let px = |x: f64| x0 + x / x_max * plot_w;
    let py = |y: f64| y0 + plot_h - y / y_max * plot_h;

    let _ =
        writeln!(svg, r##"<rect x="{x0}" y="{y0}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        x0 + plot_w / 2.0,
        oy + 18.0,
        escape(title)
    );
    for k in 0..=5 {
        let xv = k as f64 * 0.1;
        let yv = y_max * k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#444"/>"##,
            px(xv),
            y0 + plot_h,
            y0 + plot_h + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{xv:.1}</text>"#,
            px(xv),
            y0 + plot_h + 16.0
        );
        let _ = writeln!(svg, r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#444"/>"##, x0 - 4.0, py(yv), x0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{yv:.2e}</text>"#,
            x0 - 6.0,
            py(yv) + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">B/A</text>"#,
        x0 + plot_w / 2.0,
        oy + PANEL_H - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{0}" y="{1}" text-anchor="middle" font-size="11" transform="rotate(-90 {0} {1})">{2}</text>"#,
        ox + 14.0,
        y0 + plot_h / 2.0,
        escape(ylabel)
    );

    for &(idx, s) in series {
        let color = COLORS[idx % COLORS.len()];
        for kind in [MatchKind::Energy, MatchKind::Entanglement] {
            let pts: Vec<(f64, f64)> = s
                .records
                .iter()
                .filter(|r| r.match_kind == kind)
                .filter_map(|r| r.point().and_then(value).map(|v| (r.b_over_a, v)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let dash = if kind == MatchKind::Entanglement { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}"{dash}/>"#, path.join(" "));
            // full symbols: energy matching, open symbols: entanglement matching
            let fill = if kind == MatchKind::Energy { color } else { "white" };
            for &(x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="{color}"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
    }
    for (row, &(idx, s)) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let (lx, ly) = (x0 + 8.0, y0 + 14.0 + 14.0 * row as f64);
        let _ = writeln!(svg, r#"<circle cx="{lx}" cy="{}" r="3" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" font-size="10">{}</text>"#, lx + 8.0, escape(&s.spec.label));
    }
}

/// Two columns (PSSV, psi01) by two rows (N_R/N_G, N_R/N_0).
pub fn render_fig1_svg(series: &[Fig1Series]) -> String {
    let width = 2.0 * PANEL_W;
    let height = 2.0 * PANEL_H + 20.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let rows: [(&str, Extract); 2] =
        [("N_R / N_G", |p: &SweepPoint| p.ratio_rg), ("N_R / N_0", |p: &SweepPoint| p.ratio_r0)];
    for (col, (panel_kind, name)) in [(Fig1Panel::Pssv, "PSSV"), (Fig1Panel::Psi01, "psi01")].into_iter().enumerate() {
        let members: Vec<(usize, &Fig1Series)> =
            series.iter().enumerate().filter(|(_, s)| s.spec.panel == panel_kind).collect();
        for (row, (ylabel, value)) in rows.iter().enumerate() {
            let title = format!("{name}: {ylabel}");
            panel(&mut svg, &members, col as f64 * PANEL_W, row as f64 * PANEL_H, &title, ylabel, *value);
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="10" y="{}" font-size="10">filled: energy-matched reference; open/dashed: entanglement-matched reference</text>"#,
        height - 6.0
    );
    svg.push_str("</svg>\n");
    svg
}
