//! Static SVG rendering of planar walks.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vector::Point;
use crate::walk::Walk;

const PANEL: f64 = 320.0;
const MARGIN: f64 = 36.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
/// Walks with more sums than this get no point markers.
const MARKER_LIMIT: usize = 5000;

#[derive(Clone, Copy, Debug)]
pub struct PlotOptions {
    /// Panel `j` shows phases `1..=j`; a single panel shows every phase.
    pub panels: usize,
    pub markers: bool,
}

impl PlotOptions {
    /// One panel per phase for walks of at most three phases, else one.
    pub fn for_walk(w: &Walk<Point>) -> Self {
        let p = w.phase_count();
        PlotOptions {
            panels: if p <= 3 { p } else { 1 },
            markers: w.len() <= MARKER_LIMIT,
        }
    }
}

/// Tick positions `±2^j` inside `[lo, hi]`, `j ≥ -1`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 0.5;
    while t <= hi.abs().max(lo.abs()) + 1e-12 {
        for v in [t, -t] {
            if v >= lo - 1e-12 && v <= hi + 1e-12 {
                out.push(v);
            }
        }
        t *= 2.0;
    }
    out.sort_by(f64::total_cmp);
    out
}

fn tick_label(v: f64) -> String {
    if v.abs() == 0.5 {
        if v < 0.0 { "-1/2".into() } else { "1/2".into() }
    } else {
        format!("{v}")
    }
}

/// Renders the walk's polyline, one colour per phase, with point markers
/// and power-of-two axis marks.
pub fn walk_svg(w: &Walk<Point>, opts: PlotOptions) -> Result<String> {
    if w.is_empty() {
        return Err(Error::EmptySample);
    }
    if w.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: w.dim() });
    }
    let panels = opts.panels.clamp(1, w.phase_count());
    let last = if panels == 1 { w.phase_count() } else { panels };
    let shown = w.phase_range(last).end;
    let pts: Vec<[f64; 2]> = w.sums[..shown]
        .iter()
        .map(|p| {
            let c = p.to_f64s();
            [c[0], c[1]]
        })
        .collect();

    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in &pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (PANEL - 2.0 * MARGIN) / span;
    let height = (y1 - y0) * scale + 2.0 * MARGIN;
    let width = (x1 - x0) * scale + 2.0 * MARGIN;
    let total_w = width * panels as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {total_w:.2} {height:.2}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for panel in 1..=panels {
        let phase_hi = if panels == 1 { last } else { panel };
        let ox = (panel - 1) as f64 * width;
        let sx = |x: f64| ox + MARGIN + (x - x0) * scale;
        let sy = |y: f64| height - MARGIN - (y - y0) * scale;
        let _ = writeln!(s, "<g class=\"panel\" data-phases=\"{phase_hi}\">");
        // Axes through the origin.
        let _ = writeln!(
            s,
            "<line class=\"axis\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\" stroke-width=\"0.8\"/>",
            sx(x0),
            sy(0.0),
            sx(x1),
            sy(0.0)
        );
        let _ = writeln!(
            s,
            "<line class=\"axis\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\" stroke-width=\"0.8\"/>",
            sx(0.0),
            sy(y0),
            sx(0.0),
            sy(y1)
        );
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                "<line class=\"tick\" x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"#888\"/><text class=\"tick-x\" x=\"{0:.2}\" y=\"{3:.2}\" font-size=\"10\" text-anchor=\"middle\">{4}</text>",
                sx(t),
                sy(0.0) - 3.0,
                sy(0.0) + 3.0,
                sy(0.0) + 14.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                "<line class=\"tick\" x1=\"{0:.2}\" y1=\"{2:.2}\" x2=\"{1:.2}\" y2=\"{2:.2}\" stroke=\"#888\"/><text class=\"tick-y\" x=\"{3:.2}\" y=\"{4:.2}\" font-size=\"10\" text-anchor=\"end\">{5}</text>",
                sx(0.0) - 3.0,
                sx(0.0) + 3.0,
                sy(t),
                sx(0.0) - 5.0,
                sy(t) + 3.0,
                tick_label(t)
            );
        }
        for p in 1..=phase_hi {
            let r = w.phase_range(p);
            // Start from the previous phase's last sum so segments connect.
            let from = r.start.saturating_sub(1);
            let coords: Vec<String> = (from..r.end)
                .map(|i| format!("{:.2},{:.2}", sx(pts[i][0]), sy(pts[i][1])))
                .collect();
            let _ = writeln!(
                s,
                "<polyline class=\"phase\" data-phase=\"{p}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
                PALETTE[(p - 1) % PALETTE.len()],
                coords.join(" ")
            );
        }
        if opts.markers {
            let end = w.phase_range(phase_hi).end;
            for p in &pts[..end] {
                let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"black\"/>", sx(p[0]), sy(p[1]));
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
