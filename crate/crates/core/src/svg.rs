//! Bare-bones SVG figures: arm shapes, hull projections and histograms.

use std::fmt::Write as _;

use crate::arm::ArmShape;
use crate::hull::{convex_polygon, WrenchHull};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 30.0;
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return Self { lo: [0.0, 0.0], scale: 1.0 };
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        Self { lo, scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (MARGIN + (p[0] - self.lo[0]) * self.scale, SIZE - MARGIN - (p[1] - self.lo[1]) * self.scale)
    }

    fn path(&self, pts: &[[f64; 2]]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"18\" font-size=\"12\" font-family=\"sans-serif\">{}</text>",
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Centerlines as polylines, one colour per entry.
pub fn shapes_svg(title: &str, shapes: &[(&ArmShape, &str)]) -> String {
    let frame = Frame::fit(shapes.iter().flat_map(|(s, _)| s.poses().iter().map(|p| [p.x, p.y])));
    let mut s = open(title);
    for (shape, colour) in shapes {
        let pts: Vec<[f64; 2]> = shape.poses().iter().map(|p| [p.x, p.y]).collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" stroke-opacity=\"0.6\"/>",
            frame.path(&pts)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Hulls projected on two wrench axes (0 = fx, 1 = fy, 2 = m), with marker points.
pub fn hull_projection_svg(
    title: &str,
    hulls: &[(&WrenchHull, &str)],
    points: &[[f64; 3]],
    axes: (usize, usize),
) -> String {
    let proj = |v: [f64; 3]| [v[axes.0], v[axes.1]];
    let frame = Frame::fit(
        hulls
            .iter()
            .flat_map(|(h, _)| h.vertices().iter().map(|v| proj(v.as_array())))
            .chain(points.iter().map(|p| proj(*p))),
    );
    let mut s = open(title);
    for (hull, colour) in hulls {
        let pts: Vec<[f64; 2]> = hull.vertices().iter().map(|v| proj(v.as_array())).collect();
        let ring: Vec<[f64; 2]> = convex_polygon(&pts).into_iter().map(|i| pts[i]).collect();
        let _ = writeln!(
            s,
            "<polygon points=\"{}\" fill=\"{colour}\" fill-opacity=\"0.25\" stroke=\"{colour}\"/>",
            frame.path(&ring)
        );
    }
    for p in points {
        let (x, y) = frame.map(proj(*p));
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"#e0b000\"/>");
    }
    s.push_str("</svg>\n");
    s
}

/// Overlaid histograms on shared bins, with a vertical line at each median.
pub fn histogram_svg(title: &str, series: &[(&str, &[f64], &str)], bins: usize) -> String {
    let finite = || series.iter().flat_map(|(_, v, _)| v.iter().copied().filter(|x| x.is_finite()));
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    let mut s = open(title);
    if !lo.is_finite() || bins == 0 {
        s.push_str("</svg>\n");
        return s;
    }
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let counts: Vec<Vec<usize>> = series
        .iter()
        .map(|(_, v, _)| {
            let mut c = vec![0; bins];
            for x in v.iter().filter(|x| x.is_finite()) {
                c[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
            c
        })
        .collect();
    let peak = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let plot_w = SIZE - 2.0 * MARGIN;
    let plot_h = SIZE - 2.0 * MARGIN - 20.0;
    let bar_w = plot_w / bins as f64;
    for (k, ((name, values, colour), c)) in series.iter().zip(&counts).enumerate() {
        for (b, &n) in c.iter().enumerate() {
            let h = plot_h * n as f64 / peak;
            let x = MARGIN + b as f64 * bar_w;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"{colour}\" fill-opacity=\"0.35\"/>",
                SIZE - MARGIN - h
            );
        }
        let med = crate::stats::median(&values.iter().copied().filter(|x| x.is_finite()).collect::<Vec<_>>());
        let mx = MARGIN + (med - lo) / (width * bins as f64) * plot_w;
        let _ = writeln!(
            s,
            "<line x1=\"{mx:.2}\" y1=\"{:.2}\" x2=\"{mx:.2}\" y2=\"{:.2}\" stroke=\"{colour}\" stroke-width=\"2\"/>",
            MARGIN + 20.0,
            SIZE - MARGIN
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\" fill=\"{colour}\">{} (median {med:.3})</text>",
            SIZE - 200.0,
            36.0 + 14.0 * k as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-size=\"10\" font-family=\"sans-serif\">{lo:.3} .. {hi:.3}</text>",
        SIZE - 10.0
    );
    s.push_str("</svg>\n");
    s
}
