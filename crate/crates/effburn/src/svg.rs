//! Deterministic SVG output for level curves and fronts.
//!
//! Coordinates are written with fixed 6-decimal precision and curves appear
//! in input order, so identical inputs produce byte-identical documents and
//! golden-file tests stay stable.

use std::fmt::Write as _;

use crate::vec2::Vec2;

#[derive(Debug, Clone)]
pub struct SvgStyle {
    pub stroke: String,
    pub width: f64,
    pub dashed: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            stroke: "#1f4e79".to_string(),
            width: 0.01,
            dashed: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvgCurve {
    pub points: Vec<Vec2>,
    pub style: SvgStyle,
    pub label: String,
    /// Close the polyline back to its first vertex.
    pub closed: bool,
}

impl SvgCurve {
    pub fn new(points: Vec<Vec2>, label: impl Into<String>) -> Self {
        SvgCurve {
            points,
            style: SvgStyle::default(),
            label: label.into(),
            closed: false,
        }
    }

    pub fn closed(mut self) -> Self {
        self.closed = true;
        self
    }

    pub fn dashed(mut self) -> Self {
        self.style.dashed = true;
        self
    }

    pub fn stroke(mut self, color: &str) -> Self {
        self.style.stroke = color.to_string();
        self
    }
}

/// Marker lines overlaid on the plot (e.g. predicted flat normals).
#[derive(Debug, Clone)]
pub struct SvgSegment {
    pub from: Vec2,
    pub to: Vec2,
    pub style: SvgStyle,
    pub label: String,
}

fn fmt6(v: f64) -> String {
    // normalize negative zero so output bytes never depend on rounding mode
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.6}")
}

/// Renders curves (in input order) into a standalone SVG document. The
/// viewBox encloses the data with 10% padding per side; the y-axis points up.
/// An empty curve list yields a valid empty scaffold.
pub fn render_svg(curves: &[SvgCurve], segments: &[SvgSegment]) -> String {
    let mut lo = Vec2::new(-1.0, -1.0);
    let mut hi = Vec2::new(1.0, 1.0);
    let mut any = false;
    let mut consider = |p: Vec2| {
        if !any {
            lo = p;
            hi = p;
            any = true;
        } else {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    };
    for c in curves {
        for &p in &c.points {
            consider(p);
        }
    }
    for s in segments {
        consider(s.from);
        consider(s.to);
    }
    let pad_x = 0.1 * (hi.x - lo.x).max(1e-6);
    let pad_y = 0.1 * (hi.y - lo.y).max(1e-6);
    let (x0, y0) = (lo.x - pad_x, lo.y - pad_y);
    let (w, h) = (hi.x - lo.x + 2.0 * pad_x, hi.y - lo.y + 2.0 * pad_y);

    // flip y manually so the math orientation survives fixed-precision output
    let flip = |p: Vec2| Vec2::new(p.x, y0 + h - (p.y - y0));

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="640" height="640">"#,
        fmt6(x0),
        fmt6(y0),
        fmt6(w),
        fmt6(h)
    );
    for c in curves {
        if c.points.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for (i, &p) in c.points.iter().enumerate() {
            let q = flip(p);
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{},{}", fmt6(q.x), fmt6(q.y));
        }
        if c.closed {
            let q = flip(c.points[0]);
            let _ = write!(pts, " {},{}", fmt6(q.x), fmt6(q.y));
        }
        let dash = if c.style.dashed {
            format!(r#" stroke-dasharray="{}""#, fmt6(4.0 * c.style.width))
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            r#"  <polyline points="{}" fill="none" stroke="{}" stroke-width="{}"{}><title>{}</title></polyline>"#,
            pts,
            c.style.stroke,
            fmt6(c.style.width),
            dash,
            c.label
        );
    }
    for s in segments {
        let a = flip(s.from);
        let b = flip(s.to);
        let _ = writeln!(
            out,
            r#"  <line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"><title>{}</title></line>"#,
            fmt6(a.x),
            fmt6(a.y),
            fmt6(b.x),
            fmt6(b.y),
            s.style.stroke,
            fmt6(s.style.width),
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}
