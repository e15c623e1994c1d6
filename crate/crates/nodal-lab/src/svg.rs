//! Minimal SVG string builder (no drawing dependencies; output is plain
//! SVG 1.1 with a y-flipped viewBox so math coordinates read upright).

use crate::geometry::Point;
use std::fmt::Write;

pub struct Svg {
    body: String,
    xlo: f64,
    ylo: f64,
    w: f64,
    h: f64,
}

impl Svg {
    /// Canvas covering the bounding box of `pts` with a relative margin.
    pub fn over_points<'a>(pts: impl Iterator<Item = &'a Point>) -> Svg {
        let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in pts {
            xlo = xlo.min(p.x);
            xhi = xhi.max(p.x);
            ylo = ylo.min(p.y);
            yhi = yhi.max(p.y);
        }
        let m = 0.05 * (xhi - xlo).max(yhi - ylo).max(1e-9);
        Svg {
            body: String::new(),
            xlo: xlo - m,
            ylo: ylo - m,
            w: (xhi - xlo) + 2.0 * m,
            h: (yhi - ylo) + 2.0 * m,
        }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (p.x - self.xlo, self.h - (p.y - self.ylo))
    }

    /// Stroke width as a fraction of the canvas extent (coordinates are in
    /// domain units, so absolute widths would not scale across domains).
    pub fn rel_width(&self, frac: f64) -> f64 {
        frac * self.w.max(self.h)
    }

    pub fn segment(&mut self, a: Point, b: Point, stroke: &str, width: f64) {
        let (x1, y1) = self.map(a);
        let (x2, y2) = self.map(b);
        writeln!(
            self.body,
            r#"<line x1="{x1:.5}" y1="{y1:.5}" x2="{x2:.5}" y2="{y2:.5}" stroke="{stroke}" stroke-width="{width}" stroke-linecap="round"/>"#
        )
        .unwrap();
    }

    pub fn circle(&mut self, c: Point, r: f64, fill: &str) {
        let (cx, cy) = self.map(c);
        writeln!(self.body, r#"<circle cx="{cx:.5}" cy="{cy:.5}" r="{r}" fill="{fill}"/>"#)
            .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {:.5} {:.5}\" width=\"800\">\n{}</svg>\n",
            self.w, self.h, self.body
        )
    }
}
