//! Parametric planar domain families and boundary perturbation fields.
//!
//! A [`DomainSpec`] is a polygonal outer loop (counterclockwise) plus zero or
//! more polygonal holes (clockwise), together with the family name and the
//! parameters that produced it. Constructors exist for disks, rectangles,
//! narrow convex domains (ellipses), dumbbells with a profiled connector, and
//! hole-punched annular domains whose inner wall is interrupted by gates.
//!
//! Perturbations are normal-speed fields sampled at boundary vertices;
//! [`apply_perturbation`] displaces each vertex along its angle-bisector
//! normal and re-validates the result.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Relative tolerance for orientation predicates on polygon coordinates.
const ORIENT_EPS: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self x o`.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotate by -90 degrees: for a CCW loop this turns an edge direction
    /// into the outward normal.
    pub fn rot_cw(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab.scale(t))
}

/// A planar domain: one simple CCW outer polygon and disjoint CW hole
/// polygons, with provenance (family name and parameters).
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub outer: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
    pub family: String,
    pub params: BTreeMap<String, f64>,
}

/// Parameters for [`make_dumbbell`]: two disk lobes flattened by chord cuts
/// of half-width `3 * xi`, joined by a straight connector of half-width `eps`
/// that flares to `2 * eps` over a length `2 * eps` at each end.
#[derive(Debug, Clone, Copy)]
pub struct DumbbellParams {
    pub r1: f64,
    pub r2: f64,
    pub connector_length: f64,
    pub eps: f64,
    pub xi: f64,
}

/// Parameters for [`make_hhn`]: disk of radius `r2` with an interrupted
/// circular wall at radius `r1`, realized as `n_gates` arc-shaped holes of
/// thickness `wall` separated by gates of angular half-width `eps`.
#[derive(Debug, Clone, Copy)]
pub struct HhnParams {
    pub r1: f64,
    pub r2: f64,
    pub n_gates: usize,
    pub eps: f64,
    /// Wall thickness; `HhnParams::new` defaults it to `r1 / 200`.
    pub wall: f64,
}

impl HhnParams {
    pub fn new(r1: f64, r2: f64, n_gates: usize, eps: f64) -> Self {
        HhnParams { r1, r2, n_gates, eps, wall: r1 / 200.0 }
    }
}

fn shoelace(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * s
}

fn loop_length(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].dist(poly[(i + 1) % n])).sum()
}

/// Parity ray-casting test, counting crossings of a rightward ray.
fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// True if segments (p1,p2) and (p3,p4) intersect or touch, with a relative
/// tolerance treating near-degenerate contact as intersection.
fn segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    let scale = (p2 - p1).norm().max((p4 - p3).norm());
    let eps = ORIENT_EPS * scale * scale;
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    let on_seg = |a: Point, b: Point, c: Point| -> bool {
        c.x >= a.x.min(b.x) - eps
            && c.x <= a.x.max(b.x) + eps
            && c.y >= a.y.min(b.y) - eps
            && c.y <= a.y.max(b.y) + eps
    };
    (d1.abs() <= eps && on_seg(p3, p4, p1))
        || (d2.abs() <= eps && on_seg(p3, p4, p2))
        || (d3.abs() <= eps && on_seg(p1, p2, p3))
        || (d4.abs() <= eps && on_seg(p1, p2, p4))
}

/// Check that a polygon is simple: no two non-adjacent edges intersect and
/// no edge has zero length. Returns the index of an offending vertex.
fn check_simple(poly: &[Point]) -> std::result::Result<(), usize> {
    let n = poly.len();
    if n < 3 {
        return Err(0);
    }
    for i in 0..n {
        if poly[i].dist(poly[(i + 1) % n]) == 0.0 {
            return Err(i);
        }
    }
    // Bounding-box prune keeps this O(n^2) loop cheap for smooth samplings.
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        let (axlo, axhi) = (a1.x.min(a2.x), a1.x.max(a2.x));
        let (aylo, ayhi) = (a1.y.min(a2.y), a1.y.max(a2.y));
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue; // adjacent around the wrap
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if b1.x.min(b2.x) > axhi || b1.x.max(b2.x) < axlo {
                continue;
            }
            if b1.y.min(b2.y) > ayhi || b1.y.max(b2.y) < aylo {
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return Err(i);
            }
        }
    }
    Ok(())
}

impl DomainSpec {
    /// Validate all structural invariants: simplicity of every loop, outer
    /// CCW, holes CW, holes strictly inside the outer loop and pairwise
    /// disjoint.
    pub fn validate(&self) -> Result<()> {
        if let Err(v) = check_simple(&self.outer) {
            return Err(Error::SelfIntersection {
                vertex: v,
                detail: "outer loop is not simple".into(),
            });
        }
        if shoelace(&self.outer) <= 0.0 {
            return Err(Error::InvalidGeometry("outer loop must be CCW".into()));
        }
        for (h, hole) in self.holes.iter().enumerate() {
            if let Err(v) = check_simple(hole) {
                return Err(Error::SelfIntersection {
                    vertex: v,
                    detail: format!("hole {h} is not simple"),
                });
            }
            if shoelace(hole) >= 0.0 {
                return Err(Error::InvalidGeometry(format!("hole {h} must be CW")));
            }
            for p in hole {
                if !point_in_polygon(*p, &self.outer) {
                    return Err(Error::InvalidGeometry(format!(
                        "hole {h} is not inside the outer loop"
                    )));
                }
            }
        }
        // Pairwise hole disjointness: edge intersections plus containment.
        for a in 0..self.holes.len() {
            for b in (a + 1)..self.holes.len() {
                let (ha, hb) = (&self.holes[a], &self.holes[b]);
                if point_in_polygon(hb[0], ha) || point_in_polygon(ha[0], hb) {
                    return Err(Error::InvalidGeometry(format!(
                        "holes {a} and {b} are nested"
                    )));
                }
                for i in 0..ha.len() {
                    let (p1, p2) = (ha[i], ha[(i + 1) % ha.len()]);
                    for j in 0..hb.len() {
                        let (p3, p4) = (hb[j], hb[(j + 1) % hb.len()]);
                        if segments_intersect(p1, p2, p3, p4) {
                            return Err(Error::InvalidGeometry(format!(
                                "holes {a} and {b} intersect"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Signed area of the domain (outer minus holes).
    pub fn area(&self) -> f64 {
        shoelace(&self.outer) + self.holes.iter().map(|h| shoelace(h)).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        loop_length(&self.outer) + self.holes.iter().map(|h| loop_length(h)).sum::<f64>()
    }

    /// Max pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let pts = &self.outer;
        let mut best = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                best = best.max(pts[i].dist(pts[j]));
            }
        }
        best
    }

    /// The two outer-vertex indices realizing the diameter.
    pub fn diameter_pair(&self) -> (usize, usize) {
        let pts = &self.outer;
        let (mut bi, mut bj, mut best) = (0, 0, -1.0f64);
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let d = pts[i].dist(pts[j]);
                if d > best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        (bi, bj)
    }

    /// Convexity of the outer loop; domains with holes are never convex.
    pub fn is_convex(&self) -> bool {
        if !self.holes.is_empty() {
            return false;
        }
        let n = self.outer.len();
        let scale2 = self.diameter().powi(2);
        for i in 0..n {
            let a = self.outer[i];
            let b = self.outer[(i + 1) % n];
            let c = self.outer[(i + 2) % n];
            if orient(a, b, c) < -ORIENT_EPS * scale2 {
                return false;
            }
        }
        true
    }

    pub fn contains(&self, p: Point) -> bool {
        if !point_in_polygon(p, &self.outer) {
            return false;
        }
        !self.holes.iter().any(|h| point_in_polygon(p, h))
    }

    /// All boundary vertices: outer loop first, then holes in order.
    pub fn boundary_vertices(&self) -> Vec<Point> {
        let mut v = self.outer.clone();
        for h in &self.holes {
            v.extend_from_slice(h);
        }
        v
    }

    pub fn boundary_vertex_count(&self) -> usize {
        self.outer.len() + self.holes.iter().map(|h| h.len()).sum::<usize>()
    }

    /// Loop id and in-loop index for a global boundary vertex index.
    fn locate_vertex(&self, i: usize) -> (usize, usize) {
        if i < self.outer.len() {
            return (0, i);
        }
        let mut off = self.outer.len();
        for (h, hole) in self.holes.iter().enumerate() {
            if i < off + hole.len() {
                return (h + 1, i - off);
            }
            off += hole.len();
        }
        panic!("boundary vertex index {i} out of range");
    }

    fn loop_points(&self, loop_id: usize) -> &[Point] {
        if loop_id == 0 {
            &self.outer
        } else {
            &self.holes[loop_id - 1]
        }
    }

    /// Outward (with respect to the domain) unit normal at a boundary
    /// vertex: normalized sum of the two adjacent edge normals. With outer
    /// CCW and holes CW, the right-of-travel normal points out of the
    /// domain on every loop.
    pub fn vertex_normal(&self, i: usize) -> Point {
        let (lp, k) = self.locate_vertex(i);
        let pts = self.loop_points(lp);
        let n = pts.len();
        let prev = pts[(k + n - 1) % n];
        let cur = pts[k];
        let next = pts[(k + 1) % n];
        let n1 = (cur - prev).rot_cw().normalized();
        let n2 = (next - cur).rot_cw().normalized();
        let s = n1 + n2;
        if s.norm() < 1e-12 {
            // 180-degree fold; fall back to one edge normal.
            return n1;
        }
        s.normalized()
    }

    /// Cumulative arc-length positions of the outer-loop vertices.
    pub fn outer_arc_positions(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.outer.len());
        let mut acc = 0.0;
        for i in 0..self.outer.len() {
            s.push(acc);
            acc += self.outer[i].dist(self.outer[(i + 1) % self.outer.len()]);
        }
        s
    }

    /// Subdivide every edge so no edge exceeds `max_edge`. Family and
    /// params are preserved; new vertices lie on the original segments.
    pub fn densify(&self, max_edge: f64) -> Result<DomainSpec> {
        if max_edge <= 0.0 {
            return Err(Error::InvalidParameter("densify: max_edge must be > 0".into()));
        }
        let split = |poly: &[Point]| -> Vec<Point> {
            let n = poly.len();
            let mut out = Vec::new();
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let parts = (a.dist(b) / max_edge).ceil().max(1.0) as usize;
                for k in 0..parts {
                    let t = k as f64 / parts as f64;
                    out.push(a + (b - a).scale(t));
                }
            }
            out
        };
        let d = DomainSpec {
            outer: split(&self.outer),
            holes: self.holes.iter().map(|h| split(h)).collect(),
            family: self.family.clone(),
            params: self.params.clone(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Largest distance from an interior grid point to the boundary.
    /// The grid pitch adapts to the shortest polygon edge and is floored to
    /// keep the scan bounded; the returned value is accurate to one pitch.
    pub fn inradius(&self) -> f64 {
        let mut min_edge = f64::INFINITY;
        let mut consider = |poly: &[Point]| {
            let n = poly.len();
            for i in 0..n {
                min_edge = min_edge.min(poly[i].dist(poly[(i + 1) % n]));
            }
        };
        consider(&self.outer);
        for h in &self.holes {
            consider(h);
        }
        let diam = self.diameter();
        let pitch = (min_edge / 2.0).min(diam / 64.0).max(diam / 1024.0);

        let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &self.outer {
            xlo = xlo.min(p.x);
            xhi = xhi.max(p.x);
            ylo = ylo.min(p.y);
            yhi = yhi.max(p.y);
        }
        let mut segments: Vec<(Point, Point)> = Vec::new();
        let mut collect = |poly: &[Point]| {
            let n = poly.len();
            for i in 0..n {
                segments.push((poly[i], poly[(i + 1) % n]));
            }
        };
        collect(&self.outer);
        for h in &self.holes {
            collect(h);
        }

        let nx = ((xhi - xlo) / pitch).ceil() as usize + 1;
        let ny = ((yhi - ylo) / pitch).ceil() as usize + 1;
        let mut best = 0.0f64;
        for iy in 0..ny {
            let y = ylo + iy as f64 * pitch;
            for ix in 0..nx {
                let p = Point::new(xlo + ix as f64 * pitch, y);
                if !self.contains(p) {
                    continue;
                }
                let d = segments
                    .iter()
                    .map(|(a, b)| dist_point_segment(p, *a, *b))
                    .fold(f64::INFINITY, f64::min);
                best = best.max(d);
            }
        }
        best
    }

    /// Serialize to the interchange JSON form with 17-significant-digit
    /// coordinates. Key order and float formatting are fixed so the output
    /// is byte-stable.
    pub fn to_json_string(&self) -> String {
        let mut s = String::new();
        let fmt_pt = |out: &mut String, p: &Point| {
            write!(out, "[{:.16e},{:.16e}]", p.x, p.y).unwrap();
        };
        let fmt_loop = |out: &mut String, l: &[Point]| {
            out.push('[');
            for (i, p) in l.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                fmt_pt(out, p);
            }
            out.push(']');
        };
        s.push_str("{\"family\":");
        s.push_str(&serde_json::to_string(&self.family).unwrap());
        s.push_str(",\"params\":{");
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{}:{:.16e}", serde_json::to_string(k).unwrap(), v).unwrap();
        }
        s.push_str("},\"outer\":");
        fmt_loop(&mut s, &self.outer);
        s.push_str(",\"holes\":[");
        for (i, h) in self.holes.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            fmt_loop(&mut s, h);
        }
        s.push_str("]}");
        s
    }

    /// Parse the interchange JSON form and validate the result.
    pub fn from_json_str(text: &str) -> Result<DomainSpec> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidInput("domain JSON must be an object".into()))?;
        let family = obj
            .get("family")
            .and_then(|f| f.as_str())
            .ok_or_else(|| Error::InvalidInput("missing string field 'family'".into()))?
            .to_string();
        let mut params = BTreeMap::new();
        if let Some(pmap) = obj.get("params").and_then(|p| p.as_object()) {
            for (k, val) in pmap {
                let x = val
                    .as_f64()
                    .ok_or_else(|| Error::InvalidInput(format!("param {k} is not a number")))?;
                params.insert(k.clone(), x);
            }
        }
        let parse_loop = |val: &serde_json::Value, what: &str| -> Result<Vec<Point>> {
            let arr = val
                .as_array()
                .ok_or_else(|| Error::InvalidInput(format!("{what} must be an array")))?;
            arr.iter()
                .map(|p| {
                    let xy = p
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| Error::InvalidInput(format!("{what}: bad point")))?;
                    let x = xy[0].as_f64().ok_or_else(|| {
                        Error::InvalidInput(format!("{what}: non-numeric coordinate"))
                    })?;
                    let y = xy[1].as_f64().ok_or_else(|| {
                        Error::InvalidInput(format!("{what}: non-numeric coordinate"))
                    })?;
                    Ok(Point::new(x, y))
                })
                .collect()
        };
        let outer = parse_loop(
            obj.get("outer")
                .ok_or_else(|| Error::InvalidInput("missing field 'outer'".into()))?,
            "outer",
        )?;
        let holes = match obj.get("holes") {
            None => Vec::new(),
            Some(hs) => hs
                .as_array()
                .ok_or_else(|| Error::InvalidInput("holes must be an array".into()))?
                .iter()
                .map(|h| parse_loop(h, "hole"))
                .collect::<Result<Vec<_>>>()?,
        };
        let d = DomainSpec { outer, holes, family, params };
        d.validate()?;
        Ok(d)
    }
}

/// Regular-polygon approximation of a disk of radius `r` with `n` vertices.
pub fn make_disk(r: f64, n: usize) -> Result<DomainSpec> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("disk radius must be > 0, got {r}")));
    }
    if n < 16 {
        return Err(Error::InvalidParameter(format!("disk needs n >= 16 vertices, got {n}")));
    }
    let outer = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    let mut params = BTreeMap::new();
    params.insert("r".into(), r);
    params.insert("n".into(), n as f64);
    let d = DomainSpec { outer, holes: vec![], family: "disk".into(), params };
    d.validate()?;
    Ok(d)
}

/// Axis-aligned rectangle `(0,a) x (0,b)`.
pub fn make_rectangle(a: f64, b: f64) -> Result<DomainSpec> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rectangle sides must be > 0, got {a} x {b}"
        )));
    }
    let outer = vec![
        Point::new(0.0, 0.0),
        Point::new(a, 0.0),
        Point::new(a, b),
        Point::new(0.0, b),
    ];
    let mut params = BTreeMap::new();
    params.insert("a".into(), a);
    params.insert("b".into(), b);
    let d = DomainSpec { outer, holes: vec![], family: "rectangle".into(), params };
    d.validate()?;
    Ok(d)
}

/// Narrow convex domain: an ellipse with semi-axes `d/2` and `rho`, sampled
/// at `n` equal-arc-length points starting at the tip `(d/2, 0)`. Even `n`
/// places both tips exactly, so the polygon diameter equals `d` up to the
/// arc-integration error.
pub fn make_narrow_convex(d: f64, rho: f64, n: usize) -> Result<DomainSpec> {
    if !(d > 0.0 && rho > 0.0 && rho <= d / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "narrow convex domain needs 0 < rho <= d/2, got d={d}, rho={rho}"
        )));
    }
    if n < 32 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "narrow convex domain needs even n >= 32, got {n}"
        )));
    }
    let a = d / 2.0;
    let b = rho;
    // Dense parametric presample, then invert cumulative chord length.
    let m = n * 64;
    let mut cum = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    let pt = |t: f64| Point::new(a * t.cos(), b * t.sin());
    let mut prev = pt(0.0);
    cum.push(0.0);
    for i in 1..=m {
        let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
        let p = pt(t);
        acc += prev.dist(p);
        cum.push(acc);
        prev = p;
    }
    let total = acc;
    let mut outer = Vec::with_capacity(n);
    let mut j = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while j + 1 < cum.len() && cum[j + 1] < target {
            j += 1;
        }
        // Linear interpolation of the parameter inside presample cell j.
        let (c0, c1) = (cum[j], cum[j + 1]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        let t = 2.0 * std::f64::consts::PI * (j as f64 + frac) / m as f64;
        outer.push(pt(t));
    }
    let mut params = BTreeMap::new();
    params.insert("d".into(), d);
    params.insert("rho".into(), rho);
    params.insert("n".into(), n as f64);
    let dom = DomainSpec { outer, holes: vec![], family: "narrow_convex".into(), params };
    dom.validate()?;
    Ok(dom)
}

/// Connector half-width profile ramp: cubic Hermite step with value 1 and
/// zero slope at `s = 0`, value 2 and zero slope at `s = 1`.
fn flare_profile(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    1.0 + s * s * (3.0 - 2.0 * s)
}

/// Dumbbell: disk lobes of radii `r1` (left) and `r2` (right) flattened by
/// vertical chord cuts of half-width `3 * xi`, joined by a connector over
/// `|x| <= connector_length / 2` of half-width `eps`, flaring smoothly to
/// `2 * eps` at both junctions.
pub fn make_dumbbell(p: DumbbellParams) -> Result<DomainSpec> {
    let DumbbellParams { r1, r2, connector_length: l, eps, xi } = p;
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::InvalidParameter("dumbbell radii must be > 0".into()));
    }
    if !(eps > 0.0 && eps < xi) {
        return Err(Error::InvalidParameter(format!(
            "dumbbell needs 0 < eps < xi, got eps={eps}, xi={xi}"
        )));
    }
    if !(l > 4.0 * eps) {
        return Err(Error::InvalidParameter(format!(
            "dumbbell connector length {l} must exceed 4*eps = {}",
            4.0 * eps
        )));
    }
    if 3.0 * xi >= 0.95 * r1.min(r2) {
        return Err(Error::InvalidParameter(format!(
            "flat half-width 3*xi = {} too large for lobe radii {r1}, {r2}",
            3.0 * xi
        )));
    }

    let half = l / 2.0;
    let flat = 3.0 * xi;
    let d1 = (r1 * r1 - flat * flat).sqrt();
    let d2 = (r2 * r2 - flat * flat).sqrt();
    let c1 = Point::new(-half - d1, 0.0);
    let c2 = Point::new(half + d2, 0.0);

    let mut outer: Vec<Point> = Vec::new();
    let push = |p: Point, out: &mut Vec<Point>| {
        if out.last().map_or(true, |q| q.dist(p) > 1e-12) {
            out.push(p);
        }
    };

    // Half-width of the connector at offset s from the left junction.
    let width = |s: f64| -> f64 {
        if s <= 2.0 * eps {
            eps * flare_profile(1.0 - s / (2.0 * eps))
        } else if s >= l - 2.0 * eps {
            eps * flare_profile(1.0 - (l - s) / (2.0 * eps))
        } else {
            eps
        }
    };

    let seg_steps = |len: f64, target: f64| (len / target).ceil().max(1.0) as usize;

    // Left flat face, upper part: (-half, 2eps) up to (-half, flat).
    let k = seg_steps(flat - 2.0 * eps, xi / 2.0);
    for i in 0..=k {
        let y = 2.0 * eps + (flat - 2.0 * eps) * i as f64 / k as f64;
        push(Point::new(-half, y), &mut outer);
    }
    // Left lobe arc from the top chord point around to the bottom chord point.
    let beta1 = (flat / r1).asin();
    let arc_steps = 256usize;
    let span1 = 2.0 * std::f64::consts::PI - 2.0 * beta1;
    let k1 = ((span1 / (2.0 * std::f64::consts::PI) * arc_steps as f64).ceil() as usize).max(8);
    for i in 0..=k1 {
        let th = beta1 + span1 * i as f64 / k1 as f64;
        push(c1 + Point::new(r1 * th.cos(), r1 * th.sin()), &mut outer);
    }
    // Left flat face, lower part: up to the connector mouth.
    for i in 0..=k {
        let y = -flat + (flat - 2.0 * eps) * i as f64 / k as f64;
        push(Point::new(-half, y), &mut outer);
    }
    // Lower connector wall, left to right.
    let fl_steps = seg_steps(2.0 * eps, eps / 8.0);
    let mid_steps = seg_steps(l - 4.0 * eps, (eps / 2.0).min(l / 32.0));
    let mut stations: Vec<f64> = Vec::new();
    for i in 0..=fl_steps {
        stations.push(2.0 * eps * i as f64 / fl_steps as f64);
    }
    for i in 1..=mid_steps {
        stations.push(2.0 * eps + (l - 4.0 * eps) * i as f64 / mid_steps as f64);
    }
    for i in 1..=fl_steps {
        stations.push(l - 2.0 * eps + 2.0 * eps * i as f64 / fl_steps as f64);
    }
    for &s in &stations {
        push(Point::new(-half + s, -width(s)), &mut outer);
    }
    // Right flat face, lower part: down to the chord bottom.
    for i in 0..=k {
        let y = -2.0 * eps - (flat - 2.0 * eps) * i as f64 / k as f64;
        push(Point::new(half, y), &mut outer);
    }
    // Right lobe arc from bottom chord point around to top chord point.
    let beta2 = (flat / r2).asin();
    let span2 = 2.0 * std::f64::consts::PI - 2.0 * beta2;
    let k2 = ((span2 / (2.0 * std::f64::consts::PI) * arc_steps as f64).ceil() as usize).max(8);
    for i in 0..=k2 {
        let th = std::f64::consts::PI + beta2 + span2 * i as f64 / k2 as f64;
        push(c2 + Point::new(r2 * th.cos(), r2 * th.sin()), &mut outer);
    }
    // Right flat face, upper part: down to the connector mouth.
    for i in 0..=k {
        let y = flat - (flat - 2.0 * eps) * i as f64 / k as f64;
        push(Point::new(half, y), &mut outer);
    }
    // Upper connector wall, right to left.
    for &s in stations.iter().rev() {
        push(Point::new(-half + s, width(s)), &mut outer);
    }
    // Drop a duplicated closing vertex if the loop wrapped onto its start.
    if outer.len() > 1 && outer[0].dist(*outer.last().unwrap()) <= 1e-12 {
        outer.pop();
    }

    let mut params = BTreeMap::new();
    params.insert("r1".into(), r1);
    params.insert("r2".into(), r2);
    params.insert("connector_length".into(), l);
    params.insert("eps".into(), eps);
    params.insert("xi".into(), xi);
    let d = DomainSpec { outer, holes: vec![], family: "dumbbell".into(), params };
    d.validate()?;
    Ok(d)
}

/// Disk of radius `r2` with an interrupted wall at radius `r1`: `n_gates`
/// arc-shaped holes of radial thickness `wall`, separated by gates of
/// angular half-width `eps` centered at `2*pi*j/n_gates`.
pub fn make_hhn(p: HhnParams) -> Result<DomainSpec> {
    let HhnParams { r1, r2, n_gates, eps, wall } = p;
    if !(r1 > 0.0 && r2 > r1 * 1.05) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r1 < r2 with margin, got r1={r1}, r2={r2}"
        )));
    }
    if n_gates < 1 {
        return Err(Error::InvalidParameter("need at least one gate".into()));
    }
    let sector = 2.0 * std::f64::consts::PI / n_gates as f64;
    if !(eps > 0.0 && 2.0 * eps < 0.9 * sector) {
        return Err(Error::InvalidParameter(format!(
            "gate half-width eps={eps} incompatible with {n_gates} gates"
        )));
    }
    if !(wall > 0.0 && wall < 0.1 * r1) {
        return Err(Error::InvalidParameter(format!("wall thickness {wall} out of range")));
    }

    let n_outer = 256.max((2.0 * std::f64::consts::PI * r2 / (r2 / 50.0)).ceil() as usize);
    let outer = (0..n_outer)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_outer as f64;
            Point::new(r2 * t.cos(), r2 * t.sin())
        })
        .collect();

    let mut holes = Vec::with_capacity(n_gates);
    let (rp, rm) = (r1 + wall / 2.0, r1 - wall / 2.0);
    for j in 0..n_gates {
        let th_a = sector * j as f64 + eps;
        let th_b = sector * (j + 1) as f64 - eps;
        // Chord spacing about 2*wall along the arcs keeps the strip polygon
        // well shaped without oversampling.
        let steps = (((th_b - th_a) * r1 / (2.0 * wall)).ceil() as usize).max(4);
        let mut hole: Vec<Point> = Vec::new();
        for i in 0..=steps {
            let t = th_a + (th_b - th_a) * i as f64 / steps as f64;
            hole.push(Point::new(rp * t.cos(), rp * t.sin()));
        }
        for i in (0..=steps).rev() {
            let t = th_a + (th_b - th_a) * i as f64 / steps as f64;
            hole.push(Point::new(rm * t.cos(), rm * t.sin()));
        }
        // Built CCW (outer arc forward, inner arc back); holes must be CW.
        hole.reverse();
        holes.push(hole);
    }

    let mut params = BTreeMap::new();
    params.insert("r1".into(), r1);
    params.insert("r2".into(), r2);
    params.insert("n_gates".into(), n_gates as f64);
    params.insert("eps".into(), eps);
    params.insert("wall".into(), wall);
    let d = DomainSpec { outer, holes, family: "hhn".into(), params };
    d.validate()?;
    Ok(d)
}

/// Normal-speed boundary field sampled at the vertices of a specific
/// [`DomainSpec`] (outer loop first, then holes, same order).
#[derive(Debug, Clone)]
pub struct PerturbationField {
    pub normal_speed: Vec<f64>,
    /// Indices of vertices with nonzero speed.
    pub support: Vec<usize>,
    /// Declared bound: |speed(i) - speed(j)| <= lipschitz * dist(i, j) for
    /// adjacent vertices.
    pub lipschitz: f64,
}

impl PerturbationField {
    /// Build a field by evaluating `speed` at every boundary vertex.
    /// `speed` receives the vertex position and its global index.
    pub fn from_fn(d: &DomainSpec, speed: impl Fn(Point, usize) -> f64) -> PerturbationField {
        let verts = d.boundary_vertices();
        let normal_speed: Vec<f64> = verts.iter().enumerate().map(|(i, p)| speed(*p, i)).collect();
        let support = normal_speed
            .iter()
            .enumerate()
            .filter(|(_, s)| s.abs() > 0.0)
            .map(|(i, _)| i)
            .collect();
        let mut lip = 0.0f64;
        let mut scan = |offset: usize, pts: &[Point]| {
            let n = pts.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let len = pts[i].dist(pts[j]);
                if len > 0.0 {
                    lip = lip.max((normal_speed[offset + i] - normal_speed[offset + j]).abs() / len);
                }
            }
        };
        scan(0, &d.outer);
        let mut off = d.outer.len();
        for h in &d.holes {
            scan(off, h);
            off += h.len();
        }
        PerturbationField { normal_speed, support, lipschitz: lip }
    }

    /// Uniform unit outward speed.
    pub fn uniform(d: &DomainSpec) -> PerturbationField {
        Self::from_fn(d, |_, _| 1.0)
    }

    /// Dilation about `center`: speed `(x - center) . n`. On a circle about
    /// `center` this equals the radius; eigenvalues scale as `-2 lambda`.
    pub fn dilation(d: &DomainSpec, center: Point) -> PerturbationField {
        let verts = d.boundary_vertices();
        let speeds: Vec<f64> = verts
            .iter()
            .enumerate()
            .map(|(i, p)| (*p - center).dot(d.vertex_normal(i)))
            .collect();
        Self::from_fn(d, |_, i| speeds[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.normal_speed.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Validate alignment with a domain and the declared Lipschitz bound.
    pub fn check_against(&self, d: &DomainSpec) -> Result<()> {
        if self.normal_speed.len() != d.boundary_vertex_count() {
            return Err(Error::InvalidInput(format!(
                "field has {} speeds but domain has {} boundary vertices",
                self.normal_speed.len(),
                d.boundary_vertex_count()
            )));
        }
        let check = |offset: usize, pts: &[Point]| -> Result<()> {
            let n = pts.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let len = pts[i].dist(pts[j]);
                let jump = (self.normal_speed[offset + i] - self.normal_speed[offset + j]).abs();
                if jump > self.lipschitz * len * (1.0 + 1e-9) + 1e-14 {
                    return Err(Error::InvalidInput(format!(
                        "field jump {jump:.3e} exceeds Lipschitz bound over edge {i}"
                    )));
                }
            }
            Ok(())
        };
        check(0, &d.outer)?;
        let mut off = d.outer.len();
        for h in &d.holes {
            check(off, h)?;
            off += h.len();
        }
        Ok(())
    }

    /// Interpolated normal speed at an arbitrary boundary point `p` of `d`:
    /// nearest boundary segment, linear interpolation of vertex speeds.
    pub fn speed_at(&self, d: &DomainSpec, p: Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0f64);
        let mut scan = |offset: usize, pts: &[Point]| {
            let n = pts.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let (a, b) = (pts[i], pts[j]);
                let ab = b - a;
                let len2 = ab.dot(ab);
                let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let dist = p.dist(a + ab.scale(t));
                if dist < best.0 {
                    let v = self.normal_speed[offset + i] * (1.0 - t)
                        + self.normal_speed[offset + j] * t;
                    best = (dist, v);
                }
            }
        };
        scan(0, &d.outer);
        let mut off = d.outer.len();
        for h in &d.holes {
            scan(off, h);
            off += h.len();
        }
        best.1
    }
}

/// Constraint flags for [`bump_field`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpConstraints {
    /// Rescale negative bumps so the discrete line integral of the speed
    /// vanishes.
    pub area_neutral: bool,
    /// Require bump supports to stay away from the diameter-realizing
    /// vertices (10 widths of arc distance).
    pub preserve_diameter: bool,
}

/// Smooth plateau bump: 1 on `|u| <= 1`, cubic ramp down to 0 at `|u| = 2`.
fn bump_profile(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let s = 2.0 - a;
        s * s * (3.0 - 2.0 * s)
    }
}

/// Build a sum of signed plateau bumps on the outer loop, centered at the
/// given arc-length positions. Each bump has plateau half-width `width` and
/// support half-width `2 * width`.
pub fn bump_field(
    d: &DomainSpec,
    centers_arclen: &[f64],
    signs: &[f64],
    width: f64,
    constraints: BumpConstraints,
) -> Result<PerturbationField> {
    if centers_arclen.len() != signs.len() || centers_arclen.is_empty() {
        return Err(Error::InvalidInput(
            "bump_field: centers and signs must be equal-length and nonempty".into(),
        ));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidParameter("bump width must be > 0".into()));
    }
    if signs.iter().any(|s| *s == 0.0) {
        return Err(Error::InvalidInput("bump signs must be nonzero".into()));
    }
    let total = loop_length(&d.outer);
    if 4.0 * width * centers_arclen.len() as f64 > total {
        return Err(Error::InvalidConstraints(format!(
            "supports of {} bumps of width {width} exceed the outer perimeter {total:.3}",
            centers_arclen.len()
        )));
    }
    let cyc = |a: f64, b: f64| -> f64 {
        let d0 = (a - b).rem_euclid(total);
        d0.min(total - d0)
    };
    for i in 0..centers_arclen.len() {
        for j in (i + 1)..centers_arclen.len() {
            let sep = cyc(centers_arclen[i], centers_arclen[j]);
            if sep < 4.0 * width {
                return Err(Error::InvalidConstraints(format!(
                    "bump centers {i} and {j} are {sep:.4} apart; need at least {}",
                    4.0 * width
                )));
            }
        }
    }
    if constraints.area_neutral
        && (signs.iter().all(|s| *s > 0.0) || signs.iter().all(|s| *s < 0.0))
    {
        return Err(Error::InvalidConstraints(
            "area-neutral bump system needs both signs".into(),
        ));
    }
    let arc = d.outer_arc_positions();
    if constraints.preserve_diameter {
        let (i, j) = d.diameter_pair();
        for (b, c) in centers_arclen.iter().enumerate() {
            for v in [i, j] {
                if cyc(*c, arc[v]) < 10.0 * width {
                    return Err(Error::InvalidConstraints(format!(
                        "bump {b} is within 10 widths of a diameter endpoint"
                    )));
                }
            }
        }
    }

    let n_outer = d.outer.len();
    let eval = |s: f64, group: fn(f64) -> bool| -> f64 {
        let mut v = 0.0;
        for (c, sg) in centers_arclen.iter().zip(signs) {
            if group(*sg) {
                v += sg * bump_profile(cyc(s, *c) / width);
            }
        }
        v
    };
    let mut pos: Vec<f64> = (0..n_outer).map(|i| eval(arc[i], |s| s > 0.0)).collect();
    let mut neg: Vec<f64> = (0..n_outer).map(|i| eval(arc[i], |s| s < 0.0)).collect();

    if constraints.area_neutral {
        // Discrete trapezoidal line integrals over the polygon; scaling the
        // negative group by their ratio zeroes the discrete integral.
        let integral = |f: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n_outer {
                let j = (i + 1) % n_outer;
                s += 0.5 * (f[i] + f[j]) * d.outer[i].dist(d.outer[j]);
            }
            s
        };
        let (ip, im) = (integral(&pos), integral(&neg));
        if im.abs() < 1e-300 {
            return Err(Error::InvalidConstraints(
                "negative bumps have zero discrete integral; cannot balance".into(),
            ));
        }
        let scale = -ip / im;
        for v in &mut neg {
            *v *= scale;
        }
    }
    for i in 0..n_outer {
        pos[i] += neg[i];
    }
    let mut speeds = pos;
    speeds.resize(d.boundary_vertex_count(), 0.0);
    let f = PerturbationField::from_fn(d, |_, i| speeds[i]);
    Ok(f)
}

/// Displace every boundary vertex of `d` by `t * speed * outward normal`
/// and validate the result. Family and parameters are preserved.
pub fn apply_perturbation(d: &DomainSpec, field: &PerturbationField, t: f64) -> Result<DomainSpec> {
    field.check_against(d)?;
    let amp = t.abs() * field.max_abs();
    if amp > d.diameter() / 10.0 {
        return Err(Error::InvalidParameter(format!(
            "perturbation amplitude {amp:.3e} too large for domain of diameter {:.3e}",
            d.diameter()
        )));
    }
    let verts = d.boundary_vertices();
    let moved: Vec<Point> = verts
        .iter()
        .enumerate()
        .map(|(i, p)| *p + d.vertex_normal(i).scale(t * field.normal_speed[i]))
        .collect();
    let outer = moved[..d.outer.len()].to_vec();
    let mut holes = Vec::with_capacity(d.holes.len());
    let mut off = d.outer.len();
    for h in &d.holes {
        holes.push(moved[off..off + h.len()].to_vec());
        off += h.len();
    }
    let out = DomainSpec {
        outer,
        holes,
        family: d.family.clone(),
        params: d.params.clone(),
    };
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn disk_polygon_hugs_circle() {
        let d = make_disk(1.0, 256).unwrap();
        assert_eq!(d.outer.len(), 256);
        // Max deviation of the polygon from the circle is the edge sagitta.
        for i in 0..256 {
            let a = d.outer[i];
            let b = d.outer[(i + 1) % 256];
            let mid = (a + b).scale(0.5);
            assert!((1.0 - mid.norm()).abs() < 4e-4);
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
        assert!(d.is_convex());
        let sag = 1.0 - (PI / 256.0).cos();
        assert!((d.area() - PI).abs() < 256.0 * sag); // area deficit bound
    }

    #[test]
    fn disk_rejects_tiny_n() {
        assert!(make_disk(1.0, 8).is_err());
        assert!(make_disk(-1.0, 64).is_err());
    }

    #[test]
    fn rectangle_area_exact() {
        let d = make_rectangle(PI, PI).unwrap();
        assert!((d.area() - PI * PI).abs() < 1e-12);
        assert!(d.is_convex());
        assert!((d.diameter() - PI * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_square_inradius_half() {
        let d = make_rectangle(1.0, 1.0).unwrap();
        let r = d.inradius();
        // Accuracy is one grid pitch (diameter/64 here).
        assert!((r - 0.5).abs() < 2.0f64.sqrt() / 32.0, "inradius {r}");
    }

    #[test]
    fn narrow_convex_matches_ellipse() {
        let d = make_narrow_convex(1.0, 0.05, 512).unwrap();
        assert!(d.is_convex());
        let diam = d.diameter();
        assert!((diam - 1.0).abs() < 8e-4, "diameter {diam}");
        let r = d.inradius();
        assert!((r - 0.05).abs() < 0.01, "inradius {r}");
        // Ellipse area pi*a*b.
        assert!((d.area() - PI * 0.5 * 0.05).abs() < 1e-3);
    }

    #[test]
    fn narrow_convex_near_disk_limit() {
        let d = make_narrow_convex(1.0, 0.5, 256).unwrap();
        assert!((d.area() - PI * 0.25).abs() < 1e-3);
    }

    #[test]
    fn dumbbell_area_matches_analytic() {
        let p = DumbbellParams { r1: 1.0, r2: 0.8, connector_length: 2.0, eps: 0.05, xi: 0.1 };
        let d = make_dumbbell(p).unwrap();
        d.validate().unwrap();
        // Lobes minus chord segments plus connector (straight part 2 - 4eps
        // wide 2eps, plus two flares of area 5 eps^2 each).
        let seg = |r: f64| {
            let flat = 3.0 * p.xi;
            let dd = (r * r - flat * flat).sqrt();
            r * r * (dd / r).acos() - dd * flat
        };
        let connector = (2.0 - 4.0 * p.eps) * 2.0 * p.eps + 2.0 * 5.0 * p.eps * p.eps;
        let expect = PI * (1.0 + 0.64) - seg(1.0) - seg(0.8) + connector;
        let rel = (d.area() - expect).abs() / expect;
        assert!(rel < 0.02, "area {} vs {expect}", d.area());
        // Spec-level sanity: within 2% of lobes + connector.
        let coarse = PI * (1.0 + 0.64) + connector;
        assert!((d.area() - coarse).abs() / coarse < 0.02);
    }

    #[test]
    fn dumbbell_rejects_bad_params() {
        let bad = DumbbellParams { r1: 1.0, r2: 0.8, connector_length: 2.0, eps: 0.2, xi: 0.1 };
        assert!(make_dumbbell(bad).is_err()); // eps >= xi
        let bad2 = DumbbellParams { r1: 1.0, r2: 0.8, connector_length: 0.1, eps: 0.05, xi: 0.1 };
        assert!(make_dumbbell(bad2).is_err()); // connector shorter than flares
    }

    #[test]
    fn hhn_structure() {
        let d = make_hhn(HhnParams::new(1.0, 2.0, 8, 0.02)).unwrap();
        assert_eq!(d.holes.len(), 8);
        d.validate().unwrap();
        // Area: big disk minus 8 wall strips of thickness r1/200.
        let sector = 2.0 * PI / 8.0;
        let wall_area = 8.0 * (sector - 2.0 * 0.02) * 1.0 * (1.0 / 200.0);
        let expect = PI * 4.0 - wall_area;
        assert!((d.area() - expect).abs() / expect < 0.01, "area {}", d.area());
        assert!(!d.is_convex());
    }

    #[test]
    fn json_roundtrip_is_byte_identical() {
        let d = make_dumbbell(DumbbellParams {
            r1: 1.0,
            r2: 0.8,
            connector_length: 2.0,
            eps: 0.05,
            xi: 0.1,
        })
        .unwrap();
        let s1 = d.to_json_string();
        let d2 = DomainSpec::from_json_str(&s1).unwrap();
        let s2 = d2.to_json_string();
        assert_eq!(s1, s2);
        assert_eq!(d.outer.len(), d2.outer.len());
    }

    #[test]
    fn json_rejects_open_or_bowtie() {
        // Bow-tie self-intersection.
        let bowtie = r#"{"family":"raw","params":{},
            "outer":[[0.0,0.0],[1.0,1.0],[1.0,0.0],[0.0,1.0]],"holes":[]}"#;
        assert!(DomainSpec::from_json_str(bowtie).is_err());
        let not_obj = "[1,2,3]";
        assert!(DomainSpec::from_json_str(not_obj).is_err());
    }

    #[test]
    fn uniform_perturbation_offsets_disk() {
        let d = make_disk(1.0, 128).unwrap();
        let f = PerturbationField::uniform(&d);
        let d2 = apply_perturbation(&d, &f, 0.1).unwrap();
        // On a regular polygon vertex normals are exactly radial.
        assert!((d2.diameter() - 2.2).abs() < 1e-9);
        let d0 = apply_perturbation(&d, &f, 0.0).unwrap();
        for (a, b) in d.outer.iter().zip(&d0.outer) {
            assert!(a.dist(*b) < 1e-15);
        }
    }

    #[test]
    fn pinch_is_detected() {
        // Narrow ellipse squeezed inward until the waist crosses.
        let d = make_narrow_convex(1.0, 0.04, 64).unwrap();
        let f = PerturbationField::from_fn(&d, |p, _| if p.x.abs() < 0.2 { -1.0 } else { 0.0 });
        let r = apply_perturbation(&d, &f, 0.045);
        assert!(r.is_err(), "waist crossing must be rejected");
    }

    #[test]
    fn bump_field_area_neutral_and_support() {
        let d = make_disk(1.0, 512).unwrap();
        let total = 2.0 * PI; // approx perimeter
        let f = bump_field(
            &d,
            &[0.0, total / 2.0],
            &[1.0, -1.0],
            0.3,
            BumpConstraints { area_neutral: true, preserve_diameter: false },
        )
        .unwrap();
        // Discrete line integral vanishes after the rescale.
        let arc = d.outer_arc_positions();
        let _ = arc;
        let mut integral = 0.0;
        for i in 0..d.outer.len() {
            let j = (i + 1) % d.outer.len();
            integral += 0.5
                * (f.normal_speed[i] + f.normal_speed[j])
                * d.outer[i].dist(d.outer[j]);
        }
        assert!(integral.abs() < 1e-12, "integral {integral}");
        // Support measure per bump lies between plateau and full support.
        let mut meas = 0.0;
        for i in 0..d.outer.len() {
            let j = (i + 1) % d.outer.len();
            if f.normal_speed[i] != 0.0 || f.normal_speed[j] != 0.0 {
                meas += d.outer[i].dist(d.outer[j]);
            }
        }
        assert!(meas > 2.0 * 0.3 * 2.0 && meas < 4.2 * 0.3 * 2.0, "support measure {meas}");
    }

    #[test]
    fn bump_field_rejects_overlap_and_imbalance() {
        let d = make_disk(1.0, 256).unwrap();
        let err = bump_field(&d, &[0.0, 0.5], &[1.0, -1.0], 0.3, BumpConstraints::default());
        assert!(err.is_err(), "overlapping supports must be rejected");
        let err2 = bump_field(
            &d,
            &[0.0, 3.0],
            &[1.0, 1.0],
            0.3,
            BumpConstraints { area_neutral: true, preserve_diameter: false },
        );
        assert!(err2.is_err(), "all-positive area-neutral system is infeasible");
    }

    #[test]
    fn densify_preserves_shape() {
        let d = make_rectangle(1.0, 1.0).unwrap();
        let dd = d.densify(0.1).unwrap();
        assert!(dd.outer.len() >= 40);
        assert!((dd.area() - 1.0).abs() < 1e-12);
        assert!(dd.is_convex());
    }
}
