//! Nodal sets of P1 eigenfunctions: extraction, domain counting, boundary
//! contact classification, and junction-angle measurement.
//!
//! The zero level set of a P1 function is a union of straight segments, at
//! most one per triangle, plus chains of edges whose endpoints are snapped
//! zeros. Extraction is exact for the discrete function: edge crossing
//! points are computed once per edge (endpoints ordered by vertex id) so the
//! two adjacent triangles contribute bitwise-identical points and the
//! resulting polylines conform.
//!
//! Dirichlet data makes every boundary vertex a zero, so segments whose
//! endpoints are both boundary vertices carry no interior information and
//! are dropped; what remains terminates on the boundary exactly where an
//! interior nodal line lands (a junction).

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geometry::{dist_point_segment, Point};
use crate::mesh::TriMesh;
use crate::svg::Svg;

/// Where an interior nodal line meets the boundary.
#[derive(Debug, Clone)]
pub struct Junction {
    /// Mesh vertex the line lands on.
    pub vertex: usize,
    pub point: Point,
    /// Boundary loop index (0 is the outer loop) and arclength along it.
    pub loop_idx: usize,
    pub arc: f64,
    /// Angle between the CCW boundary tangent and the nodal line, measured
    /// into the domain, in `(0, pi)`. `None` when too few interior nodal
    /// points lie near the junction to fit a direction.
    pub angle: Option<f64>,
}

/// An interior point where nodal lines intersect.
#[derive(Debug, Clone)]
pub struct Crossing {
    pub point: Point,
    /// Direction (radians) of each branch leaving the crossing, sorted.
    pub branches: Vec<f64>,
    /// Largest deviation of consecutive branch gaps from the equiangular
    /// spacing `2*pi / branches.len()`.
    pub equiangular_dev: f64,
}

/// The zero set of a P1 function on a mesh.
#[derive(Debug, Clone)]
pub struct NodalSet {
    pub segments: Vec<[Point; 2]>,
    /// Connected-component id per segment (shared-endpoint connectivity).
    pub component: Vec<usize>,
    pub n_components: usize,
    pub junctions: Vec<Junction>,
    pub crossings: Vec<Crossing>,
    pub total_length: f64,
}

/// Relative floor below which a nodal domain is considered numerically
/// dead: a domain whose sup |v| stays under this fraction of the global
/// sup lives entirely inside floating-point/solver noise (localized
/// eigenfunctions decay exponentially in narrow channels, far below any
/// achievable FEM accuracy), so neither its count nor its zero set carries
/// information about the continuum eigenfunction.
pub const SIGNIFICANCE_REL: f64 = 1e-6;

fn snap_signs(v: &[f64]) -> Result<(Vec<i8>, f64)> {
    let maxabs = v.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
    if maxabs == 0.0 {
        return Err(Error::AllZero("value vector is identically zero".into()));
    }
    let theta = 1e-9 * maxabs;
    let signs = v
        .iter()
        .map(|&x| {
            if x.abs() <= theta {
                0
            } else if x > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok((signs, theta))
}

/// Constant gradient of the P1 function `v` on triangle `t`.
pub fn p1_gradient(mesh: &TriMesh, t: usize, v: &[f64]) -> Point {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let area2 = (pb - pa).cross(pc - pa);
    // grad phi_i = rot_ccw(e_i) / (2 A), e_i the CCW edge opposite vertex i.
    let rot_ccw = |p: Point| Point::new(-p.y, p.x);
    let g = rot_ccw(pc - pb).scale(v[a]) + rot_ccw(pa - pc).scale(v[b]) + rot_ccw(pb - pa).scale(v[c]);
    g.scale(1.0 / area2)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect() }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Extract the nodal set of `v` (values per mesh vertex).
pub fn extract_nodal_set(mesh: &TriMesh, v: &[f64]) -> Result<NodalSet> {
    if v.len() != mesh.vertices.len() {
        return Err(Error::InvalidInput(format!(
            "value vector length {} does not match {} vertices",
            v.len(),
            mesh.vertices.len()
        )));
    }
    let (s, _theta) = snap_signs(v)?;
    // Significance labels: vertices in numerically dead sign pockets get
    // `None` and never spawn segments, so solver noise in exponentially
    // small regions cannot fabricate nodal lines.
    let labels = domain_pieces(mesh, v)?;
    let live = |i: usize| labels.vertex_domain[i].is_some();

    // Opposite vertex per triangle edge, to test whether a zero-zero edge
    // actually separates opposite signs.
    let mut edge_opp: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
    for tv in &mesh.triangles {
        for k in 0..3 {
            let (a, b, c) = (tv[k], tv[(k + 1) % 3], tv[(k + 2) % 3]);
            let e = edge_opp
                .entry((a.min(b), a.max(b)))
                .or_insert([usize::MAX; 2]);
            if e[0] == usize::MAX {
                e[0] = c;
            } else {
                e[1] = c;
            }
        }
    }

    // Crossing point per sign-changing edge, keyed by ordered vertex pair so
    // both adjacent triangles reuse the identical point.
    let mut crossings_on_edges: HashMap<(usize, usize), Point> = HashMap::new();
    let mut crossing_point = |a: usize, b: usize| -> Point {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        *crossings_on_edges.entry((a, b)).or_insert_with(|| {
            let (va, vb) = (v[a], v[b]);
            let t = va / (va - vb);
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            pa + (pb - pa).scale(t)
        })
    };

    let mut segments: Vec<[Point; 2]> = Vec::new();
    let mut seen_zero_edges: HashSet<(usize, usize)> = HashSet::new();
    for t in 0..mesh.triangles.len() {
        let tv = mesh.triangles[t];
        let zero: Vec<usize> = tv.iter().copied().filter(|&i| s[i] == 0).collect();
        match zero.len() {
            3 => {} // fully degenerate triangle: no one-dimensional trace
            2 => {
                let (a, b) = (zero[0].min(zero[1]), zero[0].max(zero[1]));
                if mesh.is_boundary_vertex[a] && mesh.is_boundary_vertex[b] {
                    continue; // boundary edge or near-corner chord
                }
                // A zero chain is part of the nodal set only when the
                // function changes sign across it; a same-sign pair means
                // the surface merely touches zero along the edge (in
                // practice: the rim of a snapped noise region).
                let [c1, c2] = edge_opp[&(a, b)];
                let separates = c2 != usize::MAX
                    && live(c1)
                    && live(c2)
                    && s[c1] * s[c2] < 0;
                if separates && seen_zero_edges.insert((a, b)) {
                    segments.push([mesh.vertices[a], mesh.vertices[b]]);
                }
            }
            1 => {
                let z = zero[0];
                let rest: Vec<usize> = tv.iter().copied().filter(|&i| i != z).collect();
                if s[rest[0]] * s[rest[1]] < 0 && live(rest[0]) && live(rest[1]) {
                    segments.push([mesh.vertices[z], crossing_point(rest[0], rest[1])]);
                }
            }
            0 => {
                let total: i8 = tv.iter().map(|&i| s[i]).sum();
                if total.abs() == 3 {
                    continue; // uniform sign: no zero set in this triangle
                }
                // One vertex differs in sign from the other two.
                let minority = if total > 0 { -1 } else { 1 };
                let lone = tv.iter().copied().find(|&i| s[i] == minority).expect("minority");
                let rest: Vec<usize> = tv.iter().copied().filter(|&i| i != lone).collect();
                if s[rest[0]] == s[rest[1]] && live(lone) && live(rest[0]) && live(rest[1]) {
                    segments.push([
                        crossing_point(lone, rest[0]),
                        crossing_point(lone, rest[1]),
                    ]);
                }
            }
            _ => unreachable!(),
        }
    }

    // Connectivity via bitwise-identical endpoints.
    let mut node_ids: HashMap<(u64, u64), usize> = HashMap::new();
    let mut node_pos: Vec<Point> = Vec::new();
    let mut endpoint = |p: Point, node_pos: &mut Vec<Point>| -> usize {
        let key = (p.x.to_bits(), p.y.to_bits());
        *node_ids.entry(key).or_insert_with(|| {
            node_pos.push(p);
            node_pos.len() - 1
        })
    };
    let seg_nodes: Vec<[usize; 2]> = segments
        .iter()
        .map(|&[a, b]| [endpoint(a, &mut node_pos), endpoint(b, &mut node_pos)])
        .collect();
    let mut dsu = Dsu::new(node_pos.len());
    for sn in &seg_nodes {
        dsu.union(sn[0], sn[1]);
    }
    let mut root_ids: HashMap<usize, usize> = HashMap::new();
    let component: Vec<usize> = seg_nodes
        .iter()
        .map(|sn| {
            let r = dsu.find(sn[0]);
            let next = root_ids.len();
            *root_ids.entry(r).or_insert(next)
        })
        .collect();
    let n_components = root_ids.len();
    let total_length: f64 = segments.iter().map(|&[a, b]| a.dist(b)).sum();

    // Boundary-vertex lookup for junctions/crossings.
    let mut vertex_node: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, p) in mesh.vertices.iter().enumerate() {
        vertex_node.insert((p.x.to_bits(), p.y.to_bits()), i);
    }
    let node_vertex: Vec<Option<usize>> = node_pos
        .iter()
        .map(|p| vertex_node.get(&(p.x.to_bits(), p.y.to_bits())).copied())
        .collect();

    let junctions = find_junctions(mesh, &node_pos, &seg_nodes, &node_vertex);
    let crossings = find_crossings(mesh, &segments, &node_pos, &seg_nodes, &node_vertex);

    Ok(NodalSet { segments, component, n_components, junctions, crossings, total_length })
}

/// Arclength tables for the boundary loops: for each loop, the edge indices
/// plus the cumulative arclength at each edge start.
fn loop_tables(mesh: &TriMesh) -> Vec<(Vec<usize>, Vec<f64>)> {
    mesh.boundary_loops()
        .into_iter()
        .map(|edges| {
            let mut s = Vec::with_capacity(edges.len());
            let mut acc = 0.0;
            for &e in &edges {
                s.push(acc);
                acc += mesh.boundary_edges[e].length;
            }
            (edges, s)
        })
        .collect()
}

fn find_junctions(
    mesh: &TriMesh,
    node_pos: &[Point],
    seg_nodes: &[[usize; 2]],
    node_vertex: &[Option<usize>],
) -> Vec<Junction> {
    let tables = loop_tables(mesh);
    // Map boundary vertex -> (loop, arc at vertex, incoming dir, outgoing dir).
    let mut at_vertex: HashMap<usize, (usize, f64, Point, Point)> = HashMap::new();
    for (li, (edges, arcs)) in tables.iter().enumerate() {
        for (k, &e) in edges.iter().enumerate() {
            let be = &mesh.boundary_edges[e];
            let prev = edges[(k + edges.len() - 1) % edges.len()];
            let pe = &mesh.boundary_edges[prev];
            let dir_out = (mesh.vertices[be.v[1]] - mesh.vertices[be.v[0]]).normalized();
            let dir_in = (mesh.vertices[pe.v[1]] - mesh.vertices[pe.v[0]]).normalized();
            at_vertex.insert(be.v[0], (li, arcs[k], dir_in, dir_out));
        }
    }

    // Junction nodes: endpoints that are boundary vertices.
    let mut junction_nodes: Vec<(usize, usize)> = Vec::new(); // (node, vertex)
    let mut seen = HashSet::new();
    for sn in seg_nodes {
        for &nd in sn {
            if let Some(vtx) = node_vertex[nd] {
                if mesh.is_boundary_vertex[vtx] && seen.insert(nd) {
                    junction_nodes.push((nd, vtx));
                }
            }
        }
    }
    junction_nodes.sort_by_key(|&(_, vtx)| vtx);

    let h = mesh.h_max;
    let r_fit = 6.0 * h;

    // Walk the polyline graph outward from each junction and keep only the
    // interior nodes reachable within the fit window. Restricting to the
    // connected branch matters: a ball query would also sweep up points
    // from unrelated branches (the other face of a thin wall, a parallel
    // line of a higher mode) and tilt the fit. Boundary nodes terminate
    // the walk and are reported so tangential contacts can be recognized.
    let mut node_segs: HashMap<usize, Vec<usize>> = HashMap::new();
    for (si, sn) in seg_nodes.iter().enumerate() {
        node_segs.entry(sn[0]).or_default().push(si);
        node_segs.entry(sn[1]).or_default().push(si);
    }
    let gather = |start: usize| -> (Vec<Point>, Vec<usize>) {
        let anchor = node_pos[start];
        let mut seen: HashSet<usize> = HashSet::from([start]);
        let mut frontier = vec![start];
        let mut pts = Vec::new();
        let mut boundary_hits = Vec::new();
        while let Some(nd_q) = frontier.pop() {
            let Some(segs) = node_segs.get(&nd_q) else { continue };
            for &si in segs {
                for &nb in &seg_nodes[si] {
                    if !seen.insert(nb) {
                        continue;
                    }
                    if node_pos[nb].dist(anchor) > r_fit {
                        continue;
                    }
                    let on_boundary = node_vertex[nb]
                        .map(|vq| mesh.is_boundary_vertex[vq])
                        .unwrap_or(false);
                    if on_boundary {
                        boundary_hits.push(nb);
                        continue;
                    }
                    pts.push(node_pos[nb]);
                    frontier.push(nb);
                }
            }
        }
        (pts, boundary_hits)
    };

    let gathered: Vec<(usize, usize, Vec<Point>, Vec<usize>)> = junction_nodes
        .into_iter()
        .map(|(nd, vtx)| {
            let (pts, hits) = gather(nd);
            (nd, vtx, pts, hits)
        })
        .collect();

    gathered
        .into_iter()
        .filter_map(|(nd, vtx, pts, hits)| {
            // Two boundary hits of the same branch within a few mesh sizes
            // form an unresolved tangential contact: the continuum picture
            // (two perpendicular hits joined by an arc, or a tangency that
            // never touches) is below mesh resolution, so neither endpoint
            // is a trustworthy junction. Genuine distinct junctions of our
            // eigenfunctions are separated by a fair fraction of the
            // wavelength, far above this scale.
            let p = node_pos[nd];
            if hits.iter().any(|&nb| nb != nd && node_pos[nb].dist(p) <= 4.0 * h) {
                return None;
            }
            let (loop_idx, arc, dir_in, dir_out) = at_vertex[&vtx];
            let angle = fit_tangent(p, &pts, 2.0 * h).map(|d| {
                // Tangent at the vertex: average of adjacent edge directions.
                let tangent = (dir_in + dir_out).normalized();
                // Orient the fitted direction into the domain (left of the
                // CCW tangent).
                let d = if tangent.cross(d) < 0.0 { d.scale(-1.0) } else { d };
                tangent.cross(d).atan2(tangent.dot(d)).rem_euclid(2.0 * std::f64::consts::PI)
            });
            Some(Junction { vertex: vtx, point: p, loop_idx, arc, angle })
        })
        .collect()
}

/// Maximum thin/thick axis ratio of the point scatter for an angle fit to
/// be reported: above this the local nodal set is not resolvably ray-like
/// (jitter in an exponentially flat region, or several rays mixed) and the
/// fitted direction would be noise, so `None` is returned instead.
const FIT_ASPECT_MAX: f64 = 0.35;

/// Maximum rotation of the fitted tangent across the fit window. More
/// rotation than this means the branch curves at the scale of the window
/// itself, so a tangent at the anchor cannot be resolved from these points.
const MAX_TANGENT_TURN: f64 = 0.7;

/// Tangent direction of the nodal branch at `anchor`, fitted from the
/// nearby branch points.
///
/// The points go into a PCA frame about their centroid; the anchor itself
/// is excluded because its position is quantized to a mesh vertex (up to
/// half an edge off the true junction) and would bias the fit. In that
/// frame the transverse coordinate is fitted as a quadratic in the axial
/// one and the tangent is evaluated at the anchor's axial station, which
/// removes the bias a straight-line fit picks up when the branch curves
/// across the window. Points are weighted down with axial distance from
/// the anchor station (scale `tau`): the tangent is a local quantity, so
/// far points should stabilize the curvature estimate without steering
/// the slope. Fewer than five points fall back to the straight PCA
/// direction.
fn fit_tangent(anchor: Point, pts: &[Point], tau: f64) -> Option<Point> {
    let (d, aspect, rms_lin) = pca_direction(pts)?;
    if pts.len() < 3 || aspect > FIT_ASPECT_MAX {
        return None;
    }
    let n = pts.len() as f64;
    let mean = pts
        .iter()
        .fold(Point::new(0.0, 0.0), |s, q| s + *q)
        .scale(1.0 / n);
    let e_sigma = d;
    let e_zeta = Point::new(-d.y, d.x);
    let sigma_a = (anchor - mean).dot(e_sigma);

    let slope_at = |c1: f64, c2: f64, s: f64| c1 + 2.0 * c2 * s;
    let (c1, c2) = if pts.len() >= 5 {
        // Weighted least squares for zeta = c0 + c1 sigma + c2 sigma^2.
        let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
        for q in pts {
            let r = *q - mean;
            let (sg, zt) = (r.dot(e_sigma), r.dot(e_zeta));
            let u = (sg - sigma_a) / tau;
            let w = (-0.5 * u * u).exp();
            s0 += w;
            s1 += w * sg;
            s2 += w * sg * sg;
            s3 += w * sg * sg * sg;
            s4 += w * sg * sg * sg * sg;
            t0 += w * zt;
            t1 += w * sg * zt;
            t2 += w * sg * sg * zt;
        }
        solve3(
            [[s0, s1, s2], [s1, s2, s3], [s2, s3, s4]],
            [t0, t1, t2],
        )
        .map(|c| (c[1], c[2]))
        .unwrap_or((0.0, 0.0))
    } else {
        (0.0, 0.0)
    };

    let (mut sig_min, mut sig_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for q in pts {
        let sg = (*q - mean).dot(e_sigma);
        sig_min = sig_min.min(sg);
        sig_max = sig_max.max(sg);
    }
    // Keep the quadratic only when its deflection across the window
    // clearly exceeds the straight fit's residual; otherwise the measured
    // curvature is discretization noise and tracking it into the anchor
    // station just adds variance to the tangent of a straight branch.
    let half_span = 0.5 * (sig_max - sig_min);
    let deflection = c2.abs() * half_span * half_span;
    if deflection <= 2.0 * rms_lin {
        return Some(if d.dot(mean - anchor) < 0.0 { d.scale(-1.0) } else { d });
    }

    // Gate on unresolved curvature: tangent rotation across the window.
    let turn = (slope_at(c1, c2, sig_max).atan() - slope_at(c1, c2, sig_min).atan()).abs();
    if turn > MAX_TANGENT_TURN {
        return None;
    }

    let s = slope_at(c1, c2, sigma_a);
    let tangent = (e_sigma + e_zeta.scale(s)).normalized();
    // Point from the anchor into the branch (the centroid is at sigma 0).
    Some(if sigma_a > 0.0 { tangent.scale(-1.0) } else { tangent })
}

/// Solve a 3x3 linear system by Gaussian elimination with partial
/// pivoting; `None` when singular to machine precision.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Principal axis of the centered scatter, the sqrt eigenvalue ratio
/// (0 = perfectly collinear, 1 = isotropic), and the RMS transverse
/// residual about the principal line.
fn pca_direction(pts: &[Point]) -> Option<(Point, f64, f64)> {
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    let mean = pts
        .iter()
        .fold(Point::new(0.0, 0.0), |s, q| s + *q)
        .scale(1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for q in pts {
        let d = *q - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    // Eigenvalues of [[sxx, sxy], [sxy, syy]].
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let root = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (lam_max, lam_min) = (0.5 * tr + root, (0.5 * tr - root).max(0.0));
    let cand = if sxy.abs() > 1e-300 {
        Point::new(lam_max - syy, sxy)
    } else if sxx >= syy {
        Point::new(1.0, 0.0)
    } else {
        Point::new(0.0, 1.0)
    };
    if cand.norm() == 0.0 || lam_max <= 0.0 {
        return None;
    }
    Some((cand.normalized(), (lam_min / lam_max).sqrt(), (lam_min / n).sqrt()))
}

fn find_crossings(
    mesh: &TriMesh,
    segments: &[[Point; 2]],
    node_pos: &[Point],
    seg_nodes: &[[usize; 2]],
    node_vertex: &[Option<usize>],
) -> Vec<Crossing> {
    let h = mesh.h_max;
    let mut centers: Vec<Point> = Vec::new();

    // Exact crossings: interior nodes where at least three interior zero
    // chains meet. Segments touching the boundary are excluded from the
    // degree count; near a junction the Dirichlet zeros can fan out and
    // inflate degrees without any interior lines actually crossing.
    let node_is_boundary = |nd: usize| {
        node_vertex[nd]
            .map(|v| mesh.is_boundary_vertex[v])
            .unwrap_or(false)
    };
    let mut interior_degree = vec![0usize; node_pos.len()];
    for sn in seg_nodes {
        if !node_is_boundary(sn[0]) && !node_is_boundary(sn[1]) {
            interior_degree[sn[0]] += 1;
            interior_degree[sn[1]] += 1;
        }
    }
    for (nd, &deg) in interior_degree.iter().enumerate() {
        if deg >= 3 {
            centers.push(node_pos[nd]);
        }
    }

    // Near-contacts: segment pairs passing within a fraction of the mesh
    // size without being part of the same local chain (a generic P1 zero
    // set is a 1-manifold, so an underlying continuum crossing shows up as
    // two branches almost touching). Chain proximity is judged by graph
    // distance: anything reachable within a few hops is the same branch.
    let mut node_segs: HashMap<usize, Vec<usize>> = HashMap::new();
    for (si, sn) in seg_nodes.iter().enumerate() {
        node_segs.entry(sn[0]).or_default().push(si);
        node_segs.entry(sn[1]).or_default().push(si);
    }
    let same_chain = |a: usize, b: usize| -> bool {
        let mut frontier = vec![a];
        let mut seen: HashSet<usize> = HashSet::from([a]);
        for _hop in 0..4 {
            let mut next = Vec::new();
            for &s in &frontier {
                for &nd in &seg_nodes[s] {
                    for &t in &node_segs[&nd] {
                        if seen.insert(t) {
                            if t == b {
                                return true;
                            }
                            next.push(t);
                        }
                    }
                }
            }
            frontier = next;
        }
        false
    };
    let n = segments.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = segment_gap(segments[i], segments[j]);
            if d < 0.75 * h && !same_chain(i, j) {
                let p = Point::new(
                    0.25 * (segments[i][0].x + segments[i][1].x + segments[j][0].x + segments[j][1].x),
                    0.25 * (segments[i][0].y + segments[i][1].y + segments[j][0].y + segments[j][1].y),
                );
                centers.push(p);
            }
        }
    }

    // Cluster centers within 3 h.
    let mut clusters: Vec<(Point, usize)> = Vec::new();
    'next: for c in centers {
        for (mean, count) in clusters.iter_mut() {
            if mean.dist(c) < 3.0 * h {
                let k = *count as f64;
                *mean = Point::new((mean.x * k + c.x) / (k + 1.0), (mean.y * k + c.y) / (k + 1.0));
                *count += 1;
                continue 'next;
            }
        }
        clusters.push((c, 1));
    }

    clusters
        .into_iter()
        .filter_map(|(center, _)| {
            // Refine the center: cluster candidates are quantized to mesh
            // vertices / segment midpoints, so average the nearby nodal
            // nodes (twice, to shed the initial offset) before measuring
            // branch directions against it.
            let near = |c: Point, r: f64| -> Vec<Point> {
                node_pos
                    .iter()
                    .enumerate()
                    .filter(|(nd, q)| !node_is_boundary(*nd) && q.dist(c) <= r)
                    .map(|(_, q)| *q)
                    .collect()
            };
            let mut c = center;
            for _ in 0..2 {
                let pts = near(c, 2.0 * h);
                if pts.is_empty() {
                    break;
                }
                let n = pts.len() as f64;
                c = pts
                    .iter()
                    .fold(Point::new(0.0, 0.0), |s, q| s + *q)
                    .scale(1.0 / n);
            }

            // Branch points in an annulus around the refined center,
            // grouped by polar angle; each group is one branch whose
            // direction comes from its own centered line fit (immune to
            // residual center error).
            let mut ring: Vec<(f64, Point)> = near(c, 3.0 * h)
                .into_iter()
                .filter(|q| q.dist(c) > 0.4 * h)
                .map(|q| ((q - c).y.atan2((q - c).x), q))
                .collect();
            if ring.len() < 3 {
                return None;
            }
            ring.sort_by(|a, b| f64::total_cmp(&a.0, &b.0));
            let mut groups: Vec<Vec<Point>> = vec![vec![ring[0].1]];
            for w in ring.windows(2) {
                if w[1].0 - w[0].0 > 0.45 {
                    groups.push(Vec::new());
                }
                groups.last_mut().unwrap().push(w[1].1);
            }
            // Wrap-around: first and last group may be the same branch.
            if groups.len() >= 2 {
                let wrap_gap = ring[0].0 + 2.0 * std::f64::consts::PI - ring.last().unwrap().0;
                if wrap_gap <= 0.45 {
                    let tail = groups.pop().unwrap();
                    groups[0].extend(tail);
                }
            }

            let mut angles: Vec<f64> = Vec::new();
            for g in &groups {
                let dir = match pca_direction(g) {
                    Some((d, _, _)) if g.len() >= 2 => d,
                    _ => (g[0] - c).normalized(),
                };
                let n = g.len() as f64;
                let mean = g
                    .iter()
                    .fold(Point::new(0.0, 0.0), |s, q| s + *q)
                    .scale(1.0 / n);
                let d = if dir.dot(mean - c) < 0.0 { dir.scale(-1.0) } else { dir };
                angles.push(d.y.atan2(d.x));
            }
            angles.sort_by(f64::total_cmp);
            // Merge near-duplicate directions.
            let mut branches: Vec<f64> = Vec::new();
            for a in angles {
                if branches.iter().all(|&b| {
                    let d = (a - b).abs();
                    d.min(2.0 * std::f64::consts::PI - d) > 0.15
                }) {
                    branches.push(a);
                }
            }
            // A true interior crossing of the zero set has at least two
            // lines through one point (>= 4 rays; 3 allows one branch lost
            // to the window edge). Fewer means a plain polyline point that
            // happened to pass through a mesh vertex: not a crossing.
            let m = branches.len();
            if m < 3 {
                return None;
            }
            let want = 2.0 * std::f64::consts::PI / m as f64;
            let equiangular_dev = (0..m)
                .map(|i| {
                    let gap = if i + 1 < m {
                        branches[i + 1] - branches[i]
                    } else {
                        branches[0] + 2.0 * std::f64::consts::PI - branches[m - 1]
                    };
                    (gap - want).abs()
                })
                .fold(0.0, f64::max);
            Some(Crossing { point: c, branches, equiangular_dev })
        })
        .collect()
}

/// Smallest distance between two segments (zero if they intersect).
fn segment_gap(a: [Point; 2], b: [Point; 2]) -> f64 {
    let d1 = (a[1] - a[0]).cross(b[0] - a[0]);
    let d2 = (a[1] - a[0]).cross(b[1] - a[0]);
    let d3 = (b[1] - b[0]).cross(a[0] - b[0]);
    let d4 = (b[1] - b[0]).cross(a[1] - b[0]);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    dist_point_segment(a[0], b[0], b[1])
        .min(dist_point_segment(a[1], b[0], b[1]))
        .min(dist_point_segment(b[0], a[0], a[1]))
        .min(dist_point_segment(b[1], a[0], a[1]))
}

// ---------------------------------------------------------------------------
// Nodal domains

/// Count the nodal domains of `v`: connected components of `{v > 0}` and
/// `{v < 0}` tracked through triangle pieces, so domains thinner than one
/// vertex spacing are still separated correctly wherever the P1 sign
/// structure sees them.
pub fn count_nodal_domains(mesh: &TriMesh, v: &[f64]) -> Result<usize> {
    Ok(domain_pieces(mesh, v)?.n_domains)
}

pub struct DomainLabels {
    pub n_domains: usize,
    /// Domain id per vertex (`None` for snapped zeros).
    pub vertex_domain: Vec<Option<usize>>,
    /// Sign of each domain.
    pub domain_sign: Vec<i8>,
}

fn domain_pieces(mesh: &TriMesh, v: &[f64]) -> Result<DomainLabels> {
    if v.len() != mesh.vertices.len() {
        return Err(Error::InvalidInput("value vector length mismatch".into()));
    }
    let (s, _) = snap_signs(v)?;
    let nt = mesh.triangles.len();
    // Piece ids: 2t for the positive part of triangle t, 2t+1 negative.
    let mut dsu = Dsu::new(2 * nt);
    let alive = |t: usize, sign: i8| mesh.triangles[t].iter().any(|&i| s[i] == sign);

    // Shared edges: map ordered vertex pair -> triangles.
    let mut edge_tris: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
    for (t, tv) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tv[k], tv[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let e = edge_tris.entry(key).or_insert([usize::MAX; 2]);
            if e[0] == usize::MAX {
                e[0] = t;
            } else {
                e[1] = t;
            }
        }
    }
    for (&(a, b), &[t1, t2]) in &edge_tris {
        if t2 == usize::MAX {
            continue;
        }
        if s[a] == 1 || s[b] == 1 {
            dsu.union(2 * t1, 2 * t2);
        }
        if s[a] == -1 || s[b] == -1 {
            dsu.union(2 * t1 + 1, 2 * t2 + 1);
        }
    }

    let mut root_ids: HashMap<usize, usize> = HashMap::new();
    let mut domain_sign: Vec<i8> = Vec::new();
    let mut piece_domain = vec![usize::MAX; 2 * nt];
    for t in 0..nt {
        for (off, sign) in [(0usize, 1i8), (1, -1)] {
            if alive(t, sign) {
                let r = dsu.find(2 * t + off);
                let next = root_ids.len();
                let id = *root_ids.entry(r).or_insert_with(|| {
                    domain_sign.push(sign);
                    next
                });
                piece_domain[2 * t + off] = id;
            }
        }
    }

    let mut vertex_domain: Vec<Option<usize>> = vec![None; mesh.vertices.len()];
    for (t, tv) in mesh.triangles.iter().enumerate() {
        for &i in tv {
            if s[i] != 0 {
                let off = if s[i] == 1 { 0 } else { 1 };
                vertex_domain[i] = Some(piece_domain[2 * t + off]);
            }
        }
    }

    // Drop numerically dead domains (sup below the significance floor):
    // they are sign flips of solver noise in regions where the true
    // eigenfunction is exponentially small, not nodal domains.
    let maxabs = v.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
    let mut sup = vec![0.0f64; root_ids.len()];
    for (i, dom) in vertex_domain.iter().enumerate() {
        if let Some(d) = dom {
            sup[*d] = sup[*d].max(v[i].abs());
        }
    }
    let mut remap = vec![None; root_ids.len()];
    let mut kept_sign = Vec::new();
    for (d, &s_max) in sup.iter().enumerate() {
        if s_max >= SIGNIFICANCE_REL * maxabs {
            remap[d] = Some(kept_sign.len());
            kept_sign.push(domain_sign[d]);
        }
    }
    for dom in vertex_domain.iter_mut() {
        *dom = dom.and_then(|d| remap[d]);
    }
    Ok(DomainLabels { n_domains: kept_sign.len(), vertex_domain, domain_sign: kept_sign })
}

/// Per-vertex domain labels plus domain count; see [`count_nodal_domains`].
pub fn nodal_domain_labels(mesh: &TriMesh, v: &[f64]) -> Result<DomainLabels> {
    domain_pieces(mesh, v)
}

/// For each nodal domain, the largest distance from one of its vertices to
/// the union of the nodal set and the boundary. This is a lower bound on
/// the domain's inradius that converges as the mesh refines.
pub fn inradius_by_domain(mesh: &TriMesh, v: &[f64]) -> Result<Vec<f64>> {
    let labels = domain_pieces(mesh, v)?;
    let ns = extract_nodal_set(mesh, v)?;
    let mut best = vec![0.0f64; labels.n_domains];
    for (i, p) in mesh.vertices.iter().enumerate() {
        let Some(dom) = labels.vertex_domain[i] else { continue };
        let d = dist_to_zero_set(mesh, &ns, *p);
        if d > best[dom] {
            best[dom] = d;
        }
    }
    Ok(best)
}

/// Largest distance from any vertex to the union of nodal set and boundary:
/// an empirical check that eigenfunction oscillation fills the domain at the
/// wavelength scale (`max_dist * sqrt(lambda)` stays below the first Bessel
/// zero).
pub fn max_dist_to_nodal(mesh: &TriMesh, v: &[f64]) -> Result<f64> {
    let ns = extract_nodal_set(mesh, v)?;
    let mut best = 0.0f64;
    for p in &mesh.vertices {
        best = best.max(dist_to_zero_set(mesh, &ns, *p));
    }
    Ok(best)
}

fn dist_to_zero_set(mesh: &TriMesh, ns: &NodalSet, p: Point) -> f64 {
    let mut d = f64::INFINITY;
    for be in &mesh.boundary_edges {
        d = d.min(dist_point_segment(p, mesh.vertices[be.v[0]], mesh.vertices[be.v[1]]));
    }
    for sg in &ns.segments {
        d = d.min(dist_point_segment(p, sg[0], sg[1]));
    }
    d
}

// ---------------------------------------------------------------------------
// Boundary classification

/// One sample of the outward normal derivative on a boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    /// Boundary edge index.
    pub edge: usize,
    /// Arclength of the edge midpoint along its loop.
    pub arc: f64,
    /// One-sided `dv/dn` from the interior triangle (outward normal).
    pub dvdn: f64,
}

/// Outward normal derivative of `v` along each boundary loop, in loop order.
pub fn boundary_neumann_trace(mesh: &TriMesh, v: &[f64]) -> Result<Vec<Vec<TraceSample>>> {
    if v.len() != mesh.vertices.len() {
        return Err(Error::InvalidInput("value vector length mismatch".into()));
    }
    Ok(loop_tables(mesh)
        .into_iter()
        .map(|(edges, arcs)| {
            edges
                .iter()
                .zip(&arcs)
                .map(|(&e, &s0)| {
                    let be = &mesh.boundary_edges[e];
                    let g = p1_gradient(mesh, be.tri, v);
                    TraceSample { edge: e, arc: s0 + 0.5 * be.length, dvdn: g.dot(be.normal) }
                })
                .collect()
        })
        .collect())
}

/// Contact classification of a second eigenfunction's nodal set, after
/// Payne's trichotomy for the way the nodal line meets the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayneClass {
    /// The normal derivative changes sign: the nodal line reaches the
    /// boundary (splitting it into arcs).
    Sp,
    /// Tangential contact. Never produced numerically — certifying a
    /// boundary tangency would require distinguishing a double zero from
    /// two nearby simple zeros at finite precision.
    Wp,
    /// No sign change anywhere: the nodal line stays closed in the
    /// interior.
    Np,
    /// The robust samples are inconsistent (e.g. everything below the noise
    /// band).
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct PayneVerdict {
    pub class: PayneClass,
    /// Confidence in `[0, 1]`: for Sp the weakest confirmed lobe peak over
    /// the global peak; for Np one minus the largest opposite-sign sample
    /// over the global peak.
    pub margin: f64,
    /// `(loop, arclength)` positions where the robust trace changes sign.
    pub sign_changes: Vec<(usize, f64)>,
}

/// Classify the boundary trace. `band` is the relative noise floor:
/// samples with `|dvdn| <= band * max |dvdn|` are ignored. The verdict is
/// invariant under scaling of the trace.
pub fn classify_payne(trace: &[Vec<TraceSample>], band: f64) -> PayneVerdict {
    let smax = trace
        .iter()
        .flatten()
        .fold(0.0f64, |s, t| s.max(t.dvdn.abs()));
    if smax == 0.0 {
        return PayneVerdict { class: PayneClass::Indeterminate, margin: 0.0, sign_changes: vec![] };
    }
    let floor = band * smax;
    let mut sign_changes = Vec::new();
    let mut lobe_peaks: Vec<f64> = Vec::new();
    let mut max_minority = 0.0f64;
    // Majority sign over robust samples decides what counts as "opposite".
    let (mut pos, mut neg) = (0usize, 0usize);
    for t in trace.iter().flatten() {
        if t.dvdn > floor {
            pos += 1;
        } else if t.dvdn < -floor {
            neg += 1;
        }
    }
    if pos + neg == 0 {
        return PayneVerdict { class: PayneClass::Indeterminate, margin: 0.0, sign_changes: vec![] };
    }
    let majority: i8 = if pos >= neg { 1 } else { -1 };

    for (li, samples) in trace.iter().enumerate() {
        let robust: Vec<&TraceSample> =
            samples.iter().filter(|t| t.dvdn.abs() > floor).collect();
        if robust.is_empty() {
            continue;
        }
        // Cyclic walk: record a change at each sign flip, track lobe peaks.
        let mut lobe_peak = robust[0].dvdn.abs();
        let mut prev = robust[0].dvdn.signum();
        for t in robust.iter().skip(1) {
            let sg = t.dvdn.signum();
            if sg != prev {
                sign_changes.push((li, t.arc));
                lobe_peaks.push(lobe_peak);
                lobe_peak = 0.0;
                prev = sg;
            }
            lobe_peak = lobe_peak.max(t.dvdn.abs());
        }
        // Close the cycle.
        if robust[0].dvdn.signum() != prev {
            sign_changes.push((li, robust[0].arc));
            lobe_peaks.push(lobe_peak);
        } else if !lobe_peaks.is_empty() {
            // First and last lobes are the same lobe.
            let first = lobe_peaks[0];
            lobe_peaks[0] = first.max(lobe_peak);
        } else {
            lobe_peaks.push(lobe_peak);
        }
        for t in &robust {
            if (t.dvdn.signum() as i8) != majority {
                max_minority = max_minority.max(t.dvdn.abs());
            }
        }
    }

    let n_changes = sign_changes.len();
    if n_changes >= 2 {
        let weakest = lobe_peaks.iter().copied().fold(f64::INFINITY, f64::min);
        PayneVerdict { class: PayneClass::Sp, margin: weakest / smax, sign_changes }
    } else if n_changes == 0 {
        PayneVerdict { class: PayneClass::Np, margin: 1.0 - max_minority / smax, sign_changes }
    } else {
        PayneVerdict { class: PayneClass::Indeterminate, margin: 0.0, sign_changes }
    }
}

// ---------------------------------------------------------------------------
// Angle quantization

/// Nearest rational multiple of pi to `angle`, drawn from
/// `{ p*pi/q : 2 <= q <= n0, 1 <= p < q, gcd(p, q) = 1 }` with
/// `n0 = max(2, floor(c * sqrt(lambda)))`. Returns the candidate and the
/// absolute deviation.
pub fn angle_quantization_check(angle: f64, lambda: f64, c: f64) -> (f64, f64) {
    let n0 = ((c * lambda.sqrt()).floor() as usize).max(2);
    let mut best = (std::f64::consts::FRAC_PI_2, f64::INFINITY);
    for q in 2..=n0 {
        for p in 1..q {
            if gcd(p, q) != 1 {
                continue;
            }
            let cand = p as f64 * std::f64::consts::PI / q as f64;
            let dev = (angle - cand).abs();
            if dev < best.1 {
                best = (cand, dev);
            }
        }
    }
    best
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// Rendering

/// SVG of the mesh with the nodal set, junctions, and crossings overlaid.
pub fn nodal_overlay_svg(mesh: &TriMesh, ns: &NodalSet) -> String {
    let mut svg = Svg::over_points(mesh.vertices.iter());
    let grey = svg.rel_width(0.0006);
    for t in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a < b {
                svg.segment(mesh.vertices[a], mesh.vertices[b], "#d8d8d8", grey);
            }
        }
    }
    let dark = svg.rel_width(0.002);
    for be in &mesh.boundary_edges {
        svg.segment(mesh.vertices[be.v[0]], mesh.vertices[be.v[1]], "#333333", dark);
    }
    let red = svg.rel_width(0.0025);
    for sg in &ns.segments {
        svg.segment(sg[0], sg[1], "#cc2222", red);
    }
    let r_mark = svg.rel_width(0.006);
    for j in &ns.junctions {
        svg.circle(j.point, r_mark, "#2255cc");
    }
    for c in &ns.crossings {
        svg.circle(c.point, r_mark, "#22aa55");
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{solve_spectrum, EigOptions};
    use crate::geometry::{make_disk, make_rectangle};
    use crate::mesh::{triangulate, TriMesh};
    use crate::reference::{bessel_zero, disk_spectrum};
    use std::f64::consts::PI;

    /// Structured n x n grid on (0, pi)^2, cells split along alternating
    /// diagonals (checkerboard). Grid vertices land exactly on the nodal
    /// lines of the product modes, which pins domain counts and angles
    /// combinatorially, and the alternation keeps diagonals from connecting
    /// two zero vertices near where a nodal line meets the boundary.
    fn grid_mesh(n: usize) -> TriMesh {
        let h = PI / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                if (i + j) % 2 == 0 {
                    triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                } else {
                    triangles.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                    triangles.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        TriMesh::from_parts(vertices, triangles, 0).unwrap()
    }

    fn mode(mesh: &TriMesh, m: usize, k: usize) -> Vec<f64> {
        mesh.vertices
            .iter()
            .map(|p| (m as f64 * p.x).sin() * (k as f64 * p.y).sin())
            .collect()
    }

    #[test]
    fn product_modes_have_expected_domain_counts() {
        let mesh = grid_mesh(16);
        for ((m, k), want) in [((1, 1), 1), ((2, 1), 2), ((2, 2), 4), ((4, 4), 16)] {
            let v = mode(&mesh, m, k);
            assert_eq!(count_nodal_domains(&mesh, &v).unwrap(), want, "mode ({m},{k})");
        }
    }

    #[test]
    fn vertical_line_mode_extracts_one_component_with_right_angles() {
        let mesh = grid_mesh(16);
        let v = mode(&mesh, 2, 1);
        let ns = extract_nodal_set(&mesh, &v).unwrap();
        assert_eq!(ns.n_components, 1);
        // The line x = pi/2 has length pi.
        assert!((ns.total_length - PI).abs() < 1e-9, "{}", ns.total_length);
        assert_eq!(ns.junctions.len(), 2);
        for j in &ns.junctions {
            assert!((j.point.x - PI / 2.0).abs() < 1e-12);
            let a = j.angle.expect("enough interior points to fit");
            assert!((a - PI / 2.0).abs() < 0.03, "junction angle {a}");
            let (cand, dev) = angle_quantization_check(a, 5.0, 1.0);
            assert!((cand - PI / 2.0).abs() < 1e-12);
            assert!(dev < 0.03);
        }
        assert!(ns.crossings.is_empty());
    }

    #[test]
    fn cross_mode_detects_equiangular_crossing() {
        let mesh = grid_mesh(16);
        let v = mode(&mesh, 2, 2);
        let ns = extract_nodal_set(&mesh, &v).unwrap();
        assert_eq!(ns.crossings.len(), 1, "crossings {:?}", ns.crossings);
        let c = &ns.crossings[0];
        assert!(c.point.dist(Point::new(PI / 2.0, PI / 2.0)) < 1e-9);
        assert_eq!(c.branches.len(), 4);
        assert!(c.equiangular_dev < 1e-9, "dev {}", c.equiangular_dev);
        assert_eq!(ns.junctions.len(), 4);
        // Both full lines and nothing else: length 2 pi.
        assert!((ns.total_length - 2.0 * PI).abs() < 1e-9, "{}", ns.total_length);
    }

    #[test]
    fn dense_mode_fills_domain_at_wavelength_scale() {
        let mesh = grid_mesh(16);
        let v = mode(&mesh, 4, 4);
        let lambda = 32.0f64;
        let d = max_dist_to_nodal(&mesh, &v).unwrap();
        let product = d * lambda.sqrt();
        assert!((product - 2.2214).abs() < 0.01, "{product}");
        assert!(product < 2.3);
        assert!(product < bessel_zero(0, 1));
    }

    #[test]
    fn disk_second_eigenfunction_splits_into_half_disks() {
        let d = make_disk(1.0, 512).unwrap();
        let mesh = triangulate(&d, 0.03).unwrap();
        let r = solve_spectrum(&mesh, &EigOptions { k: 2, ..Default::default() }).unwrap();
        let v = &r.vectors[1];
        assert_eq!(count_nodal_domains(&mesh, v).unwrap(), 2);

        // The nodal line is a diameter; each half-disk has inradius 1/2.
        let radii = inradius_by_domain(&mesh, v).unwrap();
        assert_eq!(radii.len(), 2);
        for &ri in &radii {
            assert!((ri - 0.5).abs() < 0.05, "inradius {ri}");
            let product = r.eigenvalues[1].sqrt() * ri;
            assert!((product - 1.916).abs() < 0.1, "{product}");
            assert!(product < 2.5048);
        }

        // The normal derivative changes sign exactly twice, a diameter apart.
        let trace = boundary_neumann_trace(&mesh, v).unwrap();
        let verdict = classify_payne(&trace, 0.05);
        assert_eq!(verdict.class, PayneClass::Sp);
        assert_eq!(verdict.sign_changes.len(), 2);
        let gap = (verdict.sign_changes[1].1 - verdict.sign_changes[0].1).abs();
        let half = PI; // half the circumference of the unit circle
        assert!((gap - half).abs() < 0.2, "arc gap {gap}");
        assert!(verdict.margin > 0.5, "margin {}", verdict.margin);

        // Junctions match the sign-change positions: two, diametrically
        // opposite.
        let ns = extract_nodal_set(&mesh, v).unwrap();
        assert_eq!(ns.junctions.len(), 2);
        let p0 = ns.junctions[0].point;
        let p1 = ns.junctions[1].point;
        assert!((p0.dist(p1) - 2.0).abs() < 0.05, "junction separation");
    }

    #[test]
    fn computed_square_modes_respect_courant() {
        let d = make_rectangle(PI, PI).unwrap();
        let mesh = triangulate(&d, 0.08).unwrap();
        let r = solve_spectrum(&mesh, &EigOptions::default()).unwrap();
        for (i, v) in r.vectors.iter().enumerate() {
            let n = count_nodal_domains(&mesh, v).unwrap();
            assert!(n <= i + 2, "mode {i} has {n} domains"); // Courant: <= k
            assert!(n >= if i == 0 { 1 } else { 2 }, "mode {i} has {n} domains");
        }
        // First eigenfunction never vanishes inside.
        assert_eq!(count_nodal_domains(&mesh, &r.vectors[0]).unwrap(), 1);
        let ns = extract_nodal_set(&mesh, &r.vectors[0]).unwrap();
        assert!(ns.segments.is_empty(), "ground state has no nodal line");
    }

    #[test]
    fn all_zero_vector_is_rejected() {
        let mesh = grid_mesh(4);
        let v = vec![0.0; mesh.vertices.len()];
        assert!(matches!(extract_nodal_set(&mesh, &v), Err(Error::AllZero(_))));
        assert!(matches!(count_nodal_domains(&mesh, &v), Err(Error::AllZero(_))));
    }

    #[test]
    fn payne_verdict_is_scale_invariant() {
        let d = make_disk(1.0, 256).unwrap();
        let mesh = triangulate(&d, 0.06).unwrap();
        let r = solve_spectrum(&mesh, &EigOptions { k: 2, ..Default::default() }).unwrap();
        let trace = boundary_neumann_trace(&mesh, &r.vectors[1]).unwrap();
        let base = classify_payne(&trace, 0.05);
        for scale in [1e-9, 1e-3, 1.0, 1e6, 1e12] {
            let scaled: Vec<Vec<TraceSample>> = trace
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|t| TraceSample { dvdn: t.dvdn * scale, ..*t })
                        .collect()
                })
                .collect();
            let v = classify_payne(&scaled, 0.05);
            assert_eq!(v.class, base.class);
            assert_eq!(v.sign_changes.len(), base.sign_changes.len());
            assert!((v.margin - base.margin).abs() < 1e-9);
        }
    }

    #[test]
    fn quantization_check_matches_hand_values() {
        // sqrt(5) ~ 2.24 so only q = 2 is allowed: nearest is pi/2.
        let (cand, dev) = angle_quantization_check(1.571, 5.0, 1.0);
        assert!((cand - PI / 2.0).abs() < 1e-15);
        assert!((dev - (1.571 - PI / 2.0).abs()).abs() < 1e-15);
        assert!((dev - 0.000204).abs() < 1e-5, "dev {dev}");
        // Larger budget: pi/5 becomes available.
        let (cand, dev) = angle_quantization_check(0.6283, 100.0, 1.0);
        assert!((cand - PI / 5.0).abs() < 1e-15);
        assert!(dev < 1e-4);
    }

    #[test]
    fn overlay_svg_contains_marks() {
        let mesh = grid_mesh(8);
        let v = mode(&mesh, 2, 2);
        let ns = extract_nodal_set(&mesh, &v).unwrap();
        let svg = nodal_overlay_svg(&mesh, &ns);
        assert!(svg.contains("<circle"));
        assert!(svg.contains("#cc2222"));
        assert!(svg.ends_with("</svg>\n") || svg.ends_with("</svg>"));
    }

    #[test]
    fn disk_ground_state_trace_is_single_signed() {
        let d = make_disk(1.0, 256).unwrap();
        let mesh = triangulate(&d, 0.06).unwrap();
        let r = solve_spectrum(&mesh, &EigOptions { k: 1, ..Default::default() }).unwrap();
        let trace = boundary_neumann_trace(&mesh, &r.vectors[0]).unwrap();
        // Ground state is positive inside, so dv/dn < 0 everywhere.
        for t in trace.iter().flatten() {
            assert!(t.dvdn < 0.0, "edge {} has dv/dn {}", t.edge, t.dvdn);
        }
        let verdict = classify_payne(&trace, 0.05);
        assert_eq!(verdict.class, PayneClass::Np);
        assert!(verdict.sign_changes.is_empty());
    }

    #[test]
    fn oracle_half_disk_inradius() {
        // Independent geometric check of the 0.5 constant used above: the
        // largest disk inside the upper half of the unit disk touches the
        // diameter and the arc, so its center sits at (0, r) with
        // 1 - r = r.
        let mut best = 0.0f64;
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let p = Point::new(-1.0 + 2.0 * i as f64 / n as f64, j as f64 / n as f64);
                if p.norm() > 1.0 {
                    continue;
                }
                let d = p.y.min(1.0 - p.norm());
                best = best.max(d);
            }
        }
        assert!((best - 0.5).abs() < 5e-3, "{best}");
        // And the dimensionless product for the disk's second eigenvalue.
        let lam2 = disk_spectrum(1.0, 2).unwrap().eigenvalues[1];
        let product = lam2.sqrt() * 0.5;
        assert!((product - 1.9158).abs() < 1e-3, "{product}");
    }
}
