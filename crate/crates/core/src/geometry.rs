//! Supported domains, their outward enlargement and P1 meshing.
//!
//! Meshes of an enlarged domain are produced as *extensions* of the mesh of
//! the original domain: the first `n` nodes and the first cells of the
//! enlarged mesh are bitwise identical to the ones returned by [`mesh`] for the
//! original domain. Restrictions of fields from the enlarged mesh back to the
//! original mesh are then exact at every node.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// The domain families handled by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { a: f64, b: f64, c: f64, d: f64 },
    Disk { center: Point, radius: f64 },
    ConvexPolygon { vertices: Vec<Point> },
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Interval { a, b } => {
                if !all_finite(&[*a, *b]) || a >= b {
                    return Err(Error::InvalidGeometry(format!("interval requires a < b, got ({a}, {b})")));
                }
            }
            DomainSpec::Rectangle { a, b, c, d } => {
                if !all_finite(&[*a, *b, *c, *d]) || a >= b || c >= d {
                    return Err(Error::InvalidGeometry(format!(
                        "rectangle requires a < b and c < d, got ({a}, {b}) x ({c}, {d})"
                    )));
                }
            }
            DomainSpec::Disk { center, radius } => {
                if !all_finite(&[center[0], center[1], *radius]) || *radius <= 0.0 {
                    return Err(Error::InvalidGeometry(format!("disk requires R > 0, got {radius}")));
                }
            }
            DomainSpec::ConvexPolygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return Err(Error::InvalidGeometry(format!("polygon needs at least 3 vertices, got {n}")));
                }
                if vertices.iter().any(|v| !all_finite(v)) {
                    return Err(Error::InvalidGeometry("non-finite polygon vertex".into()));
                }
                let scale = vertices
                    .iter()
                    .flat_map(|p| p.iter())
                    .fold(0.0_f64, |m, v| m.max(v.abs()))
                    .max(1.0);
                for i in 0..n {
                    let turn = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    if turn <= 1e-12 * scale * scale {
                        return Err(Error::InvalidGeometry(format!(
                            "polygon is not strictly convex and counterclockwise at vertex {}",
                            (i + 1) % n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Exact length (1D) or area (2D).
    pub fn measure(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { a, b, c, d } => (b - a) * (d - c),
            DomainSpec::Disk { radius, .. } => PI * radius * radius,
            DomainSpec::ConvexPolygon { vertices } => polygon_area(vertices),
        }
    }

    /// Radius of a ball contained in the domain. Exact except for polygons,
    /// where the distance from the centroid to the nearest edge is used.
    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => 0.5 * (b - a),
            DomainSpec::Rectangle { a, b, c, d } => 0.5 * (b - a).min(d - c),
            DomainSpec::Disk { radius, .. } => *radius,
            DomainSpec::ConvexPolygon { vertices } => {
                let c = polygon_centroid(vertices);
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                        cross(p, q, c) / dist(p, q)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Diagonal of the bounding box (length of the interval in 1D).
    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            DomainSpec::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            DomainSpec::Rectangle { a, b, c, d } => ([*a, *c], [*b, *d]),
            DomainSpec::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            DomainSpec::ConvexPolygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Default target element size: π/2000-equivalent resolution in 1D
    /// (length/2000) and 1/64 of the bounding-box diagonal in 2D.
    pub fn default_h(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => (b - a) / 2000.0,
            _ => self.bounding_diagonal() / 64.0,
        }
    }

    /// Closed-set membership test with absolute tolerance `tol`.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match self {
            DomainSpec::Interval { a, b } => p[0] >= a - tol && p[0] <= b + tol,
            DomainSpec::Rectangle { a, b, c, d } => {
                p[0] >= a - tol && p[0] <= b + tol && p[1] >= c - tol && p[1] <= d + tol
            }
            DomainSpec::Disk { center, radius } => dist(p, *center) <= radius + tol,
            DomainSpec::ConvexPolygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let (q, r) = (vertices[i], vertices[(i + 1) % n]);
                    cross(q, r, p) / dist(q, r) >= -tol
                })
            }
        }
    }
}

fn polygon_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn polygon_centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let area = polygon_area(vertices);
    let mut c = [0.0; 2];
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        let w = p[0] * q[1] - q[0] * p[1];
        c[0] += (p[0] + q[0]) * w;
        c[1] += (p[1] + q[1]) * w;
    }
    [c[0] / (6.0 * area), c[1] / (6.0 * area)]
}

/// Validates a domain and hands it back unchanged.
pub fn make_domain(spec: DomainSpec) -> Result<DomainSpec> {
    spec.validate()?;
    Ok(spec)
}

/// Outward enlargement by `tau`.
///
/// Intervals and disks are enlarged exactly in the metric sense. Rectangles
/// and polygons translate every edge outward by `tau`, which yields a superset
/// of the metric enlargement with sharp instead of rounded corners.
pub fn enlarge(spec: &DomainSpec, tau: f64) -> Result<DomainSpec> {
    spec.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidGeometry(format!("enlargement requires tau > 0, got {tau}")));
    }
    let out = match spec {
        DomainSpec::Interval { a, b } => DomainSpec::Interval { a: a - tau, b: b + tau },
        DomainSpec::Rectangle { a, b, c, d } => DomainSpec::Rectangle {
            a: a - tau,
            b: b + tau,
            c: c - tau,
            d: d + tau,
        },
        DomainSpec::Disk { center, radius } => DomainSpec::Disk { center: *center, radius: radius + tau },
        DomainSpec::ConvexPolygon { vertices } => DomainSpec::ConvexPolygon {
            vertices: offset_polygon(vertices, tau),
        },
    };
    out.validate()?;
    Ok(out)
}

/// Intersects the outward-translated edge lines of a CCW convex polygon.
fn offset_polygon(vertices: &[Point], tau: f64) -> Vec<Point> {
    let n = vertices.len();
    // Edge i runs from vertex i to vertex i+1; line: normal · x = offset.
    let lines: Vec<(Point, f64)> = (0..n)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            let len = dist(p, q);
            let normal = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
            (normal, normal[0] * p[0] + normal[1] * p[1] + tau)
        })
        .collect();
    (0..n)
        .map(|i| {
            let (n1, c1) = lines[(i + n - 1) % n];
            let (n2, c2) = lines[i];
            let det = n1[0] * n2[1] - n1[1] * n2[0];
            [(c1 * n2[1] - c2 * n1[1]) / det, (n1[0] * c2 - n2[0] * c1) / det]
        })
        .collect()
}

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Opaque identity used to match fields and operators to their mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshId(u64);

impl MeshId {
    fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(s) => s.len(),
            Cells::Triangles(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A conforming P1 mesh. In 1D node coordinates carry `y = 0`.
#[derive(Debug, Clone)]
pub struct Mesh {
    id: MeshId,
    nodes: Vec<Point>,
    cells: Cells,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    pub fn new(nodes: Vec<Point>, cells: Cells, boundary: Vec<bool>, h: f64) -> Result<Mesh> {
        if boundary.len() != nodes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} boundary flags for {} nodes",
                boundary.len(),
                nodes.len()
            )));
        }
        let mesh = Mesh { id: MeshId::fresh(), nodes, cells, boundary, h };
        let floor = 1e-14 * h.powi(mesh.dim() as i32);
        for (element, measure) in mesh.cell_measures().into_iter().enumerate() {
            if !(measure > floor) {
                return Err(Error::DegenerateElement { element, measure });
            }
        }
        if mesh.boundary.iter().all(|&b| b) {
            return Err(Error::MeshTooCoarse("mesh has no interior node".into()));
        }
        Ok(mesh)
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn dim(&self) -> usize {
        match self.cells {
            Cells::Segments(_) => 1,
            Cells::Triangles(_) => 2,
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn cells(&self) -> &Cells {
        &self.cells
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Signed cell measures (positive for correctly oriented cells).
    pub fn cell_measures(&self) -> Vec<f64> {
        match &self.cells {
            Cells::Segments(segs) => segs
                .iter()
                .map(|&[i, j]| self.nodes[j][0] - self.nodes[i][0])
                .collect(),
            Cells::Triangles(tris) => tris
                .iter()
                .map(|&[i, j, k]| 0.5 * cross(self.nodes[i], self.nodes[j], self.nodes[k]))
                .collect(),
        }
    }

    pub fn measure(&self) -> f64 {
        self.cell_measures().iter().sum()
    }

    pub fn max_cell_diameter(&self) -> f64 {
        let n = &self.nodes;
        match &self.cells {
            Cells::Segments(segs) => segs.iter().map(|&[i, j]| dist(n[i], n[j])).fold(0.0, f64::max),
            Cells::Triangles(tris) => tris
                .iter()
                .map(|&[i, j, k]| dist(n[i], n[j]).max(dist(n[j], n[k])).max(dist(n[k], n[i])))
                .fold(0.0, f64::max),
        }
    }

    /// Plain-text node/element listing for debugging.
    pub fn write_listing<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "nodes {}", self.nodes.len())?;
        for (p, b) in self.nodes.iter().zip(&self.boundary) {
            writeln!(out, "{:.17e} {:.17e} {}", p[0], p[1], u8::from(*b))?;
        }
        writeln!(out, "elements {}", self.cells.len())?;
        match &self.cells {
            Cells::Segments(segs) => {
                for s in segs {
                    writeln!(out, "{} {}", s[0], s[1])?;
                }
            }
            Cells::Triangles(tris) => {
                for t in tris {
                    writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
                }
            }
        }
        Ok(())
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::MeshTooCoarse(format!("target size h must be positive, got {h}")));
    }
    Ok(())
}

/// Meshes the domain with target element size `h`.
pub fn mesh(spec: &DomainSpec, h: f64) -> Result<Mesh> {
    spec.validate()?;
    check_h(h)?;
    build(spec, h, None)
}

/// Enlarges the domain by `tau` and meshes it as an extension of
/// `mesh(spec, h)`: the inner nodes and cells come first, unchanged.
pub fn mesh_enlarged(spec: &DomainSpec, tau: f64, h: f64) -> Result<(DomainSpec, Mesh)> {
    let outer = enlarge(spec, tau)?;
    check_h(h)?;
    let m = build(spec, h, Some((tau, &outer)))?;
    Ok((outer, m))
}

fn build(spec: &DomainSpec, h: f64, ext: Option<(f64, &DomainSpec)>) -> Result<Mesh> {
    match spec {
        DomainSpec::Interval { a, b } => build_interval(*a, *b, h, ext.map(|e| e.0)),
        DomainSpec::Rectangle { a, b, c, d } => build_rectangle([*a, *b, *c, *d], h, ext.map(|e| e.0)),
        DomainSpec::Disk { center, radius } => build_disk(*center, *radius, h, ext.map(|e| e.0)),
        DomainSpec::ConvexPolygon { vertices } => {
            let outer = match ext {
                Some((_, DomainSpec::ConvexPolygon { vertices })) => Some(vertices.as_slice()),
                Some(_) => unreachable!("enlargement keeps the domain kind"),
                None => None,
            };
            build_polygon(vertices, h, ext.map(|e| e.0), outer)
        }
    }
}

fn cell_count(length: f64, h: f64) -> usize {
    // Guard against 1999.9999 style round-off turning into an extra cell.
    ((length / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * (i as f64) / (n as f64)).collect();
    xs[n] = hi;
    xs
}

fn padding(tau: f64, h: f64) -> Vec<f64> {
    let m = cell_count(tau, h);
    let mut pads: Vec<f64> = (1..=m).map(|j| tau * (j as f64) / (m as f64)).collect();
    pads[m - 1] = tau;
    pads
}

fn build_interval(a: f64, b: f64, h: f64, tau: Option<f64>) -> Result<Mesh> {
    let n = ((b - a) / h).round().max(1.0) as usize;
    if n < 2 {
        return Err(Error::MeshTooCoarse(format!("h = {h} leaves no interior node on ({a}, {b})")));
    }
    let xs = uniform(a, b, n);
    let mut nodes: Vec<Point> = xs.iter().map(|&x| [x, 0.0]).collect();
    let mut segs: Vec<[usize; 2]> = (0..n).map(|i| [i, i + 1]).collect();
    let mut boundary = vec![false; n + 1];
    match tau {
        None => {
            boundary[0] = true;
            boundary[n] = true;
        }
        Some(tau) => {
            let pads = padding(tau, h);
            let m = pads.len();
            let mut prev = 0;
            for (j, d) in pads.iter().enumerate() {
                let idx = nodes.len();
                nodes.push([if j + 1 == m { a - tau } else { a - d }, 0.0]);
                boundary.push(j + 1 == m);
                segs.push([idx, prev]);
                prev = idx;
            }
            let mut prev = n;
            for (j, d) in pads.iter().enumerate() {
                let idx = nodes.len();
                nodes.push([if j + 1 == m { b + tau } else { b + d }, 0.0]);
                boundary.push(j + 1 == m);
                segs.push([prev, idx]);
                prev = idx;
            }
        }
    }
    Mesh::new(nodes, Cells::Segments(segs), boundary, h)
}

fn build_rectangle(r: [f64; 4], h: f64, tau: Option<f64>) -> Result<Mesh> {
    let [a, b, c, d] = r;
    let nx = cell_count(b - a, h);
    let ny = cell_count(d - c, h);
    let xs_in = uniform(a, b, nx);
    let ys_in = uniform(c, d, ny);
    let pads = tau.map(|t| padding(t, h)).unwrap_or_default();
    let p = pads.len();
    let extend = |inner: &[f64], lo: f64, hi: f64| -> Vec<f64> {
        let mut v: Vec<f64> = pads.iter().rev().map(|d| lo - d).collect();
        v.extend_from_slice(inner);
        v.extend(pads.iter().map(|d| hi + d));
        v
    };
    let xs = extend(&xs_in, a, b);
    let ys = extend(&ys_in, c, d);
    let (nxe, nye) = (xs.len(), ys.len());
    let inner = |i: usize, j: usize| i >= p && i <= p + nx && j >= p && j <= p + ny;

    let mut index = vec![usize::MAX; nxe * nye];
    let mut nodes = Vec::with_capacity(nxe * nye);
    for pass in [true, false] {
        for j in 0..nye {
            for i in 0..nxe {
                if inner(i, j) == pass {
                    index[j * nxe + i] = nodes.len();
                    nodes.push([xs[i], ys[j]]);
                }
            }
        }
    }
    let mut boundary = vec![false; nodes.len()];
    for j in 0..nye {
        for i in 0..nxe {
            if i == 0 || j == 0 || i + 1 == nxe || j + 1 == nye {
                boundary[index[j * nxe + i]] = true;
            }
        }
    }
    let mut tris = Vec::with_capacity(2 * (nxe - 1) * (nye - 1));
    for pass in [true, false] {
        for j in 0..nye - 1 {
            for i in 0..nxe - 1 {
                let cell_inner = inner(i, j) && inner(i + 1, j + 1);
                if cell_inner != pass {
                    continue;
                }
                let v00 = index[j * nxe + i];
                let v10 = index[j * nxe + i + 1];
                let v01 = index[(j + 1) * nxe + i];
                let v11 = index[(j + 1) * nxe + i + 1];
                tris.push([v00, v10, v11]);
                tris.push([v00, v11, v01]);
            }
        }
    }
    Mesh::new(nodes, Cells::Triangles(tris), boundary, h)
}

/// Closed loop of nodes with a periodic parameter in `[0, 1)`, increasing
/// counterclockwise; consecutive loops are stitched by merging parameters.
struct Loop {
    points: Vec<Point>,
    params: Vec<f64>,
}

fn loop_mesh(center: Point, loops: Vec<Loop>, h: f64) -> Result<Mesh> {
    let mut nodes = vec![center];
    let mut starts = Vec::with_capacity(loops.len());
    for l in &loops {
        starts.push(nodes.len());
        nodes.extend_from_slice(&l.points);
    }
    let mut boundary = vec![false; nodes.len()];
    let last = loops.len() - 1;
    for b in boundary.iter_mut().skip(starts[last]) {
        *b = true;
    }
    let mut tris = Vec::new();
    let n0 = loops[0].points.len();
    for q in 0..n0 {
        tris.push([0, starts[0] + q, starts[0] + (q + 1) % n0]);
    }
    for k in 1..loops.len() {
        stitch(starts[k - 1], &loops[k - 1], starts[k], &loops[k], &mut tris);
    }
    Mesh::new(nodes, Cells::Triangles(tris), boundary, h)
}

fn stitch(a0: usize, a: &Loop, b0: usize, b: &Loop, tris: &mut Vec<[usize; 3]>) {
    let (na, nb) = (a.points.len(), b.points.len());
    let next = |l: &Loop, i: usize| if i + 1 < l.params.len() { l.params[i + 1] } else { 1.0 + l.params[0] };
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let sa = if i < na { next(a, i) } else { f64::INFINITY };
        let sb = if j < nb { next(b, j) } else { f64::INFINITY };
        let (ai, bj) = (a0 + i % na, b0 + j % nb);
        if sa <= sb {
            tris.push([ai, bj, a0 + (i + 1) % na]);
            i += 1;
        } else {
            tris.push([ai, bj, b0 + (j + 1) % nb]);
            j += 1;
        }
    }
}

fn ring(center: Point, radius: f64, count: usize) -> Loop {
    let params: Vec<f64> = (0..count).map(|q| q as f64 / count as f64).collect();
    let points = params
        .iter()
        .map(|s| {
            let th = 2.0 * PI * s;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect();
    Loop { points, params }
}

fn build_disk(center: Point, radius: f64, h: f64, tau: Option<f64>) -> Result<Mesh> {
    let nr = cell_count(radius, h);
    let mut loops: Vec<Loop> = (1..=nr)
        .map(|k| {
            let r = if k == nr { radius } else { radius * k as f64 / nr as f64 };
            ring(center, r, 6 * k)
        })
        .collect();
    if let Some(tau) = tau {
        for (j, d) in padding(tau, radius / nr as f64).into_iter().enumerate() {
            loops.push(ring(center, radius + d, 6 * (nr + j + 1)));
        }
    }
    if nr < 2 && tau.is_none() {
        return Err(Error::MeshTooCoarse(format!("h = {h} too coarse for disk of radius {radius}")));
    }
    loop_mesh(center, loops, h)
}

fn polygon_loop(vertices: &[Point], h: f64) -> Loop {
    let n = vertices.len();
    let mut points = Vec::new();
    let mut params = Vec::new();
    for e in 0..n {
        let (p, q) = (vertices[e], vertices[(e + 1) % n]);
        let sub = cell_count(dist(p, q), h);
        for s in 0..sub {
            let f = s as f64 / sub as f64;
            points.push(if s == 0 { p } else { [p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])] });
            params.push((e as f64 + f) / n as f64);
        }
    }
    Loop { points, params }
}

fn build_polygon(vertices: &[Point], h: f64, tau: Option<f64>, outer: Option<&[Point]>) -> Result<Mesh> {
    let c = polygon_centroid(vertices);
    let reach = vertices.iter().map(|&v| dist(c, v)).fold(0.0, f64::max);
    let nr = cell_count(reach, h);
    if nr < 2 && tau.is_none() {
        return Err(Error::MeshTooCoarse(format!("h = {h} too coarse for polygon")));
    }
    let mut loops: Vec<Loop> = (1..=nr)
        .map(|k| {
            let f = k as f64 / nr as f64;
            let layer: Vec<Point> = if k == nr {
                vertices.to_vec()
            } else {
                vertices.iter().map(|v| [c[0] + f * (v[0] - c[0]), c[1] + f * (v[1] - c[1])]).collect()
            };
            polygon_loop(&layer, h)
        })
        .collect();
    if let (Some(tau), Some(outer)) = (tau, outer) {
        let m = cell_count(tau, h);
        for j in 1..=m {
            let f = j as f64 / m as f64;
            let layer: Vec<Point> = if j == m {
                outer.to_vec()
            } else {
                vertices
                    .iter()
                    .zip(outer)
                    .map(|(v, w)| [v[0] + f * (w[0] - v[0]), v[1] + f * (w[1] - v[1])])
                    .collect()
            };
            loops.push(polygon_loop(&layer, h));
        }
    }
    loop_mesh(c, loops, h)
}
