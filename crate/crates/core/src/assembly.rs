//! P1 stiffness and mass matrices, the H¹₀ seminorm and mesh-to-mesh
//! interpolation.

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::geometry::{Cells, Mesh, MeshId, Point};

/// Nodal values of a P1 function on a particular mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: MeshId,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Field> {
        if values.len() != mesh.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        Ok(Field { mesh: mesh.id(), values })
    }

    pub fn zeros(mesh: &Mesh) -> Field {
        Field { mesh: mesh.id(), values: vec![0.0; mesh.node_count()] }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Field {
        Field { mesh: mesh.id(), values: mesh.nodes().iter().map(|&p| f(p)).collect() }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field { mesh: self.mesh, values: self.values.iter().map(|v| factor * v).collect() }
    }

    /// Nodewise combination of two fields on the same mesh.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.mesh != other.mesh {
            return Err(Error::DimensionMismatch("fields live on different meshes".into()));
        }
        Ok(Field {
            mesh: self.mesh,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Stiffness and mass matrices of one mesh, plus the data the weak-form
/// checks need: lumped (row-summed) masses and the interior node list.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    mesh: MeshId,
    stiffness: CsrMatrix<f64>,
    mass: CsrMatrix<f64>,
    lumped: Vec<f64>,
    interior: Vec<usize>,
}

impl OperatorPair {
    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix<f64> {
        &self.mass
    }

    /// Row sums of the mass matrix, `(Mm·1)_i`.
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn check(&self, field: &Field) -> Result<()> {
        if field.mesh != self.mesh || field.len() != self.lumped.len() {
            return Err(Error::DimensionMismatch("field and operators belong to different meshes".into()));
        }
        Ok(())
    }

    pub fn apply_stiffness(&self, field: &Field) -> Result<Vec<f64>> {
        self.check(field)?;
        Ok(apply(&self.stiffness, field.values()))
    }

    pub fn apply_mass(&self, field: &Field) -> Result<Vec<f64>> {
        self.check(field)?;
        Ok(apply(&self.mass, field.values()))
    }

    /// `min_i (v)_i / (Mm·1)_i` over interior rows.
    pub fn min_interior_density(&self, v: &[f64]) -> f64 {
        self.interior
            .iter()
            .map(|&i| v[i] / self.lumped[i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sparse matrix-vector product.
pub fn apply(matrix: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    matrix
        .row_iter()
        .map(|row| row.col_indices().iter().zip(row.values()).map(|(&j, &a)| a * x[j]).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assembles ∫∇u·∇v and ∫uv over the nodal hat basis with exact P1 element
/// integrals.
pub fn assemble(mesh: &Mesh) -> OperatorPair {
    let n = mesh.node_count();
    let nodes = mesh.nodes();
    let mut k = CooMatrix::new(n, n);
    let mut m = CooMatrix::new(n, n);
    match mesh.cells() {
        Cells::Segments(segs) => {
            for &[i, j] in segs {
                let len = nodes[j][0] - nodes[i][0];
                let (kd, md, mo) = (1.0 / len, len / 3.0, len / 6.0);
                for (a, b, kv, mv) in [(i, i, kd, md), (i, j, -kd, mo), (j, i, -kd, mo), (j, j, kd, md)] {
                    k.push(a, b, kv);
                    m.push(a, b, mv);
                }
            }
        }
        Cells::Triangles(tris) => {
            for tri in tris {
                let p = tri.map(|v| nodes[v]);
                let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
                let grad: [[f64; 2]; 3] = std::array::from_fn(|a| {
                    let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                    [(p[b][1] - p[c][1]) / (2.0 * area), (p[c][0] - p[b][0]) / (2.0 * area)]
                });
                for a in 0..3 {
                    for b in 0..3 {
                        let kv = area * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                        let mv = if a == b { area / 6.0 } else { area / 12.0 };
                        k.push(tri[a], tri[b], kv);
                        m.push(tri[a], tri[b], mv);
                    }
                }
            }
        }
    }
    let stiffness = CsrMatrix::from(&k);
    let mass = CsrMatrix::from(&m);
    let lumped = mass.row_iter().map(|r| r.values().iter().sum()).collect();
    OperatorPair { mesh: mesh.id(), stiffness, mass, lumped, interior: mesh.interior_nodes() }
}

/// Squared H¹₀ seminorm `vᵀKv`, summed as `Σ_{i<j} −K_ij (v_i − v_j)²`
/// (K has zero row sums), which avoids the cancellation in `Kv`.
pub fn h1_norm_sq(field: &Field, ops: &OperatorPair) -> Result<f64> {
    ops.check(field)?;
    let v = field.values();
    let mut sum = 0.0;
    for (i, row) in ops.stiffness.row_iter().enumerate() {
        for (&j, &k) in row.col_indices().iter().zip(row.values()) {
            if j > i {
                let d = v[i] - v[j];
                sum -= k * d * d;
            }
        }
    }
    Ok(sum)
}

/// Piecewise-linear interpolation of `field` (living on `source`) at every
/// node of `target`.
pub fn restrict(field: &Field, source: &Mesh, target: &Mesh) -> Result<Field> {
    if field.mesh_id() != source.id() {
        return Err(Error::DimensionMismatch("field does not live on the source mesh".into()));
    }
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch("source and target meshes differ in dimension".into()));
    }
    let locator = Locator::new(source);
    let v = field.values();
    let values = target
        .nodes()
        .iter()
        .map(|&p| {
            let (verts, weights) = locator.locate(p).ok_or(Error::PointLocationFailure { x: p[0], y: p[1] })?;
            Ok(verts.iter().zip(weights).take(source.dim() + 1).map(|(&i, w)| w * v[i]).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Field::new(target, values)
}

const LOCATE_TOL: f64 = 1e-10;

enum Locator<'a> {
    Line { segs: Vec<(f64, f64, usize, usize)> },
    Plane { mesh: &'a Mesh, tris: &'a [[usize; 3]], origin: Point, cell: f64, dims: [usize; 2], buckets: Vec<Vec<usize>> },
}

impl<'a> Locator<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let nodes = mesh.nodes();
        match mesh.cells() {
            Cells::Segments(s) => {
                let mut segs: Vec<_> = s.iter().map(|&[i, j]| (nodes[i][0], nodes[j][0], i, j)).collect();
                segs.sort_by(|a, b| a.0.total_cmp(&b.0));
                Locator::Line { segs }
            }
            Cells::Triangles(tris) => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in nodes {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                let side = ((tris.len() as f64).sqrt().ceil() as usize).max(1);
                let cell = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE);
                let dims = [
                    ((hi[0] - lo[0]) / cell) as usize + 1,
                    ((hi[1] - lo[1]) / cell) as usize + 1,
                ];
                let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
                let bucket = |x: f64, k: usize| (((x - lo[k]) / cell).floor().max(0.0) as usize).min(dims[k] - 1);
                for (t, tri) in tris.iter().enumerate() {
                    let xs = tri.map(|v| nodes[v][0]);
                    let ys = tri.map(|v| nodes[v][1]);
                    let bx0 = bucket(xs.iter().copied().fold(f64::INFINITY, f64::min) - LOCATE_TOL, 0);
                    let bx1 = bucket(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + LOCATE_TOL, 0);
                    let by0 = bucket(ys.iter().copied().fold(f64::INFINITY, f64::min) - LOCATE_TOL, 1);
                    let by1 = bucket(ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) + LOCATE_TOL, 1);
                    for by in by0..=by1 {
                        for bx in bx0..=bx1 {
                            buckets[by * dims[0] + bx].push(t);
                        }
                    }
                }
                Locator::Plane { mesh, tris, origin: lo, cell, dims, buckets }
            }
        }
    }

    /// Cell vertices and barycentric weights of the cell containing `p`.
    fn locate(&self, p: Point) -> Option<([usize; 3], [f64; 3])> {
        match self {
            Locator::Line { segs } => {
                let x = p[0];
                let pos = segs.partition_point(|s| s.0 <= x);
                let candidates = [pos.saturating_sub(1), pos];
                for &c in &candidates {
                    if let Some(&(xl, xr, i, j)) = segs.get(c) {
                        let scale = (xr - xl).abs();
                        if x >= xl - LOCATE_TOL * scale.max(1.0) && x <= xr + LOCATE_TOL * scale.max(1.0) {
                            let t = ((x - xl) / (xr - xl)).clamp(0.0, 1.0);
                            return Some(([i, j, j], [1.0 - t, t, 0.0]));
                        }
                    }
                }
                None
            }
            Locator::Plane { mesh, tris, origin, cell, dims, buckets } => {
                let bx = (p[0] - origin[0]) / cell;
                let by = (p[1] - origin[1]) / cell;
                if bx < -1.0 || by < -1.0 {
                    return None;
                }
                let bx = (bx.floor().max(0.0) as usize).min(dims[0] - 1);
                let by = (by.floor().max(0.0) as usize).min(dims[1] - 1);
                let nodes = mesh.nodes();
                let mut best: Option<([usize; 3], [f64; 3], f64)> = None;
                for &t in &buckets[by * dims[0] + bx] {
                    let tri = tris[t];
                    let [a, b, c] = tri.map(|v| nodes[v]);
                    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
                    let l0 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
                    let l1 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
                    let l2 = 1.0 - l0 - l1;
                    let worst = l0.min(l1).min(l2);
                    if worst >= 0.0 {
                        return Some((tri, [l0, l1, l2]));
                    }
                    if worst >= -LOCATE_TOL && best.as_ref().is_none_or(|b| worst > b.2) {
                        best = Some((tri, [l0, l1, l2], worst));
                    }
                }
                best.map(|(tri, w, _)| {
                    let w = w.map(|x| x.max(0.0));
                    let s: f64 = w.iter().sum();
                    (tri, w.map(|x| x / s))
                })
            }
        }
    }
}
