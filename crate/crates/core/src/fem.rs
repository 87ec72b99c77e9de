//! Uniform conforming meshes and Galerkin assembly.
//!
//! Rectangles are meshed by splitting each grid cell into two right triangles
//! along the (lower-left, upper-right) diagonal; intervals use a uniform
//! partition. Dirichlet conditions are built in: boundary vertices carry no
//! degree of freedom. Two matrices are assembled over the interior DOFs: the
//! stiffness matrix of the gradient form and the mass matrix of the measure
//! inner product. Both are exact for piecewise-linear arguments.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{Domain, Point, Rect};
use crate::measure::{Measure, MeasureComponent};
use crate::quad::GaussRule;

/// Symmetric sparse matrix in CSR form with deterministic entry order.
#[derive(Clone, Debug)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulator for symmetric assembly; entries merge in index order so the
/// result is identical regardless of insertion order.
pub struct SparseBuilder {
    n: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder { n, rows: vec![BTreeMap::new(); n] }
    }

    /// Add `v` at `(i, j)` and, for `i != j`, at `(j, i)`.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        *self.rows[i].entry(j).or_insert(0.0) += v;
        if i != j {
            *self.rows[j].entry(i).or_insert(0.0) += v;
        }
    }

    pub fn finish(self) -> SparseSymMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &self.rows {
            for (&j, &v) in row {
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSymMatrix { n: self.n, row_ptr, col_idx, vals }
    }
}

impl SparseSymMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `u^T A v`.
    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.vals[k] * v[self.col_idx[k]];
            }
            acc += u[i] * row;
        }
        acc
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.vals[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                bw = bw.max(self.col_idx[k].abs_diff(i));
            }
        }
        bw
    }

    /// Upper-triangle entries (including the diagonal) as coordinate triplets.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j >= i {
                    out.push((i, j, self.vals[k]));
                }
            }
        }
        out
    }

    pub fn write_triplets<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row col value")?;
        for (i, j, v) in self.to_triplets() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.vals[k];
            }
        }
        m
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[usize], &[f64])> {
        (0..self.n).map(move |i| {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            (i, &self.col_idx[lo..hi], &self.vals[lo..hi])
        })
    }
}

/// Uniform conforming mesh of an interval or a rectangle.
#[derive(Clone, Debug)]
pub struct Mesh {
    domain: Domain,
    nx: usize,
    /// Zero for interval meshes.
    ny: usize,
    hx: f64,
    hy: f64,
    verts: Vec<Point>,
    boundary: Vec<bool>,
    dof_of_vert: Vec<Option<usize>>,
    vert_of_dof: Vec<usize>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
}

/// Build a mesh and check that the measure geometry aligns with it.
///
/// Segment coordinates, atom positions and area-rectangle corners must lie on
/// mesh lines within `1e-9 * diameter`; misalignment is an error that suggests
/// a compatible resolution instead of moving geometry silently.
pub fn build_mesh(domain: Domain, nx: usize, ny: usize, measure: &Measure) -> Result<Mesh> {
    let mesh = build_mesh_unchecked(domain, nx, ny)?;
    mesh.snap_measure(measure)?;
    Ok(mesh)
}

/// Build a mesh without measure-alignment checks.
pub fn build_mesh_unchecked(domain: Domain, nx: usize, ny: usize) -> Result<Mesh> {
    match domain {
        Domain::Interval { a, b } => {
            if nx < 2 {
                return Err(Error::InvalidArgument(
                    "interval resolution must be at least 2".into(),
                ));
            }
            let h = (b - a) / nx as f64;
            let verts: Vec<Point> =
                (0..=nx).map(|i| Point::new(a + i as f64 * h, 0.0)).collect();
            let boundary: Vec<bool> = (0..=nx).map(|i| i == 0 || i == nx).collect();
            let (dof_of_vert, vert_of_dof) = number_dofs(&boundary);
            let edges = (0..nx).map(|i| [i, i + 1]).collect();
            Ok(Mesh {
                domain,
                nx,
                ny: 0,
                hx: h,
                hy: 0.0,
                verts,
                boundary,
                dof_of_vert,
                vert_of_dof,
                triangles: Vec::new(),
                edges,
            })
        }
        Domain::Rect(r) => {
            if nx < 2 || ny < 2 {
                return Err(Error::InvalidArgument(
                    "rectangle resolution must be at least 2 per axis".into(),
                ));
            }
            let hx = r.width() / nx as f64;
            let hy = r.height() / ny as f64;
            let stride = nx + 1;
            let mut verts = Vec::with_capacity((nx + 1) * (ny + 1));
            let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
            for j in 0..=ny {
                for i in 0..=nx {
                    verts.push(Point::new(r.x0 + i as f64 * hx, r.y0 + j as f64 * hy));
                    boundary.push(i == 0 || i == nx || j == 0 || j == ny);
                }
            }
            let (dof_of_vert, vert_of_dof) = number_dofs(&boundary);
            let mut triangles = Vec::with_capacity(2 * nx * ny);
            let mut edges = Vec::with_capacity(3 * nx * ny + nx + ny);
            for j in 0..=ny {
                for i in 0..=nx {
                    let v = i + stride * j;
                    if i < nx {
                        edges.push([v, v + 1]);
                    }
                    if j < ny {
                        edges.push([v, v + stride]);
                    }
                    if i < nx && j < ny {
                        edges.push([v, v + stride + 1]);
                        // Cell split along the (lower-left, upper-right) diagonal.
                        triangles.push([v, v + 1, v + stride + 1]);
                        triangles.push([v, v + stride + 1, v + stride]);
                    }
                }
            }
            Ok(Mesh {
                domain,
                nx,
                ny,
                hx,
                hy,
                verts,
                boundary,
                dof_of_vert,
                vert_of_dof,
                triangles,
                edges,
            })
        }
    }
}

fn number_dofs(boundary: &[bool]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut dof_of_vert = vec![None; boundary.len()];
    let mut vert_of_dof = Vec::new();
    for (v, &b) in boundary.iter().enumerate() {
        if !b {
            dof_of_vert[v] = Some(vert_of_dof.len());
            vert_of_dof.push(v);
        }
    }
    (dof_of_vert, vert_of_dof)
}

impl Mesh {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn n_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.vert_of_dof.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.verts[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.dof_of_vert[v]
    }

    pub fn vertex_of_dof(&self, d: usize) -> usize {
        self.vert_of_dof[d]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Unique vertex-graph edges (in 2D including cell diagonals).
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    fn snap_tol(&self) -> f64 {
        1e-9 * self.domain.diameter()
    }

    /// Snap one coordinate onto the mesh lines of an axis.
    fn snap_coord(&self, c: f64, axis: usize) -> Option<f64> {
        let (lo, h, n) = match (self.domain, axis) {
            (Domain::Interval { a, .. }, _) => (a, self.hx, self.nx),
            (Domain::Rect(r), 0) => (r.x0, self.hx, self.nx),
            (Domain::Rect(r), _) => (r.y0, self.hy, self.ny),
        };
        let k = ((c - lo) / h).round();
        if k < 0.0 || k > n as f64 {
            return None;
        }
        let snapped = lo + k * h;
        if (snapped - c).abs() <= self.snap_tol() {
            Some(snapped)
        } else {
            None
        }
    }

    fn snap_point(&self, p: Point) -> Option<Point> {
        match self.domain {
            Domain::Interval { .. } => self.snap_coord(p.x, 0).map(|x| Point::new(x, 0.0)),
            Domain::Rect(_) => match (self.snap_coord(p.x, 0), self.snap_coord(p.y, 1)) {
                (Some(x), Some(y)) => Some(Point::new(x, y)),
                _ => None,
            },
        }
    }

    /// Return a copy of the measure with segment/atom/area coordinates snapped
    /// onto mesh lines, or an error naming the offending coordinate and a
    /// compatible resolution.
    pub fn snap_measure(&self, measure: &Measure) -> Result<Measure> {
        let mut comps = Vec::with_capacity(measure.components().len());
        for (idx, c) in measure.components().iter().enumerate() {
            let snapped = match c {
                MeasureComponent::Area { rect, weight } => {
                    let a = self
                        .snap_point(Point::new(rect.x0, rect.y0))
                        .ok_or_else(|| self.snap_error(idx, Point::new(rect.x0, rect.y0)))?;
                    let b = self
                        .snap_point(Point::new(rect.x1, if self.dim() == 1 { 0.0 } else { rect.y1 }))
                        .ok_or_else(|| self.snap_error(idx, Point::new(rect.x1, rect.y1)))?;
                    MeasureComponent::Area {
                        rect: Rect::new(a.x, b.x, a.y, b.y),
                        weight: *weight,
                    }
                }
                MeasureComponent::Segment { a, b, weight } => MeasureComponent::Segment {
                    a: self.snap_point(*a).ok_or_else(|| self.snap_error(idx, *a))?,
                    b: self.snap_point(*b).ok_or_else(|| self.snap_error(idx, *b))?,
                    weight: *weight,
                },
                MeasureComponent::Atom { point, weight } => MeasureComponent::Atom {
                    point: self.snap_point(*point).ok_or_else(|| self.snap_error(idx, *point))?,
                    weight: *weight,
                },
                // IFS components are already atomized; their atoms may sit
                // anywhere inside the domain.
                other => other.clone(),
            };
            comps.push(snapped);
        }
        Measure::new(measure.domain(), comps)
    }

    fn snap_error(&self, component: usize, p: Point) -> Error {
        let suggestion = self.suggest_resolution(p);
        let hint = match suggestion {
            Some((nx, ny)) if self.dim() == 2 => {
                format!("; resolution {nx} x {ny} would align")
            }
            Some((nx, _)) => format!("; resolution {nx} would align"),
            None => "; no uniform resolution up to 8192 aligns".into(),
        };
        Error::Snap(format!(
            "component {component}: coordinate ({}, {}) is not on a mesh line of the \
             {} x {} mesh{hint}",
            p.x, p.y, self.nx, self.ny
        ))
    }

    fn suggest_resolution(&self, p: Point) -> Option<(usize, usize)> {
        let fit = |lo: f64, hi: f64, c: f64| -> Option<usize> {
            let frac = (c - lo) / (hi - lo);
            (2..=8192usize).find(|&n| {
                let k = (frac * n as f64).round();
                (frac * n as f64 - k).abs() * (hi - lo) / n as f64 <= 1e-9 * (hi - lo)
            })
        };
        match self.domain {
            Domain::Interval { a, b } => fit(a, b, p.x).map(|n| (n, 0)),
            Domain::Rect(r) => {
                let nx = fit(r.x0, r.x1, p.x)?;
                let ny = fit(r.y0, r.y1, p.y)?;
                Some((nx.max(self.nx.min(8192)), ny.max(self.ny.min(8192))))
            }
        }
    }

    /// Vertices and nodal weights of the triangle (or interval cell)
    /// containing `p`; points on shared edges get consistent values from
    /// either side.
    pub fn eval_basis(&self, p: Point) -> Result<(Vec<usize>, Vec<f64>)> {
        let tol = 1e-12 * self.domain.diameter().max(1.0);
        if !self.domain.contains_closed(p, tol) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        match self.domain {
            Domain::Interval { a, .. } => {
                let t = (p.x - a) / self.hx;
                let i = (t.floor() as usize).min(self.nx - 1);
                let u = (t - i as f64).clamp(0.0, 1.0);
                Ok((vec![i, i + 1], vec![1.0 - u, u]))
            }
            Domain::Rect(r) => {
                let tx = (p.x - r.x0) / self.hx;
                let ty = (p.y - r.y0) / self.hy;
                let i = (tx.floor() as usize).min(self.nx - 1);
                let j = (ty.floor() as usize).min(self.ny - 1);
                let u = (tx - i as f64).clamp(0.0, 1.0);
                let v = (ty - j as f64).clamp(0.0, 1.0);
                let stride = self.nx + 1;
                let a = i + stride * j;
                if u >= v {
                    // Lower triangle (a, a+1, a+stride+1).
                    Ok((
                        vec![a, a + 1, a + stride + 1],
                        vec![1.0 - u, u - v, v],
                    ))
                } else {
                    // Upper triangle (a, a+stride+1, a+stride).
                    Ok((
                        vec![a, a + stride + 1, a + stride],
                        vec![1.0 - v, u, v - u],
                    ))
                }
            }
        }
    }

    /// P1 interpolation of an interior-DOF vector at `p`; zero on the
    /// boundary.
    pub fn evaluate(&self, dof_vec: &[f64], p: Point) -> Result<f64> {
        debug_assert_eq!(dof_vec.len(), self.n_dofs());
        let (verts, w) = self.eval_basis(p)?;
        Ok(verts
            .iter()
            .zip(&w)
            .map(|(&v, &wv)| match self.dof_of_vert[v] {
                Some(d) => wv * dof_vec[d],
                None => 0.0,
            })
            .sum())
    }

    /// Expand an interior-DOF vector to all vertices (zero on the boundary).
    pub fn vertex_values(&self, dof_vec: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices()];
        for (d, &v) in self.vert_of_dof.iter().enumerate() {
            out[v] = dof_vec[d];
        }
        out
    }
}

/// Assemble the stiffness matrix of the gradient bilinear form on interior
/// DOFs; exact for piecewise-linear arguments.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseSymMatrix {
    let mut b = SparseBuilder::new(mesh.n_dofs());
    match mesh.domain {
        Domain::Interval { .. } => {
            let h = mesh.hx;
            for e in 0..mesh.nx {
                let k_local = [1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h];
                scatter_local(&mut b, mesh, &[e, e + 1], &k_local);
            }
        }
        Domain::Rect(_) => {
            for tri in &mesh.triangles {
                let p = [mesh.verts[tri[0]], mesh.verts[tri[1]], mesh.verts[tri[2]]];
                let k_local = triangle_stiffness(p);
                scatter_local(&mut b, mesh, tri, &k_local);
            }
        }
    }
    b.finish()
}

/// Add a dense symmetric local matrix (row-major, `verts.len()^2` entries)
/// into the global builder, masked to interior DOFs.
fn scatter_local(b: &mut SparseBuilder, mesh: &Mesh, verts: &[usize], k: &[f64]) {
    let n = verts.len();
    debug_assert_eq!(k.len(), n * n);
    for (li, &vi) in verts.iter().enumerate() {
        let Some(di) = mesh.dof_of_vert[vi] else { continue };
        for (lj, &vj) in verts.iter().enumerate() {
            let Some(dj) = mesh.dof_of_vert[vj] else { continue };
            if dj >= di {
                b.add_sym(di, dj, k[li * n + lj]);
            }
        }
    }
}

fn triangle_stiffness(p: [Point; 3]) -> [f64; 9] {
    let b = [p[1].y - p[2].y, p[2].y - p[0].y, p[0].y - p[1].y];
    let c = [p[2].x - p[1].x, p[0].x - p[2].x, p[1].x - p[0].x];
    let area2 = b[0] * c[1] - b[1] * c[0]; // 2 * area (signed)
    let area = 0.5 * area2.abs();
    let mut k = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            k[i * 3 + j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    k
}

/// Assemble the measure mass matrix `M[i][j] = integral of phi_i phi_j dmu`
/// on interior DOFs; exact for piecewise-linear arguments.
///
/// Areas use the analytic P1 element mass, segments a per-cell 2-point Gauss
/// rule along the (snapped) line, atoms a rank-1 nodal contribution. IFS
/// components contribute through their atomization.
pub fn assemble_measure_mass(mesh: &Mesh, measure: &Measure) -> Result<SparseSymMatrix> {
    let snapped = mesh.snap_measure(measure)?;
    let mut b = SparseBuilder::new(mesh.n_dofs());
    for c in snapped.components() {
        match c {
            MeasureComponent::Area { rect, weight } => {
                assemble_area(&mut b, mesh, rect, *weight)
            }
            MeasureComponent::Segment { a, b: bp, weight } => {
                assemble_segment(&mut b, mesh, *a, *bp, *weight)?
            }
            MeasureComponent::Atom { point, weight } => {
                add_point_mass(&mut b, mesh, *point, *weight)?
            }
            MeasureComponent::Ifs { maps, probs, depth, weight } => {
                for (p, w) in crate::measure::atomize(maps, probs, *depth, *weight) {
                    add_point_mass(&mut b, mesh, p, w)?;
                }
            }
        }
    }
    Ok(b.finish())
}

fn assemble_area(b: &mut SparseBuilder, mesh: &Mesh, rect: &Rect, weight: f64) {
    match mesh.domain {
        Domain::Interval { a, .. } => {
            let h = mesh.hx;
            for e in 0..mesh.nx {
                let lo = a + e as f64 * h;
                let hi = lo + h;
                if lo < rect.x0 - 1e-12 || hi > rect.x1 + 1e-12 {
                    continue;
                }
                let m = weight * h / 6.0;
                let local = [2.0 * m, m, m, 2.0 * m];
                scatter_local(b, mesh, &[e, e + 1], &local);
            }
        }
        Domain::Rect(_) => {
            let tol = 1e-12 * mesh.domain.diameter();
            for tri in &mesh.triangles {
                let p = [mesh.verts[tri[0]], mesh.verts[tri[1]], mesh.verts[tri[2]]];
                let cx = (p[0].x + p[1].x + p[2].x) / 3.0;
                let cy = (p[0].y + p[1].y + p[2].y) / 3.0;
                if cx < rect.x0 - tol || cx > rect.x1 + tol || cy < rect.y0 - tol
                    || cy > rect.y1 + tol
                {
                    continue;
                }
                let area = 0.5 * mesh.hx * mesh.hy;
                let m = weight * area / 12.0;
                let local = [
                    2.0 * m, m, m,
                    m, 2.0 * m, m,
                    m, m, 2.0 * m,
                ];
                scatter_local(b, mesh, tri, &local);
            }
        }
    }
}

fn assemble_segment(
    b: &mut SparseBuilder,
    mesh: &Mesh,
    a: Point,
    bp: Point,
    weight: f64,
) -> Result<()> {
    // Split the segment at mesh lines; the product of two traces is quadratic
    // on each piece, so 2-point Gauss per piece is exact.
    let rule = GaussRule::new(2);
    let horizontal = (a.y - bp.y).abs() <= (a.x - bp.x).abs();
    let (lo, hi) = if horizontal {
        (a.x.min(bp.x), a.x.max(bp.x))
    } else {
        (a.y.min(bp.y), a.y.max(bp.y))
    };
    let (axis_lo, h, n) = match (mesh.domain, horizontal) {
        (Domain::Rect(r), true) => (r.x0, mesh.hx, mesh.nx),
        (Domain::Rect(r), false) => (r.y0, mesh.hy, mesh.ny),
        (Domain::Interval { a, .. }, _) => (a, mesh.hx, mesh.nx),
    };
    let mut cuts: Vec<f64> = vec![lo];
    for k in 0..=n {
        let c = axis_lo + k as f64 * h;
        if c > lo + 1e-13 && c < hi - 1e-13 {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    for w in cuts.windows(2) {
        let (p0, p1) = (w[0], w[1]);
        for (t, qw) in rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w_)| (0.5 * (p0 + p1) + 0.5 * (p1 - p0) * t, 0.5 * (p1 - p0) * w_))
        {
            let p = if horizontal {
                Point::new(t, a.y)
            } else {
                Point::new(a.x, t)
            };
            let (verts, phi) = mesh.eval_basis(p)?;
            for (li, &vi) in verts.iter().enumerate() {
                let Some(di) = mesh.dof_of_vert[vi] else { continue };
                if phi[li] == 0.0 {
                    continue;
                }
                for (lj, &vj) in verts.iter().enumerate() {
                    let Some(dj) = mesh.dof_of_vert[vj] else { continue };
                    if dj >= di && phi[lj] != 0.0 {
                        b.add_sym(di, dj, weight * qw * phi[li] * phi[lj]);
                    }
                }
            }
        }
    }
    Ok(())
}

fn add_point_mass(b: &mut SparseBuilder, mesh: &Mesh, p: Point, weight: f64) -> Result<()> {
    let (verts, phi) = mesh.eval_basis(p)?;
    for (li, &vi) in verts.iter().enumerate() {
        let Some(di) = mesh.dof_of_vert[vi] else { continue };
        if phi[li] == 0.0 {
            continue;
        }
        for (lj, &vj) in verts.iter().enumerate() {
            let Some(dj) = mesh.dof_of_vert[vj] else { continue };
            if dj >= di && phi[lj] != 0.0 {
                b.add_sym(di, dj, weight * phi[li] * phi[lj]);
            }
        }
    }
    Ok(())
}
