//! Dirichlet Green kernels, the Green integral operator `G_μ` against a
//! measure, and the Nyström eigenvalue route.
//!
//! In the plane the kernel splits as `G = g + h` with free part
//! `g(x,y) = -(1/2π) ln|x-y|` and a corrector `h` that is harmonic in each
//! argument. The rectangle kernel is built by the method of images with
//! alternating signs: the reflection series across the short axis is summed
//! in closed form (`ln|sin|` of a complex argument), the remaining images
//! along the other axis are truncated at `image_order` and decay
//! exponentially. The disk and the 1D interval use their closed forms.
//!
//! `G_μ` is discretized on midpoint quadrature nodes of the measure; cells
//! whose log singularity is within reach of the evaluation point get exact
//! local integration of `g` (singularity subtraction), restoring second-order
//! accuracy. The eigenvalue route symmetrizes the Nyström matrix by the
//! weight rescaling and reads the spectrum off a dense symmetric solve,
//! `λ = 1/ν`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{Domain, Point, Rect};
use crate::measure::{Measure, MeasureComponent};

const TWO_PI: f64 = 2.0 * PI;

/// Free-space kernel in the plane.
pub fn free_kernel(x: Point, y: Point) -> f64 {
    -x.dist(y).ln() / TWO_PI
}

/// An evaluable Dirichlet Green function.
#[derive(Clone, Copy, Debug)]
pub enum GreenKernel {
    /// Interval `(a, b)`: `G(x,y) = (min-a)(b-max)/(b-a)`, bounded.
    Interval { a: f64, b: f64 },
    /// Axis-aligned rectangle, image series truncated at `image_order`.
    Rectangle { rect: Rect, image_order: usize },
    /// Disk of given radius centered at the origin (closed form).
    Disk { radius: f64 },
}

impl GreenKernel {
    /// Kernel for the domain carrying a measure.
    pub fn for_domain(domain: Domain, image_order: usize) -> GreenKernel {
        match domain {
            Domain::Interval { a, b } => GreenKernel::Interval { a, b },
            Domain::Rect(rect) => GreenKernel::Rectangle { rect, image_order },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GreenKernel::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Evaluate `G(x, y)`.
    ///
    /// Errors for coincident arguments of the planar kernels, where
    /// `G(x,x) = +∞`.
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        match self {
            GreenKernel::Interval { a, b } => {
                let (lo, hi) = (x.x.min(y.x), x.x.max(y.x));
                Ok((lo - a) * (b - hi) / (b - a))
            }
            GreenKernel::Rectangle { rect, image_order } => {
                if x.dist(y) < 1e-300 {
                    return Err(Error::SingularKernel { x: x.x, y: x.y });
                }
                Ok(rect_eval(*rect, *image_order, x, y))
            }
            GreenKernel::Disk { radius } => {
                if x.dist(y) < 1e-300 {
                    return Err(Error::SingularKernel { x: x.x, y: x.y });
                }
                Ok(disk_eval(*radius, x, y))
            }
        }
    }

    /// The corrector `h(x, y) = G - g`, finite on the diagonal (planar
    /// kernels only; the interval kernel has no free-part split).
    pub fn smooth_part(&self, x: Point, y: Point) -> f64 {
        match self {
            GreenKernel::Interval { .. } => 0.0,
            GreenKernel::Rectangle { rect, image_order } => {
                if x.dist(y) < 1e-12 {
                    rect_smooth_diag(*rect, *image_order, x)
                } else {
                    rect_eval(*rect, *image_order, x, y) - free_kernel(x, y)
                }
            }
            GreenKernel::Disk { radius } => {
                if x.dist(y) < 1e-12 {
                    let r2 = radius * radius - x.norm() * x.norm();
                    -(radius / r2).ln() / TWO_PI
                } else {
                    disk_eval(*radius, x, y) - free_kernel(x, y)
                }
            }
        }
    }

    /// Raw alternating image-lattice sum over the window `[-l, l]^2`
    /// (reference implementation; converges slowly and is used to validate
    /// the production evaluator).
    pub fn raw_lattice_reference(&self, x: Point, y: Point, l: i64) -> Option<f64> {
        let GreenKernel::Rectangle { rect, .. } = self else { return None };
        let (a, b) = (rect.width(), rect.height());
        let (xs, ys) = (
            Point::new(x.x - rect.x0, x.y - rect.y0),
            Point::new(y.x - rect.x0, y.y - rect.y0),
        );
        let mut s = 0.0;
        for m in -l..=l {
            for n in -l..=l {
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        let xi = if s1 == 0 { ys.x } else { -ys.x } + 2.0 * m as f64 * a;
                        let eta = if s2 == 0 { ys.y } else { -ys.y } + 2.0 * n as f64 * b;
                        let sign = if (s1 + s2) % 2 == 0 { 1.0 } else { -1.0 };
                        s += sign * free_kernel(xs, Point::new(xi, eta));
                    }
                }
            }
        }
        Some(s)
    }
}

/// `ln|sin(re + i·im)|`, stable for large imaginary parts.
fn ln_abs_sin(re: f64, im: f64) -> f64 {
    let v = im.abs();
    if v > 20.0 {
        let e = (-2.0 * v).exp();
        let c = (1.0 - e * (2.0 * re).cos()).powi(2) + (e * (2.0 * re).sin()).powi(2);
        v - std::f64::consts::LN_2 + 0.5 * c.ln()
    } else {
        let m = (re.sin() * v.cosh()).powi(2) + (re.cos() * v.sinh()).powi(2);
        0.5 * m.ln()
    }
}

/// Strip kernel for `0 < u < a` (closed-form reflection sum across the
/// walls): source at `(wu, wv)`, evaluation at `(u, v)`.
fn strip_kernel(a: f64, u: f64, v: f64, wu: f64, wv: f64) -> f64 {
    let k = PI / (2.0 * a);
    let t1 = ln_abs_sin(k * (u - wu), k * (v - wv));
    let t2 = ln_abs_sin(k * (u + wu), k * (v - wv));
    -(t1 - t2) / TWO_PI
}

/// Coordinates of `p` in the frame where the strip runs across the short
/// side of the rectangle: `(u, v)` with `0 < u < a`.
fn strip_frame(rect: Rect, p: Point) -> (f64, f64, f64, f64) {
    let (w, h) = (rect.width(), rect.height());
    if w <= h {
        (p.x - rect.x0, p.y - rect.y0, w, h)
    } else {
        (p.y - rect.y0, p.x - rect.x0, h, w)
    }
}

fn rect_eval(rect: Rect, image_order: usize, x: Point, y: Point) -> f64 {
    let (u, v, a, b) = strip_frame(rect, x);
    let (wu, wv, _, _) = strip_frame(rect, y);
    let l = image_order as i64;
    // Shells decay like exp(-2 pi n b / a); stop once they stop moving the
    // sum.
    let mut s = strip_kernel(a, u, v, wu, wv) - strip_kernel(a, u, v, wu, -wv);
    for n in 1..=l {
        let shift = 2.0 * n as f64 * b;
        let shell = strip_kernel(a, u, v, wu, wv + shift)
            - strip_kernel(a, u, v, wu, -wv + shift)
            + strip_kernel(a, u, v, wu, wv - shift)
            - strip_kernel(a, u, v, wu, -wv - shift);
        s += shell;
        if shell.abs() <= 1e-16 * s.abs().max(1e-3) {
            break;
        }
    }
    s
}

/// Diagonal limit of the corrector: `lim_{y→x} (G(x,y) + ln|x-y| / 2π)`.
fn rect_smooth_diag(rect: Rect, image_order: usize, x: Point) -> f64 {
    let (u, v, a, b) = strip_frame(rect, x);
    let k = PI / (2.0 * a);
    // Singular strip term minus the free kernel leaves -(ln k)/2π; the
    // reflected companion stays regular.
    let mut s = -(k.ln()) / TWO_PI + ln_abs_sin(k * (u + u), 0.0) / TWO_PI
        - strip_kernel(a, u, v, u, -v);
    let l = image_order as i64;
    for n in 1..=l {
        let shift = 2.0 * n as f64 * b;
        let shell = strip_kernel(a, u, v, u, v + shift)
            - strip_kernel(a, u, v, u, -v + shift)
            + strip_kernel(a, u, v, u, v - shift)
            - strip_kernel(a, u, v, u, -v - shift);
        s += shell;
        if shell.abs() <= 1e-16 * s.abs().max(1e-3) {
            break;
        }
    }
    s
}

fn disk_eval(radius: f64, x: Point, y: Point) -> f64 {
    let ry = y.norm();
    if ry < 1e-14 * radius {
        return -(x.norm() / radius).ln() / TWO_PI;
    }
    let inv = Point::new(radius * radius * y.x / (ry * ry), radius * radius * y.y / (ry * ry));
    -((radius * x.dist(y)) / (ry * x.dist(inv))).ln() / TWO_PI
}

/// Quadrature-cell geometry of one node.
#[derive(Clone, Copy, Debug)]
enum NodeCell {
    /// Segment cell: axis (0 = x, 1 = y), half length, line density.
    Seg { axis: u8, half: f64, density: f64 },
    /// Area cell: half extents and area density.
    Area { hx2: f64, hy2: f64, density: f64 },
    Atom,
}

/// Midpoint quadrature nodes of a measure for the integral-operator route.
#[derive(Clone, Debug)]
pub struct MeasureNodes {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    cells: Vec<NodeCell>,
}

/// Node-density knobs for the integral-operator route.
#[derive(Clone, Copy, Debug)]
pub struct NyOpts {
    /// Midpoint cells per segment component.
    pub nodes_per_segment: usize,
    /// Midpoint cells per axis on area components.
    pub area_nodes_per_axis: usize,
}

impl Default for NyOpts {
    fn default() -> Self {
        NyOpts { nodes_per_segment: 256, area_nodes_per_axis: 48 }
    }
}

impl MeasureNodes {
    pub fn build(measure: &Measure, opts: NyOpts) -> Result<MeasureNodes> {
        let dim = measure.dim();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut cells = Vec::new();
        fn seg(
            points: &mut Vec<Point>,
            weights: &mut Vec<f64>,
            cells: &mut Vec<NodeCell>,
            a: Point,
            b: Point,
            weight: f64,
            n: usize,
        ) {
            let len = a.dist(b);
            let h = len / n as f64;
            let axis = if (a.y - b.y).abs() <= (a.x - b.x).abs() { 0u8 } else { 1u8 };
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                points.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
                weights.push(weight * h);
                cells.push(NodeCell::Seg { axis, half: 0.5 * h, density: weight });
            }
        }
        for c in measure.components() {
            match c {
                MeasureComponent::Segment { a, b, weight } => seg(
                    &mut points,
                    &mut weights,
                    &mut cells,
                    *a,
                    *b,
                    *weight,
                    opts.nodes_per_segment,
                ),
                MeasureComponent::Area { rect, weight } => {
                    if dim == 1 {
                        seg(
                            &mut points,
                            &mut weights,
                            &mut cells,
                            Point::new(rect.x0, 0.0),
                            Point::new(rect.x1, 0.0),
                            *weight,
                            opts.nodes_per_segment,
                        );
                    } else {
                        let n = opts.area_nodes_per_axis;
                        let hx = rect.width() / n as f64;
                        let hy = rect.height() / n as f64;
                        for j in 0..n {
                            for i in 0..n {
                                points.push(Point::new(
                                    rect.x0 + (i as f64 + 0.5) * hx,
                                    rect.y0 + (j as f64 + 0.5) * hy,
                                ));
                                weights.push(weight * hx * hy);
                                cells.push(NodeCell::Area {
                                    hx2: 0.5 * hx,
                                    hy2: 0.5 * hy,
                                    density: *weight,
                                });
                            }
                        }
                    }
                }
                MeasureComponent::Atom { point, weight } => {
                    points.push(*point);
                    weights.push(*weight);
                    cells.push(NodeCell::Atom);
                }
                MeasureComponent::Ifs { maps, probs, depth, weight } => {
                    for (p, w) in crate::measure::atomize(maps, probs, *depth, *weight) {
                        points.push(p);
                        weights.push(w);
                        cells.push(NodeCell::Atom);
                    }
                }
            }
        }
        Ok(MeasureNodes { points, weights, cells })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise node distance (guards the kernel matrix against
    /// coincident nodes).
    fn min_pair_distance(&self) -> f64 {
        let n = self.points.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.min(self.points[i].dist(self.points[j]));
            }
        }
        best
    }

    /// Largest cell extent over the nodes (the midpoint-rule resolution;
    /// zero for purely atomic measures).
    pub fn max_cell_extent(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| match c {
                NodeCell::Seg { half, .. } => 2.0 * half,
                NodeCell::Area { hx2, hy2, .. } => 2.0 * hx2.max(*hy2),
                NodeCell::Atom => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Discrete `L²(μ)` inner product of node-value vectors.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(&w, (&a, &b))| w * a * b)
            .sum()
    }
}

/// The integral operator `f ↦ ∫ G(x, y) f(y) dμ(y)` on quadrature nodes.
pub struct GreenOperator<'k> {
    pub kernel: &'k GreenKernel,
    pub nodes: MeasureNodes,
}

impl<'k> GreenOperator<'k> {
    pub fn new(kernel: &'k GreenKernel, measure: &Measure, opts: NyOpts) -> Result<Self> {
        let nodes = MeasureNodes::build(measure, opts)?;
        Ok(GreenOperator { kernel, nodes })
    }

    /// Effective weight of node `q` at evaluation point `x`, with exact
    /// local integration of the log singularity near the node's cell.
    fn weight_at(&self, q: usize, x: Point) -> Result<f64> {
        let yq = self.nodes.points[q];
        let w = self.nodes.weights[q];
        match self.nodes.cells[q] {
            NodeCell::Atom => {
                if self.kernel.dim() == 2 && x.dist(yq) < 1e-14 {
                    return Err(Error::SingularKernel { x: x.x, y: x.y });
                }
                Ok(self.kernel.eval(x, yq)? * w)
            }
            NodeCell::Seg { axis, half, density } => {
                let (ds, d) = if axis == 0 {
                    (x.x - yq.x, x.y - yq.y)
                } else {
                    (x.y - yq.y, x.x - yq.x)
                };
                let near = ds.abs() <= 3.0 * half && d.abs() <= 8.0 * half;
                if !near {
                    return Ok(self.kernel.eval(x, yq)? * w);
                }
                match self.kernel {
                    GreenKernel::Interval { a, b } => {
                        // G is piecewise linear in the integration variable;
                        // trapezoid per linear piece is exact.
                        let g = |t: f64| {
                            let (lo, hi) = (x.x.min(t), x.x.max(t));
                            (lo - a) * (b - hi) / (b - a)
                        };
                        let (t0, t1) = (yq.x - half, yq.x + half);
                        let val = if x.x > t0 && x.x < t1 {
                            0.5 * (x.x - t0) * (g(t0) + g(x.x))
                                + 0.5 * (t1 - x.x) * (g(x.x) + g(t1))
                        } else {
                            0.5 * (t1 - t0) * (g(t0) + g(t1))
                        };
                        Ok(density * val)
                    }
                    _ => {
                        // Exact cell integral of the free part plus the
                        // corrector at the node.
                        let sing = -int_ln_segment(ds, half, d) / TWO_PI;
                        Ok(w * self.kernel.smooth_part(x, yq) + density * sing)
                    }
                }
            }
            NodeCell::Area { hx2, hy2, density } => {
                let (dx, dy) = (x.x - yq.x, x.y - yq.y);
                if dx.abs() <= 3.0 * hx2 && dy.abs() <= 3.0 * hy2 {
                    let sing = -int_ln_rect(dx, dy, hx2, hy2) / TWO_PI;
                    Ok(w * self.kernel.smooth_part(x, yq) + density * sing)
                } else {
                    Ok(self.kernel.eval(x, yq)? * w)
                }
            }
        }
    }

    /// Apply to node values: `(G_μ f)(x) ≈ Σ_q c_q(x) f_q`.
    pub fn apply_vec(&self, f_nodes: &[f64], x: Point) -> Result<f64> {
        debug_assert_eq!(f_nodes.len(), self.nodes.len());
        let mut acc = 0.0;
        for q in 0..self.nodes.len() {
            acc += self.weight_at(q, x)? * f_nodes[q];
        }
        Ok(acc)
    }

    /// Apply to a function: evaluates it on the nodes first.
    pub fn apply_fn<F: Fn(Point) -> f64>(&self, f: F, x: Point) -> Result<f64> {
        let fv: Vec<f64> = self.nodes.points.iter().map(|&p| f(p)).collect();
        self.apply_vec(&fv, x)
    }

    /// Apply at many points, chunked across threads; results are in input
    /// order and independent of the thread count.
    pub fn apply_vec_many(
        &self,
        f_nodes: &[f64],
        points: &[Point],
        n_threads: usize,
    ) -> Result<Vec<f64>> {
        let n = points.len();
        let threads = n_threads.max(1).min(n.max(1));
        let chunk = n.div_ceil(threads);
        let mut out = vec![0.0f64; n];
        let errors: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
        std::thread::scope(|scope| {
            for (slot, pts) in out.chunks_mut(chunk).zip(points.chunks(chunk)) {
                let errors = &errors;
                scope.spawn(move || {
                    for (o, &p) in slot.iter_mut().zip(pts) {
                        match self.apply_vec(f_nodes, p) {
                            Ok(v) => *o = v,
                            Err(e) => {
                                *errors.lock().unwrap() = Some(e);
                                return;
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = errors.into_inner().unwrap() {
            return Err(e);
        }
        Ok(out)
    }

    /// Values of a function on the operator's nodes.
    pub fn node_values<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.points.iter().map(|&p| f(p)).collect()
    }

    /// Assemble the (unsymmetrized) Nyström matrix `A[p][q] = c_q(x_p)`.
    fn kernel_matrix(&self, n_threads: usize) -> Result<DMatrix<f64>> {
        let n = self.nodes.len();
        let mut data = vec![0.0f64; n * n];
        let threads = n_threads.max(1).min(n.max(1));
        let chunk = n.div_ceil(threads);
        let errors: std::sync::Mutex<Vec<Error>> = std::sync::Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for (t, rows) in data.chunks_mut(chunk * n).enumerate() {
                let errors = &errors;
                let this = &self;
                scope.spawn(move || {
                    for (local, row) in rows.chunks_mut(n).enumerate() {
                        let p = t * chunk + local;
                        let x = this.nodes.points[p];
                        for q in 0..n {
                            match this.weight_at(q, x) {
                                Ok(v) => row[q] = v,
                                Err(e) => {
                                    errors.lock().unwrap().push(e);
                                    return;
                                }
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = errors.into_inner().unwrap().pop() {
            return Err(e);
        }
        Ok(DMatrix::from_row_slice(n, n, &data))
    }
}

/// `∫_{cell} ln|x - t| dt` along a segment cell: offset `ds` of the
/// evaluation point along the axis from the node, perpendicular distance
/// `d`, cell `[-half, half]` around the node.
fn int_ln_segment(ds: f64, half: f64, d: f64) -> f64 {
    let f = |u: f64| -> f64 {
        if d.abs() < 1e-300 {
            if u.abs() < 1e-300 {
                0.0
            } else {
                u * u.abs().ln() - u
            }
        } else {
            0.5 * u * (u * u + d * d).ln() - u + d.abs() * (u / d.abs()).atan()
        }
    };
    f(ds + half) - f(ds - half)
}

/// `∬_{cell} ln|x - t| dt` over an area cell: offsets `(dx, dy)` from the
/// node, half extents `(hx2, hy2)`.
fn int_ln_rect(dx: f64, dy: f64, hx2: f64, hy2: f64) -> f64 {
    let anti = |x: f64, y: f64| -> f64 {
        if x.abs() < 1e-300 || y.abs() < 1e-300 {
            return 0.0;
        }
        0.5 * (x * y * (x * x + y * y).ln() - 3.0 * x * y
            + x * x * (y / x).atan()
            + y * y * (x / y).atan())
    };
    let (u0, u1) = (dx - hx2, dx + hx2);
    let (v0, v1) = (dy - hy2, dy + hy2);
    anti(u1, v1) - anti(u0, v1) - anti(u1, v0) + anti(u0, v0)
}

/// Spectrum computed by the integral-operator route.
#[derive(Clone, Debug)]
pub struct GreenSpectrum {
    /// Eigenvalues `λ = 1/ν` in increasing order.
    pub lambdas: Vec<f64>,
    /// Eigenfunction values on the quadrature nodes, `L²(μ)`-normalized.
    pub node_vectors: Vec<Vec<f64>>,
    pub nodes: MeasureNodes,
    pub requested: usize,
    pub rank_deficient: bool,
}

impl GreenSpectrum {
    /// Nyström extension of eigenfunction `i` off the nodes:
    /// `u(x) = λ (G_μ u)(x)`.
    pub fn extend(&self, kernel: &GreenKernel, i: usize, x: Point) -> Result<f64> {
        let op = GreenOperator { kernel, nodes: self.nodes.clone() };
        Ok(self.lambdas[i] * op.apply_vec(&self.node_vectors[i], x)?)
    }
}

/// Solve the eigenproblem by the integral-operator route: top-`k` eigenvalues
/// `ν` of the symmetrized kernel matrix, returned as `λ = 1/ν`.
///
/// Atomic (and IFS-atomized) components are rejected in the plane, where the
/// kernel diagonal `G(x,x) = +∞` makes pure point masses ill-posed for this
/// route; the Galerkin route covers them.
pub fn nystrom_solve(
    kernel: &GreenKernel,
    measure: &Measure,
    k: usize,
    opts: NyOpts,
    n_threads: usize,
) -> Result<GreenSpectrum> {
    if kernel.dim() == 2 {
        let has_atoms = measure.components().iter().any(|c| {
            matches!(c, MeasureComponent::Atom { .. } | MeasureComponent::Ifs { .. })
        });
        if has_atoms {
            return Err(Error::UnsupportedMeasure(
                "atomic components have a singular kernel diagonal in the plane; \
                 use the Galerkin route"
                    .into(),
            ));
        }
    }
    let op = GreenOperator::new(kernel, measure, opts)?;
    let n = op.nodes.len();
    if n == 0 {
        return Err(Error::InvalidMeasure("no quadrature nodes".into()));
    }
    let min_dist = op.nodes.min_pair_distance();
    if n > 1 && min_dist < 1e-12 * kernel_scale(kernel) {
        return Err(Error::InvalidArgument(format!(
            "coincident quadrature nodes (min distance {min_dist:.3e}); \
             change the node counts"
        )));
    }
    let a = op.kernel_matrix(n_threads)?;
    // Similarity to a symmetric matrix: S = D^{1/2} A D^{-1/2}.
    let sqrt_w: Vec<f64> = op.nodes.weights.iter().map(|w| w.sqrt()).collect();
    let mut s = DMatrix::<f64>::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            s[(p, q)] = a[(p, q)] * sqrt_w[p] / sqrt_w[q];
        }
    }
    let s = 0.5 * (&s + s.transpose());
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let floor = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lambdas = Vec::new();
    let mut node_vectors = Vec::new();
    for &i in order.iter() {
        let nu = eig.eigenvalues[i];
        if nu <= floor || lambdas.len() >= k {
            continue;
        }
        let mut phi: Vec<f64> = (0..n)
            .map(|p| eig.eigenvectors[(p, i)] / sqrt_w[p])
            .collect();
        let norm = op.nodes.inner(&phi, &phi).sqrt();
        for v in phi.iter_mut() {
            *v /= norm;
        }
        let maxabs = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = phi.iter().find(|v| v.abs() > 1e-8 * maxabs) {
            if *first < 0.0 {
                for v in phi.iter_mut() {
                    *v = -*v;
                }
            }
        }
        lambdas.push(1.0 / nu);
        node_vectors.push(phi);
    }
    // nu decreasing gives lambda increasing.
    let rank_deficient = lambdas.len() < k;
    Ok(GreenSpectrum {
        lambdas,
        node_vectors,
        nodes: op.nodes,
        requested: k,
        rank_deficient,
    })
}

fn kernel_scale(kernel: &GreenKernel) -> f64 {
    match kernel {
        GreenKernel::Interval { a, b } => b - a,
        GreenKernel::Rectangle { rect, .. } => rect.diameter(),
        GreenKernel::Disk { radius } => 2.0 * radius,
    }
}

/// Result of the boundedness check `sup_x ∫ G(x,y) dμ(y) < ∞`.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub sup: f64,
    pub sup_refined: f64,
    pub rel_change: f64,
    /// True when node doubling moves the sup by at most 1%.
    pub stable: bool,
    /// A sample point where the integrand is singular (sup is infinite).
    pub singular_at: Option<Point>,
}

/// Estimate `sup_x ∫ G(x,y) dμ(y)` over the sample points and probe
/// stability under node doubling.
pub fn check_green_condition(
    kernel: &GreenKernel,
    measure: &Measure,
    samples: &[Point],
    opts: NyOpts,
) -> Result<ConditionReport> {
    let sup_with = |o: NyOpts| -> Result<(f64, Option<Point>)> {
        let op = GreenOperator::new(kernel, measure, o)?;
        let ones = vec![1.0; op.nodes.len()];
        let mut sup = 0.0f64;
        for &x in samples {
            match op.apply_vec(&ones, x) {
                Ok(v) => sup = sup.max(v),
                Err(Error::SingularKernel { .. }) => return Ok((f64::INFINITY, Some(x))),
                Err(e) => return Err(e),
            }
        }
        Ok((sup, None))
    };
    let (sup, singular_at) = sup_with(opts)?;
    if singular_at.is_some() {
        return Ok(ConditionReport {
            sup,
            sup_refined: sup,
            rel_change: f64::INFINITY,
            stable: false,
            singular_at,
        });
    }
    let doubled = NyOpts {
        nodes_per_segment: opts.nodes_per_segment * 2,
        area_nodes_per_axis: opts.area_nodes_per_axis * 2,
    };
    let (sup2, _) = sup_with(doubled)?;
    let rel = (sup2 - sup).abs() / sup.abs().max(f64::MIN_POSITIVE);
    Ok(ConditionReport {
        sup,
        sup_refined: sup2,
        rel_change: rel,
        stable: rel <= 0.01,
        singular_at: None,
    })
}

/// Decay table of `|G_μ f|` along the inward normal from a boundary point.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    pub interior_max: f64,
    /// Last value over the interior max.
    pub final_ratio: f64,
    /// Values never rise by more than 10% from one distance to the next.
    pub monotone_ish: bool,
    pub pass: bool,
}

/// Inward unit normal of a rectangle at a boundary point (diagonal at
/// corners).
pub fn inward_normal(rect: Rect, z: Point) -> Point {
    let tol = 1e-9 * rect.diameter();
    let mut nx = 0.0f64;
    let mut ny = 0.0f64;
    if (z.x - rect.x0).abs() < tol {
        nx += 1.0;
    }
    if (z.x - rect.x1).abs() < tol {
        nx -= 1.0;
    }
    if (z.y - rect.y0).abs() < tol {
        ny += 1.0;
    }
    if (z.y - rect.y1).abs() < tol {
        ny -= 1.0;
    }
    let n = nx.hypot(ny);
    if n == 0.0 {
        Point::new(0.0, 0.0)
    } else {
        Point::new(nx / n, ny / n)
    }
}

/// Evaluate `|G_μ f|` at `z + d·n̂` for each approach distance and compare the
/// final value against `threshold` times the interior maximum.
pub fn boundary_decay_check(
    op: &GreenOperator,
    f_nodes: &[f64],
    z: Point,
    distances: &[f64],
    threshold: f64,
) -> Result<DecayReport> {
    let domain = match op.kernel {
        GreenKernel::Interval { a, b } => Domain::interval(*a, *b),
        GreenKernel::Rectangle { rect, .. } => Domain::Rect(*rect),
        GreenKernel::Disk { .. } => {
            return Err(Error::InvalidArgument(
                "decay check expects an interval or rectangle kernel".into(),
            ))
        }
    };
    let normal = match domain {
        Domain::Interval { a, b } => {
            if (z.x - a).abs() < (z.x - b).abs() {
                Point::new(1.0, 0.0)
            } else {
                Point::new(-1.0, 0.0)
            }
        }
        Domain::Rect(r) => inward_normal(r, z),
    };
    if normal.norm() == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "({}, {}) is not a boundary point",
            z.x, z.y
        )));
    }
    let mut values = Vec::with_capacity(distances.len());
    for &d in distances {
        let x = Point::new(z.x + d * normal.x, z.y + d * normal.y);
        values.push(op.apply_vec(f_nodes, x)?.abs());
    }
    // Interior reference on a coarse inset grid.
    let mut interior_max = 0.0f64;
    let rect = domain.bounding_rect();
    let inset = 0.2;
    for j in 0..7 {
        for i in 0..7 {
            let x = Point::new(
                rect.x0 + rect.width() * (inset + (1.0 - 2.0 * inset) * i as f64 / 6.0),
                if domain.dim() == 1 {
                    0.0
                } else {
                    rect.y0 + rect.height() * (inset + (1.0 - 2.0 * inset) * j as f64 / 6.0)
                },
            );
            interior_max = interior_max.max(op.apply_vec(f_nodes, x)?.abs());
        }
        if domain.dim() == 1 {
            break;
        }
    }
    // Approaching the boundary, values may only creep up by 10% per step.
    let monotone_ish = {
        let mut ordered: Vec<(f64, f64)> =
            distances.iter().copied().zip(values.iter().copied()).collect();
        ordered.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        ordered.windows(2).all(|w| w[1].1 <= w[0].1 * 1.10 + 1e-14)
    };
    let last = *values.last().unwrap_or(&0.0);
    let final_ratio = last / interior_max.max(f64::MIN_POSITIVE);
    Ok(DecayReport {
        distances: distances.to_vec(),
        values,
        interior_max,
        final_ratio,
        monotone_ish,
        pass: monotone_ish && final_ratio <= threshold,
    })
}

/// Moduli of continuity of `λ G_μ u` on nested grids.
#[derive(Clone, Debug)]
pub struct ModulusReport {
    pub spacings: Vec<f64>,
    pub moduli: Vec<f64>,
    /// `moduli[i+1] / moduli[i]` for consecutive spacings.
    pub ratios: Vec<f64>,
}

/// Maximum difference of `λ G_μ u` over adjacent sample pairs at each grid
/// spacing inside `window`.
pub fn continuity_modulus_check(
    op: &GreenOperator,
    u_nodes: &[f64],
    lambda: f64,
    spacings: &[f64],
    window: Rect,
    n_threads: usize,
) -> Result<ModulusReport> {
    let mut moduli = Vec::with_capacity(spacings.len());
    for &s in spacings {
        let nx = (window.width() / s).floor() as usize;
        let ny = (window.height() / s).floor().max(0.0) as usize;
        let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                pts.push(Point::new(window.x0 + i as f64 * s, window.y0 + j as f64 * s));
            }
        }
        let vals = op.apply_vec_many(u_nodes, &pts, n_threads)?;
        let at = |i: usize, j: usize| lambda * vals[j * (nx + 1) + i];
        let mut m = 0.0f64;
        for j in 0..=ny {
            for i in 0..=nx {
                if i + 1 <= nx {
                    m = m.max((at(i + 1, j) - at(i, j)).abs());
                }
                if j + 1 <= ny {
                    m = m.max((at(i, j + 1) - at(i, j)).abs());
                }
            }
        }
        moduli.push(m);
    }
    let ratios = moduli.windows(2).map(|w| w[1] / w[0].max(f64::MIN_POSITIVE)).collect();
    Ok(ModulusReport { spacings: spacings.to_vec(), moduli, ratios })
}
