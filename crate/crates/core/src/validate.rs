//! Executable fixtures: closed-form eigenfunctions of cross-shaped singular
//! measures, weak-form residuals against smooth test bumps, sphere-average
//! monotonicity, maximum-principle checks and grid mollification.

use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::geom::{Domain, Point, Rect};
use crate::measure::{cross_measure, double_cross_measure, multi_cross_measure, Measure,
    MeasureComponent};
use crate::quad::GaussRule;
use crate::rng::Rng;

/// `c(x, y) = 1 + |xy| - |x| - |y|`, the building block of every closed form:
/// positive on the open unit square, zero on its boundary.
fn cross_block(x: f64, y: f64) -> f64 {
    1.0 + (x * y).abs() - x.abs() - y.abs()
}

fn cross_block_grad(x: f64, y: f64) -> Point {
    Point::new(x.signum() * (y.abs() - 1.0), y.signum() * (x.abs() - 1.0))
}

#[derive(Clone, Copy, Debug)]
enum ExampleKind {
    Cross,
    DoubleCross,
    MultiCross(usize),
}

/// A closed-form eigenfunction with eigenvalue 2 for a cross-type measure.
#[derive(Clone, Debug)]
pub struct ClosedFormExample {
    pub name: String,
    pub domain: Rect,
    pub measure: Measure,
    /// The eigenvalue, always 2 for these fixtures.
    pub lambda: f64,
    pub expected_nodal_domains: usize,
    kind: ExampleKind,
}

impl ClosedFormExample {
    /// Single cross on `(-1,1)^2`; the eigenfunction is positive inside.
    pub fn cross() -> Self {
        ClosedFormExample {
            name: "cross".into(),
            domain: Rect::new(-1.0, 1.0, -1.0, 1.0),
            measure: cross_measure(),
            lambda: 2.0,
            expected_nodal_domains: 1,
            kind: ExampleKind::Cross,
        }
    }

    /// Two mirrored crosses on `(-2,2) x (-1,1)`; one vertical nodal line.
    pub fn double_cross() -> Self {
        ClosedFormExample {
            name: "double_cross".into(),
            domain: Rect::new(-2.0, 2.0, -1.0, 1.0),
            measure: double_cross_measure(),
            lambda: 2.0,
            expected_nodal_domains: 2,
            kind: ExampleKind::DoubleCross,
        }
    }

    /// Chain of `n` alternating crosses on `(0, 2n) x (-1, 1)`; `n` nodal
    /// domains.
    pub fn multi_cross(n: usize) -> Self {
        assert!(n >= 1);
        ClosedFormExample {
            name: format!("multi_cross_{n}"),
            domain: Rect::new(0.0, 2.0 * n as f64, -1.0, 1.0),
            measure: multi_cross_measure(n),
            lambda: 2.0,
            expected_nodal_domains: n,
            kind: ExampleKind::MultiCross(n),
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self.kind {
            ExampleKind::Cross => cross_block(p.x, p.y),
            ExampleKind::DoubleCross => {
                if p.x <= 0.0 {
                    cross_block(p.x + 1.0, p.y)
                } else {
                    -cross_block(p.x - 1.0, p.y)
                }
            }
            ExampleKind::MultiCross(n) => {
                let i = (p.x / 2.0).floor().clamp(0.0, n as f64 - 1.0) as usize;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * cross_block(p.x - (2.0 * i as f64 + 1.0), p.y)
            }
        }
    }

    /// Piecewise gradient (undefined on the kink lines, which every
    /// quadrature below avoids by splitting).
    pub fn grad(&self, p: Point) -> Point {
        match self.kind {
            ExampleKind::Cross => cross_block_grad(p.x, p.y),
            ExampleKind::DoubleCross => {
                if p.x <= 0.0 {
                    cross_block_grad(p.x + 1.0, p.y)
                } else {
                    let g = cross_block_grad(p.x - 1.0, p.y);
                    Point::new(-g.x, -g.y)
                }
            }
            ExampleKind::MultiCross(n) => {
                let i = (p.x / 2.0).floor().clamp(0.0, n as f64 - 1.0) as usize;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let g = cross_block_grad(p.x - (2.0 * i as f64 + 1.0), p.y);
                Point::new(sign * g.x, sign * g.y)
            }
        }
    }

    /// Lines across which the closed form loses smoothness.
    pub fn breaks_x(&self) -> Vec<f64> {
        match self.kind {
            ExampleKind::Cross => vec![-1.0, 0.0, 1.0],
            ExampleKind::DoubleCross => vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            ExampleKind::MultiCross(n) => (0..=2 * n).map(|i| i as f64).collect(),
        }
    }

    pub fn breaks_y(&self) -> Vec<f64> {
        vec![self.domain.y0, 0.0, self.domain.y1]
    }

    /// `L²(μ)` norm of the closed form.
    pub fn measure_norm(&self) -> f64 {
        let sq = integrate_on_measure(&self.measure, &self.breaks_x(), &self.breaks_y(), |p| {
            let v = self.eval(p);
            v * v
        });
        sq.sqrt()
    }

    /// Sample the closed form on the interior DOFs of a mesh.
    pub fn sample_dofs(&self, mesh: &Mesh) -> Vec<f64> {
        (0..mesh.n_dofs())
            .map(|d| self.eval(mesh.vertex(mesh.vertex_of_dof(d))))
            .collect()
    }

    pub fn all_standard() -> Vec<ClosedFormExample> {
        vec![
            Self::cross(),
            Self::double_cross(),
            Self::multi_cross(2),
            Self::multi_cross(3),
            Self::multi_cross(4),
        ]
    }
}

/// Smooth compactly supported radial bump
/// `amplitude * exp(-1 / (1 - t^2))`, `t = |p - center| / radius`.
#[derive(Clone, Copy, Debug)]
pub struct TestBump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestBump {
    pub fn value(&self, p: Point) -> f64 {
        let t = p.dist(self.center) / self.radius;
        if t >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn gradient(&self, p: Point) -> Point {
        let d = p.dist(self.center);
        let t = d / self.radius;
        if t >= 1.0 || d < 1e-300 {
            return Point::new(0.0, 0.0);
        }
        let s = 1.0 - t * t;
        let dv = self.amplitude * (-1.0 / s).exp() * (-2.0 * t / (s * s));
        let scale = dv / (d * self.radius);
        Point::new(scale * (p.x - self.center.x), scale * (p.y - self.center.y))
    }
}

/// Deterministic seeded bumps centered on the support of the measure, with
/// supports strictly inside the domain.
pub fn seeded_bumps(example: &ClosedFormExample, count: usize, seed: u64) -> Vec<TestBump> {
    let mut rng = Rng::new(seed ^ 0xB0_B0_50_50);
    let segs: Vec<(Point, Point, f64)> = example
        .measure
        .components()
        .iter()
        .filter_map(|c| match c {
            MeasureComponent::Segment { a, b, weight } => Some((*a, *b, weight * a.dist(*b))),
            _ => None,
        })
        .collect();
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let domain = Domain::Rect(example.domain);
    (0..count)
        .map(|_| {
            let mut pick = rng.uniform() * total;
            let mut chosen = segs[0];
            for s in &segs {
                if pick <= s.2 {
                    chosen = *s;
                    break;
                }
                pick -= s.2;
            }
            let t = rng.range(0.08, 0.92);
            let center = Point::new(
                chosen.0.x + t * (chosen.1.x - chosen.0.x),
                chosen.0.y + t * (chosen.1.y - chosen.0.y),
            );
            let room = domain.boundary_dist(center);
            let radius = (0.9 * room).min(0.35).max(0.05) * rng.range(0.6, 1.0);
            TestBump { center, radius, amplitude: rng.range(0.5, 1.5) }
        })
        .collect()
}

/// Composite tensor Gauss integration of `f` over the rectangle pieces cut by
/// the break lines, restricted to pieces meeting `window`.
fn integrate_pieces<F: Fn(Point) -> f64>(
    breaks_x: &[f64],
    breaks_y: &[f64],
    window: Rect,
    resolution: f64,
    f: F,
) -> f64 {
    let rule = GaussRule::new(8);
    let mut total = 0.0;
    for wx in breaks_x.windows(2) {
        let (x0, x1) = (wx[0].max(window.x0), wx[1].min(window.x1));
        if x0 >= x1 {
            continue;
        }
        for wy in breaks_y.windows(2) {
            let (y0, y1) = (wy[0].max(window.y0), wy[1].min(window.y1));
            if y0 >= y1 {
                continue;
            }
            let cx = (((x1 - x0) / resolution).ceil() as usize).clamp(1, 32);
            let cy = (((y1 - y0) / resolution).ceil() as usize).clamp(1, 32);
            total += rule.integrate_rect(x0, x1, y0, y1, cx, cy, |x, y| f(Point::new(x, y)));
        }
    }
    total
}

/// Integrate `f` against a segment measure, splitting each segment at the
/// break lines so the integrand stays smooth per pane.
fn integrate_on_measure<F: Fn(Point) -> f64>(
    measure: &Measure,
    breaks_x: &[f64],
    breaks_y: &[f64],
    f: F,
) -> f64 {
    let rule = GaussRule::new(8);
    let mut total = 0.0;
    for c in measure.components() {
        let MeasureComponent::Segment { a, b, weight } = c else {
            unimplemented!("closed-form fixtures carry segment measures only");
        };
        let horizontal = (a.y - b.y).abs() <= (a.x - b.x).abs();
        let (lo, hi, breaks) = if horizontal {
            (a.x.min(b.x), a.x.max(b.x), breaks_x)
        } else {
            (a.y.min(b.y), a.y.max(b.y), breaks_y)
        };
        let mut cuts = vec![lo];
        for &c in breaks {
            if c > lo + 1e-12 && c < hi - 1e-12 {
                cuts.push(c);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        for w in cuts.windows(2) {
            let cells = (((w[1] - w[0]) / 0.02).ceil() as usize).clamp(2, 64);
            total += weight
                * rule.integrate_composite(w[0], w[1], cells, |t| {
                    f(if horizontal { Point::new(t, a.y) } else { Point::new(a.x, t) })
                });
        }
    }
    total
}

/// Weak-form residual of a candidate eigenvalue for a piecewise-smooth
/// function against smooth test bumps.
#[derive(Clone, Debug)]
pub struct WeakResidualReport {
    pub max_residual: f64,
    pub residuals: Vec<f64>,
}

/// For each bump `v` compute
/// `|∫ ∇u·∇v dx - λ ∫ u v dμ| / |∇v|_{L²}`
/// with quadrature split along the kink lines of `u`, and return the worst
/// case.
pub fn weak_residual(
    example: &ClosedFormExample,
    lambda_test: f64,
    bumps: &[TestBump],
) -> Result<WeakResidualReport> {
    weak_residual_of(
        |p| example.eval(p),
        |p| example.grad(p),
        &example.breaks_x(),
        &example.breaks_y(),
        &example.measure,
        lambda_test,
        bumps,
    )
}

/// Generic form of [`weak_residual`] for any piecewise-smooth candidate.
pub fn weak_residual_of<F, G>(
    u: F,
    grad_u: G,
    breaks_x: &[f64],
    breaks_y: &[f64],
    measure: &Measure,
    lambda_test: f64,
    bumps: &[TestBump],
) -> Result<WeakResidualReport>
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> Point,
{
    if bumps.is_empty() {
        return Err(Error::InvalidArgument("no test bumps".into()));
    }
    let mut residuals = Vec::with_capacity(bumps.len());
    for bump in bumps {
        let window = Rect::new(
            bump.center.x - bump.radius,
            bump.center.x + bump.radius,
            bump.center.y - bump.radius,
            bump.center.y + bump.radius,
        );
        let res = bump.radius / 6.0;
        let a = integrate_pieces(breaks_x, breaks_y, window, res, |p| {
            let gu = grad_u(p);
            let gv = bump.gradient(p);
            gu.x * gv.x + gu.y * gv.y
        });
        let b = integrate_on_measure(measure, breaks_x, breaks_y, |p| u(p) * bump.value(p));
        let energy = integrate_pieces(breaks_x, breaks_y, window, res, |p| {
            let gv = bump.gradient(p);
            gv.x * gv.x + gv.y * gv.y
        })
        .sqrt();
        residuals.push((a - lambda_test * b).abs() / energy.max(f64::MIN_POSITIVE));
    }
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(WeakResidualReport { max_residual, residuals })
}

/// Average of `u` over the circle of radius `r` around `x` (trapezoid rule,
/// spectrally accurate for periodic integrands).
pub fn sphere_average<F: Fn(Point) -> f64>(
    domain: Domain,
    u: F,
    x: Point,
    r: f64,
    order: usize,
) -> Result<f64> {
    if domain.boundary_dist(x) <= r {
        return Err(Error::InvalidArgument(format!(
            "ball of radius {r} around ({}, {}) exits the domain",
            x.x, x.y
        )));
    }
    let n = order.max(8);
    let mut acc = 0.0;
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        acc += u(Point::new(x.x + r * t.cos(), x.y + r * t.sin()));
    }
    Ok(acc / n as f64)
}

#[derive(Clone, Copy, Debug)]
pub enum Harmonicity {
    /// `Δ_μ u >= 0`: maximum on the boundary.
    Subharmonic,
    /// `Δ_μ u <= 0`: minimum on the boundary.
    Superharmonic,
}

#[derive(Clone, Copy, Debug)]
pub struct PrincipleReport {
    pub interior_extreme: f64,
    pub ring_extreme: f64,
    pub ok: bool,
}

/// Maximum-principle check on sampled grids: subharmonic functions must not
/// beat the boundary-ring maximum inside, superharmonic ones must not drop
/// below the ring minimum.
pub fn maximum_principle_check<F: Fn(Point) -> f64>(
    u: F,
    interior: &[Point],
    ring: &[Point],
    kind: Harmonicity,
    tol: f64,
) -> PrincipleReport {
    match kind {
        Harmonicity::Subharmonic => {
            let im = interior.iter().map(|&p| u(p)).fold(f64::NEG_INFINITY, f64::max);
            let rm = ring.iter().map(|&p| u(p)).fold(f64::NEG_INFINITY, f64::max);
            PrincipleReport { interior_extreme: im, ring_extreme: rm, ok: im <= rm + tol }
        }
        Harmonicity::Superharmonic => {
            let im = interior.iter().map(|&p| u(p)).fold(f64::INFINITY, f64::min);
            let rm = ring.iter().map(|&p| u(p)).fold(f64::INFINITY, f64::min);
            PrincipleReport { interior_extreme: im, ring_extreme: rm, ok: im >= rm - tol }
        }
    }
}

/// Uniform grid sample of the domain: inset interior points plus a boundary
/// ring at the given inset.
pub fn principle_grids(rect: Rect, n: usize, ring_inset: f64) -> (Vec<Point>, Vec<Point>) {
    let mut interior = Vec::new();
    let inset = ring_inset * 2.0;
    for j in 0..=n {
        for i in 0..=n {
            let p = Point::new(
                rect.x0 + inset + (rect.width() - 2.0 * inset) * i as f64 / n as f64,
                rect.y0 + inset + (rect.height() - 2.0 * inset) * j as f64 / n as f64,
            );
            interior.push(p);
        }
    }
    let mut ring = Vec::new();
    let m = 4 * n;
    for t in 0..m {
        let s = t as f64 / (m - 1) as f64;
        ring.push(Point::new(
            rect.x0 + ring_inset + (rect.width() - 2.0 * ring_inset) * s,
            rect.y0 + ring_inset,
        ));
        ring.push(Point::new(
            rect.x0 + ring_inset + (rect.width() - 2.0 * ring_inset) * s,
            rect.y1 - ring_inset,
        ));
        ring.push(Point::new(
            rect.x0 + ring_inset,
            rect.y0 + ring_inset + (rect.height() - 2.0 * ring_inset) * s,
        ));
        ring.push(Point::new(
            rect.x1 - ring_inset,
            rect.y0 + ring_inset + (rect.height() - 2.0 * ring_inset) * s,
        ));
    }
    (interior, ring)
}

/// A function sampled on a uniform vertex grid over a rectangle.
#[derive(Clone, Debug)]
pub struct GridFn {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major `(nx + 1) * (ny + 1)` vertex values.
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn sample<F: Fn(Point) -> f64>(rect: Rect, nx: usize, ny: usize, f: F) -> GridFn {
        let mut values = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                values.push(f(Point::new(
                    rect.x0 + rect.width() * i as f64 / nx as f64,
                    rect.y0 + rect.height() * j as f64 / ny as f64,
                )));
            }
        }
        GridFn { rect, nx, ny, values }
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.rect.width() / self.nx as f64, self.rect.height() / self.ny as f64)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.nx + 1) + i]
    }

    /// Value with zero extension outside the grid.
    fn value_ext(&self, i: i64, j: i64) -> f64 {
        if i < 0 || j < 0 || i > self.nx as i64 || j > self.ny as i64 {
            0.0
        } else {
            self.values[j as usize * (self.nx + 1) + i as usize]
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.rect.x0 + self.rect.width() * i as f64 / self.nx as f64,
            self.rect.y0 + self.rect.height() * j as f64 / self.ny as f64,
        )
    }
}

/// Discrete mollifier stencil for width `eps` on grid spacings `(hx, hy)`:
/// the standard radial bump sampled on grid offsets and normalized to unit
/// discrete mass.
pub fn mollifier_weights(eps: f64, hx: f64, hy: f64) -> Vec<(i64, i64, f64)> {
    let rx = (eps / hx).floor() as i64;
    let ry = (eps / hy).floor() as i64;
    let mut w = Vec::new();
    let mut mass = 0.0;
    for dj in -ry..=ry {
        for di in -rx..=rx {
            let t2 = ((di as f64 * hx) / eps).powi(2) + ((dj as f64 * hy) / eps).powi(2);
            if t2 < 1.0 {
                let v = (-1.0 / (1.0 - t2)).exp();
                w.push((di, dj, v));
                mass += v;
            }
        }
    }
    for entry in w.iter_mut() {
        entry.2 /= mass;
    }
    w
}

/// Discrete convolution of the zero-extended grid function with the
/// normalized mollifier.
pub fn mollify(g: &GridFn, eps: f64) -> Result<GridFn> {
    let diam = g.rect.diameter();
    if eps >= diam / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "mollifier width {eps} too large for domain diameter {diam}"
        )));
    }
    let (hx, hy) = g.spacing();
    let w = mollifier_weights(eps, hx, hy);
    let mut out = g.clone();
    for j in 0..=g.ny as i64 {
        for i in 0..=g.nx as i64 {
            let mut acc = 0.0;
            for &(di, dj, wv) in &w {
                acc += wv * g.value_ext(i - di, j - dj);
            }
            out.values[j as usize * (g.nx + 1) + i as usize] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, build_mesh_unchecked};
    use crate::green::{GreenKernel, GreenOperator, NyOpts};
    use crate::nodal::count_nodal_domains;

    #[test]
    fn closed_forms_vanish_on_boundary() {
        for ex in ClosedFormExample::all_standard() {
            let r = ex.domain;
            for t in 0..=40 {
                let s = t as f64 / 40.0;
                let pts = [
                    Point::new(r.x0 + r.width() * s, r.y0),
                    Point::new(r.x0 + r.width() * s, r.y1),
                    Point::new(r.x0, r.y0 + r.height() * s),
                    Point::new(r.x1, r.y0 + r.height() * s),
                ];
                for p in pts {
                    assert!(
                        ex.eval(p).abs() <= 1e-12,
                        "{} at ({}, {}): {}",
                        ex.name,
                        p.x,
                        p.y,
                        ex.eval(p)
                    );
                }
            }
        }
    }

    #[test]
    fn cross_closed_form_positive_inside() {
        let ex = ClosedFormExample::cross();
        assert!((ex.eval(Point::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
        for j in 1..20 {
            for i in 1..20 {
                let p = Point::new(-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64);
                if p.x.abs() < 1.0 && p.y.abs() < 1.0 {
                    assert!(ex.eval(p) > 0.0, "u({}, {}) = {}", p.x, p.y, ex.eval(p));
                }
            }
        }
    }

    #[test]
    fn closed_form_is_continuous_across_joins() {
        let ex = ClosedFormExample::multi_cross(3);
        for y in [-0.7, -0.2, 0.4, 0.9] {
            for join in [2.0, 4.0] {
                let left = ex.eval(Point::new(join - 1e-9, y));
                let right = ex.eval(Point::new(join + 1e-9, y));
                assert!((left - right).abs() < 1e-7, "jump at x={join}, y={y}");
                assert!(left.abs() < 1e-8, "nonzero on the nodal line");
            }
        }
    }

    #[test]
    fn weak_residual_cross_accepts_two_rejects_off_values() {
        let ex = ClosedFormExample::cross();
        let bumps = seeded_bumps(&ex, 8, 99);
        let at2 = weak_residual(&ex, 2.0, &bumps).unwrap();
        assert!(at2.max_residual <= 1e-6, "residual {}", at2.max_residual);
        let at21 = weak_residual(&ex, 2.1, &bumps).unwrap();
        assert!(
            at21.max_residual >= 10.0 * at2.max_residual.max(1e-12),
            "2.1 residual {} vs 2.0 residual {}",
            at21.max_residual,
            at2.max_residual
        );
    }

    #[test]
    fn weak_residual_zero_function_is_zero() {
        let ex = ClosedFormExample::cross();
        let bumps = seeded_bumps(&ex, 4, 7);
        let rep = weak_residual_of(
            |_| 0.0,
            |_| Point::new(0.0, 0.0),
            &ex.breaks_x(),
            &ex.breaks_y(),
            &ex.measure,
            2.0,
            &bumps,
        )
        .unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn weak_residual_double_and_multi_cross() {
        for ex in [ClosedFormExample::double_cross(), ClosedFormExample::multi_cross(3)] {
            let bumps = seeded_bumps(&ex, 6, 1234);
            let rep = weak_residual(&ex, 2.0, &bumps).unwrap();
            assert!(rep.max_residual <= 1e-6, "{}: {}", ex.name, rep.max_residual);
        }
    }

    #[test]
    fn sphere_average_of_harmonic_is_center_value() {
        let d = Domain::rect(-1.0, 1.0, -1.0, 1.0);
        for (cx, cy, r) in [(0.0, 0.0, 0.3), (0.4, -0.2, 0.2), (-0.5, 0.5, 0.25)] {
            let avg = sphere_average(d, |p| p.x, Point::new(cx, cy), r, 64).unwrap();
            assert!((avg - cx).abs() < 1e-12, "{avg} vs {cx}");
        }
        // Ball exiting the domain errors.
        assert!(sphere_average(d, |p| p.x, Point::new(0.9, 0.0), 0.3, 32).is_err());
    }

    #[test]
    fn sphere_averages_of_cross_eigenfunction_nonincreasing() {
        // The closed form solves -Δ_μ u = 2u with u > 0, so it is
        // μ-superharmonic and its sphere averages cannot grow with r.
        let ex = ClosedFormExample::cross();
        let d = Domain::Rect(ex.domain);
        let radii = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7];
        let mut prev = f64::INFINITY;
        for &r in &radii {
            let avg = sphere_average(d, |p| ex.eval(p), Point::new(0.0, 0.0), r, 256).unwrap();
            assert!(avg <= prev + 1e-12, "average rose at r={r}: {avg} > {prev}");
            prev = avg;
        }
    }

    #[test]
    fn sphere_averages_of_negated_potential_nondecreasing() {
        // u = -G_μ f with f >= 0 is μ-subharmonic: averages grow with r and
        // dominate the center value.
        let cross = cross_measure();
        let kernel = GreenKernel::Rectangle {
            rect: Rect::new(-1.0, 1.0, -1.0, 1.0),
            image_order: 6,
        };
        let op = GreenOperator::new(
            &kernel,
            &cross,
            NyOpts { nodes_per_segment: 96, ..Default::default() },
        )
        .unwrap();
        let f = |p: Point| 0.5 + p.x * p.x + 0.3 * (1.0 - p.y.abs());
        let fv = op.node_values(f);
        let u = |p: Point| -op.apply_vec(&fv, p).unwrap();
        let d = Domain::rect(-1.0, 1.0, -1.0, 1.0);
        for center in [Point::new(0.0, 0.0), Point::new(0.3, -0.2)] {
            let u_center = u(center);
            let mut prev = f64::NEG_INFINITY;
            for r in [0.05, 0.1, 0.2, 0.3, 0.5] {
                let avg = sphere_average(d, u, center, r, 128).unwrap();
                assert!(avg >= prev - 1e-9, "average fell at r={r}");
                assert!(avg >= u_center - 1e-9, "average below center value");
                prev = avg;
            }
        }
    }

    #[test]
    fn maximum_principle_examples() {
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let (interior, ring) = principle_grids(rect, 12, 0.1);

        // Harmonic linear function: both extremes on the ring.
        let rep = maximum_principle_check(|p| p.x, &interior, &ring, Harmonicity::Subharmonic, 1e-12);
        assert!(rep.ok);
        let rep =
            maximum_principle_check(|p| p.x, &interior, &ring, Harmonicity::Superharmonic, 1e-12);
        assert!(rep.ok);

        // The cross eigenfunction is superharmonic with boundary value 0:
        // its minimum lives at the boundary and the interior stays positive.
        let ex = ClosedFormExample::cross();
        let rep = maximum_principle_check(
            |p| ex.eval(p),
            &interior,
            &ring,
            Harmonicity::Superharmonic,
            1e-8,
        );
        assert!(rep.ok);
        assert!(rep.interior_extreme >= -1e-8);

        // u = -G_μ f, f >= 0 on the cross: subharmonic.
        let cross = cross_measure();
        let kernel = GreenKernel::Rectangle { rect, image_order: 6 };
        let op = GreenOperator::new(
            &kernel,
            &cross,
            NyOpts { nodes_per_segment: 64, ..Default::default() },
        )
        .unwrap();
        let fv = op.node_values(|p: Point| 1.0 + 0.5 * p.y * p.y + 0.2 * p.x.abs());
        let rep = maximum_principle_check(
            |p| -op.apply_vec(&fv, p).unwrap(),
            &interior,
            &ring,
            Harmonicity::Subharmonic,
            1e-8,
        );
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn mollifier_mass_is_one() {
        for (eps, h) in [(0.1, 0.02), (0.05, 0.01), (0.2, 0.05)] {
            let w = mollifier_weights(eps, h, h);
            let mass: f64 = w.iter().map(|e| e.2).sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mollify_preserves_constants_away_from_support_edge() {
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let g = GridFn::sample(rect, 64, 64, |_| 3.5);
        let eps = 0.1;
        let sm = mollify(&g, eps).unwrap();
        // Well inside (more than eps from the boundary) the convolution of a
        // constant is the constant.
        for j in 0..=64usize {
            for i in 0..=64usize {
                let p = g.point(i, j);
                if Domain::Rect(rect).boundary_dist(p) > eps + 0.05 {
                    assert!((sm.value(i, j) - 3.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mollify_converges_uniformly_for_continuous_u() {
        let ex = ClosedFormExample::cross();
        let rect = ex.domain;
        let g = GridFn::sample(rect, 128, 128, |p| ex.eval(p));
        let mut prev_err = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let sm = mollify(&g, eps).unwrap();
            let mut err = 0.0f64;
            for j in 0..=128usize {
                for i in 0..=128usize {
                    let p = g.point(i, j);
                    if Domain::Rect(rect).boundary_dist(p) > 0.25 {
                        err = err.max((sm.value(i, j) - ex.eval(p)).abs());
                    }
                }
            }
            assert!(err < prev_err * 0.8 + 1e-12, "eps={eps}: {err} vs {prev_err}");
            prev_err = err;
        }
    }

    #[test]
    fn closed_form_nodal_counts_on_mesh() {
        // Double cross: one vertical nodal line, two domains.
        let ex = ClosedFormExample::double_cross();
        let mesh = build_mesh(Domain::Rect(ex.domain), 64, 32, &ex.measure).unwrap();
        let u = ex.sample_dofs(&mesh);
        let c = count_nodal_domains(&mesh, &u, 1e-8).unwrap();
        assert_eq!(c.count, 2, "{c:?}");

        for n in [2usize, 3, 4] {
            let ex = ClosedFormExample::multi_cross(n);
            let mesh =
                build_mesh(Domain::Rect(ex.domain), 32 * n, 32, &ex.measure).unwrap();
            let u = ex.sample_dofs(&mesh);
            let c = count_nodal_domains(&mesh, &u, 1e-8).unwrap();
            assert_eq!(c.count, n, "multi_cross({n}): {c:?}");
        }
    }

    #[test]
    fn closed_form_matches_galerkin_first_eigenfunction() {
        // Cross at moderate resolution: normalized closed form against the
        // normalized discrete first eigenfunction, sup over the support.
        let ex = ClosedFormExample::cross();
        let mesh = build_mesh(Domain::Rect(ex.domain), 32, 32, &ex.measure).unwrap();
        let k = crate::fem::assemble_stiffness(&mesh);
        let m = crate::fem::assemble_measure_mass(&mesh, &ex.measure).unwrap();
        let spec = crate::spectral::solve(
            &k,
            &m,
            crate::spectral::SolveOpts { k: 1, ..Default::default() },
        )
        .unwrap();
        let uh = &spec.pairs[0].vector;
        let norm = ex.measure_norm();
        let mut worst = 0.0f64;
        for t in 0..=64 {
            let s = -1.0 + 2.0 * t as f64 / 64.0;
            for p in [Point::new(s, 0.0), Point::new(0.0, s)] {
                let want = ex.eval(p) / norm;
                let got = mesh.evaluate(uh, p).unwrap();
                worst = worst.max((want - got).abs());
            }
        }
        let peak = ex.eval(Point::new(0.0, 0.0)) / norm;
        assert!(worst <= 0.02 * peak, "sup diff {worst} vs peak {peak}");
    }

    #[test]
    fn orthogonality_of_multi_cross_form_to_first_eigenfunction() {
        // The closed form sits higher in the spectrum, so it must be
        // L²(μ)-orthogonal to the first eigenfunction.
        let ex = ClosedFormExample::multi_cross(2);
        let mesh = build_mesh(Domain::Rect(ex.domain), 64, 32, &ex.measure).unwrap();
        let k = crate::fem::assemble_stiffness(&mesh);
        let m = crate::fem::assemble_measure_mass(&mesh, &ex.measure).unwrap();
        let spec = crate::spectral::solve(
            &k,
            &m,
            crate::spectral::SolveOpts { k: 1, ..Default::default() },
        )
        .unwrap();
        let u1 = &spec.pairs[0].vector;
        let inner = integrate_on_measure(&ex.measure, &ex.breaks_x(), &ex.breaks_y(), |p| {
            ex.eval(p) * mesh.evaluate(u1, p).unwrap()
        });
        let norm = ex.measure_norm();
        assert!(
            inner.abs() <= 5e-3 * norm,
            "measure inner product {inner} (norm {norm})"
        );
    }

    #[test]
    fn mollify_rejects_oversized_width() {
        let g = GridFn::sample(Rect::new(0.0, 1.0, 0.0, 1.0), 16, 16, |_| 1.0);
        assert!(mollify(&g, 1.0).is_err());
        let _ = build_mesh_unchecked(Domain::rect(0.0, 1.0, 0.0, 1.0), 4, 4).unwrap();
    }
}
