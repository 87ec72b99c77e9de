//! Finite positive Borel measures assembled from weighted components.
//!
//! A measure is a list of components living inside the closure of the
//! configured domain: full-dimensional Lebesgue pieces (`Area`), axis-aligned
//! line pieces (`Segment`), point masses (`Atom`) and self-similar measures
//! (`Ifs`) realized by depth-k atomization. Integration against the measure is
//! component-wise quadrature: tensor Gauss on areas, composite Gauss along
//! segments, point evaluation on atoms.

use crate::error::{Error, Result};
use crate::geom::{Domain, Point, Rect};
use crate::quad::GaussRule;

/// An affine contraction `p -> scale * R(rot) * p + t`.
///
/// One-dimensional maps ignore `rot` and the `y` translation; a negative
/// `scale` encodes an orientation flip.
#[derive(Clone, Copy, Debug)]
pub struct Similarity {
    pub scale: f64,
    pub rot: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Similarity {
    pub fn new_1d(scale: f64, tx: f64) -> Self {
        Similarity { scale, rot: 0.0, tx, ty: 0.0 }
    }

    pub fn new_2d(scale: f64, rot: f64, tx: f64, ty: f64) -> Self {
        Similarity { scale, rot, tx, ty }
    }

    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.rot.sin_cos();
        Point::new(
            self.scale * (c * p.x - s * p.y) + self.tx,
            self.scale * (s * p.x + c * p.y) + self.ty,
        )
    }

    /// Fixed point of the contraction.
    pub fn fixed_point(&self) -> Point {
        // Solve p = S(p) for the 2x2 affine map.
        let (s, c) = self.rot.sin_cos();
        let a = self.scale * c;
        let b = -self.scale * s;
        let d = self.scale * s;
        let e = self.scale * c;
        // (I - A) p = t
        let m00 = 1.0 - a;
        let m01 = -b;
        let m10 = -d;
        let m11 = 1.0 - e;
        let det = m00 * m11 - m01 * m10;
        Point::new(
            (self.tx * m11 - m01 * self.ty) / det,
            (m00 * self.ty - self.tx * m10) / det,
        )
    }
}

/// One building block of a measure.
#[derive(Clone, Debug)]
pub enum MeasureComponent {
    /// `weight` times Lebesgue measure on a rectangle (an interval in 1D,
    /// where the `y` extent is ignored).
    Area { rect: Rect, weight: f64 },
    /// `weight` times 1-dimensional Lebesgue measure on an axis-aligned
    /// segment.
    Segment { a: Point, b: Point, weight: f64 },
    /// Point mass of size `weight`.
    Atom { point: Point, weight: f64 },
    /// Self-similar measure for an iterated function system, realized as
    /// `maps.len()^depth` atoms: each word w of length `depth` contributes one
    /// atom at `S_w(anchor)` with weight `weight * prod(probs)`. The anchor is
    /// the mean of the maps' fixed points.
    Ifs {
        maps: Vec<Similarity>,
        probs: Vec<f64>,
        depth: u32,
        weight: f64,
    },
}

impl MeasureComponent {
    pub fn weight(&self) -> f64 {
        match self {
            MeasureComponent::Area { weight, .. }
            | MeasureComponent::Segment { weight, .. }
            | MeasureComponent::Atom { weight, .. }
            | MeasureComponent::Ifs { weight, .. } => *weight,
        }
    }

    fn mass(&self, dim: usize) -> f64 {
        match self {
            MeasureComponent::Area { rect, weight } => {
                if dim == 1 {
                    weight * rect.width()
                } else {
                    weight * rect.area()
                }
            }
            MeasureComponent::Segment { a, b, weight } => weight * a.dist(*b),
            MeasureComponent::Atom { weight, .. } => *weight,
            MeasureComponent::Ifs { weight, .. } => *weight,
        }
    }
}

/// Quadrature accuracy knobs for integration against the measure.
#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    /// Composite cells along each segment.
    pub segment_cells: usize,
    /// Composite cells per axis on each area component.
    pub area_cells: usize,
    /// Gauss nodes per cell (exact degree `2n - 1` per cell).
    pub gauss_order: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts { segment_cells: 128, area_cells: 32, gauss_order: 4 }
    }
}

/// A finite positive Borel measure on the closure of `domain`.
#[derive(Clone, Debug)]
pub struct Measure {
    domain: Domain,
    components: Vec<MeasureComponent>,
}

impl Measure {
    pub fn new(domain: Domain, components: Vec<MeasureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("no components".into()));
        }
        let dim = domain.dim();
        let tol = 1e-12 * domain.diameter().max(1.0);
        for (i, c) in components.iter().enumerate() {
            if !(c.weight() > 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "component {i}: weight must be positive, got {}",
                    c.weight()
                )));
            }
            match c {
                MeasureComponent::Area { rect, .. } => {
                    if rect.x1 <= rect.x0 || (dim == 2 && rect.y1 <= rect.y0) {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: degenerate area rectangle"
                        )));
                    }
                    let corners = [
                        Point::new(rect.x0, rect.y0),
                        Point::new(rect.x1, if dim == 1 { 0.0 } else { rect.y1 }),
                    ];
                    for p in corners {
                        if !domain.contains_closed(p, tol) {
                            return Err(Error::InvalidMeasure(format!(
                                "component {i}: area extends outside the domain closure"
                            )));
                        }
                    }
                }
                MeasureComponent::Segment { a, b, .. } => {
                    let dx = (a.x - b.x).abs() > tol;
                    let dy = (a.y - b.y).abs() > tol;
                    if dim == 1 {
                        if dy || a.y.abs() > tol || b.y.abs() > tol {
                            return Err(Error::InvalidMeasure(format!(
                                "component {i}: 1D segments must lie on the axis"
                            )));
                        }
                        if !dx {
                            return Err(Error::InvalidMeasure(format!(
                                "component {i}: degenerate segment"
                            )));
                        }
                    } else if dx == dy {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: segment endpoints must differ in exactly one \
                             coordinate (axis-aligned); oblique segments are not supported"
                        )));
                    }
                    if !domain.contains_closed(*a, tol) || !domain.contains_closed(*b, tol) {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: segment extends outside the domain closure"
                        )));
                    }
                }
                MeasureComponent::Atom { point, .. } => {
                    if !domain.contains_closed(*point, tol) {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: atom outside the domain closure"
                        )));
                    }
                }
                MeasureComponent::Ifs { maps, probs, depth, .. } => {
                    if maps.is_empty() || maps.len() != probs.len() {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: need matching, nonempty maps and probabilities"
                        )));
                    }
                    if *depth < 1 {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: atomization depth must be at least 1"
                        )));
                    }
                    let s: f64 = probs.iter().sum();
                    if (s - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p <= 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: probabilities must be positive and sum to 1 (sum {s})"
                        )));
                    }
                    if maps.iter().any(|m| m.scale.abs() >= 1.0 || m.scale == 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "component {i}: maps must be contractions (0 < |scale| < 1)"
                        )));
                    }
                    for p in atomize(maps, probs, *depth, 1.0) {
                        if !domain.contains_closed(p.0, 1e-6 * domain.diameter().max(1.0)) {
                            return Err(Error::InvalidMeasure(format!(
                                "component {i}: IFS attractor leaves the domain closure at \
                                 ({}, {})",
                                p.0.x, p.0.y
                            )));
                        }
                    }
                }
            }
        }
        let m = Measure { domain, components };
        if !(m.total_mass() > 0.0) {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        if !m.touches_open_domain(tol) {
            return Err(Error::InvalidMeasure(
                "no component intersects the open domain".into(),
            ));
        }
        Ok(m)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn components(&self) -> &[MeasureComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn touches_open_domain(&self, tol: f64) -> bool {
        self.components.iter().any(|c| match c {
            MeasureComponent::Area { rect, .. } => {
                self.domain.contains_open(rect.center())
                    || self.domain.contains_open(Point::new(
                        0.5 * (rect.x0 + rect.x1),
                        if self.dim() == 1 { 0.0 } else { 0.5 * (rect.y0 + rect.y1) },
                    ))
            }
            MeasureComponent::Segment { a, b, .. } => self
                .domain
                .contains_open(Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y))),
            MeasureComponent::Atom { point, .. } => self.domain.contains_open(*point),
            MeasureComponent::Ifs { maps, probs, depth, .. } => {
                atomize(maps, probs, *depth, 1.0)
                    .iter()
                    .any(|(p, _)| self.domain.contains_closed(*p, tol))
            }
        })
    }

    /// Total mass of the measure.
    pub fn total_mass(&self) -> f64 {
        let dim = self.dim();
        self.components.iter().map(|c| c.mass(dim)).sum()
    }

    /// Integrate `f` against the measure with default quadrature.
    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> Result<f64> {
        self.integrate_with(QuadOpts::default(), f)
    }

    /// Integrate `f` against the measure.
    ///
    /// Evaluation failures (non-finite values) on the support are reported
    /// with the offending point.
    pub fn integrate_with<F: Fn(Point) -> f64>(&self, opts: QuadOpts, f: F) -> Result<f64> {
        let mut total = 0.0;
        for (p, w) in self.quadrature_points(opts) {
            let v = f(p);
            if !v.is_finite() {
                return Err(Error::Eval {
                    x: p.x,
                    y: p.y,
                    reason: format!("integrand returned {v}"),
                });
            }
            total += w * v;
        }
        Ok(total)
    }

    /// Quadrature points and weights realizing `integrate_with`.
    pub fn quadrature_points(&self, opts: QuadOpts) -> Vec<(Point, f64)> {
        let rule = GaussRule::new(opts.gauss_order);
        let dim = self.dim();
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                MeasureComponent::Area { rect, weight } => {
                    if dim == 1 {
                        for (x, w) in rule.points_composite(rect.x0, rect.x1, opts.area_cells) {
                            out.push((Point::new(x, 0.0), weight * w));
                        }
                    } else {
                        let xs = rule.points_composite(rect.x0, rect.x1, opts.area_cells);
                        let ys = rule.points_composite(rect.y0, rect.y1, opts.area_cells);
                        for &(y, wy) in &ys {
                            for &(x, wx) in &xs {
                                out.push((Point::new(x, y), weight * wx * wy));
                            }
                        }
                    }
                }
                MeasureComponent::Segment { a, b, weight } => {
                    let horizontal = (a.y - b.y).abs() <= (a.x - b.x).abs();
                    if horizontal {
                        let (lo, hi) = (a.x.min(b.x), a.x.max(b.x));
                        for (x, w) in rule.points_composite(lo, hi, opts.segment_cells) {
                            out.push((Point::new(x, a.y), weight * w));
                        }
                    } else {
                        let (lo, hi) = (a.y.min(b.y), a.y.max(b.y));
                        for (y, w) in rule.points_composite(lo, hi, opts.segment_cells) {
                            out.push((Point::new(a.x, y), weight * w));
                        }
                    }
                }
                MeasureComponent::Atom { point, weight } => out.push((*point, *weight)),
                MeasureComponent::Ifs { maps, probs, depth, weight } => {
                    out.extend(atomize(maps, probs, *depth, *weight));
                }
            }
        }
        out
    }

    /// Exact measure of the ball `B_r(center)`, computed per component.
    pub fn ball_mass(&self, center: Point, r: f64) -> f64 {
        let dim = self.dim();
        let mut total = 0.0;
        for c in &self.components {
            total += match c {
                MeasureComponent::Area { rect, weight } => {
                    if dim == 1 {
                        let lo = rect.x0.max(center.x - r);
                        let hi = rect.x1.min(center.x + r);
                        weight * (hi - lo).max(0.0)
                    } else {
                        weight * disk_rect_area(center, r, *rect)
                    }
                }
                MeasureComponent::Segment { a, b, weight } => {
                    weight * segment_chord_length(center, r, *a, *b)
                }
                MeasureComponent::Atom { point, weight } => {
                    if center.dist(*point) <= r {
                        *weight
                    } else {
                        0.0
                    }
                }
                MeasureComponent::Ifs { maps, probs, depth, weight } => {
                    atomize(maps, probs, *depth, *weight)
                        .iter()
                        .filter(|(p, _)| center.dist(*p) <= r)
                        .map(|(_, w)| *w)
                        .sum()
                }
            };
        }
        total
    }

    /// Default centers for the dimension estimator: component corner points
    /// plus a coarse sample of support points.
    pub fn dim_centers(&self) -> Vec<Point> {
        let mut pts = Vec::new();
        for c in &self.components {
            match c {
                MeasureComponent::Area { rect, .. } => {
                    pts.push(Point::new(rect.x0, rect.y0));
                    pts.push(Point::new(rect.x1, rect.y1));
                    pts.push(rect.center());
                }
                MeasureComponent::Segment { a, b, .. } => {
                    pts.push(*a);
                    pts.push(*b);
                    for k in 1..8 {
                        let t = k as f64 / 8.0;
                        pts.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
                    }
                }
                MeasureComponent::Atom { point, .. } => pts.push(*point),
                MeasureComponent::Ifs { maps, probs, depth, .. } => {
                    // Centers must lie on the atomized support; anchor points
                    // of shallower words can fall into gaps of the attractor.
                    let atoms = atomize(maps, probs, (*depth).min(12), 1.0);
                    let stride = atoms.len().div_ceil(512).max(1);
                    pts.extend(atoms.iter().step_by(stride).map(|(p, _)| *p));
                }
            }
        }
        // Segment intersections concentrate mass; add pairwise crossings.
        let segs: Vec<(Point, Point)> = self
            .components
            .iter()
            .filter_map(|c| match c {
                MeasureComponent::Segment { a, b, .. } => Some((*a, *b)),
                _ => None,
            })
            .collect();
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                if let Some(p) = axis_segment_crossing(segs[i], segs[j]) {
                    pts.push(p);
                }
            }
        }
        pts
    }

    /// Estimate of the lower L-infinity dimension: least-squares slope of
    /// `ln(sup_x mass(B_delta(x)))` against `ln delta`.
    pub fn estimate_dim_inf(&self, deltas: &[f64], centers: &[Point]) -> Result<DimInfEstimate> {
        if deltas.len() < 4 {
            return Err(Error::InvalidArgument(
                "dimension estimate needs at least 4 radii".into(),
            ));
        }
        if deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|&d| d <= 0.0) {
            return Err(Error::InvalidArgument(
                "radii must be positive and strictly decreasing".into(),
            ));
        }
        if centers.is_empty() {
            return Err(Error::InvalidArgument("empty support sample".into()));
        }
        let mut per_delta = Vec::with_capacity(deltas.len());
        for &d in deltas {
            let sup = centers
                .iter()
                .map(|&c| self.ball_mass(c, d))
                .fold(0.0f64, f64::max);
            if sup <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "no sampled ball of radius {d} carries mass; sample the support"
                )));
            }
            per_delta.push((d, sup));
        }
        let slope = log_log_slope(&per_delta);
        let hypothesis_violated = slope <= self.dim() as f64 - 2.0;
        Ok(DimInfEstimate { slope, per_delta, hypothesis_violated })
    }

    /// Default radii `2^-3 .. 2^-10`.
    pub fn default_dim_radii() -> Vec<f64> {
        (3..=10).map(|k| 2.0f64.powi(-k)).collect()
    }
}

/// Diagnostics of the log-log regression behind `estimate_dim_inf`.
#[derive(Clone, Debug)]
pub struct DimInfEstimate {
    /// Fitted slope, the dimension estimate.
    pub slope: f64,
    /// Per-radius largest ball mass.
    pub per_delta: Vec<(f64, f64)>,
    /// Set when the estimate fails `dim > d - 2`.
    pub hypothesis_violated: bool,
}

fn log_log_slope(per_delta: &[(f64, f64)]) -> f64 {
    let n = per_delta.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(d, m) in per_delta {
        let x = d.ln();
        let y = m.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Depth-k atomization of an IFS: one atom per word.
pub fn atomize(
    maps: &[Similarity],
    probs: &[f64],
    depth: u32,
    weight: f64,
) -> Vec<(Point, f64)> {
    let anchor = {
        let mut x = 0.0;
        let mut y = 0.0;
        for m in maps {
            let f = m.fixed_point();
            x += f.x;
            y += f.y;
        }
        Point::new(x / maps.len() as f64, y / maps.len() as f64)
    };
    let mut frontier = vec![(anchor, weight)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * maps.len());
        for &(p, w) in &frontier {
            for (m, &q) in maps.iter().zip(probs) {
                next.push((m.apply(p), w * q));
            }
        }
        frontier = next;
    }
    frontier
}

/// Length of the chord `segment intersect B_r(center)` for an axis-aligned
/// segment.
fn segment_chord_length(center: Point, r: f64, a: Point, b: Point) -> f64 {
    let horizontal = (a.y - b.y).abs() <= (a.x - b.x).abs();
    let (off, lo, hi, c) = if horizontal {
        (center.y - a.y, a.x.min(b.x), a.x.max(b.x), center.x)
    } else {
        (center.x - a.x, a.y.min(b.y), a.y.max(b.y), center.y)
    };
    if off.abs() > r {
        return 0.0;
    }
    let half = (r * r - off * off).sqrt();
    let lo_i = lo.max(c - half);
    let hi_i = hi.min(c + half);
    (hi_i - lo_i).max(0.0)
}

/// Area of `B_r(center) intersect rect`, via a 1D slice integral.
fn disk_rect_area(center: Point, r: f64, rect: Rect) -> f64 {
    let lo = rect.x0.max(center.x - r);
    let hi = rect.x1.min(center.x + r);
    if lo >= hi {
        return 0.0;
    }
    // Composite Simpson; the integrand is continuous with a few kinks.
    let n = 4096;
    let h = (hi - lo) / n as f64;
    let slice = |x: f64| -> f64 {
        let dx = x - center.x;
        let s = (r * r - dx * dx).max(0.0).sqrt();
        let top = rect.y1.min(center.y + s);
        let bot = rect.y0.max(center.y - s);
        (top - bot).max(0.0)
    };
    let mut acc = slice(lo) + slice(hi);
    for k in 1..n {
        let x = lo + k as f64 * h;
        acc += slice(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Crossing point of two axis-aligned segments, if any.
fn axis_segment_crossing(s1: (Point, Point), s2: (Point, Point)) -> Option<Point> {
    let horiz = |s: &(Point, Point)| (s.0.y - s.1.y).abs() <= (s.0.x - s.1.x).abs();
    let (h, v) = match (horiz(&s1), horiz(&s2)) {
        (true, false) => (s1, s2),
        (false, true) => (s2, s1),
        _ => return None,
    };
    let (hx0, hx1) = (h.0.x.min(h.1.x), h.0.x.max(h.1.x));
    let (vy0, vy1) = (v.0.y.min(v.1.y), v.0.y.max(v.1.y));
    let p = Point::new(v.0.x, h.0.y);
    if p.x >= hx0 && p.x <= hx1 && p.y >= vy0 && p.y <= vy1 {
        Some(p)
    } else {
        None
    }
}

/// The plus-shaped measure on `(-1,1)^2`: unit-weight 1D Lebesgue measures on
/// the two coordinate axes.
pub fn cross_measure() -> Measure {
    let domain = Domain::rect(-1.0, 1.0, -1.0, 1.0);
    Measure::new(
        domain,
        vec![
            MeasureComponent::Segment {
                a: Point::new(-1.0, 0.0),
                b: Point::new(1.0, 0.0),
                weight: 1.0,
            },
            MeasureComponent::Segment {
                a: Point::new(0.0, -1.0),
                b: Point::new(0.0, 1.0),
                weight: 1.0,
            },
        ],
    )
    .expect("cross measure is valid")
}

/// Chain of `n` crosses on `(0, 2n) x (-1, 1)`: a horizontal line on `y = 0`
/// plus vertical lines at odd integers.
pub fn multi_cross_measure(n: usize) -> Measure {
    assert!(n >= 1);
    let domain = Domain::rect(0.0, 2.0 * n as f64, -1.0, 1.0);
    let mut comps = vec![MeasureComponent::Segment {
        a: Point::new(0.0, 0.0),
        b: Point::new(2.0 * n as f64, 0.0),
        weight: 1.0,
    }];
    for i in 1..=n {
        let x = 2.0 * i as f64 - 1.0;
        comps.push(MeasureComponent::Segment {
            a: Point::new(x, -1.0),
            b: Point::new(x, 1.0),
            weight: 1.0,
        });
    }
    Measure::new(domain, comps).expect("multi-cross measure is valid")
}

/// Two mirrored crosses on `(-2, 2) x (-1, 1)`: a horizontal line on `y = 0`
/// plus vertical lines at `x = -1` and `x = 1`.
pub fn double_cross_measure() -> Measure {
    let domain = Domain::rect(-2.0, 2.0, -1.0, 1.0);
    Measure::new(
        domain,
        vec![
            MeasureComponent::Segment {
                a: Point::new(-2.0, 0.0),
                b: Point::new(2.0, 0.0),
                weight: 1.0,
            },
            MeasureComponent::Segment {
                a: Point::new(-1.0, -1.0),
                b: Point::new(-1.0, 1.0),
                weight: 1.0,
            },
            MeasureComponent::Segment {
                a: Point::new(1.0, -1.0),
                b: Point::new(1.0, 1.0),
                weight: 1.0,
            },
        ],
    )
    .expect("double-cross measure is valid")
}
