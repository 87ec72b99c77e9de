//! Shared geometric primitives: points, rectangles and computational domains.

/// A point in the plane. One-dimensional structures keep `y = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains_open(&self, p: Point) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    pub fn contains_closed(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x0 - tol && p.x <= self.x1 + tol && p.y >= self.y0 - tol && p.y <= self.y1 + tol
    }

    /// Distance from `p` to the boundary, positive inside.
    pub fn boundary_dist(&self, p: Point) -> f64 {
        let dx = (p.x - self.x0).min(self.x1 - p.x);
        let dy = (p.y - self.y0).min(self.y1 - p.y);
        dx.min(dy)
    }
}

/// The computational domain: an open interval or an open axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rect(Rect),
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { a, b }
    }

    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Domain::Rect(Rect::new(x0, x1, y0, y1))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rect(_) => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => b - a,
            Domain::Rect(r) => r.diameter(),
        }
    }

    /// Bounding rectangle; degenerate (`y0 = y1 = 0`) for intervals.
    pub fn bounding_rect(&self) -> Rect {
        match self {
            Domain::Interval { a, b } => Rect::new(*a, *b, 0.0, 0.0),
            Domain::Rect(r) => *r,
        }
    }

    pub fn contains_open(&self, p: Point) -> bool {
        match self {
            Domain::Interval { a, b } => p.x > *a && p.x < *b,
            Domain::Rect(r) => r.contains_open(p),
        }
    }

    pub fn contains_closed(&self, p: Point, tol: f64) -> bool {
        match self {
            Domain::Interval { a, b } => p.x >= a - tol && p.x <= b + tol,
            Domain::Rect(r) => r.contains_closed(p, tol),
        }
    }

    /// Distance from `p` to the boundary, positive inside, negative outside.
    pub fn boundary_dist(&self, p: Point) -> f64 {
        match self {
            Domain::Interval { a, b } => (p.x - a).min(b - p.x),
            Domain::Rect(r) => r.boundary_dist(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_basics() {
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0);
        assert_eq!(r.area(), 4.0);
        assert_eq!(r.center(), Point::new(0.0, 0.0));
        assert!(r.contains_open(Point::new(0.5, -0.5)));
        assert!(!r.contains_open(Point::new(1.0, 0.0)));
        assert!(r.contains_closed(Point::new(1.0, 0.0), 0.0));
    }

    #[test]
    fn domain_boundary_dist() {
        let d = Domain::rect(0.0, 2.0, 0.0, 1.0);
        assert_eq!(d.boundary_dist(Point::new(1.0, 0.5)), 0.5);
        assert_eq!(d.boundary_dist(Point::new(0.25, 0.5)), 0.25);
        let i = Domain::interval(0.0, 1.0);
        assert_eq!(i.boundary_dist(Point::new(0.1, 0.0)), 0.1);
    }
}
