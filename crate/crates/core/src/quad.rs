//! Gauss-Legendre quadrature rules and composite helpers.

/// A Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Rule with `n` nodes, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` with a single pane of this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }

    /// Integrate `f` over `[a, b]` split into `cells` equal panes.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        cells: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / cells as f64;
        let mut total = 0.0;
        for c in 0..cells {
            total += self.integrate(a + c as f64 * h, a + (c + 1) as f64 * h, &mut f);
        }
        total
    }

    /// Nodes and weights for `[a, b]` split into `cells` equal panes.
    pub fn points_composite(&self, a: f64, b: f64, cells: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / cells as f64;
        let mut out = Vec::with_capacity(cells * self.nodes.len());
        for c in 0..cells {
            let lo = a + c as f64 * h;
            let half = 0.5 * h;
            let mid = lo + half;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * t, w * half));
            }
        }
        out
    }

    /// Tensor-product integration of `f` over a rectangle, `cells x cells` panes.
    pub fn integrate_rect<F: FnMut(f64, f64) -> f64>(
        &self,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        cells_x: usize,
        cells_y: usize,
        mut f: F,
    ) -> f64 {
        let xs = self.points_composite(x0, x1, cells_x);
        let ys = self.points_composite(y0, y1, cells_y);
        let mut total = 0.0;
        for &(y, wy) in &ys {
            for &(x, wx) in &xs {
                total += wx * wy * f(x, y);
            }
        }
        total
    }
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        // n-node Gauss is exact up to degree 2n-1.
        for n in 1..=12 {
            let rule = GaussRule::new(n);
            for deg in 0..=(2 * n - 1) {
                let exact = (3.0f64.powi(deg as i32 + 1) - 1.0) / (deg as f64 + 1.0);
                let got = rule.integrate(1.0, 3.0, |x| x.powi(deg as i32));
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "n={n} deg={deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn composite_handles_kinks() {
        // |x| on [-1,1] with an even number of cells is integrated exactly.
        let rule = GaussRule::new(4);
        let got = rule.integrate_composite(-1.0, 1.0, 8, |x| x.abs());
        assert!((got - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_rectangle() {
        let rule = GaussRule::new(4);
        let got = rule.integrate_rect(0.0, 1.0, 0.0, 2.0, 2, 2, |x, y| x * y * y);
        assert!((got - 0.5 * 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in 1..=16 {
            let rule = GaussRule::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
        }
    }
}
