//! Nodal domain counting for discrete eigenfunctions and the Courant-type
//! bound check.
//!
//! Interior vertices are labeled by sign against `tol = tol_rel * |u|_inf`;
//! unsigned vertices belong to no domain and never connect two domains.
//! Subdomains are connected components of same-sign vertices over the mesh
//! edge graph. Boundary vertices are excluded throughout.

use crate::error::{Error, Result};
use crate::fem::Mesh;
use crate::spectral::Spectrum;

/// Sign-component counts of one eigenfunction.
#[derive(Clone, Copy, Debug)]
pub struct NodalCount {
    /// Number of nodal domains (positive plus negative components).
    pub count: usize,
    pub positive: usize,
    pub negative: usize,
    /// Fraction of interior vertices with `|u| <= tol`.
    pub unsigned_fraction: f64,
}

/// Verdict for one pair against the bound `2 <= m <= n + r - 1` (and
/// sign-definiteness for `n = 1`).
#[derive(Clone, Copy, Debug)]
pub struct NodalReport {
    /// 1-based eigenvalue index.
    pub index: usize,
    pub count: usize,
    pub positive: usize,
    pub negative: usize,
    pub unsigned_fraction: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Upper bound `n + r - 1` used (0 for `n = 1`, where `m = 1` is
    /// required instead).
    pub bound_upper: usize,
}

impl NodalReport {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Count nodal domains of an interior-DOF vector.
pub fn count_nodal_domains(mesh: &Mesh, u: &[f64], tol_rel: f64) -> Result<NodalCount> {
    if u.len() != mesh.n_dofs() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match {} interior DOFs",
            u.len(),
            mesh.n_dofs()
        )));
    }
    let maxabs = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if maxabs == 0.0 {
        return Err(Error::Degenerate("all vertices unsigned (zero vector)".into()));
    }
    let tol = tol_rel * maxabs;

    // Sign labels on vertices: +1, -1 or 0; boundary counts as 0.
    let n_verts = mesh.n_vertices();
    let mut sign = vec![0i8; n_verts];
    let mut interior = 0usize;
    let mut unsigned = 0usize;
    for v in 0..n_verts {
        if mesh.is_boundary(v) {
            continue;
        }
        interior += 1;
        let val = mesh.dof_of_vertex(v).map(|d| u[d]).unwrap_or(0.0);
        if val > tol {
            sign[v] = 1;
        } else if val < -tol {
            sign[v] = -1;
        } else {
            unsigned += 1;
        }
    }
    if unsigned == interior {
        return Err(Error::Degenerate(
            "all interior vertices unsigned at this tolerance".into(),
        ));
    }

    // Union-find over same-sign edges.
    let mut parent: Vec<usize> = (0..n_verts).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for e in mesh.edges() {
        let (a, b) = (e[0], e[1]);
        if sign[a] != 0 && sign[a] == sign[b] {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut pos_roots = std::collections::BTreeSet::new();
    let mut neg_roots = std::collections::BTreeSet::new();
    for v in 0..n_verts {
        match sign[v] {
            1 => {
                let r = find(&mut parent, v);
                pos_roots.insert(r);
            }
            -1 => {
                let r = find(&mut parent, v);
                neg_roots.insert(r);
            }
            _ => {}
        }
    }
    Ok(NodalCount {
        count: pos_roots.len() + neg_roots.len(),
        positive: pos_roots.len(),
        negative: neg_roots.len(),
        unsigned_fraction: unsigned as f64 / interior.max(1) as f64,
    })
}

/// Check the computed spectrum against the nodal-domain bounds: the first
/// eigenfunction must be sign-definite (one domain), higher ones must split
/// the domain into at least 2 and at most `n + r - 1` subdomains, `r` being
/// the multiplicity cluster size.
pub fn verify_courant(spectrum: &Spectrum, counts: &[NodalCount]) -> Vec<NodalReport> {
    let mut out = Vec::with_capacity(counts.len());
    for (i, c) in counts.iter().enumerate() {
        let n = i + 1;
        let r = spectrum.multiplicity(i);
        let (lower_ok, upper_ok, bound_upper) = if n == 1 {
            (c.count == 1, c.count == 1, 0)
        } else {
            let bound = n + r - 1;
            (c.count >= 2, c.count <= bound, bound)
        };
        out.push(NodalReport {
            index: n,
            count: c.count,
            positive: c.positive,
            negative: c.negative,
            unsigned_fraction: c.unsigned_fraction,
            lower_ok,
            upper_ok,
            bound_upper,
        });
    }
    out
}

/// Smallest slack `n + r - 1 - m` over the indices `n >= 2`; negative means a
/// violated upper bound.
pub fn worst_margin(reports: &[NodalReport]) -> Option<i64> {
    reports
        .iter()
        .filter(|r| r.index >= 2)
        .map(|r| r.bound_upper as i64 - r.count as i64)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_measure_mass, assemble_stiffness, build_mesh};
    use crate::geom::{Domain, Point, Rect};
    use crate::measure::{Measure, MeasureComponent};
    use crate::spectral::{solve, SolveOpts};

    fn string_setup(n: usize, k: usize) -> (crate::fem::Mesh, Spectrum) {
        let m = Measure::new(
            Domain::interval(0.0, 1.0),
            vec![MeasureComponent::Area {
                rect: Rect::new(0.0, 1.0, 0.0, 0.0),
                weight: 1.0,
            }],
        )
        .unwrap();
        let mesh = build_mesh(Domain::interval(0.0, 1.0), n, 0, &m).unwrap();
        let kk = assemble_stiffness(&mesh);
        let mm = assemble_measure_mass(&mesh, &m).unwrap();
        let spec = solve(&kk, &mm, SolveOpts { k, ..Default::default() }).unwrap();
        (mesh, spec)
    }

    #[test]
    fn string_modes_have_n_domains() {
        let (mesh, spec) = string_setup(128, 8);
        for (i, pair) in spec.pairs.iter().enumerate() {
            let c = count_nodal_domains(&mesh, &pair.vector, 1e-8).unwrap();
            assert_eq!(c.count, i + 1, "mode {}", i + 1);
        }
        let counts: Vec<NodalCount> = spec
            .pairs
            .iter()
            .map(|p| count_nodal_domains(&mesh, &p.vector, 1e-8).unwrap())
            .collect();
        let reports = verify_courant(&spec, &counts);
        assert!(reports.iter().all(|r| r.ok()), "{reports:?}");
        assert!(worst_margin(&reports).unwrap() >= 0);
    }

    #[test]
    fn sign_definite_first_mode() {
        let (mesh, spec) = string_setup(64, 1);
        let c = count_nodal_domains(&mesh, &spec.pairs[0].vector, 1e-8).unwrap();
        assert_eq!(c.count, 1);
        assert!(c.positive == 1 && c.negative == 0);
    }

    #[test]
    fn forced_single_domain_fails_lower_bound_for_n2() {
        // Any n >= 2 report with m = 1 must fail the lower bound.
        let (mesh, spec) = string_setup(64, 2);
        let ones = vec![1.0; mesh.n_dofs()];
        let c1 = count_nodal_domains(&mesh, &spec.pairs[0].vector, 1e-8).unwrap();
        let c2 = count_nodal_domains(&mesh, &ones, 1e-8).unwrap();
        let reports = verify_courant(&spec, &[c1, c2]);
        assert!(reports[0].ok());
        assert!(!reports[1].lower_ok);
    }

    #[test]
    fn count_is_scale_invariant() {
        let (mesh, spec) = string_setup(96, 4);
        for pair in &spec.pairs {
            let base = count_nodal_domains(&mesh, &pair.vector, 1e-8).unwrap();
            for c in [-3.0, 0.1, 7.5] {
                let scaled: Vec<f64> = pair.vector.iter().map(|v| c * v).collect();
                let got = count_nodal_domains(&mesh, &scaled, 1e-8).unwrap();
                assert_eq!(got.count, base.count);
            }
        }
    }

    #[test]
    fn count_stable_across_tolerance_range() {
        let (mesh, spec) = string_setup(96, 5);
        for pair in &spec.pairs {
            let counts: Vec<usize> = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6]
                .iter()
                .map(|&t| count_nodal_domains(&mesh, &pair.vector, t).unwrap().count)
                .collect();
            assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
        }
    }

    #[test]
    fn zero_vector_is_an_error() {
        let (mesh, _) = string_setup(16, 1);
        let z = vec![0.0; mesh.n_dofs()];
        assert!(count_nodal_domains(&mesh, &z, 1e-8).is_err());
    }

    #[test]
    fn two_quadrant_pattern_in_2d() {
        // A vector positive for x < 0 and negative for x > 0, zero on the
        // x = 0 line: exactly two domains separated by unsigned vertices.
        let area = Measure::new(
            Domain::rect(-1.0, 1.0, -1.0, 1.0),
            vec![MeasureComponent::Area {
                rect: Rect::new(-1.0, 1.0, -1.0, 1.0),
                weight: 1.0,
            }],
        )
        .unwrap();
        let mesh = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), 8, 8, &area).unwrap();
        let mut u = vec![0.0; mesh.n_dofs()];
        for d in 0..mesh.n_dofs() {
            let p: Point = mesh.vertex(mesh.vertex_of_dof(d));
            u[d] = if p.x.abs() < 1e-12 { 0.0 } else { -p.x };
        }
        let c = count_nodal_domains(&mesh, &u, 1e-8).unwrap();
        assert_eq!(c.count, 2);
        assert_eq!(c.positive, 1);
        assert_eq!(c.negative, 1);
        assert!(c.unsigned_fraction > 0.0);
    }
}
