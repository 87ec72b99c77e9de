//! Generalized eigensolver for `K u = λ M u` with SPD stiffness `K` and
//! positive-semidefinite (often singular) measure mass `M`.
//!
//! The problem is solved in flipped form `M x = ν K x`: the operator
//! `A = K⁻¹ M` is self-adjoint in the K-inner product, its largest
//! eigenvalues `ν` are the smallest `λ = 1/ν`, and the kernel of `M` is swept
//! into `ν = 0` where a floor cutoff removes it — no basis for the
//! orthogonal complement is ever formed. `K` is factored once (banded
//! Cholesky) and a blocked subspace iteration with Rayleigh-Ritz extraction
//! runs on `A`; a dense solver covers small problems and doubles as the
//! brute-force oracle for the iterative path.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::SparseSymMatrix;
use crate::rng::Rng;

/// Solver configuration.
#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    /// Number of eigenpairs requested.
    pub k: usize,
    /// Relative residual tolerance `|K u - λ M u| / |K u|`.
    pub tol: f64,
    /// Iteration cap for the blocked subspace iteration.
    pub max_iter: usize,
    /// Relative gap splitting multiplicity clusters.
    pub cluster_tol: f64,
    /// Seed for the start block.
    pub seed: u64,
    /// Problems up to this size use the dense path.
    pub dense_threshold: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            k: 6,
            tol: 1e-8,
            max_iter: 800,
            cluster_tol: 1e-3,
            seed: 42,
            dense_threshold: 2000,
        }
    }
}

/// One computed eigenpair, `L²(μ)`-normalized (`uᵀ M u = 1`), with the sign
/// fixed so the first significantly nonzero DOF is positive.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `|K u - λ M u| / |K u|`.
    pub residual: f64,
    pub cluster_id: usize,
}

/// A multiplicity cluster of nearby eigenvalues.
#[derive(Clone, Copy, Debug)]
pub struct Cluster {
    /// Index of the first member in `pairs`.
    pub start: usize,
    pub size: usize,
    /// Mean eigenvalue of the members.
    pub lambda: f64,
}

/// Ordered spectrum `0 < λ_1 ≤ λ_2 ≤ …` with multiplicity clusters.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub clusters: Vec<Cluster>,
    /// Ritz directions discarded by the `ν ≤ ν_floor` kernel cutoff.
    pub kernel_directions_excluded: usize,
    /// Requested eigenpair count.
    pub requested: usize,
    /// Set when fewer than `requested` pairs exist (`k` exceeds the rank of
    /// `M`); all available pairs are returned.
    pub rank_deficient: bool,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// Multiplicity (cluster size) of the eigenvalue at pair index `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.clusters[self.pairs[i].cluster_id].size
    }
}

/// Relative floor under which flipped eigenvalues `ν` count as the discrete
/// kernel of `M`.
fn nu_floor(m_mat: &SparseSymMatrix) -> f64 {
    1e-12 * m_mat.norm_inf().max(f64::MIN_POSITIVE)
}

/// Solve for the `k` smallest eigenvalues; dispatches to the dense path for
/// small problems and the blocked iteration otherwise.
pub fn solve(k_mat: &SparseSymMatrix, m_mat: &SparseSymMatrix, opts: SolveOpts) -> Result<Spectrum> {
    if opts.k < 1 {
        return Err(Error::InvalidArgument("requested eigenpair count must be >= 1".into()));
    }
    if k_mat.dim() != m_mat.dim() {
        return Err(Error::InvalidArgument("matrix dimensions differ".into()));
    }
    if k_mat.dim() <= opts.dense_threshold {
        solve_dense(k_mat, m_mat, opts)
    } else {
        solve_iterative(k_mat, m_mat, opts)
    }
}

/// Dense brute-force path: Cholesky of `K`, full symmetric eigendecomposition
/// of `L⁻¹ M L⁻ᵀ`.
pub fn solve_dense(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    opts: SolveOpts,
) -> Result<Spectrum> {
    let n = k_mat.dim();
    let kd = k_mat.to_dense();
    let md = m_mat.to_dense();
    let chol = kd
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
    let l = chol.l();
    // C = L⁻¹ M L⁻ᵀ, same spectrum as the flipped pencil.
    let y = l
        .solve_lower_triangular(&md)
        .ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?
        .transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let floor = nu_floor(m_mat);
    let mut thetas = Vec::new();
    let mut vectors = Vec::new();
    let mut excluded = 0usize;
    for &i in &order {
        let theta = eig.eigenvalues[i];
        if theta <= floor {
            excluded += 1;
            continue;
        }
        if thetas.len() >= opts.k {
            continue;
        }
        let q = eig.eigenvectors.column(i).into_owned();
        // x = L⁻ᵀ q maps back to the pencil eigenvector.
        let x = l
            .transpose()
            .solve_upper_triangular(&q)
            .ok_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 })?;
        thetas.push(theta);
        vectors.push(x.iter().copied().collect::<Vec<f64>>());
    }
    finalize(k_mat, m_mat, thetas, vectors, excluded, opts)
}

/// Blocked subspace iteration on `A = K⁻¹ M` in the K-inner product.
pub fn solve_iterative(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    opts: SolveOpts,
) -> Result<Spectrum> {
    let chol = BandedCholesky::factor(k_mat)?;
    let block = (opts.k + 5).min(k_mat.dim());
    let (ritz, excluded) =
        subspace_iterate(k_mat, m_mat, &chol, block, opts.k, &[], opts)?;
    let thetas: Vec<f64> = ritz.iter().map(|(t, _)| *t).collect();
    let vectors: Vec<Vec<f64>> = ritz.into_iter().map(|(_, v)| v).collect();
    finalize(k_mat, m_mat, thetas, vectors, excluded, opts)
}

/// Rayleigh quotient `uᵀ K u / uᵀ M u`.
pub fn rayleigh_quotient(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    u: &[f64],
) -> Result<f64> {
    let denom = m_mat.quad_form(u, u);
    let scale = m_mat.norm_inf() * u.iter().map(|v| v * v).sum::<f64>();
    if denom <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate(
            "vector lies in the discrete kernel of the measure mass matrix".into(),
        ));
    }
    Ok(k_mat.quad_form(u, u) / denom)
}

/// Minimum Rayleigh quotient over the discrete space M-orthogonal to the
/// first `n - 1` computed eigenvectors, by deflated iteration.
pub fn constrained_min_check(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    spectrum: &Spectrum,
    n: usize,
    opts: SolveOpts,
) -> Result<f64> {
    if n < 1 || n > spectrum.pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "constraint level {n} out of range 1..={}",
            spectrum.pairs.len()
        )));
    }
    let deflate: Vec<&[f64]> = spectrum.pairs[..n - 1]
        .iter()
        .map(|p| p.vector.as_slice())
        .collect();
    let chol = BandedCholesky::factor(k_mat)?;
    let block = 4.min(k_mat.dim());
    let (ritz, _) = subspace_iterate(k_mat, m_mat, &chol, block, 1, &deflate, opts)?;
    let (theta, u) = ritz
        .first()
        .ok_or_else(|| Error::Degenerate("no eigenvalue above the kernel floor".into()))?;
    debug_assert!(*theta > 0.0);
    rayleigh_quotient(k_mat, m_mat, u)
}

/// Core iteration: returns converged Ritz pairs `(ν, x)` sorted by decreasing
/// `ν > ν_floor` (up to `want`), and the number of floored directions seen in
/// the final extraction.
fn subspace_iterate(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    chol: &BandedCholesky,
    block: usize,
    want: usize,
    deflate: &[&[f64]],
    opts: SolveOpts,
) -> Result<(Vec<(f64, Vec<f64>)>, usize)> {
    let n = k_mat.dim();
    let floor = nu_floor(m_mat);
    let mut rng = Rng::new(opts.seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    let mut v: Vec<Vec<f64>> = (0..block).map(|_| rng.vector(n)).collect();
    let mut last_worst = f64::INFINITY;

    let project_out = |x: &mut Vec<f64>, m_mat: &SparseSymMatrix| {
        // Remove M-components along deflated eigenvectors (M-orthonormal).
        if deflate.is_empty() {
            return;
        }
        let mx = m_mat.apply(x);
        for u in deflate {
            let c: f64 = u.iter().zip(&mx).map(|(a, b)| a * b).sum();
            for (xi, ui) in x.iter_mut().zip(u.iter()) {
                *xi -= c * ui;
            }
        }
    };

    for v_col in v.iter_mut() {
        project_out(v_col, m_mat);
    }

    for _iter in 0..opts.max_iter {
        // Expand: w_j = K⁻¹ (M v_j), deflated.
        let mut w: Vec<Vec<f64>> = v
            .iter()
            .map(|col| {
                let mut x = m_mat.apply(col);
                chol.solve_in_place(&mut x);
                project_out(&mut x, m_mat);
                x
            })
            .collect();

        // K-orthonormalize with kept K-images (modified Gram-Schmidt).
        let mut kw: Vec<Vec<f64>> = w.iter().map(|col| k_mat.apply(col)).collect();
        let scale = k_mat.norm_inf().max(1.0);
        for j in 0..block {
            for i in 0..j {
                let c: f64 = w[j].iter().zip(&kw[i]).map(|(a, b)| a * b).sum();
                let (wi, kwi) = (w[i].clone(), kw[i].clone());
                for t in 0..n {
                    w[j][t] -= c * wi[t];
                    kw[j][t] -= c * kwi[t];
                }
            }
            let mut nrm2: f64 = w[j].iter().zip(&kw[j]).map(|(a, b)| a * b).sum();
            if nrm2 <= 1e-24 * scale {
                // Column collapsed (Krylov space exhausted); restart it with
                // fresh randomness to keep the basis full rank.
                w[j] = rng.vector(n);
                project_out(&mut w[j], m_mat);
                kw[j] = k_mat.apply(&w[j]);
                for i in 0..j {
                    let c: f64 = w[j].iter().zip(&kw[i]).map(|(a, b)| a * b).sum();
                    let (wi, kwi) = (w[i].clone(), kw[i].clone());
                    for t in 0..n {
                        w[j][t] -= c * wi[t];
                        kw[j][t] -= c * kwi[t];
                    }
                }
                nrm2 = w[j].iter().zip(&kw[j]).map(|(a, b)| a * b).sum();
            }
            let inv = 1.0 / nrm2.sqrt();
            for t in 0..n {
                w[j][t] *= inv;
                kw[j][t] *= inv;
            }
        }

        // Rayleigh-Ritz: B = Wᵀ M W.
        let mw: Vec<Vec<f64>> = w.iter().map(|col| m_mat.apply(col)).collect();
        let mut b = DMatrix::<f64>::zeros(block, block);
        for i in 0..block {
            for j in i..block {
                let val: f64 = w[i].iter().zip(&mw[j]).map(|(a, b)| a * b).sum();
                b[(i, j)] = val;
                b[(j, i)] = val;
            }
        }
        let eig = b.symmetric_eigen();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &bb| {
            eig.eigenvalues[bb]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap()
                .then(a.cmp(&bb))
        });

        // Rotate the basis to the Ritz vectors.
        let mut ritz: Vec<(f64, Vec<f64>)> = Vec::with_capacity(block);
        for &c in &order {
            let s = eig.eigenvectors.column(c);
            let mut x = vec![0.0; n];
            for (j, wj) in w.iter().enumerate() {
                let sj = s[j];
                if sj != 0.0 {
                    for t in 0..n {
                        x[t] += sj * wj[t];
                    }
                }
            }
            ritz.push((eig.eigenvalues[c], x));
        }

        // Convergence of the wanted pairs above the kernel floor.
        let available: Vec<usize> = (0..block).filter(|&i| ritz[i].0 > floor).collect();
        let check = available.len().min(want);
        let mut worst = 0.0f64;
        for &i in available.iter().take(check) {
            let (theta, ref x) = ritz[i];
            let lambda = 1.0 / theta;
            let kx = k_mat.apply(x);
            let mx = m_mat.apply(x);
            let num: f64 = kx
                .iter()
                .zip(&mx)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = kx.iter().map(|a| a * a).sum::<f64>().sqrt();
            worst = worst.max(num / den.max(f64::MIN_POSITIVE));
        }
        let exhausted =
            available.len() < want && (available.len() < block || block >= n);
        if check > 0 && worst <= opts.tol && (available.len() >= want || exhausted) {
            let excluded = block - available.len();
            let out: Vec<(f64, Vec<f64>)> = available
                .iter()
                .take(want)
                .map(|&i| (ritz[i].0, ritz[i].1.clone()))
                .collect();
            return Ok((out, excluded));
        }
        last_worst = worst;
        v = ritz.into_iter().map(|(_, x)| x).collect();
    }
    Err(Error::NonConvergence { max_iter: opts.max_iter, residual: last_worst })
}

/// Normalize, sign-fix, order, cluster.
fn finalize(
    k_mat: &SparseSymMatrix,
    m_mat: &SparseSymMatrix,
    thetas: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    excluded: usize,
    opts: SolveOpts,
) -> Result<Spectrum> {
    // thetas are decreasing; lambdas = 1/theta come out increasing.
    let mut pairs = Vec::with_capacity(thetas.len());
    for (theta, mut x) in thetas.into_iter().zip(vectors) {
        let lambda = 1.0 / theta;
        let m_norm2 = m_mat.quad_form(&x, &x);
        if m_norm2 <= 0.0 {
            return Err(Error::Degenerate(
                "eigenvector has nonpositive measure norm".into(),
            ));
        }
        let inv = 1.0 / m_norm2.sqrt();
        for v in x.iter_mut() {
            *v *= inv;
        }
        fix_sign(&mut x);
        let kx = k_mat.apply(&x);
        let mx = m_mat.apply(&x);
        let num: f64 = kx
            .iter()
            .zip(&mx)
            .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = kx.iter().map(|a| a * a).sum::<f64>().sqrt();
        pairs.push(EigenPair {
            lambda,
            vector: x,
            residual: num / den.max(f64::MIN_POSITIVE),
            cluster_id: 0,
        });
    }
    pairs.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());

    let mut clusters: Vec<Cluster> = Vec::new();
    for i in 0..pairs.len() {
        let new_cluster = match clusters.last() {
            None => true,
            Some(c) => {
                let prev = pairs[i - 1].lambda;
                (pairs[i].lambda - prev) / prev.abs().max(f64::MIN_POSITIVE) > opts.cluster_tol
                    && c.size > 0
            }
        };
        if new_cluster {
            clusters.push(Cluster { start: i, size: 0, lambda: 0.0 });
        }
        let c = clusters.last_mut().unwrap();
        c.size += 1;
        pairs[i].cluster_id = clusters.len() - 1;
    }
    for c in clusters.iter_mut() {
        let sum: f64 = pairs[c.start..c.start + c.size].iter().map(|p| p.lambda).sum();
        c.lambda = sum / c.size as f64;
    }

    let requested = opts.k;
    let rank_deficient = pairs.len() < requested;
    Ok(Spectrum {
        pairs,
        clusters,
        kernel_directions_excluded: excluded,
        requested,
        rank_deficient,
    })
}

/// Flip the sign so the first DOF with `|u_i| > 1e-8 * max|u|` is positive.
fn fix_sign(x: &mut [f64]) {
    let maxabs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-8 * maxabs;
    if let Some(first) = x.iter().find(|v| v.abs() > tol) {
        if *first < 0.0 {
            for v in x.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// Cholesky factorization of an SPD matrix in banded storage.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row-major band: entry `(i, j)` with `i - bw <= j <= i` lives at
    /// `i * (bw + 1) + (j - i + bw)`.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (i, cols, vals) in a.rows() {
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    band[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            for j in j_lo..=i {
                let k_lo = j_lo.max(j.saturating_sub(bw));
                let mut sum = band[i * w + (j + bw - i)];
                for k in k_lo..j {
                    sum -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if j < i {
                    band[i * w + (j + bw - i)] = sum / band[j * w + bw];
                } else {
                    if sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    band[i * w + bw] = sum.sqrt();
                }
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        // Forward: L y = b.
        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            let mut sum = x[i];
            for j in j_lo..i {
                sum -= self.band[i * w + (j + bw - i)] * x[j];
            }
            x[i] = sum / self.band[i * w + bw];
        }
        // Backward: Lᵀ x = y.
        for i in (0..n).rev() {
            let j_hi = (i + bw).min(n - 1);
            let mut sum = x[i];
            for j in (i + 1)..=j_hi {
                sum -= self.band[j * w + (i + bw - j)] * x[j];
            }
            x[i] = sum / self.band[i * w + bw];
        }
    }
}

/// Convenience: M-inner product of two DOF vectors.
pub fn m_inner(m_mat: &SparseSymMatrix, u: &[f64], v: &[f64]) -> f64 {
    m_mat.quad_form(u, v)
}

#[allow(dead_code)]
fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_measure_mass, assemble_stiffness, build_mesh};
    use crate::geom::{Domain, Point, Rect};
    use crate::measure::{cross_measure, Measure, MeasureComponent};
    use crate::rng::Rng;
    use std::f64::consts::PI;

    fn lebesgue_1d(n: usize) -> (crate::fem::Mesh, SparseSymMatrix, SparseSymMatrix) {
        let m = Measure::new(
            Domain::interval(0.0, 1.0),
            vec![MeasureComponent::Area {
                rect: Rect::new(0.0, 1.0, 0.0, 0.0),
                weight: 1.0,
            }],
        )
        .unwrap();
        let mesh = build_mesh(Domain::interval(0.0, 1.0), n, 0, &m).unwrap();
        let k = assemble_stiffness(&mesh);
        let mm = assemble_measure_mass(&mesh, &m).unwrap();
        (mesh, k, mm)
    }

    #[test]
    fn banded_cholesky_solves() {
        let (_, k, _) = lebesgue_1d(32);
        let chol = BandedCholesky::factor(&k).unwrap();
        let mut rng = Rng::new(31);
        let x_true = rng.vector(k.dim());
        let mut b = k.apply(&x_true);
        chol.solve_in_place(&mut b);
        for (a, c) in b.iter().zip(&x_true) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn string_spectrum_classical() {
        let (_, k, m) = lebesgue_1d(256);
        let spec = solve(&k, &m, SolveOpts { k: 5, ..Default::default() }).unwrap();
        assert_eq!(spec.pairs.len(), 5);
        for (i, pair) in spec.pairs.iter().enumerate() {
            let exact = ((i + 1) as f64 * PI).powi(2);
            let rel = (pair.lambda - exact).abs() / exact;
            assert!(rel < 0.01, "lambda_{} = {} vs {}", i + 1, pair.lambda, exact);
            assert!(pair.residual <= 1e-8);
        }
        assert!(!spec.rank_deficient);
    }

    #[test]
    fn string_spectrum_iterative_matches_dense() {
        let (_, k, m) = lebesgue_1d(128);
        let opts = SolveOpts { k: 4, ..Default::default() };
        let dense = solve_dense(&k, &m, opts).unwrap();
        let iter = solve_iterative(&k, &m, opts).unwrap();
        for (a, b) in dense.pairs.iter().zip(&iter.pairs) {
            assert!((a.lambda - b.lambda).abs() / a.lambda < 1e-8);
        }
    }

    #[test]
    fn dirac_string_exact() {
        // Variational oracle: the tent peaking at 1/2 has energy 4 and unit
        // measure norm, so lambda = 4 exactly and the eigenvector is the tent.
        let m = Measure::new(
            Domain::interval(0.0, 1.0),
            vec![MeasureComponent::Atom { point: Point::new(0.5, 0.0), weight: 1.0 }],
        )
        .unwrap();
        for n in [2usize, 16, 64] {
            let mesh = build_mesh(Domain::interval(0.0, 1.0), n, 0, &m).unwrap();
            let k = assemble_stiffness(&mesh);
            let mm = assemble_measure_mass(&mesh, &m).unwrap();
            for solver in [solve_dense, solve_iterative] {
                let spec = solver(&k, &mm, SolveOpts { k: 3, ..Default::default() }).unwrap();
                assert_eq!(spec.pairs.len(), 1, "rank-1 mass gives exactly one pair");
                assert!(spec.rank_deficient);
                let pair = &spec.pairs[0];
                assert!((pair.lambda - 4.0).abs() < 1e-10, "lambda {}", pair.lambda);
                // Eigenvector equals the tent at the vertices.
                for d in 0..mesh.n_dofs() {
                    let x = mesh.vertex(mesh.vertex_of_dof(d)).x;
                    let tent = 1.0 - 2.0 * (x - 0.5).abs();
                    assert!(
                        (pair.vector[d] - tent).abs() < 1e-10,
                        "n={n} x={x}: {} vs {tent}",
                        pair.vector[d]
                    );
                }
            }
        }
    }

    #[test]
    fn rayleigh_quotient_examples() {
        let (_, k, m) = lebesgue_1d(64);
        let spec = solve(&k, &m, SolveOpts { k: 2, ..Default::default() }).unwrap();
        let u1 = &spec.pairs[0].vector;
        let r = rayleigh_quotient(&k, &m, u1).unwrap();
        assert!((r - spec.pairs[0].lambda).abs() / r < 1e-9);

        // Scaling invariance.
        let mut rng = Rng::new(8);
        for _ in 0..5 {
            let c = rng.symmetric() * 5.0 + 0.1;
            let scaled: Vec<f64> = u1.iter().map(|v| c * v).collect();
            let rs = rayleigh_quotient(&k, &m, &scaled).unwrap();
            assert!((rs - r).abs() <= 1e-12 * r.abs());
        }

        // Tent against the Dirac measure: exactly 4.
        let md = Measure::new(
            Domain::interval(0.0, 1.0),
            vec![MeasureComponent::Atom { point: Point::new(0.5, 0.0), weight: 1.0 }],
        )
        .unwrap();
        let mesh = build_mesh(Domain::interval(0.0, 1.0), 2, 0, &md).unwrap();
        let kd = assemble_stiffness(&mesh);
        let mmd = assemble_measure_mass(&mesh, &md).unwrap();
        let r = rayleigh_quotient(&kd, &mmd, &[1.0]).unwrap();
        assert!((r - 4.0).abs() < 1e-14);

        // Kernel vectors are rejected.
        let (_, _, mm) = lebesgue_1d(4);
        let cross = cross_measure();
        let mesh2 = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), 4, 4, &cross).unwrap();
        let k2 = assemble_stiffness(&mesh2);
        let m2 = assemble_measure_mass(&mesh2, &cross).unwrap();
        let mut off = vec![0.0; mesh2.n_dofs()];
        for d in 0..mesh2.n_dofs() {
            let p = mesh2.vertex(mesh2.vertex_of_dof(d));
            if p.x.abs() > 1e-12 && p.y.abs() > 1e-12 {
                off[d] = 1.0;
            }
        }
        assert!(rayleigh_quotient(&k2, &m2, &off).is_err());
        let _ = mm;
    }

    #[test]
    fn random_vectors_bound_lambda1_from_above() {
        let (_, k, m) = lebesgue_1d(48);
        let spec = solve(&k, &m, SolveOpts { k: 1, ..Default::default() }).unwrap();
        let l1 = spec.pairs[0].lambda;
        let mut rng = Rng::new(17);
        for _ in 0..30 {
            let u = rng.vector(k.dim());
            let r = rayleigh_quotient(&k, &m, &u).unwrap();
            assert!(r >= l1 - 1e-8 * l1);
        }
        // Same bound with a singular mass matrix.
        let cross = cross_measure();
        let mesh = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), 10, 10, &cross).unwrap();
        let k2 = assemble_stiffness(&mesh);
        let m2 = assemble_measure_mass(&mesh, &cross).unwrap();
        let spec = solve(&k2, &m2, SolveOpts { k: 1, ..Default::default() }).unwrap();
        let l1 = spec.pairs[0].lambda;
        for _ in 0..20 {
            let u = rng.vector(k2.dim());
            if m2.quad_form(&u, &u) <= 0.0 {
                continue;
            }
            let r = rayleigh_quotient(&k2, &m2, &u).unwrap();
            assert!(r >= l1 - 1e-8 * l1, "{r} < {l1}");
        }
    }

    #[test]
    fn eigenvectors_m_orthonormal() {
        let cross = cross_measure();
        let mesh = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), 16, 16, &cross).unwrap();
        let k = assemble_stiffness(&mesh);
        let m = assemble_measure_mass(&mesh, &cross).unwrap();
        let spec = solve(&k, &m, SolveOpts { k: 6, ..Default::default() }).unwrap();
        for i in 0..spec.pairs.len() {
            for j in 0..=i {
                let got = m_inner(&m, &spec.pairs[i].vector, &spec.pairs[j].vector);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (got - want).abs() < 1e-8,
                    "M-inner ({i},{j}) = {got}"
                );
            }
        }
    }

    #[test]
    fn constrained_min_matches_spectrum() {
        let (_, k, m) = lebesgue_1d(96);
        let opts = SolveOpts { k: 3, ..Default::default() };
        let spec = solve(&k, &m, opts).unwrap();
        // No constraints: lambda_1.
        let c1 = constrained_min_check(&k, &m, &spec, 1, opts).unwrap();
        assert!((c1 - spec.pairs[0].lambda).abs() / c1 < 1e-8);
        // One constraint on the string: 4 pi^2 within 1%.
        let c2 = constrained_min_check(&k, &m, &spec, 2, opts).unwrap();
        assert!((c2 - 4.0 * PI * PI).abs() / (4.0 * PI * PI) < 0.01, "{c2}");
        assert!((c2 - spec.pairs[1].lambda).abs() / c2 < 1e-6);
    }

    #[test]
    fn constrained_min_cross_second_eigenvalue() {
        let cross = cross_measure();
        let mesh = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), 12, 12, &cross).unwrap();
        let k = assemble_stiffness(&mesh);
        let m = assemble_measure_mass(&mesh, &cross).unwrap();
        let opts = SolveOpts { k: 3, ..Default::default() };
        let spec = solve(&k, &m, opts).unwrap();
        let c2 = constrained_min_check(&k, &m, &spec, 2, opts).unwrap();
        assert!(
            (c2 - spec.pairs[1].lambda).abs() / c2 < 1e-6,
            "{c2} vs {}",
            spec.pairs[1].lambda
        );
    }

    #[test]
    fn flipping_invariance_small_dense() {
        // Both matrices PD on the string, so the roles can be swapped.
        let (_, k, m) = lebesgue_1d(24);
        let opts = SolveOpts { k: 23, ..Default::default() };
        let fwd = solve_dense(&k, &m, opts).unwrap();
        let flipped = solve_dense(&m, &k, opts).unwrap();
        let mut inv: Vec<f64> = flipped.pairs.iter().map(|p| 1.0 / p.lambda).collect();
        inv.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in fwd.lambdas().iter().zip(&inv) {
            assert!((a - b).abs() / a < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn refining_never_raises_lambda1() {
        // Conforming subspace nesting: the minimum Rayleigh quotient cannot
        // increase under refinement.
        let cross = cross_measure();
        let mut prev = f64::INFINITY;
        for n in [8usize, 16, 32] {
            let mesh = build_mesh(Domain::rect(-1.0, 1.0, -1.0, 1.0), n, n, &cross).unwrap();
            let k = assemble_stiffness(&mesh);
            let m = assemble_measure_mass(&mesh, &cross).unwrap();
            let spec = solve(&k, &m, SolveOpts { k: 1, ..Default::default() }).unwrap();
            let l1 = spec.pairs[0].lambda;
            assert!(l1 <= prev + 1e-8 * prev.min(1e6), "lambda1 rose: {l1} > {prev}");
            prev = l1;
        }
    }

    #[test]
    fn cluster_grouping() {
        let (_, k, m) = lebesgue_1d(128);
        let spec = solve(&k, &m, SolveOpts { k: 5, ..Default::default() }).unwrap();
        // String eigenvalues are simple: five singleton clusters.
        assert_eq!(spec.clusters.len(), 5);
        assert!(spec.clusters.iter().all(|c| c.size == 1));
        assert_eq!(spec.multiplicity(0), 1);
    }
}
