//! Orchestration of the solve/verify pipelines and file emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use mulab::fem::{assemble_measure_mass, assemble_stiffness, build_mesh, Mesh, SparseSymMatrix};
use mulab::geom::Rect;
use mulab::green::{
    boundary_decay_check, check_green_condition, continuity_modulus_check, nystrom_solve,
    GreenKernel, GreenOperator, GreenSpectrum, NyOpts,
};
use mulab::measure::QuadOpts;
use mulab::nodal::{count_nodal_domains, verify_courant, worst_margin, NodalCount};
use mulab::rng::Rng;
use mulab::spectral::{solve, SolveOpts, Spectrum};
use mulab::validate::{
    mollifier_weights, mollify, principle_grids, seeded_bumps,
    sphere_average, weak_residual, ClosedFormExample, GridFn,
};
use mulab::{Domain, Error, Measure, Point};

use crate::config::RunConfig;
use crate::report::*;

/// Pipeline error with the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: configuration or geometry problems.
    Config(String),
    /// Exit 3: eigensolver non-convergence.
    Solver(String),
    /// Exit 4: filesystem problems.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Solver(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub struct Artifacts {
    pub mesh: Mesh,
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    pub spectrum: Spectrum,
}

fn solve_opts(cfg: &RunConfig) -> SolveOpts {
    SolveOpts {
        k: cfg.solver.k,
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        cluster_tol: cfg.solver.cluster_tol,
        seed: cfg.seed,
        dense_threshold: cfg.solver.dense_threshold,
    }
}

/// Mesh, assembly and eigensolve from a run configuration.
pub fn run_galerkin(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let mesh = build_mesh(cfg.domain, cfg.nx, cfg.ny, &cfg.measure)?;
    let stiffness = assemble_stiffness(&mesh);
    let mass = assemble_measure_mass(&mesh, &cfg.measure)?;
    let spectrum = solve(&stiffness, &mass, solve_opts(cfg))?;
    Ok(Artifacts { mesh, stiffness, mass, spectrum })
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn quadrature_note(cfg: &RunConfig) -> QuadratureNote {
    let q = QuadOpts::default();
    QuadratureNote {
        segment_cells: q.segment_cells,
        area_cells_per_axis: q.area_cells,
        gauss_order: q.gauss_order,
        nystrom_nodes_per_segment: cfg.green.nodes_per_segment,
        nystrom_area_nodes_per_axis: cfg.green.area_nodes_per_axis,
    }
}

fn spectrum_summary(art: &Artifacts) -> SpectrumSummary {
    let s = &art.spectrum;
    SpectrumSummary {
        count: s.pairs.len(),
        lambdas: s.lambdas(),
        max_residual: s.pairs.iter().map(|p| p.residual).fold(0.0, f64::max),
        clusters: s
            .clusters
            .iter()
            .map(|c| ClusterRow { start: c.start, size: c.size, lambda: c.lambda })
            .collect(),
        kernel_directions_excluded: s.kernel_directions_excluded,
        rank_deficient: s.rank_deficient,
        dofs: art.mesh.n_dofs(),
    }
}

fn dim_inf_section(measure: &Measure) -> Result<DimInfSection, CliError> {
    let est = match measure.estimate_dim_inf(&Measure::default_dim_radii(), &measure.dim_centers())
    {
        Ok(e) => e,
        Err(e) => {
            return Ok(DimInfSection {
                slope: f64::NAN,
                per_delta: Vec::new(),
                hypothesis_violated: false,
                verdict: Verdict::skipped(format!("dimension estimate unavailable: {e}")),
            })
        }
    };
    let d = measure.dim() as f64;
    let verdict = Verdict::check(
        !est.hypothesis_violated,
        format!(
            "lower L-infinity dimension estimate {:.3} must exceed d - 2 = {} for a discrete \
             spectrum",
            est.slope,
            d - 2.0
        ),
    );
    Ok(DimInfSection {
        slope: est.slope,
        per_delta: est.per_delta,
        hypothesis_violated: est.hypothesis_violated,
        verdict,
    })
}

fn nodal_section(cfg: &RunConfig, art: &Artifacts) -> Result<NodalSection, CliError> {
    let counts: Vec<NodalCount> = art
        .spectrum
        .pairs
        .iter()
        .map(|p| count_nodal_domains(&art.mesh, &p.vector, cfg.nodal_tol_rel))
        .collect::<Result<_, _>>()?;
    let reports = verify_courant(&art.spectrum, &counts);
    let rows: Vec<NodalRow> = reports
        .iter()
        .map(|r| NodalRow {
            index: r.index,
            lambda: art.spectrum.pairs[r.index - 1].lambda,
            m: r.count,
            r: art.spectrum.multiplicity(r.index - 1),
            positive: r.positive,
            negative: r.negative,
            unsigned_fraction: r.unsigned_fraction,
            lower_ok: r.lower_ok,
            upper_ok: r.upper_ok,
        })
        .collect();
    let all_ok = reports.iter().all(|r| r.ok());
    Ok(NodalSection {
        rows,
        worst_margin: worst_margin(&reports),
        verdict: Verdict::check(
            all_ok,
            "nodal-domain counts: first eigenfunction sign-definite, higher ones split the \
             domain into at least 2 and at most n + r - 1 subdomains",
        ),
    })
}

fn write_spectrum_csv(dir: &Path, art: &Artifacts) -> Result<(), CliError> {
    let mut out = String::from("index,lambda,residual,cluster_id,cluster_size\n");
    for (i, p) in art.spectrum.pairs.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            fmt_f(p.lambda),
            fmt_f(p.residual),
            p.cluster_id,
            art.spectrum.clusters[p.cluster_id].size
        ));
    }
    fs::write(dir.join("spectrum.csv"), out)?;
    Ok(())
}

fn write_eigvec_csvs(dir: &Path, art: &Artifacts) -> Result<(), CliError> {
    for (i, p) in art.spectrum.pairs.iter().enumerate() {
        let mut out = String::from("dof_index,x,y,value\n");
        for (d, v) in p.vector.iter().enumerate() {
            let pt = art.mesh.vertex(art.mesh.vertex_of_dof(d));
            out.push_str(&format!("{},{},{},{}\n", d, fmt_f(pt.x), fmt_f(pt.y), fmt_f(*v)));
        }
        fs::write(dir.join(format!("eigvec_{}.csv", i + 1)), out)?;
    }
    Ok(())
}

fn write_nodal_csv(dir: &Path, section: &NodalSection) -> Result<(), CliError> {
    let mut out = String::from("index,lambda,m,r,lower_ok,upper_ok\n");
    for row in &section.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.index,
            fmt_f(row.lambda),
            row.m,
            row.r,
            row.lower_ok,
            row.upper_ok
        ));
    }
    fs::write(dir.join("nodal.csv"), out)?;
    Ok(())
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config.resolved.cfg"), &cfg.canonical)?;
    Ok(())
}

/// Full Galerkin pipeline: spectrum, eigenvectors, dimension estimate and
/// nodal verdicts; writes `spectrum.csv`, `eigvec_<i>.csv` and `report.json`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<(RunReport, bool), CliError> {
    let mut timings = BTreeMap::new();
    prepare_out_dir(cfg)?;

    let t = Instant::now();
    let art = run_galerkin(cfg)?;
    timings.insert("galerkin_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let dim_inf = dim_inf_section(&cfg.measure)?;
    timings.insert("dim_inf_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let nodal = nodal_section(cfg, &art)?;
    timings.insert("nodal_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    write_spectrum_csv(&cfg.out_dir, &art)?;
    write_eigvec_csvs(&cfg.out_dir, &art)?;

    let report = RunReport {
        config_hash: format!("{:016x}", cfg.hash()),
        seed: cfg.seed,
        command: "solve".into(),
        dim_inf: Some(dim_inf),
        spectrum: Some(spectrum_summary(&art)),
        nodal: Some(nodal),
        green_agreement: None,
        validation: None,
        quadrature: quadrature_note(cfg),
        timings_ms: timings,
    };
    fs::write(cfg.out_dir.join("report.json"), to_json_pretty(&report))?;
    let failed = any_fail(&report);
    Ok((report, failed))
}

/// Solve plus `nodal.csv`; fails when a nodal verdict fails.
pub fn cmd_nodal(cfg: &RunConfig) -> Result<(RunReport, bool), CliError> {
    let (report, failed) = cmd_solve(cfg)?;
    let section = report.nodal.as_ref().expect("solve always counts nodal domains");
    write_nodal_csv(&cfg.out_dir, section)?;
    Ok((report, failed))
}

/// Dimension estimate only.
pub fn cmd_diminf(cfg: &RunConfig) -> Result<(RunReport, bool), CliError> {
    let mut timings = BTreeMap::new();
    prepare_out_dir(cfg)?;
    let t = Instant::now();
    let dim_inf = dim_inf_section(&cfg.measure)?;
    timings.insert("dim_inf_ms".into(), t.elapsed().as_secs_f64() * 1e3);
    let report = RunReport {
        config_hash: format!("{:016x}", cfg.hash()),
        seed: cfg.seed,
        command: "diminf".into(),
        dim_inf: Some(dim_inf),
        spectrum: None,
        nodal: None,
        green_agreement: None,
        validation: None,
        quadrature: quadrature_note(cfg),
        timings_ms: timings,
    };
    fs::write(cfg.out_dir.join("report.json"), to_json_pretty(&report))?;
    let failed = any_fail(&report);
    Ok((report, failed))
}

fn ny_opts(cfg: &RunConfig) -> NyOpts {
    NyOpts {
        nodes_per_segment: cfg.green.nodes_per_segment,
        area_nodes_per_axis: cfg.green.area_nodes_per_axis,
    }
}

/// Integral-operator route: spectrum agreement against Galerkin, kernel
/// condition, operator symmetry, boundary decay and continuity modulus;
/// writes `green_report.json`.
pub fn cmd_green(cfg: &RunConfig, threads: usize) -> Result<(GreenReport, bool), CliError> {
    let mut timings = BTreeMap::new();
    prepare_out_dir(cfg)?;
    let hash = format!("{:016x}", cfg.hash());

    if !cfg.green.enable {
        let report = GreenReport {
            config_hash: hash,
            seed: cfg.seed,
            condition: None,
            route_agreement: None,
            operator_symmetry: None,
            boundary_decay: None,
            continuity_modulus: None,
            skipped_reason: Some("green route disabled in the configuration".into()),
            timings_ms: timings,
        };
        fs::write(cfg.out_dir.join("green_report.json"), to_json_pretty(&report))?;
        return Ok((report, false));
    }

    let kernel = GreenKernel::for_domain(cfg.domain, cfg.green.image_order);

    let t = Instant::now();
    let green_spec = match nystrom_solve(&kernel, &cfg.measure, 5.min(cfg.solver.k).max(1), ny_opts(cfg), threads)
    {
        Ok(s) => s,
        Err(Error::UnsupportedMeasure(reason)) => {
            let report = GreenReport {
                config_hash: hash,
                seed: cfg.seed,
                condition: None,
                route_agreement: None,
                operator_symmetry: None,
                boundary_decay: None,
                continuity_modulus: None,
                skipped_reason: Some(format!("integral-operator route skipped: {reason}")),
                timings_ms: timings,
            };
            fs::write(cfg.out_dir.join("green_report.json"), to_json_pretty(&report))?;
            return Ok((report, false));
        }
        Err(e) => return Err(e.into()),
    };
    timings.insert("nystrom_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let t = Instant::now();
    let art = run_galerkin(cfg)?;
    timings.insert("galerkin_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let route_agreement = Some(agreement_section(&art.spectrum, &green_spec, 0.02));

    // Boundedness of the kernel integral.
    let t = Instant::now();
    let samples = condition_samples(cfg);
    let cond = check_green_condition(&kernel, &cfg.measure, &samples, ny_opts(cfg))?;
    let condition = Some(ConditionSection {
        sup: cond.sup,
        sup_refined: cond.sup_refined,
        rel_change: cond.rel_change,
        stable: cond.stable,
        singular_at: cond.singular_at.map(|p| [p.x, p.y]),
        verdict: Verdict::check(
            cond.stable && cond.sup.is_finite(),
            "sup_x of the kernel integral against the measure stays finite and stable under \
             quadrature refinement",
        ),
    });
    timings.insert("condition_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    // Operator symmetry in the measure inner product (coarse nodes keep the
    // Gram evaluation cheap).
    let t = Instant::now();
    let coarse = GreenOperator::new(
        &kernel,
        &cfg.measure,
        NyOpts {
            nodes_per_segment: cfg.green.nodes_per_segment.min(96),
            area_nodes_per_axis: cfg.green.area_nodes_per_axis.min(24),
        },
    )?;
    let operator_symmetry = Some(symmetry_section(&coarse, cfg.seed, threads));
    timings.insert("symmetry_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    // Boundary decay of the potential of the first eigenfunction, probed at
    // two boundary points.
    let t = Instant::now();
    let op = GreenOperator { kernel: &kernel, nodes: green_spec.nodes.clone() };
    let boundary_decay = Some(decay_sections(cfg, &op, &green_spec)?);
    timings.insert("decay_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    // Continuity modulus of lambda * G_mu u1 under grid halving.
    let t = Instant::now();
    let continuity_modulus = Some(modulus_section(cfg, &op, &green_spec, threads)?);
    timings.insert("modulus_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let report = GreenReport {
        config_hash: hash,
        seed: cfg.seed,
        condition,
        route_agreement,
        operator_symmetry,
        boundary_decay,
        continuity_modulus,
        skipped_reason: None,
        timings_ms: timings,
    };
    fs::write(cfg.out_dir.join("green_report.json"), to_json_pretty(&report))?;
    let failed = any_fail(&report);
    Ok((report, failed))
}

fn agreement_section(
    galerkin: &Spectrum,
    green: &GreenSpectrum,
    tolerance: f64,
) -> AgreementSection {
    let n = galerkin.pairs.len().min(green.lambdas.len()).min(5);
    let rows: Vec<AgreementRow> = (0..n)
        .map(|i| {
            let lg = galerkin.pairs[i].lambda;
            let ln = green.lambdas[i];
            AgreementRow {
                index: i + 1,
                lambda_galerkin: lg,
                lambda_green: ln,
                rel_diff: (lg - ln).abs() / lg.abs().max(f64::MIN_POSITIVE),
            }
        })
        .collect();
    let ok = !rows.is_empty() && rows.iter().all(|r| r.rel_diff <= tolerance);
    AgreementSection {
        rows,
        tolerance,
        verdict: Verdict::check(
            ok,
            "Galerkin and integral-operator spectra agree on the leading eigenvalues",
        ),
    }
}

fn condition_samples(cfg: &RunConfig) -> Vec<Point> {
    let mut samples = Vec::new();
    let rect = cfg.domain.bounding_rect();
    let n = 6;
    for j in 0..=n {
        for i in 0..=n {
            let p = Point::new(
                rect.x0 + rect.width() * (0.1 + 0.8 * i as f64 / n as f64),
                if cfg.domain.dim() == 1 {
                    0.0
                } else {
                    rect.y0 + rect.height() * (0.1 + 0.8 * j as f64 / n as f64)
                },
            );
            samples.push(p);
        }
        if cfg.domain.dim() == 1 {
            break;
        }
    }
    samples
}

fn symmetry_section(op: &GreenOperator, seed: u64, threads: usize) -> SymmetrySection {
    let mut rng = Rng::new(seed ^ 0x5CA1AB1E);
    let mut defect = 0.0f64;
    for _ in 0..3 {
        let (a0, a1, a2) = (rng.symmetric(), rng.symmetric(), rng.symmetric());
        let (b0, b1, b2) = (rng.symmetric(), rng.symmetric(), rng.symmetric());
        let f = |p: Point| a0 + a1 * p.x + a2 * (2.0 * p.y).cos();
        let g = |p: Point| b0 + b1 * p.y + b2 * (3.0 * p.x).sin();
        let fv = op.node_values(f);
        let gv = op.node_values(g);
        let pts = op.nodes.points.clone();
        let gf = op.apply_vec_many(&fv, &pts, threads).unwrap_or_default();
        let gg = op.apply_vec_many(&gv, &pts, threads).unwrap_or_default();
        if gf.is_empty() || gg.is_empty() {
            defect = f64::NAN;
            break;
        }
        let lhs = op.nodes.inner(&gf, &gv);
        let rhs = op.nodes.inner(&fv, &gg);
        defect = defect.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12));
    }
    // The midpoint Nyström rule is second order, so h^2 is the quadrature
    // tolerance for the symmetry defect.
    let h = op.nodes.max_cell_extent();
    let tolerance = (h * h).max(1e-10);
    SymmetrySection {
        defect,
        tolerance,
        verdict: Verdict::check(
            defect <= tolerance,
            "the kernel operator is symmetric in the measure inner product to quadrature \
             tolerance",
        ),
    }
}

fn decay_sections(
    cfg: &RunConfig,
    op: &GreenOperator,
    green_spec: &GreenSpectrum,
) -> Result<Vec<DecaySection>, CliError> {
    let points: Vec<Point> = match cfg.domain {
        Domain::Interval { a, b } => vec![Point::new(b, 0.0), Point::new(a, 0.0)],
        Domain::Rect(r) => vec![
            Point::new(r.x1, 0.5 * (r.y0 + r.y1)),
            Point::new(0.5 * (r.x0 + r.x1), r.y1),
        ],
    };
    let distances: Vec<f64> = (2..=8).map(|k| 2.0f64.powi(-k)).collect();
    let f = &green_spec.node_vectors[0];
    let threshold = 0.05;
    let mut out = Vec::with_capacity(points.len());
    for z in points {
        let rep = boundary_decay_check(op, f, z, &distances, threshold)?;
        out.push(DecaySection {
            boundary_point: [z.x, z.y],
            distances: rep.distances,
            values: rep.values,
            interior_max: rep.interior_max,
            final_ratio: rep.final_ratio,
            threshold,
            monotone_ish: rep.monotone_ish,
            verdict: Verdict::check(
                rep.pass,
                "the potential of the first eigenfunction decays to zero toward the boundary",
            ),
        });
    }
    Ok(out)
}

fn modulus_section(
    cfg: &RunConfig,
    op: &GreenOperator,
    green_spec: &GreenSpectrum,
    threads: usize,
) -> Result<ModulusSection, CliError> {
    // A centered window crossing the measure support samples the least
    // regular part of the potential.
    let (window, base) = match cfg.domain {
        Domain::Interval { a, b } => {
            let len = b - a;
            (Rect::new(a + 0.2 * len, b - 0.2 * len, 0.0, 0.0), len)
        }
        Domain::Rect(r) => {
            let s = r.width().min(r.height());
            let c = r.center();
            (
                Rect::new(c.x - 0.2 * s, c.x + 0.2 * s, c.y - 0.2 * s, c.y + 0.2 * s),
                s,
            )
        }
    };
    let spacings: Vec<f64> = [16.0, 32.0, 64.0, 128.0].iter().map(|d| base / d).collect();
    let rep = continuity_modulus_check(
        op,
        &green_spec.node_vectors[0],
        green_spec.lambdas[0],
        &spacings,
        window,
        threads,
    )?;
    let last_ratio = rep.ratios.last().copied().unwrap_or(f64::NAN);
    let ok = (0.375..=0.625).contains(&last_ratio);
    Ok(ModulusSection {
        spacings: rep.spacings,
        moduli: rep.moduli,
        ratios: rep.ratios,
        verdict: Verdict::check(
            ok,
            "the continuity modulus of the eigenfunction potential halves (within 25%) when \
             the sampling grid is halved",
        ),
    })
}

/// Closed-form and property fixtures; writes `validate_report.json`.
pub fn cmd_validate(cfg: &RunConfig, threads: usize) -> Result<(ValidateReport, bool), CliError> {
    let mut timings = BTreeMap::new();
    prepare_out_dir(cfg)?;
    let hash = format!("{:016x}", cfg.hash());
    let mut fixtures: Vec<FixtureReport> = Vec::new();

    if cfg.domain.dim() == 1 {
        fixtures.push(FixtureReport {
            name: "closed_form_fixtures".into(),
            measured: BTreeMap::new(),
            verdict: Verdict::skipped("closed-form fixtures live on planar cross measures"),
        });
        let report = ValidateReport {
            config_hash: hash,
            seed: cfg.seed,
            example: None,
            fixtures,
            timings_ms: timings,
        };
        fs::write(cfg.out_dir.join("validate_report.json"), to_json_pretty(&report))?;
        let failed = any_fail(&report);
        return Ok((report, failed));
    }

    let example = match cfg.validate_example.as_deref() {
        Some(name) => Some(resolve_example(name)?),
        None => None,
    };

    if let Some(ex) = &example {
        let t = Instant::now();
        fixtures.push(boundary_zero_fixture(ex));
        fixtures.extend(weak_residual_fixtures(cfg, ex)?);
        fixtures.push(nodal_count_fixture(cfg, ex)?);
        if ex.expected_nodal_domains == 1 {
            fixtures.push(first_eigenfunction_fixture(cfg, ex)?);
        } else {
            fixtures.push(orthogonality_fixture(cfg, ex)?);
        }
        fixtures.push(sphere_monotonicity_fixture_superharmonic(ex));
        fixtures.push(mollifier_convergence_fixture(ex));
        timings.insert("closed_form_ms".into(), t.elapsed().as_secs_f64() * 1e3);
    } else {
        fixtures.push(FixtureReport {
            name: "closed_form_fixtures".into(),
            measured: BTreeMap::new(),
            verdict: Verdict::skipped(
                "no [validate] example configured (cross | double_cross | multi_cross_<n>)",
            ),
        });
    }

    let t = Instant::now();
    fixtures.push(mollifier_mass_fixture());
    fixtures.push(harmonic_average_fixture(cfg));
    if cfg.green.enable {
        fixtures.extend(potential_principle_fixtures(cfg, threads)?);
    } else {
        fixtures.push(FixtureReport {
            name: "potential_principles".into(),
            measured: BTreeMap::new(),
            verdict: Verdict::skipped("green route disabled; no manufactured potentials"),
        });
    }
    timings.insert("properties_ms".into(), t.elapsed().as_secs_f64() * 1e3);

    let report = ValidateReport {
        config_hash: hash,
        seed: cfg.seed,
        example: example.map(|e| e.name.clone()),
        fixtures,
        timings_ms: timings,
    };
    fs::write(cfg.out_dir.join("validate_report.json"), to_json_pretty(&report))?;
    let failed = any_fail(&report);
    Ok((report, failed))
}

fn resolve_example(name: &str) -> Result<ClosedFormExample, CliError> {
    if name == "cross" {
        return Ok(ClosedFormExample::cross());
    }
    if name == "double_cross" {
        return Ok(ClosedFormExample::double_cross());
    }
    if let Some(n) = name.strip_prefix("multi_cross_") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::Config(format!("bad validate example {name:?}")))?;
        if n >= 1 && n <= 16 {
            return Ok(ClosedFormExample::multi_cross(n));
        }
    }
    Err(CliError::Config(format!(
        "unknown validate example {name:?} (cross | double_cross | multi_cross_<n>)"
    )))
}

fn measured(pairs: Vec<(&str, serde_json::Value)>) -> BTreeMap<String, serde_json::Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn boundary_zero_fixture(ex: &ClosedFormExample) -> FixtureReport {
    let r = ex.domain;
    let mut worst = 0.0f64;
    for t in 0..=64 {
        let s = t as f64 / 64.0;
        for p in [
            Point::new(r.x0 + r.width() * s, r.y0),
            Point::new(r.x0 + r.width() * s, r.y1),
            Point::new(r.x0, r.y0 + r.height() * s),
            Point::new(r.x1, r.y0 + r.height() * s),
        ] {
            worst = worst.max(ex.eval(p).abs());
        }
    }
    FixtureReport {
        name: "closed_form_boundary_zero".into(),
        measured: measured(vec![("sup_boundary_abs", worst.into())]),
        verdict: Verdict::check(
            worst <= 1e-12,
            "the closed-form eigenfunction vanishes on the boundary",
        ),
    }
}

fn weak_residual_fixtures(
    cfg: &RunConfig,
    ex: &ClosedFormExample,
) -> Result<Vec<FixtureReport>, CliError> {
    let bumps = seeded_bumps(ex, 20, cfg.seed);
    let at = weak_residual(ex, ex.lambda, &bumps)?;
    let off = weak_residual(ex, ex.lambda + 0.1, &bumps)?;
    let detector_ok = off.max_residual >= 10.0 * at.max_residual.max(1e-12);
    Ok(vec![
        FixtureReport {
            name: "weak_residual_at_eigenvalue".into(),
            measured: measured(vec![
                ("lambda", ex.lambda.into()),
                ("max_residual", at.max_residual.into()),
                ("bumps", bumps.len().into()),
            ]),
            verdict: Verdict::check(
                at.max_residual <= 1e-6,
                "the weak identity (gradient form equals lambda times the measure pairing) \
                 holds against smooth test bumps",
            ),
        },
        FixtureReport {
            name: "weak_residual_detects_wrong_eigenvalue".into(),
            measured: measured(vec![
                ("lambda_shifted", (ex.lambda + 0.1).into()),
                ("max_residual", off.max_residual.into()),
            ]),
            verdict: Verdict::check(
                detector_ok,
                "shifting the eigenvalue inflates the weak residual by at least 10x",
            ),
        },
    ])
}

fn nodal_count_fixture(
    cfg: &RunConfig,
    ex: &ClosedFormExample,
) -> Result<FixtureReport, CliError> {
    let mesh = build_mesh(Domain::Rect(ex.domain), cfg.nx.max(8), cfg.ny.max(8), &ex.measure)?;
    let u = ex.sample_dofs(&mesh);
    let c = count_nodal_domains(&mesh, &u, cfg.nodal_tol_rel)?;
    Ok(FixtureReport {
        name: "closed_form_nodal_count".into(),
        measured: measured(vec![
            ("count", c.count.into()),
            ("expected", ex.expected_nodal_domains.into()),
            ("unsigned_fraction", c.unsigned_fraction.into()),
        ]),
        verdict: Verdict::check(
            c.count == ex.expected_nodal_domains,
            "the closed-form eigenfunction splits the domain into the expected number of \
             nodal domains",
        ),
    })
}

fn first_eigenfunction_fixture(
    cfg: &RunConfig,
    ex: &ClosedFormExample,
) -> Result<FixtureReport, CliError> {
    let art = run_galerkin(cfg)?;
    let uh = &art.spectrum.pairs[0].vector;
    let norm = ex.measure_norm();
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for comp in ex.measure.components() {
        let mulab::MeasureComponent::Segment { a, b, .. } = comp else { continue };
        for t in 0..=128 {
            let s = t as f64 / 128.0;
            let p = Point::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
            let want = ex.eval(p) / norm;
            let got = art.mesh.evaluate(uh, p)?;
            worst = worst.max((want - got).abs());
            peak = peak.max(want.abs());
        }
    }
    Ok(FixtureReport {
        name: "closed_form_matches_first_eigenfunction".into(),
        measured: measured(vec![
            ("sup_diff", worst.into()),
            ("peak", peak.into()),
            ("rel", (worst / peak.max(f64::MIN_POSITIVE)).into()),
        ]),
        verdict: Verdict::check(
            worst <= 0.02 * peak,
            "the normalized discrete first eigenfunction matches the closed form on the \
             measure support within 2%",
        ),
    })
}

fn orthogonality_fixture(
    cfg: &RunConfig,
    ex: &ClosedFormExample,
) -> Result<FixtureReport, CliError> {
    let art = run_galerkin(cfg)?;
    let u1 = &art.spectrum.pairs[0].vector;
    let inner = ex
        .measure
        .integrate(|p| ex.eval(p) * art.mesh.evaluate(u1, p).unwrap_or(0.0))?;
    let norm = ex.measure_norm();
    Ok(FixtureReport {
        name: "closed_form_orthogonal_to_first_eigenfunction".into(),
        measured: measured(vec![
            ("measure_inner_product", inner.into()),
            ("closed_form_norm", norm.into()),
        ]),
        verdict: Verdict::check(
            inner.abs() <= 1e-2 * norm,
            "a higher eigenfunction is orthogonal to the first one in the measure inner \
             product (up to discretization error)",
        ),
    })
}

fn sphere_monotonicity_fixture_superharmonic(ex: &ClosedFormExample) -> FixtureReport {
    // The closed form solves the eigenproblem with positive eigenvalue and
    // is positive near its peak, so its sphere averages cannot grow.
    let center = match ex.name.as_str() {
        "cross" => Point::new(0.0, 0.0),
        "double_cross" => Point::new(-1.0, 0.0),
        _ => Point::new(1.0, 0.0),
    };
    let d = Domain::Rect(ex.domain);
    let radii: Vec<f64> = (1..=6).map(|k| 0.08 * k as f64).collect();
    let mut table = Vec::new();
    let mut ok = true;
    let mut prev = f64::INFINITY;
    for &r in &radii {
        let avg = match sphere_average(d, |p| ex.eval(p), center, r, 256) {
            Ok(v) => v,
            Err(_) => continue,
        };
        ok &= avg <= prev + 1e-10;
        prev = avg;
        table.push(serde_json::json!([r, avg]));
    }
    FixtureReport {
        name: "sphere_averages_nonincreasing_at_peak".into(),
        measured: measured(vec![("averages", serde_json::Value::Array(table))]),
        verdict: Verdict::check(
            ok,
            "sphere averages of the positive eigenfunction do not grow with the radius \
             (minimum principle direction)",
        ),
    }
}

fn mollifier_mass_fixture() -> FixtureReport {
    let w = mollifier_weights(0.1, 0.01, 0.01);
    let mass: f64 = w.iter().map(|e| e.2).sum();
    FixtureReport {
        name: "mollifier_unit_mass".into(),
        measured: measured(vec![("mass", mass.into()), ("stencil", w.len().into())]),
        verdict: Verdict::check(
            (mass - 1.0).abs() <= 1e-12,
            "the discrete mollifier integrates to one",
        ),
    }
}

fn mollifier_convergence_fixture(ex: &ClosedFormExample) -> FixtureReport {
    let g = GridFn::sample(ex.domain, 128, 64, |p| ex.eval(p));
    let mut errs = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let sm = match mollify(&g, eps) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let mut err = 0.0f64;
        for j in 0..=64usize {
            for i in 0..=128usize {
                let p = g.point(i, j);
                if Domain::Rect(ex.domain).boundary_dist(p) > 0.25 {
                    err = err.max((sm.value(i, j) - ex.eval(p)).abs());
                }
            }
        }
        errs.push(err);
    }
    let ok = errs.windows(2).all(|w| w[1] <= 0.8 * w[0] + 1e-12);
    FixtureReport {
        name: "mollifier_uniform_convergence".into(),
        measured: measured(vec![(
            "sup_errors",
            serde_json::Value::Array(errs.iter().map(|&e| e.into()).collect()),
        )]),
        verdict: Verdict::check(
            ok,
            "mollifications converge uniformly to the continuous eigenfunction as the width \
             shrinks",
        ),
    }
}

fn harmonic_average_fixture(cfg: &RunConfig) -> FixtureReport {
    let rect = cfg.domain.bounding_rect();
    let c = rect.center();
    let r = 0.2 * rect.width().min(rect.height());
    let avg = sphere_average(cfg.domain, |p| p.x, c, r, 128).unwrap_or(f64::NAN);
    FixtureReport {
        name: "sphere_average_of_harmonic".into(),
        measured: measured(vec![("average", avg.into()), ("center_x", c.x.into())]),
        verdict: Verdict::check(
            (avg - c.x).abs() <= 1e-12,
            "sphere averages reproduce harmonic functions exactly (mean value property)",
        ),
    }
}

fn potential_principle_fixtures(
    cfg: &RunConfig,
    threads: usize,
) -> Result<Vec<FixtureReport>, CliError> {
    let kernel = GreenKernel::for_domain(cfg.domain, cfg.green.image_order);
    let op = GreenOperator::new(
        &kernel,
        &cfg.measure,
        NyOpts {
            nodes_per_segment: cfg.green.nodes_per_segment.min(128),
            area_nodes_per_axis: cfg.green.area_nodes_per_axis.min(32),
        },
    )?;
    let rect = cfg.domain.bounding_rect();
    let (interior, ring) = principle_grids(rect, 10, 0.05 * rect.width().min(rect.height()));
    let mut rng = Rng::new(cfg.seed ^ 0xFEED_F00D);
    let mut min_ok = true;
    let mut nonneg_ok = true;
    let mut sub_ok = true;
    let mut sphere_ok = true;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..3 {
        let (a, b, c) = (rng.uniform(), rng.uniform(), rng.uniform());
        let f = move |p: Point| 0.1 + a * p.x * p.x + b * (1.0 - p.y.abs()).max(0.0) + c;
        let fv = op.node_values(f);
        let ivals = op.apply_vec_many(&fv, &interior, threads)?;
        let rvals = op.apply_vec_many(&fv, &ring, threads)?;
        let scale = ivals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-8 * scale.max(1.0);
        let imin = ivals.iter().cloned().fold(f64::INFINITY, f64::min);
        let rmin = rvals.iter().cloned().fold(f64::INFINITY, f64::min);
        min_ok &= imin >= rmin - tol;
        worst_gap = worst_gap.min(imin - rmin);
        nonneg_ok &= imin >= -tol;
        // Negating turns the superharmonic potential subharmonic; its
        // interior maximum is -imin against the ring maximum -rmin.
        sub_ok &= -imin <= -rmin + tol;
        let neg = |p: Point| -op.apply_vec(&fv, p).unwrap_or(f64::NAN);
        // Sphere averages of the negated potential grow with the radius.
        let centers = [
            rect.center(),
            Point::new(rect.center().x + 0.2 * rect.width(), rect.center().y),
        ];
        for center in centers {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=5 {
                let r = 0.05 * k as f64 * rect.width().min(rect.height());
                if Domain::Rect(rect).boundary_dist(center) <= r {
                    break;
                }
                let avg = match sphere_average(cfg.domain, neg, center, r, 96) {
                    Ok(v) => v,
                    Err(_) => break,
                };
                sphere_ok &= avg >= prev - 1e-9 * scale.max(1.0);
                prev = avg;
            }
        }
    }
    Ok(vec![
        FixtureReport {
            name: "potential_minimum_principle".into(),
            measured: measured(vec![("worst_interior_minus_ring_min", worst_gap.into())]),
            verdict: Verdict::check(
                min_ok && nonneg_ok,
                "potentials of nonnegative densities stay nonnegative and take their minimum \
                 toward the boundary (minimum principle for superharmonic functions)",
            ),
        },
        FixtureReport {
            name: "negated_potential_maximum_principle".into(),
            measured: BTreeMap::new(),
            verdict: Verdict::check(
                sub_ok,
                "negated potentials are subharmonic: no interior maximum above the \
                 boundary ring",
            ),
        },
        FixtureReport {
            name: "negated_potential_sphere_averages_nondecreasing".into(),
            measured: BTreeMap::new(),
            verdict: Verdict::check(
                sphere_ok,
                "sphere averages of subharmonic potentials grow with the radius",
            ),
        },
    ])
}

/// Compare two report JSON files ignoring the volatile timing block.
pub fn reports_equal_modulo_timings(a: &str, b: &str) -> bool {
    let parse = |s: &str| -> Option<serde_json::Value> {
        let mut v: serde_json::Value = serde_json::from_str(s).ok()?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings_ms");
        }
        Some(v)
    };
    match (parse(a), parse(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}
