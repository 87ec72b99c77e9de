//! SVG rendering of eigenfunctions: heatmap, zero-level overlay, measure
//! support.

use std::fs;
use std::path::{Path, PathBuf};

use mulab::fem::{build_mesh_unchecked, Mesh};
use mulab::measure::MeasureComponent;
use mulab::{Domain, Point};

use crate::config::parse_config;
use crate::pipeline::CliError;

/// Render `plot_<index>.svg` from the artifacts of a previous run.
pub fn cmd_plot(run_dir: &Path, index: usize) -> Result<PathBuf, CliError> {
    let cfg_path = run_dir.join("config.resolved.cfg");
    let cfg_text = fs::read_to_string(&cfg_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", cfg_path.display()))
    })?;
    let cfg = parse_config(&cfg_text, None, None).map_err(|e| CliError::Config(e.to_string()))?;

    let vec_path = run_dir.join(format!("eigvec_{index}.csv"));
    let vec_text = fs::read_to_string(&vec_path).map_err(|e| {
        CliError::Config(format!("missing eigenvector file {}: {e}", vec_path.display()))
    })?;
    let mut dof_values = Vec::new();
    for (ln, line) in vec_text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(CliError::Config(format!(
                "{}: line {} is not dof_index,x,y,value",
                vec_path.display(),
                ln + 1
            )));
        }
        let v: f64 = cols[3]
            .parse()
            .map_err(|_| CliError::Config(format!("bad value on line {}", ln + 1)))?;
        dof_values.push(v);
    }

    let lambda = read_lambda(run_dir, index);
    let mesh = build_mesh_unchecked(cfg.domain, cfg.nx, cfg.ny)?;
    if dof_values.len() != mesh.n_dofs() {
        return Err(CliError::Config(format!(
            "eigenvector length {} does not match the {}-DOF mesh",
            dof_values.len(),
            mesh.n_dofs()
        )));
    }
    let svg = match cfg.domain {
        Domain::Rect(_) => render_2d(&mesh, &dof_values, &cfg, index, lambda),
        Domain::Interval { .. } => render_1d(&mesh, &dof_values, &cfg, index, lambda),
    };
    let out = run_dir.join(format!("plot_{index}.svg"));
    fs::write(&out, svg)?;
    Ok(out)
}

fn read_lambda(run_dir: &Path, index: usize) -> Option<f64> {
    let text = fs::read_to_string(run_dir.join("spectrum.csv")).ok()?;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.first()?.parse::<usize>().ok()? == index {
            return cols.get(1)?.parse().ok();
        }
    }
    None
}

fn diverging_color(t: f64) -> String {
    // Blue (negative) through white to red (positive).
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn render_2d(mesh: &Mesh, dof_values: &[f64], cfg: &crate::config::RunConfig, index: usize, lambda: Option<f64>) -> String {
    let rect = cfg.domain.bounding_rect();
    let vv = mesh.vertex_values(dof_values);
    let vmax = vv.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let width = 720.0;
    let margin = 36.0;
    let scale = (width - 2.0 * margin) / rect.width();
    let height = rect.height() * scale + 2.0 * margin + 24.0;
    let px = |p: Point| -> (f64, f64) {
        (
            margin + (p.x - rect.x0) * scale,
            margin + (rect.y1 - p.y) * scale,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Heat cells.
    let (nx, ny) = mesh.resolution();
    let (hx, hy) = mesh.spacing();
    let stride = nx + 1;
    for j in 0..ny {
        for i in 0..nx {
            let v00 = vv[i + stride * j];
            let v10 = vv[i + 1 + stride * j];
            let v01 = vv[i + stride * (j + 1)];
            let v11 = vv[i + 1 + stride * (j + 1)];
            let mean = 0.25 * (v00 + v10 + v01 + v11);
            let t = if vmax > 0.0 { mean / vmax } else { 0.0 };
            let p = px(Point::new(rect.x0 + i as f64 * hx, rect.y0 + (j + 1) as f64 * hy));
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                p.0,
                p.1,
                hx * scale + 0.5,
                hy * scale + 0.5,
                diverging_color(t)
            ));
        }
    }

    // Zero-level overlay (skipped for the zero vector). The zero set may run
    // through vertices or whole mesh edges when it lies on mesh lines, so a
    // zero vertex counts as nodal only if it actually separates both signs.
    if vmax > 0.0 {
        let tol = 1e-8 * vmax;
        let sign = |v: f64| -> i8 {
            if v > tol {
                1
            } else if v < -tol {
                -1
            } else {
                0
            }
        };
        let n_verts = mesh.n_vertices();
        let mut has_pos = vec![false; n_verts];
        let mut has_neg = vec![false; n_verts];
        for e in mesh.edges() {
            let (sa, sb) = (sign(vv[e[0]]), sign(vv[e[1]]));
            has_pos[e[0]] |= sb == 1;
            has_neg[e[0]] |= sb == -1;
            has_pos[e[1]] |= sa == 1;
            has_neg[e[1]] |= sa == -1;
        }
        let separating = |v: usize| sign(vv[v]) == 0 && has_pos[v] && has_neg[v];
        let emit = |a: Point, b: Point, svg: &mut String| {
            let pa = px(a);
            let pb = px(b);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"black\" stroke-width=\"1.4\"/>\n",
                pa.0, pa.1, pb.0, pb.1
            ));
        };
        // Zero set along mesh edges.
        for e in mesh.edges() {
            if separating(e[0]) && separating(e[1]) {
                emit(mesh.vertex(e[0]), mesh.vertex(e[1]), &mut svg);
            }
        }
        // Zero set crossing triangle interiors.
        for tri in mesh.triangles() {
            let pv: Vec<(Point, f64)> =
                tri.iter().map(|&v| (mesh.vertex(v), vv[v])).collect();
            let mut pts = Vec::new();
            for e in 0..3 {
                let (pa, va) = pv[e];
                let (pb, vb) = pv[(e + 1) % 3];
                if sign(va) * sign(vb) == -1 {
                    let t = va / (va - vb);
                    pts.push(Point::new(pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)));
                }
            }
            for (e, &(p, _)) in pv.iter().enumerate() {
                if separating(tri[e]) && sign(pv[(e + 1) % 3].1) * sign(pv[(e + 2) % 3].1) == -1 {
                    pts.push(p);
                }
            }
            if pts.len() >= 2 {
                emit(pts[0], pts[1], &mut svg);
            }
        }
    }

    // Measure support overlay.
    for comp in cfg.measure.components() {
        match comp {
            MeasureComponent::Segment { a, b, .. } => {
                let pa = px(*a);
                let pb = px(*b);
                svg.push_str(&format!(
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                     stroke=\"#00701a\" stroke-width=\"1.2\" stroke-dasharray=\"5,3\"/>\n",
                    pa.0, pa.1, pb.0, pb.1
                ));
            }
            MeasureComponent::Atom { point, .. } => {
                let p = px(*point);
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#00701a\"/>\n",
                    p.0, p.1
                ));
            }
            MeasureComponent::Area { rect: r, .. } => {
                let p = px(Point::new(r.x0, r.y1));
                svg.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
                     fill=\"none\" stroke=\"#00701a\" stroke-dasharray=\"3,3\"/>\n",
                    p.0,
                    p.1,
                    r.width() * scale,
                    r.height() * scale
                ));
            }
            MeasureComponent::Ifs { maps, probs, depth, .. } => {
                for (p, _) in mulab::measure::atomize(maps, probs, (*depth).min(7), 1.0) {
                    let q = px(p);
                    svg.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"#00701a\"/>\n",
                        q.0, q.1
                    ));
                }
            }
        }
    }

    // Domain frame and caption.
    let tl = px(Point::new(rect.x0, rect.y1));
    svg.push_str(&format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        tl.0,
        tl.1,
        rect.width() * scale,
        rect.height() * scale
    ));
    let caption = match lambda {
        Some(l) => format!("mode {index}, lambda = {l:.6}"),
        None => format!("mode {index}"),
    };
    svg.push_str(&format!(
        "<text x=\"{margin:.0}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"14\">{caption}</text>\n",
        height - 8.0
    ));
    svg.push_str("</svg>\n");
    svg
}

fn render_1d(mesh: &Mesh, dof_values: &[f64], cfg: &crate::config::RunConfig, index: usize, lambda: Option<f64>) -> String {
    let rect = cfg.domain.bounding_rect();
    let vv = mesh.vertex_values(dof_values);
    let vmax = vv.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    let (width, height, margin) = (720.0, 360.0, 40.0);
    let sx = (width - 2.0 * margin) / rect.width();
    let sy = (height - 2.0 * margin) / (2.0 * vmax);
    let px = |x: f64, v: f64| -> (f64, f64) {
        (margin + (x - rect.x0) * sx, height / 2.0 - v * sy)
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (z0, z1) = (px(rect.x0, 0.0), px(rect.x1, 0.0));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\"/>\n",
        z0.0, z0.1, z1.0, z1.1
    ));
    let mut path = String::from("M");
    for (v_idx, &v) in vv.iter().enumerate() {
        let p = px(mesh.vertex(v_idx).x, v);
        path.push_str(&format!(" {:.2},{:.2}", p.0, p.1));
    }
    svg.push_str(&format!(
        "<path d=\"{path}\" fill=\"none\" stroke=\"#c22\" stroke-width=\"1.6\"/>\n"
    ));
    for comp in cfg.measure.components() {
        if let MeasureComponent::Atom { point, .. } = comp {
            let p = px(point.x, 0.0);
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#00701a\"/>\n",
                p.0, p.1
            ));
        }
    }
    let caption = match lambda {
        Some(l) => format!("mode {index}, lambda = {l:.6}"),
        None => format!("mode {index}"),
    };
    svg.push_str(&format!(
        "<text x=\"{margin:.0}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"14\">{caption}</text>\n",
        height - 10.0
    ));
    svg.push_str("</svg>\n");
    svg
}
