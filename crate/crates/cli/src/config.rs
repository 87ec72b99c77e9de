//! Versioned, sectioned key-value run configuration.
//!
//! The format is line-oriented: a `mulab config v1` header, `[section]`
//! markers, `key = value` pairs, `#` comments. Unknown sections or keys are
//! errors; every run is reproducible from the file plus the CLI overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mulab::geom::Rect;
use mulab::{Domain, Measure, MeasureComponent, Point, Similarity};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
pub struct SolverCfg {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub cluster_tol: f64,
    pub dense_threshold: usize,
}

impl Default for SolverCfg {
    fn default() -> Self {
        SolverCfg { k: 8, tol: 1e-8, max_iter: 800, cluster_tol: 1e-3, dense_threshold: 2000 }
    }
}

#[derive(Clone, Debug)]
pub struct GreenCfg {
    pub enable: bool,
    pub image_order: usize,
    pub nodes_per_segment: usize,
    pub area_nodes_per_axis: usize,
}

impl Default for GreenCfg {
    fn default() -> Self {
        GreenCfg { enable: true, image_order: 6, nodes_per_segment: 256, area_nodes_per_axis: 48 }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub measure: Measure,
    pub solver: SolverCfg,
    pub nodal_tol_rel: f64,
    pub green: GreenCfg,
    /// Closed-form fixture for the validation command:
    /// `cross`, `double_cross`, `multi_cross_<n>` or absent.
    pub validate_example: Option<String>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Canonical text the config hash is computed from.
    pub canonical: String,
}

impl RunConfig {
    /// FNV-1a hash of the canonical config text (seed and overrides folded
    /// in).
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

type Section = BTreeMap<String, String>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
            Some((_, l)) => break l.trim().to_string(),
            None => return Err(ConfigError("empty config".into())),
        }
    };
    if header != "mulab config v1" {
        return Err(ConfigError(format!(
            "unsupported header {header:?}; expected \"mulab config v1\""
        )));
    }
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (ln, raw) in lines {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(ConfigError(format!("line {}: malformed section", ln + 1)));
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if sections.contains_key(&name) {
                return Err(ConfigError(format!("line {}: duplicate section [{name}]", ln + 1)));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected key = value", ln + 1)));
        };
        let Some(section) = current.as_ref() else {
            return Err(ConfigError(format!("line {}: key outside any section", ln + 1)));
        };
        let key = key.trim().to_string();
        let sec = sections.get_mut(section).unwrap();
        if sec.contains_key(&key) {
            return Err(ConfigError(format!("line {}: duplicate key {key}", ln + 1)));
        }
        sec.insert(key, value.trim().to_string());
    }
    Ok(sections)
}

struct SectionReader<'a> {
    name: &'a str,
    map: &'a Section,
    seen: std::cell::RefCell<Vec<String>>,
}

impl<'a> SectionReader<'a> {
    fn new(name: &'a str, map: &'a Section) -> Self {
        SectionReader { name, map, seen: std::cell::RefCell::new(Vec::new()) }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.seen.borrow_mut().push(key.to_string());
        self.map.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError(format!("[{}] is missing key {key}", self.name)))
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| ConfigError(format!("[{}] {key} = {v:?} is not a number", self.name)))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("[{}] {key} = {v:?} is not a number", self.name))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("[{}] {key} = {v:?} is not an integer", self.name))),
        }
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| ConfigError(format!("[{}] {key} = {v:?} is not an integer", self.name)))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(ConfigError(format!(
                "[{}] {key} = {v:?} is not true/false",
                self.name
            ))),
        }
    }

    fn finish(&self) -> Result<(), ConfigError> {
        let seen = self.seen.borrow();
        for key in self.map.keys() {
            if !seen.iter().any(|s| s == key) {
                return Err(ConfigError(format!("[{}] has unknown key {key}", self.name)));
            }
        }
        Ok(())
    }
}

fn parse_component(name: &str, sec: &Section, dim: usize) -> Result<MeasureComponent, ConfigError> {
    let r = SectionReader::new(name, sec);
    let kind = r.require("kind")?.to_string();
    let comp = match kind.as_str() {
        "area" => {
            let rect = if dim == 1 {
                Rect::new(r.f64("x0")?, r.f64("x1")?, 0.0, 0.0)
            } else {
                Rect::new(r.f64("x0")?, r.f64("x1")?, r.f64("y0")?, r.f64("y1")?)
            };
            MeasureComponent::Area { rect, weight: r.f64_or("weight", 1.0)? }
        }
        "segment" => MeasureComponent::Segment {
            a: Point::new(r.f64("ax")?, r.f64_or("ay", 0.0)?),
            b: Point::new(r.f64("bx")?, r.f64_or("by", 0.0)?),
            weight: r.f64_or("weight", 1.0)?,
        },
        "atom" => MeasureComponent::Atom {
            point: Point::new(r.f64("x")?, r.f64_or("y", 0.0)?),
            weight: r.f64_or("weight", 1.0)?,
        },
        "ifs" => {
            let maps_text = r.require("maps")?;
            let probs_text = r.require("probs")?;
            let depth = r.usize("depth")? as u32;
            let weight = r.f64_or("weight", 1.0)?;
            let mut maps = Vec::new();
            for (i, m) in maps_text.split(';').enumerate() {
                let parts: Vec<&str> = m.split(',').map(|s| s.trim()).collect();
                let nums: Result<Vec<f64>, _> = parts.iter().map(|s| s.parse()).collect();
                let nums = nums.map_err(|_| {
                    ConfigError(format!("[{name}] maps entry {i} is not numeric"))
                })?;
                let sim = match (dim, nums.len()) {
                    (1, 2) => Similarity::new_1d(nums[0], nums[1]),
                    (2, 4) => Similarity::new_2d(nums[0], nums[1], nums[2], nums[3]),
                    _ => {
                        return Err(ConfigError(format!(
                            "[{name}] maps entry {i}: expected {} numbers",
                            if dim == 1 { "2 (scale, tx)" } else { "4 (scale, rot, tx, ty)" }
                        )))
                    }
                };
                maps.push(sim);
            }
            let probs: Result<Vec<f64>, _> =
                probs_text.split(',').map(|s| s.trim().parse()).collect();
            let probs =
                probs.map_err(|_| ConfigError(format!("[{name}] probs is not numeric")))?;
            MeasureComponent::Ifs { maps, probs, depth, weight }
        }
        other => {
            return Err(ConfigError(format!(
                "[{name}] unknown component kind {other:?} (area | segment | atom | ifs)"
            )))
        }
    };
    r.finish()?;
    Ok(comp)
}

/// Parse a config file; `out_override` and `seed_override` come from the CLI
/// and are folded into the canonical text so they affect the config hash.
pub fn parse_config(
    text: &str,
    out_override: Option<PathBuf>,
    seed_override: Option<u64>,
) -> Result<RunConfig, ConfigError> {
    let sections = parse_sections(text)?;
    let known = ["domain", "mesh", "solver", "nodal", "green", "validate", "output", "run"];
    for name in sections.keys() {
        if !known.contains(&name.as_str()) && !name.starts_with("measure.") {
            return Err(ConfigError(format!("unknown section [{name}]")));
        }
    }

    let dom_sec = sections
        .get("domain")
        .ok_or_else(|| ConfigError("missing [domain] section".into()))?;
    let r = SectionReader::new("domain", dom_sec);
    let domain = match r.require("kind")? {
        "interval" => Domain::interval(r.f64("a")?, r.f64("b")?),
        "rect" => Domain::rect(r.f64("x0")?, r.f64("x1")?, r.f64("y0")?, r.f64("y1")?),
        other => {
            return Err(ConfigError(format!(
                "[domain] unknown kind {other:?} (interval | rect)"
            )))
        }
    };
    r.finish()?;
    let dim = domain.dim();

    let mesh_sec = sections
        .get("mesh")
        .ok_or_else(|| ConfigError("missing [mesh] section".into()))?;
    let r = SectionReader::new("mesh", mesh_sec);
    let (nx, ny) = if dim == 1 {
        (r.usize("n")?, 0)
    } else {
        (r.usize("nx")?, r.usize("ny")?)
    };
    r.finish()?;

    let mut comp_names: Vec<&String> =
        sections.keys().filter(|k| k.starts_with("measure.")).collect();
    comp_names.sort();
    if comp_names.is_empty() {
        return Err(ConfigError("no [measure.*] sections".into()));
    }
    let mut components = Vec::new();
    for name in comp_names {
        components.push(parse_component(name, &sections[name], dim)?);
    }
    let measure = Measure::new(domain, components)
        .map_err(|e| ConfigError(format!("invalid measure: {e}")))?;

    let empty = Section::new();
    let r = SectionReader::new("solver", sections.get("solver").unwrap_or(&empty));
    let d = SolverCfg::default();
    let solver = SolverCfg {
        k: r.usize_or("k", d.k)?,
        tol: r.f64_or("tol", d.tol)?,
        max_iter: r.usize_or("max_iter", d.max_iter)?,
        cluster_tol: r.f64_or("cluster_tol", d.cluster_tol)?,
        dense_threshold: r.usize_or("dense_threshold", d.dense_threshold)?,
    };
    r.finish()?;
    if solver.k < 1 || solver.tol <= 0.0 || solver.cluster_tol <= 0.0 {
        return Err(ConfigError("[solver] k must be >= 1 and tolerances positive".into()));
    }

    let r = SectionReader::new("nodal", sections.get("nodal").unwrap_or(&empty));
    let nodal_tol_rel = r.f64_or("tol_rel", 1e-8)?;
    r.finish()?;
    if nodal_tol_rel <= 0.0 {
        return Err(ConfigError("[nodal] tol_rel must be positive".into()));
    }

    let r = SectionReader::new("green", sections.get("green").unwrap_or(&empty));
    let g = GreenCfg::default();
    let green = GreenCfg {
        enable: r.bool_or("enable", g.enable)?,
        image_order: r.usize_or("image_order", g.image_order)?,
        nodes_per_segment: r.usize_or("nodes_per_segment", g.nodes_per_segment)?,
        area_nodes_per_axis: r.usize_or("area_nodes_per_axis", g.area_nodes_per_axis)?,
    };
    r.finish()?;

    let r = SectionReader::new("validate", sections.get("validate").unwrap_or(&empty));
    let validate_example = r.get("example").map(|s| s.to_string()).filter(|s| s != "none");
    r.finish()?;

    let r = SectionReader::new("output", sections.get("output").unwrap_or(&empty));
    let out_dir = out_override
        .unwrap_or_else(|| PathBuf::from(r.get("dir").unwrap_or("out").to_string()));
    r.finish()?;

    let r = SectionReader::new("run", sections.get("run").unwrap_or(&empty));
    let seed = match seed_override {
        Some(s) => {
            let _ = r.get("seed");
            s
        }
        None => r.usize_or("seed", 42)? as u64,
    };
    r.finish()?;

    let canonical = format!("{}\n# resolved seed = {}\n", text.trim_end(), seed);
    Ok(RunConfig {
        domain,
        nx,
        ny,
        measure,
        solver,
        nodal_tol_rel,
        green,
        validate_example,
        out_dir,
        seed,
        canonical,
    })
}
