//! Run configuration: a flat `key = value` file plus command-line overrides.

use crate::CliError;
use dtn_core::mesh::{import_mesh, BoundaryTag, Mesh, ObstacleShape};
use dtn_core::sim::SimConfig;
use dtn_core::Region;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "DTNRES_WORKERS";

/// Target mesh size of level 1.
pub const LEVEL1_H: f64 = std::f64::consts::PI / 25.0;

pub const KEYS: [&str; 14] = [
    "shape",
    "R",
    "N",
    "region",
    "level",
    "search_level",
    "n_quad",
    "threshold",
    "min_cell",
    "seed",
    "dedupe_radius",
    "residual_tol",
    "workers",
    "out_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Disk,
    Square,
    LShape,
    MeshFile(PathBuf),
}

impl FromStr for ShapeSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "disk" => ShapeSpec::Disk,
            "square" => ShapeSpec::Square,
            "lshape" => ShapeSpec::LShape,
            "" => return Err(CliError::Config("empty shape".into())),
            path => ShapeSpec::MeshFile(PathBuf::from(path)),
        })
    }
}

impl std::fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShapeSpec::Disk => f.write_str("disk"),
            ShapeSpec::Square => f.write_str("square"),
            ShapeSpec::LShape => f.write_str("lshape"),
            ShapeSpec::MeshFile(p) => write!(f, "{}", p.display()),
        }
    }
}

impl ShapeSpec {
    /// Unit disk, unit square or the L-shape; `None` for imported meshes.
    pub fn obstacle(&self) -> Option<ObstacleShape> {
        match self {
            ShapeSpec::Disk => Some(ObstacleShape::disk(1.0).expect("unit disk")),
            ShapeSpec::Square => Some(ObstacleShape::square(1.0).expect("unit square")),
            ShapeSpec::LShape => Some(ObstacleShape::lshape()),
            ShapeSpec::MeshFile(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub shape: ShapeSpec,
    pub radius: f64,
    pub n_max: usize,
    pub region: Region,
    pub level: usize,
    /// Level on which the region is searched; finer levels track the poles.
    pub search_level: usize,
    pub sim: SimConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shape: ShapeSpec::Disk,
            radius: 1.25,
            n_max: 20,
            region: Region::new([0.0, 4.0], [-4.0, 0.0]),
            level: 1,
            search_level: 1,
            sim: SimConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

pub fn parse_region(value: &str) -> Result<Region, CliError> {
    let v: Vec<f64> = value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| parse_value("region", s))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c, d] if a < b && c < d => Ok(Region::new([a, b], [c, d])),
        _ => Err(CliError::Config(format!(
            "region needs `re_min re_max im_min im_max` with increasing bounds, got `{value}`"
        ))),
    }
}

impl RunConfig {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "shape" => self.shape = value.trim().parse()?,
            "R" => self.radius = parse_value(key, value)?,
            "N" => self.n_max = parse_value(key, value)?,
            "region" => self.region = parse_region(value)?,
            "level" => self.level = parse_value(key, value)?,
            "search_level" => self.search_level = parse_value(key, value)?,
            "n_quad" => self.sim.n_quad = parse_value(key, value)?,
            "threshold" => self.sim.threshold = parse_value(key, value)?,
            "min_cell" => self.sim.min_cell = parse_value(key, value)?,
            "seed" => self.sim.probe_seed = parse_value(key, value)?,
            "dedupe_radius" => self.sim.dedupe_radius = parse_value(key, value)?,
            "residual_tol" => self.sim.residual_tol = parse_value(key, value)?,
            "workers" => self.sim.workers = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_text(&text)
    }

    /// Honours [`WORKERS_ENV`] when it is set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            self.sim.workers = parse_value(WORKERS_ENV, &v)?;
        }
        Ok(())
    }

    /// The file form, readable by [`from_text`](Self::from_text).
    pub fn to_text(&self) -> String {
        let r = &self.region;
        let s = &self.sim;
        let lines = [
            format!("shape = {}", self.shape),
            format!("R = {}", self.radius),
            format!("N = {}", self.n_max),
            format!("region = {} {} {} {}", r.re_min, r.re_max, r.im_min, r.im_max),
            format!("level = {}", self.level),
            format!("search_level = {}", self.search_level),
            format!("n_quad = {}", s.n_quad),
            format!("threshold = {}", s.threshold),
            format!("min_cell = {}", s.min_cell),
            format!("seed = {}", s.probe_seed),
            format!("dedupe_radius = {}", s.dedupe_radius),
            format!("residual_tol = {}", s.residual_tol),
            format!("workers = {}", s.workers),
            format!("out_dir = {}", self.out_dir.display()),
        ];
        lines.join("\n") + "\n"
    }

    /// Checks everything that does not need a mesh.
    pub fn validate(&self) -> Result<(), CliError> {
        let r = &self.region;
        if r.re_min < 0.0 || r.im_max > 0.0 {
            return Err(CliError::Config(format!(
                "region [{}, {}] x [{}, {}] must lie in Re >= 0, Im <= 0",
                r.re_min, r.re_max, r.im_min, r.im_max
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(CliError::Config(format!("R = {} must be positive", self.radius)));
        }
        if let Some(shape) = self.shape.obstacle() {
            if self.radius <= shape.circumradius() {
                return Err(CliError::Config(format!(
                    "R = {} does not exceed the obstacle's circumradius {}",
                    self.radius,
                    shape.circumradius()
                )));
            }
        }
        if self.level == 0 || self.search_level == 0 || self.search_level > self.level {
            return Err(CliError::Config(format!(
                "need 1 <= search_level ({}) <= level ({})",
                self.search_level, self.level
            )));
        }
        self.sim.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// The level-1 mesh: a template sized to [`LEVEL1_H`], or the imported file.
    pub fn base_mesh(&self) -> Result<Mesh, CliError> {
        match &self.shape {
            ShapeSpec::MeshFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let mesh = import_mesh(&text)?;
                let outer = mesh.tagged_vertices(BoundaryTag::GammaR);
                let r = outer.first().map(|&v| mesh.vertices[v][0].hypot(mesh.vertices[v][1]));
                match r {
                    Some(r) if (r - self.radius).abs() <= 1e-9 * self.radius => Ok(mesh),
                    _ => Err(CliError::Config(format!(
                        "mesh {} does not have its outer boundary at R = {}",
                        path.display(),
                        self.radius
                    ))),
                }
            }
            spec => {
                let shape = spec.obstacle().expect("generated shape");
                let (nt, nl) = dtn_core::mesh::template_for_mesh_size(&shape, self.radius, LEVEL1_H)?;
                Ok(dtn_core::mesh::generate_template_mesh(&shape, self.radius, nt, nl)?)
            }
        }
    }

    /// The mesh of `self.level`.
    pub fn mesh_at_level(&self) -> Result<Mesh, CliError> {
        let shape = self.shape.obstacle();
        let mut mesh = self.base_mesh()?;
        for _ in 1..self.level {
            mesh = dtn_core::mesh::refine_uniform(&mesh, shape.as_ref(), self.radius)?;
        }
        Ok(mesh)
    }
}
