//! Layered triangulations of the annulus between an obstacle and the circle `|x| = R`.
//!
//! Vertices sit on rays from the obstacle's star center `c`; every ray runs
//! from the obstacle boundary to the outer circle and is cut into equal
//! layers. Uniform red refinement re-snaps boundary midpoints onto the exact
//! curves, so curved boundaries stay inscribed polygons at every level.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("obstacle is not star-shaped about its center (direction θ = {theta})")]
    NotStarShaped { theta: f64 },
    #[error("R = {radius} does not enclose the obstacle (circumradius {circumradius})")]
    RadiusTooSmall { radius: f64, circumradius: f64 },
    #[error("invalid template parameters: {0}")]
    Template(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("mesh invariant violated: {0}")]
    Invariant(Violation),
    #[error("boundary edge {edge} ({a}, {b}) is not an edge of any triangle")]
    InconsistentTags { edge: usize, a: usize, b: usize },
}

/// The first failed check of [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("triangle {triangle} references a missing vertex")]
    VertexIndex { triangle: usize },
    #[error("triangle {triangle} is not positively oriented (area {area:e})")]
    Orientation { triangle: usize, area: f64 },
    #[error("edge ({a}, {b}) is shared by {count} triangles")]
    Conformity { a: usize, b: usize, count: usize },
    #[error("edge ({a}, {b}) lies on the boundary but carries no tag")]
    UntaggedBoundary { a: usize, b: usize },
    #[error("tagged edge ({a}, {b}) is not a boundary edge")]
    TaggedInterior { a: usize, b: usize },
    #[error("{tag} edges do not form a single closed loop")]
    BoundaryLoop { tag: BoundaryTag },
    #[error("GAMMA_R vertex {vertex} is off the circle (|x| = {radius})")]
    Snapping { vertex: usize, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Gamma,
    GammaR,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Gamma => "GAMMA",
            BoundaryTag::GammaR => "GAMMA_R",
        }
    }
}

impl std::fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Disk { radius: f64 },
    Square { side: f64 },
    LShape,
    Polygon(Vec<Point>),
}

/// Obstacle `D`, star-shaped about `star_center`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleShape {
    pub kind: ShapeKind,
    pub star_center: Point,
    /// Counter-clockwise corners for polygonal kinds.
    corners: Vec<Point>,
}

impl ObstacleShape {
    /// Disk of the given radius about the origin.
    pub fn disk(radius: f64) -> Result<Self, MeshError> {
        if !(radius > 0.0) {
            return Err(MeshError::Template(format!("disk radius {radius}")));
        }
        Ok(Self {
            kind: ShapeKind::Disk { radius },
            star_center: [0.0, 0.0],
            corners: Vec::new(),
        })
    }

    /// Axis-aligned square of the given side centered at the origin.
    pub fn square(side: f64) -> Result<Self, MeshError> {
        if !(side > 0.0) {
            return Err(MeshError::Template(format!("square side {side}")));
        }
        let a = 0.5 * side;
        let corners = vec![[-a, -a], [a, -a], [a, a], [-a, a]];
        Self::with_corners(ShapeKind::Square { side }, corners, [0.0, 0.0])
    }

    /// `(-1/2, 1/2)^2` minus the closed upper-right quarter, centered at `(-1/4, -1/4)`.
    pub fn lshape() -> Self {
        let corners = vec![
            [-0.5, -0.5],
            [0.5, -0.5],
            [0.5, 0.0],
            [0.0, 0.0],
            [0.0, 0.5],
            [-0.5, 0.5],
        ];
        Self::with_corners(ShapeKind::LShape, corners, [-0.25, -0.25])
            .expect("the L-shape is star-shaped about (-1/4, -1/4)")
    }

    pub fn polygon(corners: Vec<Point>, star_center: Point) -> Result<Self, MeshError> {
        Self::with_corners(ShapeKind::Polygon(corners.clone()), corners, star_center)
    }

    fn with_corners(kind: ShapeKind, mut corners: Vec<Point>, c: Point) -> Result<Self, MeshError> {
        if corners.len() < 3 {
            return Err(MeshError::Template("polygon needs at least 3 corners".into()));
        }
        if polygon_area(&corners) < 0.0 {
            corners.reverse();
        }
        let n = corners.len();
        for i in 0..n {
            let a = corners[i];
            let b = corners[(i + 1) % n];
            // c must lie strictly left of every edge.
            let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if !(cross > 1e-12) {
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                return Err(MeshError::NotStarShaped {
                    theta: (mid[1] - c[1]).atan2(mid[0] - c[0]),
                });
            }
        }
        let shape = Self {
            kind,
            star_center: c,
            corners,
        };
        for i in 0..4096 {
            let theta = TAU * i as f64 / 4096.0;
            let r = shape.radial(theta);
            if !(r.is_finite() && r > 0.0) {
                return Err(MeshError::NotStarShaped { theta });
            }
        }
        Ok(shape)
    }

    /// Distance from the star center to `Γ` along direction `theta`.
    pub fn radial(&self, theta: f64) -> f64 {
        let e = [theta.cos(), theta.sin()];
        match self.kind {
            ShapeKind::Disk { radius } => radius,
            _ => {
                let c = self.star_center;
                let n = self.corners.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let a = self.corners[i];
                    let b = self.corners[(i + 1) % n];
                    let d = [b[0] - a[0], b[1] - a[1]];
                    let det = e[0] * (-d[1]) - e[1] * (-d[0]);
                    if det.abs() < 1e-300 {
                        continue;
                    }
                    let rhs = [a[0] - c[0], a[1] - c[1]];
                    let t = (rhs[0] * (-d[1]) - rhs[1] * (-d[0])) / det;
                    let s = (e[0] * rhs[1] - e[1] * rhs[0]) / det;
                    if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                        best = best.min(t);
                    }
                }
                best
            }
        }
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        let r = self.radial(theta);
        let c = self.star_center;
        [c[0] + r * theta.cos(), c[1] + r * theta.sin()]
    }

    /// Polar angles (about the star center, in `[0, 2π)`) of the polygon corners.
    pub fn corner_angles(&self) -> Vec<f64> {
        let c = self.star_center;
        self.corners
            .iter()
            .map(|p| (p[1] - c[1]).atan2(p[0] - c[0]).rem_euclid(TAU))
            .collect()
    }

    pub fn is_polygonal(&self) -> bool {
        !matches!(self.kind, ShapeKind::Disk { .. })
    }

    /// Largest `|x|` over `Γ`.
    pub fn circumradius(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk { radius } => radius,
            _ => self
                .corners
                .iter()
                .map(|p| p[0].hypot(p[1]))
                .fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            ShapeKind::Disk { radius } => PI * radius * radius,
            _ => polygon_area(&self.corners),
        }
    }

    /// Projects a point near `Γ` onto `Γ` along the ray from the star center.
    pub fn project(&self, p: Point) -> Point {
        match self.kind {
            ShapeKind::Disk { radius } => {
                let r = p[0].hypot(p[1]);
                [p[0] * radius / r, p[1] * radius / r]
            }
            // Straight edges: the midpoint is already on Γ.
            _ => p,
        }
    }
}

fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    0.5 * (0..n)
        .map(|i| {
            let a = p[i];
            let b = p[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Parent vertices of each vertex of a refined mesh: coarse vertices map to
/// themselves, midpoints to the two ends of their coarse edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    pub parents: Vec<[usize; 2]>,
    pub n_coarse: usize,
}

impl Prolongation {
    /// Piecewise-linear interpolation of coarse nodal values.
    pub fn apply<T>(&self, coarse: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        assert_eq!(coarse.len(), self.n_coarse);
        self.parents
            .iter()
            .map(|&[a, b]| {
                if a == b {
                    coarse[a]
                } else {
                    (coarse[a] + coarse[b]) * 0.5
                }
            })
            .collect()
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.boundary_edges
            .iter()
            .filter(move |e| e.tag == tag)
            .map(|e| e.v)
    }

    /// Sorted, deduplicated vertices touching an edge with this tag.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges_with_tag(tag).flatten().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn edge_counts(&self) -> Result<HashMap<(usize, usize), usize>, Violation> {
        let n = self.vertices.len();
        let mut counts = HashMap::with_capacity(self.triangles.len() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Violation::VertexIndex { triangle: t });
            }
            for k in 0..3 {
                *counts.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        Ok(counts)
    }

    /// Checks every structural invariant, reporting the first failure.
    pub fn validate(&self) -> Result<(), Violation> {
        let counts = self.edge_counts()?;
        for t in 0..self.triangles.len() {
            let area = self.triangle_area(t);
            if !(area > 1e-14) {
                return Err(Violation::Orientation { triangle: t, area });
            }
        }
        let mut keys: Vec<_> = counts.iter().collect();
        keys.sort_unstable();
        if let Some((&(a, b), &count)) = keys.iter().find(|(_, &c)| c > 2) {
            return Err(Violation::Conformity { a, b, count });
        }
        let mut tagged = HashMap::new();
        for e in &self.boundary_edges {
            let key = edge_key(e.v[0], e.v[1]);
            if counts.get(&key) != Some(&1) || tagged.insert(key, e.tag).is_some() {
                return Err(Violation::TaggedInterior { a: key.0, b: key.1 });
            }
        }
        if let Some((&(a, b), _)) = keys.iter().find(|(k, &c)| c == 1 && !tagged.contains_key(*k)) {
            return Err(Violation::UntaggedBoundary { a, b });
        }
        for tag in [BoundaryTag::Gamma, BoundaryTag::GammaR] {
            if !self.is_single_loop(tag) {
                return Err(Violation::BoundaryLoop { tag });
            }
        }
        let outer = self.tagged_vertices(BoundaryTag::GammaR);
        let radius = |v: usize| self.vertices[v][0].hypot(self.vertices[v][1]);
        let mut radii: Vec<f64> = outer.iter().map(|&v| radius(v)).collect();
        radii.sort_by(f64::total_cmp);
        let r0 = radii[radii.len() / 2];
        if let Some(&v) = outer.iter().find(|&&v| (radius(v) - r0).abs() > 1e-12 * r0) {
            return Err(Violation::Snapping {
                vertex: v,
                radius: radius(v),
            });
        }
        Ok(())
    }

    fn is_single_loop(&self, tag: BoundaryTag) -> bool {
        let edges: Vec<[usize; 2]> = self.edges_with_tag(tag).collect();
        if edges.len() < 3 {
            return false;
        }
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for [a, b] in &edges {
            adj.entry(*a).or_default().push(*b);
            adj.entry(*b).or_default().push(*a);
        }
        if adj.values().any(|n| n.len() != 2) {
            return false;
        }
        // Walk the loop from any vertex; every vertex must be reached.
        let start = edges[0][0];
        let (mut prev, mut cur) = (start, adj[&start][0]);
        let mut steps = 1;
        while cur != start {
            let next = if adj[&cur][0] == prev { adj[&cur][1] } else { adj[&cur][0] };
            prev = cur;
            cur = next;
            steps += 1;
            if steps > edges.len() {
                return false;
            }
        }
        steps == edges.len()
    }
}

/// Max edge length over all triangles.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    let v = &mesh.vertices;
    mesh.triangles
        .iter()
        .flat_map(|t| [dist(v[t[0]], v[t[1]]), dist(v[t[1]], v[t[2]]), dist(v[t[2]], v[t[0]])])
        .fold(0.0, f64::max)
}

fn check_radius(shape: &ObstacleShape, radius: f64) -> Result<(), MeshError> {
    let circumradius = shape.circumradius();
    let c = shape.star_center;
    if !(radius > circumradius) || c[0].hypot(c[1]) >= radius {
        return Err(MeshError::RadiusTooSmall {
            radius,
            circumradius,
        });
    }
    Ok(())
}

/// Ray angles about the star center: the uniform grid merged with the
/// polygon corners (grid angles within `0.3 Δθ` of a corner are dropped).
pub fn ray_angles(shape: &ObstacleShape, n_theta: usize) -> Vec<f64> {
    let step = TAU / n_theta as f64;
    let corners = shape.corner_angles();
    let near_corner = |a: f64| {
        corners.iter().any(|&c| {
            let d = (a - c).rem_euclid(TAU);
            d.min(TAU - d) < 0.3 * step
        })
    };
    let mut angles: Vec<f64> = (0..n_theta)
        .map(|i| step * i as f64)
        .filter(|&a| !near_corner(a))
        .chain(corners.iter().copied())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Layered template mesh; see the module docs.
pub fn generate_template_mesh(
    shape: &ObstacleShape,
    radius: f64,
    n_theta: usize,
    n_layers: usize,
) -> Result<Mesh, MeshError> {
    if n_theta < 8 || n_layers < 2 {
        return Err(MeshError::Template(format!(
            "n_theta = {n_theta} (>= 8), n_layers = {n_layers} (>= 2)"
        )));
    }
    check_radius(shape, radius)?;
    let mesh = build_template(shape, radius, n_theta, n_layers);
    mesh.validate().map_err(MeshError::Invariant)?;
    Ok(mesh)
}

fn build_template(shape: &ObstacleShape, radius: f64, n_theta: usize, n_layers: usize) -> Mesh {
    let c = shape.star_center;
    let angles = ray_angles(shape, n_theta);
    let n_rays = angles.len();
    let per_ray = n_layers + 1;

    let mut vertices = Vec::with_capacity(n_rays * per_ray);
    for &theta in &angles {
        let e = [theta.cos(), theta.sin()];
        let inner = shape.boundary_point(theta);
        let ce = c[0] * e[0] + c[1] * e[1];
        let t = -ce + (ce * ce - (c[0] * c[0] + c[1] * c[1]) + radius * radius).sqrt();
        let mut outer = [c[0] + t * e[0], c[1] + t * e[1]];
        let r = outer[0].hypot(outer[1]);
        outer = [outer[0] * radius / r, outer[1] * radius / r];
        for j in 0..=n_layers {
            let s = j as f64 / n_layers as f64;
            vertices.push(if j == n_layers {
                outer
            } else {
                [
                    inner[0] + s * (outer[0] - inner[0]),
                    inner[1] + s * (outer[1] - inner[1]),
                ]
            });
        }
    }

    let id = |i: usize, j: usize| (i % n_rays) * per_ray + j;
    let mut triangles = Vec::with_capacity(2 * n_rays * n_layers);
    for i in 0..n_rays {
        for j in 0..n_layers {
            let (a, b, cc, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let d_ac = dist(vertices[a], vertices[cc]);
            let d_bd = dist(vertices[b], vertices[d]);
            let use_ac = if (d_ac - d_bd).abs() <= 1e-10 * d_ac.max(d_bd) {
                (i + j) % 2 == 0
            } else {
                d_ac < d_bd
            };
            let pair = if use_ac {
                [[a, b, cc], [a, cc, d]]
            } else {
                [[a, b, d], [b, cc, d]]
            };
            for mut t in pair {
                if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                    t.swap(1, 2);
                }
                triangles.push(t);
            }
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * n_rays);
    for i in 0..n_rays {
        boundary_edges.push(BoundaryEdge {
            v: [id(i, 0), id(i + 1, 0)],
            tag: BoundaryTag::Gamma,
        });
    }
    for i in 0..n_rays {
        boundary_edges.push(BoundaryEdge {
            v: [id(i, n_layers), id(i + 1, n_layers)],
            tag: BoundaryTag::GammaR,
        });
    }
    Mesh {
        vertices,
        triangles,
        boundary_edges,
    }
}

/// Red refinement; see [`refine_with_prolongation`].
pub fn refine_uniform(
    mesh: &Mesh,
    shape: Option<&ObstacleShape>,
    radius: f64,
) -> Result<Mesh, MeshError> {
    refine_with_prolongation(mesh, shape, radius).map(|(m, _)| m)
}

/// Splits every triangle into four. `GAMMA_R` midpoints go radially onto
/// `|x| = radius`; `GAMMA` midpoints are projected onto the obstacle when a
/// shape is given. Coarse vertices keep their indices.
///
/// Snapping onto a convex obstacle pushes midpoints into the domain, so a
/// template whose first layer is thinner than about `r Δθ² / 4` folds over
/// and is rejected with an orientation error.
pub fn refine_with_prolongation(
    mesh: &Mesh,
    shape: Option<&ObstacleShape>,
    radius: f64,
) -> Result<(Mesh, Prolongation), MeshError> {
    let n0 = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    let mut parents: Vec<[usize; 2]> = (0..n0).map(|i| [i, i]).collect();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.triangles.len() / 2);
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());

    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            parents.push([a.min(b), a.max(b)]);
            vertices.len() - 1
        })
    };
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        let [a, b] = e.v;
        let Some(&m) = mid.get(&edge_key(a, b)) else {
            return Err(MeshError::InconsistentTags { edge: k, a, b });
        };
        let p = vertices[m];
        vertices[m] = match (e.tag, shape) {
            (BoundaryTag::GammaR, _) => {
                let r = p[0].hypot(p[1]);
                [p[0] * radius / r, p[1] * radius / r]
            }
            (BoundaryTag::Gamma, Some(s)) => s.project(p),
            (BoundaryTag::Gamma, None) => p,
        };
        boundary_edges.push(BoundaryEdge { v: [a, m], tag: e.tag });
        boundary_edges.push(BoundaryEdge { v: [m, b], tag: e.tag });
    }
    let refined = Mesh {
        vertices,
        triangles,
        boundary_edges,
    };
    refined.validate().map_err(MeshError::Invariant)?;
    Ok((
        refined,
        Prolongation {
            parents,
            n_coarse: n0,
        },
    ))
}

/// Template parameters `(n_theta, n_layers)` whose mesh size lies within 10%
/// of `target`, preferring `h <= target` and then the fewest vertices.
///
/// Disks take `n_theta` divisible by 4. Squares take `n_theta ≡ 2 (mod 4)`,
/// which keeps `π/2` off the grid: the mesh then has no quarter-turn symmetry
/// and the square's degenerate mode pairs split slightly.
pub fn template_for_mesh_size(
    shape: &ObstacleShape,
    radius: f64,
    target: f64,
) -> Result<(usize, usize), MeshError> {
    check_radius(shape, radius)?;
    let step = match shape.kind {
        ShapeKind::Disk { .. } | ShapeKind::Square { .. } => 4,
        _ => 2,
    };
    let offset = match shape.kind {
        ShapeKind::Square { .. } => 2,
        _ => 0,
    };
    let c = shape.star_center;
    let lower = (radius - c[0].hypot(c[1])) * TAU / (1.1 * target);
    let first = ((lower / step as f64).floor() as usize * step + offset).max(8 + offset);
    let mut best: Option<(bool, usize, f64, usize, usize)> = None;
    for n_layers in 2..=60 {
        let mut n_theta = first;
        while n_theta <= 2000 {
            let mesh = build_template(shape, radius, n_theta, n_layers);
            let h = mesh_size(&mesh);
            if h < 0.9 * target {
                break;
            }
            if h <= 1.1 * target {
                let over = h > target;
                let cand = (over, mesh.n_vertices(), (h / target - 1.0).abs(), n_theta, n_layers);
                let better = match &best {
                    None => true,
                    Some(b) => (cand.0, cand.1) < (b.0, b.1),
                };
                if better {
                    best = Some(cand);
                }
            }
            n_theta += step;
        }
    }
    let (n_theta, n_layers) = best.map(|b| (b.3, b.4)).ok_or_else(|| {
        MeshError::Template(format!("no template reaches mesh size {target} within 10%"))
    })?;
    generate_template_mesh(shape, radius, n_theta, n_layers)?;
    Ok((n_theta, n_layers))
}

/// Native text format (`meshfmt 1`).
pub fn export_mesh(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(64 * (mesh.vertices.len() + mesh.triangles.len()));
    s.push_str("meshfmt 1\n");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag);
    }
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Result<(usize, Vec<(usize, &'a str)>), MeshError> {
        for (i, line) in self.iter.by_ref() {
            self.last = i + 1;
            let tokens: Vec<(usize, &str)> = line
                .split_whitespace()
                .map(|t| (t.as_ptr() as usize - line.as_ptr() as usize + 1, t))
                .collect();
            if !tokens.is_empty() {
                return Ok((i + 1, tokens));
            }
        }
        Err(MeshError::Parse {
            line: self.last + 1,
            column: 1,
            message: "unexpected end of input".into(),
        })
    }
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn expect_count(lines: &mut Lines, keyword: &str) -> Result<usize, MeshError> {
    let (ln, tok) = lines.next_tokens()?;
    if tok.len() != 2 || tok[0].1 != keyword {
        return Err(parse_err(ln, tok[0].0, format!("expected `{keyword} <count>`")));
    }
    tok[1]
        .1
        .parse()
        .map_err(|_| parse_err(ln, tok[1].0, format!("invalid count `{}`", tok[1].1)))
}

fn parse_fields<T: std::str::FromStr>(
    ln: usize,
    tok: &[(usize, &str)],
    n: usize,
) -> Result<Vec<T>, MeshError> {
    if tok.len() < n {
        let col = tok.last().map(|t| t.0 + t.1.len()).unwrap_or(1);
        return Err(parse_err(ln, col, format!("expected {n} fields")));
    }
    tok[..n]
        .iter()
        .map(|&(col, t)| {
            t.parse()
                .map_err(|_| parse_err(ln, col, format!("invalid number `{t}`")))
        })
        .collect()
}

/// Parses the native format and validates the result.
pub fn import_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        last: 0,
    };
    let (ln, tok) = lines.next_tokens()?;
    if tok.len() != 2 || tok[0].1 != "meshfmt" || tok[1].1 != "1" {
        return Err(parse_err(ln, 1, "expected header `meshfmt 1`"));
    }
    let nv = expect_count(&mut lines, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, tok) = lines.next_tokens()?;
        let f: Vec<f64> = parse_fields(ln, &tok, 2)?;
        vertices.push([f[0], f[1]]);
    }
    let nt = expect_count(&mut lines, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, tok) = lines.next_tokens()?;
        let f: Vec<usize> = parse_fields(ln, &tok, 3)?;
        triangles.push([f[0], f[1], f[2]]);
    }
    let nb = expect_count(&mut lines, "boundary")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, tok) = lines.next_tokens()?;
        let f: Vec<usize> = parse_fields(ln, &tok, 2)?;
        let tag = match tok.get(2) {
            Some((_, "GAMMA")) => BoundaryTag::Gamma,
            Some((_, "GAMMA_R")) => BoundaryTag::GammaR,
            Some((col, t)) => return Err(parse_err(ln, *col, format!("unknown tag `{t}`"))),
            None => return Err(parse_err(ln, tok[1].0 + tok[1].1.len(), "missing tag")),
        };
        if f.iter().any(|&v| v >= nv) {
            return Err(parse_err(ln, 1, "boundary vertex index out of range"));
        }
        boundary_edges.push(BoundaryEdge { v: [f[0], f[1]], tag });
    }
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
    };
    mesh.validate().map_err(MeshError::Invariant)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_angles_of_lshape() {
        let s = ObstacleShape::lshape();
        let mut a = s.corner_angles();
        a.sort_by(f64::total_cmp);
        assert!((a[1] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn radial_function_of_square() {
        let s = ObstacleShape::square(1.0).unwrap();
        assert!((s.radial(0.0) - 0.5).abs() < 1e-15);
        assert!((s.radial(PI / 4.0) - 0.5 * 2f64.sqrt()).abs() < 1e-14);
        assert!((s.radial(-PI / 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_star_polygon_is_rejected() {
        // A "C" shape seen from a point in its mouth.
        let c = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.2], [0.2, 0.2], [0.2, 0.8], [1.0, 0.8], [1.0, 1.0], [0.0, 1.0]];
        assert!(matches!(
            ObstacleShape::polygon(c, [0.6, 0.5]),
            Err(MeshError::NotStarShaped { .. })
        ));
    }
}
