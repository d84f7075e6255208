//! Spectral indicator method over a rectangle of the lower half k-plane.
//!
//! Each square cell gets a circular contour of radius
//! `contour_inflate · √2 · half_width` and the indicator
//! `δ = ‖(1/n) Σ_q (z_q - c) B(z_q)^{-1} f‖ / ‖f‖`, the trapezoid rule for the
//! contour integral of the resolvent applied to a fixed random probe `f`.
//! Cells with `δ` above the threshold are split into four until they are
//! `min_cell` small; the survivors seed nonlinear inverse iteration.
//!
//! Contours must avoid the branch cut of `H_n^{(1)}(kR)` on the negative real
//! axis. Cells whose contour reaches it are split without an indicator and
//! dropped once smaller than `origin_cutoff`.

use crate::linalg::{dot, norm2, normalize, random_vector, C64};
use crate::nep::{refine_eigenpair, EigenPair, NepError, RefineOptions, ResonanceOperator};
use crate::Region;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub center: C64,
    pub half_width: f64,
    pub depth: usize,
}

impl Cell {
    pub fn children(&self) -> [Cell; 4] {
        let h = 0.5 * self.half_width;
        [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)].map(|(a, b)| Cell {
            center: self.center + C64::new(a * h, b * h),
            half_width: h,
            depth: self.depth + 1,
        })
    }

    pub fn contour_radius(&self, inflate: f64) -> f64 {
        inflate * std::f64::consts::SQRT_2 * self.half_width
    }

    /// Whether `z` lies in the cell grown by `factor`.
    pub fn contains_scaled(&self, z: C64, factor: f64) -> bool {
        let d = z - self.center;
        d.re.abs() <= factor * self.half_width && d.im.abs() <= factor * self.half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_quad: usize,
    pub contour_inflate: f64,
    pub threshold: f64,
    pub deep_threshold: f64,
    pub deep_depth: usize,
    pub min_cell: f64,
    pub probe_seed: u64,
    pub max_depth: usize,
    pub dedupe_radius: f64,
    pub residual_tol: f64,
    pub origin_cutoff: f64,
    pub refine_tol: f64,
    pub refine_max_iter: usize,
    pub workers: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_quad: 16,
            contour_inflate: 1.25,
            threshold: 1e-2,
            deep_threshold: 1e-4,
            deep_depth: 8,
            min_cell: 5e-4,
            probe_seed: 7,
            max_depth: 16,
            dedupe_radius: 1e-6,
            residual_tol: 1e-8,
            origin_cutoff: 1e-2,
            refine_tol: 1e-12,
            refine_max_iter: 30,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.n_quad < 8 {
            return bad("n_quad must be at least 8");
        }
        if !(self.contour_inflate > 1.0) {
            return bad("contour_inflate must exceed 1");
        }
        if !(self.min_cell > 0.0) || !(self.threshold > 0.0) || !(self.deep_threshold > 0.0) {
            return bad("min_cell and thresholds must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    fn threshold_at(&self, depth: usize) -> f64 {
        if depth >= self.deep_depth {
            self.deep_threshold
        } else {
            self.threshold
        }
    }

    pub fn refine_options(&self, seed: u64) -> RefineOptions {
        RefineOptions {
            tol: self.refine_tol,
            max_iter: self.refine_max_iter,
            seed,
            max_restarts: 3,
        }
    }

    /// Runs `f` inside a pool of [`workers`](Self::workers) threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, SimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        Ok(pool.install(f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub cell: Cell,
    pub indicator: f64,
    /// Emitted at `max_depth` while still above threshold.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPole {
    pub lambda: C64,
    pub residual: f64,
    pub cell_of_origin: Cell,
    pub group_size: usize,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub cell: Cell,
    pub lambda: Option<C64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub poles: Vec<ValidatedPole>,
    pub candidates: Vec<Candidate>,
    pub rejected: Vec<Rejection>,
}

fn touches_cut(cell: &Cell, inflate: f64) -> bool {
    let r = cell.contour_radius(inflate);
    let c = cell.center;
    c.im.abs() <= r && (c.re <= 0.0 || c.norm() <= r)
}

/// Contour indicator of one cell for the probe `f`.
pub fn indicator(op: &ResonanceOperator, cell: &Cell, config: &SimConfig, f: &[C64]) -> f64 {
    let r = cell.contour_radius(config.contour_inflate);
    let n = config.n_quad;
    let mut acc = vec![C64::new(0.0, 0.0); f.len()];
    if let Some(modal) = op.modal() {
        let gf = modal.project(f);
        for q in 0..n {
            let w = C64::from_polar(r, 2.0 * PI * q as f64 / n as f64);
            let x = op
                .coefficients(cell.center + w)
                .and_then(|c| modal.solve(&c, &gf));
            match x {
                Ok(x) => {
                    for (a, v) in acc.iter_mut().zip(&x) {
                        *a += w * v;
                    }
                }
                Err(_) => return f64::INFINITY,
            }
        }
        return norm2(&modal.to_nodal(&acc)) / (n as f64 * norm2(f));
    }
    for q in 0..n {
        let w = C64::from_polar(r, 2.0 * PI * q as f64 / n as f64);
        match op.solve_linear(cell.center + w, f) {
            Ok(x) => {
                for (a, v) in acc.iter_mut().zip(&x) {
                    *a += w * v;
                }
            }
            Err(NepError::NearEigenvalue { .. }) => return f64::INFINITY,
            Err(e) => {
                log::warn!("indicator solve failed at {}: {e}", cell.center + w);
                return f64::INFINITY;
            }
        }
    }
    norm2(&acc) / (n as f64 * norm2(f))
}

/// Root cells of half-width at most 0.5 tiling `region`.
pub fn root_cells(region: &Region) -> Vec<Cell> {
    let nx = (region.width() / 1.0).ceil().max(1.0) as usize;
    let ny = (region.height() / 1.0).ceil().max(1.0) as usize;
    let hw = 0.5 * (region.width() / nx as f64).max(region.height() / ny as f64);
    let mut cells = vec![];
    for i in 0..nx {
        for j in 0..ny {
            cells.push(Cell {
                center: C64::new(
                    region.re_min + (2 * i + 1) as f64 * region.width() / (2 * nx) as f64,
                    region.im_min + (2 * j + 1) as f64 * region.height() / (2 * ny) as f64,
                ),
                half_width: hw,
                depth: 0,
            });
        }
    }
    cells
}

fn lex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Breadth-first quadtree search; candidates sorted by centre.
pub fn search(op: &ResonanceOperator, region: &Region, config: &SimConfig) -> Result<Vec<Candidate>, SimError> {
    config.validate()?;
    let f = random_vector(op.ndof(), config.probe_seed);
    let mut level = root_cells(region);
    let mut out = vec![];
    while !level.is_empty() {
        let deltas: Vec<Option<f64>> = config.install(|| {
            level
                .par_iter()
                .map(|c| (!touches_cut(c, config.contour_inflate)).then(|| indicator(op, c, config, &f)))
                .collect()
        })?;
        let mut next = vec![];
        for (cell, delta) in level.iter().zip(deltas) {
            let Some(delta) = delta else {
                if cell.half_width > config.origin_cutoff {
                    next.extend(cell.children());
                }
                continue;
            };
            if !(delta > config.threshold_at(cell.depth)) {
                continue;
            }
            if cell.half_width <= config.min_cell {
                out.push(Candidate {
                    cell: *cell,
                    indicator: delta,
                    flagged: false,
                });
            } else if cell.depth >= config.max_depth {
                let g = random_vector(op.ndof(), config.probe_seed.wrapping_add(1));
                let second = indicator(op, cell, config, &g);
                if second > config.threshold_at(cell.depth) {
                    log::warn!("cell at {} still active at max depth", cell.center);
                    out.push(Candidate {
                        cell: *cell,
                        indicator: delta.max(second),
                        flagged: true,
                    });
                }
            } else {
                next.extend(cell.children());
            }
        }
        level = next;
    }
    out.sort_by(|a, b| lex(&a.cell.center, &b.cell.center));
    Ok(out)
}

/// Refinement seed derived from the probe seed and a point of the k-plane.
pub fn seed_for(config: &SimConfig, z: C64) -> u64 {
    let mut h = config.probe_seed ^ 0x9e37_79b9_7f4a_7c15;
    for bits in [z.re.to_bits(), z.im.to_bits()] {
        h = (h ^ bits).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

/// Inverse iteration restricted to vectors `B'`-orthogonal to `first`, started
/// next to `first.lambda`.
pub fn partner_search(
    op: &ResonanceOperator,
    first: &EigenPair,
    opts: &RefineOptions,
    radius: f64,
) -> Option<EigenPair> {
    let u1 = &first.vector;
    let project = |k: C64, v: &mut Vec<C64>| -> Option<()> {
        let bu1 = op.derivative_apply(k, u1).ok()?;
        let den = dot(u1, &bu1);
        if den.norm() == 0.0 {
            return None;
        }
        let a = dot(&bu1, v) / den;
        for (x, y) in v.iter_mut().zip(u1) {
            *x -= a * y;
        }
        Some(())
    };
    let mut k = first.lambda + C64::new(0.5, -0.5) * radius.min(1e-3) * 0.1;
    let mut u = random_vector(op.ndof(), opts.seed ^ 0x5a5a);
    project(k, &mut u)?;
    normalize(&mut u);
    for it in 1..=opts.max_iter {
        let res = op.factor(k).ok()?;
        let rhs = op.derivative_apply(k, &u).ok()?;
        let mut v = res.solve(&rhs).ok()?;
        project(k, &mut v)?;
        if normalize(&mut v) == 0.0 {
            return None;
        }
        u = v;
        let bu = op.apply(k, &u).ok()?;
        let dbu = op.derivative_apply(k, &u).ok()?;
        let den = dot(&u, &dbu);
        if den.norm() == 0.0 {
            return None;
        }
        let dk = dot(&u, &bu) / den;
        k -= dk;
        if (k - first.lambda).norm() > radius {
            return None;
        }
        if dk.norm() <= opts.tol * k.norm() {
            let residual = op.residual(k, &u).ok()?;
            let overlap = crate::linalg::dotc(u1, &u).norm();
            return (overlap < 0.9).then_some(EigenPair {
                lambda: k,
                vector: u,
                residual,
                iterations: it,
            });
        }
    }
    None
}

/// Merges poles closer than `radius`, keeping the smallest residual.
pub fn dedupe(mut poles: Vec<ValidatedPole>, radius: f64) -> Vec<ValidatedPole> {
    poles.sort_by(|a, b| a.residual.total_cmp(&b.residual).then(lex(&a.lambda, &b.lambda)));
    let mut kept: Vec<ValidatedPole> = vec![];
    for p in poles {
        match kept.iter_mut().find(|q| (q.lambda - p.lambda).norm() <= radius) {
            Some(q) => q.group_size += p.group_size,
            None => kept.push(p),
        }
    }
    kept.sort_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm()).then(lex(&a.lambda, &b.lambda)));
    kept
}

/// Search, refinement, validation, partner search and merging.
pub fn find_resonances(op: &ResonanceOperator, region: &Region, config: &SimConfig) -> Result<SimReport, SimError> {
    let candidates = search(op, region, config)?;
    let refined: Vec<Result<EigenPair, NepError>> = config.install(|| {
        candidates
            .par_iter()
            .map(|c| refine_eigenpair(op, c.cell.center, &config.refine_options(seed_for(config, c.cell.center)), None))
            .collect()
    })?;
    let mut rejected = vec![];
    let mut accepted = vec![];
    for (c, r) in candidates.iter().zip(refined) {
        match r {
            Ok(p) if p.residual > config.residual_tol => rejected.push(Rejection {
                cell: c.cell,
                lambda: Some(p.lambda),
                reason: format!("residual {:.2e}", p.residual),
            }),
            Ok(p) if !c.cell.contains_scaled(p.lambda, 10.0) => rejected.push(Rejection {
                cell: c.cell,
                lambda: Some(p.lambda),
                reason: "left its cell".into(),
            }),
            Ok(p) => accepted.push(ValidatedPole {
                lambda: p.lambda,
                residual: p.residual,
                cell_of_origin: c.cell,
                group_size: 1,
                vector: p.vector,
            }),
            Err(e) => rejected.push(Rejection {
                cell: c.cell,
                lambda: None,
                reason: e.to_string(),
            }),
        }
    }
    let poles = dedupe(accepted, config.dedupe_radius);
    let partner_radius = 10.0 * config.min_cell;
    let partners: Vec<Option<EigenPair>> = config.install(|| {
        poles
            .par_iter()
            .map(|p| {
                let pair = EigenPair {
                    lambda: p.lambda,
                    vector: p.vector.clone(),
                    residual: p.residual,
                    iterations: 0,
                };
                let opts = config.refine_options(seed_for(config, p.lambda));
                partner_search(op, &pair, &opts, partner_radius)
            })
            .collect()
    })?;
    let mut all = poles.clone();
    for (p, q) in poles.iter().zip(partners) {
        let Some(q) = q else { continue };
        if q.residual > config.residual_tol || !region.contains(q.lambda) {
            continue;
        }
        if (q.lambda - p.lambda).norm() <= config.dedupe_radius {
            continue;
        }
        if all.iter().any(|a| (a.lambda - q.lambda).norm() <= config.dedupe_radius) {
            continue;
        }
        all.push(ValidatedPole {
            lambda: q.lambda,
            residual: q.residual,
            cell_of_origin: p.cell_of_origin,
            group_size: 1,
            vector: q.vector,
        });
    }
    let poles = dedupe(all, config.dedupe_radius)
        .into_iter()
        .filter(|p| region.contains(p.lambda))
        .collect();
    Ok(SimReport {
        poles,
        candidates,
        rejected,
    })
}
