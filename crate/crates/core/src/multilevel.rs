//! Search on a coarse mesh, then follow every pole through successive red
//! refinements by inverse iteration from the interpolated eigenvector.

use crate::linalg::C64;
use crate::mesh::{mesh_size, refine_with_prolongation, Mesh, MeshError, ObstacleShape, Prolongation};
use crate::nep::{refine_eigenpair, EigenPair, NepError, ResonanceOperator};
use crate::sim::{find_resonances, partner_search, seed_for, SimConfig, SimError, SimReport, ValidatedPole};
use crate::Region;
use rayon::prelude::*;

/// Margin added around the requested region for the coarse search.
pub const SEARCH_MARGIN: f64 = 0.1;
/// A tracked pole may move at most this far between two levels.
pub const TRACK_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultilevelError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("search level {search} outside 1..={levels}")]
    Levels { search: usize, levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPoles {
    pub level: usize,
    pub ndof: usize,
    pub mesh_size: f64,
    pub poles: Vec<ValidatedPole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LostPole {
    pub level: usize,
    pub from: C64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelReport {
    pub search: SimReport,
    /// One entry per level from the search level up; poles cover the
    /// search region, which is larger than the requested one.
    pub levels: Vec<LevelPoles>,
    pub lost: Vec<LostPole>,
    pub region: Region,
}

impl MultilevelReport {
    pub fn finest(&self) -> &LevelPoles {
        self.levels.last().expect("at least one level")
    }

    /// Finest-level poles inside the requested region.
    pub fn poles(&self) -> Vec<ValidatedPole> {
        self.finest()
            .poles
            .iter()
            .filter(|p| self.region.contains(p.lambda))
            .cloned()
            .collect()
    }
}

/// The requested region grown by [`SEARCH_MARGIN`] but kept in the closed
/// fourth quadrant.
pub fn search_region(region: &Region) -> Region {
    let g = region.inflate(SEARCH_MARGIN);
    Region {
        re_min: g.re_min.max(0.0),
        im_max: g.im_max.min(0.0),
        ..g
    }
}

/// Level 1 is `base`; level `j + 1` is the red refinement of level `j`.
#[allow(clippy::too_many_arguments)]
pub fn track_poles(
    base: Mesh,
    shape: Option<&ObstacleShape>,
    radius: f64,
    n_max: usize,
    region: &Region,
    levels: usize,
    search_level: usize,
    config: &SimConfig,
) -> Result<MultilevelReport, MultilevelError> {
    if search_level == 0 || search_level > levels {
        return Err(MultilevelError::Levels {
            search: search_level,
            levels,
        });
    }
    config.validate()?;
    let wide = search_region(region);
    let mut mesh = base;
    let mut prolongation: Option<Prolongation> = None;
    let mut search = SimReport::default();
    let mut out = vec![];
    let mut lost = vec![];
    let mut current: Vec<ValidatedPole> = vec![];
    for level in 1..=levels {
        if level > 1 {
            let (fine, p) = refine_with_prolongation(&mesh, shape, radius)?;
            mesh = fine;
            prolongation = Some(p);
        }
        if level < search_level {
            continue;
        }
        let op = ResonanceOperator::new(mesh.clone(), radius, n_max);
        if level == search_level {
            search = find_resonances(&op, &wide, config)?;
            current = search.poles.clone();
        } else {
            let p = prolongation.as_ref().expect("refined level");
            current = advance(&op, p, &current, config, level, &mut lost)?;
        }
        log::info!("level {level}: {} dofs, {} poles", op.ndof(), current.len());
        out.push(LevelPoles {
            level,
            ndof: op.ndof(),
            mesh_size: mesh_size(&mesh),
            poles: current.clone(),
        });
    }
    for p in &mut search.poles {
        p.vector = vec![];
    }
    Ok(MultilevelReport {
        search,
        levels: out,
        lost,
        region: *region,
    })
}

fn advance(
    op: &ResonanceOperator,
    prolongation: &Prolongation,
    prev: &[ValidatedPole],
    config: &SimConfig,
    level: usize,
    lost: &mut Vec<LostPole>,
) -> Result<Vec<ValidatedPole>, MultilevelError> {
    let refined: Vec<Result<EigenPair, NepError>> = config.install(|| {
        prev.par_iter()
            .map(|p| {
                let u0 = prolongation.apply(&p.vector);
                let opts = config.refine_options(seed_for(config, p.lambda));
                refine_eigenpair(op, p.lambda, &opts, Some(&u0))
            })
            .collect()
    })?;
    let mut kept: Vec<(ValidatedPole, C64)> = vec![];
    for (p, r) in prev.iter().zip(refined) {
        let e = match r {
            Ok(e) if e.residual > config.residual_tol => Err(format!("residual {:.2e}", e.residual)),
            Ok(e) if (e.lambda - p.lambda).norm() > TRACK_RADIUS => Err(format!("drifted to {}", e.lambda)),
            Ok(e) => Ok(e),
            Err(err) => Err(err.to_string()),
        };
        let e = match e {
            Ok(e) => e,
            Err(reason) => {
                log::warn!("level {level}: lost pole {}: {reason}", p.lambda);
                lost.push(LostPole {
                    level,
                    from: p.lambda,
                    reason,
                });
                continue;
            }
        };
        let clash = kept
            .iter()
            .position(|(q, _)| (q.lambda - e.lambda).norm() <= config.dedupe_radius);
        let Some(i) = clash else {
            kept.push((to_pole(e, p), p.lambda));
            continue;
        };
        let (q, q_prev) = &kept[i];
        let pair = EigenPair {
            lambda: q.lambda,
            vector: q.vector.clone(),
            residual: q.residual,
            iterations: 0,
        };
        let reach = (10.0 * config.min_cell).max(2.0 * (p.lambda - q_prev).norm());
        let opts = config.refine_options(seed_for(config, p.lambda));
        let partner = partner_search(op, &pair, &opts, reach).filter(|f| {
            f.residual <= config.residual_tol
                && kept.iter().all(|(k, _)| (k.lambda - f.lambda).norm() > config.dedupe_radius)
        });
        match partner {
            Some(f) => kept.push((to_pole(f, p), p.lambda)),
            None => kept[i].0.group_size += p.group_size,
        }
    }
    let mut poles: Vec<ValidatedPole> = kept.into_iter().map(|(p, _)| p).collect();
    poles.sort_by(|a, b| {
        a.lambda
            .norm()
            .total_cmp(&b.lambda.norm())
            .then(a.lambda.re.total_cmp(&b.lambda.re))
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(poles)
}

fn to_pole(e: EigenPair, from: &ValidatedPole) -> ValidatedPole {
    ValidatedPole {
        lambda: e.lambda,
        residual: e.residual,
        cell_of_origin: from.cell_of_origin,
        group_size: from.group_size,
        vector: e.vector,
    }
}
