//! Relative errors `E_j = |k^j - k^{j+1}| / |k^{j+1}|` and observed orders
//! `log2(E_j / E_{j+1})` of poles followed across levels.

use dtn_core::linalg::C64;
use std::fmt::Write;

/// Poles of neighbouring levels further apart than this are not matched.
pub const MATCH_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub mesh_size: f64,
    /// One entry per tracked pole; `None` where the chain broke.
    pub poles: Vec<Option<C64>>,
    pub errors: Vec<Option<f64>>,
    pub orders: Vec<Option<f64>>,
}

/// Follows each finest-level pole down to coarser levels by nearest
/// neighbour within [`MATCH_RADIUS`]. `levels[j]` is `(level, mesh_size, poles)`,
/// coarsest first.
pub fn convergence_table(levels: &[(usize, f64, Vec<C64>)], tracked: &[C64]) -> Vec<ConvergenceRow> {
    let nl = levels.len();
    let mut chains: Vec<Vec<Option<C64>>> = vec![vec![None; tracked.len()]; nl];
    if nl > 0 {
        for (i, &t) in tracked.iter().enumerate() {
            let mut cur = Some(t);
            for j in (0..nl).rev() {
                cur = cur.and_then(|c| nearest(&levels[j].2, c));
                chains[j][i] = cur;
            }
        }
    }
    let err = |j: usize, i: usize| -> Option<f64> {
        let (a, b) = (chains[j][i]?, chains.get(j + 1)?[i]?);
        let e = (a - b).norm() / b.norm();
        (e > 0.0).then_some(e)
    };
    (0..nl)
        .map(|j| {
            let errors: Vec<Option<f64>> = (0..tracked.len()).map(|i| err(j, i)).collect();
            let orders = (0..tracked.len())
                .map(|i| Some((err(j, i)? / err(j + 1, i)?).log2()))
                .collect();
            ConvergenceRow {
                level: levels[j].0,
                mesh_size: levels[j].1,
                poles: chains[j].clone(),
                errors,
                orders,
            }
        })
        .collect()
}

fn nearest(poles: &[C64], z: C64) -> Option<C64> {
    poles
        .iter()
        .copied()
        .map(|p| (p, (p - z).norm()))
        .filter(|&(_, d)| d <= MATCH_RADIUS)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
}

/// The order at the finest comparison available for pole `i`.
pub fn finest_order(rows: &[ConvergenceRow], i: usize) -> Option<f64> {
    rows.iter().rev().find_map(|r| r.orders.get(i).copied().flatten())
}

pub fn table_csv(rows: &[ConvergenceRow]) -> String {
    let m = rows.first().map_or(0, |r| r.poles.len());
    let mut s = String::from("level,h");
    for i in 1..=m {
        let _ = write!(s, ",re_k{i},im_k{i},err{i},order{i}");
    }
    s.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = write!(s, "{},{}", r.level, r.mesh_size);
        for i in 0..m {
            let _ = write!(
                s,
                ",{},{},{},{}",
                opt(r.poles[i].map(|z| z.re)),
                opt(r.poles[i].map(|z| z.im)),
                opt(r.errors[i]),
                opt(r.orders[i])
            );
        }
        s.push('\n');
    }
    s
}
