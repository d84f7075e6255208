//! Closed-form references for the sound-hard unit disk: its resonances (zeros
//! of `H_m^{(1)'}`) and the Mie series of the scattered plane wave.

use crate::specfun::{bessel_j_prime, hankel1_prime, hankel1_seq, HankelEval, SpecfunError};
use crate::Region;
use num_complex::Complex64;

type C64 = Complex64;

pub const GRID_STEP: f64 = 0.05;
pub const NEWTON_TOL: f64 = 1e-13;
pub const MIE_MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPole {
    pub m: usize,
    pub k: C64,
    pub newton_residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("Mie series did not converge within {terms} terms at r = {r}")]
    NoConvergence { terms: usize, r: f64 },
    #[error("point at r = {r} is inside the obstacle")]
    Inside { r: f64 },
}

fn newton(m: usize, mut z: C64) -> Option<(C64, f64)> {
    let mf = m as f64;
    for _ in 0..60 {
        let h = HankelEval::new(m, z).ok()?;
        let hpp = -h.derivative / z - (1.0 - mf * mf / (z * z)) * h.value;
        let step = h.derivative / hpp;
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-15 * z.norm() {
            break;
        }
    }
    let r = hankel1_prime(m, z).ok()?.norm();
    (r <= NEWTON_TOL.max(1e-12)).then_some((z, r))
}

/// Zeros of `H_m^{(1)'}` in `region` for `m = 0..=m_max`, sorted by `|k|`.
pub fn disk_exact_poles(region: &Region, m_max: usize) -> Vec<DiskPole> {
    let scan = region.inflate(2.0 * GRID_STEP);
    let nx = (scan.width() / GRID_STEP).ceil() as usize + 1;
    let ny = (scan.height() / GRID_STEP).ceil() as usize + 1;
    let mut out: Vec<DiskPole> = Vec::new();
    for m in 0..=m_max {
        let at = |i: usize, j: usize| C64::new(scan.re_min + i as f64 * GRID_STEP, scan.im_min + j as f64 * GRID_STEP);
        let grid: Vec<f64> = (0..nx * ny)
            .map(|e| {
                hankel1_prime(m, at(e / ny, e % ny))
                    .map(|v| v.norm())
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        let val = |i: usize, j: usize| grid[i * ny + j];
        let mut found: Vec<DiskPole> = Vec::new();
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let v = val(i, j);
                let is_min = v.is_finite()
                    && (-1i64..=1)
                        .flat_map(|a| (-1i64..=1).map(move |b| (a, b)))
                        .filter(|&ab| ab != (0, 0))
                        .all(|(a, b)| v < val((i as i64 + a) as usize, (j as i64 + b) as usize));
                if !is_min {
                    continue;
                }
                match newton(m, at(i, j)) {
                    Some((k, r)) if found.iter().all(|p| (p.k - k).norm() > 1e-8) => {
                        found.push(DiskPole {
                            m,
                            k,
                            newton_residual: r,
                        });
                    }
                    Some(_) => {}
                    None => log::debug!("Newton from {} (m = {m}) did not converge", at(i, j)),
                }
            }
        }
        out.extend(found.into_iter().filter(|p| region.contains(p.k) && p.k.im < 0.0 && p.k.re >= 0.0));
    }
    out.sort_by(|a, b| a.k.norm().total_cmp(&b.k.norm()));
    out
}

/// Scattered field `u = -Σ ε_m i^m (J_m'(k)/H_m'(k)) H_m(kr) cos(m(θ - φ_d))` at
/// each point; the incident wave is `e^{ik d·x}` and the disk has radius 1.
pub fn mie_scattered_field(k: f64, direction: [f64; 2], points: &[[f64; 2]]) -> Result<Vec<C64>, OracleError> {
    mie_sum(k, direction, points, false)
}

/// `∂u/∂r` of [`mie_scattered_field`].
pub fn mie_radial_derivative(k: f64, direction: [f64; 2], points: &[[f64; 2]]) -> Result<Vec<C64>, OracleError> {
    mie_sum(k, direction, points, true)
}

fn mie_sum(k: f64, direction: [f64; 2], points: &[[f64; 2]], radial: bool) -> Result<Vec<C64>, OracleError> {
    let kc = C64::new(k, 0.0);
    let phi = direction[1].atan2(direction[0]);
    let i = C64::new(0.0, 1.0);
    let mut alpha = Vec::with_capacity(MIE_MAX_TERMS);
    for m in 0..=crate::specfun::MAX_ORDER {
        let eps = if m == 0 { 1.0 } else { 2.0 };
        match (bessel_j_prime(m, kc), hankel1_prime(m, kc)) {
            (Ok(j), Ok(h)) => alpha.push(-eps * i.powu(m as u32) * j / h),
            _ => break,
        }
    }
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let r = p[0].hypot(p[1]);
        if r < 1.0 - 1e-12 {
            return Err(OracleError::Inside { r });
        }
        let theta = p[1].atan2(p[0]);
        let x = C64::new(k * r, 0.0);
        let seq = hankel1_seq(alpha.len(), x)?;
        let h: Vec<C64> = if radial {
            (0..alpha.len())
                .map(|m| k * if m == 0 { -seq[1] } else { seq[m - 1] - seq[m] * (m as f64) / x })
                .collect()
        } else {
            seq
        };
        let mut sum = C64::new(0.0, 0.0);
        let mut tail = [f64::INFINITY; 3];
        let mut done = false;
        for (m, (a, hm)) in alpha.iter().zip(&h).enumerate() {
            let term = a * hm * (m as f64 * (theta - phi)).cos();
            sum += term;
            tail = [tail[1], tail[2], (a * hm).norm()];
            if m >= 3 && tail.iter().sum::<f64>() < 1e-13 * sum.norm() {
                done = true;
                break;
            }
        }
        if !done {
            return Err(OracleError::NoConvergence { terms: alpha.len(), r });
        }
        out.push(sum);
    }
    Ok(out)
}
