//! Truncated Dirichlet-to-Neumann coefficients and the boundary block `S3(k)`.
//!
//! With `x = kR` and `r_n = H_{n-1}(x)/H_n(x)`,
//! `z_n(k) = w_n π (x r_n - n)`, `w_0 = 1/2`, `w_n = 1` otherwise, which equals
//! `w_n kπR H_n'(x)/H_n(x)`. For the derivative,
//! `d(x r_n)/dx = r_n (2 + x r_{n-1} - x r_n)` for `n >= 1` and
//! `d(x r_0)/dx = -x (1 + r_0^2)` with `r_0 = -H_1/H_0`, because
//! `H_{-n} = (-1)^n H_n` for integer orders.

use crate::assemble::BoundaryFourier;
use crate::linalg::{CsrMatrix, C64};
use crate::specfun::{hankel_ratios, SpecfunError};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DtnError {
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("boundary data has R = {fourier_r}, N = {fourier_n}; coefficients have R = {coeff_r}, N = {coeff_n}")]
    Mismatch {
        fourier_r: f64,
        fourier_n: usize,
        coeff_r: f64,
        coeff_n: usize,
    },
}

fn weight(n: usize) -> f64 {
    if n == 0 {
        0.5
    } else {
        1.0
    }
}

fn arg_check(k: C64, radius: f64) -> Result<C64, SpecfunError> {
    let x = k * radius;
    if x.im == 0.0 && x.re < 0.0 {
        return Err(SpecfunError::Domain);
    }
    Ok(x)
}

/// `z_n(k)` for one order.
pub fn dtn_coeff(n: usize, k: C64, radius: f64) -> Result<C64, SpecfunError> {
    let x = arg_check(k, radius)?;
    let r = hankel_ratios(n.max(1), x)?;
    Ok(weight(n) * PI * (x * r[n] - n as f64))
}

/// `dz_n/dk` for one order.
pub fn dtn_coeff_derivative(n: usize, k: C64, radius: f64) -> Result<C64, SpecfunError> {
    let x = arg_check(k, radius)?;
    let r = hankel_ratios(n.max(1), x)?;
    Ok(radius * weight(n) * PI * ratio_derivative(&r, n, x))
}

fn ratio_derivative(r: &[C64], n: usize, x: C64) -> C64 {
    if n == 0 {
        -x * (1.0 + r[0] * r[0])
    } else {
        r[n] * (2.0 + x * r[n - 1] - x * r[n])
    }
}

/// All `z_n` and `dz_n`, `n = 0..=N`, at one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct DtNCoefficients {
    pub k: C64,
    pub radius: f64,
    pub n_max: usize,
    pub z: Vec<C64>,
    pub dz: Vec<C64>,
}

impl DtNCoefficients {
    pub fn new(k: C64, radius: f64, n_max: usize) -> Result<Self, SpecfunError> {
        let x = arg_check(k, radius)?;
        let r = hankel_ratios(n_max.max(1), x)?;
        let z = (0..=n_max)
            .map(|n| weight(n) * PI * (x * r[n] - n as f64))
            .collect();
        let dz = (0..=n_max)
            .map(|n| radius * weight(n) * PI * ratio_derivative(&r, n, x))
            .collect();
        Ok(Self {
            k,
            radius,
            n_max,
            z,
            dz,
        })
    }
}

/// `Σ_n w[n] (c_n c_nᵀ + s_n s_nᵀ)` for arbitrary per-order weights.
#[derive(Debug, Clone)]
pub struct DtnMatrix<'a> {
    fourier: &'a BoundaryFourier,
    weights: Vec<C64>,
}

fn check(fourier: &BoundaryFourier, coeffs: &DtNCoefficients) -> Result<(), DtnError> {
    if fourier.n_max != coeffs.n_max || fourier.radius != coeffs.radius {
        return Err(DtnError::Mismatch {
            fourier_r: fourier.radius,
            fourier_n: fourier.n_max,
            coeff_r: coeffs.radius,
            coeff_n: coeffs.n_max,
        });
    }
    Ok(())
}

/// `S3(k)`.
pub fn assemble_dtn<'a>(
    fourier: &'a BoundaryFourier,
    coeffs: &DtNCoefficients,
) -> Result<DtnMatrix<'a>, DtnError> {
    check(fourier, coeffs)?;
    Ok(DtnMatrix {
        fourier,
        weights: coeffs.z.clone(),
    })
}

/// `S3'(k)`.
pub fn assemble_dtn_derivative<'a>(
    fourier: &'a BoundaryFourier,
    coeffs: &DtNCoefficients,
) -> Result<DtnMatrix<'a>, DtnError> {
    check(fourier, coeffs)?;
    Ok(DtnMatrix {
        fourier,
        weights: coeffs.dz.clone(),
    })
}

impl DtnMatrix<'_> {
    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    /// Global indices of the rows and columns of [`block`](Self::block).
    pub fn nodes(&self) -> &[usize] {
        &self.fourier.nodes
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let (a, b) = self.fourier.coefficients(x);
        let wa: Vec<C64> = a.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        let wb: Vec<C64> = b.iter().zip(&self.weights).map(|(b, w)| b * w).collect();
        self.fourier.synthesize(&wa, &wb)
    }

    /// Dense `b × b` block over the `Γ_R` nodes, row-major.
    pub fn block(&self) -> Vec<C64> {
        let f = self.fourier;
        let b = f.nodes.len();
        let mut out = vec![C64::new(0.0, 0.0); b * b];
        for n in 0..=f.n_max {
            let w = self.weights[n];
            let (c, s) = (&f.cos[n], &f.sin[n]);
            for l in 0..b {
                let row = &mut out[l * b..(l + 1) * b];
                for m in l..b {
                    row[m] += w * (c[l] * c[m] + s[l] * s[m]);
                }
            }
        }
        for l in 0..b {
            for m in 0..l {
                out[l * b + m] = out[m * b + l];
            }
        }
        out
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let nodes = &self.fourier.nodes;
        let b = nodes.len();
        let block = self.block();
        CsrMatrix::from_triplets(
            self.fourier.ndof,
            self.fourier.ndof,
            (0..b * b).map(|e| (nodes[e / b], nodes[e % b], block[e])),
        )
    }
}
