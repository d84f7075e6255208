//! The holomorphic matrix family `B(k) = S1 - k^2 S2 - S3(k)`.
//!
//! Two ways of inverting `B(k)` are provided. The folded path adds the dense
//! `Γ_R` block to the sparse pattern and factors the result. The low-rank path
//! factors `A0 = S1 - k^2 S2` only and corrects with the Woodbury identity for
//! the `2N+1` boundary modes. [`Strategy::Auto`] picks the low-rank path once
//! the boundary has more than [`AUTO_LOWRANK_NODES`] nodes.
//!
//! Eigenpairs are polished by nonlinear inverse iteration with the
//! complex-symmetric Rayleigh functional; all products there are unconjugated.

use crate::assemble::{assemble_load, assemble_mass, assemble_stiffness, boundary_fourier, BoundaryFourier};
use crate::dtn::{assemble_dtn, assemble_dtn_derivative, DtNCoefficients, DtnError};
use crate::linalg::{
    analyze, dot, factorize_with, norm2, normalize, random_vector, CsrMatrix, DenseLu, Factorization,
    LinalgError, SymbolicFactorization, C64,
};
use crate::mesh::Mesh;
use faer::{Mat, Side};
use std::sync::OnceLock;

pub const AUTO_LOWRANK_NODES: usize = 400;
/// Largest system for which [`ResonanceOperator::modal`] is available.
pub const MODAL_MAX_DOFS: usize = 1500;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NepError {
    #[error(transparent)]
    Dtn(#[from] DtnError),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error("B(k) is singular to working precision at k = {k}")]
    NearEigenvalue { k: C64 },
    #[error("inverse iteration did not converge after {iterations} steps (last k = {k})")]
    NoConvergence { k: C64, iterations: usize },
    #[error("Rayleigh functional broke down at k = {k}")]
    Breakdown { k: C64 },
}

impl From<crate::specfun::SpecfunError> for NepError {
    fn from(e: crate::specfun::SpecfunError) -> Self {
        NepError::Dtn(DtnError::Specfun(e))
    }
}

fn linalg_at(k: C64) -> impl Fn(LinalgError) -> NepError {
    move |e| match e {
        LinalgError::Singular { .. } => NepError::NearEigenvalue { k },
        other => NepError::Linalg(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    Auto,
    Folded,
    LowRank,
}

#[derive(Debug)]
struct FoldedPattern {
    pattern: CsrMatrix,
    s_pos: Vec<usize>,
    block_pos: Vec<usize>,
    symbolic: Result<SymbolicFactorization, LinalgError>,
}

#[derive(Debug)]
pub struct ResonanceOperator {
    pub mesh: Mesh,
    pub s1: CsrMatrix,
    pub s2: CsrMatrix,
    pub fourier: BoundaryFourier,
    pub radius: f64,
    pub n_max: usize,
    strategy: Strategy,
    folded: OnceLock<FoldedPattern>,
    sparse_symbolic: OnceLock<Result<SymbolicFactorization, LinalgError>>,
    modal: OnceLock<Option<ModalBasis>>,
}

/// Generalized eigenbasis `S1 V = S2 V diag(μ)`, `Vᵀ S2 V = I`, so that
/// `A0(k)^{-1} = V diag(1/(μ - k^2)) Vᵀ`. Resolvents are then formed in modal
/// coordinates with the Woodbury correction for the boundary modes.
#[derive(Debug)]
pub struct ModalBasis {
    mu: Vec<f64>,
    v: Mat<f64>,
    g: Mat<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub max_restarts: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 30,
            seed: 1,
            max_restarts: 3,
        }
    }
}

enum Kind {
    Folded(Factorization),
    LowRank {
        a0: Factorization,
        w: Vec<Vec<C64>>,
        small: DenseLu,
    },
}

/// A factored `B(k)`.
pub struct Resolvent<'a> {
    op: &'a ResonanceOperator,
    pub k: C64,
    pub coeffs: DtNCoefficients,
    kind: Kind,
}

impl ResonanceOperator {
    pub fn new(mesh: Mesh, radius: f64, n_max: usize) -> Self {
        let s1 = assemble_stiffness(&mesh);
        let s2 = assemble_mass(&mesh);
        let fourier = boundary_fourier(&mesh, radius, n_max);
        Self {
            mesh,
            s1,
            s2,
            fourier,
            radius,
            n_max,
            strategy: Strategy::Auto,
            folded: OnceLock::new(),
            sparse_symbolic: OnceLock::new(),
            modal: OnceLock::new(),
        }
    }

    /// The modal basis, for systems of at most [`MODAL_MAX_DOFS`] unknowns.
    pub fn modal(&self) -> Option<&ModalBasis> {
        self.modal
            .get_or_init(|| {
                if self.ndof() > MODAL_MAX_DOFS {
                    return None;
                }
                let basis = ModalBasis::new(&self.s1, &self.s2, &self.boundary_columns());
                if basis.is_none() {
                    log::warn!("modal basis unavailable; mass matrix not positive definite");
                }
                basis
            })
            .as_ref()
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn ndof(&self) -> usize {
        self.s1.n_rows()
    }

    /// The path [`factor`](Self::factor) takes.
    pub fn strategy(&self) -> Strategy {
        match self.strategy {
            Strategy::Auto if self.fourier.nodes.len() > AUTO_LOWRANK_NODES => Strategy::LowRank,
            Strategy::Auto => Strategy::Folded,
            s => s,
        }
    }

    pub fn coefficients(&self, k: C64) -> Result<DtNCoefficients, NepError> {
        Ok(DtNCoefficients::new(k, self.radius, self.n_max)?)
    }

    fn folded(&self) -> &FoldedPattern {
        self.folded.get_or_init(|| {
            let n = self.ndof();
            let nodes = &self.fourier.nodes;
            let mut trip = Vec::with_capacity(self.s1.nnz() + nodes.len().pow(2));
            for i in 0..n {
                trip.extend(self.s1.row(i).map(|(j, _)| (i, j, C64::new(0.0, 0.0))));
            }
            for &i in nodes {
                trip.extend(nodes.iter().map(|&j| (i, j, C64::new(0.0, 0.0))));
            }
            let pattern = CsrMatrix::from_triplets(n, n, trip);
            let pos = |i: usize, j: usize| pattern.position(i, j).expect("entry in pattern");
            let mut s_pos = Vec::with_capacity(self.s1.nnz());
            for i in 0..n {
                s_pos.extend(self.s1.row(i).map(|(j, _)| pos(i, j)));
            }
            let block_pos = nodes
                .iter()
                .flat_map(|&i| nodes.iter().map(move |&j| (i, j)))
                .map(|(i, j)| pos(i, j))
                .collect();
            let symbolic = analyze(&pattern);
            FoldedPattern {
                pattern,
                s_pos,
                block_pos,
                symbolic,
            }
        })
    }

    fn a0_values(&self, k: C64) -> Vec<C64> {
        let k2 = k * k;
        self.s1
            .values()
            .iter()
            .zip(self.s2.values())
            .map(|(a, b)| a - k2 * b)
            .collect()
    }

    fn a0(&self, k: C64) -> CsrMatrix {
        let mut a = self.s1.clone();
        a.values_mut().copy_from_slice(&self.a0_values(k));
        a
    }

    /// `B(k)` as one sparse matrix.
    pub fn materialize(&self, k: C64) -> Result<CsrMatrix, NepError> {
        let coeffs = self.coefficients(k)?;
        Ok(self.materialize_with(&coeffs))
    }

    fn materialize_with(&self, coeffs: &DtNCoefficients) -> CsrMatrix {
        let f = self.folded();
        let mut b = f.pattern.clone();
        let a0 = self.a0_values(coeffs.k);
        let block = assemble_dtn(&self.fourier, coeffs).expect("consistent").block();
        let vals = b.values_mut();
        for (e, &p) in f.s_pos.iter().enumerate() {
            vals[p] += a0[e];
        }
        for (e, &p) in f.block_pos.iter().enumerate() {
            vals[p] -= block[e];
        }
        b
    }

    /// `‖B(k)‖_F` without forming the folded matrix.
    pub fn frobenius_norm(&self, k: C64) -> Result<f64, NepError> {
        let coeffs = self.coefficients(k)?;
        Ok(self.frobenius_with(&coeffs))
    }

    fn frobenius_with(&self, coeffs: &DtNCoefficients) -> f64 {
        let a0 = self.a0(coeffs.k);
        let mut sum: f64 = a0.values().iter().map(|v| v.norm_sqr()).sum();
        let nodes = &self.fourier.nodes;
        let b = nodes.len();
        let block = assemble_dtn(&self.fourier, coeffs).expect("consistent").block();
        for l in 0..b {
            for m in 0..b {
                let s = block[l * b + m];
                match a0.position(nodes[l], nodes[m]) {
                    Some(p) => {
                        let a = a0.values()[p];
                        sum += (a - s).norm_sqr() - a.norm_sqr();
                    }
                    None => sum += s.norm_sqr(),
                }
            }
        }
        sum.max(0.0).sqrt()
    }

    /// `B(k) x` without forming the boundary block.
    pub fn apply(&self, k: C64, x: &[C64]) -> Result<Vec<C64>, NepError> {
        let coeffs = self.coefficients(k)?;
        Ok(self.apply_with(&coeffs, x))
    }

    fn apply_with(&self, coeffs: &DtNCoefficients, x: &[C64]) -> Vec<C64> {
        let k2 = coeffs.k * coeffs.k;
        let mut y = self.s1.mul_vec(x);
        let m = self.s2.mul_vec(x);
        let s3 = assemble_dtn(&self.fourier, coeffs).expect("consistent").apply(x);
        for i in 0..y.len() {
            y[i] -= k2 * m[i] + s3[i];
        }
        y
    }

    /// `B'(k) x = -2k S2 x - S3'(k) x`.
    pub fn derivative_apply(&self, k: C64, x: &[C64]) -> Result<Vec<C64>, NepError> {
        let coeffs = self.coefficients(k)?;
        Ok(self.derivative_apply_with(&coeffs, x))
    }

    fn derivative_apply_with(&self, coeffs: &DtNCoefficients, x: &[C64]) -> Vec<C64> {
        let m = self.s2.mul_vec(x);
        let d3 = assemble_dtn_derivative(&self.fourier, coeffs).expect("consistent").apply(x);
        m.iter().zip(&d3).map(|(m, d)| -2.0 * coeffs.k * m - d).collect()
    }

    /// `‖B(λ)u‖ / (‖B(λ)‖_F ‖u‖)`.
    pub fn residual(&self, lambda: C64, u: &[C64]) -> Result<f64, NepError> {
        let coeffs = self.coefficients(lambda)?;
        Ok(norm2(&self.apply_with(&coeffs, u)) / (self.frobenius_with(&coeffs) * norm2(u)))
    }

    fn boundary_columns(&self) -> Vec<Vec<C64>> {
        let f = &self.fourier;
        let real = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>();
        (0..=f.n_max)
            .map(|n| real(f.c_full(n)))
            .chain((1..=f.n_max).map(|n| real(f.s_full(n))))
            .collect()
    }

    fn factor_folded(&self, coeffs: &DtNCoefficients) -> Result<Kind, NepError> {
        let k = coeffs.k;
        let sym = self.folded().symbolic.as_ref().map_err(|e| NepError::Linalg(e.clone()))?;
        let fac = factorize_with(sym, &self.materialize_with(coeffs)).map_err(linalg_at(k))?;
        Ok(Kind::Folded(fac))
    }

    fn factor_lowrank(&self, coeffs: &DtNCoefficients) -> Result<Kind, NepError> {
        let k = coeffs.k;
        let sym = self
            .sparse_symbolic
            .get_or_init(|| analyze(&self.s1))
            .as_ref()
            .map_err(|e| NepError::Linalg(e.clone()))?;
        let a0 = factorize_with(sym, &self.a0(k)).map_err(linalg_at(k))?;
        let w = a0.solve_many(&self.boundary_columns()).map_err(linalg_at(k))?;
        let z = mode_weights(coeffs);
        let p = z.len();
        let mut m = vec![C64::new(0.0, 0.0); p * p];
        for (q, wq) in w.iter().enumerate() {
            let ctw = modes(&self.fourier, wq);
            for r in 0..p {
                m[r * p + q] = -z[r] * ctw[r];
            }
            m[q * p + q] += 1.0;
        }
        let small = DenseLu::new(p, &m).map_err(linalg_at(k))?;
        Ok(Kind::LowRank { a0, w, small })
    }

    /// Factors `B(k)` along [`strategy`](Self::strategy).
    pub fn factor(&self, k: C64) -> Result<Resolvent<'_>, NepError> {
        let coeffs = self.coefficients(k)?;
        let kind = match self.strategy() {
            Strategy::LowRank => self.factor_lowrank(&coeffs)?,
            _ => self.factor_folded(&coeffs)?,
        };
        Ok(Resolvent {
            op: self,
            k,
            coeffs,
            kind,
        })
    }

    /// `B(k)^{-1} rhs`.
    pub fn solve_linear(&self, k: C64, rhs: &[C64]) -> Result<Vec<C64>, NepError> {
        self.factor(k)?.solve(rhs)
    }

    /// Scattered field for the plane wave `e^{ik d·x}` at real `k > 0`.
    pub fn solve_scattering(&self, k: f64, direction: [f64; 2]) -> Result<Vec<C64>, NepError> {
        let k = C64::new(k, 0.0);
        let load = assemble_load(&self.mesh, k, direction);
        self.solve_linear(k, &load)
    }

    /// `sqrt(x^H S2 x)`, the discrete L² norm.
    pub fn l2_norm(&self, x: &[C64]) -> f64 {
        let m = self.s2.mul_vec(x);
        x.iter().zip(&m).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0).sqrt()
    }
}

fn mode_weights(coeffs: &DtNCoefficients) -> Vec<C64> {
    coeffs.z.iter().copied().chain(coeffs.z[1..].iter().copied()).collect()
}

/// `Cᵀx` in column order `c_0..c_N, s_1..s_N`.
fn modes(f: &BoundaryFourier, x: &[C64]) -> Vec<C64> {
    let (a, b) = f.coefficients(x);
    a.into_iter().chain(b.into_iter().skip(1)).collect()
}

impl Resolvent<'_> {
    fn raw_solve(&self, rhs: &[C64]) -> Result<Vec<C64>, NepError> {
        let at = linalg_at(self.k);
        match &self.kind {
            Kind::Folded(f) => f.solve(rhs).map_err(at),
            Kind::LowRank { a0, w, small } => {
                let mut y = a0.solve(rhs).map_err(&at)?;
                let z = mode_weights(&self.coeffs);
                let g: Vec<C64> = modes(&self.op.fourier, &y).iter().zip(&z).map(|(a, z)| a * z).collect();
                let t = small.solve(&g).map_err(&at)?;
                for (tq, wq) in t.iter().zip(w) {
                    for (yi, wi) in y.iter_mut().zip(wq) {
                        *yi += tq * wi;
                    }
                }
                Ok(y)
            }
        }
    }

    fn residual_of(&self, rhs: &[C64], x: &[C64]) -> Vec<C64> {
        let bx = self.op.apply_with(&self.coeffs, x);
        rhs.iter().zip(&bx).map(|(b, y)| b - y).collect()
    }

    /// `B(k)^{-1} rhs` with one step of iterative refinement when needed.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>, NepError> {
        let mut x = self.raw_solve(rhs)?;
        if matches!(self.kind, Kind::Folded(_)) {
            return Ok(x);
        }
        let scale = norm2(rhs) + self.norm_estimate() * norm2(&x);
        let r = self.residual_of(rhs, &x);
        if norm2(&r) <= 1e-12 * scale {
            return Ok(x);
        }
        let dx = self.raw_solve(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        if norm2(&self.residual_of(rhs, &x)) <= 1e-10 * scale {
            return Ok(x);
        }
        log::debug!("low-rank solve inaccurate at k = {}; refactoring folded", self.k);
        let folded = Resolvent {
            op: self.op,
            k: self.k,
            coeffs: self.coeffs.clone(),
            kind: self.op.factor_folded(&self.coeffs)?,
        };
        folded.raw_solve(rhs)
    }

    fn norm_estimate(&self) -> f64 {
        let k2 = (self.k * self.k).norm();
        let z: f64 = self.coeffs.z.iter().map(|z| z.norm()).sum();
        let c: f64 = self.op.fourier.cos.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
        self.op.s1.frobenius_norm() + k2 * self.op.s2.frobenius_norm() + 2.0 * z * c
    }
}

/// Nonlinear inverse iteration from `k0`, optionally from a given vector.
pub fn refine_eigenpair(
    op: &ResonanceOperator,
    k0: C64,
    opts: &RefineOptions,
    init: Option<&[C64]>,
) -> Result<EigenPair, NepError> {
    let n = op.ndof();
    let mut u = match init {
        Some(v) => v.to_vec(),
        None => random_vector(n, opts.seed),
    };
    normalize(&mut u);
    let mut k = k0;
    let mut restarts = 0;
    for it in 1..=opts.max_iter {
        let res = match op.factor(k) {
            Ok(r) => r,
            Err(NepError::NearEigenvalue { .. }) => {
                k += k.norm() * 1e-11;
                op.factor(k)?
            }
            Err(e) => return Err(e),
        };
        let rhs = op.derivative_apply_with(&res.coeffs, &u);
        let mut v = res.solve(&rhs)?;
        if normalize(&mut v) == 0.0 || !v.iter().all(|x| x.is_finite()) {
            return Err(NepError::Breakdown { k });
        }
        u = v;
        let bu = op.apply_with(&res.coeffs, &u);
        let dbu = op.derivative_apply_with(&res.coeffs, &u);
        let den = dot(&u, &dbu);
        if den.norm() <= 1e-14 * norm2(&dbu) {
            restarts += 1;
            if restarts > opts.max_restarts {
                return Err(NepError::Breakdown { k });
            }
            u = random_vector(n, opts.seed.wrapping_add(restarts as u64));
            normalize(&mut u);
            continue;
        }
        let dk = dot(&u, &bu) / den;
        k -= dk;
        if dk.norm() <= opts.tol * k.norm() {
            let residual = op.residual(k, &u)?;
            return Ok(EigenPair {
                lambda: k,
                vector: u,
                residual,
                iterations: it,
            });
        }
    }
    Err(NepError::NoConvergence {
        k,
        iterations: opts.max_iter,
    })
}

impl ModalBasis {
    fn new(s1: &CsrMatrix, s2: &CsrMatrix, columns: &[Vec<C64>]) -> Option<Self> {
        use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
        let n = s1.n_rows();
        let dense = |a: &CsrMatrix| {
            let mut m = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                for (j, v) in a.row(i) {
                    m[(i, j)] = v.re;
                }
            }
            m
        };
        let (a, b) = (dense(s1), dense(s2));
        let llt = b.llt(Side::Lower).ok()?;
        let l = llt.L();
        let mut x = a;
        solve_lower_triangular_in_place(l, x.as_mut(), faer::Par::Seq);
        let mut y = x.transpose().to_owned();
        solve_lower_triangular_in_place(l, y.as_mut(), faer::Par::Seq);
        let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + y[(j, i)]));
        let evd = sym.self_adjoint_eigen(Side::Lower).ok()?;
        let mut v = evd.U().to_owned();
        solve_upper_triangular_in_place(l.transpose(), v.as_mut(), faer::Par::Seq);
        let mu = (0..n).map(|i| evd.S()[i]).collect();
        let c = Mat::<f64>::from_fn(n, columns.len(), |i, p| columns[p][i].re);
        let g = v.transpose() * &c;
        Some(Self { mu, v, g })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `Vᵀ f`.
    pub fn project(&self, f: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let re = Mat::<f64>::from_fn(n, 1, |i, _| f[i].re);
        let im = Mat::<f64>::from_fn(n, 1, |i, _| f[i].im);
        let (a, b) = (self.v.transpose() * &re, self.v.transpose() * &im);
        (0..n).map(|i| C64::new(a[(i, 0)], b[(i, 0)])).collect()
    }

    /// `V x`.
    pub fn to_nodal(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let re = Mat::<f64>::from_fn(n, 1, |i, _| x[i].re);
        let im = Mat::<f64>::from_fn(n, 1, |i, _| x[i].im);
        let (a, b) = (&self.v * &re, &self.v * &im);
        (0..n).map(|i| C64::new(a[(i, 0)], b[(i, 0)])).collect()
    }

    /// Modal coordinates of `B(k)^{-1} f` given `gf = Vᵀ f`.
    pub fn solve(&self, coeffs: &DtNCoefficients, gf: &[C64]) -> Result<Vec<C64>, NepError> {
        let k = coeffs.k;
        let k2 = k * k;
        let n = self.dim();
        let p = self.g.ncols();
        let d: Vec<C64> = self.mu.iter().map(|&m| (m - k2).inv()).collect();
        if d.iter().any(|x| !x.is_finite()) {
            return Err(NepError::NearEigenvalue { k });
        }
        let dre = Mat::<f64>::from_fn(n, p, |i, q| d[i].re * self.g[(i, q)]);
        let dim = Mat::<f64>::from_fn(n, p, |i, q| d[i].im * self.g[(i, q)]);
        let (gr, gi) = (self.g.transpose() * &dre, self.g.transpose() * &dim);
        let z = mode_weights(coeffs);
        let mut m = vec![C64::new(0.0, 0.0); p * p];
        for r in 0..p {
            for q in 0..p {
                m[r * p + q] = -z[r] * C64::new(gr[(r, q)], gi[(r, q)]);
            }
            m[r * p + r] += 1.0;
        }
        let small = DenseLu::new(p, &m).map_err(linalg_at(k))?;
        let y: Vec<C64> = gf.iter().zip(&d).map(|(f, d)| f * d).collect();
        let rhs: Vec<C64> = (0..p)
            .map(|q| z[q] * (0..n).map(|i| y[i] * self.g[(i, q)]).sum::<C64>())
            .collect();
        let t = small.solve(&rhs).map_err(linalg_at(k))?;
        Ok((0..n)
            .map(|i| {
                let gt: C64 = (0..p).map(|q| t[q] * self.g[(i, q)]).sum();
                d[i] * (gf[i] + gt)
            })
            .collect())
    }
}
