//! Linear-element matrices on a [`Mesh`]: stiffness, mass, boundary Fourier
//! coefficients on `Γ_R`, and the plane-wave load on `Γ`.

use crate::linalg::{CsrMatrix, C64};
use crate::mesh::{BoundaryTag, Mesh, Point};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if q == 1 {
                p0 = 1.0;
            }
            dp = q as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if q == 1 {
            dp = 1.0;
            z = 0.0;
        }
        x[i] = -z;
        x[q - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[q - 1 - i] = w[i];
    }
    (x, w)
}

fn gradients(p: [Point; 3]) -> (f64, [[f64; 2]; 3]) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = p[(a + 1) % 3];
        let c = p[(a + 2) % 3];
        g[a] = [(b[1] - c[1]) / (2.0 * area), (c[0] - b[0]) / (2.0 * area)];
    }
    (area, g)
}

fn corners(mesh: &Mesh, t: [usize; 3]) -> [Point; 3] {
    [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]]
}

/// `S1`: the `(∇u, ∇v)` matrix.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for &t in &mesh.triangles {
        let (area, g) = gradients(corners(mesh, t));
        for a in 0..3 {
            for b in 0..3 {
                let v = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                trip.push((t[a], t[b], C64::new(v, 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip)
}

/// `S2`: the `(u, v)` matrix.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for &t in &mesh.triangles {
        let (area, _) = gradients(corners(mesh, t));
        for a in 0..3 {
            for b in 0..3 {
                let v = if a == b { area / 6.0 } else { area / 12.0 };
                trip.push((t[a], t[b], C64::new(v, 0.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip)
}

/// Fourier coefficients of the hat functions on `Γ_R`:
/// `c_n[i] = (1/(πR)) ∫ φ_i cos(nθ) ds`, `s_n[i] = (1/(πR)) ∫ φ_i sin(nθ) ds`.
///
/// Only `Γ_R` nodes carry entries, so the vectors are stored compactly over
/// [`nodes`](Self::nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFourier {
    pub radius: f64,
    pub n_max: usize,
    pub ndof: usize,
    /// Global indices of the `Γ_R` vertices, ascending.
    pub nodes: Vec<usize>,
    /// `cos[n][l]` is `c_n` at node `nodes[l]`.
    pub cos: Vec<Vec<f64>>,
    pub sin: Vec<Vec<f64>>,
}

impl BoundaryFourier {
    pub fn c_full(&self, n: usize) -> Vec<f64> {
        self.expand(&self.cos[n])
    }

    pub fn s_full(&self, n: usize) -> Vec<f64> {
        self.expand(&self.sin[n])
    }

    fn expand(&self, compact: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.ndof];
        for (l, &i) in self.nodes.iter().enumerate() {
            v[i] = compact[l];
        }
        v
    }

    /// `(c_nᵀx, s_nᵀx)` for `n = 0..=n_max`.
    pub fn coefficients(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let xb: Vec<C64> = self.nodes.iter().map(|&i| x[i]).collect();
        let contract = |rows: &[Vec<f64>]| -> Vec<C64> {
            rows.iter()
                .map(|r| r.iter().zip(&xb).map(|(c, v)| v * *c).sum())
                .collect()
        };
        (contract(&self.cos), contract(&self.sin))
    }

    /// `Σ_n w_n (a_n c_n + b_n s_n)` scattered into a full-length vector.
    pub fn synthesize(&self, wa: &[C64], wb: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.ndof];
        for (l, &i) in self.nodes.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..=self.n_max {
                acc += wa[n] * self.cos[n][l] + wb[n] * self.sin[n][l];
            }
            y[i] = acc;
        }
        y
    }
}

/// Per-edge Gauss quadrature on the straight `Γ_R` edges with the polar angle
/// interpolated linearly between the (unwrapped) node angles.
pub fn boundary_fourier(mesh: &Mesh, radius: f64, n_max: usize) -> BoundaryFourier {
    let nodes = mesh.tagged_vertices(BoundaryTag::GammaR);
    let local = |v: usize| nodes.binary_search(&v).expect("Γ_R vertex");
    let mut cos = vec![vec![0.0; nodes.len()]; n_max + 1];
    let mut sin = vec![vec![0.0; nodes.len()]; n_max + 1];
    let mut worst = 0.0f64;
    for [a, b] in mesh.edges_with_tag(BoundaryTag::GammaR) {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        worst = worst.max(len);
        let ta = pa[1].atan2(pa[0]);
        let mut tb = pb[1].atan2(pb[0]);
        if tb - ta > PI {
            tb -= 2.0 * PI;
        } else if ta - tb > PI {
            tb += 2.0 * PI;
        }
        let q = 4usize.max((2.0 + n_max as f64 * len / radius).ceil() as usize);
        let (xq, wq) = gauss_legendre(q);
        let (la, lb) = (local(a), local(b));
        let scale = 0.5 * len / (PI * radius);
        for (x, w) in xq.iter().zip(&wq) {
            let s = 0.5 * (x + 1.0);
            let theta = ta + s * (tb - ta);
            let (fa, fb) = (1.0 - s, s);
            for n in 0..=n_max {
                let (sn, cn) = (n as f64 * theta).sin_cos();
                cos[n][la] += w * scale * fa * cn;
                cos[n][lb] += w * scale * fb * cn;
                sin[n][la] += w * scale * fa * sn;
                sin[n][lb] += w * scale * fb * sn;
            }
        }
    }
    if n_max as f64 * worst / radius > 1.0 {
        log::warn!(
            "truncation order {n_max} is under-resolved on Γ_R (n h / R = {:.2})",
            n_max as f64 * worst / radius
        );
    }
    for v in sin[0].iter_mut() {
        *v = 0.0;
    }
    BoundaryFourier {
        radius,
        n_max,
        ndof: mesh.n_vertices(),
        nodes,
        cos,
        sin,
    }
}

/// `⟨g, φ_i⟩` with `g = -∂u^inc/∂ν` on `Γ`, `u^inc = e^{ik d·x}`, and `ν` the
/// normal pointing out of the computational domain (into the obstacle).
pub fn assemble_load(mesh: &Mesh, k: C64, direction: [f64; 2]) -> Vec<C64> {
    let mut third = std::collections::HashMap::new();
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            third.insert((a.min(b), a.max(b)), t[(e + 2) % 3]);
        }
    }
    let mut load = vec![C64::new(0.0, 0.0); mesh.n_vertices()];
    let i = C64::new(0.0, 1.0);
    for [a, b] in mesh.edges_with_tag(BoundaryTag::Gamma) {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let c = mesh.vertices[third[&(a.min(b), a.max(b))]];
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let mut nu = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        if nu[0] * (c[0] - pa[0]) + nu[1] * (c[1] - pa[1]) > 0.0 {
            nu = [-nu[0], -nu[1]];
        }
        let dn = direction[0] * nu[0] + direction[1] * nu[1];
        let q = 4usize.max((2.0 + k.norm() * len).ceil() as usize);
        let (xq, wq) = gauss_legendre(q);
        for (x, w) in xq.iter().zip(&wq) {
            let s = 0.5 * (x + 1.0);
            let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let phase = i * k * (direction[0] * p[0] + direction[1] * p[1]);
            let g = -(i * k * dn) * phase.exp();
            let f = g * (0.5 * w * len);
            load[a] += f * (1.0 - s);
            load[b] += f * s;
        }
    }
    load
}
