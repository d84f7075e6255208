use dtn_core::linalg::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Random sparse matrix with a dominant diagonal (well conditioned).
fn random_sparse(n: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || rng.random::<f64>() < density {
                t.push((i, j, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
            }
        }
        t.push((i, i, c(3.0 + 2.0 * density * n as f64, 0.5)));
    }
    CsrMatrix::from_triplets(n, n, t)
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(a: &[Vec<C64>], b: &[C64]) -> Vec<C64> {
    let n = b.len();
    let mut m: Vec<Vec<C64>> = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm())).unwrap();
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
            let v = x[k];
            x[i] -= f * v;
        }
    }
    for k in (0..n).rev() {
        let s: C64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k][k];
    }
    x
}

fn dense_mul(a: &[Vec<C64>], x: &[C64]) -> Vec<C64> {
    a.iter().map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

#[test]
fn spmv_identity_zero_and_dense_agreement() {
    let x = random_vector(20, 3);
    assert_eq!(spmv(&CsrMatrix::identity(20), &x), x);
    assert!(spmv(&CsrMatrix::zeros(20), &x).iter().all(|v| *v == c(0.0, 0.0)));
    let a = random_sparse(20, 0.2, 11);
    let y = spmv(&a, &x);
    let yd = dense_mul(&a.to_dense(), &x);
    for (u, v) in y.iter().zip(&yd) {
        assert!((u - v).norm() <= 1e-13 * v.norm().max(1.0));
    }
}

#[test]
fn triplets_sum_duplicates_and_sort() {
    let a = CsrMatrix::from_triplets(3, 3, vec![(1, 2, c(1.0, 0.0)), (1, 0, c(2.0, 0.0)), (1, 2, c(0.5, 1.0))]);
    assert_eq!(a.nnz(), 2);
    assert_eq!(a.col_idx(), &[0, 2]);
    assert_eq!(a.get(1, 2), c(1.5, 1.0));
    assert!(CsrMatrix::from_raw(2, 2, vec![0, 2, 2], vec![1, 0], vec![c(1.0, 0.0); 2]).is_none());
    let t = a.transpose();
    assert_eq!(t.get(2, 1), c(1.5, 1.0));
}

#[test]
fn diagonal_solves_are_exact() {
    let d: Vec<C64> = (0..10).map(|i| c(1.0 + i as f64, -0.5 * i as f64)).collect();
    let a = CsrMatrix::from_triplets(10, 10, d.iter().enumerate().map(|(i, &v)| (i, i, v)));
    let f = factorize(&a).unwrap();
    let b: Vec<C64> = d.iter().map(|v| v * c(2.0, 0.0)).collect();
    let x = f.solve(&b).unwrap();
    assert!(x.iter().all(|v| (v - c(2.0, 0.0)).norm() < 1e-15));
}

#[test]
fn sparse_lu_matches_dense_elimination() {
    let a = random_sparse(50, 0.1, 7);
    let b = random_vector(50, 8);
    let x = factorize(&a).unwrap().solve(&b).unwrap();
    let xr = dense_solve(&a.to_dense(), &b);
    let err: f64 = x.iter().zip(&xr).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= 1e-9 * norm2(&xr));
}

#[test]
fn zero_row_is_singular() {
    let mut t: Vec<(usize, usize, C64)> = (0..6).map(|i| (i, i, c(1.0, 0.0))).collect();
    t.retain(|&(i, _, _)| i != 3);
    t.push((2, 3, c(1.0, 0.0)));
    let a = CsrMatrix::from_triplets(6, 6, t);
    assert!(matches!(factorize(&a), Err(LinalgError::Singular { .. })));
    // Numerically (not structurally) singular.
    let a = CsrMatrix::from_triplets(
        2,
        2,
        vec![(0, 0, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 0, c(2.0, 0.0)), (1, 1, c(4.0, 0.0))],
    );
    assert!(matches!(factorize(&a), Err(LinalgError::Singular { .. })));
}

#[test]
fn residual_contract_on_many_instances() {
    for seed in 0..1000u64 {
        let n = 10 + (seed as usize * 37) % 191;
        let a = random_sparse(n, 4.0 / n as f64, seed);
        let b = random_vector(n, seed + 10_000);
        let x = factorize(&a).unwrap().solve(&b).unwrap();
        let r: Vec<C64> = spmv(&a, &x).iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!(norm2(&r) <= 1e-10 * (a.frobenius_norm() * norm2(&x) + norm2(&b)), "seed {seed}");
    }
}

#[test]
fn symbolic_reuse_and_many_rhs() {
    let a = random_sparse(40, 0.1, 5);
    let sym = analyze(&a).unwrap();
    let mut a2 = a.clone();
    for v in a2.values_mut() {
        *v *= c(0.5, 0.25);
    }
    let f = factorize_with(&sym, &a2).unwrap();
    let rhs = vec![random_vector(40, 1), random_vector(40, 2)];
    let xs = f.solve_many(&rhs).unwrap();
    for (x, b) in xs.iter().zip(&rhs) {
        assert_eq!(x, &f.solve(b).unwrap());
    }
    assert!(matches!(f.solve(&[c(1.0, 0.0)]), Err(LinalgError::Dimension { .. })));
}

#[test]
fn random_vectors() {
    assert_eq!(random_vector(100, 9), random_vector(100, 9));
    let a = random_vector(200, 1);
    let b = random_vector(200, 2);
    assert!(dotc(&a, &b).norm() / (norm2(&a) * norm2(&b)) < 0.9);
    assert!(norm2(&a) > 0.0);
    assert!(a.iter().all(|v| v.re.abs() <= 1.0 && v.im.abs() <= 1.0));
}

#[test]
fn repeated_solves_are_bit_identical() {
    let a = random_sparse(120, 0.05, 77);
    let b = random_vector(120, 78);
    let x1 = factorize(&a).unwrap().solve(&b).unwrap();
    let x2 = factorize(&a).unwrap().solve(&b).unwrap();
    assert_eq!(x1, x2);
}

proptest! {
    #[test]
    fn spmv_is_linear(seed in 0u64..1000, alpha in -2.0f64..2.0) {
        let a = random_sparse(30, 0.2, seed);
        let x = random_vector(30, seed + 1);
        let y = random_vector(30, seed + 2);
        let s: Vec<C64> = x.iter().zip(&y).map(|(u, v)| u * alpha + v).collect();
        let lhs = spmv(&a, &s);
        let ax = spmv(&a, &x);
        let ay = spmv(&a, &y);
        for i in 0..30 {
            prop_assert!((lhs[i] - (ax[i] * alpha + ay[i])).norm() < 1e-12);
        }
    }
}
