mod common;

use common::xprec::{self, Cdd, Dd};
use dtn_core::linalg::C64;
use dtn_core::mesh::*;
use dtn_core::nep::ResonanceOperator;
use dtn_core::oracle::*;
use dtn_core::specfun::hankel1_prime;
use dtn_core::Region;
use std::f64::consts::PI;

fn search_box() -> Region {
    Region::new([0.0, 4.0], [-4.0, 0.0])
}

const TABLE1_H5: [(f64, f64); 3] = [(0.501184, -0.643547), (1.434443, -0.834553), (0.440810, -1.981650)];

#[test]
fn disk_poles_in_search_box() {
    let poles = disk_exact_poles(&search_box(), 12);
    assert!(!poles.is_empty());
    let first = poles[0].k;
    assert!((first - C64::new(0.501184, -0.643547)).norm() < 1e-4, "{first}");
    for p in &poles {
        assert!(p.newton_residual <= 1e-12);
        assert!(hankel1_prime(p.m, p.k).unwrap().norm() <= 1e-12);
        assert!(p.k.re >= 0.0 && p.k.im < 0.0);
        assert!(p.m <= 10);
    }
    for w in poles.windows(2) {
        assert!(w[0].k.norm() <= w[1].k.norm());
    }
    for (re, im) in TABLE1_H5 {
        let t = C64::new(re, im);
        assert!(poles.iter().any(|p| (p.k - t).norm() < 5e-4), "{t}");
    }
    let none = disk_exact_poles(&search_box(), 12).into_iter().filter(|p| p.m >= 11).count();
    assert_eq!(none, 0);
}

#[test]
fn upper_half_plane_has_no_disk_poles() {
    assert!(disk_exact_poles(&Region::new([0.0, 1.0], [1.0, 2.0]), 6).is_empty());
}

#[test]
fn mie_field_satisfies_neumann_condition() {
    for k in [1.0, 2.5] {
        let d = [0.6, 0.8];
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 50.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let du = mie_radial_derivative(k, d, &pts).unwrap();
        for (p, v) in pts.iter().zip(&du) {
            let dn = d[0] * p[0] + d[1] * p[1];
            let inc = C64::new(0.0, k * dn) * C64::new(0.0, k * dn).exp();
            assert!((inc + v).norm() < 1e-10, "{}", (inc + v).norm());
        }
    }
}

#[test]
fn mie_field_reciprocity() {
    let pts = [[1.1, 0.2], [-0.4, 1.05], [0.7, -0.9]];
    let neg: Vec<[f64; 2]> = pts.iter().map(|p| [-p[0], -p[1]]).collect();
    let d = [0.8, -0.6];
    let a = mie_scattered_field(1.7, d, &pts).unwrap();
    let b = mie_scattered_field(1.7, [-d[0], -d[1]], &neg).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-12 * x.norm());
    }
    assert!(matches!(mie_scattered_field(1.0, d, &[[0.5, 0.0]]), Err(OracleError::Inside { .. })));
}

#[test]
fn mie_field_matches_extended_precision_sum() {
    let k = C64::new(1.0, 0.0);
    let x = C64::new(1.1, 0.0);
    let mut sum = Cdd::ZERO;
    let mut ip = Cdd::ONE;
    for m in 0..40 {
        let eps = Dd::new(if m == 0 { 1.0 } else { 2.0 });
        let term = ip * xprec::bessel_j_prime(m, k) / xprec::hankel1_prime(m, k) * xprec::hankel1(m, x);
        sum = sum - term.scale(eps);
        ip = ip * Cdd::I;
    }
    let exact = sum.to_c64();
    let v = mie_scattered_field(1.0, [1.0, 0.0], &[[1.1, 0.0]]).unwrap()[0];
    assert!((v - exact).norm() <= 1e-10 * exact.norm(), "{v} vs {exact}");
}

#[test]
fn fem_scattering_converges_at_second_order() {
    let shape = ObstacleShape::disk(1.0).unwrap();
    let (nt, nl) = template_for_mesh_size(&shape, 1.25, PI / 25.0).unwrap();
    let mut mesh = generate_template_mesh(&shape, 1.25, nt, nl).unwrap();
    let mut errs = vec![];
    for _ in 0..3 {
        let op = ResonanceOperator::new(mesh.clone(), 1.25, 20);
        let uh = op.solve_scattering(1.0, [1.0, 0.0]).unwrap();
        assert!(uh.iter().all(|v| v.is_finite()));
        let exact = mie_scattered_field(1.0, [1.0, 0.0], &mesh.vertices).unwrap();
        let diff: Vec<C64> = uh.iter().zip(&exact).map(|(a, b)| a - b).collect();
        errs.push(op.l2_norm(&diff) / op.l2_norm(&exact));
        mesh = refine_uniform(&mesh, Some(&shape), 1.25).unwrap();
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "errors {errs:?}");
    }
}
