mod common;

use common::oracle::jsd_lp as lp_oracle;
use common::*;
use nalgebra::{DMatrix, DVector};
use ppcs_core::data::{synthesize, SynthSpec};
use ppcs_core::jsd::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn equal_constants_cost_two() {
    let b = haar_basis(4);
    let a = [1.0; 4];
    assert!((lp_oracle(&a, &a, &b) - 2.0).abs() < 1e-9);
    let s = jsd_decompose(&a, &a, &b).unwrap();
    assert!((s.objective() - 2.0).abs() <= 2.0 * 1e-4);
}

#[test]
fn opposite_signals() {
    let b = haar_basis(8);
    let a1 = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0, -1.0, 2.0];
    let a2: Vec<f64> = a1.iter().map(|v| -v).collect();
    let oracle = lp_oracle(&a1, &a2, &b);
    let s = jsd_decompose(&a1, &a2, &b).unwrap();
    let split_cost: f64 = a1.iter().chain(&a2).map(|v| v.abs()).sum();
    assert!(oracle <= split_cost + 1e-9);
    assert!(s.objective() <= oracle + 1e-4);
    assert!(s.feasibility_residual(&a1, &a2) <= 1e-6);
}

/// Columns Psi v with a few nonzero coarse coefficients.
fn sparse_in_haar(n: usize, t: usize, seed: u64) -> DMatrix<f64> {
    let b = haar_basis(n);
    let p = b.padded_len();
    let mut r = rng(seed);
    let mut out = DMatrix::zeros(n, t);
    for j in 0..t {
        let mut v = DVector::zeros(p);
        v[0] = r.random_range(5.0..10.0);
        for _ in 0..2 {
            v[r.random_range(1..4)] = r.random_range(-2.0..2.0);
        }
        let col = b.matrix() * v;
        out.column_mut(j).copy_from(&col.rows(0, n));
    }
    out
}

#[test]
fn equal_sparse_inputs_have_no_private_part() {
    let a = sparse_in_haar(8, 10, 1);
    let split = jsd_matrix(&a, &a, &haar_basis(8)).unwrap();
    assert!(split.private1.norm() <= 1e-6 * a.norm());
    assert!(split.private2.norm() <= 1e-6 * a.norm());
    assert!(correlation_report(&a, &a).unwrap() >= 0.99);
}

#[test]
fn small_difference_is_absorbed_privately() {
    let a1 = sparse_in_haar(8, 8, 2);
    let mut r = rng(3);
    let e = gaussian(8, 8, &mut r) * 0.01;
    let a2 = &a1 + &e;
    let split = jsd_matrix(&a1, &a2, &haar_basis(8)).unwrap();
    let moved = &split.private2 - &split.private1 - &e;
    assert!(moved.norm() / e.norm() <= 1.0);
}

#[test]
fn ratio_orders_shared_scaled_independent() {
    let a = sparse_in_haar(16, 12, 4);
    let equal = correlation_report(&a, &a).unwrap();
    let scaled = correlation_report(&a, &(&a * 2.0)).unwrap();
    let independent: Vec<f64> = (0..15)
        .map(|seed| {
            let mut r = rng(100 + seed);
            correlation_report(&gaussian(16, 12, &mut r), &gaussian(16, 12, &mut r)).unwrap()
        })
        .collect();
    let independent = mean(&independent);
    println!("equal {equal} scaled {scaled} independent {independent}");
    assert!(independent <= 0.5);
    assert!(independent < scaled && scaled < equal);
}

#[test]
fn synthesized_pair_is_correlated() {
    let spec = SynthSpec {
        n: 30,
        t: 40,
        shared_rank: 2,
        private_rank: 1,
        noise_std: 0.01,
        attributes: 2,
        seed: 5,
    };
    let gt = synthesize(&spec).unwrap();
    let ratio = correlation_report(gt.matrices[0].data(), gt.matrices[1].data()).unwrap();
    println!("synthetic ratio {ratio}");
    assert!(ratio >= 0.8);
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=16).prop_flat_map(|t| {
        (
            prop::collection::vec(-5.0f64..5.0, t),
            prop::collection::vec(-5.0f64..5.0, t),
        )
    })
}

proptest! {
    #![proptest_config(prop_config(64))]

    #[test]
    fn optimal_and_feasible((a1, a2) in instance()) {
        let b = haar_basis(a1.len());
        let s = jsd_decompose(&a1, &a2, &b).unwrap();
        let oracle = lp_oracle(&a1, &a2, &b);
        prop_assert!(s.objective() <= oracle * (1.0 + 1e-4) + 1e-12);
        prop_assert!(s.feasibility_residual(&a1, &a2) <= 1e-6);
    }

    #[test]
    fn matrix_split_conserves(n in 2usize..10, t in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a1, a2) = (gaussian(n, t, &mut r), gaussian(n, t, &mut r));
        let split = jsd_matrix(&a1, &a2, &haar_basis(n)).unwrap();
        prop_assert!((&split.shared + &split.private1 - &a1).amax() <= 1e-6);
        prop_assert!((&split.shared + &split.private2 - &a2).amax() <= 1e-6);
        let ratio = split.shared_energy_ratio();
        prop_assert!((0.0..=1.0).contains(&ratio));
    }

    #[test]
    fn haar_orthonormal(t in 1usize..70) {
        let b = haar_basis(t);
        let p = b.padded_len();
        prop_assert_eq!(p, t.next_power_of_two());
        prop_assert!((b.matrix().tr_mul(b.matrix()) - DMatrix::identity(p, p)).amax() <= 1e-10);
    }
}
