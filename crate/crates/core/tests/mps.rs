mod common;

use podr_core::flow::Field2D;
use podr_core::linalg::{distance, dot, norm};
use podr_core::mps::{
    compress_bases, decode_mps, enc_error_estimator, encode_mps, exact_encoding_error, search_bond_plan, tt_svd,
};
use podr_core::pod::pod_decompose;
use podr_core::{Error, PodBasisSet, SnapshotMatrix};
use proptest::prelude::*;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

fn random_basis(cols: &[Vec<f64>], nx: usize, ny: usize) -> PodBasisSet {
    let fields: Vec<Field2D> = cols.iter().map(|c| Field2D::new(nx, ny, c.clone()).unwrap()).collect();
    let labels: Vec<f64> = (0..cols.len()).map(|k| k as f64).collect();
    pod_decompose(&SnapshotMatrix::build(&fields, &labels).unwrap()).unwrap()
}

/// Encoding estimator evaluated term by term with explicit loops.
#[allow(clippy::needless_range_loop)]
fn naive_estimator(b: &PodBasisSet, approx: &[Vec<f64>]) -> f64 {
    let m = b.m() as f64;
    let mut total = 0.0;
    for i in 0..approx.len() {
        let mut inner = 0.0;
        for j in 0..approx.len() {
            let mut overlap = 0.0;
            for k in 0..b.n() {
                overlap += approx[i][k] * b.u[(k, j)];
            }
            inner += b.sigma[j] * b.sigma[j] / m * overlap;
        }
        let term = b.sigma[i] * b.sigma[i] / m - inner;
        total += term * term;
    }
    total.sqrt()
}

#[test]
fn product_states() {
    for (len, hot) in [(8, 0), (16, 5)] {
        let mut x = vec![0.0; len];
        x[hot] = 1.0;
        let m = tt_svd(&x, 4).unwrap();
        assert!(m.bonds().iter().all(|&b| b == 1));
        assert!(distance(m.contract(), &x) <= 1e-15);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(matches!(tt_svd(&[0.0; 8], 2), Err(Error::ZeroVector)));
    assert!(matches!(tt_svd(&[1.0; 6], 2), Err(Error::NotPowerOfTwo(6))));
}

#[test]
fn estimator_is_zero_for_exact_approximants() {
    let cols: Vec<Vec<f64>> = (0..4).map(|k| (0..64).map(|i| ((i * (k + 2)) as f64 * 0.37).sin()).collect()).collect();
    let mut b = random_basis(&cols, 8, 8);
    b.n_b = 4;
    let exact = compress_bases(&b, &[8, 8, 8, 8]).unwrap();
    assert!(enc_error_estimator(&b, &exact).unwrap() <= 1e-12);
}

#[test]
fn single_basis_estimator_algebra() {
    let cols: Vec<Vec<f64>> = (0..3).map(|k| (0..64).map(|i| ((i + 3 * k) as f64 * 0.21).cos()).collect()).collect();
    let mut b = random_basis(&cols, 8, 8);
    b.n_b = 1;
    let approx = compress_bases(&b, &[1]).unwrap();
    let delta = 1.0 - dot(approx[0].contract(), b.basis(0));
    let expected = b.sigma[0].powi(2) / b.m() as f64 * delta;
    assert!((enc_error_estimator(&b, &approx).unwrap() - expected.abs()).abs() <= 1e-15);
}

#[test]
fn search_edge_cases() {
    let cols: Vec<Vec<f64>> =
        (0..5).map(|k| (0..256).map(|i| ((i * i + 7 * k) as f64 * 0.013).sin() + 0.2).collect()).collect();
    let mut b = random_basis(&cols, 16, 16);
    b.n_b = 3;
    let (plan, mps) = search_bond_plan(&b, 1e9, 16).unwrap();
    assert_eq!(plan.chis, vec![1, 1, 1]);
    assert_eq!(mps.len(), 3);
    assert!(matches!(search_bond_plan(&b, 0.0, 2), Err(Error::ThresholdUnreachable { .. })));
    assert!(matches!(search_bond_plan(&b, 1e-3, 32), Err(Error::InvalidArgument(_))));
    assert!(matches!(search_bond_plan(&b, 1e-3, 3), Err(Error::InvalidArgument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn full_bond_round_trip(n in 1usize..=8, seed in any::<u64>()) {
        let len = 1 << n;
        let mut rng = podr_core::rng::stream_rng(seed, 0);
        let x: Vec<f64> = (0..len).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let m = tt_svd(&x, 1 << (n / 2)).unwrap();
        prop_assert!(distance(m.contract(), &unit(&x)) <= 1e-10);
        prop_assert!((norm(m.contract()) - 1.0).abs() <= 1e-10);
        for (k, &b) in m.bonds().iter().enumerate() {
            prop_assert!(b <= 1 << (k + 1).min(n - k - 1));
        }
    }

    #[test]
    fn truncation_matches_schmidt_oracle(x in prop::collection::vec(-1.0f64..1.0, 64), chi in prop::sample::select(vec![1usize, 2, 4])) {
        prop_assume!(norm(&x) > 1e-3);
        let xhat = unit(&x);
        let m = tt_svd(&x, chi).unwrap();
        prop_assert!(m.bonds().iter().all(|&b| b <= chi));
        let oracle = common::schmidt_truncate(&x, chi);
        let f_tt = dot(&xhat, m.contract()).abs();
        let f_or = dot(&xhat, &oracle).abs();
        prop_assert!((f_tt - f_or).abs() <= 1e-8, "tt {} oracle {}", f_tt, f_or);
    }

    #[test]
    fn estimator_matches_naive_loops(
        cols in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 32), 3..=5),
        chis in prop::collection::vec(prop::sample::select(vec![1usize, 2, 4]), 3),
    ) {
        let mut b = random_basis(&cols, 8, 4);
        b.n_b = 3;
        let approx = compress_bases(&b, &chis).unwrap();
        let dense: Vec<Vec<f64>> = approx.iter().map(|a| a.contract().to_vec()).collect();
        let fast = enc_error_estimator(&b, &approx).unwrap();
        prop_assert!((fast - naive_estimator(&b, &dense)).abs() <= 1e-12);
    }

    #[test]
    fn plans_honor_power_of_two_bonds(cols in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 64), 4..=6), threshold in 1e-3f64..1e-1) {
        let mut b = random_basis(&cols, 8, 8);
        b.n_b = 3;
        if let Ok((plan, mps)) = search_bond_plan(&b, threshold, 8) {
            prop_assert!(plan.estimated_error <= threshold);
            for (chi, m) in plan.chis.iter().zip(&mps) {
                prop_assert!(chi.is_power_of_two());
                prop_assert!(m.bonds().iter().all(|b| b <= chi));
            }
            prop_assert!((enc_error_estimator(&b, &mps).unwrap() - plan.estimated_error).abs() <= 1e-12);
        }
    }

    #[test]
    fn mps_file_round_trips(x in prop::collection::vec(-1.0f64..1.0, 32), chi in prop::sample::select(vec![1usize, 2, 4])) {
        prop_assume!(norm(&x) > 1e-3);
        let m = tt_svd(&x, chi).unwrap();
        let back = decode_mps(&encode_mps(&m).unwrap(), chi).unwrap();
        prop_assert_eq!(back.contract(), m.contract());
    }
}

/// Fidelity of each basis with its own compression never drops when chi grows,
/// and the per-basis error against a target tends to shrink.
#[test]
fn raising_chi_never_hurts_fidelity() {
    let cols: Vec<Vec<f64>> =
        (0..6).map(|k| (0..256).map(|i| (((i % 16) * (k + 1)) as f64 * 0.3).sin() * ((i / 16) as f64 * 0.2 + k as f64).cos()).collect()).collect();
    let mut b = random_basis(&cols, 16, 16);
    b.n_b = 4;
    for i in 0..b.n_b {
        let u = b.basis(i);
        let mut last = 0.0;
        for chi in [1, 2, 4, 8, 16] {
            let f = dot(u, tt_svd(u, chi).unwrap().contract()).abs();
            assert!(f + 1e-10 >= last, "basis {i} chi {chi}: {f} < {last}");
            last = f;
        }
    }
    let x = unit(&cols[0]);
    let full = compress_bases(&b, &[16, 16, 16, 16]).unwrap();
    assert!(exact_encoding_error(&x, &b, &full).unwrap() <= 1e-12);
}
