use super::*;
use crate::poly::{build_dictionary, Monomial};

/// Noise-free snapshots of the scalar linear system dx/dt = -x sampled at
/// interval tau: the flow is x(t) = x0 exp(-t), so y = x exp(-tau) exactly.
fn linear_fixture(n: usize, tau: f64) -> SnapshotDataset {
    let snapshots = (0..n)
        .map(|k| {
            let x = -1.0 + 2.0 * (k as f64) / ((n - 1) as f64);
            Snapshot {
                x: vec![x],
                u: vec![],
                y: vec![x * (-tau).exp()],
            }
        })
        .collect();
    SnapshotDataset::new(1, 0, tau, snapshots).unwrap()
}

/// Cubic monomial dictionary without the constant: [x, x^2, x^3].
fn cubic_dictionary() -> Dictionary {
    Dictionary::new(
        1,
        vec![
            Monomial::new(vec![1]),
            Monomial::new(vec![2]),
            Monomial::new(vec![3]),
        ],
    )
    .unwrap()
}

#[test]
fn assemble_phi_single_snapshot() {
    let data = SnapshotDataset::new(
        1,
        0,
        0.1,
        vec![Snapshot {
            x: vec![1.0],
            u: vec![],
            y: vec![2.0],
        }],
    )
    .unwrap();
    let phi = build_dictionary(1, &[1], None); // [1, x]
    let m = assemble_phi(&data, &phi).unwrap();
    assert_eq!(m.shape(), (2, 1));
    assert_eq!(m[(0, 0)], 1.0);
    assert_eq!(m[(1, 0)], 2.0);
}

#[test]
fn assemble_phi_has_one_column_per_snapshot() {
    let data = linear_fixture(17, 0.01);
    let phi = cubic_dictionary();
    assert_eq!(assemble_phi(&data, &phi).unwrap().ncols(), 17);
}

#[test]
fn assemble_psi_stacks_input_products() {
    // psi = [1, x], x = 2, u = 3 -> column [1, 2, 3, 6].
    let data = SnapshotDataset::new(
        1,
        1,
        0.1,
        vec![Snapshot {
            x: vec![2.0],
            u: vec![3.0],
            y: vec![0.0],
        }],
    )
    .unwrap();
    let psi = build_dictionary(1, &[1], None);
    let m = assemble_psi(&data, &psi).unwrap();
    assert_eq!(m.shape(), (4, 1));
    assert_eq!(
        (m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(3, 0)]),
        (1.0, 2.0, 3.0, 6.0)
    );
}

#[test]
fn assemble_psi_without_inputs_is_plain_evaluation() {
    let data = linear_fixture(5, 0.01);
    let psi = cubic_dictionary();
    let m = assemble_psi(&data, &psi).unwrap();
    assert_eq!(m.nrows(), 3);
}

#[test]
fn assemble_psi_zero_input_gives_zero_block() {
    let data = SnapshotDataset::new(
        1,
        1,
        0.1,
        vec![Snapshot {
            x: vec![2.0],
            u: vec![0.0],
            y: vec![0.0],
        }],
    )
    .unwrap();
    let psi = build_dictionary(1, &[1], None);
    let m = assemble_psi(&data, &psi).unwrap();
    assert_eq!(m[(2, 0)], 0.0);
    assert_eq!(m[(3, 0)], 0.0);
}

#[test]
fn fit_linear_system_recovers_diagonal_flow_map() {
    // Monomial observables of the flow x exp(-t): x^k evolves by exp(-k tau).
    let tau = 0.01;
    let data = linear_fixture(500, tau);
    let dict = cubic_dictionary();
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    assert_eq!(model.a.shape(), (3, 3));
    for k in 0..3 {
        let expected = (-(k as f64 + 1.0) * tau).exp();
        assert!(
            (model.a[(k, k)] - expected).abs() < 1e-6,
            "diagonal {k}: {} vs {expected}",
            model.a[(k, k)]
        );
        for j in 0..3 {
            if j != k {
                assert!(model.a[(k, j)].abs() < 1e-6);
            }
        }
    }
    assert!(model.fit_residual < 1e-8);
    assert_eq!(model.svd_rank, 3);
}

#[test]
fn duplicated_dataset_gives_identical_fit() {
    let tau = 0.05;
    let base = linear_fixture(40, tau);
    let mut doubled = base.snapshots().to_vec();
    doubled.extend(base.snapshots().iter().cloned());
    let doubled = SnapshotDataset::new(1, 0, tau, doubled).unwrap();
    let dict = cubic_dictionary();
    let m1 = fit_koopman(&base, &dict, &dict).unwrap();
    let m2 = fit_koopman(&doubled, &dict, &dict).unwrap();
    assert!((&m1.a - &m2.a).norm() < 1e-12);
}

#[test]
fn single_snapshot_rank_one_fit() {
    // psi(x1) = e1 (psi = [1, x] at x = 0), phi(y1) = v: K = v e1^T.
    let data = SnapshotDataset::new(
        1,
        0,
        1.0,
        vec![Snapshot {
            x: vec![0.0],
            u: vec![],
            y: vec![0.7],
        }],
    )
    .unwrap();
    let dict = build_dictionary(1, &[1], None);
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    assert!((model.a[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((model.a[(1, 0)] - 0.7).abs() < 1e-12);
    assert!(model.a[(0, 1)].abs() < 1e-12);
    assert!(model.a[(1, 1)].abs() < 1e-12);
}

#[test]
fn degenerate_data_fails_loudly() {
    let data = SnapshotDataset::new(
        1,
        0,
        1.0,
        vec![Snapshot {
            x: vec![0.0],
            u: vec![],
            y: vec![0.0],
        }],
    )
    .unwrap();
    let dict = cubic_dictionary(); // no constant entry: psi(0) = 0
    match fit_koopman(&data, &dict, &dict) {
        Err(Error::DegenerateData(_)) => {}
        other => panic!("expected degenerate-data error, got {other:?}"),
    }
}

#[test]
fn apply_koopman_linear_observable() {
    let tau = 0.01;
    let data = linear_fixture(500, tau);
    let dict = cubic_dictionary();
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    // c = e1 picks the observable x; its image is exp(-tau) x.
    let p = model.apply(&[1.0, 0.0, 0.0], &[]).unwrap();
    let c1 = p.coefficient(&Monomial::new(vec![1]));
    assert!((c1 - (-tau).exp()).abs() < 1e-6);
    assert!(p.coefficient(&Monomial::new(vec![2])).abs() < 1e-6);
}

#[test]
fn apply_koopman_zero_observable() {
    let data = linear_fixture(50, 0.01);
    let dict = cubic_dictionary();
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    assert!(model.apply(&[0.0; 3], &[]).unwrap().is_zero());
}

#[test]
fn lie_coefficient_of_squared_observable() {
    let tau = 0.01;
    let data = linear_fixture(500, tau);
    let dict = cubic_dictionary();
    let lie = LieModel::new(fit_koopman(&data, &dict, &dict).unwrap());
    let p = lie.apply(&[0.0, 1.0, 0.0], &[]).unwrap();
    let expected = ((-2.0 * tau).exp() - 1.0) / tau; // about -1.98013 at tau = 0.01
    let got = p.coefficient(&Monomial::new(vec![2]));
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    assert!((expected + 1.98013).abs() < 1e-4);
}

#[test]
fn lie_converges_first_order_in_tau() {
    // The x^2 Lie coefficient tends to -2 with O(tau) error.
    let mut errors = Vec::new();
    for tau in [0.1, 0.01, 0.001] {
        let data = linear_fixture(500, tau);
        let dict = cubic_dictionary();
        let lie = LieModel::new(fit_koopman(&data, &dict, &dict).unwrap());
        let p = lie.apply(&[0.0, 1.0, 0.0], &[]).unwrap();
        errors.push((p.coefficient(&Monomial::new(vec![2])) + 2.0).abs());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((8.0..=12.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn lie_affine_decomposition_reconstructs_apply() {
    use rand::{Rng, SeedableRng};
    // A controlled fixture: dx/dt = -x + u, flow under constant u is
    // x(t) = (x0 - u) exp(-t) + u.
    let tau = 0.02f64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let snapshots = (0..400)
        .map(|_| {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let u: f64 = rng.gen_range(-1.0..1.0);
            let y = (x - u) * (-tau).exp() + u;
            Snapshot {
                x: vec![x],
                u: vec![u],
                y: vec![y],
            }
        })
        .collect();
    let data = SnapshotDataset::new(1, 1, tau, snapshots).unwrap();
    let dict = build_dictionary(1, &[3], None);
    let lie = LieModel::new(fit_koopman(&data, &dict, &dict).unwrap());

    let c = [0.3, -1.0, 0.25, 2.0];
    let (drift, inputs) = lie.affine_decomposition(&c).unwrap();
    assert_eq!(inputs.len(), 1);
    for _ in 0..5 {
        let u = rng.gen_range(-2.0..2.0);
        let direct = lie.apply(&c, &[u]).unwrap();
        let reconstructed = drift.add(&inputs[0].scale(u)).unwrap();
        let diff = direct.sub(&reconstructed).unwrap().max_abs_coefficient();
        assert!(diff < 1e-12, "mismatch {diff}");
    }
    // c = 0 decomposes to all zeros.
    let (d0, i0) = lie.affine_decomposition(&[0.0; 4]).unwrap();
    assert!(d0.is_zero() && i0[0].is_zero());
}

#[test]
fn lie_apply_is_linear_in_the_observable() {
    let data = linear_fixture(300, 0.01);
    let dict = cubic_dictionary();
    let lie = LieModel::new(fit_koopman(&data, &dict, &dict).unwrap());
    let c1 = [1.0, -0.5, 2.0];
    let c2 = [0.0, 3.0, -1.0];
    let (alpha, beta) = (0.7, -1.3);
    let combo: Vec<f64> = c1
        .iter()
        .zip(&c2)
        .map(|(a, b)| alpha * a + beta * b)
        .collect();
    let lhs = lie.apply(&combo, &[]).unwrap();
    let rhs = lie
        .apply(&c1, &[])
        .unwrap()
        .scale(alpha)
        .add(&lie.apply(&c2, &[]).unwrap().scale(beta))
        .unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs_coefficient() < 1e-10);
}

#[test]
fn lie_image_stays_in_psi_span() {
    // span(phi) inside span(psi): the image has support inside psi's
    // monomial set.
    let data = linear_fixture(300, 0.01);
    let phi = build_dictionary(1, &[2], None);
    let psi = build_dictionary(1, &[4], None);
    let lie = LieModel::new(fit_koopman(&data, &phi, &psi).unwrap());
    let p = lie.apply(&[0.1, 0.2, 0.3], &[]).unwrap();
    for (m, _) in p.terms() {
        assert!(psi.position(m).is_some());
    }
}

#[test]
fn residual_is_a_least_squares_minimum() {
    use rand::{Rng, SeedableRng};
    let data = linear_fixture(100, 0.05);
    let dict = cubic_dictionary();
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    let phi_mat = assemble_phi(&data, &dict).unwrap();
    let psi_mat = assemble_psi(&data, &dict).unwrap();
    let k: DMatrix<f64> = model.a.clone();
    let base = (&phi_mat - &k * &psi_mat).norm();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let perturbation =
            DMatrix::from_fn(k.nrows(), k.ncols(), |_, _| rng.gen_range(-1e-4..1e-4));
        let perturbed = (&phi_mat - (&k + &perturbation) * &psi_mat).norm();
        assert!(perturbed >= base - 1e-12);
    }
}

#[test]
fn dataset_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    let meta = dir.path().join("data.json");
    let data = SnapshotDataset::new(
        2,
        1,
        0.25,
        vec![
            Snapshot {
                x: vec![0.5, -1.0],
                u: vec![0.125],
                y: vec![0.4, -0.9],
            },
            Snapshot {
                x: vec![1.5, 2.0],
                u: vec![-0.25],
                y: vec![1.4, 1.9],
            },
        ],
    )
    .unwrap();
    data.write_csv(&csv, &meta).unwrap();
    let back = SnapshotDataset::read_csv(&csv, &meta).unwrap();
    assert_eq!(data, back);

    let header = std::fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("x_1,x_2,u_1,y_1,y_2"));
}

#[test]
fn model_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let data = linear_fixture(100, 0.01);
    let dict = cubic_dictionary();
    let model = fit_koopman(&data, &dict, &dict).unwrap();
    model.save_json(&path).unwrap();
    let back = KoopmanModel::load_json(&path).unwrap();
    assert_eq!(back.a, model.a);
    assert_eq!(back.svd_rank, model.svd_rank);
    assert_eq!(back.phi, model.phi);
}
