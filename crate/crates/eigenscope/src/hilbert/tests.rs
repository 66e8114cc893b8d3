use super::*;
use crate::lapack;
use crate::linalg::vdot;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_dense(n: usize, seed: u64) -> CMatrix {
    let mut rng = rng_for(seed, Task::RandomUnitary { index: 999 });
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        c(re, im)
    })
}

fn dft(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |i, j| {
        let ang = -TAU * (i * j) as f64 / n as f64;
        c(ang.cos(), ang.sin()) * scale
    })
}

// ---- operator_norm -------------------------------------------------------

#[test]
fn norm_identity_is_one() {
    let id = OperatorHandle::Identity(5);
    assert_eq!(operator_norm(&id).unwrap(), 1.0);
}

#[test]
fn norm_zero_operator_is_zero() {
    let z = OperatorHandle::dense(CMatrix::zeros(6, 6));
    assert_eq!(operator_norm(&z).unwrap(), 0.0);
}

#[test]
fn norm_diagonal_is_max_modulus() {
    let d = OperatorHandle::diagonal(vec![c(3.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
    assert_eq!(operator_norm(&d).unwrap(), 3.0);
}

#[test]
fn norm_matches_svd_oracle_on_random_dense() {
    // Oracle: full singular value decomposition, an entirely separate code
    // path from the power iteration under test.
    for (n, seed) in [(8usize, 1u64), (8, 2), (32, 3), (64, 4)] {
        let m = random_dense(n, seed);
        let oracle = lapack::singular_values(&m).unwrap()[0];
        let got = operator_norm(&OperatorHandle::dense(m)).unwrap();
        assert!(
            (got - oracle).abs() <= 1e-6 * oracle,
            "n={n} seed={seed}: power {got} vs svd {oracle}"
        );
    }
}

#[test]
fn norm_of_chain_without_materializing() {
    // N = 512 exceeds the materialization cutoff; the chain must still
    // produce the norm of the product.
    let n = 512;
    let u = random_unitary(n, 11, 0);
    let d: Vec<C64> = (0..n).map(|i| c(1.0 + (i as f64) / n as f64, 0.0)).collect();
    let chain = OperatorHandle::chain(vec![
        OperatorHandle::dense(u.clone()),
        OperatorHandle::diagonal(d.clone()),
    ])
    .unwrap();
    // ||U D|| = ||D|| = max d_i since U is unitary.
    let got = operator_norm(&chain).unwrap();
    let want = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn norm_equals_adjoint_norm_at_n64() {
    let m = random_dense(64, 7);
    let a = OperatorHandle::dense(m);
    let n1 = operator_norm(&a).unwrap();
    let n2 = operator_norm(&a.clone().adjoint()).unwrap();
    assert!((n1 - n2).abs() <= 1e-6 * n1.max(n2));
}

#[test]
fn chain_dim_mismatch_names_stages() {
    let a = OperatorHandle::Identity(8);
    let b = OperatorHandle::Identity(4);
    match OperatorHandle::chain(vec![a, b]) {
        Err(Error::ChainMismatch {
            left_stage,
            left_dim,
            right_stage,
            right_dim,
        }) => {
            assert_eq!((left_stage, left_dim, right_stage, right_dim), (0, 8, 1, 4));
        }
        other => panic!("expected ChainMismatch, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prop_norm_equals_adjoint_norm(n in 2usize..12, seed in 0u64..500) {
        let m = random_dense(n, seed);
        let a = OperatorHandle::dense(m);
        let n1 = operator_norm(&a).unwrap();
        let n2 = operator_norm(&a.clone().adjoint()).unwrap();
        prop_assert!((n1 - n2).abs() <= 1e-6 * n1.max(n2).max(1e-12));
    }

    #[test]
    fn prop_norm_submultiplicative_on_chains(n in 2usize..10, seed in 0u64..500) {
        let a = random_dense(n, seed);
        let b = random_dense(n, seed.wrapping_add(1000));
        let na = operator_norm(&OperatorHandle::dense(a.clone())).unwrap();
        let nb = operator_norm(&OperatorHandle::dense(b.clone())).unwrap();
        let nab = operator_norm(&OperatorHandle::chain(vec![
            OperatorHandle::dense(a),
            OperatorHandle::dense(b),
        ]).unwrap()).unwrap();
        prop_assert!(nab <= na * nb * (1.0 + 1e-6), "{nab} > {na} * {nb}");
    }

    #[test]
    fn prop_chain_apply_matches_materialized(n in 2usize..10, seed in 0u64..500) {
        let a = random_dense(n, seed);
        let b = random_dense(n, seed.wrapping_add(2000));
        let chain = OperatorHandle::chain(vec![
            OperatorHandle::dense(a),
            OperatorHandle::dense(b),
        ]).unwrap();
        let m = chain.materialize().unwrap();
        let x = random_state(n, seed, 5);
        let y1 = chain.apply(x.amps()).unwrap();
        let y2 = m.matvec(x.amps());
        for i in 0..n {
            prop_assert!((y1[i] - y2[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn prop_adjoint_apply_consistent(n in 2usize..10, seed in 0u64..500) {
        // <y, A x> == <A* y, x> for every handle shape exercised here.
        let a = random_dense(n, seed);
        let handle = OperatorHandle::chain(vec![
            OperatorHandle::dense(a).scaled(c(0.3, 0.7)),
            OperatorHandle::diagonal((0..n).map(|i| c(i as f64 * 0.1, 1.0)).collect()),
        ]).unwrap();
        let x = random_state(n, seed, 6);
        let y = random_state(n, seed, 7);
        let lhs = vdot(y.amps(), &handle.apply(x.amps()).unwrap());
        let rhs = vdot(&handle.apply_adjoint(y.amps()).unwrap(), x.amps());
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }
}

// ---- eig_unitary ----------------------------------------------------------

#[test]
fn eig_identity_is_standard_basis() {
    let dec = eig_unitary(&OperatorHandle::Identity(6)).unwrap();
    assert_eq!(dec.cluster_count, 1);
    for i in 0..6 {
        assert!((dec.eigenvalues[i] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(dec.phases[i].abs() < 1e-12);
        for k in 0..6 {
            let want = if k == i { 1.0 } else { 0.0 };
            assert!((dec.vectors.get(k, i) - c(want, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn eig_dft4_eigenvalues_are_fourth_roots() {
    let dec = eig_unitary(&OperatorHandle::dense(dft(4))).unwrap();
    let roots = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
    for lam in &dec.eigenvalues {
        assert!(
            roots.iter().any(|r| (lam - r).norm() < 1e-8),
            "unexpected eigenvalue {lam}"
        );
    }
    assert!(dec.max_residual <= 1e-8);
}

#[test]
fn eig_dft8_multiplicities() {
    // The N = 8 Fourier matrix has eigenvalue multiplicities 3, 2, 2, 1 for
    // 1, -1, -i, i respectively.
    let dec = eig_unitary(&OperatorHandle::dense(dft(8))).unwrap();
    let mut counts = [0usize; 4];
    for lam in &dec.eigenvalues {
        let roots = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0)];
        let k = roots
            .iter()
            .position(|r| (lam - r).norm() < 1e-8)
            .expect("eigenvalue is a fourth root");
        counts[k] += 1;
    }
    assert_eq!(counts, [3, 2, 2, 1]);
    assert!(dec.gram_defect <= 1e-10, "gram defect {}", dec.gram_defect);
}

#[test]
fn eig_random_unitary_reconstructs() {
    let n = 128;
    let u = random_unitary(n, 21, 0);
    let dec = eig_unitary(&OperatorHandle::dense(u.clone())).unwrap();
    assert!(dec.max_residual <= 1e-8);
    assert!(dec.gram_defect <= 1e-8);
    for i in 1..n {
        assert!(dec.phases[i] >= dec.phases[i - 1]);
        assert!((0.0..TAU).contains(&dec.phases[i]));
    }
    // sum_i mu_i v_i v_i* rebuilds U entrywise.
    let vd = {
        let mut m = dec.vectors.clone();
        for i in 0..n {
            let lam = dec.eigenvalues[i];
            for v in m.col_mut(i).iter_mut() {
                *v *= lam;
            }
        }
        m
    };
    let rebuilt = vd.matmul(&dec.vectors.adjoint());
    let mut diff = rebuilt;
    diff.sub_assign(&u);
    assert!(diff.max_abs() <= 1e-7, "reconstruction {}", diff.max_abs());
}

#[test]
fn eig_rejects_non_unitary() {
    let m = random_dense(8, 3);
    match eig_unitary(&OperatorHandle::dense(m)) {
        Err(Error::NotUnitary { defect, .. }) => assert!(defect > 1e-8),
        other => panic!("expected NotUnitary, got {other:?}"),
    }
}

#[test]
fn eig_rejects_oversized() {
    let h = OperatorHandle::Identity(5000);
    assert!(matches!(eig_unitary(&h), Err(Error::TooLarge { .. })));
}

#[test]
fn eig_deterministic_on_degenerate_spectrum() {
    // DFT has degenerate clusters; two runs must agree bitwise.
    let a = eig_unitary(&OperatorHandle::dense(dft(16))).unwrap();
    let b = eig_unitary(&OperatorHandle::dense(dft(16))).unwrap();
    assert_eq!(a.vectors.data(), b.vectors.data());
    assert_eq!(a.eigenvalues, b.eigenvalues);
}

// ---- verify_partition_of_unity ---------------------------------------------

#[test]
fn partition_basis_projectors() {
    let n = 7;
    let blocks: Vec<OperatorHandle> = (0..n)
        .map(|k| {
            let mut d = vec![c(0.0, 0.0); n];
            d[k] = c(1.0, 0.0);
            OperatorHandle::diagonal(d)
        })
        .collect();
    assert!(verify_partition_of_unity(&blocks).unwrap() <= 1e-14);
}

#[test]
fn partition_scaled_blocks_have_expected_defect() {
    let n = 10;
    let blocks: Vec<OperatorHandle> = (0..2)
        .map(|k| {
            let d: Vec<C64> = (0..n)
                .map(|j| {
                    let inside = (j % 2 == k) as u32;
                    c(inside as f64, 0.0)
                })
                .collect();
            OperatorHandle::diagonal(d).scaled(c(0.9, 0.0))
        })
        .collect();
    let defect = verify_partition_of_unity(&blocks).unwrap();
    assert!((defect - 0.19).abs() < 1e-12, "defect {defect}");
}

#[test]
fn partition_dense_path_agrees_with_diagonal_path() {
    let n = 6;
    let d1: Vec<C64> = (0..n).map(|j| c((j as f64 / n as f64).sqrt(), 0.0)).collect();
    let d2: Vec<C64> = (0..n)
        .map(|j| c((1.0 - j as f64 / n as f64).sqrt(), 0.0))
        .collect();
    let diag_blocks = vec![
        OperatorHandle::diagonal(d1.clone()),
        OperatorHandle::diagonal(d2.clone()),
    ];
    let dense_blocks = vec![
        OperatorHandle::dense(CMatrix::from_diag(&d1)),
        OperatorHandle::dense(CMatrix::from_diag(&d2)),
    ];
    let a = verify_partition_of_unity(&diag_blocks).unwrap();
    let b = verify_partition_of_unity(&dense_blocks).unwrap();
    assert!(a <= 1e-14);
    assert!(b <= 1e-7, "dense path defect {b}");
}

#[test]
fn partition_empty_family_errors() {
    assert!(matches!(
        verify_partition_of_unity(&[]),
        Err(Error::EmptyPartition)
    ));
}

// ---- state vectors ----------------------------------------------------------

#[test]
fn normalized_state_has_unit_norm() {
    let v = StateVector::normalized(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
    assert!(v.is_flagged_normalized());
    assert!((v.norm() - 1.0).abs() < 1e-12);
    v.check_unit_norm(1e-12).unwrap();
}

#[test]
fn zero_state_cannot_be_normalized() {
    assert!(matches!(
        StateVector::normalized(vec![c(0.0, 0.0); 4]),
        Err(Error::BadNorm { .. })
    ));
}

#[test]
fn random_states_are_reproducible() {
    let a = random_state(16, 42, 0);
    let b = random_state(16, 42, 0);
    let c_ = random_state(16, 42, 1);
    assert_eq!(a.amps(), b.amps());
    assert_ne!(a.amps(), c_.amps());
    assert!((a.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn random_unitary_is_unitary() {
    let u = random_unitary(32, 5, 0);
    let mut g = u.adjoint().matmul(&u);
    g.sub_identity();
    assert!(g.max_abs() < 1e-12);
}
