//! Tests for refined word families: cylinder tables against direct word
//! application, closed-form pressures, depth bookkeeping, the certificate
//! on a hand-checkable projector model, and the derived scans against
//! exact transport.

use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::catmap::{
    build_strip_partition, coarse_jacobian_table, coherent_state, quantize_cat,
    weyl_commutator_norm, ClassicalCatMap, StripPartitionSpec,
};
use crate::hilbert::{eig_unitary, operator_norm, random_state};
use crate::linalg::{vnorm, vnorm_sqr, CMatrix};

fn basis_state(n: usize, i: usize) -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); n];
    amps[i] = C64::new(1.0, 0.0);
    StateVector::new(amps)
}

/// Quantized standard map with a smooth strip partition and its coarse
/// Jacobian table.
fn standard_setup(
    n_dim: usize,
    k: usize,
    eta: f64,
) -> (
    ClassicalCatMap,
    OperatorHandle,
    QuantumPartition,
    JacobianTable,
) {
    let map = ClassicalCatMap::standard();
    let u = quantize_cat(&map, n_dim).unwrap();
    let spec = StripPartitionSpec::new(k, eta).unwrap();
    let partition = build_strip_partition(n_dim, &spec).unwrap();
    let jac = coarse_jacobian_table(&map, &spec, 10.0 * map.lambda(), 256).unwrap();
    (map, u, partition, jac)
}

fn mat_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut d = a.clone();
    d.sub_assign(b);
    d.max_abs()
}

#[test]
fn word_roundtrip_label_and_validation() {
    let w = SymbolWord::new(vec![0, 1, 2], 3).unwrap();
    assert_eq!(w.index(3), 21); // 0 + 1*3 + 2*9
    assert_eq!(SymbolWord::from_index(21, 3, 3), w);
    assert_eq!(w.label(), "012");
    assert_eq!(w.len(), 3);
    assert_eq!(w.steps(), 2);
    assert_eq!(w.reversed().letters(), &[2, 1, 0]);

    let wide = SymbolWord::new(vec![10, 3], 12).unwrap();
    assert_eq!(wide.label(), "10-3");

    assert!(matches!(
        SymbolWord::new(vec![], 3),
        Err(Error::BadParameter { name: "word", .. })
    ));
    assert!(matches!(
        SymbolWord::new(vec![3], 3),
        Err(Error::BadParameter { name: "word", .. })
    ));
}

#[test]
fn word_table_cap_refusals() {
    assert_eq!(checked_table_len(3, 4, WORD_TABLE_CAP).unwrap(), 81);

    // 5^12 = 244140625 words overflow the table cap.
    match checked_table_len(5, 12, WORD_TABLE_CAP) {
        Err(Error::WordTable { words, cap }) => {
            assert_eq!(words, 244_140_625);
            assert_eq!(cap, WORD_TABLE_CAP as u64);
        }
        other => panic!("expected WordTable, got {other:?}"),
    }

    // The same refusal through the cylinder path, before any linear
    // algebra happens.
    let spec = StripPartitionSpec::new(5, 0.05).unwrap();
    let partition = build_strip_partition(16, &spec).unwrap();
    let u = OperatorHandle::Identity(16);
    let psi = random_state(16, 1, 0);
    assert!(matches!(
        cylinder_measure(&psi, 11, &u, &partition),
        Err(Error::WordTable { .. })
    ));
}

#[test]
fn refined_families_resolve_identity() {
    for &(n_dim, k, eta, n) in &[
        (64usize, 2usize, 0.2, 6usize),
        (64, 5, 0.05, 2),
        (128, 3, 0.1, 3),
        (256, 4, 0.1, 2),
        (512, 2, 0.2, 1),
    ] {
        let (_, u, partition, _) = standard_setup(n_dim, k, eta);
        let psi = random_state(n_dim, 7, n as u64);

        let adj: f64 = adjoint_masses(&psi, n, &u, &partition).unwrap().iter().sum();
        assert!(
            (adj - 1.0).abs() <= 1e-10,
            "adjoint masses at N={n_dim} K={k} n={n} sum to {adj}"
        );

        let table = cylinder_measure(&psi, n, &u, &partition).unwrap();
        assert!(
            (table.total() - 1.0).abs() <= 1e-9,
            "cylinder total at N={n_dim} K={k} n={n} is {}",
            table.total()
        );
        assert_eq!(table.alphabet(), k);
        assert_eq!(table.steps(), n);
        assert_eq!(table.len(), k.pow(n as u32 + 1));
    }
}

#[test]
fn identity_propagator_gives_point_cylinders() {
    let u = OperatorHandle::Identity(8);
    let partition = QuantumPartition::basis_projectors(8);
    let psi = basis_state(8, 3);

    let table = cylinder_measure(&psi, 2, &u, &partition).unwrap();
    let idx = 3 + 3 * 8 + 3 * 64;
    assert!((table.mass(idx) - 1.0).abs() <= 1e-12);
    assert!((table.total() - 1.0).abs() <= 1e-12);
    assert!(table.entropy().abs() <= 1e-12);
    assert!(table.eigen_residual() <= 1e-12);
    assert_eq!(table.word(idx).letters(), &[3, 3, 3]);

    let shorter = cylinder_measure(&psi, 1, &u, &partition).unwrap();
    assert!(table.compatibility_defect(&shorter).unwrap() <= 1e-12);
}

#[test]
fn cylinder_masses_match_adjoint_word_application() {
    // mass(w) = ||P_{w-bar}* U^n psi||^2 for every state, not just
    // eigenvectors: the table entry is the reversed word's plain-adjoint
    // application.
    let (_, u, partition, _) = standard_setup(64, 3, 0.1);
    let psi = random_state(64, 11, 0);
    let n = 3;
    let table = cylinder_measure(&psi, n, &u, &partition).unwrap();

    for i in 0..20 {
        let idx = (7 * i) % 81;
        let word = table.word(idx).reversed();
        let v = refined_apply(&word, &psi, &u, &partition, true, Schedule::Plain).unwrap();
        let direct = vnorm_sqr(v.amps());
        assert!(
            (table.mass(idx) - direct).abs() <= 1e-12,
            "word {idx}: table {} vs direct {direct}",
            table.mass(idx)
        );
    }
}

#[test]
fn schedules_agree_where_they_must() {
    let (_, u, partition, _) = standard_setup(64, 3, 0.1);
    let psi = random_state(64, 13, 1);
    let word = SymbolWord::new(vec![1, 0, 2, 1], 3).unwrap();

    // Anchoring the word at time zero only prepends unitaries, so the
    // non-adjoint schedules carry the same norm for any state.
    let a = refined_apply(&word, &psi, &u, &partition, false, Schedule::Interleaved).unwrap();
    let b = refined_apply(&word, &psi, &u, &partition, false, Schedule::Plain).unwrap();
    assert!((vnorm(a.amps()) - vnorm(b.amps())).abs() <= 1e-12);

    // One-letter words have no propagator factor at all.
    let short = SymbolWord::new(vec![2], 3).unwrap();
    let sa = refined_apply(&short, &psi, &u, &partition, false, Schedule::Interleaved).unwrap();
    let sb = refined_apply(&short, &psi, &u, &partition, false, Schedule::Plain).unwrap();
    for (x, y) in sa.amps().iter().zip(sb.amps()) {
        assert!((x - y).norm() <= 1e-15);
    }

    // The interleaved application matches the materialized word operator.
    let op = refined_operator(&word, &u, &partition).unwrap();
    let m = op.materialize().unwrap();
    let direct = m.matvec(psi.amps());
    for (x, y) in a.amps().iter().zip(&direct) {
        assert!((x - y).norm() <= 1e-10);
    }
    let adj = refined_apply(&word, &psi, &u, &partition, true, Schedule::Interleaved).unwrap();
    let direct_adj = m.matvec_adj(psi.amps());
    for (x, y) in adj.amps().iter().zip(&direct_adj) {
        assert!((x - y).norm() <= 1e-10);
    }

    // For eigenvectors the plain adjoint differs from the interleaved one
    // by a phase, so norms agree.
    let eig = eig_unitary(&u).unwrap();
    let state = eig.eigenstate(0);
    let ea = refined_apply(&word, &state, &u, &partition, true, Schedule::Interleaved).unwrap();
    let eb = refined_apply(&word, &state, &u, &partition, true, Schedule::Plain).unwrap();
    assert!((vnorm(ea.amps()) - vnorm(eb.amps())).abs() <= 1e-9);
}

#[test]
fn eigenvector_tables_reverse_and_marginalize_consistently() {
    let (_, u, partition, _) = standard_setup(64, 3, 0.1);
    let eig = eig_unitary(&u).unwrap();
    let psi = eig.eigenstate(0);

    // For eigenvectors the time-zero anchor is a pure phase, so the
    // cylinder table equals the reversed adjoint-mass table.
    let n = 3;
    let table = cylinder_measure(&psi, n, &u, &partition).unwrap();
    assert!(table.eigen_residual() <= 1e-8);
    let adj = adjoint_masses(&psi, n, &u, &partition).unwrap();
    for idx in 0..table.len() {
        let rev = table.word(idx).reversed().index(3);
        assert!(
            (table.mass(idx) - adj[rev]).abs() <= 1e-9,
            "word {idx}: cylinder {} vs reversed adjoint {}",
            table.mass(idx),
            adj[rev]
        );
    }
    let h_adj = crate::eup::entropy_of_masses(&adj);
    assert!((table.entropy() - h_adj).abs() <= 1e-9);

    // Marginalizing the deepest letter reproduces the shallower table.
    let psi5 = eig.eigenstate(5);
    let t4 = cylinder_measure(&psi5, 4, &u, &partition).unwrap();
    let t3 = cylinder_measure(&psi5, 3, &u, &partition).unwrap();
    assert!(t4.compatibility_defect(&t3).unwrap() <= 1e-10);
}

#[test]
fn synthetic_table_marginals_and_pairs() {
    // K = 2, 3 steps, masses (i+1)/136 over the 16 words.
    let masses: Vec<f64> = (0..16).map(|i| (i + 1) as f64 / 136.0).collect();
    let table = CylinderMeasure {
        alphabet: 2,
        steps: 3,
        masses,
        eigen_residual: 0.0,
    };
    assert!((table.total() - 1.0).abs() <= 1e-12);

    let last = table.marginal_last_letter().unwrap();
    assert_eq!(last.steps(), 2);
    for j in 0..8 {
        let expect = (2 * j + 10) as f64 / 136.0;
        assert!((last.mass(j) - expect).abs() <= 1e-12);
    }

    let shifted = table.marginal_first_letters(2).unwrap();
    assert_eq!(shifted.steps(), 1);
    for j in 0..4 {
        let expect = (16 * j + 10) as f64 / 136.0;
        assert!((shifted.mass(j) - expect).abs() <= 1e-12);
    }

    let pair = table.pair_table().unwrap();
    for r in 0..4 {
        let expect = (4 * r + 28) as f64 / 136.0;
        assert!((pair[r] - expect).abs() <= 1e-12);
    }

    // Compatibility against a perturbed shorter table picks up exactly the
    // perturbation.
    let mut short_masses = last.masses().to_vec();
    short_masses[2] += 0.01;
    let perturbed = CylinderMeasure {
        alphabet: 2,
        steps: 2,
        masses: short_masses,
        eigen_residual: 0.0,
    };
    let defect = table.compatibility_defect(&perturbed).unwrap();
    assert!((defect - 0.01).abs() <= 1e-12);

    assert!(matches!(
        table.marginal_first_letters(4),
        Err(Error::BadParameter { name: "drop", .. })
    ));
    let one_letter = CylinderMeasure {
        alphabet: 2,
        steps: 0,
        masses: vec![0.5, 0.5],
        eigen_residual: 0.0,
    };
    assert!(matches!(
        one_letter.marginal_last_letter(),
        Err(Error::BadParameter { name: "measure", .. })
    ));
    assert!(matches!(
        one_letter.pair_table(),
        Err(Error::BadParameter { name: "measure", .. })
    ));
    assert!(matches!(
        table.compatibility_defect(&one_letter),
        Err(Error::DimMismatch { .. })
    ));
}

#[test]
fn pressure_closed_forms() {
    let all = JacobianTable::from_realizability(2, vec![true; 4], 0.7, 7.0, 256).unwrap();

    // Point mass: zero entropy, pressures are the word's Jacobian logs.
    let mut masses = vec![0.0; 8];
    masses[5] = 1.0;
    let point = CylinderMeasure {
        alphabet: 2,
        steps: 2,
        masses,
        eigen_residual: 0.0,
    };
    let report = entropy_pressure(&point, Some(&all), Some(WeightKind::Alpha)).unwrap();
    assert!(report.entropy.abs() <= 1e-12);
    assert!((report.p_alpha + 1.4).abs() <= 1e-12);
    assert!((report.p_beta + 2.8).abs() <= 1e-12);
    assert!((report.pressure - report.p_alpha).abs() <= 1e-15);
    assert_eq!(report.retained.len(), 1);
    assert_eq!(report.retained[0].0.letters(), &[1, 0, 1]);

    // Uniform table: maximal entropy, uniform Jacobian shift.
    let uniform = CylinderMeasure {
        alphabet: 2,
        steps: 3,
        masses: vec![1.0 / 16.0; 16],
        eigen_residual: 0.0,
    };
    let report = entropy_pressure(&uniform, Some(&all), Some(WeightKind::Beta)).unwrap();
    let h = 4.0 * 2.0_f64.ln();
    assert!((report.entropy - h).abs() <= 1e-12);
    assert!((report.p_alpha - (h - 2.1)).abs() <= 1e-12);
    assert!((report.p_beta - (h - 4.2)).abs() <= 1e-12);
    assert!((report.pressure - report.p_beta).abs() <= 1e-15);

    // Without a Jacobian table the pressure collapses to the entropy.
    let plain = entropy_pressure(&uniform, None, None).unwrap();
    assert!((plain.pressure - h).abs() <= 1e-12);
    assert!((plain.p_alpha - h).abs() <= 1e-12);

    // Weight families: all-realizable words share one weight per depth.
    let alpha = make_weights(&all, 1, WeightKind::Alpha).unwrap();
    let beta = make_weights(&all, 1, WeightKind::Beta).unwrap();
    assert_eq!(alpha.len(), 4);
    for k in 0..4 {
        assert!((alpha.get(k) - 0.35_f64.exp()).abs() <= 1e-12);
        assert!((beta.get(k) - 0.7_f64.exp()).abs() <= 1e-12);
        assert!(alpha.get(k) >= 1.0);
    }
    assert!((beta.max() - 0.7_f64.exp()).abs() <= 1e-12);

    // A non-realizable step carries the penalty exponent instead.
    let mixed =
        JacobianTable::from_realizability(2, vec![true, false, true, true], 0.7, 7.0, 256)
            .unwrap();
    let beta = make_weights(&mixed, 1, WeightKind::Beta).unwrap();
    // Word (0, 1) sits at index 0 + 2*1 = 2.
    assert!((beta.get(2) - 7.0_f64.exp()).abs() <= 1e-9);
    assert!((beta.get(0) - 0.7_f64.exp()).abs() <= 1e-12);

    // Refusals: totals must be 1, weighted modes need a table, alphabets
    // must match.
    let lopsided = CylinderMeasure {
        alphabet: 2,
        steps: 0,
        masses: vec![0.5, 0.3],
        eigen_residual: 0.0,
    };
    assert!(matches!(
        entropy_pressure(&lopsided, None, None),
        Err(Error::BadParameter { name: "measure", .. })
    ));
    assert!(matches!(
        entropy_pressure(&uniform, None, Some(WeightKind::Alpha)),
        Err(Error::BadParameter { name: "jac", .. })
    ));
    let three = JacobianTable::from_realizability(3, vec![true; 9], 0.7, 7.0, 256).unwrap();
    assert!(matches!(
        entropy_pressure(&uniform, Some(&three), None),
        Err(Error::DimMismatch { .. })
    ));
}

#[test]
fn ehrenfest_depths_and_config() {
    let lambda = ClassicalCatMap::standard().lambda();
    for &(n, dp, expect) in &[
        (64usize, 0.0, 4usize),
        (128, 0.0, 5),
        (256, 0.0, 5),
        (512, 0.0, 6),
        (1024, 0.0, 6),
        (64, 0.2, 3),
        (128, 0.2, 4),
        (256, 0.2, 4),
        (512, 0.2, 4),
    ] {
        assert_eq!(
            ehrenfest_time(n, dp, lambda).unwrap(),
            expect,
            "N={n} delta'={dp}"
        );
    }
    assert_eq!(ehrenfest_time(64, 0.999999, lambda).unwrap(), 0);

    // Depth never shrinks as the dimension grows.
    let mut prev = 0;
    let mut n = 64;
    while n <= 4096 {
        let t = ehrenfest_time(n, 0.0, lambda).unwrap();
        assert!(t >= prev);
        prev = t;
        n *= 2;
    }

    assert!(matches!(
        ehrenfest_time(0, 0.0, lambda),
        Err(Error::BadParameter { name: "N", .. })
    ));
    assert!(matches!(
        ehrenfest_time(64, 1.0, lambda),
        Err(Error::BadParameter { name: "delta_prime", .. })
    ));
    assert!(matches!(
        ehrenfest_time(64, -0.1, lambda),
        Err(Error::BadParameter { name: "delta_prime", .. })
    ));
    assert!(matches!(
        ehrenfest_time(64, 0.0, 0.0),
        Err(Error::BadParameter { name: "lambda", .. })
    ));
    assert!(matches!(
        ehrenfest_time(64, 0.0, f64::NAN),
        Err(Error::BadParameter { name: "lambda", .. })
    ));

    let config = EhrenfestConfig::new(256, 0.2, lambda).unwrap();
    assert_eq!(config.dim(), 256);
    assert!((config.delta_prime() - 0.2).abs() <= 1e-15);
    assert!((config.lambda() - lambda).abs() <= 1e-15);
    assert_eq!(config.n_e(), 4);
    assert!((config.hbar() - 1.0 / (2.0 * PI * 256.0)).abs() <= 1e-18);
    assert!((config.log_hbar() + (2.0 * PI * 256.0).ln()).abs() <= 1e-12);
    assert_eq!(config.delta, 0.0);
    assert_eq!(config.c_delta, 0.0);
}

#[test]
fn refusal_paths_for_budgets_and_windows() {
    let lambda = ClassicalCatMap::standard().lambda();

    // Certificate: 3^7 = 2187 words make 4782969 raw pairs, over budget.
    let (_, u, partition, jac) = standard_setup(512, 3, 0.1);
    let config = EhrenfestConfig::new(512, 0.0, lambda).unwrap();
    match RefinedCertificate::build(&u, &partition, &jac, &config) {
        Err(Error::BudgetExceeded {
            depth,
            blocks,
            pairs,
            budget,
        }) => {
            assert_eq!(depth, 6);
            assert_eq!(blocks, 2187);
            assert_eq!(pairs, 4_782_969);
            assert_eq!(budget, PAIR_BUDGET);
        }
        other => panic!("expected BudgetExceeded, got {other:?}"),
    }

    // Decay scan: 5^10 pairs at the deepest level, over the scan budget.
    let (_, u_five, p_five, j_five) = standard_setup(64, 5, 0.05);
    match norm_decay_scan(&u_five, &p_five, &j_five, 4) {
        Err(Error::BudgetExceeded { depth, pairs, budget, .. }) => {
            assert_eq!(depth, 4);
            assert_eq!(pairs, 9_765_625);
            assert_eq!(budget, SCAN_PAIR_BUDGET);
        }
        other => panic!("expected BudgetExceeded, got {other:?}"),
    }

    // Depth gates: scans and split checks refuse past their horizons.
    let (_, u, p, j) = standard_setup(64, 3, 0.1);
    assert!(matches!(
        norm_decay_scan(&u, &p, &j, 5),
        Err(Error::BadParameter { name: "n_max", .. })
    ));

    let config = EhrenfestConfig::new(64, 0.0, lambda).unwrap();
    let psi = eig_unitary(&u).unwrap().eigenstate(0);
    assert!(matches!(
        subadditivity_check(&psi, &u, &p, &j, 1, 0, &config),
        Err(Error::BadParameter { name: "m", .. })
    ));
    assert!(matches!(
        subadditivity_check(&psi, &u, &p, &j, 3, 2, &config),
        Err(Error::BadParameter { name: "m", .. })
    ));

    assert!(matches!(
        shift_invariance_defect(&psi, &u, &p, 3, 2, lambda, 0.0),
        Err(Error::BadParameter { name: "n", .. })
    ));
    assert!(matches!(
        shift_invariance_defect(&psi, &u, &p, 1, 1, lambda, 1.0),
        Err(Error::BadParameter { name: "gamma", .. })
    ));
}

#[test]
fn certificate_on_small_standard_map() {
    let lambda = ClassicalCatMap::standard().lambda();
    let (_, u, partition, jac) = standard_setup(64, 3, 0.1);
    let config = EhrenfestConfig::new(64, 0.2, lambda).unwrap();
    assert_eq!(config.n_e(), 3);

    let cert = RefinedCertificate::build(&u, &partition, &jac, &config).unwrap();
    assert_eq!(cert.steps(), 3);
    assert_eq!(cert.dim(), 64);
    assert_eq!(cert.partition().len(), 81);
    assert!(cert.c() > 0.0);

    // Every transition of the standard map is realizable at K = 3, so the
    // weights are uniform at each depth.
    for a in 0..3 {
        for b in 0..3 {
            assert!(jac.is_realizable_step(a, b));
        }
    }
    assert!((cert.alpha().max() - (1.5 * lambda).exp()).abs() <= 1e-9);
    assert!((cert.beta().max() - (3.0 * lambda).exp()).abs() <= 1e-9);

    // Refined leaves agree with the interleaved word products.
    for &idx in &[0usize, 40, 80] {
        let word = SymbolWord::from_index(idx, 4, 3);
        let leaf = cert.partition().block(idx).materialize().unwrap();
        let direct = refined_operator(&word, &u, &partition)
            .unwrap()
            .materialize()
            .unwrap();
        assert!(mat_gap(&leaf, &direct) <= 1e-12, "leaf {idx} mismatch");
    }

    // The bound holds for the whole spectrum, and the reference line is
    // 2 log hbar.
    let eig = eig_unitary(&u).unwrap();
    let mut min_margin = f64::INFINITY;
    for i in 0..64 {
        let (result, rhs_paper) = cert.certify(&eig.eigenstate(i)).unwrap();
        assert!((rhs_paper + 2.0 * (2.0 * PI * 64.0).ln()).abs() <= 1e-12);
        assert_eq!(result.eps, 0.0);
        assert_eq!(result.n_terms, 81);
        assert!((result.lhs - (result.p_alpha + result.p_beta)).abs() <= 1e-12);
        assert!((result.margin - (result.lhs - result.rhs)).abs() <= 1e-12);
        min_margin = min_margin.min(result.margin);
    }
    assert!(
        min_margin >= -1e-9,
        "worst eigenstate margin {min_margin}"
    );

    // Non-eigenvectors are refused rather than certified.
    assert!(matches!(
        cert.certify(&random_state(64, 3, 0)),
        Err(Error::SpectralDefect { .. })
    ));
}

#[test]
fn certificate_prunes_and_certifies_projector_model() {
    // Identity propagator, four orthogonal projector blocks, and a
    // diagonal-only realizability table: every cross-block step is both
    // penalized and annihilating, so the constant and the certificate are
    // closed-form.
    let dim = 8;
    let u = OperatorHandle::Identity(dim);
    let blocks: Vec<OperatorHandle> = (0..4)
        .map(|k| {
            let mut d = vec![C64::new(0.0, 0.0); dim];
            d[2 * k] = C64::new(1.0, 0.0);
            d[2 * k + 1] = C64::new(1.0, 0.0);
            OperatorHandle::diagonal(d)
        })
        .collect();
    let partition = QuantumPartition::new(blocks).unwrap();

    let realizable: Vec<bool> = (0..16).map(|i| i / 4 == i % 4).collect();
    let jac = JacobianTable::from_realizability(4, realizable, 0.9, 9.0, 256).unwrap();
    let config = EhrenfestConfig::new(dim, 0.5, 0.9).unwrap();
    assert_eq!(config.n_e(), 2);

    let cert = RefinedCertificate::build(&u, &partition, &jac, &config).unwrap();
    // Only constant words survive; their Jacobian is e^{-2*0.9}, so
    // c = alpha * beta * 1 = e^{0.9} e^{1.8}.
    assert!((cert.c() - 2.7_f64.exp()).abs() <= 1e-8 * 2.7_f64.exp());

    let (result, rhs_paper) = cert.certify(&basis_state(dim, 0)).unwrap();
    assert!((result.p_alpha + 1.8).abs() <= 1e-9);
    assert!((result.p_beta + 3.6).abs() <= 1e-9);
    assert!((result.rhs + 5.4).abs() <= 1e-7);
    assert!(result.margin.abs() <= 1e-7);
    assert_eq!(result.n_terms, 64);
    assert!((rhs_paper + 2.0 * (2.0 * PI * 8.0).ln()).abs() <= 1e-12);
}

#[test]
fn subadditivity_bounded_for_eigenstates_and_classical_measures() {
    let map = ClassicalCatMap::standard();
    let lambda = map.lambda();
    let (_, u, partition, jac) = standard_setup(64, 3, 0.1);
    let config = EhrenfestConfig::new(64, 0.0, lambda).unwrap();
    assert_eq!(config.n_e(), 4);

    let eig = eig_unitary(&u).unwrap();
    let splits = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (1, 3)];
    for i in 0..5 {
        let psi = eig.eigenstate(i);
        for &(n_o, m) in &splits {
            let report = subadditivity_check(&psi, &u, &partition, &jac, n_o, m, &config).unwrap();
            assert!((report.bound - 3.0 * lambda).abs() <= 1e-12);
            assert!(
                report.defect <= report.bound + 0.1,
                "eigenstate {i} split ({n_o}, {m}): defect {}",
                report.defect
            );
            assert!(
                (report.defect - (report.p_joint - report.p_head - report.p_tail)).abs() <= 1e-12
            );
        }
    }

    // The classical analogue on the midpoint lattice is exactly invariant
    // under the map, so the same splits obey the bound with no slack.
    let spec = ClassicalMeasureSpec::Lebesgue { resolution: 243 };
    let stats = classical_cylinder_stats(&map, 3, 4, &spec).unwrap();
    for &(n_o, m) in &splits {
        let p_joint = classical_pressure(&stats, n_o + m, &jac, WeightKind::Alpha).unwrap();
        let p_head = classical_pressure(&stats, n_o, &jac, WeightKind::Alpha).unwrap();
        let p_tail = classical_pressure(&stats, m - 1, &jac, WeightKind::Alpha).unwrap();
        let defect = p_joint - p_head - p_tail;
        assert!(
            defect <= 3.0 * lambda + 1e-9,
            "classical split ({n_o}, {m}): defect {defect}"
        );
    }
}

#[test]
fn shift_invariance_exact_cases_and_gates() {
    // Identity propagator: the cylinder tables are point masses at
    // constant words, which are exactly shift invariant.
    let u = OperatorHandle::Identity(8);
    let partition = QuantumPartition::basis_projectors(8);
    let psi = basis_state(8, 3);
    let report = shift_invariance_defect(&psi, &u, &partition, 1, 1, 1.3, 0.0).unwrap();
    assert_eq!(report.egorov_time, 1);
    assert!(report.defect <= 1e-15);
    assert!(matches!(
        shift_invariance_defect(&psi, &u, &partition, 2, 1, 1.3, 0.0),
        Err(Error::BadParameter { name: "n", .. })
    ));

    // The classical midpoint lattice is exactly invariant, so dropping
    // leading letters reproduces the shallower table to rounding.
    let map = ClassicalCatMap::standard();
    let spec = ClassicalMeasureSpec::Lebesgue { resolution: 81 };
    let long = classical_cylinder_table(&map, 3, 3, &spec).unwrap();
    let short = classical_cylinder_table(&map, 3, 2, &spec).unwrap();
    let shifted = long.marginal_first_letters(1).unwrap();
    for (a, b) in shifted.masses().iter().zip(short.masses()) {
        assert!((a - b).abs() <= 1e-12);
    }

    // Eigenstates of the quantized map are nearly shift invariant inside
    // the commutation window.
    let (_, u, partition, _) = standard_setup(64, 3, 0.1);
    let psi = eig_unitary(&u).unwrap().eigenstate(0);
    let report =
        shift_invariance_defect(&psi, &u, &partition, 1, 1, map.lambda(), 0.0).unwrap();
    assert_eq!(report.egorov_time, 2);
    assert!(
        report.defect <= 0.1,
        "eigenstate shift defect {}",
        report.defect
    );
}

#[test]
fn norm_decay_closed_forms_and_fit() {
    // Depth zero: every block overlaps itself on its plateau, so the max
    // norm is 1, attained first at the lexicographically smallest pair.
    let (_, u, partition, jac) = standard_setup(64, 4, 0.1);
    let scan = norm_decay_scan(&u, &partition, &jac, 0).unwrap();
    assert_eq!(scan.rows.len(), 1);
    let row = &scan.rows[0];
    assert_eq!(row.n, 0);
    assert!((row.max_norm - 1.0).abs() <= 1e-12);
    assert_eq!(row.word_in.letters(), &[0]);
    assert_eq!(row.word_out.letters(), &[0]);
    assert!((row.shape - 2.0 * PI * 64.0).abs() <= 1e-9 * 2.0 * PI * 64.0);
    assert!((row.bound - row.max_norm).abs() <= 1e-12);

    // Far strips are disjoint, so their zero-step pair norm vanishes.
    let disjoint = OperatorHandle::chain(vec![
        partition.block(2).clone(),
        partition.block(0).clone(),
    ])
    .unwrap();
    assert!(operator_norm(&disjoint).unwrap() <= 1e-12);

    // A deeper scan: one constant dominates every level and the max norm
    // is antitone past the first refinement.
    let (_, u3, p3, j3) = standard_setup(64, 3, 0.1);
    let scan = norm_decay_scan(&u3, &p3, &j3, 3).unwrap();
    assert_eq!(scan.rows.len(), 4);
    assert!(scan.c_fit > 0.0);
    for (n, row) in scan.rows.iter().enumerate() {
        assert_eq!(row.n, n);
        assert!(row.bound >= row.max_norm - 1e-12);
        let expect_shape = 2.0 * PI * 64.0
            * (0.5 * j3.log_word_jacobian(row.word_in.letters())
                + j3.log_word_jacobian(row.word_out.letters()))
            .exp();
        assert!((row.shape - expect_shape).abs() <= 1e-9 * expect_shape);
    }
    for n in 2..scan.rows.len() {
        assert!(
            scan.rows[n].max_norm <= 1.05 * scan.rows[n - 1].max_norm,
            "level {n}: {} vs {}",
            scan.rows[n].max_norm,
            scan.rows[n - 1].max_norm
        );
    }

    let csv = scan.to_csv();
    assert!(csv.starts_with("n,value,bound\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn egorov_scan_matches_exact_transport() {
    // Weyl translations transport exactly under the quantized map, so the
    // measured commutator norms match the closed form at every time.
    let scan = egorov_commutator_scan(64, (1, 0), (0, 1), 8, 0.5).unwrap();
    assert_eq!(scan.ehrenfest_steps, 4);
    assert_eq!(scan.egorov_time, 1);
    assert_eq!(scan.rows.len(), 9);
    for row in &scan.rows {
        assert!(
            (row.norm - row.prediction).abs() <= 1e-6,
            "t={}: norm {} vs prediction {}",
            row.t,
            row.norm,
            row.prediction
        );
    }
    let base = weyl_commutator_norm(64, (1, 0), (0, 1));
    assert!((scan.rows[0].norm - base).abs() <= 1e-9);
    assert!((scan.rows[0].prediction - 2.0 * (PI / 64.0).sin()).abs() <= 1e-12);

    let csv = scan.to_csv();
    assert!(csv.starts_with("t,norm,prediction\n"));
    assert_eq!(csv.lines().count(), 10);

    // Equal translations commute at t = 0 but not once transported: the
    // wedge of A^{-1}v with A v is already nonzero.
    let same = egorov_commutator_scan(64, (1, 0), (1, 0), 4, 0.0).unwrap();
    assert!(same.rows[0].norm <= 1e-10);
    assert!(same.rows[0].prediction <= 1e-12);
    let expect_t1 = 2.0 * (12.0 * PI / 64.0).sin().abs();
    assert!((same.rows[1].prediction - expect_t1).abs() <= 1e-12);
    assert!((same.rows[1].norm - expect_t1).abs() <= 1e-6);
    assert!(same.rows[1].norm > 1.0);

    // The closed form stays bounded arbitrarily deep: components reduce
    // modulo 2N, so nothing overflows.
    let far = translation_commutator_prediction(512, (3, 3), (3, 3), 18);
    assert!((0.0..=2.0).contains(&far));

    assert!(matches!(
        egorov_commutator_scan(64, (4, 0), (0, 1), 2, 0.0),
        Err(Error::BadParameter { name: "v", .. })
    ));
    assert!(matches!(
        egorov_commutator_scan(64, (1, 0), (0, 1), 2, 1.0),
        Err(Error::BadParameter { name: "gamma", .. })
    ));
    assert!(matches!(
        egorov_commutator_scan(64, (1, 0), (0, 1), 13, 0.0),
        Err(Error::BadParameter { name: "t_max", .. })
    ));
}

#[test]
fn scar_quasimode_identities() {
    let map = ClassicalCatMap::standard();
    let u = quantize_cat(&map, 64).unwrap();
    let phi = coherent_state(64, (0.0, 0.0), 1.0).unwrap();

    // A one-step window is the coherent state itself, and the defect is
    // the direct residual against the chosen phase.
    let q = scar_quasimode(&u, &map, 1, 0.3, (0.0, 0.0)).unwrap();
    assert_eq!(q.window, 1);
    assert!((q.raw_norm - 1.0).abs() <= 1e-12);
    let overlap = vdot(q.state.amps(), phi.amps()).norm();
    assert!((overlap - 1.0).abs() <= 1e-12);
    let u_phi = u.apply(q.state.amps()).unwrap();
    let phase = C64::from_polar(1.0, 0.3);
    let direct: f64 = u_phi
        .iter()
        .zip(q.state.amps())
        .map(|(a, &b)| (a - phase * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!((q.defect - direct).abs() <= 1e-12);

    // Tuned phase: the Gram scan and the assembled state agree on the raw
    // norm, and the two-boundary-term bound holds.
    let (theta, raw) = tune_scar_phase(&u, &map, 5, (0.0, 0.0), 256).unwrap();
    let q = scar_quasimode(&u, &map, 5, theta, (0.0, 0.0)).unwrap();
    assert!((q.raw_norm - raw).abs() <= 1e-9);
    assert!(q.defect <= 2.0 / q.raw_norm + 1e-9);
    assert!((vnorm(q.state.amps()) - 1.0).abs() <= 1e-12);

    // Componentwise against a hand-rolled centered window sum.
    let mut terms = Vec::new();
    let mut v = phi.amps().to_vec();
    for _ in 0..2 {
        v = u.apply_adjoint(&v).unwrap();
        terms.insert(0, v.clone());
    }
    terms.push(phi.amps().to_vec());
    let mut v = phi.amps().to_vec();
    for _ in 0..2 {
        v = u.apply(&v).unwrap();
        terms.push(v.clone());
    }
    let mut sum = vec![C64::new(0.0, 0.0); 64];
    for (j, term) in terms.iter().enumerate() {
        let o = j as f64 - 2.0;
        let phase = C64::from_polar(1.0, -theta * o);
        for (s, &x) in sum.iter_mut().zip(term) {
            *s += phase * x;
        }
    }
    let manual = StateVector::normalized(sum).unwrap();
    for (a, b) in manual.amps().iter().zip(q.state.amps()) {
        assert!((a - b).norm() <= 1e-9);
    }

    // Degenerate phase: with the identity propagator a two-term window at
    // theta = pi cancels exactly.
    let id = OperatorHandle::Identity(16);
    assert!(matches!(
        scar_quasimode(&id, &map, 2, PI, (0.0, 0.0)),
        Err(Error::BadParameter { name: "theta", .. })
    ));
    let (theta0, raw0) = tune_scar_phase(&id, &map, 2, (0.0, 0.0), 4).unwrap();
    assert_eq!(theta0, 0.0);
    assert!((raw0 - 2.0).abs() <= 1e-12);

    assert!(matches!(
        scar_quasimode(&u, &map, 3, 0.1, (0.3, 0.2)),
        Err(Error::BadParameter { name: "center", .. })
    ));
    assert!(matches!(
        scar_quasimode(&u, &map, 0, 0.1, (0.0, 0.0)),
        Err(Error::BadParameter { name: "window", .. })
    ));
    assert!(matches!(
        tune_scar_phase(&u, &map, 2, (0.0, 0.0), 0),
        Err(Error::BadParameter { name: "grid", .. })
    ));
}

#[test]
fn classical_measures_and_rates() {
    let map = ClassicalCatMap::standard();
    let lambda = map.lambda();
    let spec3 = StripPartitionSpec::new(3, 0.1).unwrap();
    let jac = coarse_jacobian_table(&map, &spec3, 10.0 * lambda, 256).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert!(jac.is_realizable_step(a, b));
        }
    }

    // Fixed point: zero entropy at every depth, Jacobian term lambda.
    let dirac = ClassicalMeasureSpec::PeriodicOrbit {
        point: (0.0, 0.0),
        max_period: 5,
    };
    let report = entropy_rate(&EntropySource::Classical { map: &map, spec: &dirac }, 3, &jac)
        .unwrap();
    assert!(report.rate.abs() <= 1e-12);
    assert!(report.increment.abs() <= 1e-12);
    assert!(report.ruelle_ok);
    assert!((report.jacobian_term - lambda).abs() <= 1e-9);

    // Period-3 orbit: letters (0, 1, 1), so depth zero sees a binary
    // split and every deeper level exactly three words.
    let orbit = ClassicalMeasureSpec::PeriodicOrbit {
        point: (0.2, 0.0),
        max_period: 10,
    };
    let stats = classical_cylinder_stats(&map, 3, 2, &orbit).unwrap();
    assert_eq!(stats.alphabet(), 3);
    assert_eq!(stats.steps(), 2);
    let h0_expect = 3.0_f64.ln() - (2.0 / 3.0) * 2.0_f64.ln();
    assert!((stats.entropy(0) - h0_expect).abs() <= 1e-12);
    assert!((stats.entropy(1) - 3.0_f64.ln()).abs() <= 1e-12);
    assert!((stats.entropy(2) - 3.0_f64.ln()).abs() <= 1e-12);

    // A point with a huge denominator never closes up.
    let wild = ClassicalMeasureSpec::PeriodicOrbit {
        point: (0.123456789, 0.987654321),
        max_period: 30,
    };
    assert!(matches!(
        classical_cylinder_stats(&map, 3, 2, &wild),
        Err(Error::BadParameter { name: "point", .. })
    ));
    assert!(matches!(
        classical_cylinder_stats(
            &map,
            3,
            2,
            &ClassicalMeasureSpec::Lebesgue { resolution: 0 }
        ),
        Err(Error::BadParameter { name: "resolution", .. })
    ));

    // Lebesgue at one step: the pair masses are exactly 1/9 because the
    // midpoint lattice pushes forward onto itself.
    let leb = ClassicalMeasureSpec::Lebesgue { resolution: 243 };
    let pairs = classical_cylinder_table(&map, 3, 1, &leb).unwrap();
    for idx in 0..9 {
        assert!((pairs.mass(idx) - 1.0 / 9.0).abs() <= 1e-12);
    }
    assert!((pairs.total() - 1.0).abs() <= 1e-12);

    // Stats and the dense table agree where both exist.
    let stats = classical_cylinder_stats(&map, 3, 2, &leb).unwrap();
    let dense = classical_cylinder_table(&map, 3, 2, &leb).unwrap();
    assert!((stats.entropy(0) - 3.0_f64.ln()).abs() <= 1e-12);
    assert!((stats.entropy(2) - dense.entropy()).abs() <= 1e-9);

    // All transitions realizable: the pressure is the entropy shifted by
    // t Jacobian steps.
    for t in 0..=2 {
        let p_a = classical_pressure(&stats, t, &jac, WeightKind::Alpha).unwrap();
        let p_b = classical_pressure(&stats, t, &jac, WeightKind::Beta).unwrap();
        assert!((p_a - (stats.entropy(t) - t as f64 * lambda)).abs() <= 1e-9);
        assert!((p_b - (stats.entropy(t) - 2.0 * t as f64 * lambda)).abs() <= 1e-9);
    }
    assert!(matches!(
        classical_pressure(&stats, 3, &jac, WeightKind::Alpha),
        Err(Error::BadParameter { name: "t", .. })
    ));
    let spec2 = StripPartitionSpec::new(2, 0.2).unwrap();
    let jac2 = coarse_jacobian_table(&map, &spec2, 10.0 * lambda, 256).unwrap();
    assert!(matches!(
        classical_pressure(&stats, 1, &jac2, WeightKind::Alpha),
        Err(Error::DimMismatch { .. })
    ));

    // The one-step Lebesgue increment is exactly log 3: conditionally on
    // any current strip the next letter is uniform.
    let report = entropy_rate(&EntropySource::Classical { map: &map, spec: &leb }, 1, &jac)
        .unwrap();
    assert!((report.increment - 3.0_f64.ln()).abs() <= 1e-12);
    assert!((report.jacobian_term - lambda).abs() <= 1e-12);
    assert!(report.ruelle_ok);

    // Quantum source: eigenstate tables feed the same report shape.
    let (_, u, partition, _) = standard_setup(64, 3, 0.1);
    let psi = eig_unitary(&u).unwrap().eigenstate(0);
    let report = entropy_rate(
        &EntropySource::Quantum {
            psi: &psi,
            u: &u,
            partition: &partition,
        },
        2,
        &jac,
    )
    .unwrap();
    assert_eq!(report.n_o, 2);
    assert!(report.entropy > 0.0);
    assert!((report.jacobian_term - lambda).abs() <= 1e-9);

    assert!(matches!(
        entropy_rate(
            &EntropySource::Quantum {
                psi: &psi,
                u: &u,
                partition: &partition,
            },
            2,
            &jac2,
        ),
        Err(Error::DimMismatch { .. })
    ));
    assert!(matches!(
        entropy_rate(&EntropySource::Classical { map: &map, spec: &leb }, 0, &jac),
        Err(Error::BadParameter { name: "n_o", .. })
    ));
}

#[test]
fn csv_keeps_only_masses_above_floor() {
    let table = CylinderMeasure {
        alphabet: 2,
        steps: 1,
        masses: vec![1.0 - 1e-13, 1e-13, 0.0, 0.0],
        eigen_residual: 0.0,
    };
    let csv = table.to_csv();
    assert!(csv.starts_with("word,mass\n"));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("00,"));

    let report = entropy_pressure(&table, None, None).unwrap();
    assert_eq!(report.retained.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn prop_word_index_roundtrip(k in 2usize..6, len in 1usize..6, raw in 0usize..10_000) {
        let idx = raw % k.pow(len as u32);
        let word = SymbolWord::from_index(idx, len, k);
        prop_assert_eq!(word.index(k), idx);
        prop_assert_eq!(word.reversed().reversed(), word);
    }

    #[test]
    fn prop_marginals_preserve_total(k in 2usize..4, n in 1usize..4, seed in 0u64..500) {
        use rand::Rng;
        let mut rng = crate::rng::rng_for(seed, crate::rng::Task::RandomState { index: 99 });
        let len = k.pow(n as u32 + 1);
        let mut masses: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        let table = CylinderMeasure {
            alphabet: k,
            steps: n,
            masses,
            eigen_residual: 0.0,
        };
        let last = table.marginal_last_letter().unwrap();
        prop_assert!((last.total() - 1.0).abs() <= 1e-9);
        for drop in 0..=n {
            let shifted = table.marginal_first_letters(drop).unwrap();
            prop_assert!((shifted.total() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(shifted.steps(), n - drop);
        }
        let pair: f64 = table.pair_table().unwrap().iter().sum();
        prop_assert!((pair - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn prop_circ_gap_bounded_and_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let g = circ_gap(a, b);
        prop_assert!((0.0..=0.5).contains(&g));
        prop_assert!((g - circ_gap(b, a)).abs() <= 1e-12);
    }
}
