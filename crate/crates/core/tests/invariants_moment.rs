mod oracle;

use proptest::prelude::*;
use redmoment::linalg;
use redmoment::moment::{
    build_m_partial_transposed, build_m_raw, homogeneous_block, isotropic_threshold_3rd, mes_lambda_min,
    ppt_threshold, purity_threshold, threshold_scan, ScanVariant, Verdict,
};
use redmoment::testkit::{jacobi_eigenvalues, GeneratorKind, StateGenerator};
use redmoment::{build_mbar, compute_invariants, isotropic_invariants, make_state, witness, DensityMatrix, FamilyParams};

fn ginibre(da: usize, db: usize, rank: usize, seed: u64) -> DensityMatrix {
    StateGenerator::new(GeneratorKind::MixedGinibre { rank }, da, db, seed).next_state()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_match_index_oracle(da in 2usize..=3, db in 2usize..=3, rank in 1usize..=9, seed in any::<u64>()) {
        let rho = ginibre(da, db, rank.min(da * db), seed);
        let got = compute_invariants(&rho);
        let want = oracle::invariants(rho.entries(), da, db);
        let mut arr = got.to_array().to_vec();
        arr.push(got.tr_rho3.unwrap());
        for (g, w) in arr.iter().zip(want) {
            prop_assert!((g - w).abs() < 1e-13, "{g} vs {w}");
        }
    }

    #[test]
    fn measurable_invariants_survive_partial_transpose(da in 2usize..=3, db in 2usize..=3, seed in any::<u64>()) {
        let rho = ginibre(da, db, 2, seed);
        let x = compute_invariants(&rho).to_array();
        let xt = compute_invariants(&rho.partial_transpose()).to_array();
        for k in 0..9 {
            prop_assert!((x[k] - xt[k]).abs() < 1e-12, "x{} differs", k + 1);
        }
    }

    #[test]
    fn local_moments_match_eigenvalues(da in 2usize..=4, db in 2usize..=4, seed in any::<u64>()) {
        let rho = ginibre(da, db, da * db, seed);
        for sigma in [rho.marginal_a(), rho.marginal_b()] {
            let ev = linalg::spectrum(sigma.entries()).unwrap();
            for k in 1..=4u32 {
                let want: f64 = ev.iter().map(|l| l.powi(k as i32)).sum();
                prop_assert!((sigma.moment(k) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn only_last_entry_depends_on_partial_transpose(da in 2usize..=3, db in 2usize..=3, seed in any::<u64>()) {
        let rho = ginibre(da, db, 3, seed);
        let pt = rho.partial_transpose();
        let m = build_m_raw(&compute_invariants(&rho), db).unwrap().entries;
        let mt = build_m_raw(&compute_invariants(&pt), db).unwrap().entries;
        let via_xs = build_m_partial_transposed(&compute_invariants(&rho), db).unwrap().entries;
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((mt[(i, j)] - via_xs[(i, j)]).abs() < 1e-12);
                if (i, j) != (3, 3) {
                    prop_assert!((m[(i, j)] - mt[(i, j)]).abs() < 1e-10);
                }
            }
        }
        let avg = (&m + &mt) * 0.5;
        let mbar = build_mbar(&compute_invariants(&rho), db).unwrap().entries;
        prop_assert!((avg - mbar).abs().max() < 1e-12);
    }

    #[test]
    fn mbar_matches_entrywise_oracle(da in 2usize..=3, db in 2usize..=4, seed in any::<u64>()) {
        let rho = ginibre(da, db, 2, seed);
        let x = oracle::invariants(rho.entries(), da, db);
        let want = oracle::mbar(&x, db);
        let got = build_mbar(&compute_invariants(&rho), db).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((got.entries[(i, j)] - want[i][j]).abs() < 1e-12);
            }
        }
        let mut ev = got.eigenvalues();
        let mut jac = jacobi_eigenvalues(&got.entries);
        ev.sort_by(f64::total_cmp);
        jac.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(jac) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_block_violation_implies_full_violation(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
        let rho = ginibre(da, db, 1 + (seed % 3) as usize, seed);
        let m = build_mbar(&compute_invariants(&rho), db).unwrap();
        let h = homogeneous_block(&m).unwrap().lambda_min();
        prop_assert!(m.lambda_min() <= h + 1e-12);
    }
}

#[test]
fn isotropic_invariants_closed_form_grid() {
    for d in 2..=4 {
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let rho = make_state(&FamilyParams::Isotropic { d, p }).unwrap();
            let got = compute_invariants(&rho);
            let want = isotropic_invariants(d, p).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-12, "d={d} p={p}");
            assert!((got.tr_rho3.unwrap() - want.tr_rho3.unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn invariant_examples() {
    let mes = compute_invariants(&make_state(&FamilyParams::MaxEntangled { d: 2 }).unwrap()).to_array();
    let want = [0.5, 0.25, 0.5, 0.25, 1.0, 0.5, 0.25, 0.5, 0.625];
    for k in 0..9 {
        assert!((mes[k] - want[k]).abs() < 1e-14);
    }
    let mixed = compute_invariants(&make_state(&FamilyParams::MaximallyMixed { d_a: 2, d_b: 2 }).unwrap()).to_array();
    let want = [0.5, 0.25, 0.5, 0.25, 0.25, 0.125, 0.25, 0.125, 0.0625];
    for k in 0..9 {
        assert!((mixed[k] - want[k]).abs() < 1e-14);
    }
}

#[test]
fn mbar_examples() {
    let x = compute_invariants(&make_state(&FamilyParams::MaxEntangled { d: 2 }).unwrap());
    let m = build_mbar(&x, 2).unwrap();
    let want = [[1.0, 0.5, 0.5, -0.5], [0.5, 0.25, 0.25, -0.25], [0.5, 0.25, 0.25, -0.25], [-0.5, -0.25, -0.25, -0.125]];
    for i in 0..4 {
        for j in 0..4 {
            assert!((m.entries[(i, j)] - want[i][j]).abs() < 1e-14);
        }
    }
    assert!((build_m_raw(&x, 2).unwrap().entries[(3, 3)] + 0.5).abs() < 1e-14);

    let h = homogeneous_block(&m).unwrap();
    let want = [[0.25, 0.25, -0.25], [0.25, 0.25, -0.25], [-0.25, -0.25, -0.125]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((h.entries[(i, j)] - want[i][j]).abs() < 1e-14);
        }
    }

    let product = compute_invariants(&make_state(&FamilyParams::ProductPure { d_a: 2, d_b: 3 }).unwrap());
    let m = build_mbar(&product, 3).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i < 2 && j < 2 { 2.0 } else { 0.0 };
            assert!((m.entries[(i, j)] - want).abs() < 1e-14);
        }
    }
    assert!(m.lambda_min() > -1e-14);
}

#[test]
fn mes_witness_and_closed_form() {
    for d in 2..=8 {
        let w = witness(&make_state(&FamilyParams::MaxEntangled { d }).unwrap(), None);
        assert!((w.e4 - mes_lambda_min(d)).abs() < 1e-9, "d={d}");
        assert_eq!(w.verdict, Verdict::EntanglementCertified);
    }
    assert!((mes_lambda_min(2) - (11.0 - 265f64.sqrt()) / 16.0).abs() < 1e-15);
    assert!((mes_lambda_min(2) + 0.329926).abs() < 5e-7);
    for d in [8, 16, 32, 64, 1024] {
        assert!((mes_lambda_min(d) + 0.5).abs() <= 1.0 / d as f64);
    }
    let mixed = witness(&make_state(&FamilyParams::MaximallyMixed { d_a: 2, d_b: 2 }).unwrap(), None);
    assert!(mixed.e4.abs() < 1e-14);
    assert_eq!(mixed.verdict, Verdict::Inconclusive);
}

#[test]
fn separable_states_are_never_flagged() {
    for (da, db) in [(2, 2), (2, 3), (3, 3)] {
        for rho in StateGenerator::new(GeneratorKind::SeparableMixture, da, db, 77).take(60) {
            let x = compute_invariants(&rho);
            assert!(build_mbar(&x, db).unwrap().lambda_min() >= -1e-9);
            assert!(build_m_raw(&x, db).unwrap().lambda_min() >= -1e-9);
        }
    }
}

#[test]
fn isotropic_sign_follows_quadratic() {
    for d in 2..=6usize {
        let df = d as f64;
        let q = |p: f64| 2.0 * (df + 1.0) * p * p + (df * df - 4.0) * p - 2.0 * (df - 1.0);
        let root = isotropic_threshold_3rd(d);
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            if (p - root).abs() < 1e-6 {
                continue;
            }
            let e4 = witness(&make_state(&FamilyParams::Isotropic { d, p }).unwrap(), None).e4;
            if q(p) > 0.0 {
                assert!(e4 < 0.0, "d={d} p={p} e4={e4}");
            } else {
                assert!(e4 >= -1e-12, "d={d} p={p} e4={e4}");
            }
        }
    }
}

#[test]
fn isotropic_thresholds() {
    assert!((threshold_scan(&FamilyParams::Isotropic { d: 3, p: 0.0 }, ScanVariant::Affine4).unwrap() - 0.4606).abs() < 1e-4);
    for d in 2..=6 {
        let scan = threshold_scan(&FamilyParams::Isotropic { d, p: 0.0 }, ScanVariant::Affine4).unwrap();
        assert!((scan - isotropic_threshold_3rd(d)).abs() < 1e-8, "d={d}");
    }
    assert!((isotropic_threshold_3rd(2) - 3f64.sqrt() / 3.0).abs() < 1e-12);
    for d in 2..=64 {
        let t = isotropic_threshold_3rd(d);
        assert!(ppt_threshold(d) < t && t < purity_threshold(d), "d={d}");
    }
}

fn swapped_homogeneous_threshold(x: f64) -> f64 {
    let neg = |p: f64| {
        let rho = make_state(&FamilyParams::BiasedTwoQubit { x, p }).unwrap().swap_subsystems();
        let m = build_mbar(&compute_invariants(&rho), 2).unwrap();
        homogeneous_block(&m).unwrap().lambda_min() < -1e-12
    };
    let mut hi = (1..=200).map(|k| k as f64 / 200.0).find(|&p| neg(p)).unwrap();
    let mut lo = hi - 1.0 / 200.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if neg(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn biased_family_thresholds() {
    let hom = |x: f64| threshold_scan(&FamilyParams::BiasedTwoQubit { x, p: 0.0 }, ScanVariant::Homogeneous3).unwrap();
    for k in 1..=9 {
        let x = k as f64 / 10.0;
        let aff = threshold_scan(&FamilyParams::BiasedTwoQubit { x, p: 0.0 }, ScanVariant::Affine4).unwrap();
        assert!((aff - 0.5).abs() < 1e-6, "x={x} p_aff={aff}");
    }
    assert!((hom(0.5) - 0.608).abs() < 5e-3);
    for x in [0.1, 0.2, 0.3] {
        assert!((hom(x) - hom(1.0 - x)).abs() > 1e-3, "x={x}");
        assert!((swapped_homogeneous_threshold(x) - hom(1.0 - x)).abs() < 1e-8);
    }
}

#[test]
fn eigenvalue_perturbation_bound() {
    for seed in 0..50u64 {
        let r1 = ginibre(2, 3, 2, seed);
        let r2 = ginibre(2, 3, 2, seed + 1000);
        let m1 = build_mbar(&compute_invariants(&r1), 3).unwrap();
        let m2 = build_mbar(&compute_invariants(&r2), 3).unwrap();
        let gap = (m1.lambda_min() - m2.lambda_min()).abs();
        assert!(gap <= linalg::op_norm(&(&m1.entries - &m2.entries)) + 1e-12);
        assert!(gap <= linalg::frobenius(&(&m1.entries - &m2.entries)) + 1e-12);
    }
}
