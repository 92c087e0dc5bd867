mod oracle;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redmoment::inversion::{
    build_a_b, build_w, free_coordinates, get_maps, load_maps, qubit_identities, svec, unsvec, InversionMaps,
};
use redmoment::linalg::{self, RMatrix};
use redmoment::protocol::{expected_correlators, run_protocol, CorrelatorVector, PatternClass, ProtocolConfig, NUM_CLASSES};
use redmoment::testkit::{GeneratorKind, StateGenerator};
use redmoment::{build_mbar, compute_invariants, make_state, witness, DensityMatrix, Execution, FamilyParams};

const PAIRS: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

fn maps(da: usize, db: usize) -> Arc<InversionMaps> {
    get_maps(da, db, None, Execution::Parallel).unwrap()
}

/// Held-out states: seeds far from the regression stream, mixed ranks.
fn held_out(da: usize, db: usize, count: usize) -> Vec<DensityMatrix> {
    (0..count)
        .map(|i| {
            let rank = 1 + i % (da * db);
            StateGenerator::new(GeneratorKind::MixedGinibre { rank }, da, db, 0xD00D_0000 + i as u64).next_state()
        })
        .collect()
}

#[test]
fn qubit_identities_hold_on_random_states() {
    for (da, db) in [(2, 2), (2, 3), (3, 2), (2, 4)] {
        let ids = qubit_identities(da, db);
        assert_eq!(ids.len(), 3 * (usize::from(da == 2) + usize::from(db == 2)));
        for rho in held_out(da, db, 30) {
            let x = oracle::invariants(rho.entries(), da, db);
            for (g, g0) in &ids {
                let v: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + g0;
                assert!(v.abs() < 1e-12, "{da}x{db}: identity residual {v}");
            }
        }
    }
    assert!(qubit_identities(3, 3).is_empty());
    assert_eq!(free_coordinates(3, 3).len(), 9);
    assert_eq!(free_coordinates(2, 2).len(), 4);
    assert_eq!(free_coordinates(2, 3).len(), 6);
}

#[test]
fn forward_map_reproduces_twirl_on_held_out_states() {
    for (da, db) in PAIRS {
        let fwd = build_w(da, db, Execution::Parallel).unwrap();
        assert!(fwd.residual <= 1e-9, "{da}x{db} residual {}", fwd.residual);
        for rho in held_out(da, db, 50) {
            let pred = fwd.apply(&compute_invariants(&rho));
            let exact = expected_correlators(&rho).unwrap();
            for k in 0..NUM_CLASSES {
                assert!((pred[k] - exact.y[k]).abs() < 1e-9, "{da}x{db} class {k}");
            }
        }
        for col in 0..9 {
            assert!(fwd.w.column(col).sum().abs() < 1e-10);
        }
        assert!((fwd.w0.sum() - 1.0).abs() < 1e-10);
        for class in PatternClass::ALL {
            let (need_a, need_b) = class.needs_distinct();
            if (need_a && da == 2) || (need_b && db == 2) {
                let row = class.index();
                assert!(fwd.w.row(row).amax() < 1e-12 && fwd.w0[row].abs() < 1e-12, "{class:?}");
            }
        }
    }
}

#[test]
fn reconstruction_round_trip_and_identifiability() {
    let expected_rank = [4, 6, 6, 9];
    for ((da, db), rank) in PAIRS.into_iter().zip(expected_rank) {
        let m = maps(da, db);
        assert_eq!(m.rank, rank, "{da}x{db}");
        for rho in held_out(da, db, 40) {
            let x = compute_invariants(&rho);
            let y = expected_correlators(&rho).unwrap();
            let xr = m.reconstruct_invariants(&y);
            assert!(xr.max_abs_diff(&x) < 1e-8, "{da}x{db}: {}", xr.max_abs_diff(&x));
            let direct = svec(&build_mbar(&x, db).unwrap().entries);
            let via_y = m.svec_mbar(&y);
            for k in 0..10 {
                assert!((direct[k] - via_y[k]).abs() < 1e-8);
            }
            let exact = witness(&rho, Some(&m));
            let est = m.estimate_witness(&y).unwrap();
            assert!((exact.e4 - est.e4).abs() < 1e-8);
            assert!((est.e4_tilde.unwrap() - est.e4 / m.op_norm).abs() < 1e-15);
        }
    }
}

/// Largest `‖B v‖` over random unit probes, each polished by power iteration
/// on `BᵀB`; independent of the SVD used by the library.
fn probe_norm(b: &RMatrix, probes: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let btb = b.transpose() * b;
    let (mut raw, mut polished) = (0.0f64, 0.0f64);
    for _ in 0..probes {
        let mut v = linalg::dvec(&(0..b.ncols()).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>());
        v /= v.norm();
        raw = raw.max((b * &v).norm());
        for _ in 0..200 {
            let w = &btb * &v;
            v = &w / w.norm();
        }
        polished = polished.max((b * &v).norm());
    }
    (raw, polished)
}

#[test]
fn operator_norm_matches_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (da, db) in [(2, 2), (3, 3)] {
        let m = maps(da, db);
        assert!(m.op_norm > 0.0);
        let (raw, _) = probe_norm(&m.b_d, 10_000, &mut rng);
        assert!(raw <= m.op_norm * (1.0 + 1e-12));
        let (_, polished) = probe_norm(&m.b_d, 20, &mut rng);
        assert!((polished - m.op_norm).abs() <= 1e-6 * m.op_norm, "{polished} vs {}", m.op_norm);
    }
}

#[test]
fn normalization_preserves_sign_and_scales() {
    let m = maps(3, 3);
    for k in 0..=20 {
        let p = k as f64 / 20.0;
        let rho = make_state(&FamilyParams::Isotropic { d: 3, p }).unwrap();
        let w = witness(&rho, Some(&m));
        let t = w.e4_tilde.unwrap();
        assert_eq!(w.e4 < 0.0, t < 0.0);
        let scaled = build_mbar(&compute_invariants(&rho), 3).unwrap().entries / m.op_norm;
        assert!((linalg::sym_lambda_min(&scaled) - t).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimation_error_contracts(seed in any::<u64>(), scale in 1e-4f64..0.3, pair in 0usize..4) {
        let (da, db) = PAIRS[pair];
        let m = maps(da, db);
        let rho = held_out(da, db, 1 + (seed % 5) as usize).pop().unwrap();
        let y = expected_correlators(&rho).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y_hat = y;
        for v in y_hat.y.iter_mut() {
            *v += scale * (rng.random::<f64>() - 0.5);
        }
        let dy = y_hat.y.iter().zip(y.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dm: f64 = m.svec_mbar(&y_hat).iter().zip(m.svec_mbar(&y)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dm / m.op_norm <= dy * (1.0 + 1e-12));
        let e_hat = m.estimate_witness(&y_hat).unwrap().e4_tilde.unwrap();
        let e = m.estimate_witness(&y).unwrap().e4_tilde.unwrap();
        prop_assert!((e_hat - e).abs() <= dm / m.op_norm + 1e-12);
        prop_assert!((e_hat - e).abs() <= dy + 1e-12);
    }

    #[test]
    fn weyl_bound_on_symmetric_perturbations(
        base in prop::collection::vec(-1.0f64..1.0, 16),
        noise in prop::collection::vec(-0.1f64..0.1, 16),
    ) {
        let sym = |v: &[f64]| {
            let g = RMatrix::from_column_slice(4, 4, v);
            (&g + g.transpose()) * 0.5
        };
        let (a, e) = (sym(&base), sym(&noise));
        let gap = (linalg::sym_lambda_min(&(&a + &e)) - linalg::sym_lambda_min(&a)).abs();
        prop_assert!(gap <= linalg::op_norm(&e) + 1e-12);
        prop_assert!(gap <= linalg::frobenius(&e) + 1e-12);
    }

    #[test]
    fn svec_is_an_isometry(entries in prop::collection::vec(-10.0f64..10.0, 16)) {
        let g = RMatrix::from_column_slice(4, 4, &entries);
        let x = &g + g.transpose();
        let v = svec(&x);
        let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        prop_assert!((n - linalg::frobenius(&x)).abs() <= 1e-14 * n.max(1.0));
        prop_assert!((unsvec(&v) - x).amax() <= 1e-14 * n.max(1.0));
    }
}

#[test]
fn affine_svec_map_matches_mbar() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d_b in 2..=4 {
        let (a, b) = build_a_b(d_b).unwrap();
        for _ in 0..100 {
            let x: [f64; 10] = std::array::from_fn(|k| if k < 9 { rng.random() } else { 0.0 });
            let mut xs = [0.0; 9];
            xs.copy_from_slice(&x[..9]);
            let want = oracle::mbar(&x, d_b);
            let lin = &a * linalg::dvec(&xs) + &b;
            let m = unsvec(lin.as_slice());
            for i in 0..4 {
                for j in 0..4 {
                    assert!((m[(i, j)] - want[i][j]).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn mes_estimate_at_large_budget() {
    let m = maps(2, 2);
    let cfg = ProtocolConfig {
        n_u: 100_000,
        n_s: 3,
        master_seed: 2024,
        state: make_state(&FamilyParams::MaxEntangled { d: 2 }).unwrap(),
    };
    let run = run_protocol(&cfg, Execution::Parallel).unwrap();
    let e4 = m.estimate_witness(&run.global).unwrap().e4;

    let batches = 25;
    let size = run.records.len() / batches;
    let batch_e4: Vec<f64> = run
        .records
        .chunks(size)
        .map(|chunk| {
            let mut y = [0.0; NUM_CLASSES];
            for r in chunk {
                for k in 0..NUM_CLASSES {
                    y[k] += r.y_hat[k] / chunk.len() as f64;
                }
            }
            m.estimate_witness(&CorrelatorVector { y, n_u: chunk.len() as u64, n_s: 3 }).unwrap().e4
        })
        .collect();
    let mean = batch_e4.iter().sum::<f64>() / batches as f64;
    let var = batch_e4.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let sd = (var / batches as f64).sqrt();
    assert!((e4 + 0.329926).abs() <= 3.0 * sd + 1e-6, "e4={e4} sd={sd}");

    let mixed = ProtocolConfig { state: make_state(&FamilyParams::MaximallyMixed { d_a: 2, d_b: 2 }).unwrap(), ..cfg };
    let y = run_protocol(&mixed, Execution::Parallel).unwrap().global;
    assert!(m.estimate_witness(&y).unwrap().e4.abs() < 0.05);
}

#[test]
fn cache_is_reused_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let first = get_maps(2, 3, Some(dir.path()), Execution::Sequential).unwrap();
    let again = get_maps(2, 3, Some(dir.path()), Execution::Parallel).unwrap();
    assert!(Arc::ptr_eq(&first, &again));
    let path = redmoment::inversion::cache_path(dir.path(), 2, 3);
    let loaded = load_maps(&path).unwrap();
    assert_eq!(loaded.b_d, first.b_d);
    assert_eq!(loaded.rank, first.rank);

    std::fs::write(&path, "{\"d_a\": 2}").unwrap();
    assert!(load_maps(&path).is_err());
}

#[test]
fn map_construction_is_mode_independent() {
    let a = InversionMaps::build(2, 2, Execution::Sequential).unwrap();
    let b = InversionMaps::build(2, 2, Execution::Parallel).unwrap();
    assert_eq!(a.b_d, b.b_d);
    assert_eq!(a.op_norm, b.op_norm);
    assert!(InversionMaps::build(7, 2, Execution::Sequential).is_err());
}
