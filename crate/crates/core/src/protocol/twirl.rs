//! Exact Haar average of the reduced correlators.
//!
//! The third-moment twirl on each party is the orthogonal projection onto the
//! span of the six copy-permutation operators `W_σ`,
//! `T(X) = Σ_{σ,π} (G⁺)_{σπ} ⟨W_π, X⟩ W_σ` with Gram matrix
//! `G_{σπ} = ⟨W_σ, W_π⟩`. Using the pseudo-inverse keeps the construction
//! valid at `d = 2`, where the six operators are linearly dependent.

use super::classes::{LocalPattern, PatternClass, NUM_CLASSES};
use super::estimator::CorrelatorVector;
use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix, C64};
use crate::state::DensityMatrix;

/// Largest local dimension accepted by [`expected_correlators`].
pub const TWIRL_MAX_DIM: usize = 6;

/// Elements of S3 as maps `k -> σ(k)`.
const S3: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];

fn inverse(p: &[usize; 3]) -> [usize; 3] {
    let mut inv = [0; 3];
    for (k, &v) in p.iter().enumerate() {
        inv[v] = k;
    }
    inv
}

/// `W_σ |i_0 i_1 i_2⟩ = |i_{σ⁻¹(0)} i_{σ⁻¹(1)} i_{σ⁻¹(2)}⟩`.
fn apply(inv: &[usize; 3], idx: [usize; 3]) -> [usize; 3] {
    [idx[inv[0]], idx[inv[1]], idx[inv[2]]]
}

fn triples(d: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..d).flat_map(move |a| (0..d).flat_map(move |b| (0..d).map(move |c| [a, b, c])))
}

/// Twirl coefficients `c_L(σ) = Σ_π (G⁺)_{σπ} ⟨W_π, D_L⟩` for every local
/// pattern projector `D_L`, in pattern order [all-equal, pair 01, pair 12,
/// pair 02, distinct].
fn local_coefficients(d: usize) -> [[f64; 6]; 5] {
    let invs: Vec<[usize; 3]> = S3.iter().map(inverse).collect();
    let mut gram = RMatrix::zeros(6, 6);
    for s in 0..6 {
        for p in 0..6 {
            gram[(s, p)] = triples(d).filter(|&i| apply(&invs[s], i) == apply(&invs[p], i)).count() as f64;
        }
    }
    let (ginv, _) = linalg::pseudo_inverse(&gram, 1e-10);
    let patterns = [
        LocalPattern::AllEqual,
        LocalPattern::Pair(0b011),
        LocalPattern::Pair(0b110),
        LocalPattern::Pair(0b101),
        LocalPattern::Distinct,
    ];
    let mut out = [[0.0; 6]; 5];
    for (l, pat) in patterns.iter().enumerate() {
        // ⟨W_π, D_L⟩ counts the pattern-L triples fixed by W_π.
        let overlap: Vec<f64> = invs
            .iter()
            .map(|inv| {
                triples(d)
                    .filter(|&i| LocalPattern::of(i[0], i[1], i[2]) == *pat && apply(inv, i) == i)
                    .count() as f64
            })
            .collect();
        for s in 0..6 {
            out[l][s] = (0..6).map(|p| ginv[(s, p)] * overlap[p]).sum();
        }
    }
    out
}

/// `Tr[(W_σ ⊗ W_τ) ρ^{⊗3}]` for all 36 pairs, σ acting on the A copies and τ on
/// the B copies.
fn permutation_traces(rho: &DensityMatrix) -> [[f64; 6]; 6] {
    let (d_a, d_b) = rho.dims();
    let m = rho.entries();
    let invs: Vec<[usize; 3]> = S3.iter().map(inverse).collect();
    let mut out = [[0.0; 6]; 6];
    for s in 0..6 {
        for t in 0..6 {
            let mut acc = C64::new(0.0, 0.0);
            for ia in triples(d_a) {
                let ja = apply(&invs[s], ia);
                for ib in triples(d_b) {
                    let jb = apply(&invs[t], ib);
                    let mut prod = C64::new(1.0, 0.0);
                    for k in 0..3 {
                        prod *= m[(ia[k] * d_b + ib[k], ja[k] * d_b + jb[k])];
                    }
                    acc += prod;
                }
            }
            out[s][t] = acc.re;
        }
    }
    out
}

/// Pattern pairs `(A pattern, B pattern)` making up each class, as indices into
/// the pattern order of [`local_coefficients`].
fn class_members(class: PatternClass) -> Vec<(usize, usize)> {
    const PAIRS: [usize; 3] = [1, 2, 3];
    use PatternClass::*;
    match class {
        C0 => vec![(0, 0)],
        C1 => PAIRS.iter().map(|&b| (0, b)).collect(),
        C2 => vec![(0, 4)],
        C3 => PAIRS.iter().map(|&a| (a, 0)).collect(),
        C4 => PAIRS.iter().map(|&a| (a, a)).collect(),
        C5 => PAIRS
            .iter()
            .flat_map(|&a| PAIRS.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect(),
        C6 => PAIRS.iter().map(|&a| (a, 4)).collect(),
        C7 => vec![(4, 0)],
        C8 => PAIRS.iter().map(|&b| (4, b)).collect(),
        C9 => vec![(4, 4)],
    }
}

/// Exact `E_U[y(U)]` over Haar-random `U_A ⊗ U_B`.
pub fn expected_correlators(rho: &DensityMatrix) -> Result<CorrelatorVector> {
    let (d_a, d_b) = rho.dims();
    if d_a > TWIRL_MAX_DIM || d_b > TWIRL_MAX_DIM {
        return Err(Error::DimensionGuard(format!(
            "exact twirl supports local dimensions up to {TWIRL_MAX_DIM}, got {d_a}x{d_b}"
        )));
    }
    let ca = local_coefficients(d_a);
    let cb = local_coefficients(d_b);
    let traces = permutation_traces(rho);
    let mut y = [0.0; NUM_CLASSES];
    for class in PatternClass::ALL {
        let mut total = 0.0;
        for (la, lb) in class_members(class) {
            for s in 0..6 {
                for t in 0..6 {
                    total += ca[la][s] * cb[lb][t] * traces[s][t];
                }
            }
        }
        y[class.index()] = total;
    }
    Ok(CorrelatorVector::exact(y))
}
