//! Random-state generators and independent oracles shared by the test suites
//! and by the regression that builds the forward correlator map.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, RMatrix, C64};
use crate::protocol::{classify_pair_patterns, outcome_distribution, LocalPattern, UnitarySetting, NUM_CLASSES};
use crate::state::{DensityMatrix, LocalState};

/// Largest `(d_a d_b)³` accepted by [`enumerate_y`].
pub const ENUMERATION_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Haar-random pure states.
    HaarPure,
    /// `G G† / Tr(G G†)` with `G` a `D × rank` complex Ginibre matrix.
    MixedGinibre { rank: usize },
    /// Dirichlet mixtures of at most `d_a d_b` Haar-random product pure states.
    SeparableMixture,
}

/// Reproducible stream of random states.
#[derive(Debug, Clone)]
pub struct StateGenerator {
    pub kind: GeneratorKind,
    pub d_a: usize,
    pub d_b: usize,
    rng: ChaCha8Rng,
}

impl StateGenerator {
    pub fn new(kind: GeneratorKind, d_a: usize, d_b: usize, seed: u64) -> Self {
        Self { kind, d_a, d_b, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_state(&mut self) -> DensityMatrix {
        match self.kind {
            GeneratorKind::HaarPure => random_pure(self.d_a, self.d_b, &mut self.rng),
            GeneratorKind::MixedGinibre { rank } => random_mixed(self.d_a, self.d_b, rank, &mut self.rng),
            GeneratorKind::SeparableMixture => random_separable(self.d_a, self.d_b, &mut self.rng),
        }
    }
}

impl Iterator for StateGenerator {
    type Item = DensityMatrix;

    fn next(&mut self) -> Option<DensityMatrix> {
        Some(self.next_state())
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure<R: Rng + ?Sized>(d_a: usize, d_b: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::pure(d_a, d_b, &random_vector(d_a * d_b, rng)).expect("non-zero vector")
}

pub fn random_mixed<R: Rng + ?Sized>(d_a: usize, d_b: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let n = d_a * d_b;
    let g = CMatrix::from_fn(n, rank.max(1), |_, _| gaussian(rng));
    let w = &g * g.adjoint();
    let tr: f64 = (0..n).map(|i| w[(i, i)].re).sum();
    DensityMatrix::new_unchecked_psd(d_a, d_b, w.scale(1.0 / tr)).expect("valid by construction")
}

pub fn random_separable<R: Rng + ?Sized>(d_a: usize, d_b: usize, rng: &mut R) -> DensityMatrix {
    let terms = rng.random_range(1..=d_a * d_b);
    // Flat Dirichlet weights: normalized Exp(1) draws.
    let raw: Vec<f64> = (0..terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / total);
    let n = d_a * d_b;
    let mut entries = CMatrix::zeros(n, n);
    for w in weights {
        let a = LocalState::pure(&random_vector(d_a, rng)).expect("non-zero");
        let b = LocalState::pure(&random_vector(d_b, rng)).expect("non-zero");
        entries += DensityMatrix::product(&a, &b).entries().scale(w);
    }
    let tr: f64 = (0..n).map(|i| entries[(i, i)].re).sum();
    DensityMatrix::new_unchecked_psd(d_a, d_b, entries.scale(1.0 / tr)).expect("valid by construction")
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

/// Exact `y(U)` by summing `p(I1) p(I2) p(I3)` over all ordered outcome triples.
pub fn enumerate_y(rho: &DensityMatrix, setting: &UnitarySetting) -> Result<[f64; NUM_CLASSES]> {
    let (d_a, d_b) = rho.dims();
    let n = d_a * d_b;
    if n.pow(3) > ENUMERATION_LIMIT {
        return Err(Error::DimensionGuard(format!("{n}^3 outcome triples exceed {ENUMERATION_LIMIT}")));
    }
    let p = outcome_distribution(rho, setting)?;
    let mut y = [0.0; NUM_CLASSES];
    for i in 0..n {
        for j in 0..n {
            let pij = p[i] * p[j];
            if pij == 0.0 {
                continue;
            }
            for k in 0..n {
                let pa = LocalPattern::of(i / d_b, j / d_b, k / d_b);
                let pb = LocalPattern::of(i % d_b, j % d_b, k % d_b);
                y[classify_pair_patterns(pa, pb).index()] += pij * p[k];
            }
        }
    }
    Ok(y)
}

fn canonical_phase(m: &CMatrix) -> CMatrix {
    let pivot = m.iter().find(|z| z.norm() > 1e-9).copied().unwrap_or(c(1.0, 0.0));
    m * (pivot.conj() / pivot.norm())
}

/// The 24 single-qubit Clifford unitaries modulo global phase, generated from
/// `H` and `S`.
pub fn clifford_group() -> Vec<CMatrix> {
    let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
        .scale(std::f64::consts::FRAC_1_SQRT_2);
    let s = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
    let mut group = vec![CMatrix::identity(2, 2)];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in [&h, &s] {
                let cand = canonical_phase(&(gen * g));
                if !group.iter().any(|e| (e - &cand).norm() < 1e-9) {
                    group.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    group
}

/// Exact `E_U[y(U)]` for two qubits by averaging [`enumerate_y`] over all
/// 24 × 24 local Clifford settings (a unitary 3-design on each side).
pub fn clifford_average_y(rho: &DensityMatrix) -> Result<[f64; NUM_CLASSES]> {
    if rho.dims() != (2, 2) {
        return Err(Error::DimensionGuard("Clifford averaging is qubit-qubit only".into()));
    }
    let group = clifford_group();
    let mut y = [0.0; NUM_CLASSES];
    for ua in &group {
        for ub in &group {
            let setting = UnitarySetting { u_a: ua.clone(), u_b: ub.clone(), setting_seed: 0 };
            for (acc, v) in y.iter_mut().zip(enumerate_y(rho, &setting)?) {
                *acc += v;
            }
        }
    }
    let n = (group.len() * group.len()) as f64;
    Ok(y.map(|v| v / n))
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix through its real `2n × 2n` embedding
/// `[[Re, -Im], [Im, Re]]`, which doubles every eigenvalue.
pub fn hermitian_eigenvalues_oracle(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let emb = RMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z: Complex<f64> = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    jacobi_eigenvalues(&emb).chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_group_has_24_elements() {
        let g = clifford_group();
        assert_eq!(g.len(), 24);
        for u in &g {
            assert!((u.adjoint() * u - CMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn generators_produce_valid_states() {
        for kind in [GeneratorKind::HaarPure, GeneratorKind::MixedGinibre { rank: 2 }, GeneratorKind::SeparableMixture] {
            for rho in StateGenerator::new(kind, 2, 3, 5).take(10) {
                DensityMatrix::new(2, 3, rho.entries().clone()).unwrap();
            }
        }
    }

    #[test]
    fn generators_reproducible() {
        let a: Vec<_> = StateGenerator::new(GeneratorKind::SeparableMixture, 3, 3, 9).take(3).collect();
        let b: Vec<_> = StateGenerator::new(GeneratorKind::SeparableMixture, 3, 3, 9).take(3).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = RMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let ev = jacobi_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn enumerate_y_guard() {
        let rho = crate::state::make_state(&crate::state::FamilyParams::MaximallyMixed { d_a: 11, d_b: 10 }).unwrap();
        assert!(enumerate_y(&rho, &UnitarySetting::identity(11, 10)).is_err());
    }
}
