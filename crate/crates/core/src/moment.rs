//! Reduction-moment matrices, the witness `E4` and the benchmark closed forms.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{compute_invariants, InvariantVector};
use crate::inversion::InversionMaps;
use crate::linalg::{self, RMatrix};
use crate::state::{make_state, DensityMatrix, FamilyParams};

/// Default threshold separating numerical noise from a genuine negative
/// eigenvalue on the exact path.
pub const DEFAULT_DECISION_TOL: f64 = 1e-12;

/// Which construction produced a [`MomentMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// `M(ρ)`, uses the global `Tr ρ³`.
    Raw,
    /// `M(ρ^{T_A})`.
    PartialTransposed,
    /// `(M(ρ) + M(ρ^{T_A}))/2`, the measurable matrix.
    Symmetrized,
    /// Identity sector dropped (3×3).
    Homogeneous,
}

/// Real symmetric moment matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub entries: RMatrix,
    pub kind: MatrixKind,
    pub d_b: usize,
}

impl MomentMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn lambda_min(&self) -> f64 {
        if self.size() == 4 {
            linalg::lambda_min4(&Matrix4::from_iterator(self.entries.iter().copied()))
        } else {
            linalg::sym_lambda_min(&self.entries)
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.entries)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }
}

fn check_db(d_b: usize) -> Result<()> {
    if d_b < 2 {
        return Err(Error::Parameter(format!("d_b={d_b} must be at least 2")));
    }
    Ok(())
}

fn assemble(x: &InvariantVector, m33: f64, d_b: usize, kind: MatrixKind) -> MomentMatrix {
    let k = d_b as f64 - 1.0;
    let upper = [
        [k, k * x.x3, 1.0 - x.x1, x.x3 - x.x5],
        [0.0, k * x.x7, x.x3 - x.x4, x.x7 - x.x8],
        [0.0, 0.0, x.x1 - x.x2, x.x4 - x.x6],
        [0.0, 0.0, 0.0, m33],
    ];
    let entries = RMatrix::from_fn(4, 4, |i, j| if i <= j { upper[i][j] } else { upper[j][i] });
    MomentMatrix { entries, kind, d_b }
}

/// The measurable PT-symmetrized matrix `M̄`.
pub fn build_mbar(x: &InvariantVector, d_b: usize) -> Result<MomentMatrix> {
    check_db(d_b)?;
    Ok(assemble(x, x.x8 - x.xs, d_b, MatrixKind::Symmetrized))
}

/// `M(ρ)`; needs the exact `Tr ρ³`.
pub fn build_m_raw(x: &InvariantVector, d_b: usize) -> Result<MomentMatrix> {
    check_db(d_b)?;
    let t3 = x.tr_rho3.ok_or(Error::Unavailable("Tr(rho^3)"))?;
    Ok(assemble(x, x.x8 - t3, d_b, MatrixKind::Raw))
}

/// `M(ρ^{T_A})`, using `Tr (ρ^{T_A})³ = 2 xS - Tr ρ³`.
pub fn build_m_partial_transposed(x: &InvariantVector, d_b: usize) -> Result<MomentMatrix> {
    check_db(d_b)?;
    let t3 = x.tr_rho3.ok_or(Error::Unavailable("Tr(rho^3)"))?;
    Ok(assemble(x, x.x8 - (2.0 * x.xs - t3), d_b, MatrixKind::PartialTransposed))
}

/// Rows/columns 1..3 of a 4×4 moment matrix.
pub fn homogeneous_block(m: &MomentMatrix) -> Result<MomentMatrix> {
    if m.size() != 4 {
        return Err(Error::Shape(format!("expected 4x4, got {0}x{0}", m.size())));
    }
    Ok(MomentMatrix {
        entries: m.entries.view((1, 1), (3, 3)).into_owned(),
        kind: MatrixKind::Homogeneous,
        d_b: m.d_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    EntanglementCertified,
    Inconclusive,
}

impl Verdict {
    pub fn from_e4(e4: f64, tol: f64) -> Self {
        if e4 < -tol {
            Verdict::EntanglementCertified
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessValue {
    pub e4: f64,
    /// `e4 / ‖B_d‖_op`, when the inverse maps are known.
    pub e4_tilde: Option<f64>,
    pub verdict: Verdict,
}

/// `E4 = λ_min(M̄(ρ))` on the exact path.
pub fn witness(rho: &DensityMatrix, maps: Option<&InversionMaps>) -> WitnessValue {
    witness_with_tol(rho, maps, DEFAULT_DECISION_TOL)
}

pub fn witness_with_tol(rho: &DensityMatrix, maps: Option<&InversionMaps>, tol: f64) -> WitnessValue {
    let x = compute_invariants(rho);
    let mbar = assemble(&x, x.x8 - x.xs, rho.d_b(), MatrixKind::Symmetrized);
    let e4 = mbar.lambda_min();
    WitnessValue {
        e4,
        e4_tilde: maps.map(|m| e4 / m.op_norm),
        verdict: Verdict::from_e4(e4, tol),
    }
}

/// Closed-form `λ_min(M̄)` for `|Φ_d⟩⟨Φ_d|`.
pub fn mes_lambda_min(d: usize) -> f64 {
    let d = d as f64;
    let s = 4.0 * d.powi(4) + 4.0 * d.powi(3) + 29.0 * d * d + 6.0 * d + 41.0;
    (d - 1.0) * (2.0 * d * d - d + 5.0 - s.sqrt()) / (4.0 * d * d)
}

/// Isotropic detection threshold of the third-order witness.
pub fn isotropic_threshold_3rd(d: usize) -> f64 {
    let d = d as f64;
    (4.0 - d * d + d * (d * d + 8.0).sqrt()) / (4.0 * (d + 1.0))
}

/// Isotropic detection threshold of `Tr ρ² ≤ Tr ρ_A²`.
pub fn purity_threshold(d: usize) -> f64 {
    1.0 / ((d as f64) + 1.0).sqrt()
}

/// Isotropic separability (= PPT) threshold.
pub fn ppt_threshold(d: usize) -> f64 {
    1.0 / ((d as f64) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanVariant {
    Affine4,
    Homogeneous3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Grid intervals used to bracket the first sign change.
    pub grid: usize,
    /// Bracket width at which bisection stops.
    pub tol: f64,
    pub max_iter: usize,
    /// `λ_min < -decision_tol` counts as negative.
    pub decision_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { grid: 200, tol: 1e-9, max_iter: 60, decision_tol: DEFAULT_DECISION_TOL }
    }
}

/// `λ_min` of the chosen variant at sweep parameter `p`.
pub fn variant_lambda_min(family: &FamilyParams, variant: ScanVariant, p: f64) -> Result<f64> {
    let params = family
        .with_p(p)
        .ok_or_else(|| Error::Parameter(format!("family {family} has no sweep parameter p")))?;
    let rho = make_state(&params)?;
    let mbar = build_mbar(&compute_invariants(&rho), rho.d_b())?;
    Ok(match variant {
        ScanVariant::Affine4 => mbar.lambda_min(),
        ScanVariant::Homogeneous3 => homogeneous_block(&mbar)?.lambda_min(),
    })
}

/// Smallest `p ∈ [0, 1]` at which the chosen variant stops being PSD.
pub fn threshold_scan(family: &FamilyParams, variant: ScanVariant) -> Result<f64> {
    threshold_scan_with(family, variant, &ScanOptions::default())
}

pub fn threshold_scan_with(family: &FamilyParams, variant: ScanVariant, opts: &ScanOptions) -> Result<f64> {
    let negative = |p: f64| -> Result<bool> { Ok(variant_lambda_min(family, variant, p)? < -opts.decision_tol) };
    if negative(0.0)? {
        return Ok(0.0);
    }
    let mut bracket = None;
    for k in 1..=opts.grid {
        let p = k as f64 / opts.grid as f64;
        if negative(p)? {
            bracket = Some(((k - 1) as f64 / opts.grid as f64, p));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoThreshold)?;
    for _ in 0..opts.max_iter {
        if hi - lo <= opts.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if negative(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
