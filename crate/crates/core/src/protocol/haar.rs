use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::DensityMatrix;

/// Probabilities above `-PROB_CLIP` are treated as rounding and clipped to 0.
const PROB_CLIP: f64 = 1e-12;

/// Local unitaries of one measurement setting.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySetting {
    pub u_a: CMatrix,
    pub u_b: CMatrix,
    pub setting_seed: u64,
}

impl UnitarySetting {
    pub fn identity(d_a: usize, d_b: usize) -> Self {
        Self { u_a: CMatrix::identity(d_a, d_a), u_b: CMatrix::identity(d_b, d_b), setting_seed: 0 }
    }
}

/// Haar-random `d × d` unitary: QR of a complex Ginibre matrix with the
/// diagonal of `R` rotated onto the positive reals.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { Complex::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn sample_setting<R: Rng + ?Sized>(d_a: usize, d_b: usize, setting_seed: u64, rng: &mut R) -> UnitarySetting {
    let u_a = sample_haar_unitary(d_a, rng);
    let u_b = sample_haar_unitary(d_b, rng);
    UnitarySetting { u_a, u_b, setting_seed }
}

/// `p(i, j | U) = ⟨ij| (U_A ⊗ U_B)† ρ (U_A ⊗ U_B) |ij⟩`, indexed by `i * d_b + j`.
pub fn outcome_distribution(rho: &DensityMatrix, setting: &UnitarySetting) -> Result<Vec<f64>> {
    let (d_a, d_b) = rho.dims();
    if setting.u_a.nrows() != d_a || setting.u_b.nrows() != d_b {
        return Err(Error::Shape(format!(
            "setting is {}x{} but state is {d_a}x{d_b}",
            setting.u_a.nrows(),
            setting.u_b.nrows()
        )));
    }
    let u = linalg::kron(&setting.u_a, &setting.u_b);
    let ru = rho.entries() * &u;
    let n = rho.dim();
    let mut p = Vec::with_capacity(n);
    let mut total = 0.0;
    for k in 0..n {
        let mut acc = 0.0;
        for r in 0..n {
            acc += (u[(r, k)].conj() * ru[(r, k)]).re;
        }
        if acc < -PROB_CLIP {
            return Err(Error::NegativeProbability(acc));
        }
        let v = acc.max(0.0);
        total += v;
        p.push(v);
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}
