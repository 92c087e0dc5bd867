//! The nine locally measurable invariants and the global cubic moment.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{partial_trace_operator, DensityMatrix, Subsystem};

/// `(x1, …, x8, xS)` plus the non-measurable `Tr ρ³` when known.
///
/// | field | value                       |
/// |-------|-----------------------------|
/// | `x1`  | `Tr ρ_B²`                   |
/// | `x2`  | `Tr ρ_B³`                   |
/// | `x3`  | `Tr ρ_A²`                   |
/// | `x4`  | `Tr[(ρ_A ⊗ ρ_B) ρ]`         |
/// | `x5`  | `Tr ρ²`                     |
/// | `x6`  | `Tr[ρ_B Tr_A(ρ²)]`          |
/// | `x7`  | `Tr ρ_A³`                   |
/// | `x8`  | `Tr[ρ_A Tr_B(ρ²)]`          |
/// | `xs`  | `(Tr ρ³ + Tr (ρ^{T_A})³)/2` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub x5: f64,
    pub x6: f64,
    pub x7: f64,
    pub x8: f64,
    pub xs: f64,
    /// Exact-path only; never estimable from local randomized measurements.
    pub tr_rho3: Option<f64>,
}

/// Component names in [`InvariantVector::to_array`] order.
pub const INVARIANT_NAMES: [&str; 9] = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "xS"];

impl InvariantVector {
    pub fn to_array(&self) -> [f64; 9] {
        [self.x1, self.x2, self.x3, self.x4, self.x5, self.x6, self.x7, self.x8, self.xs]
    }

    pub fn from_array(x: [f64; 9]) -> Self {
        Self {
            x1: x[0],
            x2: x[1],
            x3: x[2],
            x4: x[3],
            x5: x[4],
            x6: x[5],
            x7: x[6],
            x8: x[7],
            xs: x[8],
            tr_rho3: None,
        }
    }

    /// Largest componentwise difference over the nine measurable entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = self.to_array().iter().map(|v| format!("{v:.16e}")).collect();
        cols.push(self.tr_rho3.map(|v| format!("{v:.16e}")).unwrap_or_default());
        cols.join(",")
    }
}

pub const CSV_HEADER: &str = "x1,x2,x3,x4,x5,x6,x7,x8,xS,tr_rho3";

/// One row per state, 17 significant digits.
pub fn write_csv<W: Write>(mut out: W, rows: &[InvariantVector]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn tr(m: &CMatrix) -> f64 {
    linalg::trace(m).re
}

/// Exact invariants of a state via explicit matrix products.
pub fn compute_invariants(rho: &DensityMatrix) -> InvariantVector {
    let (d_a, d_b) = rho.dims();
    let r = rho.entries();
    let ra = rho.marginal_a();
    let rb = rho.marginal_b();
    let rho2 = r * r;
    let x4 = linalg::trace_product(&linalg::kron(ra.entries(), rb.entries()), r).re;
    let tr_a_rho2 = partial_trace_operator(&rho2, d_a, d_b, Subsystem::A);
    let tr_b_rho2 = partial_trace_operator(&rho2, d_a, d_b, Subsystem::B);
    let x6 = linalg::trace_product(rb.entries(), &tr_a_rho2).re;
    let x8 = linalg::trace_product(ra.entries(), &tr_b_rho2).re;
    let tr_rho3 = linalg::trace_product(&rho2, r).re;
    let pt = rho.partial_transpose();
    let pt_e = pt.entries();
    let tr_pt3 = linalg::trace_product(&(pt_e * pt_e), pt_e).re;
    InvariantVector {
        x1: rb.moment(2),
        x2: rb.moment(3),
        x3: ra.moment(2),
        x4,
        x5: tr(&rho2),
        x6,
        x7: ra.moment(3),
        x8,
        xs: 0.5 * (tr_rho3 + tr_pt3),
        tr_rho3: Some(tr_rho3),
    }
}

/// Closed-form invariants of `p |Φ_d⟩⟨Φ_d| + (1 - p) I / d²`.
pub fn isotropic_invariants(d: usize, p: f64) -> Result<InvariantVector> {
    if d < 2 {
        return Err(Error::Parameter(format!("d={d} must be at least 2")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p={p} outside [0, 1]")));
    }
    let df = d as f64;
    let d2 = df * df;
    let d4 = d2 * d2;
    let q = 1.0 - p;
    let x5 = p * p + (1.0 - p * p) / d2;
    let tr_rho3 = p.powi(3) + 3.0 * p * p * q / d2 + 3.0 * p * q * q / d4 + q.powi(3) / d4;
    let xs = p.powi(3) * (d4 - 5.0 * d2 + 4.0) / (2.0 * d4) + 3.0 * p * p * (d2 - 1.0) / d4 + 1.0 / d4;
    Ok(InvariantVector {
        x1: 1.0 / df,
        x2: 1.0 / d2,
        x3: 1.0 / df,
        x4: 1.0 / d2,
        x5,
        x6: x5 / df,
        x7: 1.0 / d2,
        x8: x5 / df,
        xs,
        tr_rho3: Some(tr_rho3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_state, FamilyParams};

    #[test]
    fn mes_two_invariants() {
        let x = compute_invariants(&make_state(&FamilyParams::MaxEntangled { d: 2 }).unwrap());
        let expect = [0.5, 0.25, 0.5, 0.25, 1.0, 0.5, 0.25, 0.5, 0.625];
        for (a, b) in x.to_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert!((x.tr_rho3.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maximally_mixed_two_qubits() {
        let x = compute_invariants(&make_state(&FamilyParams::MaximallyMixed { d_a: 2, d_b: 2 }).unwrap());
        let expect = [0.5, 0.25, 0.5, 0.25, 0.25, 0.125, 0.25, 0.125, 1.0 / 16.0];
        for (a, b) in x.to_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn isotropic_closed_form_limits() {
        for d in 2..6 {
            let zero = compute_invariants(&make_state(&FamilyParams::MaximallyMixed { d_a: d, d_b: d }).unwrap());
            assert!(isotropic_invariants(d, 0.0).unwrap().max_abs_diff(&zero) < 1e-14);
            let one = compute_invariants(&make_state(&FamilyParams::MaxEntangled { d }).unwrap());
            assert!(isotropic_invariants(d, 1.0).unwrap().max_abs_diff(&one) < 1e-14);
        }
    }

    #[test]
    fn isotropic_closed_form_grid() {
        for d in 2..=4 {
            for k in 0..=10 {
                let p = k as f64 / 10.0;
                let dense = compute_invariants(&make_state(&FamilyParams::Isotropic { d, p }).unwrap());
                let closed = isotropic_invariants(d, p).unwrap();
                assert!(dense.max_abs_diff(&closed) < 1e-12, "d={d} p={p}");
                assert!((dense.tr_rho3.unwrap() - closed.tr_rho3.unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isotropic_range_errors() {
        assert!(isotropic_invariants(1, 0.5).is_err());
        assert!(isotropic_invariants(3, -0.5).is_err());
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let x = isotropic_invariants(3, 0.5).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[x]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row.len(), 10);
        assert_eq!(row[0], x.x1);
        assert_eq!(row[8], x.xs);
    }
}
