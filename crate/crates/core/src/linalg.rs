//! Dense linear-algebra helpers shared by the state, moment and inversion code.

use nalgebra::{Complex, DMatrix, DVector, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Tolerance on `max |H - H†|` accepted by [`spectrum`].
pub const SPECTRUM_HERMITIAN_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest elementwise modulus of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn spectrum(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigh(h)?.0)
}

/// Ascending eigenpairs of a Hermitian operator; eigenvectors are the columns.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::Shape(format!("{}x{} is not square", h.nrows(), h.ncols())));
    }
    let dev = hermitian_deviation(h);
    if dev > SPECTRUM_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn sym_lambda_min(m: &RMatrix) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn sym_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn lambda_min4(m: &Matrix4<f64>) -> f64 {
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest singular value.
pub fn op_norm(m: &RMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff; also
/// returns the numerical rank.
pub fn pseudo_inverse(m: &RMatrix, rel_tol: f64) -> (RMatrix, usize) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = rel_tol * smax.max(f64::MIN_POSITIVE);
    let mut out = RMatrix::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            rank += 1;
            let vk = vt.row(k).transpose();
            let uk = u.column(k);
            out += (vk * uk.transpose()) / s;
        }
    }
    (out, rank)
}

/// Numerical rank at a relative singular-value cutoff.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    pseudo_inverse(m, rel_tol).1
}

pub fn frobenius(m: &RMatrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dvec(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}
