//! Reference implementations written with plain index loops, kept separate
//! from the library code paths they check.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};

pub type C = Complex<f64>;
pub type M = DMatrix<C>;

pub fn ptrace_b(rho: &M, da: usize, db: usize) -> M {
    let mut out = M::zeros(da, da);
    for i in 0..da {
        for k in 0..da {
            let mut s = C::new(0.0, 0.0);
            for j in 0..db {
                s += rho[(i * db + j, k * db + j)];
            }
            out[(i, k)] = s;
        }
    }
    out
}

pub fn ptrace_a(rho: &M, da: usize, db: usize) -> M {
    let mut out = M::zeros(db, db);
    for j in 0..db {
        for l in 0..db {
            let mut s = C::new(0.0, 0.0);
            for i in 0..da {
                s += rho[(i * db + j, i * db + l)];
            }
            out[(j, l)] = s;
        }
    }
    out
}

pub fn ptranspose_a(rho: &M, da: usize, db: usize) -> M {
    let mut out = M::zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..db {
            for k in 0..da {
                for l in 0..db {
                    out[(i * db + j, k * db + l)] = rho[(k * db + j, i * db + l)];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &M, b: &M) -> M {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = M::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut s = C::new(0.0, 0.0);
            for k in 0..a.ncols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn tr(a: &M) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

pub fn kron(a: &M, b: &M) -> M {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    M::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// `[x1, …, x8, xS, Tr ρ³]`.
pub fn invariants(rho: &M, da: usize, db: usize) -> [f64; 10] {
    let ra = ptrace_b(rho, da, db);
    let rb = ptrace_a(rho, da, db);
    let r2 = matmul(rho, rho);
    let r3 = matmul(&r2, rho);
    let pt = ptranspose_a(rho, da, db);
    let pt3 = matmul(&matmul(&pt, &pt), &pt);
    [
        tr(&matmul(&rb, &rb)),
        tr(&matmul(&matmul(&rb, &rb), &rb)),
        tr(&matmul(&ra, &ra)),
        tr(&matmul(&kron(&ra, &rb), rho)),
        tr(&r2),
        tr(&matmul(&rb, &ptrace_a(&r2, da, db))),
        tr(&matmul(&matmul(&ra, &ra), &ra)),
        tr(&matmul(&ra, &ptrace_b(&r2, da, db))),
        0.5 * (tr(&r3) + tr(&pt3)),
        tr(&r3),
    ]
}

/// 4×4 moment matrix assembled entry by entry.
pub fn mbar(x: &[f64; 10], d_b: usize) -> [[f64; 4]; 4] {
    let [x1, x2, x3, x4, x5, x6, x7, x8, xs, _] = *x;
    let db = d_b as f64;
    let row0 = [db - 1.0, (db - 1.0) * x3, 1.0 - x1, x3 - x5];
    let mut m = [[0.0; 4]; 4];
    m[0] = row0;
    for k in 0..4 {
        m[k][0] = row0[k];
    }
    m[1][1] = (db - 1.0) * x7;
    m[2][2] = x1 - x2;
    m[3][3] = x8 - xs;
    m[1][2] = x3 - x4;
    m[2][1] = m[1][2];
    m[1][3] = x7 - x8;
    m[3][1] = m[1][3];
    m[2][3] = x4 - x6;
    m[3][2] = m[2][3];
    m
}
