//! Linear maps between invariants, correlators and the vectorized moment
//! matrix.
//!
//! * `W, w0`: `E_U[y] = W x + w0`, fitted by least squares against the exact
//!   twirl over random states. The fit residual certifies the affine form.
//! * `L, l0`: `x = L y + l0`, the pseudo-inverse of `W` completed with the
//!   the affine identities that tie invariants together for qubit parties.
//! * `A, b`: `svec(M̄) = A x + b`.
//! * `B_d = A L` and its largest singular value, the normalization of the
//!   witness.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::invariants::{compute_invariants, InvariantVector};
use crate::linalg::{self, RMatrix};
use crate::moment::{Verdict, WitnessValue, DEFAULT_DECISION_TOL};
use crate::protocol::{expected_correlators, CorrelatorVector, NUM_CLASSES};
use crate::testkit::{GeneratorKind, StateGenerator};

/// Bumped whenever the construction changes; stale cache files are rebuilt.
pub const BUILDER_VERSION: u32 = 1;

/// Environment variable naming the on-disk map cache directory.
pub const CACHE_ENV: &str = "REDMOMENT_CACHE_DIR";

/// Random states used by the forward-map regression.
pub const REGRESSION_STATES: usize = 80;

/// Fit residual above which construction fails.
pub const MAX_FIT_RESIDUAL: f64 = 1e-8;

const RANK_TOL: f64 = 1e-10;
const IDENTIFIABILITY_TOL: f64 = 1e-8;

const SVEC_LEN: usize = 10;
const NUM_INVARIANTS: usize = 9;

// Invariant positions in `InvariantVector::to_array` order.
const X1: usize = 0;
const X2: usize = 1;
const X3: usize = 2;
const X4: usize = 3;
const X5: usize = 4;
const X6: usize = 5;
const X7: usize = 6;
const X8: usize = 7;
const XS: usize = 8;

/// `(row, col)` of each svec component (upper triangle, row-major).
pub const SVEC_INDEX: [(usize, usize); SVEC_LEN] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];

/// Upper triangle with off-diagonals scaled by √2, so `‖svec X‖₂ = ‖X‖_F`.
pub fn svec(m: &RMatrix) -> [f64; SVEC_LEN] {
    SVEC_INDEX.map(|(i, j)| if i == j { m[(i, j)] } else { std::f64::consts::SQRT_2 * m[(i, j)] })
}

/// Inverse of [`svec`].
pub fn unsvec(v: &[f64]) -> RMatrix {
    let mut m = RMatrix::zeros(4, 4);
    for (k, &(i, j)) in SVEC_INDEX.iter().enumerate() {
        if i == j {
            m[(i, j)] = v[k];
        } else {
            m[(i, j)] = v[k] / std::f64::consts::SQRT_2;
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// `A`, `b` with `svec(build_mbar(x, d_b)) = A x + b`.
pub fn build_a_b(d_b: usize) -> Result<(RMatrix, DVector<f64>)> {
    if d_b < 2 {
        return Err(Error::Parameter(format!("d_b={d_b} must be at least 2")));
    }
    let k = d_b as f64 - 1.0;
    let s = std::f64::consts::SQRT_2;
    let mut a = RMatrix::zeros(SVEC_LEN, NUM_INVARIANTS);
    let mut b = DVector::zeros(SVEC_LEN);
    // (0,0) = d_B - 1
    b[0] = k;
    // (0,1) = (d_B - 1) x3
    a[(1, X3)] = s * k;
    // (0,2) = 1 - x1
    b[2] = s;
    a[(2, X1)] = -s;
    // (0,3) = x3 - x5
    a[(3, X3)] = s;
    a[(3, X5)] = -s;
    // (1,1) = (d_B - 1) x7
    a[(4, X7)] = k;
    // (1,2) = x3 - x4
    a[(5, X3)] = s;
    a[(5, X4)] = -s;
    // (1,3) = x7 - x8
    a[(6, X7)] = s;
    a[(6, X8)] = -s;
    // (2,2) = x1 - x2
    a[(7, X1)] = 1.0;
    a[(7, X2)] = -1.0;
    // (2,3) = x4 - x6
    a[(8, X4)] = s;
    a[(8, X6)] = -s;
    // (3,3) = x8 - xS
    a[(9, X8)] = 1.0;
    a[(9, XS)] = -1.0;
    Ok((a, b))
}

/// Affine identities `g·x + g0 = 0` that hold on every state when a party is
/// a qubit. The first of each triple is Cayley-Hamilton for the marginal; the
/// other two come from the vanishing antisymmetrizer on three qubit copies.
pub fn qubit_identities(d_a: usize, d_b: usize) -> Vec<([f64; NUM_INVARIANTS], f64)> {
    let mut rows = Vec::new();
    let mut row = |terms: &[(usize, f64)], g0: f64| {
        let mut g = [0.0; NUM_INVARIANTS];
        for &(i, v) in terms {
            g[i] = v;
        }
        rows.push((g, g0));
    };
    if d_a == 2 {
        row(&[(X7, 1.0), (X3, -1.5)], 0.5);
        row(&[(X1, 1.0), (X4, -2.0), (X5, -1.0), (X8, 2.0)], 0.0);
        row(&[(XS, 2.0), (X6, -3.0), (X2, 1.0)], 0.0);
    }
    if d_b == 2 {
        row(&[(X2, 1.0), (X1, -1.5)], 0.5);
        row(&[(X3, 1.0), (X4, -2.0), (X5, -1.0), (X6, 2.0)], 0.0);
        row(&[(XS, 2.0), (X8, -3.0), (X7, 1.0)], 0.0);
    }
    rows
}

fn dependent_coordinates(d_a: usize, d_b: usize) -> &'static [usize] {
    match (d_a == 2, d_b == 2) {
        (true, true) => &[X1, X2, X3, X4, X7],
        (true, false) => &[X7, X1, XS],
        (false, true) => &[X2, X3, XS],
        (false, false) => &[],
    }
}

/// Invariant coordinates that are not fixed by a qubit identity.
pub fn free_coordinates(d_a: usize, d_b: usize) -> Vec<usize> {
    let dep = dependent_coordinates(d_a, d_b);
    (0..NUM_INVARIANTS).filter(|i| !dep.contains(i)).collect()
}

/// Affine completion `x = C x + c` that overwrites the dependent coordinates
/// from the free ones via [`qubit_identities`].
fn completion(d_a: usize, d_b: usize) -> (RMatrix, DVector<f64>) {
    let mut cm = RMatrix::identity(NUM_INVARIANTS, NUM_INVARIANTS);
    let mut cv = DVector::zeros(NUM_INVARIANTS);
    let dep = dependent_coordinates(d_a, d_b);
    if dep.is_empty() {
        return (cm, cv);
    }
    let ids = qubit_identities(d_a, d_b);
    let free = free_coordinates(d_a, d_b);
    let g_dep = RMatrix::from_fn(ids.len(), dep.len(), |r, k| ids[r].0[dep[k]]);
    let g_free = RMatrix::from_fn(ids.len(), free.len(), |r, k| ids[r].0[free[k]]);
    let g0 = DVector::from_fn(ids.len(), |r, _| ids[r].1);
    let (pinv, rank) = linalg::pseudo_inverse(&g_dep, RANK_TOL);
    debug_assert_eq!(rank, dep.len());
    let solve = -(&pinv * &g_free);
    let offset = -(&pinv * &g0);
    for (j, &xd) in dep.iter().enumerate() {
        cm[(xd, xd)] = 0.0;
        for (k, &xf) in free.iter().enumerate() {
            cm[(xd, xf)] = solve[(j, k)];
        }
        cv[xd] = offset[j];
    }
    (cm, cv)
}

fn check_dims(d_a: usize, d_b: usize) -> Result<()> {
    if !(2..=crate::protocol::TWIRL_MAX_DIM).contains(&d_a) || !(2..=crate::protocol::TWIRL_MAX_DIM).contains(&d_b) {
        return Err(Error::DimensionGuard(format!(
            "inverse maps are built for 2 <= d <= {}, got {d_a}x{d_b}",
            crate::protocol::TWIRL_MAX_DIM
        )));
    }
    Ok(())
}

/// Forward map `E_U[y] = W x + w0`.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    pub w: RMatrix,
    pub w0: DVector<f64>,
    /// Max absolute fit residual over the regression states.
    pub residual: f64,
}

impl ForwardMap {
    pub fn apply(&self, x: &InvariantVector) -> [f64; NUM_CLASSES] {
        let y = &self.w * linalg::dvec(&x.to_array()) + &self.w0;
        std::array::from_fn(|i| y[i])
    }
}

/// Fits the forward map against the exact twirl.
pub fn build_w(d_a: usize, d_b: usize, exec: Execution) -> Result<ForwardMap> {
    check_dims(d_a, d_b)?;
    let n = d_a * d_b;
    let free = free_coordinates(d_a, d_b);
    let seed = 0x5EED_0000 + (d_a * 16 + d_b) as u64;
    let samples = map_indexed(exec, REGRESSION_STATES, |i| -> Result<([f64; NUM_INVARIANTS], [f64; NUM_CLASSES])> {
        let rank = 1 + i % n;
        let rho = StateGenerator::new(GeneratorKind::MixedGinibre { rank }, d_a, d_b, seed + i as u64).next_state();
        Ok((compute_invariants(&rho).to_array(), expected_correlators(&rho)?.y))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let cols = free.len() + 1;
    let design = RMatrix::from_fn(samples.len(), cols, |r, col| {
        if col < free.len() {
            samples[r].0[free[col]]
        } else {
            1.0
        }
    });
    let target = RMatrix::from_fn(samples.len(), NUM_CLASSES, |r, col| samples[r].1[col]);
    let (pinv, design_rank) = linalg::pseudo_inverse(&design, RANK_TOL);
    if design_rank < cols {
        return Err(Error::Construction(format!(
            "regression design has rank {design_rank} < {cols}; invariants are not independent on random states"
        )));
    }
    let coef = &pinv * &target;
    let residual = (&design * &coef - &target).iter().map(|v| v.abs()).fold(0.0, f64::max);
    if residual > MAX_FIT_RESIDUAL {
        return Err(Error::Construction(format!(
            "forward map fit residual {residual:.3e} exceeds {MAX_FIT_RESIDUAL:e}"
        )));
    }
    let mut w = RMatrix::zeros(NUM_CLASSES, NUM_INVARIANTS);
    let mut w0 = DVector::zeros(NUM_CLASSES);
    for mu in 0..NUM_CLASSES {
        for (k, &xi) in free.iter().enumerate() {
            w[(mu, xi)] = coef[(k, mu)];
        }
        w0[mu] = coef[(free.len(), mu)];
    }
    Ok(ForwardMap { w, w0, residual })
}

/// Reconstruction `x = L y + l0`.
#[derive(Debug, Clone)]
pub struct InverseMap {
    pub l: RMatrix,
    pub l0: DVector<f64>,
    pub rank: usize,
}

/// Pseudo-inverse of `W` on the free coordinates plus qubit completion.
///
/// Fails when the unidentifiable directions of `W` would leak into `svec(M̄)`.
pub fn build_ld(fwd: &ForwardMap, d_a: usize, d_b: usize) -> Result<InverseMap> {
    check_dims(d_a, d_b)?;
    let free = free_coordinates(d_a, d_b);
    let w_free = RMatrix::from_fn(NUM_CLASSES, free.len(), |r, k| fwd.w[(r, free[k])]);
    let (pinv, rank) = linalg::pseudo_inverse(&w_free, RANK_TOL);

    let (cm, cv) = completion(d_a, d_b);
    let (a, _) = build_a_b(d_b)?;
    let a_free = {
        let full = &a * &cm;
        RMatrix::from_fn(SVEC_LEN, free.len(), |r, k| full[(r, free[k])])
    };
    let null_proj = RMatrix::identity(free.len(), free.len()) - &pinv * &w_free;
    let leak = (&a_free * &null_proj).iter().map(|v| v.abs()).fold(0.0, f64::max);
    if leak > IDENTIFIABILITY_TOL {
        return Err(Error::Construction(format!(
            "W has rank {rank} on {} free invariants and the missing directions reach svec(M̄) (leak {leak:.3e})",
            free.len()
        )));
    }

    let mut l_raw = RMatrix::zeros(NUM_INVARIANTS, NUM_CLASSES);
    for (k, &xi) in free.iter().enumerate() {
        l_raw.row_mut(xi).copy_from(&pinv.row(k));
    }
    let l = &cm * &l_raw;
    let l0 = &cm * (-(&l_raw * &fwd.w0)) + cv;
    Ok(InverseMap { l, l0, rank })
}

/// `B_d = A L` and `‖B_d‖_op`.
pub fn build_bd(a: &RMatrix, l: &RMatrix) -> (RMatrix, f64) {
    let bd = a * l;
    let norm = linalg::op_norm(&bd);
    (bd, norm)
}

/// Everything needed to turn measured correlators into a normalized witness.
#[derive(Debug, Clone)]
pub struct InversionMaps {
    pub d_a: usize,
    pub d_b: usize,
    pub w: RMatrix,
    pub w0: DVector<f64>,
    pub l: RMatrix,
    pub l0: DVector<f64>,
    pub a: RMatrix,
    pub b: DVector<f64>,
    pub b_d: RMatrix,
    /// `A l0 + b`, so that `svec(M̄) = B_d y + m_offset`.
    pub m_offset: DVector<f64>,
    pub op_norm: f64,
    pub rank: usize,
    pub oracle_residual: f64,
}

impl InversionMaps {
    pub fn build(d_a: usize, d_b: usize, exec: Execution) -> Result<Self> {
        let fwd = build_w(d_a, d_b, exec)?;
        let inv = build_ld(&fwd, d_a, d_b)?;
        let (a, b) = build_a_b(d_b)?;
        let (b_d, op_norm) = build_bd(&a, &inv.l);
        if op_norm <= 0.0 {
            return Err(Error::Construction("B_d vanishes".into()));
        }
        let m_offset = &a * &inv.l0 + &b;
        Ok(Self {
            d_a,
            d_b,
            w: fwd.w,
            w0: fwd.w0,
            l: inv.l,
            l0: inv.l0,
            a,
            b,
            b_d,
            m_offset,
            op_norm,
            rank: inv.rank,
            oracle_residual: fwd.residual,
        })
    }

    fn check(&self, y: &CorrelatorVector) -> Result<()> {
        if y.y.len() != NUM_CLASSES {
            return Err(Error::Shape("correlator vector must have 10 entries".into()));
        }
        Ok(())
    }

    /// `x̂ = L y + l0`.
    pub fn reconstruct_invariants(&self, y: &CorrelatorVector) -> InvariantVector {
        let x = &self.l * linalg::dvec(&y.y) + &self.l0;
        InvariantVector::from_array(std::array::from_fn(|i| x[i]))
    }

    /// `svec(M̂) = B_d y + m_offset`.
    pub fn svec_mbar(&self, y: &CorrelatorVector) -> [f64; SVEC_LEN] {
        let m = &self.b_d * linalg::dvec(&y.y) + &self.m_offset;
        std::array::from_fn(|i| m[i])
    }

    pub fn estimate_mbar(&self, y: &CorrelatorVector) -> RMatrix {
        unsvec(&self.svec_mbar(y))
    }

    /// `E4` and `Ẽ4 = E4 / ‖B_d‖_op` from correlators.
    pub fn estimate_witness(&self, y: &CorrelatorVector) -> Result<WitnessValue> {
        self.check(y)?;
        let e4 = linalg::sym_lambda_min(&self.estimate_mbar(y));
        Ok(WitnessValue {
            e4,
            e4_tilde: Some(e4 / self.op_norm),
            verdict: Verdict::from_e4(e4, DEFAULT_DECISION_TOL),
        })
    }

    pub fn to_file(&self) -> MapsFile {
        let mat = |m: &RMatrix| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        let vec = |v: &DVector<f64>| v.iter().copied().collect();
        let mut file = MapsFile {
            d_a: self.d_a,
            d_b: self.d_b,
            w: mat(&self.w),
            w0: vec(&self.w0),
            l: mat(&self.l),
            l0: vec(&self.l0),
            a: mat(&self.a),
            b: vec(&self.b),
            b_d: mat(&self.b_d),
            m_offset: vec(&self.m_offset),
            op_norm: self.op_norm,
            rank: self.rank,
            builder_version: BUILDER_VERSION,
            oracle_residual: self.oracle_residual,
            content_hash: String::new(),
        };
        file.content_hash = file.compute_hash();
        file
    }
}

/// Estimate the witness from correlators; see [`InversionMaps::estimate_witness`].
pub fn estimate_witness(y: &CorrelatorVector, maps: &InversionMaps) -> Result<WitnessValue> {
    maps.estimate_witness(y)
}

/// On-disk cache record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapsFile {
    pub d_a: usize,
    pub d_b: usize,
    pub w: Vec<Vec<f64>>,
    pub w0: Vec<f64>,
    pub l: Vec<Vec<f64>>,
    pub l0: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub b_d: Vec<Vec<f64>>,
    pub m_offset: Vec<f64>,
    pub op_norm: f64,
    pub rank: usize,
    pub builder_version: u32,
    pub oracle_residual: f64,
    /// SHA-256 of this record serialized with an empty hash field.
    pub content_hash: String,
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl MapsFile {
    fn compute_hash(&self) -> String {
        let mut unhashed = self.clone();
        unhashed.content_hash.clear();
        let text = serde_json::to_string(&unhashed).expect("serializable");
        to_hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn into_maps(self) -> Result<InversionMaps> {
        if self.builder_version != BUILDER_VERSION {
            return Err(Error::Format(format!(
                "cache built by version {}, expected {BUILDER_VERSION}",
                self.builder_version
            )));
        }
        if self.compute_hash() != self.content_hash {
            return Err(Error::Format("cache content hash mismatch".into()));
        }
        let mat = |rows: &Vec<Vec<f64>>, r: usize, c: usize| -> Result<RMatrix> {
            if rows.len() != r || rows.iter().any(|row| row.len() != c) {
                return Err(Error::Format(format!("expected {r}x{c} matrix in cache")));
            }
            Ok(RMatrix::from_fn(r, c, |i, j| rows[i][j]))
        };
        let vec = |v: &Vec<f64>, n: usize| -> Result<DVector<f64>> {
            if v.len() != n {
                return Err(Error::Format(format!("expected length-{n} vector in cache")));
            }
            Ok(DVector::from_column_slice(v))
        };
        Ok(InversionMaps {
            d_a: self.d_a,
            d_b: self.d_b,
            w: mat(&self.w, NUM_CLASSES, NUM_INVARIANTS)?,
            w0: vec(&self.w0, NUM_CLASSES)?,
            l: mat(&self.l, NUM_INVARIANTS, NUM_CLASSES)?,
            l0: vec(&self.l0, NUM_INVARIANTS)?,
            a: mat(&self.a, SVEC_LEN, NUM_INVARIANTS)?,
            b: vec(&self.b, SVEC_LEN)?,
            b_d: mat(&self.b_d, SVEC_LEN, NUM_CLASSES)?,
            m_offset: vec(&self.m_offset, SVEC_LEN)?,
            op_norm: self.op_norm,
            rank: self.rank,
            oracle_residual: self.oracle_residual,
        })
    }
}

pub fn cache_path(dir: &Path, d_a: usize, d_b: usize) -> PathBuf {
    dir.join(format!("maps-{d_a}x{d_b}-v{BUILDER_VERSION}.json"))
}

/// Cache directory from `REDMOMENT_CACHE_DIR`, if set.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn save_maps(maps: &InversionMaps, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = cache_path(dir, maps.d_a, maps.d_b);
    let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
    std::fs::write(&tmp, serde_json::to_string(&maps.to_file())?)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn load_maps(path: &Path) -> Result<InversionMaps> {
    let text = std::fs::read_to_string(path)?;
    let file: MapsFile = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    file.into_maps()
}

type Slot = Arc<Mutex<Option<Arc<InversionMaps>>>>;

fn registry() -> &'static Mutex<HashMap<(usize, usize), Slot>> {
    static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), Slot>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Process-wide maps for `(d_a, d_b)`: built at most once per dimension pair,
/// read from / written to `cache_dir` when given. A corrupt or stale cache file
/// is rebuilt.
pub fn get_maps(d_a: usize, d_b: usize, cache_dir: Option<&Path>, exec: Execution) -> Result<Arc<InversionMaps>> {
    check_dims(d_a, d_b)?;
    let slot = registry()
        .lock()
        .expect("registry poisoned")
        .entry((d_a, d_b))
        .or_default()
        .clone();
    let mut guard = slot.lock().expect("slot poisoned");
    if let Some(maps) = guard.as_ref() {
        return Ok(maps.clone());
    }
    let cached = cache_dir
        .map(|dir| cache_path(dir, d_a, d_b))
        .filter(|p| p.exists())
        .and_then(|p| load_maps(&p).ok())
        .filter(|m| m.d_a == d_a && m.d_b == d_b);
    let maps = match cached {
        Some(m) => m,
        None => {
            let m = InversionMaps::build(d_a, d_b, exec)?;
            if let Some(dir) = cache_dir {
                save_maps(&m, dir)?;
            }
            m
        }
    };
    let maps = Arc::new(maps);
    *guard = Some(maps.clone());
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::build_mbar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn a_b_reproduce_mbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d_b in 2..=4 {
            let (a, b) = build_a_b(d_b).unwrap();
            for _ in 0..100 {
                let x = InvariantVector::from_array(std::array::from_fn(|_| rng.random::<f64>()));
                let m = build_mbar(&x, d_b).unwrap();
                let direct = svec(&m.entries);
                let lin = &a * linalg::dvec(&x.to_array()) + &b;
                for k in 0..SVEC_LEN {
                    assert!((direct[k] - lin[k]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn offset_and_x5_column() {
        let (a, b) = build_a_b(3).unwrap();
        let nz: Vec<usize> = (0..SVEC_LEN).filter(|&i| b[i] != 0.0).collect();
        assert_eq!(nz, vec![0, 2]);
        assert_eq!(b[0], 2.0);
        assert_eq!(b[2], std::f64::consts::SQRT_2);
        let col: Vec<usize> = (0..SVEC_LEN).filter(|&i| a[(i, X5)] != 0.0).collect();
        assert_eq!(col, vec![3]);
        assert_eq!(a[(3, X5)], -std::f64::consts::SQRT_2);
    }

    #[test]
    fn svec_isometry_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let g = RMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5);
            let x = &g + g.transpose();
            let v = svec(&x);
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            assert!((norm - linalg::frobenius(&x)).abs() < 1e-14);
            assert!((unsvec(&v) - &x).norm() < 1e-14);
        }
    }

    #[test]
    fn dimension_guard() {
        assert!(build_w(7, 2, Execution::Sequential).is_err());
        assert!(build_w(1, 2, Execution::Sequential).is_err());
    }

    #[test]
    fn cache_roundtrip_and_tamper_detection() {
        let maps = InversionMaps::build(2, 2, Execution::Parallel).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = save_maps(&maps, dir.path()).unwrap();
        let back = load_maps(&path).unwrap();
        assert_eq!(back.op_norm, maps.op_norm);
        assert_eq!(back.b_d, maps.b_d);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut file: MapsFile = serde_json::from_str(&text).unwrap();
        file.op_norm *= 2.0;
        assert!(file.into_maps().is_err());
    }
}
