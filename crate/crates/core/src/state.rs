//! Bipartite density matrices, partial operations and the benchmark families.
//!
//! Composite indices follow `idx(i_a, i_b) = i_a * d_b + i_b` everywhere in the
//! crate, including the outcome tables produced by the protocol simulator.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, C64};

/// Tolerance used by every state validation (Hermiticity, trace, PSD).
pub const STATE_TOL: f64 = 1e-10;

/// Which subsystem an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A bipartite state on `C^{d_a} ⊗ C^{d_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d_a: usize,
    d_b: usize,
    entries: CMatrix,
}

/// A single-party state, typically a marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalState {
    dim: usize,
    entries: CMatrix,
}

fn check_hermitian_trace(entries: &CMatrix) -> Result<()> {
    let dev = linalg::hermitian_deviation(entries);
    if dev > STATE_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let tr = linalg::trace(entries);
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidTrace(tr.re));
    }
    Ok(())
}

fn check_psd(entries: &CMatrix) -> Result<()> {
    let min = linalg::spectrum(entries)?[0];
    if min < -STATE_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

impl DensityMatrix {
    /// Validates shape, Hermiticity, unit trace and positivity.
    pub fn new(d_a: usize, d_b: usize, entries: CMatrix) -> Result<Self> {
        let state = Self::new_unchecked_psd(d_a, d_b, entries)?;
        check_psd(&state.entries)?;
        Ok(state)
    }

    /// Like [`DensityMatrix::new`] but skips the eigensolve. Used for partial
    /// transposes and for families that are PSD by construction.
    pub fn new_unchecked_psd(d_a: usize, d_b: usize, entries: CMatrix) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::Parameter("subsystem dimensions must be positive".into()));
        }
        let n = d_a * d_b;
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Shape(format!(
                "expected {n}x{n} for d_a={d_a}, d_b={d_b}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        check_hermitian_trace(&entries)?;
        Ok(Self { d_a, d_b, entries })
    }

    /// Builds `|ψ⟩⟨ψ|` from an (unnormalized) vector.
    pub fn pure(d_a: usize, d_b: usize, psi: &[C64]) -> Result<Self> {
        if psi.len() != d_a * d_b {
            return Err(Error::Shape(format!("state vector length {} != {}", psi.len(), d_a * d_b)));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::Parameter("zero state vector".into()));
        }
        let n = psi.len();
        let entries = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2);
        Self::new_unchecked_psd(d_a, d_b, entries)
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(a: &LocalState, b: &LocalState) -> Self {
        Self {
            d_a: a.dim,
            d_b: b.dim,
            entries: linalg::kron(&a.entries, &b.entries),
        }
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Parameter("empty mixture".into()))?
            .1;
        let (d_a, d_b) = first.dims();
        let n = d_a * d_b;
        let mut entries = CMatrix::zeros(n, n);
        let mut total = 0.0;
        for &(w, rho) in parts {
            if rho.dims() != (d_a, d_b) {
                return Err(Error::Shape("mixture components have different dimensions".into()));
            }
            if w < 0.0 {
                return Err(Error::Parameter(format!("negative mixture weight {w}")));
            }
            total += w;
            entries += rho.entries.scale(w);
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::Parameter(format!("mixture weights sum to {total}")));
        }
        Self::new_unchecked_psd(d_a, d_b, entries)
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    /// Total dimension `d_a * d_b`.
    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn index(&self, i_a: usize, i_b: usize) -> usize {
        i_a * self.d_b + i_b
    }

    pub fn partial_trace(&self, over: Subsystem) -> LocalState {
        let entries = partial_trace_operator(&self.entries, self.d_a, self.d_b, over);
        let dim = entries.nrows();
        LocalState { dim, entries }
    }

    /// `ρ_A = Tr_B ρ`.
    pub fn marginal_a(&self) -> LocalState {
        self.partial_trace(Subsystem::B)
    }

    /// `ρ_B = Tr_A ρ`.
    pub fn marginal_b(&self) -> LocalState {
        self.partial_trace(Subsystem::A)
    }

    /// Transpose on subsystem A. The result is Hermitian with unit trace but
    /// need not be positive.
    pub fn partial_transpose(&self) -> DensityMatrix {
        let (d_a, d_b) = self.dims();
        let n = self.dim();
        let m = &self.entries;
        let entries = CMatrix::from_fn(n, n, |r, col| {
            let (i, k) = (r / d_b, r % d_b);
            let (j, l) = (col / d_b, col % d_b);
            m[(j * d_b + k, i * d_b + l)]
        });
        DensityMatrix { d_a, d_b, entries }
    }

    /// Relabels the parties: the returned state lives on `B ⊗ A`.
    pub fn swap_subsystems(&self) -> DensityMatrix {
        let (d_a, d_b) = self.dims();
        let n = self.dim();
        let m = &self.entries;
        let entries = CMatrix::from_fn(n, n, |r, col| {
            let (rb, ra) = (r / d_a, r % d_a);
            let (cb, ca) = (col / d_a, col % d_a);
            m[(ra * d_b + rb, ca * d_b + cb)]
        });
        DensityMatrix { d_a: d_b, d_b: d_a, entries }
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::spectrum(&self.entries).expect("density matrix is Hermitian")
    }

    pub fn to_file(&self) -> StateFile {
        let n = self.dim();
        StateFile {
            d_a: self.d_a,
            d_b: self.d_b,
            re: (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)].im).collect()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_state()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }
}

impl LocalState {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Shape("local state must be square and non-empty".into()));
        }
        check_hermitian_trace(&entries)?;
        check_psd(&entries)?;
        Ok(Self { dim: entries.nrows(), entries })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || norm2 <= 0.0 {
            return Err(Error::Parameter("zero state vector".into()));
        }
        let n = psi.len();
        Ok(Self {
            dim: n,
            entries: CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { dim, entries: CMatrix::identity(dim, dim).scale(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// `Tr(σ^k)` via repeated products.
    pub fn moment(&self, k: u32) -> f64 {
        let mut p = self.entries.clone();
        for _ in 1..k {
            p = &p * &self.entries;
        }
        linalg::trace(&p).re
    }

    pub fn transpose(&self) -> LocalState {
        LocalState { dim: self.dim, entries: self.entries.transpose() }
    }
}

/// Partial trace of an arbitrary operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace_operator(m: &CMatrix, d_a: usize, d_b: usize, over: Subsystem) -> CMatrix {
    match over {
        Subsystem::B => CMatrix::from_fn(d_a, d_a, |i, j| {
            (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
        }),
        Subsystem::A => CMatrix::from_fn(d_b, d_b, |i, j| {
            (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()
        }),
    }
}

/// JSON state file: `{ "d_a", "d_b", "re", "im" }`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub d_a: usize,
    pub d_b: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn into_state(self) -> Result<DensityMatrix> {
        let n = self.d_a * self.d_b;
        if n == 0 {
            return Err(Error::Parameter("subsystem dimensions must be positive".into()));
        }
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::Shape(format!("re/im must both be {n}x{n}")));
        }
        let entries = CMatrix::from_fn(n, n, |i, j| c(self.re[i][j], self.im[i][j]));
        DensityMatrix::new(self.d_a, self.d_b, entries)
    }
}

/// Named state families used as benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    /// `|Φ_d⟩⟨Φ_d|`, `|Φ_d⟩ = d^{-1/2} Σ_j |jj⟩`.
    MaxEntangled { d: usize },
    /// `p |Φ_d⟩⟨Φ_d| + (1 - p) I / d²`.
    Isotropic { d: usize, p: f64 },
    /// `(1 - p)|00⟩⟨00| + p |ψ_x⟩⟨ψ_x|`, `|ψ_x⟩ = √x|01⟩ + √(1-x)|10⟩`.
    BiasedTwoQubit { x: f64, p: f64 },
    MaximallyMixed { d_a: usize, d_b: usize },
    /// `|00⟩⟨00|`.
    ProductPure { d_a: usize, d_b: usize },
    Custom(Box<DensityMatrix>),
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(Error::Parameter(format!("{name}={v} outside [0, 1]")));
    }
    Ok(())
}

fn check_dim(name: &str, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Parameter(format!("{name}={d} must be at least 2")));
    }
    Ok(())
}

impl FamilyParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilyParams::MaxEntangled { d } => check_dim("d", d),
            FamilyParams::Isotropic { d, p } => {
                check_dim("d", d)?;
                check_unit("p", p)
            }
            FamilyParams::BiasedTwoQubit { x, p } => {
                check_unit("x", x)?;
                check_unit("p", p)
            }
            FamilyParams::MaximallyMixed { d_a, d_b } | FamilyParams::ProductPure { d_a, d_b } => {
                check_dim("d_a", d_a)?;
                check_dim("d_b", d_b)
            }
            FamilyParams::Custom(_) => Ok(()),
        }
    }

    /// Same family with the sweep parameter `p` replaced; `None` for families
    /// without one.
    pub fn with_p(&self, p: f64) -> Option<FamilyParams> {
        match *self {
            FamilyParams::Isotropic { d, .. } => Some(FamilyParams::Isotropic { d, p }),
            FamilyParams::BiasedTwoQubit { x, .. } => Some(FamilyParams::BiasedTwoQubit { x, p }),
            _ => None,
        }
    }
}

fn phi_d(d: usize) -> Vec<C64> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = vec![c(0.0, 0.0); d * d];
    for j in 0..d {
        v[j * d + j] = c(amp, 0.0);
    }
    v
}

/// Builds the exact state of a family. Analytic families skip the PSD eigensolve.
pub fn make_state(params: &FamilyParams) -> Result<DensityMatrix> {
    params.validate()?;
    match *params {
        FamilyParams::MaxEntangled { d } => DensityMatrix::pure(d, d, &phi_d(d)),
        FamilyParams::Isotropic { d, p } => {
            let n = d * d;
            let phi = phi_d(d);
            let noise = (1.0 - p) / n as f64;
            let entries = CMatrix::from_fn(n, n, |i, j| {
                let mut v = phi[i] * phi[j].conj() * p;
                if i == j {
                    v += c(noise, 0.0);
                }
                v
            });
            DensityMatrix::new_unchecked_psd(d, d, entries)
        }
        FamilyParams::BiasedTwoQubit { x, p } => {
            let mut psi = [c(0.0, 0.0); 4];
            psi[1] = c(x.sqrt(), 0.0);
            psi[2] = c((1.0 - x).sqrt(), 0.0);
            let mut entries = CMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj() * p);
            entries[(0, 0)] += c(1.0 - p, 0.0);
            DensityMatrix::new_unchecked_psd(2, 2, entries)
        }
        FamilyParams::MaximallyMixed { d_a, d_b } => {
            let n = d_a * d_b;
            DensityMatrix::new_unchecked_psd(d_a, d_b, CMatrix::identity(n, n).scale(1.0 / n as f64))
        }
        FamilyParams::ProductPure { d_a, d_b } => {
            let mut psi = vec![c(0.0, 0.0); d_a * d_b];
            psi[0] = c(1.0, 0.0);
            DensityMatrix::pure(d_a, d_b, &psi)
        }
        FamilyParams::Custom(ref rho) => Ok((**rho).clone()),
    }
}

/// Swap operator `F|ij⟩ = |ji⟩` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let n = d * d;
    CMatrix::from_fn(n, n, |r, col| {
        let (i, j) = (r / d, r % d);
        if col == j * d + i {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

impl fmt::Display for FamilyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyParams::MaxEntangled { d } => write!(f, "mes:d={d}"),
            FamilyParams::Isotropic { d, p } => write!(f, "iso:d={d},p={p}"),
            FamilyParams::BiasedTwoQubit { x, p } => write!(f, "biased:x={x},p={p}"),
            FamilyParams::MaximallyMixed { d_a, d_b } => write!(f, "mixed:da={d_a},db={d_b}"),
            FamilyParams::ProductPure { d_a, d_b } => write!(f, "product:da={d_a},db={d_b}"),
            FamilyParams::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Parses the family mini-language `name[:key=val,...]`.
///
/// ```text
/// mes:d=<int>            iso:d=<int>,p=<real>       biased:x=<real>,p=<real>
/// mixed:d=<int>          mixed:da=<int>,db=<int>
/// product                product:d=<int> | product:da=<int>,db=<int>
/// ```
impl FromStr for FamilyParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut kv: Vec<(String, String)> = Vec::new();
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Parameter(format!("expected key=value, got '{item}'")))?;
                let k = k.trim().to_string();
                if kv.iter().any(|(existing, _)| *existing == k) {
                    return Err(Error::Parameter(format!("duplicate key '{k}'")));
                }
                kv.push((k, v.trim().to_string()));
            }
        }
        let allowed: &[&str] = match name {
            "mes" => &["d"],
            "iso" => &["d", "p"],
            "biased" => &["x", "p"],
            "mixed" | "product" => &["d", "da", "db"],
            _ => return Err(Error::Parameter(format!("unknown family '{name}'"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Parameter(format!("unknown key '{k}' for family '{name}'")));
        }
        let get = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let int = |k: &str| -> Result<Option<usize>> {
            get(k)
                .map(|v| v.parse::<usize>().map_err(|_| Error::Parameter(format!("{k}='{v}' is not an integer"))))
                .transpose()
        };
        let real = |k: &str| -> Result<f64> {
            let v = get(k).ok_or_else(|| Error::Parameter(format!("missing key '{k}'")))?;
            v.parse::<f64>().map_err(|_| Error::Parameter(format!("{k}='{v}' is not a number")))
        };
        let need_int = |k: &str| -> Result<usize> {
            int(k)?.ok_or_else(|| Error::Parameter(format!("missing key '{k}'")))
        };
        let pair = |default: usize| -> Result<(usize, usize)> {
            match (int("d")?, int("da")?, int("db")?) {
                (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                    Err(Error::Parameter("use either d or da/db".into()))
                }
                (Some(d), None, None) => Ok((d, d)),
                (None, da, db) => Ok((da.unwrap_or(default), db.unwrap_or(default))),
            }
        };
        let params = match name {
            "mes" => FamilyParams::MaxEntangled { d: need_int("d")? },
            "iso" => FamilyParams::Isotropic { d: need_int("d")?, p: real("p")? },
            "biased" => FamilyParams::BiasedTwoQubit { x: real("x")?, p: real("p")? },
            "mixed" => {
                let (d_a, d_b) = pair(2)?;
                FamilyParams::MaximallyMixed { d_a, d_b }
            }
            "product" => {
                let (d_a, d_b) = pair(2)?;
                FamilyParams::ProductPure { d_a, d_b }
            }
            _ => unreachable!(),
        };
        params.validate()?;
        Ok(params)
    }
}
