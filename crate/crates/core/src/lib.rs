//! Third-order reduction-moment entanglement witness.
//!
//! The witness is `E4 = λ_min(M̄(ρ))`, the smallest eigenvalue of a 4×4 real
//! symmetric matrix built from nine locally measurable second- and third-order
//! invariants. Separable states always give `E4 ≥ 0`.
//!
//! The crate covers both routes to `E4`:
//!
//! * the exact path, from a density matrix ([`invariants`], [`moment`]);
//! * the protocol path, from simulated local randomized measurements
//!   ([`protocol`]) inverted to invariants ([`inversion`]) and certified with a
//!   Chebyshev bound ([`certification`]).
//!
//! Work that fans out over settings, states or parameter grids runs on rayon
//! when the `parallel` feature (default) is enabled; see [`exec`].

pub mod certification;
pub mod error;
pub mod exec;
pub mod invariants;
pub mod inversion;
pub mod linalg;
pub mod moment;
pub mod protocol;
pub mod state;
pub mod testkit;

pub use error::{Error, Result};
pub use exec::Execution;
pub use invariants::{compute_invariants, isotropic_invariants, InvariantVector};
pub use inversion::{get_maps, InversionMaps};
pub use moment::{build_mbar, witness, MomentMatrix, WitnessValue};
pub use state::{make_state, DensityMatrix, FamilyParams, LocalState};
