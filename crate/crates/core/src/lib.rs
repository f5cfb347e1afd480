//! Quenched dynamics of the fully-connected LMG spin model through the Krylov
//! subspace method.
//!
//! The library builds the collective-spin Hamiltonian in both spin eigenbases,
//! tridiagonalizes it with a fully reorthogonalized Lanczos iteration, and
//! evolves the quench state exactly by spectral decomposition. On top of that
//! sit the observables of interest (survival-probability rate function, spread
//! complexity, Krylov entropy, spin expectations), rate-function singularity
//! detection, metastability diagnostics, and deterministic parameter sweeps.
//!
//! Conventions: operators are stored in units of `J` (the matrices represent
//! `H/J`), times are `Jt`, and the basis index `k = 0..N` labels the spin
//! eigenstate `|S - k>` with `S = N/2`.

pub mod analysis;
pub mod dd;
pub mod error;
pub mod export;
pub mod krylov;
pub mod linalg;
pub mod propagator;
pub mod spin_model;

pub use error::{Error, Result};
pub use krylov::{lanczos, KrylovDecomposition, LanczosOptions, TridiagonalHamiltonian};
pub use propagator::{simulate, ObservableSeries, SimulateOptions, TimeGrid};
pub use spin_model::{Basis, ModelParams, StateVector};
