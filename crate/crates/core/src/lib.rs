//! Simulation of the dendritic neural field equation
//!
//! ```text
//! ∂t v = (−γ + ν ∂ξ²) v + G + F(v),   (x, ξ) ∈ 𝕋 × (−Lξ, Lξ)
//! ∂ξ v = 0 at ξ = ±Lξ
//! ```
//!
//! where `F` is a nonlocal synaptic integral over the whole cortex. The crate
//! provides the discretization ([`grid`]), the concrete model functions
//! ([`model`]), FFT and direct evaluation of `F` ([`nonlocal`]), IMEX time
//! stepping ([`stepper`]), closed-form and cosine-spectral reference solutions
//! ([`oracle`]), the profile and ν-sweep studies ([`experiments`]) and the
//! command-line plumbing ([`cli`]).

// `!(a > b)` is used deliberately so that NaN fails validation checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod nonlocal;
pub mod oracle;
pub mod stepper;
pub mod validation;

pub use error::{ConfigError, Error, Result};
pub use exec::Execution;
pub use grid::{build_grid, l2_distance_sq, l2_norm_sq, Field, Grid, GridSpec};
pub use model::{
    ExternalInput, FiringRateSpec, InitialConditionSpec, KernelSpec, ModelSpec,
};
pub use nonlocal::{apply_f, apply_f_direct, periodize_kernel, PeriodicKernelTable};
pub use stepper::{run, DiffusionSolver, SnapshotPolicy, TimeGrid, Trajectory};
