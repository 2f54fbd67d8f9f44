//! Time-varying reduced-rank vector autoregression.
//!
//! This crate fits a VAR model whose coefficient matrix changes at every
//! time step, `s_t = A_t z_t + eps_t`, with the stack of coefficient
//! matrices compressed through a Tucker factorization
//! `A_t = W G (x_t' ⊗ V)'`. Fitting is alternating minimization: closed-form
//! ridge-stabilized least squares for the spatial factor `W`, the core
//! unfolding `G` and the temporal rows `x_t`, and a matrix-free conjugate
//! gradient solve of a generalized Sylvester equation for the lagged factor
//! `V`. The factors expose interpretable spatial and temporal modes.
//!
//! Also included: dense kernels that exploit Kronecker structure without
//! materializing Kronecker products, CSV/binary ingestion, synthetic data
//! generators with known ground truth, an exact DMD baseline, and a
//! self-contained evaluation suite (`eval`) with independent reference
//! oracles (`oracle`).

pub mod analysis;
pub mod dataset;
pub mod dmd;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod oracle;
mod par;
pub mod tvvar;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;

pub use dataset::{LagPairs, SynthKind, SynthSpec, TimeSeriesMatrix};
pub use dmd::DmdResult;
pub use tvvar::{FactorSet, FitConfig, FitReport};
