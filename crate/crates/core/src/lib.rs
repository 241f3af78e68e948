//! Bayesian estimation for stochastic volatility in mean (SVM) models, with and without
//! leverage.
//!
//! The measurement error of `log y²` is replaced by a β-dependent 30-component normal
//! mixture ([`mixture`]), which makes the model conditionally linear and Gaussian
//! ([`state_space`]). The samplers in [`samplers`] build on that representation; the exact
//! likelihood is estimated with an auxiliary particle filter ([`particle_filter`]) and
//! combined with a posterior ordinate in [`marglik`].
//!
//! The density layers are generic over [`Real`] (`f32` or `f64`); the samplers and
//! estimators work in `f64`.

pub mod diagnostics;
pub mod error;
pub mod marglik;
pub mod mixture;
pub mod model;
pub mod particle_filter;
pub mod real;
pub mod samplers;
pub mod state_space;

pub use error::{Error, Result};
pub use mixture::{build_grid, MixtureGrid, MixtureTable, DEFAULT_ORDER};
pub use model::{ModelKind, PriorSpec, SvmParams, TransformedData, DEFAULT_OFFSET};
pub use real::Real;
pub use state_space::{LatentPath, SsmSpec};

pub type MixtureGrid64 = MixtureGrid<f64>;
pub type MixtureGrid32 = MixtureGrid<f32>;
pub type SvmParams64 = SvmParams<f64>;
pub type SvmParams32 = SvmParams<f32>;
pub type SsmSpec64 = SsmSpec<f64>;
pub type SsmSpec32 = SsmSpec<f32>;
pub type LatentPath64 = LatentPath<f64>;
pub type TransformedData64 = TransformedData<f64>;
