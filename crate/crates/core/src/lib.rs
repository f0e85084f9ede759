//! Open two-level-atom dynamics under homodyne detection with instantaneous
//! Markovian feedback: stochastic trajectories of the photocurrents and the
//! homodyne spectrum of the free fluorescence channel.
//!
//! Module map:
//! - [`qops`]: 2×2 operator algebra, superoperators, matrix exponential
//! - [`model`]: parameters, generators with and without feedback, the
//!   Bloch-drift matrix and the equilibrium state
//! - [`trajectories`]: stochastic master equations, seeded ensembles
//! - [`spectrum`]: closed-form and Monte Carlo homodyne spectra
//! - [`control`]: objectives and Nelder–Mead tuning of control parameters
//! - [`config`]: key-value run configuration and figure presets
//! - [`validate`]: the fast invariant suite

pub mod config;
pub mod control;
mod error;
pub mod exec;
pub mod io;
pub mod model;
pub mod qops;
pub mod rng;
pub mod spectrum;
pub mod trajectories;
pub mod validate;

pub use error::{Error, Result};

/// Library version, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use model::PhysParams;
pub use qops::{BlochVec, Op2, State2, Superop};
