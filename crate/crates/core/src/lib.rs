//! Estimation of single-mode Gaussian states from homodyne phase scans and
//! double-homodyne data.
//!
//! A centred single-mode Gaussian state is described by a squeezing factor
//! `s`, a thermal factor `κ` and a squeezing angle `φ_s`; its quadrature
//! variance at LO phase `ψ` is
//! `V = κ s cos²(ψ − φ_s) + (κ/s) sin²(ψ − φ_s)` in shot-noise units.
//!
//! The model, bounds and estimators are generic over [`Real`] (`f32`, `f64`).
//! Simulation and Monte-Carlo work in `f64`.

pub mod bounds;
pub mod data;
pub mod error;
pub mod estimators;
pub mod io;
pub mod matrix;
pub mod model;
pub mod montecarlo;
pub mod numfmt;
pub mod rng;
pub mod scalar;
pub mod simulator;
pub mod stats;

pub use bounds::BoundVector;
pub use data::{DhdBatch, HomodyneScan, PhaseSampling, ScanConfig};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, Method};
pub use matrix::{SymMatrix2, SymMatrix3};
pub use model::StateParams;
pub use rng::StreamKey;
pub use scalar::Real;

pub type StateParams64 = StateParams<f64>;
pub type StateParams32 = StateParams<f32>;
pub type Scan64 = HomodyneScan<f64>;
pub type Scan32 = HomodyneScan<f32>;
pub type Dhd64 = DhdBatch<f64>;
pub type Matrix3x64 = SymMatrix3<f64>;
pub type Estimate64 = EstimateResult<f64>;
pub type Estimate32 = EstimateResult<f32>;
