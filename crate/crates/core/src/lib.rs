//! Numerical toolkit for charges on dyadic cubes: Haar and Faber–Schauder
//! transforms, the dyadic sewing lemma and Young integral, gauge integrals,
//! fractional Brownian sheets and Hölder diagnostics.
//!
//! Containers that hold cube or grid data are generic over [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.

pub mod charge;
pub mod dyadic;
pub mod error;
pub mod gauge;
pub mod holder;
pub mod io;
pub mod scalar;
pub mod stochastic;
pub mod young;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type VertexField64 = dyadic::VertexField<f64>;
pub type CellField64 = dyadic::CellField<f64>;
pub type CubeCharge64 = charge::CubeCharge<f64>;
pub type FaberCoeffs64 = charge::FaberCoeffs<f64>;
pub type VertexField32 = dyadic::VertexField<f32>;
pub type CubeCharge32 = charge::CubeCharge<f32>;

/// Version string embedded in every serialized artifact.
pub const TOOL_VERSION: &str = concat!("charges ", env!("CARGO_PKG_VERSION"));
