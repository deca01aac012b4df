//! Anisotropic space-time prism meshes.
//!
//! The crate builds partitions of `(0, T) x Omega` into prisms `I x S`, refines
//! them while keeping every time slice conforming and the time direction
//! 1-irregular, and provides continuous Lagrange spaces with hanging nodes,
//! quasi-interpolation, moduli of smoothness and an adaptive driver.

// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod besov;
pub mod cli;
pub mod config;
pub mod dyadic;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod ids;
pub mod mesh;
pub mod nodes;
pub mod polyapprox;
pub mod refine;

pub use error::{Error, Result};
