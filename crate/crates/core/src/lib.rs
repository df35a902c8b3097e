//! Diffuse-interface two-phase flow about an equilibrium phase profile.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod operators;
pub mod params;
pub mod picard;
pub mod scenarios;
pub mod snapshot;
pub mod solvers;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
