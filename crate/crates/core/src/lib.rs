//! Eigenvalue asymptotics for the Dirichlet Laplacian in thin planar strips.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod linalg;
pub mod profile;
pub mod schrodinger1d;
pub mod strip2d;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use profile::WidthProfile;
