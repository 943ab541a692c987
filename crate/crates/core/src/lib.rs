//! Spectral laboratory for the nonlocal diffusion equation with absorption
//! `u_t = J*u - u - u^p` and its heat-equation limits.

pub mod analysis;
pub mod error;
pub mod fundamental;
pub mod grid;
pub mod heat;
pub mod kernel;
pub mod quadrature;
pub mod rescaling;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use kernel::{KernelFamily, KernelSpec, SpectralSymbol};
