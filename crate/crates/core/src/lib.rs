//! Truncated convolution operators on `[0,1]`.
//!
//! Operators `C_mu f = (f * mu)|[0,1]` are realized as lower-triangular
//! Toeplitz kernels on a uniform grid. The crate covers the symbol algebra of
//! measures, fractional integration `V^z`, operator exponentials and
//! logarithms, commutators with multiplication by the argument, orbit-norm
//! asymptotics of `T^n f`, and Fourier-side support diagnostics.

pub mod analytic;
pub mod cli;
pub mod conv;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod measure;
pub mod orbit;
pub mod poly;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{FunctionSpec, GridFunction, NormKind};
pub use kernel::{Kernel, RlOrder};
pub use measure::Measure;
pub use scalar::C64;
