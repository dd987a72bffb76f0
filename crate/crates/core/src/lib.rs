//! Rank-one unit-modulus measurement operators for low-rank matrix sensing.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure computation:
//!
//! - [`measurements`]: the linear map `A(X)_k = u_k^H X v_k / sqrt(K)` for phase-only
//!   rank-one ensembles, the dense complex-Gaussian baseline, adjoints and Gram matrices.
//! - [`moments`]: exact abelian-square combinatorics, all-ones moment majorants and
//!   Monte Carlo moment estimation.
//! - [`tailbounds`]: Chernoff upper/lower tail bounds with an optimized parameter and
//!   empirical tail/concentration measurements.
//! - [`recovery`]: nuclear-norm splitting, alternating minimization and factored
//!   Wirtinger gradient descent, plus the phase-transition sweep.
//!
//! Floating-point transcendental functions come from `libm` so results do not depend on
//! the host math library. Work that can be fanned out takes an [`Executor`]; every
//! parallel unit draws from its own [`RngStream`], so outputs never depend on the
//! executor's worker count.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod linalg;
pub mod measurements;
pub mod moments;
pub mod recovery;
pub mod rng;
pub mod tailbounds;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use measurements::{EnsembleKind, GaussianEnsemble, MeasurementEnsemble, UnitModulusEnsemble};
pub use rng::RngStream;

pub use num_complex::Complex64;
