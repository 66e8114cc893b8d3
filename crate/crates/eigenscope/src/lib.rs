//! Entropic uncertainty certificates for quantized hyperbolic maps.
//!
//! The crate has three layers:
//!
//! * [`hilbert`] - dense complex linear algebra on finite-dimensional state
//!   spaces: operator handles, norms, spectral decomposition of unitaries,
//!   and a small binary interchange format for matrices and vectors.
//! * [`eup`] - entropies, weighted pressures, weighted `l_p` norms and their
//!   duality, and the uncertainty certificate that lower-bounds the pressure
//!   sum of a state and its image under a unitary.
//! * [`catmap`] + [`refine`] - the concrete dynamical system the certificate
//!   is exercised on: quantized hyperbolic torus automorphisms, smooth strip
//!   partitions, dynamically refined partitions with weight tables, and the
//!   experiment drivers behind the `eigenscope` binary.
//!
//! Most capabilities have a runnable demonstration under `examples/`; the
//! thin `eigenscope` binary exposes the same experiment drivers behind a
//! line-oriented config format for batch runs.

pub mod catmap;
pub mod cli;
pub mod error;
pub mod eup;
pub mod hilbert;
pub mod pilot;
pub mod refine;
pub mod rng;

mod lapack;
mod linalg;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
