//! Numerical laboratory for Witten's deformation of the de Rham complex.
//!
//! The pipeline is: build a discretized compact manifold ([`complex`]),
//! pick a Morse function and locate its critical points ([`morse`]),
//! conjugate the coboundaries by `e^{f/t}` and solve for the low spectrum of
//! the deformed Hodge Laplacian ([`witten`]), then compare the rescaled
//! eigenvalues `t·λ` against the harmonic-oscillator limit ([`oracle`]).
//! [`foliation`] runs the same machinery leaf by leaf on Kronecker
//! foliations of the 2-torus and integrates it against the transverse
//! measure.

pub mod complex;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod foliation;
pub mod io;
pub mod morse;
pub mod oracle;
pub mod sparse;
pub mod witten;

pub use error::{Error, Result};
pub use exec::Execution;
