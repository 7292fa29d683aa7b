//! Spectral simulation and statistical verification for Gibbs measures of the
//! radial defocusing nonlinear Schrödinger equation on the unit disc, together
//! with the exact zonal coupling-coefficient machinery on the three-sphere.
//!
//! The crate is organised around five pillars:
//!
//! * [`bessel`] — the Dirichlet eigenbasis of the disc (Bessel `J0` zeros,
//!   normalised eigenfunctions, Gauss–Legendre disc quadrature);
//! * [`nonlinearity`] — gauge-invariant potentials `V(z) = G(|z|^2)` with
//!   machine-checkable growth and defocusing conditions;
//! * [`measure`] and [`tails`] — samplers for the free and Gibbs measures and
//!   empirical verification of the sub-Gaussian / chi-square / Sobolev tail
//!   bounds and of the `L^1` convergence of the truncated potential energy;
//! * [`dynamics`] and [`invariance`] — the exact-in-space Galerkin flow with a
//!   conservative implicit-midpoint integrator, Liouville diagnostics, and the
//!   Monte Carlo invariance experiment with weighted two-sample statistics;
//! * [`sphere`] — the zonal basis on `S^3`, the integer-valued quadrilinear
//!   coefficient tensor, the lattice sums behind the Wiener-chaos moment
//!   estimates, and the second Picard iterate of the cubic problem.
//!
//! All Monte Carlo paths draw from counter-based random streams keyed by
//! `(master_seed, sample_index, mode_index)`, so ensembles are bit-identical
//! regardless of worker count. Data-parallel loops run on rayon when the
//! default `parallel` feature is enabled and fall back to sequential iteration
//! otherwise.

pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod invariance;
pub mod measure;
pub mod nonlinearity;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};
