//! Desk-scale classical laboratory for lossy Gaussian boson sampling.
//!
//! The crate covers the whole classical pipeline around a threshold-detector
//! GBS experiment:
//!
//! - [`gaussian`] — covariance-matrix states, symplectic transformations, and
//!   the exact combinatorial kernels (hafnian, torontonian, Fock amplitudes);
//! - [`circuit`] — unrolling a spatial-temporal loop circuit into an explicit
//!   transfer matrix over time-bin-expanded modes;
//! - [`samplers`] — the ground-truth sampler and the classical mockups it is
//!   validated against (squashed, thermal, distinguishable, IPS, greedy);
//! - [`mps`] — covariance splitting, entanglement spectra, MPS construction
//!   with truncation tracking, and displaced-MPS sampling;
//! - [`validation`] — click-number distributions, Bayesian scoring, and
//!   correlation benchmarking;
//! - [`cost`] — bond-dimension extrapolation and classical-runtime estimates.
//!
//! # Conventions
//!
//! All quadrature-space objects follow one set of conventions, fixed here and
//! relied on everywhere else:
//!
//! - Quadrature ordering is `x_1..x_M, p_1..p_M` ("xxpp"); the symplectic form
//!   is `Ω = [[0, I], [-I, 0]]`.
//! - The vacuum covariance is the identity (`x = a + a†`, `p = -i(a - a†)`),
//!   so a loss channel of transmission η acts as `V → ηV + (1-η)I` and a pure
//!   state has all Williamson eigenvalues equal to 1.
//! - A single-mode squeezed vacuum with parameter `r` and phase 0 has
//!   covariance `diag(e^{-2r}, e^{+2r})`; its mean photon number is `sinh²r`.
//! - Displacement by a mean-vector `m` (quadratures) corresponds to the
//!   coherent amplitude `α = (m_x + i m_p)/2` per mode, i.e. `⟨x⟩ = 2 Re α`.
//! - A classical Gaussian mixture of coherent states whose quadrature means
//!   have covariance `C` produces the state `V = I + C`. Consequently the
//!   classical part `W` of a covariance split `V = V_p + W` is sampled as
//!   quadrature-mean displacements with covariance exactly `W`.
//! - Physicality tolerances: eigenvalue checks at `1e-9` absolute,
//!   reconstruction round-trips at `1e-8` relative.

pub mod circuit;
pub mod cost;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod mps;
pub mod rng;
pub mod samplers;
pub mod validation;

pub use error::{GbsError, Result};
