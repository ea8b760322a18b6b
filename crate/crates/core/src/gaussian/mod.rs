//! Gaussian-state representation and the exact combinatorial kernels.
//!
//! Everything downstream (circuit evolution, sampling, MPS construction,
//! validation likelihoods) is built on the types and functions here. See the
//! crate-level docs for the quadrature conventions.

mod fock;
mod hafnian;
mod state;
mod torontonian;
mod williamson;

pub use fock::{fock_amplitude, husimi_q, pure_pair_matrix, pure_statevector};
pub use hafnian::hafnian;
pub use state::{apply_transfer, real_embedding, squeezed_vacuum, GaussianState, SqueezerBank};
pub use torontonian::{click_probability, o_matrix, torontonian, ClickKernel};
pub use williamson::{symplectic_form, williamson, WilliamsonFactor};
