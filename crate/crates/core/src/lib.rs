//! Meshfree collocation of second-order elliptic Dirichlet problems on the box
//! `[-1, 1]^d` with Matérn kernels.
//!
//! The solution is sought in the span of kernel translates at trial centres
//! `X`. The operator is collocated at interior nodes `Y` and the boundary data
//! at nodes `Z`, with more nodes than centres, and the overdetermined system
//! is solved in a weighted least-squares sense. Boundary rows are scaled by
//! `h_X^(-3/2)`.
//!
//! [`experiments`] drives convergence sweeps over the benchmark problems, and
//! [`stability`] checks the norm equivalences behind the error bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod pde;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
