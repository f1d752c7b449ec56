//! Regularization of linear ill-posed problems through filtered diagonal
//! frame decompositions (DFD).
//!
//! A DFD of a forward operator `K` is a triple `(u, v, kappa)` of two frames
//! and positive quasi-singular values with `K* v_l = kappa_l u_l`. Given noisy
//! data `y`, the filtered reconstruction is
//! `x = sum_l kappa_l g_alpha(kappa_l^2) <y, v_l> dual(u)_l`.
//!
//! Modules:
//! - [`grid`]: periodic grid, FFT, frequency-mask subspaces
//! - [`frames`]: frame analysis/synthesis, bound estimates, dual frames
//! - [`filters`]: regularizing filters and numerical assumption checks
//! - [`source`]: index functions and source sets
//! - [`dfd`]: DFD systems, Picard solutions, filtered reconstructions
//! - [`param`]: a priori and discrepancy parameter choice
//! - [`analysis`]: worst-case lower bounds and coverage of noise levels
//! - [`heat`]: Mittag-Leffler evaluation, Meyer wavelets, heat-type problems
//! - [`bench`]: convergence-rate experiments
//! - [`io`]: binary containers

pub mod error;
pub mod grid;
pub mod frames;
pub mod filters;
pub mod source;
pub mod dfd;
pub mod heat;
pub mod param;
pub mod analysis;
pub mod bench;
pub mod io;

pub use error::{Error, Result};
