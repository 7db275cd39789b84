//! Pseudospectral tools for solitary waves of the generalized 2D Shrira
//! equation `u_t - H Δu + (f(u))_x = 0` on a periodic box.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decay;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod solver;

pub use error::{Error, History, Result};
pub use grid::{DealiasRule, Field, Grid, Spectrum};
