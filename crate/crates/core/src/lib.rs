//! Block preconditioners for 2x2 block linear systems: dense kernels,
//! preconditioned GMRES, predicted spectra of block diagonal preconditioners,
//! random-matrix iteration studies and a 1D VEF transport application.
//!
//! The guide in `book/` walks through each layer with runnable examples.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod block;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod krylov;
pub mod spectral;
pub mod vef;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/block-preconditioners.md")]
    mod block_preconditioners {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/vef.md")]
    mod vef {}
}
