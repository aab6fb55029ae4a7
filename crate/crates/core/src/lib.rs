//! Optimal dividend payments for an insurance company with two branches
//! that share every claim in fixed proportions.
//!
//! The crate solves the grid-constrained control problem by monotone value
//! iteration ([`solver2d`]), solves the one-dimensional problems that
//! describe strategies on the simultaneous-ruin line and the merged company
//! ([`solver1d`]), and evaluates strategies by Monte Carlo ([`simulate`]).

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hjb2d;
pub mod model;
pub mod quadrature;
pub mod simulate;
pub mod solver1d;
pub mod solver2d;

pub use error::{Error, Result};

/// Guide chapters, compiled so their snippets run as doc-tests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    pub mod scheme {}
    #[doc = include_str!("../../../book/src/regions.md")]
    pub mod regions {}
    #[doc = include_str!("../../../book/src/line.md")]
    pub mod line {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/validation.md")]
    pub mod validation {}
}
