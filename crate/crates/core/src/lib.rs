//! Simulator for a delayed-choice EPR double-slit experiment with a
//! direction-filtered idler arm.

pub mod cli;
pub mod config;
pub mod correlation;
pub mod elements;
pub mod error;
pub mod geometry;
pub mod mode_space;
pub mod oracle;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/modes.md")]
    pub mod modes {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    pub mod geometry {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    pub mod patterns {}
    #[doc = include_str!("../../../book/src/counting.md")]
    pub mod counting {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
