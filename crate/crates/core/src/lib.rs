//! Numerical diagnostics for Sobolev-type embeddings into weighted `L^q`
//! spaces on metric measure spaces.
//!
//! The crate is organised around a [`space::SpaceModel`] (metric, domain and
//! named measures with ball-measure oracles). On top of it sit ball
//! coverings with overlap certificates ([`covering`]), doubling and
//! dimension-exponent fits ([`doubling`]), the local Poincaré constant scan
//! and embedding classification ([`criteria`]), discrete Poincaré checks
//! ([`poincare`]) and end-to-end worked scenarios ([`scenarios`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod numerics;
pub mod space;

pub use error::{Error, Result};
pub mod covering;
pub mod criteria;
pub mod doubling;
pub mod cli;
pub mod poincare;
pub mod scenarios;
