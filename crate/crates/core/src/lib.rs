//! Testing whether a transformation `T(X)` keeps everything `X` knows about `Y`.
//!
//! * [`discrete`]: exact KL, mutual information, Bayes and excess risk on finite alphabets.
//! * [`partition`]: the histogram-based test of `Y ⊥ X | T(X)` on samples.
//! * [`bounds`]: excess-risk bounds driven by the information gap.
//! * [`portfolio`]: log-optimal portfolios and the growth lost to degraded side information.
//! * [`synth`]: seeded generators for all of the above.
//! * [`io`], [`mc`], [`select`]: file formats, Monte Carlo experiments and feature selection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod discrete;
pub mod error;
pub mod io;
pub mod mc;
pub mod partition;
pub mod portfolio;
pub mod select;
pub mod synth;

pub use error::{Error, Result};
