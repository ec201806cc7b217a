//! Curvature toolkit for spherically symmetric Finsler metrics
//! `F = |y| φ(|x|, ⟨x, y⟩/|y|)`.
//!
//! * [`jet`]: truncated Taylor arithmetic used for every derivative.
//! * [`catalog`]: closed-form profiles `φ(r, s)` and the lift to `F(x, y)`.
//! * [`curvature`]: reduced curvature quantities computed from `φ` alone.
//! * [`oracle`]: first-principles curvature computed from `F` via its spray.
//! * [`verify`]: grid checks of the constant Ricci / flag curvature systems.
//! * [`cli`]: the `ssfinsler` command-line front end.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod jet;
pub mod oracle;
pub mod verify;

pub use catalog::{eval_f_jet, eval_phi, list_catalog, Family, MetricSpec, PointSample};
pub use error::{Error, Result};
pub use jet::{ComplexJet2, Jet, Jet2, JetN};
