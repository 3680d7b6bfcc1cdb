// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod power;
pub mod rng;
pub mod stats;
