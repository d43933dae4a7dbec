#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;

pub use error::{Error, Result};
pub mod elastic;
pub mod energy;
pub mod linalg;
pub mod fem;
pub mod singularity;
pub mod dual;
pub mod crack_search;
pub mod quasistatic;
pub mod poincare;
pub mod config;
pub mod runner;
