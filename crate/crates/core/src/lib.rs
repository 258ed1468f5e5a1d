#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Generalized F-norms on modular function spaces, the finite-rank
//! approximation of the identity on compact families of step functions,
//! rearrangement machinery for symmetric spaces, and approximate fixed
//! points of compact self-maps.

pub mod error;
pub mod measure;
pub mod modular;
pub mod fnorm;
pub mod approximation;
pub mod symmetric;
pub mod io;
pub mod fixed_point;
pub mod random;
pub mod cli;

pub use error::{Error, Result};
