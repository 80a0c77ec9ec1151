//! Heights, integral-point counts and predicted asymptotics on wonderful
//! compactifications of split adjoint groups.
//!
//! The combinatorial layer ([`root_data`], [`geometry`]) works for every
//! Cartan type. Heights, enumeration and local integrals are implemented for
//! PGL_n over ℚ, where a point is a primitive integer matrix up to sign.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod enumeration;
pub mod error;
pub mod geometry;
pub mod heights;
pub mod local_integrals;
pub mod primes;
pub mod root_data;

pub use error::{Error, Result};
