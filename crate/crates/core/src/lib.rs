//! Vector-valued Hilbert modular forms over real quadratic fields.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod field;
pub mod lattice;
pub mod linalg;
pub mod modfun;
pub mod pfe;
pub mod poincare;
pub mod rep;
pub mod serial;

pub use error::{Error, Result};
