#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod error;
pub mod expr;
pub mod forms;
pub mod geometry;
pub mod jet;
pub mod maps;
pub mod sampling;
pub mod verify;
pub mod warped;

pub use error::{Error, Result};
pub use expr::{parse, ScalarFieldExpr};
pub use jet::Jet;
