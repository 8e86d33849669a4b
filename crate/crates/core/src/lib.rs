//! An interpreter for a small imperative language whose uncertainty is
//! expressed with ranking functions: each outcome carries a degree of
//! surprise in ℕ ∪ {∞} instead of a probability.

pub mod ast;
pub mod cli;
pub mod engine;
pub mod eval;
mod expr;
pub mod parser;
pub mod ranking;
pub mod value;

pub use expr::{apply, RuntimeError, RuntimeErrorKind};
