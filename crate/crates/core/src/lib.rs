//! Numerical certification of univalence and quasiconformal-extension
//! criteria for the integral operator `G_alpha` on the unit disk.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tree constructors take owned operands, not `self`.
#![allow(clippy::should_implement_trait)]

pub mod criteria;
pub mod dsl;
pub mod error;
pub mod expr;
pub mod extension;
pub mod gauss;
pub mod loewner;
pub mod operators;
pub mod oracle;
pub mod report;

pub use error::{Error, Result};
pub use expr::{AnalyticTriple, ComplexMap, ComplexValue, FunctionExpr};
pub use num_complex::Complex64;
