//! Differential algebra on the jet space of one independent and one
//! dependent variable: canonical rational expressions, total derivatives and
//! the Euler operator, differential operators and their Jacobi identity,
//! operator families, changes of variables and the momentum problem.

pub mod error;
pub mod expr;
pub mod files;

pub use error::{Error, Result};
pub use expr::{Expr, RatFn};
pub mod catalog;
pub mod diffop;
pub mod jetcalc;
pub mod momentum;
pub mod transform;

pub use diffop::DiffOp;
