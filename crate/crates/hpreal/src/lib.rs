//! Extended-precision real arithmetic.
//!
//! [`HPReal`] is a binary floating-point number whose working precision is
//! chosen at run time in decimal digits (default 50). Every value carries its
//! own precision; there is no global precision state. Arithmetic is correctly
//! rounded (round-half-even); the elementary functions are evaluated with
//! guard digits and rounded back.
//!
//! [`Real`] abstracts over `f64` and [`HPReal`] so numerical code can run in
//! either machine or extended precision.

mod elem;
mod error;
mod format;
mod hp;
mod real;

pub use elem::ElemFn;
pub use error::HpError;
pub use hp::{ArithOp, HPReal, PrecisionConfig};
pub use real::Real;
