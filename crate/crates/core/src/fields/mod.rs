//! Charts, evaluable fields and sampled curves.

mod chart;
pub mod expr;
mod curve;
mod field;

pub use chart::*;
pub use curve::{lifted_winding, Curve, CurveError, CurveSample};
pub use expr::{Expr, ParseError};
pub use field::{finite_diff_jet, FieldError, Jet, OneFormField, ScalarField, SymTensorField};
