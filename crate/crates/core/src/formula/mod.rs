mod design;
mod expr;
mod parse;

pub use design::{build_design, DesignMatrix, DesignPoints};
pub use expr::{BinOp, Expr, Func};
pub use parse::{parse_formula, Factor, Formula, Term};
