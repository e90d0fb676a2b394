//! Scenario description language frontend.
//!
//! Programs declare distributions over scenes in an imperative style with
//! declarative constraints:
//!
//! ```text
//! world "worlds/straight.json"
//! param gap = Uniform(15, 40)
//!
//! behavior Drive(throttle):
//!   while true:
//!     take Action(throttle, 0, 0)
//!   end
//! end
//!
//! ego = new Car on lane("main"), with behavior Drive(0.7)
//! lead = new Car ahead of ego by gap
//! require dist(ego, lead) > 10
//! require[0.9] dist(ego, lead) < 35
//! ```
//!
//! Surface angles are degrees (`facing 45`); everything downstream of the
//! checker works in radians. `Action(throttle, steer, brake)` components are
//! unitless and clamped at runtime. Statement blocks open with `:` and close
//! with `end`.

mod ast;
mod check;
mod parser;
mod pretty;
mod token;

pub use ast::{
    BehaviorDef, BinOp, Expr, ExprId, ExprKind, Handler, Item, ObjectDecl, ParamDecl, Program,
    Requirement, Specifier, Stmt, UnOp,
};
pub use check::{check, CheckError, CheckErrorKind, CheckErrors, CheckedProgram, ExprType};
pub use parser::{parse, ParseError};
pub use pretty::pretty;
pub use token::{tokenize, Keyword, LexError, Punct, Token, TokenKind};

use thiserror::Error;

use crate::rng::fnv1a64;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{0}")]
    Lex(#[from] LexError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Check(#[from] CheckErrors),
}

/// Tokenize, parse, and check a program in one step. The program hash is the
/// FNV-1a fingerprint of the source bytes.
pub fn compile(source: &str) -> Result<CheckedProgram, CompileError> {
    let tokens = tokenize(source)?;
    let program = parse(&tokens)?;
    Ok(check(program, fnv1a64(source.as_bytes()))?)
}
