//! Abstract syntax for scenario programs.
//!
//! Nested statement blocks are reference-counted so a suspended behavior
//! interpreter can hold onto the block it is executing without borrowing the
//! whole program.

use std::rc::Rc;

/// Expression node ids are assigned densely by the parser and index the
/// checker's type table.
pub type ExprId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Bool(bool),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Builtin or distribution call; behavior names never appear here.
    Call { name: String, args: Vec<Expr> },
    /// Bracketed list; only legal as the argument of `Options`.
    List(Vec<Expr>),
    /// `(x, y)` point literal.
    Point(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Specifier {
    At(Expr),
    OnLane {
        lane: String,
        offset: Option<Expr>,
        line: u32,
        col: u32,
    },
    Ahead { of: Expr, by: Expr },
    Behind { of: Expr, by: Expr },
    LeftOf { of: Expr, by: Expr },
    RightOf { of: Expr, by: Expr },
    /// Heading expression in degrees.
    Facing(Expr),
    FacingToward(Expr),
    With {
        property: String,
        value: Expr,
        line: u32,
        col: u32,
    },
}

impl Specifier {
    pub fn is_positional(&self) -> bool {
        matches!(
            self,
            Specifier::At(_)
                | Specifier::OnLane { .. }
                | Specifier::Ahead { .. }
                | Specifier::Behind { .. }
                | Specifier::LeftOf { .. }
                | Specifier::RightOf { .. }
        )
    }

    pub fn is_heading(&self) -> bool {
        matches!(self, Specifier::Facing(_) | Specifier::FacingToward(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Expr,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDecl {
    pub binding: Option<String>,
    pub class_name: String,
    pub specifiers: Vec<Specifier>,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    /// `None` for hard requirements; probability in `(0, 1]` for soft ones.
    pub prob: Option<f64>,
    pub expr: Expr,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Rc<Vec<Stmt>>,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Handler {
    pub cond: Expr,
    pub body: Rc<Vec<Stmt>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `take Action(throttle, steer, brake)`
    Take {
        throttle: Expr,
        steer: Expr,
        brake: Expr,
        line: u32,
        col: u32,
    },
    Wait,
    /// Invoke another behavior.
    Do {
        name: String,
        args: Vec<Expr>,
        line: u32,
        col: u32,
    },
    If {
        cond: Expr,
        then_body: Rc<Vec<Stmt>>,
        else_body: Option<Rc<Vec<Stmt>>>,
    },
    While {
        cond: Expr,
        body: Rc<Vec<Stmt>>,
    },
    Try {
        body: Rc<Vec<Stmt>>,
        handlers: Vec<Handler>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Param(ParamDecl),
    Object(ObjectDecl),
    Require(Requirement),
    Behavior(BehaviorDef),
}

/// A parsed program; items keep their declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub items: Vec<Item>,
    /// Optional `world "path"` statement.
    pub world_ref: Option<String>,
    /// One past the highest expression id in the program.
    pub expr_count: u32,
}

impl Program {
    pub fn objects(&self) -> impl Iterator<Item = &ObjectDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Object(o) => Some(o),
            _ => None,
        })
    }

    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.items.iter().filter_map(|i| match i {
            Item::Require(r) => Some(r),
            _ => None,
        })
    }

    pub fn behaviors(&self) -> impl Iterator<Item = &BehaviorDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Behavior(b) => Some(b),
            _ => None,
        })
    }
}
