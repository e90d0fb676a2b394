//! Recursive descent parser for scenario programs.

use std::rc::Rc;

use thiserror::Error;

use super::ast::*;
use super::token::{Keyword, Punct, Token, TokenKind};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{line}:{col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        next_expr_id: 0,
    };
    p.parse_program()
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    next_expr_id: ExprId,
}

impl<'a> Parser<'a> {
    fn current(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, k: Keyword) -> bool {
        self.current().kind == TokenKind::Keyword(k)
    }

    fn at_punct(&self, p: Punct) -> bool {
        self.current().kind == TokenKind::Punct(p)
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.at_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.at_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<(), ParseError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.error(format!("'{}'", k.as_str())))
        }
    }

    fn expect_punct(&mut self, p: Punct) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("'{}'", p.as_str())))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, u32, u32), ParseError> {
        match &self.current().kind {
            TokenKind::Ident => {
                let t = self.advance();
                Ok((t.lexeme.clone(), t.line, t.col))
            }
            _ => Err(self.error("identifier")),
        }
    }

    /// `with` property names are identifiers, except `behavior`, which the
    /// lexer reserves as a keyword.
    fn expect_property_name(&mut self) -> Result<(String, u32, u32), ParseError> {
        if self.at_kw(Keyword::Behavior) {
            let t = self.advance();
            return Ok(("behavior".to_string(), t.line, t.col));
        }
        self.expect_ident()
    }

    fn expect_string(&mut self) -> Result<String, ParseError> {
        match &self.current().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("string literal")),
        }
    }

    fn expect_number(&mut self) -> Result<f64, ParseError> {
        match self.current().kind {
            TokenKind::Number(n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.error("number")),
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let t = self.current();
        ParseError {
            line: t.line,
            col: t.col,
            expected: expected.into(),
            found: t.kind.to_string(),
        }
    }

    fn mk(&mut self, kind: ExprKind, line: u32, col: u32) -> Expr {
        let id = self.next_expr_id;
        self.next_expr_id += 1;
        Expr { id, kind, line, col }
    }

    fn parse_program(&mut self) -> Result<Program, ParseError> {
        let mut program = Program::default();
        while self.current().kind != TokenKind::Eof {
            match self.current().kind {
                TokenKind::Keyword(Keyword::World) => {
                    self.advance();
                    let path = self.expect_string()?;
                    program.world_ref = Some(path);
                }
                TokenKind::Keyword(Keyword::Param) => {
                    let item = self.parse_param()?;
                    program.items.push(Item::Param(item));
                }
                TokenKind::Keyword(Keyword::Require) => {
                    let item = self.parse_require()?;
                    program.items.push(Item::Require(item));
                }
                TokenKind::Keyword(Keyword::Behavior) => {
                    let item = self.parse_behavior()?;
                    program.items.push(Item::Behavior(item));
                }
                TokenKind::Keyword(Keyword::New) | TokenKind::Ident => {
                    let item = self.parse_object()?;
                    program.items.push(Item::Object(item));
                }
                _ => {
                    return Err(self.error(
                        "'param', 'require', 'behavior', 'world', or an object declaration",
                    ))
                }
            }
        }
        program.expr_count = self.next_expr_id;
        Ok(program)
    }

    fn parse_param(&mut self) -> Result<ParamDecl, ParseError> {
        let t = self.current();
        let (line, col) = (t.line, t.col);
        self.expect_kw(Keyword::Param)?;
        let (name, ..) = self.expect_ident()?;
        self.expect_punct(Punct::Assign)?;
        let value = self.parse_expr()?;
        Ok(ParamDecl {
            name,
            value,
            line,
            col,
        })
    }

    fn parse_require(&mut self) -> Result<Requirement, ParseError> {
        let t = self.current();
        let (line, col) = (t.line, t.col);
        self.expect_kw(Keyword::Require)?;
        let prob = if self.eat_punct(Punct::LBracket) {
            let p = self.expect_number()?;
            self.expect_punct(Punct::RBracket)?;
            Some(p)
        } else {
            None
        };
        let expr = self.parse_expr()?;
        Ok(Requirement {
            prob,
            expr,
            line,
            col,
        })
    }

    fn parse_object(&mut self) -> Result<ObjectDecl, ParseError> {
        let t = self.current();
        let (line, col) = (t.line, t.col);
        let binding = if self.current().kind == TokenKind::Ident {
            let (name, ..) = self.expect_ident()?;
            self.expect_punct(Punct::Assign)?;
            Some(name)
        } else {
            None
        };
        self.expect_kw(Keyword::New)?;
        let (class_name, ..) = self.expect_ident()?;
        let mut specifiers = Vec::new();
        if self.starts_specifier() {
            specifiers.push(self.parse_specifier()?);
            while self.eat_punct(Punct::Comma) {
                specifiers.push(self.parse_specifier()?);
            }
        }
        Ok(ObjectDecl {
            binding,
            class_name,
            specifiers,
            line,
            col,
        })
    }

    fn starts_specifier(&self) -> bool {
        matches!(
            self.current().kind,
            TokenKind::Keyword(
                Keyword::At
                    | Keyword::On
                    | Keyword::Ahead
                    | Keyword::Behind
                    | Keyword::Left
                    | Keyword::Right
                    | Keyword::Facing
                    | Keyword::With
            )
        )
    }

    fn parse_specifier(&mut self) -> Result<Specifier, ParseError> {
        let t = self.current().clone();
        match t.kind {
            TokenKind::Keyword(Keyword::At) => {
                self.advance();
                let p = self.parse_point()?;
                Ok(Specifier::At(p))
            }
            TokenKind::Keyword(Keyword::On) => {
                self.advance();
                self.expect_kw(Keyword::Lane)?;
                self.expect_punct(Punct::LParen)?;
                let lane = self.expect_string()?;
                self.expect_punct(Punct::RParen)?;
                let offset = if self.eat_kw(Keyword::Offset) {
                    self.expect_kw(Keyword::By)?;
                    Some(self.parse_expr()?)
                } else {
                    None
                };
                Ok(Specifier::OnLane {
                    lane,
                    offset,
                    line: t.line,
                    col: t.col,
                })
            }
            TokenKind::Keyword(Keyword::Ahead) => {
                self.advance();
                self.expect_kw(Keyword::Of)?;
                let of = self.parse_expr()?;
                self.expect_kw(Keyword::By)?;
                let by = self.parse_expr()?;
                Ok(Specifier::Ahead { of, by })
            }
            TokenKind::Keyword(Keyword::Behind) => {
                self.advance();
                let of = self.parse_expr()?;
                self.expect_kw(Keyword::By)?;
                let by = self.parse_expr()?;
                Ok(Specifier::Behind { of, by })
            }
            TokenKind::Keyword(Keyword::Left) => {
                self.advance();
                self.expect_kw(Keyword::Of)?;
                let of = self.parse_expr()?;
                self.expect_kw(Keyword::By)?;
                let by = self.parse_expr()?;
                Ok(Specifier::LeftOf { of, by })
            }
            TokenKind::Keyword(Keyword::Right) => {
                self.advance();
                self.expect_kw(Keyword::Of)?;
                let of = self.parse_expr()?;
                self.expect_kw(Keyword::By)?;
                let by = self.parse_expr()?;
                Ok(Specifier::RightOf { of, by })
            }
            TokenKind::Keyword(Keyword::Facing) => {
                self.advance();
                if self.eat_kw(Keyword::Toward) {
                    let p = self.parse_point()?;
                    Ok(Specifier::FacingToward(p))
                } else {
                    let e = self.parse_expr()?;
                    Ok(Specifier::Facing(e))
                }
            }
            TokenKind::Keyword(Keyword::With) => {
                self.advance();
                let (property, line, col) = self.expect_property_name()?;
                let value = self.parse_expr()?;
                Ok(Specifier::With {
                    property,
                    value,
                    line,
                    col,
                })
            }
            _ => Err(self.error("specifier")),
        }
    }

    /// A parenthesized pair `(x, y)`.
    fn parse_point(&mut self) -> Result<Expr, ParseError> {
        let t = self.current().clone();
        self.expect_punct(Punct::LParen)?;
        let x = self.parse_expr()?;
        self.expect_punct(Punct::Comma)?;
        let y = self.parse_expr()?;
        self.expect_punct(Punct::RParen)?;
        Ok(self.mk(ExprKind::Point(Box::new(x), Box::new(y)), t.line, t.col))
    }

    fn parse_behavior(&mut self) -> Result<BehaviorDef, ParseError> {
        let t = self.current();
        let (line, col) = (t.line, t.col);
        self.expect_kw(Keyword::Behavior)?;
        let (name, ..) = self.expect_ident()?;
        self.expect_punct(Punct::LParen)?;
        let mut params = Vec::new();
        if !self.at_punct(Punct::RParen) {
            loop {
                let (p, ..) = self.expect_ident()?;
                params.push(p);
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        self.expect_punct(Punct::RParen)?;
        self.expect_punct(Punct::Colon)?;
        let body = self.parse_block(&[BlockEnd::End])?;
        self.expect_kw(Keyword::End)?;
        Ok(BehaviorDef {
            name,
            params,
            body: Rc::new(body),
            line,
            col,
        })
    }

    fn block_ended(&self, ends: &[BlockEnd]) -> bool {
        ends.iter().any(|e| match e {
            BlockEnd::End => self.at_kw(Keyword::End),
            BlockEnd::Else => self.at_kw(Keyword::Else),
            BlockEnd::Interrupt => self.at_kw(Keyword::Interrupt),
        })
    }

    fn parse_block(&mut self, ends: &[BlockEnd]) -> Result<Vec<Stmt>, ParseError> {
        let mut stmts = Vec::new();
        while !self.block_ended(ends) {
            if self.current().kind == TokenKind::Eof {
                return Err(self.error("statement or block terminator"));
            }
            stmts.push(self.parse_stmt()?);
        }
        Ok(stmts)
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ParseError> {
        let t = self.current().clone();
        match t.kind {
            TokenKind::Keyword(Keyword::Take) => {
                self.advance();
                self.expect_kw(Keyword::Action)?;
                self.expect_punct(Punct::LParen)?;
                let throttle = self.parse_expr()?;
                self.expect_punct(Punct::Comma)?;
                let steer = self.parse_expr()?;
                self.expect_punct(Punct::Comma)?;
                let brake = self.parse_expr()?;
                self.expect_punct(Punct::RParen)?;
                Ok(Stmt::Take {
                    throttle,
                    steer,
                    brake,
                    line: t.line,
                    col: t.col,
                })
            }
            TokenKind::Keyword(Keyword::Wait) => {
                self.advance();
                Ok(Stmt::Wait)
            }
            TokenKind::Keyword(Keyword::Do) => {
                self.advance();
                let (name, ..) = self.expect_ident()?;
                self.expect_punct(Punct::LParen)?;
                let mut args = Vec::new();
                if !self.at_punct(Punct::RParen) {
                    loop {
                        args.push(self.parse_expr()?);
                        if !self.eat_punct(Punct::Comma) {
                            break;
                        }
                    }
                }
                self.expect_punct(Punct::RParen)?;
                Ok(Stmt::Do {
                    name,
                    args,
                    line: t.line,
                    col: t.col,
                })
            }
            TokenKind::Keyword(Keyword::If) => {
                self.advance();
                let cond = self.parse_expr()?;
                self.expect_punct(Punct::Colon)?;
                let then_body = self.parse_block(&[BlockEnd::End, BlockEnd::Else])?;
                let else_body = if self.eat_kw(Keyword::Else) {
                    self.expect_punct(Punct::Colon)?;
                    Some(Rc::new(self.parse_block(&[BlockEnd::End])?))
                } else {
                    None
                };
                self.expect_kw(Keyword::End)?;
                Ok(Stmt::If {
                    cond,
                    then_body: Rc::new(then_body),
                    else_body,
                })
            }
            TokenKind::Keyword(Keyword::While) => {
                self.advance();
                let cond = self.parse_expr()?;
                self.expect_punct(Punct::Colon)?;
                let body = self.parse_block(&[BlockEnd::End])?;
                self.expect_kw(Keyword::End)?;
                Ok(Stmt::While {
                    cond,
                    body: Rc::new(body),
                })
            }
            TokenKind::Keyword(Keyword::Try) => {
                self.advance();
                self.expect_punct(Punct::Colon)?;
                let body = self.parse_block(&[BlockEnd::End, BlockEnd::Interrupt])?;
                let mut handlers = Vec::new();
                while self.eat_kw(Keyword::Interrupt) {
                    self.expect_kw(Keyword::When)?;
                    let cond = self.parse_expr()?;
                    self.expect_punct(Punct::Colon)?;
                    let hbody = self.parse_block(&[BlockEnd::End, BlockEnd::Interrupt])?;
                    handlers.push(Handler {
                        cond,
                        body: Rc::new(hbody),
                    });
                }
                self.expect_kw(Keyword::End)?;
                if handlers.is_empty() {
                    return Err(ParseError {
                        line: t.line,
                        col: t.col,
                        expected: "at least one 'interrupt when' handler".into(),
                        found: "none".into(),
                    });
                }
                Ok(Stmt::Try {
                    body: Rc::new(body),
                    handlers,
                })
            }
            _ => Err(self.error("statement")),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.at_kw(Keyword::Or) {
            let t = self.advance().clone();
            let rhs = self.parse_and()?;
            lhs = self.mk(
                ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)),
                t.line,
                t.col,
            );
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_not()?;
        while self.at_kw(Keyword::And) {
            let t = self.advance().clone();
            let rhs = self.parse_not()?;
            lhs = self.mk(
                ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)),
                t.line,
                t.col,
            );
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<Expr, ParseError> {
        if self.at_kw(Keyword::Not) {
            let t = self.advance().clone();
            let inner = self.parse_not()?;
            return Ok(self.mk(ExprKind::Unary(UnOp::Not, Box::new(inner)), t.line, t.col));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_additive()?;
        let op = match self.current().kind {
            TokenKind::Punct(Punct::Lt) => Some(BinOp::Lt),
            TokenKind::Punct(Punct::Le) => Some(BinOp::Le),
            TokenKind::Punct(Punct::Gt) => Some(BinOp::Gt),
            TokenKind::Punct(Punct::Ge) => Some(BinOp::Ge),
            TokenKind::Punct(Punct::EqEq) => Some(BinOp::Eq),
            TokenKind::Punct(Punct::Ne) => Some(BinOp::Ne),
            _ => None,
        };
        if let Some(op) = op {
            let t = self.advance().clone();
            let rhs = self.parse_additive()?;
            return Ok(self.mk(
                ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                t.line,
                t.col,
            ));
        }
        Ok(lhs)
    }

    fn parse_additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_multiplicative()?;
        loop {
            let op = match self.current().kind {
                TokenKind::Punct(Punct::Plus) => BinOp::Add,
                TokenKind::Punct(Punct::Minus) => BinOp::Sub,
                _ => break,
            };
            let t = self.advance().clone();
            let rhs = self.parse_multiplicative()?;
            lhs = self.mk(
                ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                t.line,
                t.col,
            );
        }
        Ok(lhs)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.current().kind {
                TokenKind::Punct(Punct::Star) => BinOp::Mul,
                TokenKind::Punct(Punct::Slash) => BinOp::Div,
                _ => break,
            };
            let t = self.advance().clone();
            let rhs = self.parse_unary()?;
            lhs = self.mk(
                ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                t.line,
                t.col,
            );
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.at_punct(Punct::Minus) {
            let t = self.advance().clone();
            let inner = self.parse_unary()?;
            return Ok(self.mk(ExprKind::Unary(UnOp::Neg, Box::new(inner)), t.line, t.col));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.current().clone();
        match t.kind {
            TokenKind::Number(n) => {
                self.advance();
                Ok(self.mk(ExprKind::Number(n), t.line, t.col))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.advance();
                Ok(self.mk(ExprKind::Bool(true), t.line, t.col))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.advance();
                Ok(self.mk(ExprKind::Bool(false), t.line, t.col))
            }
            TokenKind::Ident => {
                self.advance();
                if self.eat_punct(Punct::LParen) {
                    let mut args = Vec::new();
                    if !self.at_punct(Punct::RParen) {
                        loop {
                            args.push(self.parse_expr()?);
                            if !self.eat_punct(Punct::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect_punct(Punct::RParen)?;
                    Ok(self.mk(
                        ExprKind::Call {
                            name: t.lexeme.clone(),
                            args,
                        },
                        t.line,
                        t.col,
                    ))
                } else {
                    Ok(self.mk(ExprKind::Ident(t.lexeme.clone()), t.line, t.col))
                }
            }
            TokenKind::Punct(Punct::LBracket) => {
                self.advance();
                let mut items = Vec::new();
                if !self.at_punct(Punct::RBracket) {
                    loop {
                        items.push(self.parse_expr()?);
                        if !self.eat_punct(Punct::Comma) {
                            break;
                        }
                    }
                }
                self.expect_punct(Punct::RBracket)?;
                Ok(self.mk(ExprKind::List(items), t.line, t.col))
            }
            TokenKind::Punct(Punct::LParen) => {
                self.advance();
                let first = self.parse_expr()?;
                if self.eat_punct(Punct::Comma) {
                    let second = self.parse_expr()?;
                    self.expect_punct(Punct::RParen)?;
                    Ok(self.mk(
                        ExprKind::Point(Box::new(first), Box::new(second)),
                        t.line,
                        t.col,
                    ))
                } else {
                    self.expect_punct(Punct::RParen)?;
                    Ok(first)
                }
            }
            _ => Err(self.error("expression")),
        }
    }
}

enum BlockEnd {
    End,
    Else,
    Interrupt,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::token::tokenize;

    fn parse_src(src: &str) -> Result<Program, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn object_with_lane_and_behavior() {
        let p = parse_src(r#"ego = new Car on lane("main"), with behavior Drive(5.0)"#).unwrap();
        let objs: Vec<_> = p.objects().collect();
        assert_eq!(objs.len(), 1);
        assert_eq!(objs[0].binding.as_deref(), Some("ego"));
        assert_eq!(objs[0].class_name, "Car");
        assert_eq!(objs[0].specifiers.len(), 2);
        assert!(matches!(&objs[0].specifiers[0], Specifier::OnLane { lane, offset: None, .. } if lane == "main"));
        match &objs[0].specifiers[1] {
            Specifier::With { property, value, .. } => {
                assert_eq!(property, "behavior");
                assert!(matches!(&value.kind, ExprKind::Call { name, args } if name == "Drive" && args.len() == 1));
            }
            other => panic!("unexpected specifier {other:?}"),
        }
    }

    #[test]
    fn soft_requirement_probability() {
        let p = parse_src("require[0.9] dist(ego, npc) > 10").unwrap();
        let reqs: Vec<_> = p.requirements().collect();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].prob, Some(0.9));
    }

    #[test]
    fn truncated_specifier_is_a_parse_error() {
        let err = parse_src("new Car facing").unwrap_err();
        assert_eq!(err.expected, "expression");
        assert_eq!(err.line, 1);
    }

    #[test]
    fn behavior_with_interrupt() {
        let src = "behavior Follow(gap):\n  try:\n    while true:\n      wait\n    end\n  interrupt when dist(self, ego) < gap:\n    take Action(0, 0, 1)\n  end\nend";
        let p = parse_src(src).unwrap();
        let behaviors: Vec<_> = p.behaviors().collect();
        assert_eq!(behaviors.len(), 1);
        assert_eq!(behaviors[0].params, vec!["gap"]);
        match &behaviors[0].body[0] {
            Stmt::Try { handlers, .. } => assert_eq!(handlers.len(), 1),
            other => panic!("expected try, got {other:?}"),
        }
    }

    #[test]
    fn try_requires_a_handler() {
        let err = parse_src("behavior B():\n  try:\n    wait\n  end\nend").unwrap_err();
        assert!(err.expected.contains("interrupt"));
    }

    #[test]
    fn grouping_versus_point_literal() {
        let p = parse_src("param a = (1 + 2) * 3\nparam b = (1, 2)").unwrap();
        let params: Vec<_> = p
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Param(p) => Some(p),
                _ => None,
            })
            .collect();
        assert!(matches!(params[0].value.kind, ExprKind::Binary(BinOp::Mul, ..)));
        assert!(matches!(params[1].value.kind, ExprKind::Point(..)));
    }

    #[test]
    fn world_reference() {
        let p = parse_src("world \"worlds/flat.json\"\nego = new Car at (0, 0)").unwrap();
        assert_eq!(p.world_ref.as_deref(), Some("worlds/flat.json"));
    }

    #[test]
    fn expression_precedence() {
        let p = parse_src("param a = 1 + 2 * 3 < 10 and not false").unwrap();
        // Parses as ((1 + (2*3)) < 10) and (not false).
        match &p.items[0] {
            Item::Param(pd) => match &pd.value.kind {
                ExprKind::Binary(BinOp::And, l, r) => {
                    assert!(matches!(l.kind, ExprKind::Binary(BinOp::Lt, ..)));
                    assert!(matches!(r.kind, ExprKind::Unary(UnOp::Not, _)));
                }
                other => panic!("unexpected {other:?}"),
            },
            _ => unreachable!(),
        }
    }
}
