//! Surface-syntax printer; `parse(print(ast))` is structurally equal to `ast`.

use std::fmt::Write;

use super::ast::*;

pub fn pretty(program: &Program) -> String {
    let mut out = String::new();
    if let Some(w) = &program.world_ref {
        writeln!(out, "world \"{w}\"").unwrap();
    }
    for item in &program.items {
        match item {
            Item::Param(p) => {
                writeln!(out, "param {} = {}", p.name, expr(&p.value)).unwrap();
            }
            Item::Object(o) => {
                if let Some(b) = &o.binding {
                    write!(out, "{b} = ").unwrap();
                }
                write!(out, "new {}", o.class_name).unwrap();
                for (i, s) in o.specifiers.iter().enumerate() {
                    let sep = if i == 0 { " " } else { ", " };
                    write!(out, "{sep}{}", specifier(s)).unwrap();
                }
                writeln!(out).unwrap();
            }
            Item::Require(r) => {
                match r.prob {
                    Some(p) => writeln!(out, "require[{p}] {}", expr(&r.expr)).unwrap(),
                    None => writeln!(out, "require {}", expr(&r.expr)).unwrap(),
                }
            }
            Item::Behavior(b) => {
                writeln!(out, "behavior {}({}):", b.name, b.params.join(", ")).unwrap();
                block(&mut out, &b.body, 1);
                writeln!(out, "end").unwrap();
            }
        }
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        indent(out, depth);
        match s {
            Stmt::Take {
                throttle,
                steer,
                brake,
                ..
            } => {
                writeln!(
                    out,
                    "take Action({}, {}, {})",
                    expr(throttle),
                    expr(steer),
                    expr(brake)
                )
                .unwrap();
            }
            Stmt::Wait => writeln!(out, "wait").unwrap(),
            Stmt::Do { name, args, .. } => {
                let args: Vec<String> = args.iter().map(expr).collect();
                writeln!(out, "do {name}({})", args.join(", ")).unwrap();
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                writeln!(out, "if {}:", expr(cond)).unwrap();
                block(out, then_body, depth + 1);
                if let Some(e) = else_body {
                    indent(out, depth);
                    writeln!(out, "else:").unwrap();
                    block(out, e, depth + 1);
                }
                indent(out, depth);
                writeln!(out, "end").unwrap();
            }
            Stmt::While { cond, body } => {
                writeln!(out, "while {}:", expr(cond)).unwrap();
                block(out, body, depth + 1);
                indent(out, depth);
                writeln!(out, "end").unwrap();
            }
            Stmt::Try { body, handlers } => {
                writeln!(out, "try:").unwrap();
                block(out, body, depth + 1);
                for h in handlers {
                    indent(out, depth);
                    writeln!(out, "interrupt when {}:", expr(&h.cond)).unwrap();
                    block(out, &h.body, depth + 1);
                }
                indent(out, depth);
                writeln!(out, "end").unwrap();
            }
        }
    }
}

fn specifier(s: &Specifier) -> String {
    match s {
        Specifier::At(p) => format!("at {}", expr(p)),
        Specifier::OnLane { lane, offset, .. } => match offset {
            Some(off) => format!("on lane(\"{lane}\") offset by {}", expr(off)),
            None => format!("on lane(\"{lane}\")"),
        },
        Specifier::Ahead { of, by } => format!("ahead of {} by {}", expr(of), expr(by)),
        Specifier::Behind { of, by } => format!("behind {} by {}", expr(of), expr(by)),
        Specifier::LeftOf { of, by } => format!("left of {} by {}", expr(of), expr(by)),
        Specifier::RightOf { of, by } => format!("right of {} by {}", expr(of), expr(by)),
        Specifier::Facing(e) => format!("facing {}", expr(e)),
        Specifier::FacingToward(p) => format!("facing toward {}", expr(p)),
        Specifier::With {
            property, value, ..
        } => format!("with {property} {}", expr(value)),
    }
}

/// Fully parenthesized except atoms, so precedence never changes on reparse.
fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Number(n) => format!("{n}"),
        ExprKind::Bool(b) => format!("{b}"),
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Unary(UnOp::Neg, inner) => format!("(-{})", expr(inner)),
        ExprKind::Unary(UnOp::Not, inner) => format!("(not {})", expr(inner)),
        ExprKind::Binary(op, l, r) => format!("({} {} {})", expr(l), op.as_str(), expr(r)),
        ExprKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(expr).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::List(items) => {
            let items: Vec<String> = items.iter().map(expr).collect();
            format!("[{}]", items.join(", "))
        }
        ExprKind::Point(x, y) => format!("({}, {})", expr(x), expr(y)),
    }
}
