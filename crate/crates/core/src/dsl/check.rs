//! Static checks: name resolution, specifier conflicts, type tags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ast::*;
use crate::scene::ObjectClass;

/// Type tag attached to every expression node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprType {
    Scalar,
    Bool,
    Point,
    ObjectRef,
    /// Scalar interpreted as an angle in degrees.
    Heading,
    /// Scalar distribution; draws a fresh value on every evaluation.
    Dist,
}

impl ExprType {
    pub fn is_scalar_like(self) -> bool {
        matches!(self, ExprType::Scalar | ExprType::Heading | ExprType::Dist)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckErrorKind {
    UnknownName,
    DuplicateEgo,
    MissingEgo,
    ConflictingSpecifiers,
    UnknownBehavior,
    BadProbability,
    DuplicateName,
    TypeMismatch,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct CheckError {
    pub kind: CheckErrorKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub struct CheckErrors(pub Vec<CheckError>);

impl fmt::Display for CheckErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A statically valid program plus everything resolved during checking.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedProgram {
    pub program: Program,
    /// Indexed by [`ExprId`].
    pub types: Vec<ExprType>,
    /// FNV-1a hash of the source the program was compiled from.
    pub program_hash: u64,
    /// Index of the ego among the program's objects (declaration order).
    pub ego_index: usize,
    /// Binding name to object index.
    pub bindings: BTreeMap<String, usize>,
    pub object_classes: Vec<ObjectClass>,
}

const RESERVED_PROPERTIES: [&str; 6] = [
    "behavior",
    "length",
    "width",
    "height",
    "color",
    "allowCollisions",
];

struct Checker<'a> {
    program: &'a Program,
    types: Vec<ExprType>,
    errors: Vec<CheckError>,
    params: BTreeSet<String>,
    objects: BTreeMap<String, usize>,
    behaviors: BTreeMap<String, usize>,
    object_count: usize,
}

/// Scope available to an expression.
struct Scope<'a> {
    params: &'a BTreeSet<String>,
    objects: &'a BTreeMap<String, usize>,
    /// Behavior parameters, when checking inside a behavior body.
    locals: Option<&'a [String]>,
    /// `self` resolves only inside behavior bodies.
    allow_self: bool,
}

pub fn check(program: Program, program_hash: u64) -> Result<CheckedProgram, CheckErrors> {
    let mut ck = Checker {
        program: &program,
        types: vec![ExprType::Scalar; program.expr_count as usize],
        errors: Vec::new(),
        params: BTreeSet::new(),
        objects: BTreeMap::new(),
        behaviors: BTreeMap::new(),
        object_count: 0,
    };

    let mut object_classes = Vec::new();
    let mut ego_index = None;

    // Collect behavior names first; behaviors resolve program-wide.
    for (i, item) in program.items.iter().enumerate() {
        if let Item::Behavior(b) = item {
            if ck.behaviors.insert(b.name.clone(), i).is_some() {
                ck.err(
                    CheckErrorKind::DuplicateName,
                    b.line,
                    b.col,
                    format!("duplicate behavior '{}'", b.name),
                );
            }
        }
    }

    // Declaration pass: params and objects see only what precedes them.
    for item in &program.items {
        match item {
            Item::Param(p) => {
                if p.name == "self" || p.name == "ego" {
                    ck.err(
                        CheckErrorKind::UnknownName,
                        p.line,
                        p.col,
                        format!("'{}' is a reserved name", p.name),
                    );
                }
                let scope = Scope {
                    params: &ck.params.clone(),
                    objects: &ck.objects.clone(),
                    locals: None,
                    allow_self: false,
                };
                let t = ck.check_expr(&p.value, &scope);
                if !t.is_scalar_like() && t != ExprType::Bool && t != ExprType::Point {
                    ck.type_err(&p.value, "parameter value must be a scalar, bool, or point");
                }
                if ck.params.contains(&p.name) || ck.objects.contains_key(&p.name) {
                    ck.err(
                        CheckErrorKind::DuplicateName,
                        p.line,
                        p.col,
                        format!("duplicate name '{}'", p.name),
                    );
                }
                ck.params.insert(p.name.clone());
            }
            Item::Object(o) => {
                let idx = ck.object_count;
                ck.object_count += 1;
                let class = match ObjectClass::from_name(&o.class_name) {
                    Some(c) => c,
                    None => {
                        ck.err(
                            CheckErrorKind::UnknownName,
                            o.line,
                            o.col,
                            format!("unknown object class '{}'", o.class_name),
                        );
                        ObjectClass::Prop
                    }
                };
                object_classes.push(class);
                ck.check_object(o, class);
                if let Some(name) = &o.binding {
                    if name == "self" {
                        ck.err(
                            CheckErrorKind::UnknownName,
                            o.line,
                            o.col,
                            "'self' is a reserved name".to_string(),
                        );
                    } else if name == "ego" {
                        if ego_index.is_some() {
                            ck.err(
                                CheckErrorKind::DuplicateEgo,
                                o.line,
                                o.col,
                                "more than one object is declared as ego".to_string(),
                            );
                        } else {
                            ego_index = Some(idx);
                        }
                    }
                    if ck.params.contains(name) || ck.objects.contains_key(name) {
                        ck.err(
                            CheckErrorKind::DuplicateName,
                            o.line,
                            o.col,
                            format!("duplicate name '{name}'"),
                        );
                    }
                    ck.objects.insert(name.clone(), idx);
                }
            }
            Item::Require(_) | Item::Behavior(_) => {}
        }
    }

    // Requirements and behavior bodies see the full program.
    for item in &program.items {
        match item {
            Item::Require(r) => {
                if let Some(p) = r.prob {
                    if !(p > 0.0 && p <= 1.0) {
                        ck.err(
                            CheckErrorKind::BadProbability,
                            r.line,
                            r.col,
                            format!("requirement probability {p} is outside (0, 1]"),
                        );
                    }
                }
                let scope = Scope {
                    params: &ck.params.clone(),
                    objects: &ck.objects.clone(),
                    locals: None,
                    allow_self: false,
                };
                let t = ck.check_expr(&r.expr, &scope);
                if t != ExprType::Bool {
                    ck.type_err(&r.expr, "requirement must be a boolean expression");
                }
            }
            Item::Behavior(b) => ck.check_behavior(b),
            _ => {}
        }
    }

    let ego_index = match ego_index {
        Some(i) => i,
        None => {
            ck.errors.push(CheckError {
                kind: CheckErrorKind::MissingEgo,
                line: 1,
                col: 1,
                message: "no object is declared as ego".to_string(),
            });
            0
        }
    };

    if !ck.errors.is_empty() {
        return Err(CheckErrors(ck.errors));
    }

    Ok(CheckedProgram {
        types: ck.types,
        bindings: ck.objects,
        program_hash,
        ego_index,
        object_classes,
        program,
    })
}

impl<'a> Checker<'a> {
    fn err(&mut self, kind: CheckErrorKind, line: u32, col: u32, message: String) {
        self.errors.push(CheckError {
            kind,
            line,
            col,
            message,
        });
    }

    fn type_err(&mut self, e: &Expr, message: &str) {
        self.err(CheckErrorKind::TypeMismatch, e.line, e.col, message.to_string());
    }

    fn check_object(&mut self, o: &ObjectDecl, class: ObjectClass) {
        let params = self.params.clone();
        let objects = self.objects.clone();
        let scope = Scope {
            params: &params,
            objects: &objects,
            locals: None,
            allow_self: false,
        };

        let mut positional = 0usize;
        let mut heading = 0usize;
        let mut with_seen: BTreeSet<&str> = BTreeSet::new();

        for spec in &o.specifiers {
            if spec.is_positional() {
                positional += 1;
            }
            if spec.is_heading() {
                heading += 1;
            }
            match spec {
                Specifier::At(p) | Specifier::FacingToward(p) => {
                    let t = self.check_expr(p, &scope);
                    if t != ExprType::Point {
                        self.type_err(p, "expected a point");
                    }
                }
                Specifier::OnLane { offset, .. } => {
                    if let Some(off) = offset {
                        let t = self.check_expr(off, &scope);
                        if !t.is_scalar_like() {
                            self.type_err(off, "lane offset must be a scalar");
                        }
                    }
                }
                Specifier::Ahead { of, by }
                | Specifier::Behind { of, by }
                | Specifier::LeftOf { of, by }
                | Specifier::RightOf { of, by } => {
                    let t = self.check_expr(of, &scope);
                    if t != ExprType::ObjectRef {
                        self.type_err(of, "expected a reference to an earlier object");
                    }
                    let t = self.check_expr(by, &scope);
                    if !t.is_scalar_like() {
                        self.type_err(by, "offset distance must be a scalar");
                    }
                }
                Specifier::Facing(e) => {
                    let t = self.check_expr(e, &scope);
                    if !t.is_scalar_like() {
                        self.type_err(e, "facing takes an angle in degrees");
                    }
                    self.types[e.id as usize] = ExprType::Heading;
                }
                Specifier::With {
                    property,
                    value,
                    line,
                    col,
                } => {
                    if !with_seen.insert(property.as_str()) {
                        self.err(
                            CheckErrorKind::ConflictingSpecifiers,
                            *line,
                            *col,
                            format!("property '{property}' given more than once"),
                        );
                    }
                    if !RESERVED_PROPERTIES.contains(&property.as_str()) {
                        self.err(
                            CheckErrorKind::UnknownName,
                            *line,
                            *col,
                            format!("unknown property '{property}'"),
                        );
                        continue;
                    }
                    match property.as_str() {
                        "behavior" => {
                            if !matches!(class, ObjectClass::Car | ObjectClass::Pedestrian) {
                                self.err(
                                    CheckErrorKind::TypeMismatch,
                                    *line,
                                    *col,
                                    format!("class {} cannot carry a behavior", o.class_name),
                                );
                            }
                            self.check_behavior_binding(value, &scope);
                        }
                        "allowCollisions" => {
                            let t = self.check_expr(value, &scope);
                            if t != ExprType::Bool {
                                self.type_err(value, "allowCollisions takes a bool");
                            }
                        }
                        _ => {
                            let t = self.check_expr(value, &scope);
                            if !t.is_scalar_like() {
                                self.type_err(value, "expected a scalar value");
                            }
                        }
                    }
                }
            }
        }

        if positional > 1 {
            self.err(
                CheckErrorKind::ConflictingSpecifiers,
                o.line,
                o.col,
                "more than one position specifier".to_string(),
            );
        }
        if heading > 1 {
            self.err(
                CheckErrorKind::ConflictingSpecifiers,
                o.line,
                o.col,
                "more than one heading specifier".to_string(),
            );
        }
    }

    /// `with behavior Name(args...)`; a bare name means no arguments.
    fn check_behavior_binding(&mut self, value: &Expr, scope: &Scope) {
        let (name, args): (&str, &[Expr]) = match &value.kind {
            ExprKind::Call { name, args } => (name, args),
            ExprKind::Ident(name) => (name, &[]),
            _ => {
                self.type_err(value, "behavior binding must name a behavior");
                return;
            }
        };
        match self.behaviors.get(name).copied() {
            None => {
                self.err(
                    CheckErrorKind::UnknownBehavior,
                    value.line,
                    value.col,
                    format!("unknown behavior '{name}'"),
                );
            }
            Some(item_idx) => {
                if let Item::Behavior(b) = &self.program.items[item_idx] {
                    if b.params.len() != args.len() {
                        self.err(
                            CheckErrorKind::UnknownBehavior,
                            value.line,
                            value.col,
                            format!(
                                "behavior '{name}' takes {} argument(s), got {}",
                                b.params.len(),
                                args.len()
                            ),
                        );
                    }
                }
            }
        }
        for a in args {
            self.check_expr(a, scope);
        }
    }

    fn check_behavior(&mut self, b: &BehaviorDef) {
        let mut seen = BTreeSet::new();
        for p in &b.params {
            if p == "self" || p == "ego" {
                self.err(
                    CheckErrorKind::UnknownName,
                    b.line,
                    b.col,
                    format!("'{p}' is a reserved name"),
                );
            }
            if !seen.insert(p.clone()) {
                self.err(
                    CheckErrorKind::DuplicateName,
                    b.line,
                    b.col,
                    format!("duplicate parameter '{p}'"),
                );
            }
        }
        // Behaviors are closed over their arguments: program parameters are
        // sampling-time values and must be passed in explicitly.
        let no_params = BTreeSet::new();
        let objects = self.objects.clone();
        let locals = b.params.clone();
        let scope = Scope {
            params: &no_params,
            objects: &objects,
            locals: Some(&locals),
            allow_self: true,
        };
        self.check_block(&b.body, &scope);
    }

    fn check_block(&mut self, stmts: &[Stmt], scope: &Scope) {
        for stmt in stmts {
            match stmt {
                Stmt::Take {
                    throttle,
                    steer,
                    brake,
                    ..
                } => {
                    for e in [throttle, steer, brake] {
                        let t = self.check_expr(e, scope);
                        if !t.is_scalar_like() {
                            self.type_err(e, "action component must be a scalar");
                        }
                    }
                }
                Stmt::Wait => {}
                Stmt::Do {
                    name,
                    args,
                    line,
                    col,
                } => {
                    match self.behaviors.get(name).copied() {
                        None => {
                            self.err(
                                CheckErrorKind::UnknownBehavior,
                                *line,
                                *col,
                                format!("unknown behavior '{name}'"),
                            );
                        }
                        Some(item_idx) => {
                            if let Item::Behavior(b) = &self.program.items[item_idx] {
                                if b.params.len() != args.len() {
                                    self.err(
                                        CheckErrorKind::UnknownBehavior,
                                        *line,
                                        *col,
                                        format!(
                                            "behavior '{name}' takes {} argument(s), got {}",
                                            b.params.len(),
                                            args.len()
                                        ),
                                    );
                                }
                            }
                        }
                    }
                    for a in args {
                        self.check_expr(a, scope);
                    }
                }
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let t = self.check_expr(cond, scope);
                    if t != ExprType::Bool {
                        self.type_err(cond, "condition must be a bool");
                    }
                    self.check_block(then_body, scope);
                    if let Some(e) = else_body {
                        self.check_block(e, scope);
                    }
                }
                Stmt::While { cond, body } => {
                    let t = self.check_expr(cond, scope);
                    if t != ExprType::Bool {
                        self.type_err(cond, "condition must be a bool");
                    }
                    self.check_block(body, scope);
                }
                Stmt::Try { body, handlers } => {
                    self.check_block(body, scope);
                    for h in handlers {
                        let t = self.check_expr(&h.cond, scope);
                        if t != ExprType::Bool {
                            self.type_err(&h.cond, "interrupt condition must be a bool");
                        }
                        self.check_block(&h.body, scope);
                    }
                }
            }
        }
    }

    fn set(&mut self, e: &Expr, t: ExprType) -> ExprType {
        self.types[e.id as usize] = t;
        t
    }

    fn check_expr(&mut self, e: &Expr, scope: &Scope) -> ExprType {
        match &e.kind {
            ExprKind::Number(_) => self.set(e, ExprType::Scalar),
            ExprKind::Bool(_) => self.set(e, ExprType::Bool),
            ExprKind::Ident(name) => {
                if scope.allow_self && name == "self" {
                    return self.set(e, ExprType::ObjectRef);
                }
                if scope.locals.is_some_and(|ls| ls.iter().any(|l| l == name)) {
                    return self.set(e, ExprType::Scalar);
                }
                if scope.objects.contains_key(name) {
                    return self.set(e, ExprType::ObjectRef);
                }
                if scope.params.contains(name) {
                    return self.set(e, ExprType::Scalar);
                }
                self.err(
                    CheckErrorKind::UnknownName,
                    e.line,
                    e.col,
                    format!("unknown name '{name}'"),
                );
                self.set(e, ExprType::Scalar)
            }
            ExprKind::Unary(op, inner) => {
                let t = self.check_expr(inner, scope);
                match op {
                    UnOp::Neg => {
                        if !t.is_scalar_like() {
                            self.type_err(inner, "negation needs a scalar");
                        }
                        self.set(e, ExprType::Scalar)
                    }
                    UnOp::Not => {
                        if t != ExprType::Bool {
                            self.type_err(inner, "'not' needs a bool");
                        }
                        self.set(e, ExprType::Bool)
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let lt = self.check_expr(l, scope);
                let rt = self.check_expr(r, scope);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        if !lt.is_scalar_like() || !rt.is_scalar_like() {
                            self.type_err(e, "arithmetic needs scalar operands");
                        }
                        self.set(e, ExprType::Scalar)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                        if !lt.is_scalar_like() || !rt.is_scalar_like() {
                            self.type_err(e, "comparison needs scalar operands");
                        }
                        self.set(e, ExprType::Bool)
                    }
                    BinOp::And | BinOp::Or => {
                        if lt != ExprType::Bool || rt != ExprType::Bool {
                            self.type_err(e, "logical operator needs bool operands");
                        }
                        self.set(e, ExprType::Bool)
                    }
                }
            }
            ExprKind::Point(x, y) => {
                for c in [x, y] {
                    let t = self.check_expr(c, scope);
                    if !t.is_scalar_like() {
                        self.type_err(c, "point component must be a scalar");
                    }
                }
                self.set(e, ExprType::Point)
            }
            ExprKind::List(items) => {
                for it in items {
                    let t = self.check_expr(it, scope);
                    if !t.is_scalar_like() {
                        self.type_err(it, "list element must be a scalar");
                    }
                }
                self.type_err(e, "list literal is only allowed inside Options(...)");
                self.set(e, ExprType::Scalar)
            }
            ExprKind::Call { name, args } => self.check_call(e, name, args, scope),
        }
    }

    fn expect_args(&mut self, e: &Expr, name: &str, args: &[Expr], n: usize) -> bool {
        if args.len() != n {
            self.err(
                CheckErrorKind::TypeMismatch,
                e.line,
                e.col,
                format!("{name} takes {n} argument(s), got {}", args.len()),
            );
            false
        } else {
            true
        }
    }

    fn check_call(&mut self, e: &Expr, name: &str, args: &[Expr], scope: &Scope) -> ExprType {
        match name {
            "dist" => {
                if self.expect_args(e, name, args, 2) {
                    for a in args {
                        let t = self.check_expr(a, scope);
                        if t != ExprType::ObjectRef && t != ExprType::Point {
                            self.type_err(a, "dist takes objects or points");
                        }
                    }
                }
                self.set(e, ExprType::Scalar)
            }
            "headingOf" | "speedOf" | "positionOf" => {
                if self.expect_args(e, name, args, 1) {
                    let t = self.check_expr(&args[0], scope);
                    if t != ExprType::ObjectRef {
                        self.type_err(&args[0], "expected an object reference");
                    }
                }
                match name {
                    "headingOf" => self.set(e, ExprType::Heading),
                    "positionOf" => self.set(e, ExprType::Point),
                    _ => self.set(e, ExprType::Scalar),
                }
            }
            "relativeHeading" => {
                if self.expect_args(e, name, args, 2) {
                    for a in args {
                        let t = self.check_expr(a, scope);
                        if t != ExprType::ObjectRef {
                            self.type_err(a, "expected an object reference");
                        }
                    }
                }
                self.set(e, ExprType::Heading)
            }
            "Uniform" | "Normal" => {
                if self.expect_args(e, name, args, 2) {
                    for a in args {
                        let t = self.check_expr(a, scope);
                        if !t.is_scalar_like() {
                            self.type_err(a, "distribution parameter must be a scalar");
                        }
                    }
                }
                self.set(e, ExprType::Dist)
            }
            "Options" => {
                if self.expect_args(e, name, args, 1) {
                    match &args[0].kind {
                        ExprKind::List(items) => {
                            if items.is_empty() {
                                self.type_err(&args[0], "Options needs at least one element");
                            }
                            for it in items {
                                let t = self.check_expr(it, scope);
                                if !t.is_scalar_like() {
                                    self.type_err(it, "Options elements must be scalars");
                                }
                            }
                            self.types[args[0].id as usize] = ExprType::Scalar;
                        }
                        _ => self.type_err(&args[0], "Options takes a [..] list"),
                    }
                }
                self.set(e, ExprType::Dist)
            }
            "sample" => {
                if self.expect_args(e, name, args, 1) {
                    let t = self.check_expr(&args[0], scope);
                    if !t.is_scalar_like() {
                        self.type_err(&args[0], "sample takes a scalar distribution");
                    }
                }
                self.set(e, ExprType::Scalar)
            }
            _ => {
                self.err(
                    CheckErrorKind::UnknownName,
                    e.line,
                    e.col,
                    format!("unknown function '{name}'"),
                );
                self.set(e, ExprType::Scalar)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::compile;

    fn check_src(src: &str) -> Result<CheckedProgram, CheckErrors> {
        match compile(src) {
            Ok(p) => Ok(p),
            Err(crate::dsl::CompileError::Check(e)) => Err(e),
            Err(other) => panic!("expected check stage, got {other}"),
        }
    }

    fn kinds(src: &str) -> Vec<CheckErrorKind> {
        check_src(src).unwrap_err().0.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn duplicate_ego_is_rejected() {
        let src = "ego = new Car at (0, 0)\nego = new Car at (5, 5)";
        assert!(kinds(src).contains(&CheckErrorKind::DuplicateEgo));
    }

    #[test]
    fn missing_ego_is_rejected() {
        assert!(kinds("npc = new Car at (0, 0)").contains(&CheckErrorKind::MissingEgo));
    }

    #[test]
    fn conflicting_position_specifiers() {
        let src = "ego = new Car at (0, 0)\nnpc = new Car at (0, 0), ahead of ego by 5";
        assert!(kinds(src).contains(&CheckErrorKind::ConflictingSpecifiers));
    }

    #[test]
    fn forward_reference_is_unknown() {
        let src = "ego = new Car ahead of npc by 5\nnpc = new Car at (0, 0)";
        assert!(kinds(src).contains(&CheckErrorKind::UnknownName));
    }

    #[test]
    fn unknown_with_property() {
        let src = "ego = new Car at (0, 0), with wheels 4";
        assert!(kinds(src).contains(&CheckErrorKind::UnknownName));
    }

    #[test]
    fn unknown_behavior_reference() {
        let src = "ego = new Car at (0, 0), with behavior Cruise(1)";
        assert!(kinds(src).contains(&CheckErrorKind::UnknownBehavior));
    }

    #[test]
    fn behavior_arity_mismatch() {
        let src = "behavior B(a):\n  wait\nend\nego = new Car at (0, 0), with behavior B()";
        assert!(kinds(src).contains(&CheckErrorKind::UnknownBehavior));
    }

    #[test]
    fn bad_probability() {
        let src = "ego = new Car at (0, 0)\nrequire[1.5] dist(ego, ego) > 0";
        assert!(kinds(src).contains(&CheckErrorKind::BadProbability));
    }

    #[test]
    fn requirement_must_be_bool() {
        let src = "ego = new Car at (0, 0)\nrequire 5";
        assert!(kinds(src).contains(&CheckErrorKind::TypeMismatch));
    }

    #[test]
    fn valid_two_object_program() {
        let src = "behavior Drive(t):\n  while true:\n    take Action(t, 0, 0)\n  end\nend\n\
                   ego = new Car at (0, 0), facing 0, with behavior Drive(0.6)\n\
                   npc = new Car ahead of ego by Uniform(10, 20)\n\
                   require dist(ego, npc) > 5";
        let checked = check_src(src).unwrap();
        assert_eq!(checked.ego_index, 0);
        assert_eq!(checked.object_classes.len(), 2);
        assert_eq!(checked.bindings.len(), 2);
        assert_eq!(checked.program.behaviors().count(), 1);
    }

    #[test]
    fn check_is_idempotent() {
        let src = "ego = new Car at (1, 2), facing 45";
        let first = check_src(src).unwrap();
        let second = check(first.program.clone(), first.program_hash).unwrap();
        assert_eq!(first, second);
    }
}
