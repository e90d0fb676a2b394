//! Static scene sampling: expression evaluation, specifier resolution, and
//! rejection sampling against hard and soft requirements.
//!
//! All randomness comes from one seeded [`Pcg32`] stream in a fixed order:
//! soft-requirement activations are drawn once per [`sample_scene`] call (one
//! draw per soft requirement, declaration order), then each rejection attempt
//! evaluates the program's items in declaration order, expressions left to
//! right. A soft requirement `require[p] C` is enforced as hard for the whole
//! call with probability `p` and ignored otherwise, so the constraint holds
//! in at least fraction `p` of sampled scenes.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dsl::{
    BinOp, CheckedProgram, Expr, ExprKind, Item, ObjectDecl, Requirement, Specifier, UnOp,
};
use crate::geom::{bearing, heading_dir, normalize_angle, Vec2};
use crate::rng::Pcg32;
use crate::scene::{
    footprints_overlap, BehaviorBinding, BoundValue, Dims, Scene, SceneObject,
};
use crate::world::WorldModel;

/// Attempt budget used when callers do not override it.
pub const DEFAULT_MAX_REJECTIONS: u32 = 2000;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Bool(bool),
    Point(Vec2),
    /// Scene object id.
    Object(u32),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Bool(_) => "bool",
            Value::Point(_) => "point",
            Value::Object(_) => "object",
        }
    }
}

/// Pose information an evaluation environment exposes per object.
#[derive(Debug, Clone, Copy)]
pub struct ObjectView {
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
}

/// Name and pose lookup for expression evaluation; implemented by the
/// sampler for static scenes and by the behavior runtime for live states.
pub trait EvalEnv {
    fn lookup(&self, name: &str) -> Option<Value>;
    fn object_view(&self, id: u32) -> Option<ObjectView>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    Domain,
    DivByZero,
    UnknownName,
    UnplacedReference,
    TypeMismatch,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl EvalError {
    fn new(kind: EvalErrorKind, e: &Expr, message: impl Into<String>) -> Self {
        EvalError {
            kind,
            line: e.line,
            col: e.col,
            message: message.into(),
        }
    }
}

fn scalar(v: Value, e: &Expr) -> Result<f64, EvalError> {
    match v {
        Value::Scalar(s) => Ok(s),
        other => Err(EvalError::new(
            EvalErrorKind::TypeMismatch,
            e,
            format!("expected scalar, got {}", other.type_name()),
        )),
    }
}

fn boolean(v: Value, e: &Expr) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::new(
            EvalErrorKind::TypeMismatch,
            e,
            format!("expected bool, got {}", other.type_name()),
        )),
    }
}

fn view_of(env: &dyn EvalEnv, id: u32, e: &Expr) -> Result<ObjectView, EvalError> {
    env.object_view(id).ok_or_else(|| {
        EvalError::new(
            EvalErrorKind::UnplacedReference,
            e,
            "object referenced before placement",
        )
    })
}

fn as_position(v: Value, env: &dyn EvalEnv, e: &Expr) -> Result<Vec2, EvalError> {
    match v {
        Value::Point(p) => Ok(p),
        Value::Object(id) => Ok(view_of(env, id, e)?.pos),
        other => Err(EvalError::new(
            EvalErrorKind::TypeMismatch,
            e,
            format!("expected object or point, got {}", other.type_name()),
        )),
    }
}

/// Evaluate an expression. Distribution calls draw from `rng` on every
/// evaluation; `Options` evaluates only the selected element.
pub fn eval(e: &Expr, env: &dyn EvalEnv, rng: &mut Pcg32) -> Result<Value, EvalError> {
    match &e.kind {
        ExprKind::Number(n) => Ok(Value::Scalar(*n)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Ident(name) => env.lookup(name).ok_or_else(|| {
            EvalError::new(
                EvalErrorKind::UnknownName,
                e,
                format!("unknown name '{name}'"),
            )
        }),
        ExprKind::Unary(UnOp::Neg, inner) => {
            let v = scalar(eval(inner, env, rng)?, inner)?;
            Ok(Value::Scalar(-v))
        }
        ExprKind::Unary(UnOp::Not, inner) => {
            let v = boolean(eval(inner, env, rng)?, inner)?;
            Ok(Value::Bool(!v))
        }
        ExprKind::Binary(op, l, r) => match op {
            BinOp::And => {
                let lv = boolean(eval(l, env, rng)?, l)?;
                if !lv {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(boolean(eval(r, env, rng)?, r)?))
            }
            BinOp::Or => {
                let lv = boolean(eval(l, env, rng)?, l)?;
                if lv {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(boolean(eval(r, env, rng)?, r)?))
            }
            _ => {
                let lv = scalar(eval(l, env, rng)?, l)?;
                let rv = scalar(eval(r, env, rng)?, r)?;
                match op {
                    BinOp::Add => Ok(Value::Scalar(lv + rv)),
                    BinOp::Sub => Ok(Value::Scalar(lv - rv)),
                    BinOp::Mul => Ok(Value::Scalar(lv * rv)),
                    BinOp::Div => {
                        if rv == 0.0 {
                            return Err(EvalError::new(
                                EvalErrorKind::DivByZero,
                                e,
                                "division by zero",
                            ));
                        }
                        Ok(Value::Scalar(lv / rv))
                    }
                    BinOp::Lt => Ok(Value::Bool(lv < rv)),
                    BinOp::Le => Ok(Value::Bool(lv <= rv)),
                    BinOp::Gt => Ok(Value::Bool(lv > rv)),
                    BinOp::Ge => Ok(Value::Bool(lv >= rv)),
                    BinOp::Eq => Ok(Value::Bool(lv == rv)),
                    BinOp::Ne => Ok(Value::Bool(lv != rv)),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        },
        ExprKind::Point(x, y) => {
            let xv = scalar(eval(x, env, rng)?, x)?;
            let yv = scalar(eval(y, env, rng)?, y)?;
            Ok(Value::Point(Vec2::new(xv, yv)))
        }
        ExprKind::List(_) => Err(EvalError::new(
            EvalErrorKind::TypeMismatch,
            e,
            "list literal outside Options",
        )),
        ExprKind::Call { name, args } => eval_call(e, name, args, env, rng),
    }
}

fn eval_call(
    e: &Expr,
    name: &str,
    args: &[Expr],
    env: &dyn EvalEnv,
    rng: &mut Pcg32,
) -> Result<Value, EvalError> {
    match name {
        "dist" => {
            let a = as_position(eval(&args[0], env, rng)?, env, &args[0])?;
            let b = as_position(eval(&args[1], env, rng)?, env, &args[1])?;
            Ok(Value::Scalar(a.dist(b)))
        }
        "headingOf" => {
            let v = eval(&args[0], env, rng)?;
            match v {
                Value::Object(id) => Ok(Value::Scalar(view_of(env, id, &args[0])?.heading.to_degrees())),
                other => Err(EvalError::new(
                    EvalErrorKind::TypeMismatch,
                    &args[0],
                    format!("expected object, got {}", other.type_name()),
                )),
            }
        }
        "speedOf" => {
            let v = eval(&args[0], env, rng)?;
            match v {
                Value::Object(id) => Ok(Value::Scalar(view_of(env, id, &args[0])?.speed)),
                other => Err(EvalError::new(
                    EvalErrorKind::TypeMismatch,
                    &args[0],
                    format!("expected object, got {}", other.type_name()),
                )),
            }
        }
        "positionOf" => {
            let v = eval(&args[0], env, rng)?;
            match v {
                Value::Object(id) => Ok(Value::Point(view_of(env, id, &args[0])?.pos)),
                other => Err(EvalError::new(
                    EvalErrorKind::TypeMismatch,
                    &args[0],
                    format!("expected object, got {}", other.type_name()),
                )),
            }
        }
        "relativeHeading" => {
            let a = eval(&args[0], env, rng)?;
            let b = eval(&args[1], env, rng)?;
            match (a, b) {
                (Value::Object(ia), Value::Object(ib)) => {
                    let ha = view_of(env, ia, &args[0])?.heading;
                    let hb = view_of(env, ib, &args[1])?.heading;
                    Ok(Value::Scalar(normalize_angle(hb - ha).to_degrees()))
                }
                _ => Err(EvalError::new(
                    EvalErrorKind::TypeMismatch,
                    e,
                    "relativeHeading takes two objects",
                )),
            }
        }
        "Uniform" => {
            let a = scalar(eval(&args[0], env, rng)?, &args[0])?;
            let b = scalar(eval(&args[1], env, rng)?, &args[1])?;
            if b < a {
                return Err(EvalError::new(
                    EvalErrorKind::Domain,
                    e,
                    format!("Uniform bounds are inverted: [{a}, {b}]"),
                ));
            }
            let u = rng.next_double();
            Ok(Value::Scalar(a + u * (b - a)))
        }
        "Normal" => {
            let mu = scalar(eval(&args[0], env, rng)?, &args[0])?;
            let sigma = scalar(eval(&args[1], env, rng)?, &args[1])?;
            if sigma < 0.0 {
                return Err(EvalError::new(
                    EvalErrorKind::Domain,
                    e,
                    format!("Normal sigma is negative: {sigma}"),
                ));
            }
            // Box-Muller; always consumes two draws. 1 - u1 keeps the log
            // argument in (0, 1].
            let u1 = rng.next_double();
            let u2 = rng.next_double();
            let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            Ok(Value::Scalar(mu + sigma * z))
        }
        "Options" => {
            let ExprKind::List(items) = &args[0].kind else {
                return Err(EvalError::new(
                    EvalErrorKind::TypeMismatch,
                    &args[0],
                    "Options takes a [..] list",
                ));
            };
            let u = rng.next_double();
            let k = ((u * items.len() as f64) as usize).min(items.len() - 1);
            eval(&items[k], env, rng)
        }
        "sample" => eval(&args[0], env, rng),
        _ => Err(EvalError::new(
            EvalErrorKind::UnknownName,
            e,
            format!("unknown function '{name}'"),
        )),
    }
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("rejection budget exhausted after {attempts} attempts; last unsatisfied: {reason}")]
    RejectionBudgetExhausted { attempts: u32, reason: String },
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{line}:{col}: unknown lane '{lane}'")]
    UnknownLane { lane: String, line: u32, col: u32 },
}

/// Environment over a partially built scene.
struct SampleEnv<'a> {
    params: &'a BTreeMap<String, Value>,
    bindings: &'a BTreeMap<String, usize>,
    placed: &'a [SceneObject],
}

impl EvalEnv for SampleEnv<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if let Some(&idx) = self.bindings.get(name) {
            return Some(Value::Object(idx as u32 + 1));
        }
        self.params.get(name).cloned()
    }

    fn object_view(&self, id: u32) -> Option<ObjectView> {
        let idx = id.checked_sub(1)? as usize;
        let o = self.placed.get(idx)?;
        Some(ObjectView {
            pos: o.position(),
            heading: o.heading,
            speed: 0.0,
        })
    }
}

/// A resolved pose plus the properties gathered from `with` specifiers.
#[derive(Debug, Clone)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub dims: Dims,
    pub behavior: Option<BehaviorBinding>,
    pub allow_collisions: bool,
    pub color: Option<f64>,
}

/// Resolve one object's specifiers against the objects placed so far.
/// Expressions are evaluated in specifier order; position is combined before
/// heading so `facing toward` can see the resolved position.
pub fn resolve_specifiers(
    prog: &CheckedProgram,
    decl: &ObjectDecl,
    obj_index: usize,
    params: &BTreeMap<String, Value>,
    placed: &[SceneObject],
    world: &WorldModel,
    rng: &mut Pcg32,
) -> Result<Placement, SampleError> {
    let env = SampleEnv {
        params,
        bindings: &prog.bindings,
        placed,
    };

    let class = prog.object_classes[obj_index];
    let mut dims = class.default_dims();
    let mut pos: Option<Vec2> = None;
    let mut implied_heading: Option<f64> = None;
    let mut facing: Option<f64> = None;
    let mut facing_target: Option<Vec2> = None;
    let mut behavior = None;
    let mut allow_collisions = false;
    let mut color = None;

    for spec in &decl.specifiers {
        match spec {
            Specifier::At(p) => {
                let v = eval(p, &env, rng)?;
                pos = Some(as_position(v, &env, p)?);
            }
            Specifier::OnLane {
                lane,
                offset,
                line,
                col,
            } => {
                let lane_def = world.lane(lane).ok_or_else(|| SampleError::UnknownLane {
                    lane: lane.clone(),
                    line: *line,
                    col: *col,
                })?;
                let pl = lane_def.polyline();
                let u = rng.next_double();
                let arc = u * pl.total_length();
                let base = pl.point_at(arc);
                let tangent = pl.heading_at(arc);
                let s = match offset {
                    Some(off) => scalar(eval(off, &env, rng)?, off)?,
                    None => 0.0,
                };
                pos = Some(base + heading_dir(tangent + std::f64::consts::FRAC_PI_2) * s);
                implied_heading = Some(tangent);
            }
            Specifier::Ahead { of, by }
            | Specifier::Behind { of, by }
            | Specifier::LeftOf { of, by }
            | Specifier::RightOf { of, by } => {
                let refv = eval(of, &env, rng)?;
                let view = match refv {
                    Value::Object(id) => view_of(&env, id, of)?,
                    other => {
                        return Err(EvalError::new(
                            EvalErrorKind::TypeMismatch,
                            of,
                            format!("expected object, got {}", other.type_name()),
                        )
                        .into())
                    }
                };
                let d = scalar(eval(by, &env, rng)?, by)?;
                let offset_heading = match spec {
                    Specifier::Ahead { .. } => view.heading,
                    Specifier::Behind { .. } => view.heading + std::f64::consts::PI,
                    Specifier::LeftOf { .. } => view.heading + std::f64::consts::FRAC_PI_2,
                    Specifier::RightOf { .. } => view.heading - std::f64::consts::FRAC_PI_2,
                    _ => unreachable!(),
                };
                pos = Some(view.pos + heading_dir(offset_heading) * d);
                implied_heading = Some(view.heading);
            }
            Specifier::Facing(expr) => {
                let deg = scalar(eval(expr, &env, rng)?, expr)?;
                facing = Some(deg.to_radians());
            }
            Specifier::FacingToward(p) => {
                let v = eval(p, &env, rng)?;
                facing_target = Some(as_position(v, &env, p)?);
            }
            Specifier::With {
                property, value, ..
            } => match property.as_str() {
                "behavior" => {
                    let (name, arg_exprs): (&str, &[Expr]) = match &value.kind {
                        ExprKind::Call { name, args } => (name, args),
                        ExprKind::Ident(name) => (name, &[]),
                        _ => unreachable!("checked behavior binding shape"),
                    };
                    let mut bound = Vec::with_capacity(arg_exprs.len());
                    for a in arg_exprs {
                        let v = eval(a, &env, rng)?;
                        bound.push(match v {
                            Value::Scalar(s) => BoundValue::Scalar(s),
                            Value::Bool(b) => BoundValue::Bool(b),
                            Value::Point(p) => BoundValue::Point([p.x, p.y]),
                            Value::Object(id) => BoundValue::Object(id),
                        });
                    }
                    behavior = Some(BehaviorBinding {
                        name: name.to_string(),
                        args: bound,
                    });
                }
                "allowCollisions" => {
                    allow_collisions = boolean(eval(value, &env, rng)?, value)?;
                }
                "color" => {
                    color = Some(scalar(eval(value, &env, rng)?, value)?);
                }
                dim_name @ ("length" | "width" | "height") => {
                    let v = scalar(eval(value, &env, rng)?, value)?;
                    if !(v > 0.0) {
                        return Err(EvalError::new(
                            EvalErrorKind::Domain,
                            value,
                            format!("{dim_name} must be positive, got {v}"),
                        )
                        .into());
                    }
                    match dim_name {
                        "length" => dims.length = v,
                        "width" => dims.width = v,
                        _ => dims.height = v,
                    }
                }
                _ => unreachable!("checked property set"),
            },
        }
    }

    let pos = pos.unwrap_or(Vec2::new(0.0, 0.0));
    let heading = if let Some(h) = facing {
        h
    } else if let Some(target) = facing_target {
        bearing(pos, target)
    } else {
        implied_heading.unwrap_or(0.0)
    };

    Ok(Placement {
        x: pos.x,
        y: pos.y,
        heading: normalize_angle(heading),
        dims,
        behavior,
        allow_collisions,
        color,
    })
}

enum AttemptFailure {
    Reject(String),
    Fatal(SampleError),
}

impl From<SampleError> for AttemptFailure {
    fn from(e: SampleError) -> Self {
        AttemptFailure::Fatal(e)
    }
}

impl From<EvalError> for AttemptFailure {
    fn from(e: EvalError) -> Self {
        AttemptFailure::Fatal(e.into())
    }
}

/// An accepted scene plus the state needed to continue the run: the attempt
/// count and the RNG positioned right after static sampling, so dynamic
/// draws extend the same stream.
#[derive(Debug, Clone)]
pub struct SampleResult {
    pub scene: Scene,
    pub attempts: u32,
    pub rng: Pcg32,
}

/// Sample one scene; returns the scene with sampling bookkeeping.
pub fn sample_scene_traced(
    prog: &CheckedProgram,
    world: &WorldModel,
    seed: u64,
    max_rejections: u32,
) -> Result<SampleResult, SampleError> {
    assert!(max_rejections >= 1, "max_rejections must be at least 1");
    let mut rng = Pcg32::new(seed);

    let requirements: Vec<&Requirement> = prog.program.requirements().collect();
    let active: Vec<bool> = requirements
        .iter()
        .map(|r| match r.prob {
            Some(p) => rng.next_double() < p,
            None => true,
        })
        .collect();

    let n_objects = prog.object_classes.len();
    let props = world.prop_objects(n_objects as u32 + 1);

    let mut last_reason = String::from("no attempt recorded");
    for attempt in 1..=max_rejections {
        match attempt_scene(prog, world, &props, &requirements, &active, &mut rng) {
            Ok(mut objects) => {
                objects.extend(props.iter().cloned());
                let scene = Scene {
                    objects,
                    world: world.clone(),
                    seed,
                    program_hash: prog.program_hash,
                };
                return Ok(SampleResult {
                    scene,
                    attempts: attempt,
                    rng,
                });
            }
            Err(AttemptFailure::Reject(reason)) => last_reason = reason,
            Err(AttemptFailure::Fatal(e)) => return Err(e),
        }
    }
    Err(SampleError::RejectionBudgetExhausted {
        attempts: max_rejections,
        reason: last_reason,
    })
}

/// Sample one scene satisfying every hard requirement, every activated soft
/// requirement, and the built-in no-overlap constraint.
pub fn sample_scene(
    prog: &CheckedProgram,
    world: &WorldModel,
    seed: u64,
    max_rejections: u32,
) -> Result<Scene, SampleError> {
    sample_scene_traced(prog, world, seed, max_rejections).map(|r| r.scene)
}

fn attempt_scene(
    prog: &CheckedProgram,
    _world: &WorldModel,
    props: &[SceneObject],
    requirements: &[&Requirement],
    active: &[bool],
    rng: &mut Pcg32,
) -> Result<Vec<SceneObject>, AttemptFailure> {
    let mut params: BTreeMap<String, Value> = BTreeMap::new();
    let mut placed: Vec<SceneObject> = Vec::with_capacity(prog.object_classes.len());
    let mut obj_index = 0usize;

    for item in &prog.program.items {
        match item {
            Item::Param(p) => {
                let env = SampleEnv {
                    params: &params,
                    bindings: &prog.bindings,
                    placed: &placed,
                };
                let v = eval(&p.value, &env, rng)?;
                params.insert(p.name.clone(), v);
            }
            Item::Object(decl) => {
                let placement = resolve_specifiers(
                    prog, decl, obj_index, &params, &placed, _world, rng,
                )?;
                let obj = SceneObject {
                    id: obj_index as u32 + 1,
                    class: prog.object_classes[obj_index].semantic_class(),
                    x: placement.x,
                    y: placement.y,
                    z: 0.0,
                    heading: placement.heading,
                    dims: placement.dims,
                    behavior: placement.behavior,
                    is_ego: obj_index == prog.ego_index,
                    allow_collisions: placement.allow_collisions,
                    color: placement.color,
                };
                if !obj.allow_collisions {
                    for other in placed.iter().chain(props.iter()) {
                        if !other.allow_collisions && footprints_overlap(&obj, other) {
                            return Err(AttemptFailure::Reject(format!(
                                "objects {} and {} overlap",
                                obj.id, other.id
                            )));
                        }
                    }
                }
                placed.push(obj);
                obj_index += 1;
            }
            Item::Require(_) | Item::Behavior(_) => {}
        }
    }

    let env = SampleEnv {
        params: &params,
        bindings: &prog.bindings,
        placed: &placed,
    };
    for (k, req) in requirements.iter().enumerate() {
        if !active[k] {
            continue;
        }
        let v = eval(&req.expr, &env, rng).map_err(AttemptFailure::from)?;
        let ok = boolean(v, &req.expr).map_err(AttemptFailure::from)?;
        if !ok {
            return Err(AttemptFailure::Reject(format!(
                "requirement at {}:{} unsatisfied",
                req.line, req.col
            )));
        }
    }

    Ok(placed)
}
