//! Resumable behavior interpreter.
//!
//! Each agent's behavior runs as an explicit frame stack over the checked
//! AST, suspended at every `take`/`wait` and resumed the next step. Interrupt
//! conditions are evaluated before a try's body runs or resumes: at step
//! start for every try currently executing its body (outermost firing `try`
//! wins, and within one `try` the textually last firing handler wins), when
//! a `try` statement is first entered, and again when a handler completes.
//! The interrupted body frames are kept aside and restored when the handler
//! finishes. A handler is never interrupted by its own `try`, only by
//! enclosing ones.
//!
//! Behaviors are closed over their bound arguments; they resolve `self`,
//! `ego`, the program's object names, and their own parameters. Program
//! parameters are sampling-time values and must be passed in as arguments.

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::dsl::{CheckedProgram, Expr, Handler, Item, Stmt};
use crate::geom::Vec2;
use crate::rng::Pcg32;
use crate::sampler::{eval, EvalEnv, EvalError, ObjectView, Value};
use crate::scene::{BoundValue, Scene, SemanticClass};
use crate::sim::dynamics::{Action, AgentState};

/// Statement dispatches allowed per agent per step before the run aborts;
/// a behavior spinning without `take`/`wait` hits this.
const EXEC_BUDGET: u32 = 100_000;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("agent {agent} at {line}:{col}: {message}")]
pub struct BehaviorError {
    pub agent: u32,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl BehaviorError {
    fn from_eval(agent: u32, e: EvalError) -> Self {
        BehaviorError {
            agent,
            line: e.line,
            col: e.col,
            message: e.message,
        }
    }
}

/// Result of resuming a behavior for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Action(Action),
    Done,
}

#[derive(Debug, Clone)]
enum TryMode {
    Body,
    /// A handler is running; the suspended body frames resume when it ends.
    InHandler { suspended: Vec<Frame> },
}

#[derive(Debug, Clone)]
enum Frame {
    /// Argument bindings for the behavior invocation below the frames above.
    Call { env: BTreeMap<String, Value> },
    Block { stmts: Rc<Vec<Stmt>>, idx: usize },
    While { cond: Expr, body: Rc<Vec<Stmt>> },
    Try { handlers: Vec<Handler>, mode: TryMode },
}

/// Suspended execution state of one agent's behavior.
#[derive(Debug, Clone)]
pub struct BehaviorInstance {
    frames: Vec<Frame>,
    done: bool,
}

struct BehaviorDefRef {
    params: Vec<String>,
    body: Rc<Vec<Stmt>>,
}

/// Executes all behavior-bearing agents of one scene against externally
/// supplied ground-truth states. The runtime never integrates physics; it
/// only reads the states handed to it each step.
pub struct BehaviorRuntime {
    defs: BTreeMap<String, BehaviorDefRef>,
    /// Object binding name to scene object id.
    bindings: BTreeMap<String, u32>,
    classes: BTreeMap<u32, SemanticClass>,
    states: BTreeMap<u32, AgentState>,
    instances: BTreeMap<u32, BehaviorInstance>,
    rng: Pcg32,
}

struct RuntimeEnv<'a> {
    self_id: u32,
    call_env: Option<&'a BTreeMap<String, Value>>,
    bindings: &'a BTreeMap<String, u32>,
    states: &'a BTreeMap<u32, AgentState>,
}

impl EvalEnv for RuntimeEnv<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        if name == "self" {
            return Some(Value::Object(self.self_id));
        }
        if let Some(v) = self.call_env.and_then(|env| env.get(name)) {
            return Some(v.clone());
        }
        self.bindings.get(name).map(|&id| Value::Object(id))
    }

    fn object_view(&self, id: u32) -> Option<ObjectView> {
        self.states.get(&id).map(|s| ObjectView {
            pos: Vec2::new(s.x, s.y),
            heading: s.heading,
            speed: s.speed,
        })
    }
}

enum Dispatch {
    Stmt(Rc<Vec<Stmt>>, usize),
    BlockDone,
    WhileCheck(Expr, Rc<Vec<Stmt>>),
    TryBodyDone,
    HandlerDone,
    CallDone,
}

impl BehaviorRuntime {
    /// Build instances for every behavior-bearing object in the scene. The
    /// generator must hand over the sampling RNG so runtime draws continue
    /// the same stream.
    pub fn new(scene: &Scene, prog: &CheckedProgram, rng: Pcg32) -> Result<Self, BehaviorError> {
        let mut defs = BTreeMap::new();
        for item in &prog.program.items {
            if let Item::Behavior(b) = item {
                defs.insert(
                    b.name.clone(),
                    BehaviorDefRef {
                        params: b.params.clone(),
                        body: Rc::clone(&b.body),
                    },
                );
            }
        }

        let bindings: BTreeMap<String, u32> = prog
            .bindings
            .iter()
            .map(|(name, &idx)| (name.clone(), idx as u32 + 1))
            .collect();

        let mut classes = BTreeMap::new();
        let mut states = BTreeMap::new();
        let mut instances = BTreeMap::new();
        for obj in &scene.objects {
            classes.insert(obj.id, obj.class);
            states.insert(
                obj.id,
                AgentState {
                    x: obj.x,
                    y: obj.y,
                    heading: obj.heading,
                    speed: 0.0,
                },
            );
            if let Some(binding) = &obj.behavior {
                let def = defs.get(&binding.name).ok_or_else(|| BehaviorError {
                    agent: obj.id,
                    line: 0,
                    col: 0,
                    message: format!("behavior '{}' is not defined", binding.name),
                })?;
                if def.params.len() != binding.args.len() {
                    return Err(BehaviorError {
                        agent: obj.id,
                        line: 0,
                        col: 0,
                        message: format!(
                            "behavior '{}' takes {} argument(s), got {}",
                            binding.name,
                            def.params.len(),
                            binding.args.len()
                        ),
                    });
                }
                let env: BTreeMap<String, Value> = def
                    .params
                    .iter()
                    .cloned()
                    .zip(binding.args.iter().map(bound_to_value))
                    .collect();
                instances.insert(
                    obj.id,
                    BehaviorInstance {
                        frames: vec![
                            Frame::Call { env },
                            Frame::Block {
                                stmts: Rc::clone(&def.body),
                                idx: 0,
                            },
                        ],
                        done: false,
                    },
                );
            }
        }

        Ok(BehaviorRuntime {
            defs,
            bindings,
            classes,
            states,
            instances,
            rng,
        })
    }

    /// Ids of agents that produce actions, ascending.
    pub fn agent_ids(&self) -> Vec<u32> {
        self.instances.keys().copied().collect()
    }

    pub fn class_of(&self, id: u32) -> Option<SemanticClass> {
        self.classes.get(&id).copied()
    }

    /// Replace the ground-truth view with externally integrated states.
    pub fn update_states<'a>(&mut self, states: impl IntoIterator<Item = (u32, AgentState)>) {
        for (id, s) in states {
            self.states.insert(id, s);
        }
    }

    /// Ingest a wire state message and answer with the step's actions. The
    /// runtime's world view is exactly what the message says; it never
    /// integrates states itself.
    pub fn actions_for_state(
        &mut self,
        msg: &crate::protocol::StateMsg,
    ) -> Result<Vec<(u32, Action)>, BehaviorError> {
        self.update_states(msg.agents.iter().map(|a| {
            (
                a.id,
                AgentState {
                    x: a.x,
                    y: a.y,
                    heading: a.heading,
                    speed: a.speed,
                },
            )
        }));
        self.step_actions()
    }

    /// One action per behavior-bearing agent, ascending id order. Completed
    /// behaviors coast.
    pub fn step_actions(&mut self) -> Result<Vec<(u32, Action)>, BehaviorError> {
        let ids = self.agent_ids();
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let action = match self.next_action(id)? {
                StepOutcome::Action(a) => a,
                StepOutcome::Done => Action::coast(),
            };
            out.push((id, action));
        }
        Ok(out)
    }

    /// Resume one agent's behavior until its next `take` or `wait`.
    pub fn next_action(&mut self, agent: u32) -> Result<StepOutcome, BehaviorError> {
        let mut inst = self.instances.remove(&agent).unwrap_or(BehaviorInstance {
            frames: Vec::new(),
            done: true,
        });
        let result = self.drive(&mut inst, agent);
        self.instances.insert(agent, inst);
        result
    }

    fn drive(&mut self, inst: &mut BehaviorInstance, agent: u32) -> Result<StepOutcome, BehaviorError> {
        if inst.done {
            return Ok(StepOutcome::Done);
        }
        self.scan_interrupts(inst, agent)?;

        let mut budget = EXEC_BUDGET;
        loop {
            budget -= 1;
            if budget == 0 {
                return Err(BehaviorError {
                    agent,
                    line: 0,
                    col: 0,
                    message: "behavior made no progress (loop without take/wait?)".to_string(),
                });
            }
            if inst.frames.is_empty() {
                inst.done = true;
                return Ok(StepOutcome::Done);
            }

            let top = inst.frames.len() - 1;
            let dispatch = match &mut inst.frames[top] {
                Frame::Block { stmts, idx } => {
                    if *idx >= stmts.len() {
                        Dispatch::BlockDone
                    } else {
                        let d = Dispatch::Stmt(Rc::clone(stmts), *idx);
                        *idx += 1;
                        d
                    }
                }
                Frame::While { cond, body } => Dispatch::WhileCheck(cond.clone(), Rc::clone(body)),
                Frame::Try { mode: TryMode::Body, .. } => Dispatch::TryBodyDone,
                Frame::Try { mode: TryMode::InHandler { .. }, .. } => Dispatch::HandlerDone,
                Frame::Call { .. } => Dispatch::CallDone,
            };

            match dispatch {
                Dispatch::BlockDone | Dispatch::TryBodyDone | Dispatch::CallDone => {
                    inst.frames.pop();
                }
                Dispatch::HandlerDone => {
                    let try_idx = inst.frames.len() - 1;
                    let Some(Frame::Try { mode, .. }) = inst.frames.last_mut() else {
                        unreachable!()
                    };
                    let TryMode::InHandler { suspended } =
                        std::mem::replace(mode, TryMode::Body)
                    else {
                        unreachable!()
                    };
                    inst.frames.extend(suspended);
                    // Conditions are re-checked before the body resumes.
                    self.fire_if_triggered(inst, try_idx, agent)?;
                }
                Dispatch::WhileCheck(cond, body) => {
                    if self.eval_bool(inst, agent, &cond)? {
                        inst.frames.push(Frame::Block { stmts: body, idx: 0 });
                    } else {
                        inst.frames.pop();
                    }
                }
                Dispatch::Stmt(stmts, i) => match &stmts[i] {
                    Stmt::Take {
                        throttle,
                        steer,
                        brake,
                        ..
                    } => {
                        let t = self.eval_scalar(inst, agent, throttle)?;
                        let s = self.eval_scalar(inst, agent, steer)?;
                        let b = self.eval_scalar(inst, agent, brake)?;
                        return Ok(StepOutcome::Action(Action::new(t, s, b)));
                    }
                    Stmt::Wait => return Ok(StepOutcome::Action(Action::coast())),
                    Stmt::Do { name, args, line, col } => {
                        let def = self.defs.get(name).ok_or_else(|| BehaviorError {
                            agent,
                            line: *line,
                            col: *col,
                            message: format!("behavior '{name}' is not defined"),
                        })?;
                        let (params, body) = (def.params.clone(), Rc::clone(&def.body));
                        let mut env = BTreeMap::new();
                        for (p, a) in params.iter().zip(args.iter()) {
                            let v = self.eval_value(inst, agent, a)?;
                            env.insert(p.clone(), v);
                        }
                        inst.frames.push(Frame::Call { env });
                        inst.frames.push(Frame::Block { stmts: body, idx: 0 });
                    }
                    Stmt::If {
                        cond,
                        then_body,
                        else_body,
                    } => {
                        if self.eval_bool(inst, agent, cond)? {
                            inst.frames.push(Frame::Block {
                                stmts: Rc::clone(then_body),
                                idx: 0,
                            });
                        } else if let Some(e) = else_body {
                            inst.frames.push(Frame::Block {
                                stmts: Rc::clone(e),
                                idx: 0,
                            });
                        }
                    }
                    Stmt::While { cond, body } => {
                        inst.frames.push(Frame::While {
                            cond: cond.clone(),
                            body: Rc::clone(body),
                        });
                    }
                    Stmt::Try { body, handlers } => {
                        // Entering a try checks its conditions right away;
                        // the body only starts when none fire.
                        let mut fired = None;
                        for h in (0..handlers.len()).rev() {
                            if self.eval_bool(inst, agent, &handlers[h].cond)? {
                                fired = Some(h);
                                break;
                            }
                        }
                        let body_frame = Frame::Block {
                            stmts: Rc::clone(body),
                            idx: 0,
                        };
                        match fired {
                            None => {
                                inst.frames.push(Frame::Try {
                                    handlers: handlers.clone(),
                                    mode: TryMode::Body,
                                });
                                inst.frames.push(body_frame);
                            }
                            Some(h) => {
                                let hbody = Rc::clone(&handlers[h].body);
                                inst.frames.push(Frame::Try {
                                    handlers: handlers.clone(),
                                    mode: TryMode::InHandler {
                                        suspended: vec![body_frame],
                                    },
                                });
                                inst.frames.push(Frame::Block {
                                    stmts: hbody,
                                    idx: 0,
                                });
                            }
                        }
                    }
                },
            }
        }
    }

    /// Outermost active try with a firing condition wins; within one try the
    /// textually last firing handler wins.
    fn scan_interrupts(&mut self, inst: &mut BehaviorInstance, agent: u32) -> Result<(), BehaviorError> {
        for i in 0..inst.frames.len() {
            if self.fire_if_triggered(inst, i, agent)? {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Evaluate the handler conditions of the try at frame `i` (when it is
    /// executing its body) in reverse textual order and transfer control to
    /// the first that holds.
    fn fire_if_triggered(
        &mut self,
        inst: &mut BehaviorInstance,
        i: usize,
        agent: u32,
    ) -> Result<bool, BehaviorError> {
        let handlers = match &inst.frames[i] {
            Frame::Try {
                handlers,
                mode: TryMode::Body,
            } => handlers.clone(),
            _ => return Ok(false),
        };
        for h in (0..handlers.len()).rev() {
            if self.eval_bool_at(inst, i, agent, &handlers[h].cond)? {
                let suspended = inst.frames.split_off(i + 1);
                let Frame::Try { mode, .. } = &mut inst.frames[i] else {
                    unreachable!()
                };
                *mode = TryMode::InHandler { suspended };
                inst.frames.push(Frame::Block {
                    stmts: Rc::clone(&handlers[h].body),
                    idx: 0,
                });
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn eval_value_at(
        &mut self,
        inst: &BehaviorInstance,
        upto: usize,
        agent: u32,
        e: &Expr,
    ) -> Result<Value, BehaviorError> {
        let call_env = inst.frames[..=upto].iter().rev().find_map(|f| match f {
            Frame::Call { env } => Some(env),
            _ => None,
        });
        let env = RuntimeEnv {
            self_id: agent,
            call_env,
            bindings: &self.bindings,
            states: &self.states,
        };
        eval(e, &env, &mut self.rng).map_err(|err| BehaviorError::from_eval(agent, err))
    }

    fn eval_value(&mut self, inst: &BehaviorInstance, agent: u32, e: &Expr) -> Result<Value, BehaviorError> {
        let upto = inst.frames.len().saturating_sub(1);
        self.eval_value_at(inst, upto, agent, e)
    }

    fn eval_scalar(&mut self, inst: &BehaviorInstance, agent: u32, e: &Expr) -> Result<f64, BehaviorError> {
        match self.eval_value(inst, agent, e)? {
            Value::Scalar(s) => Ok(s),
            other => Err(BehaviorError {
                agent,
                line: e.line,
                col: e.col,
                message: format!("expected scalar, got {other:?}"),
            }),
        }
    }

    fn eval_bool_at(
        &mut self,
        inst: &BehaviorInstance,
        upto: usize,
        agent: u32,
        e: &Expr,
    ) -> Result<bool, BehaviorError> {
        match self.eval_value_at(inst, upto, agent, e)? {
            Value::Bool(b) => Ok(b),
            other => Err(BehaviorError {
                agent,
                line: e.line,
                col: e.col,
                message: format!("expected bool, got {other:?}"),
            }),
        }
    }

    fn eval_bool(&mut self, inst: &BehaviorInstance, agent: u32, e: &Expr) -> Result<bool, BehaviorError> {
        let upto = inst.frames.len().saturating_sub(1);
        self.eval_bool_at(inst, upto, agent, e)
    }
}

fn bound_to_value(b: &BoundValue) -> Value {
    match b {
        BoundValue::Scalar(s) => Value::Scalar(*s),
        BoundValue::Bool(b) => Value::Bool(*b),
        BoundValue::Point(p) => Value::Point(Vec2::new(p[0], p[1])),
        BoundValue::Object(id) => Value::Object(*id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::compile;
    use crate::sampler::sample_scene;
    use crate::world::WorldModel;

    fn runtime_for(src: &str) -> BehaviorRuntime {
        let prog = compile(src).expect("compiles");
        let scene = sample_scene(&prog, &WorldModel::flat_ground(), 1, 50).expect("samples");
        BehaviorRuntime::new(&scene, &prog, Pcg32::new(99)).expect("runtime")
    }

    #[test]
    fn constant_behavior_repeats() {
        let mut rt = runtime_for(
            "behavior B():\n  while true:\n    take Action(0.5, 0, 0)\n  end\nend\nego = new Car at (0, 0), with behavior B()",
        );
        for _ in 0..5 {
            let out = rt.next_action(1).unwrap();
            assert_eq!(out, StepOutcome::Action(Action::new(0.5, 0.0, 0.0)));
        }
    }

    #[test]
    fn finite_behavior_finishes_then_reports_done() {
        let mut rt = runtime_for(
            "behavior B():\n  take Action(1, 0, 0)\n  take Action(0, 0, 1)\nend\nego = new Car at (0, 0), with behavior B()",
        );
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(1.0, 0.0, 0.0)));
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.0, 0.0, 1.0)));
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Done);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Done);
    }

    #[test]
    fn wait_is_a_zero_action() {
        let mut rt = runtime_for(
            "behavior B():\n  wait\nend\nego = new Car at (0, 0), with behavior B()",
        );
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::coast()));
    }

    // Interrupt fires while the other agent is close, and the body resumes
    // where it was suspended once it recedes.
    #[test]
    fn interrupt_transfers_and_resumes() {
        let src = "behavior B():\n  try:\n    while true:\n      take Action(0.6, 0, 0)\n    end\n  interrupt when dist(self, npc) < 10:\n    take Action(0, 0, 1)\n  end\nend\n\
                   ego = new Car at (0, 0), with behavior B()\nnpc = new Car at (50, 0)";
        let mut rt = runtime_for(src);
        // Far away: cruise.
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.6, 0.0, 0.0)));
        // Bring npc close: handler takes over for one step.
        rt.update_states([(2, AgentState { x: 5.0, y: 0.0, heading: 0.0, speed: 0.0 })]);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.0, 0.0, 1.0)));
        // Handler body finished; npc recedes; cruise resumes.
        rt.update_states([(2, AgentState { x: 50.0, y: 0.0, heading: 0.0, speed: 0.0 })]);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.6, 0.0, 0.0)));
    }

    #[test]
    fn textually_last_handler_wins() {
        let src = "behavior B():\n  try:\n    while true:\n      wait\n    end\n  interrupt when true:\n    take Action(0.1, 0, 0)\n  interrupt when true:\n    take Action(0.9, 0, 0)\n  end\nend\n\
                   ego = new Car at (0, 0), with behavior B()";
        let mut rt = runtime_for(src);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.9, 0.0, 0.0)));
    }

    #[test]
    fn handler_not_interrupted_by_own_try() {
        // Handler runs two takes; its own condition staying true must not
        // restart it.
        let src = "behavior B():\n  try:\n    while true:\n      wait\n    end\n  interrupt when dist(self, npc) < 10:\n    take Action(0.2, 0, 0)\n    take Action(0.4, 0, 0)\n  end\nend\n\
                   ego = new Car at (0, 0), with behavior B()\nnpc = new Car at (5, 0), with allowCollisions true";
        let mut rt = runtime_for(src);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.2, 0.0, 0.0)));
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.4, 0.0, 0.0)));
        // Handler done; body resumes (wait), then fires again next step.
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.2, 0.0, 0.0)));
    }

    #[test]
    fn do_invokes_sub_behavior_with_args() {
        let src = "behavior Inner(v):\n  take Action(v, 0, 0)\nend\nbehavior Outer():\n  do Inner(0.3)\n  take Action(0.7, 0, 0)\nend\n\
                   ego = new Car at (0, 0), with behavior Outer()";
        let mut rt = runtime_for(src);
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.3, 0.0, 0.0)));
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Action(Action::new(0.7, 0.0, 0.0)));
        assert_eq!(rt.next_action(1).unwrap(), StepOutcome::Done);
    }

    #[test]
    fn runaway_loop_reports_error() {
        let src = "behavior B():\n  while true:\n    if false:\n      wait\n    end\n  end\nend\nego = new Car at (0, 0), with behavior B()";
        let mut rt = runtime_for(src);
        let err = rt.next_action(1).unwrap_err();
        assert!(err.message.contains("no progress"));
    }

    #[test]
    fn division_by_zero_aborts_with_location() {
        let src = "behavior B():\n  take Action(1 / (speedOf(self) - speedOf(self)), 0, 0)\nend\nego = new Car at (0, 0), with behavior B()";
        let mut rt = runtime_for(src);
        let err = rt.next_action(1).unwrap_err();
        assert_eq!(err.agent, 1);
        assert!(err.line > 0);
        assert!(err.message.contains("division"));
    }

    #[test]
    fn step_actions_covers_all_behaving_agents() {
        let src = "behavior B():\n  take Action(1, 0, 0)\nend\n\
                   ego = new Car at (0, 0), with behavior B()\nnpc = new Car at (20, 0), with behavior B()\nwall = new Building at (40, 0)";
        let mut rt = runtime_for(src);
        let acts = rt.step_actions().unwrap();
        assert_eq!(acts.iter().map(|(id, _)| *id).collect::<Vec<_>>(), vec![1, 2]);
        // Both finished; they coast from now on.
        let acts = rt.step_actions().unwrap();
        assert_eq!(acts, vec![(1, Action::coast()), (2, Action::coast())]);
    }
}
