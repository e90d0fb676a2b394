//! Lockstep state/action exchange between the simulator and a behavior
//! server, as newline-delimited JSON over a byte stream.
//!
//! A session is strictly alternating: the client (the simulator) sends
//! `hello`, the server acknowledges with its own `hello`, then every `state`
//! message is answered by exactly one `action` message, and the client closes
//! with `bye`. The server never integrates physics; it recovers the sampled
//! scene from the hello's seed and scenario hash and answers from the
//! behavior runtime against the ground truth states it is sent.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::CheckedProgram;
use crate::sampler::{sample_scene_traced, SampleError, DEFAULT_MAX_REJECTIONS};
use crate::sim::{ActionSource, BehaviorError, BehaviorRuntime, SimError};
use crate::sim::dynamics::Action;
use crate::world::WorldModel;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WireAgentState {
    pub id: u32,
    pub class: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

/// Ground truth for one timestep; agents sorted by id ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub step: u64,
    pub time: f64,
    pub agents: Vec<WireAgentState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WireAction {
    pub id: u32,
    pub throttle: f64,
    pub steer: f64,
    pub brake: f64,
}

/// Answer to a [`StateMsg`]; one entry per behavior-bearing agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMsg {
    pub step: u64,
    pub actions: Vec<WireAction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HelloMsg {
    pub version: u32,
    pub scenario_hash: u64,
    pub seed: u64,
    pub dt: f64,
    pub agent_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByeMsg {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Msg {
    Hello(HelloMsg),
    State(StateMsg),
    Action(ActionMsg),
    Bye(ByeMsg),
}

#[derive(Debug, Error)]
#[error("cannot decode message line {line:?}: {source}")]
pub struct DecodeError {
    /// The offending line, truncated for reporting.
    pub line: String,
    #[source]
    pub source: serde_json::Error,
}

/// One message as a JSON line, trailing newline included.
pub fn encode(msg: &Msg) -> String {
    let mut s = serde_json::to_string(msg).expect("protocol messages always serialize");
    s.push('\n');
    s
}

/// Parse one line; never panics on malformed input.
pub fn decode(line: &str) -> Result<Msg, DecodeError> {
    serde_json::from_str(line).map_err(|source| DecodeError {
        line: line.chars().take(120).collect(),
        source,
    })
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Decode(#[from] DecodeError),
    #[error("timed out waiting for message{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    Timeout { step: Option<u64> },
    #[error("step mismatch: expected {expected}, got {got}")]
    StepMismatch { expected: u64, got: u64 },
    #[error("out of order: {detail}")]
    OutOfOrder { detail: String },
    #[error("protocol version mismatch: ours {ours}, theirs {theirs}")]
    VersionMismatch { ours: u32, theirs: u32 },
    #[error("scenario hash mismatch: server program differs from the client's")]
    ScenarioHashMismatch,
    #[error("peer closed the connection")]
    Closed,
    #[error("{0}")]
    Behavior(#[from] BehaviorError),
    #[error("{0}")]
    Sample(#[from] SampleError),
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(
        e.kind(),
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
    )
}

/// Read one message line; `Ok(None)` on clean EOF.
fn read_msg(
    reader: &mut BufReader<TcpStream>,
    step: Option<u64>,
) -> Result<Option<Msg>, ProtocolError> {
    let mut line = String::new();
    match reader.read_line(&mut line) {
        Ok(0) => Ok(None),
        Ok(_) => Ok(Some(decode(line.trim_end_matches('\n'))?)),
        Err(e) if is_timeout(&e) => Err(ProtocolError::Timeout { step }),
        Err(e) => Err(e.into()),
    }
}

fn send_msg(stream: &mut TcpStream, msg: &Msg) -> Result<(), ProtocolError> {
    stream.write_all(encode(msg).as_bytes())?;
    Ok(())
}

fn send_bye(stream: &mut TcpStream, reason: &str) {
    let _ = stream.write_all(
        encode(&Msg::Bye(ByeMsg {
            reason: reason.to_string(),
        }))
        .as_bytes(),
    );
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub timeout: Duration,
    pub max_rejections: u32,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            timeout: DEFAULT_TIMEOUT,
            max_rejections: DEFAULT_MAX_REJECTIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub steps: u64,
    pub reason: String,
}

/// Serve one session: accept a single client, re-sample its scene from the
/// hello, and answer every state message from the behavior runtime. Extra
/// clients connecting while the session is live are turned away with
/// `bye(busy)`. Returns when the client says bye or disconnects (reason
/// "eof").
pub fn serve(
    listener: TcpListener,
    prog: &CheckedProgram,
    world: &WorldModel,
    config: &ServeConfig,
) -> Result<SessionSummary, ProtocolError> {
    let (stream, _) = listener.accept()?;
    let rejector = BusyRejector::spawn(listener);
    let result = serve_session(stream, prog, world, config);
    rejector.stop();
    result
}

fn serve_session(
    mut stream: TcpStream,
    prog: &CheckedProgram,
    world: &WorldModel,
    config: &ServeConfig,
) -> Result<SessionSummary, ProtocolError> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(config.timeout))?;
    let mut reader = BufReader::new(stream.try_clone()?);

    let hello = match read_msg(&mut reader, None)? {
        None => {
            return Ok(SessionSummary {
                steps: 0,
                reason: "eof".to_string(),
            })
        }
        Some(Msg::Hello(h)) => h,
        Some(other) => {
            send_bye(&mut stream, "expected hello");
            return Err(ProtocolError::OutOfOrder {
                detail: format!("first message must be hello, got {}", msg_kind(&other)),
            });
        }
    };
    if hello.version != PROTOCOL_VERSION {
        send_bye(&mut stream, "version mismatch");
        return Err(ProtocolError::VersionMismatch {
            ours: PROTOCOL_VERSION,
            theirs: hello.version,
        });
    }
    if hello.scenario_hash != prog.program_hash {
        send_bye(&mut stream, "scenario hash mismatch");
        return Err(ProtocolError::ScenarioHashMismatch);
    }

    let sampled = sample_scene_traced(prog, world, hello.seed, config.max_rejections)?;
    let mut runtime = BehaviorRuntime::new(&sampled.scene, prog, sampled.rng)?;
    if runtime.agent_ids() != hello.agent_ids {
        send_bye(&mut stream, "agent set mismatch");
        return Err(ProtocolError::OutOfOrder {
            detail: "hello agent ids do not match the sampled scene".to_string(),
        });
    }

    send_msg(
        &mut stream,
        &Msg::Hello(HelloMsg {
            version: PROTOCOL_VERSION,
            ..hello.clone()
        }),
    )?;

    let mut expected_step: u64 = 0;
    loop {
        match read_msg(&mut reader, Some(expected_step))? {
            None => {
                return Ok(SessionSummary {
                    steps: expected_step,
                    reason: "eof".to_string(),
                })
            }
            Some(Msg::State(state)) => {
                if state.step != expected_step {
                    send_bye(&mut stream, "step mismatch");
                    return Err(ProtocolError::StepMismatch {
                        expected: expected_step,
                        got: state.step,
                    });
                }
                let actions = runtime.actions_for_state(&state)?;
                let msg = Msg::Action(ActionMsg {
                    step: state.step,
                    actions: actions
                        .into_iter()
                        .map(|(id, a)| WireAction {
                            id,
                            throttle: a.throttle,
                            steer: a.steer,
                            brake: a.brake,
                        })
                        .collect(),
                });
                send_msg(&mut stream, &msg)?;
                expected_step += 1;
            }
            Some(Msg::Bye(b)) => {
                return Ok(SessionSummary {
                    steps: expected_step,
                    reason: b.reason,
                })
            }
            Some(other) => {
                send_bye(&mut stream, "unexpected message");
                return Err(ProtocolError::OutOfOrder {
                    detail: format!("expected state or bye, got {}", msg_kind(&other)),
                });
            }
        }
    }
}

fn msg_kind(m: &Msg) -> &'static str {
    match m {
        Msg::Hello(_) => "hello",
        Msg::State(_) => "state",
        Msg::Action(_) => "action",
        Msg::Bye(_) => "bye",
    }
}

/// Accepts and immediately dismisses extra clients while a session is live.
struct BusyRejector {
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl BusyRejector {
    fn spawn(listener: TcpListener) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let stop2 = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            let _ = listener.set_nonblocking(true);
            while !stop2.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((mut extra, _)) => {
                        let _ = extra.set_nodelay(true);
                        send_bye(&mut extra, "busy");
                    }
                    Err(_) => std::thread::sleep(Duration::from_millis(20)),
                }
            }
        });
        BusyRejector {
            stop,
            handle: Some(handle),
        }
    }

    fn stop(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Client side of the protocol, usable as a simulation action source.
pub struct SocketActionSource {
    stream: TcpStream,
    reader: BufReader<TcpStream>,
}

impl SocketActionSource {
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self, ProtocolError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(SocketActionSource { stream, reader })
    }
}

impl ActionSource for SocketActionSource {
    fn begin(&mut self, hello: &HelloMsg) -> Result<(), SimError> {
        send_msg(&mut self.stream, &Msg::Hello(hello.clone()))?;
        match read_msg(&mut self.reader, None).map_err(SimError::Protocol)? {
            Some(Msg::Hello(ack)) => {
                if ack.version != PROTOCOL_VERSION {
                    return Err(ProtocolError::VersionMismatch {
                        ours: PROTOCOL_VERSION,
                        theirs: ack.version,
                    }
                    .into());
                }
                Ok(())
            }
            Some(Msg::Bye(b)) => Err(ProtocolError::OutOfOrder {
                detail: format!("server refused session: {}", b.reason),
            }
            .into()),
            Some(other) => Err(ProtocolError::OutOfOrder {
                detail: format!("expected hello ack, got {}", msg_kind(&other)),
            }
            .into()),
            None => Err(ProtocolError::Closed.into()),
        }
    }

    fn actions_for(&mut self, state: &StateMsg) -> Result<Vec<(u32, Action)>, SimError> {
        send_msg(&mut self.stream, &Msg::State(state.clone()))?;
        match read_msg(&mut self.reader, Some(state.step)).map_err(SimError::Protocol)? {
            Some(Msg::Action(msg)) => {
                if msg.step != state.step {
                    return Err(ProtocolError::StepMismatch {
                        expected: state.step,
                        got: msg.step,
                    }
                    .into());
                }
                Ok(msg
                    .actions
                    .into_iter()
                    .map(|w| (w.id, Action::new(w.throttle, w.steer, w.brake)))
                    .collect())
            }
            Some(Msg::Bye(b)) => Err(ProtocolError::OutOfOrder {
                detail: format!("server ended session: {}", b.reason),
            }
            .into()),
            Some(other) => Err(ProtocolError::OutOfOrder {
                detail: format!("expected action, got {}", msg_kind(&other)),
            }
            .into()),
            None => Err(ProtocolError::Closed.into()),
        }
    }

    fn finish(&mut self, reason: &str) -> Result<(), SimError> {
        send_msg(
            &mut self.stream,
            &Msg::Bye(ByeMsg {
                reason: reason.to_string(),
            }),
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_state_message() {
        let msg = Msg::State(StateMsg {
            step: 0,
            time: 0.0,
            agents: vec![WireAgentState {
                id: 1,
                class: "vehicle".to_string(),
                x: 1.5,
                y: -2.25,
                heading: 0.1,
                speed: 3.0,
            }],
        });
        let line = encode(&msg);
        assert!(line.starts_with("{\"type\":\"state\""));
        assert!(line.ends_with('\n'));
        assert_eq!(decode(line.trim_end()).unwrap(), msg);
    }

    #[test]
    fn unknown_type_is_a_decode_error() {
        assert!(decode(r#"{"type":"mystery"}"#).is_err());
        assert!(decode("not json at all").is_err());
        assert!(decode("").is_err());
    }

    #[test]
    fn floats_survive_the_wire_bit_for_bit() {
        let values = [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300, -0.0];
        for v in values {
            let msg = Msg::Action(ActionMsg {
                step: 7,
                actions: vec![WireAction {
                    id: 1,
                    throttle: v,
                    steer: v,
                    brake: v,
                }],
            });
            let back = decode(encode(&msg).trim_end()).unwrap();
            let Msg::Action(a) = back else { panic!() };
            assert_eq!(a.actions[0].throttle.to_bits(), v.to_bits());
        }
    }
}
