//! End-to-end sessions over a local TCP socket.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use proptest::prelude::*;

use scenegen_core::dsl::compile;
use scenegen_core::protocol::{
    decode, encode, serve, ByeMsg, HelloMsg, Msg, ProtocolError, ServeConfig, SessionSummary,
    SocketActionSource, PROTOCOL_VERSION,
};
use scenegen_core::sampler::sample_scene_traced;
use scenegen_core::sim::{run_simulation, BehaviorRuntime, Trajectory};
use scenegen_core::world::WorldModel;

const SRC: &str = "behavior Drive(t):\n  while true:\n    take Action(t, sample(Uniform(-0.05, 0.05)), 0)\n  end\nend\n\
behavior Brake(gap):\n  try:\n    while true:\n      take Action(0.4, 0, 0)\n    end\n  interrupt when dist(self, ego) < gap:\n    while true:\n      take Action(0, 0, 1)\n    end\n  end\nend\n\
ego = new Car at (0, 0), facing 0, with behavior Drive(0.8)\n\
lead = new Car ahead of ego by 25, with behavior Brake(15)\n";

fn spawn_server(src: &'static str, config: ServeConfig) -> (String, std::thread::JoinHandle<Result<SessionSummary, ProtocolError>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = std::thread::spawn(move || {
        let prog = compile(src).unwrap();
        serve(listener, &prog, &WorldModel::flat_ground(), &config)
    });
    (addr, handle)
}

fn run_in_process(src: &str, seed: u64, duration: f64) -> Trajectory {
    let prog = compile(src).unwrap();
    let sampled = sample_scene_traced(&prog, &WorldModel::flat_ground(), seed, 100).unwrap();
    let mut runtime = BehaviorRuntime::new(&sampled.scene, &prog, sampled.rng).unwrap();
    run_simulation(&sampled.scene, duration, 1.0 / 15.0, &mut runtime, &mut |_| Ok(())).unwrap()
}

fn run_over_socket(src: &str, addr: &str, seed: u64, duration: f64) -> Trajectory {
    let prog = compile(src).unwrap();
    let sampled = sample_scene_traced(&prog, &WorldModel::flat_ground(), seed, 100).unwrap();
    let mut source = SocketActionSource::connect(addr, Duration::from_secs(5)).unwrap();
    run_simulation(&sampled.scene, duration, 1.0 / 15.0, &mut source, &mut |_| Ok(())).unwrap()
}

#[test]
fn socket_run_equals_in_process_run() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let via_socket = run_over_socket(SRC, &addr, 4242, 3.0);
    let summary = server.join().unwrap().unwrap();
    assert_eq!(summary.steps, 45);
    assert_eq!(summary.reason, "done");

    let in_process = run_in_process(SRC, 4242, 3.0);
    assert_eq!(via_socket, in_process);
}

#[test]
fn second_client_is_turned_away_busy() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let prog = compile(SRC).unwrap();
    let mut source = SocketActionSource::connect(&addr, Duration::from_secs(5)).unwrap();
    // Hold the session open mid-run while a second client connects.
    use scenegen_core::sim::ActionSource;
    source
        .begin(&HelloMsg {
            version: PROTOCOL_VERSION,
            scenario_hash: prog.program_hash,
            seed: 7,
            dt: 1.0 / 15.0,
            agent_ids: vec![1, 2],
        })
        .unwrap();

    let extra = TcpStream::connect(&addr).unwrap();
    extra.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut line = String::new();
    BufReader::new(extra.try_clone().unwrap()).read_line(&mut line).unwrap();
    match decode(line.trim_end()).unwrap() {
        Msg::Bye(b) => assert_eq!(b.reason, "busy"),
        other => panic!("expected busy bye, got {other:?}"),
    }
    drop(extra);

    source.finish("done").unwrap();
    let summary = server.join().unwrap().unwrap();
    assert_eq!(summary.reason, "done");
}

#[test]
fn state_before_hello_is_rejected() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let mut stream = TcpStream::connect(&addr).unwrap();
    stream
        .write_all(br#"{"type":"state","step":0,"time":0.0,"agents":[]}"#)
        .unwrap();
    stream.write_all(b"\n").unwrap();
    let err = server.join().unwrap().unwrap_err();
    assert!(matches!(err, ProtocolError::OutOfOrder { .. }), "{err}");
}

#[test]
fn version_mismatch_aborts() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let mut stream = TcpStream::connect(&addr).unwrap();
    let hello = Msg::Hello(HelloMsg {
        version: 99,
        scenario_hash: 0,
        seed: 0,
        dt: 0.1,
        agent_ids: vec![],
    });
    stream.write_all(encode(&hello).as_bytes()).unwrap();
    let err = server.join().unwrap().unwrap_err();
    assert!(matches!(err, ProtocolError::VersionMismatch { theirs: 99, .. }));
}

#[test]
fn client_disconnect_reads_as_eof() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let stream = TcpStream::connect(&addr).unwrap();
    drop(stream);
    let summary = server.join().unwrap().unwrap();
    assert_eq!(summary.reason, "eof");
    assert_eq!(summary.steps, 0);
}

#[test]
fn stalled_client_times_out() {
    let (addr, server) = spawn_server(
        SRC,
        ServeConfig {
            timeout: Duration::from_millis(150),
            ..ServeConfig::default()
        },
    );
    let prog = compile(SRC).unwrap();
    let mut stream = TcpStream::connect(&addr).unwrap();
    let hello = Msg::Hello(HelloMsg {
        version: PROTOCOL_VERSION,
        scenario_hash: prog.program_hash,
        seed: 1,
        dt: 1.0 / 15.0,
        agent_ids: vec![1, 2],
    });
    stream.write_all(encode(&hello).as_bytes()).unwrap();
    // Never send a state message.
    let err = server.join().unwrap().unwrap_err();
    assert!(matches!(err, ProtocolError::Timeout { .. }), "{err}");
}

#[test]
fn dead_server_surfaces_timeout_with_step() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    // Accept, swallow the hello and answer it, then go silent.
    let silent = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        stream.write_all(line.as_bytes()).unwrap();
        std::thread::sleep(Duration::from_secs(2));
    });

    let prog = compile(SRC).unwrap();
    let sampled = sample_scene_traced(&prog, &WorldModel::flat_ground(), 5, 100).unwrap();
    let mut source = SocketActionSource::connect(&addr, Duration::from_millis(150)).unwrap();
    let err = run_simulation(&sampled.scene, 1.0, 1.0 / 15.0, &mut source, &mut |_| Ok(()))
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("timed out") && msg.contains("step 0"), "{msg}");
    silent.join().unwrap();
}

#[test]
fn bye_reports_reason() {
    let (addr, server) = spawn_server(SRC, ServeConfig::default());
    let prog = compile(SRC).unwrap();
    let mut stream = TcpStream::connect(&addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let hello = Msg::Hello(HelloMsg {
        version: PROTOCOL_VERSION,
        scenario_hash: prog.program_hash,
        seed: 1,
        dt: 1.0 / 15.0,
        agent_ids: vec![1, 2],
    });
    stream.write_all(encode(&hello).as_bytes()).unwrap();
    let mut line = String::new();
    BufReader::new(stream.try_clone().unwrap()).read_line(&mut line).unwrap();
    assert!(matches!(decode(line.trim_end()).unwrap(), Msg::Hello(_)));

    let msg = Msg::Bye(ByeMsg {
        reason: "changed my mind".to_string(),
    });
    stream.write_all(encode(&msg).as_bytes()).unwrap();
    let summary = server.join().unwrap().unwrap();
    assert_eq!(summary.reason, "changed my mind");
    assert_eq!(summary.steps, 0);
}

proptest! {
    // Arbitrary bytes never panic the decoder.
    #[test]
    fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = decode(&text);
    }

    // Encoded messages always decode back to themselves.
    #[test]
    fn encode_decode_identity(step in 0u64..10000, time in -1e6f64..1e6, x in -1e3f64..1e3) {
        let msg = Msg::State(scenegen_core::protocol::StateMsg {
            step,
            time,
            agents: vec![scenegen_core::protocol::WireAgentState {
                id: 1,
                class: "vehicle".to_string(),
                x,
                y: -x,
                heading: 0.5,
                speed: 1.0,
            }],
        });
        prop_assert_eq!(decode(encode(&msg).trim_end()).unwrap(), msg);
    }
}
