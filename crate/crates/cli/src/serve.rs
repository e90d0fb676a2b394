//! The behavior-server command.

use std::net::TcpListener;
use std::path::Path;

use scenegen_core::protocol::{serve, ServeConfig, SessionSummary};

use crate::CliError;

/// Listen on `addr`, serve exactly one session for the given scenario, and
/// return its summary. A client disconnect counts as a clean end.
pub fn cmd_serve(
    addr: &str,
    scenario: &Path,
    world_override: Option<&Path>,
) -> Result<SessionSummary, CliError> {
    let prog = crate::compile_scenario(scenario)?;
    let world = crate::resolve_world(scenario, &prog, world_override)?;
    let listener = TcpListener::bind(addr)?;
    eprintln!("listening on {}", listener.local_addr()?);
    Ok(serve(listener, &prog, &world, &ServeConfig::default())?)
}
