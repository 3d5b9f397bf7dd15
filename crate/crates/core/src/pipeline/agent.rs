//! Entry point for the RAN-side process: connect to the RIC over TCP,
//! run the encryptor loop, and emit the timing report as one JSON line
//! on stdout for the orchestrator to collect.

use std::net::TcpStream;

use crate::error::Result;
use crate::pipeline::harness::{run_ran_side, RanAgentConfig};
use crate::pipeline::link::tcp_link;

#[derive(Debug, Clone)]
pub struct AgentArgs {
    pub connect: String,
    pub seed: u64,
    pub time_windows: usize,
    pub window_count: usize,
    pub window_interval_ms: u64,
}

pub fn run_agent(args: &AgentArgs) -> Result<()> {
    let stream = TcpStream::connect(&args.connect)?;
    stream.set_nodelay(true).ok();
    let (mut tx, mut rx) = tcp_link(stream)?;
    let cfg = RanAgentConfig {
        seed: args.seed,
        time_windows: args.time_windows,
        window_count: args.window_count,
        window_interval_ms: args.window_interval_ms,
        drain_idle_ms: 10_000,
    };
    let report = run_ran_side(&mut tx, &mut rx, &cfg)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
