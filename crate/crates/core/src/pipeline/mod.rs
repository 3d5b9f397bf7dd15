//! Multi-process simulator of the six-step flow: the KDC issues keys,
//! the RAN-side microservice encrypts KPM windows, an E2-lite framed
//! stream carries ciphertexts to the RIC database, the xApp polls and
//! classifies on encrypted data, and control decisions return to the
//! RAN, with every stage timed.

pub mod agent;
pub mod db;
pub mod frame;
pub mod harness;
pub mod kdc;
pub mod link;
pub mod msg;
pub mod report;

pub use agent::{run_agent, AgentArgs};
pub use db::{RicDatabase, StoredCiphertext};
pub use frame::{E2Frame, MsgType, FRAME_MAGIC, FRAME_VERSION};
pub use harness::{
    run_pipeline, run_ran_side, scenario_windows, EncryptorReport, PipelineOutcome, RanAgentConfig,
    RunMode, ScenarioConfig, TimingRecord,
};
pub use kdc::{build_context, kdc_issue};
pub use link::MessageAudit;
pub use msg::{ControlDecision, EncKpmPayload, EncryptorBundle, IssuanceLog, XappBundle};
pub use report::{format_table, summarize, write_bench_csv, write_timing_csv, BenchRow};
