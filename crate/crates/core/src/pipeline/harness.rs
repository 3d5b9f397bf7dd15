//! Pipeline orchestration: KDC issuance, the RAN-side encryptor, the
//! E2-lite link, the RIC database, and the xApp, each as an independent
//! sequential component talking only in frames. The RAN side runs either
//! as a thread over an in-memory link or as a separate OS process over
//! TCP loopback; the component code is identical.
//!
//! Timing model (all durations from monotonic clocks on one side):
//!   encryption_us      encrypt call, RAN side
//!   transport_us       ENC_KPM send to ACK received, RAN side
//!   eval_us            encrypted inference, RIC side
//!   control_return_us  CONTROL send to ACK received, RIC side
//!   rtt_us             encryption start to CONTROL received, RAN side

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::process::Stdio;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::envelope;
use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::ipfe;
use crate::lab::{self, SynthConfig};
use crate::pipeline::db::{RicDatabase, StoredCiphertext};
use crate::pipeline::frame::{E2Frame, MsgType};
use crate::pipeline::kdc;
use crate::pipeline::link::{
    audited, channel_link_pair, tcp_link, FrameReceiver, FrameSender, LinkEvent, MessageAudit,
};
use crate::pipeline::msg::{
    wall_clock_us, AckPayload, ControlDecision, EncKpmPayload, EncryptorBundle, IssuanceLog,
};
use crate::quant::QuantizedModel;
use crate::secure::EncryptedInferenceContext;

/// Scenario file: which group and model to run, the stream shape, and
/// the seed every random draw derives from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub time_windows: usize,
    pub window_count: usize,
    #[serde(default)]
    pub window_interval_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum RunMode {
    /// All components as threads over in-memory links.
    Thread,
    /// RAN side as a child process over TCP loopback; `agent_cmd` is the
    /// command prefix to exec (the CLI passes itself plus `ran-agent`).
    Process { agent_cmd: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub window_id: u64,
    pub encryption_us: u64,
    pub transport_us: u64,
    pub eval_us: u64,
    pub control_return_us: u64,
    pub rtt_us: u64,
}

impl TimingRecord {
    /// The accounting invariant every record must satisfy.
    pub fn rtt_covers_stages(&self) -> bool {
        self.rtt_us >= self.encryption_us + self.eval_us
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub timings: Vec<TimingRecord>,
    pub decisions: Vec<ControlDecision>,
    pub dropped_windows: u64,
    pub alarms: u64,
    /// True when any component ended abnormally or any window is missing
    /// a stage measurement.
    pub partial: bool,
    pub issuance: IssuanceLog,
    pub audit: MessageAudit,
    pub db: Arc<RicDatabase>,
}

/// RAN-side agent parameters; windows are regenerated from the seed so
/// plaintext never crosses a process boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RanAgentConfig {
    pub seed: u64,
    pub time_windows: usize,
    pub window_count: usize,
    #[serde(default)]
    pub window_interval_ms: u64,
    #[serde(default = "default_drain_idle_ms")]
    pub drain_idle_ms: u64,
}

fn default_drain_idle_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RanWindowTiming {
    pub window_id: u64,
    pub encryption_us: u64,
    pub transport_us: Option<u64>,
    pub rtt_us: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncryptorReport {
    pub windows: Vec<RanWindowTiming>,
    pub dropped: u64,
}

fn derived_seed(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

const KDC_SEED_SALT: u64 = 0x4b44;
const ENC_SEED_SALT: u64 = 0x454e;

/// The encryptor microservice: waits for its KEY_ISSUE, then encrypts
/// the window stream, discarding each raw window once its ciphertext is
/// framed. Inbound ACK and CONTROL frames are folded into per-window
/// timings as they arrive.
pub fn run_ran_side(
    tx: &mut dyn FrameSender,
    rx: &mut dyn FrameReceiver,
    cfg: &RanAgentConfig,
) -> Result<EncryptorReport> {
    // Key issuance first.
    let bundle = wait_for_key_issue(rx, Duration::from_secs(30))?;
    let group = GroupParams::by_name(&bundle.group)?;
    let mpk = envelope::mpk_from_envelope(&bundle.mpk)?;

    let synth = SynthConfig {
        time_windows: cfg.time_windows,
        ..SynthConfig::with_seed(cfg.seed)
    };
    if synth.input_len() != bundle.window_len {
        return Err(Error::ShapeMismatch {
            expected: bundle.window_len,
            got: synth.input_len(),
        });
    }
    let windows = lab::generate_dataset(&synth, cfg.window_count)?;
    let mut enc_rng = ChaCha20Rng::seed_from_u64(derived_seed(cfg.seed, ENC_SEED_SALT));

    let mut enc_started: HashMap<u64, Instant> = HashMap::new();
    let mut sent_at: HashMap<u64, Instant> = HashMap::new();
    let mut timings: BTreeMap<u64, RanWindowTiming> = BTreeMap::new();
    let mut awaiting_control = 0usize;
    let mut dropped = 0u64;

    let start = Instant::now();
    for (i, window) in windows.into_iter().enumerate() {
        let window_id = i as u64;
        if cfg.window_interval_ms > 0 {
            let due = Duration::from_millis(cfg.window_interval_ms * i as u64);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }

        let enc_start = Instant::now();
        let x_q: Vec<i64> = window
            .readings
            .iter()
            .map(|&v| crate::quant::quantize_value(v, bundle.input_qp) as i64)
            .collect();
        let ct = match ipfe::encrypt(&mpk, &x_q, &mut enc_rng) {
            Ok(ct) => ct,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        let encryption_us = enc_start.elapsed().as_micros() as u64;
        drop(window); // raw KPMs end here

        let payload = EncKpmPayload {
            window_id,
            encryption_us,
            ciphertext: envelope::ct_to_envelope(&ct, &group),
        };
        enc_started.insert(window_id, enc_start);
        sent_at.insert(window_id, Instant::now());
        tx.send(&E2Frame::new(
            MsgType::EncKpm,
            window_id,
            serde_json::to_vec(&payload)?,
        ))?;
        timings.insert(
            window_id,
            RanWindowTiming {
                window_id,
                encryption_us,
                transport_us: None,
                rtt_us: None,
            },
        );
        awaiting_control += 1;

        // Fold in anything that already came back.
        while let LinkEvent::Frame(frame) = rx.recv(Duration::from_millis(1))? {
            handle_ran_frame(
                tx,
                &frame,
                &enc_started,
                &mut sent_at,
                &mut timings,
                &mut awaiting_control,
            )?;
        }
    }

    // Drain until every decision is back or the link goes idle.
    let idle_limit = Duration::from_millis(cfg.drain_idle_ms);
    let mut last_activity = Instant::now();
    while awaiting_control > 0 && last_activity.elapsed() < idle_limit {
        match rx.recv(Duration::from_millis(100))? {
            LinkEvent::Frame(frame) => {
                handle_ran_frame(
                    tx,
                    &frame,
                    &enc_started,
                    &mut sent_at,
                    &mut timings,
                    &mut awaiting_control,
                )?;
                last_activity = Instant::now();
            }
            LinkEvent::Timeout => {}
            LinkEvent::Closed => break,
        }
    }

    Ok(EncryptorReport {
        windows: timings.into_values().collect(),
        dropped,
    })
}

fn wait_for_key_issue(rx: &mut dyn FrameReceiver, timeout: Duration) -> Result<EncryptorBundle> {
    let deadline = Instant::now() + timeout;
    loop {
        match rx.recv(Duration::from_millis(200))? {
            LinkEvent::Frame(frame) if frame.msg_type == MsgType::KeyIssue => {
                return Ok(serde_json::from_slice(&frame.payload)?);
            }
            LinkEvent::Frame(frame) => {
                return Err(Error::Pipeline(format!(
                    "expected KEY_ISSUE, got msg_type {}",
                    frame.msg_type as u8
                )));
            }
            LinkEvent::Closed => {
                return Err(Error::Pipeline("link closed before key issuance".into()))
            }
            LinkEvent::Timeout if Instant::now() >= deadline => {
                return Err(Error::Pipeline("timed out waiting for key issuance".into()))
            }
            LinkEvent::Timeout => {}
        }
    }
}

fn handle_ran_frame(
    tx: &mut dyn FrameSender,
    frame: &E2Frame,
    enc_started: &HashMap<u64, Instant>,
    sent_at: &mut HashMap<u64, Instant>,
    timings: &mut BTreeMap<u64, RanWindowTiming>,
    awaiting_control: &mut usize,
) -> Result<()> {
    match frame.msg_type {
        MsgType::Ack => {
            if let Some(sent) = sent_at.remove(&frame.correlation_id) {
                if let Some(t) = timings.get_mut(&frame.correlation_id) {
                    t.transport_us = Some(sent.elapsed().as_micros() as u64);
                }
            }
        }
        MsgType::Control => {
            if let Some(t) = timings.get_mut(&frame.correlation_id) {
                if t.rtt_us.is_none() {
                    t.rtt_us = enc_started
                        .get(&frame.correlation_id)
                        .map(|s| s.elapsed().as_micros() as u64);
                    *awaiting_control = awaiting_control.saturating_sub(1);
                }
            }
            let ack = AckPayload {
                window_id: frame.correlation_id,
            };
            tx.send(&E2Frame::new(
                MsgType::Ack,
                frame.correlation_id,
                serde_json::to_vec(&ack)?,
            ))?;
        }
        MsgType::KeyIssue | MsgType::EncKpm => {
            return Err(Error::Pipeline(format!(
                "unexpected msg_type {} on the RAN side",
                frame.msg_type as u8
            )));
        }
    }
    Ok(())
}

struct RicShared {
    db: Arc<RicDatabase>,
    sender: Arc<Mutex<Box<dyn FrameSender>>>,
    ingest_done: Arc<AtomicBool>,
    control_sent: Arc<Mutex<HashMap<u64, Instant>>>,
    control_return_us: Arc<Mutex<HashMap<u64, u64>>>,
    eval_us: Arc<Mutex<HashMap<u64, u64>>>,
    decisions: Arc<Mutex<Vec<ControlDecision>>>,
    alarms: Arc<AtomicU64>,
    protocol_errors: Arc<AtomicU64>,
}

/// Ingest: store incoming ciphertext frames and ACK them; route ACKs of
/// CONTROL frames into the control-return clock.
fn ric_ingest_loop(rx: &mut dyn FrameReceiver, shared: &RicShared) -> Result<()> {
    loop {
        match rx.recv(Duration::from_millis(100))? {
            LinkEvent::Frame(frame) => match frame.msg_type {
                MsgType::EncKpm => {
                    match serde_json::from_slice::<EncKpmPayload>(&frame.payload)
                        .map_err(Error::from)
                        .and_then(|p| {
                            let ct = envelope::ct_from_envelope(&p.ciphertext)?;
                            Ok((p, ct))
                        }) {
                        Ok((payload, ciphertext)) => {
                            shared.db.append(StoredCiphertext {
                                window_id: payload.window_id,
                                stored_at_us: wall_clock_us(),
                                payload: frame.payload.clone(),
                                ciphertext,
                            });
                            let ack = AckPayload {
                                window_id: frame.correlation_id,
                            };
                            shared.sender.lock().unwrap().send(&E2Frame::new(
                                MsgType::Ack,
                                frame.correlation_id,
                                serde_json::to_vec(&ack)?,
                            ))?;
                        }
                        Err(_) => {
                            shared.protocol_errors.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
                MsgType::Ack => {
                    let sent = shared
                        .control_sent
                        .lock()
                        .unwrap()
                        .remove(&frame.correlation_id);
                    if let Some(sent) = sent {
                        shared
                            .control_return_us
                            .lock()
                            .unwrap()
                            .insert(frame.correlation_id, sent.elapsed().as_micros() as u64);
                    }
                }
                MsgType::KeyIssue | MsgType::Control => {
                    shared.protocol_errors.fetch_add(1, Ordering::Relaxed);
                }
            },
            LinkEvent::Timeout => {}
            LinkEvent::Closed => {
                shared.ingest_done.store(true, Ordering::SeqCst);
                return Ok(());
            }
        }
    }
}

/// xApp: poll the database cursor, run encrypted inference, and send one
/// CONTROL decision per window. Inference failures withhold the decision
/// and raise the alarm counter; the stream continues.
fn xapp_loop(ctx: &EncryptedInferenceContext, db: &RicDatabase, shared: &RicShared) -> Result<()> {
    loop {
        let records = db.poll("xapp", 16);
        if records.is_empty() {
            if shared.ingest_done.load(Ordering::SeqCst) {
                // One final poll so nothing races the done flag.
                if db.poll("xapp", 16).is_empty() {
                    return Ok(());
                }
                continue;
            }
            std::thread::sleep(Duration::from_millis(2));
            continue;
        }
        for record in records {
            let eval_start = Instant::now();
            match ctx.evaluate_encrypted(&record.ciphertext) {
                Ok(result) => {
                    let eval_us = eval_start.elapsed().as_micros() as u64;
                    shared
                        .eval_us
                        .lock()
                        .unwrap()
                        .insert(record.window_id, eval_us);
                    let decision = ControlDecision {
                        window_id: record.window_id,
                        jammer_present: result.class == 1,
                        issued_at_us: wall_clock_us(),
                    };
                    shared.decisions.lock().unwrap().push(decision);
                    shared
                        .control_sent
                        .lock()
                        .unwrap()
                        .insert(record.window_id, Instant::now());
                    shared.sender.lock().unwrap().send(&E2Frame::new(
                        MsgType::Control,
                        record.window_id,
                        serde_json::to_vec(&decision)?,
                    ))?;
                }
                Err(_) => {
                    shared.alarms.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
    }
}

fn new_shared(db: Arc<RicDatabase>, sender: Box<dyn FrameSender>) -> RicShared {
    RicShared {
        db,
        sender: Arc::new(Mutex::new(sender)),
        ingest_done: Arc::new(AtomicBool::new(false)),
        control_sent: Arc::new(Mutex::new(HashMap::new())),
        control_return_us: Arc::new(Mutex::new(HashMap::new())),
        eval_us: Arc::new(Mutex::new(HashMap::new())),
        decisions: Arc::new(Mutex::new(Vec::new())),
        alarms: Arc::new(AtomicU64::new(0)),
        protocol_errors: Arc::new(AtomicU64::new(0)),
    }
}

impl RicShared {
    fn clone_handles(&self) -> RicShared {
        RicShared {
            db: self.db.clone(),
            sender: self.sender.clone(),
            ingest_done: self.ingest_done.clone(),
            control_sent: self.control_sent.clone(),
            control_return_us: self.control_return_us.clone(),
            eval_us: self.eval_us.clone(),
            decisions: self.decisions.clone(),
            alarms: self.alarms.clone(),
            protocol_errors: self.protocol_errors.clone(),
        }
    }
}

/// Runs the full six-step flow for one scenario and collects per-window
/// timing plus the decision log.
pub fn run_pipeline(
    cfg: &ScenarioConfig,
    model: &QuantizedModel,
    mode: RunMode,
) -> Result<PipelineOutcome> {
    if cfg.window_count == 0 {
        return Err(Error::Pipeline("window_count must be at least 1".into()));
    }
    let expected_len = cfg.time_windows * lab::KPM_COUNT;
    if model.input_dim() != expected_len {
        return Err(Error::ShapeMismatch {
            expected: expected_len,
            got: model.input_dim(),
        });
    }
    let group = GroupParams::by_name(&cfg.group)?;
    let mut kdc_rng = ChaCha20Rng::seed_from_u64(derived_seed(cfg.seed, KDC_SEED_SALT));
    let (enc_bundle, xapp_bundle, issuance) = kdc::kdc_issue(&group, model, &mut kdc_rng)?;
    let ctx = kdc::build_context(&xapp_bundle)?;

    let audit = MessageAudit::new();
    let db = Arc::new(RicDatabase::new());
    let agent_cfg = RanAgentConfig {
        seed: cfg.seed,
        time_windows: cfg.time_windows,
        window_count: cfg.window_count,
        window_interval_ms: cfg.window_interval_ms,
        drain_idle_ms: default_drain_idle_ms(),
    };

    let (ric_rx, shared, ran_outcome): (Box<dyn FrameReceiver>, RicShared, RanOutcome) = match mode
    {
        RunMode::Thread => {
            let (ric_link, ran_link) = channel_link_pair();
            let (ric_tx, ric_rx) = audited("ric", &audit, ric_link.0, ric_link.1);
            let (ran_tx, ran_rx) = audited("encryptor", &audit, ran_link.0, ran_link.1);
            let shared = new_shared(db.clone(), Box::new(ric_tx));
            let handle = std::thread::spawn(move || {
                let mut tx = ran_tx;
                let mut rx = ran_rx;
                run_ran_side(&mut tx, &mut rx, &agent_cfg)
            });
            (Box::new(ric_rx), shared, RanOutcome::Thread(handle))
        }
        RunMode::Process { agent_cmd } => {
            let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let (program, prefix_args) = agent_cmd
                .split_first()
                .ok_or_else(|| Error::Pipeline("empty agent command".into()))?;
            let child = std::process::Command::new(program)
                .args(prefix_args)
                .args([
                    "--connect",
                    &addr.to_string(),
                    "--seed",
                    &cfg.seed.to_string(),
                    "--time-windows",
                    &cfg.time_windows.to_string(),
                    "--count",
                    &cfg.window_count.to_string(),
                    "--interval-ms",
                    &cfg.window_interval_ms.to_string(),
                ])
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()?;
            let stream = accept_with_deadline(&listener, Duration::from_secs(20))?;
            let (tcp_tx, tcp_rx) = tcp_link(stream)?;
            let (ric_tx, ric_rx) = audited("ric", &audit, tcp_tx, tcp_rx);
            let shared = new_shared(db.clone(), Box::new(ric_tx));
            (Box::new(ric_rx), shared, RanOutcome::Child(child))
        }
    };

    // Step 1: issue keys to the RAN side.
    shared.sender.lock().unwrap().send(&E2Frame::new(
        MsgType::KeyIssue,
        0,
        serde_json::to_vec(&enc_bundle)?,
    ))?;

    let ingest_shared = shared.clone_handles();
    let ingest = std::thread::spawn(move || {
        let mut rx = ric_rx;
        ric_ingest_loop(&mut *rx, &ingest_shared)
    });
    let xapp_shared = shared.clone_handles();
    let xapp_db = db.clone();
    let xapp = std::thread::spawn(move || xapp_loop(&ctx, &xapp_db, &xapp_shared));

    let mut partial = false;
    let report = match ran_outcome {
        RanOutcome::Thread(handle) => match handle.join() {
            Ok(Ok(report)) => Some(report),
            Ok(Err(_)) | Err(_) => None,
        },
        RanOutcome::Child(child) => {
            let output = child.wait_with_output()?;
            if output.status.success() {
                serde_json::from_slice::<EncryptorReport>(&output.stdout).ok()
            } else {
                None
            }
        }
    };
    let report = match report {
        Some(r) => r,
        None => {
            partial = true;
            EncryptorReport {
                windows: Vec::new(),
                dropped: 0,
            }
        }
    };

    if ingest.join().map_or(true, |r| r.is_err()) {
        partial = true;
    }
    if xapp.join().map_or(true, |r| r.is_err()) {
        partial = true;
    }

    let eval_us = shared.eval_us.lock().unwrap().clone();
    let control_return_us = shared.control_return_us.lock().unwrap().clone();
    let mut timings = Vec::with_capacity(report.windows.len());
    for w in &report.windows {
        match (
            w.transport_us,
            w.rtt_us,
            eval_us.get(&w.window_id),
            control_return_us.get(&w.window_id),
        ) {
            (Some(transport_us), Some(rtt_us), Some(&ev), Some(&ctrl)) => {
                timings.push(TimingRecord {
                    window_id: w.window_id,
                    encryption_us: w.encryption_us,
                    transport_us,
                    eval_us: ev,
                    control_return_us: ctrl,
                    rtt_us,
                });
            }
            _ => partial = true,
        }
    }
    if report.dropped > 0 || shared.alarms.load(Ordering::Relaxed) > 0 {
        partial = true;
    }

    let mut decisions = shared.decisions.lock().unwrap().clone();
    decisions.sort_by_key(|d| d.window_id);

    Ok(PipelineOutcome {
        timings,
        decisions,
        dropped_windows: report.dropped,
        alarms: shared.alarms.load(Ordering::Relaxed),
        partial,
        issuance,
        audit,
        db,
    })
}

enum RanOutcome {
    Thread(std::thread::JoinHandle<Result<EncryptorReport>>),
    Child(std::process::Child),
}

fn accept_with_deadline(
    listener: &std::net::TcpListener,
    deadline: Duration,
) -> Result<std::net::TcpStream> {
    listener.set_nonblocking(true)?;
    let start = Instant::now();
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nodelay(true).ok();
                stream.set_nonblocking(false)?;
                return Ok(stream);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if start.elapsed() > deadline {
                    return Err(Error::Pipeline("agent never connected".into()));
                }
                std::thread::sleep(Duration::from_millis(20));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Test seam and CLI helper: the exact windows the RAN side will
/// generate for a scenario, for offline plaintext replay.
pub fn scenario_windows(cfg: &ScenarioConfig) -> Result<Vec<lab::KpmWindow>> {
    let synth = SynthConfig {
        time_windows: cfg.time_windows,
        ..SynthConfig::with_seed(cfg.seed)
    };
    lab::generate_dataset(&synth, cfg.window_count)
}
