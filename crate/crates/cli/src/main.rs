//! `ztric`: operator entry points for the privacy-preserving RIC
//! pipeline. Every subcommand is deterministic given `--seed`; `--json`
//! switches structured output on. Exit codes: 2 usage, 3 validation
//! refused, 4 crypto error, 5 I/O.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ztric_core::Error;

#[derive(Parser)]
#[command(name = "ztric", version, about = "Privacy-preserving RIC toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GroupArg {
    /// Named group: modp2048, modp3072, test-160, or toy-p23.
    #[arg(long, env = "ZTRIC_GROUP", default_value = "modp2048")]
    group: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the key ceremony for a quantized model and write key files.
    Keygen {
        #[command(flatten)]
        group: GroupArg,
        /// Quantized model file.
        #[arg(long)]
        model: std::path::PathBuf,
        /// Output directory for mpk.json, msk.json, and xapp_bundle.json.
        #[arg(long)]
        out_dir: std::path::PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Report calibration parameters for a float model on a dataset.
    Calibrate {
        #[arg(long)]
        model: std::path::PathBuf,
        /// Calibration dataset CSV.
        #[arg(long)]
        data: std::path::PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Fuse, calibrate, and quantize a float model.
    Quantize {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        data: std::path::PathBuf,
        /// Output model file with integer tensors.
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic KPM dataset CSV.
    GenData {
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        time_windows: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        balance: f64,
    },
    /// Train the detection MLP on a dataset CSV.
    Train {
        #[arg(long)]
        data: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
        /// Layer sizes, input to output.
        #[arg(long, value_delimiter = ',', default_value = "50,30,15,7,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long)]
        json: bool,
    },
    /// Run the issuance checks on a model's first-layer weights.
    ValidateWeights {
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Encrypt dataset windows under a master public key.
    Encrypt {
        #[arg(long)]
        mpk: std::path::PathBuf,
        /// Quantized model file (for the input quantization parameters).
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        data: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Classify dataset windows, on encrypted or plaintext path.
    Infer {
        #[arg(long, conflicts_with = "plaintext")]
        encrypted: bool,
        #[arg(long)]
        plaintext: bool,
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long)]
        data: std::path::PathBuf,
        /// Key directory from `keygen` (required with --encrypted).
        #[arg(long)]
        keys: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run the full pipeline for a scenario file.
    Pipeline {
        #[arg(long)]
        scenario: std::path::PathBuf,
        /// thread (in-process) or process (RAN side as a child process).
        #[arg(long, default_value = "thread")]
        mode: String,
        /// Write per-window timings to this CSV.
        #[arg(long)]
        timings_csv: Option<std::path::PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Timing benchmark across time-window configurations.
    Bench {
        #[command(flatten)]
        group: GroupArg,
        /// Comma-separated time-window counts.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
        windows: Vec<usize>,
        /// Windows per configuration.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the summary CSV here.
        #[arg(long)]
        csv: Option<std::path::PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// RAN-side agent used by process-mode pipeline runs.
    #[command(hide = true)]
    RanAgent {
        #[arg(long)]
        connect: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        time_windows: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        interval_ms: u64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::IssuanceRefused(_) => 3,
        Error::InvalidGroup(_)
        | Error::UnknownGroup(_)
        | Error::PlaintextOutOfRange { .. }
        | Error::DlogNotFound { .. }
        | Error::ColumnBound { .. }
        | Error::Envelope(_) => 4,
        Error::Io(_)
        | Error::Json(_)
        | Error::Parse { .. }
        | Error::ModelFile(_)
        | Error::Frame(_) => 5,
        Error::ShapeMismatch { .. } | Error::UnsupportedTopology(_) => 2,
        Error::TrainingDiverged { .. } | Error::Pipeline(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen {
            group,
            model,
            out_dir,
            seed,
            json,
        } => commands::keygen(&group.group, &model, &out_dir, seed, json),
        Command::Calibrate { model, data, json } => commands::calibrate(&model, &data, json),
        Command::Quantize {
            model,
            data,
            out,
            json,
        } => commands::quantize(&model, &data, &out, json),
        Command::GenData {
            out,
            count,
            time_windows,
            seed,
            balance,
        } => commands::gen_data(&out, count, time_windows, seed, balance),
        Command::Train {
            data,
            out,
            dims,
            seed,
            epochs,
            learning_rate,
            json,
        } => commands::train(&data, &out, &dims, seed, epochs, learning_rate, json),
        Command::ValidateWeights { model, json } => commands::validate_weights(&model, json),
        Command::Encrypt {
            mpk,
            model,
            data,
            out,
            seed,
        } => commands::encrypt(&mpk, &model, &data, &out, seed),
        Command::Infer {
            encrypted,
            plaintext,
            model,
            data,
            keys,
            seed,
            json,
        } => commands::infer(
            encrypted,
            plaintext,
            &model,
            &data,
            keys.as_deref(),
            seed,
            json,
        ),
        Command::Pipeline {
            scenario,
            mode,
            timings_csv,
            json,
        } => commands::pipeline(&scenario, &mode, timings_csv.as_deref(), json),
        Command::Bench {
            group,
            windows,
            count,
            seed,
            csv,
            json,
        } => commands::bench(&group.group, &windows, count, seed, csv.as_deref(), json),
        Command::RanAgent {
            connect,
            seed,
            time_windows,
            count,
            interval_ms,
        } => commands::ran_agent(&connect, seed, time_windows, count, interval_ms),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
