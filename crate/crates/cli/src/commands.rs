use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use ztric_core::envelope::{
    ct_to_envelope, fk_to_envelope, mpk_from_envelope, mpk_to_envelope, msk_to_envelope, Envelope,
};
use ztric_core::lab::{self, KpmWindow, SynthConfig, TrainConfig};
use ztric_core::pipeline::{
    self, build_context, run_pipeline, summarize, BenchRow, RunMode, ScenarioConfig, XappBundle,
};
use ztric_core::quant::{
    calibrate as run_calibration, fuse_linear_relu, quantize_model, quantized_forward, Activation,
    CalibrationSet, FloatModel, ModelFile, QuantizedModel,
};
use ztric_core::secure::{EncryptedInferenceContext, XappModel};
use ztric_core::{ipfe, validator, Error, GroupParams, Result};

pub const MPK_FILE: &str = "mpk.json";
pub const MSK_FILE: &str = "msk.json";
pub const FKSET_FILE: &str = "fkset.json";
pub const XAPP_BUNDLE_FILE: &str = "xapp_bundle.json";

#[derive(Serialize, Deserialize)]
struct FkSetFile {
    version: u32,
    group: String,
    keys: Vec<Envelope>,
}

#[derive(Serialize, Deserialize)]
struct CiphertextSetFile {
    version: u32,
    group: String,
    ciphertexts: Vec<Envelope>,
}

fn load_quantized(path: &Path) -> Result<QuantizedModel> {
    ModelFile::load(path)?.quantized_model()
}

fn load_float(path: &Path) -> Result<FloatModel> {
    ModelFile::load(path)?.float_model()
}

fn calibration_from_csv(path: &Path) -> Result<CalibrationSet> {
    let windows = lab::import_dataset(path)?;
    Ok(CalibrationSet::new(
        windows.into_iter().map(|w| w.readings).collect(),
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_vec_pretty(value)?)?)
}

fn emit(value: serde_json::Value, json: bool, human: impl FnOnce() -> String) {
    if json {
        println!("{value}");
    } else {
        println!("{}", human());
    }
}

pub fn keygen(group: &str, model: &Path, out_dir: &Path, seed: u64, json: bool) -> Result<()> {
    let group = GroupParams::by_name(group)?;
    let qmodel = load_quantized(model)?;

    let report = validator::validate_for_issuance(qmodel.first_layer_weights());
    if !report.passed {
        return Err(validator::refusal_error(&report));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mpk, msk) = ipfe::setup(&group, qmodel.input_dim(), &mut rng)?;
    let fks = ipfe::key_der(&msk, qmodel.first_layer_weights())?;

    std::fs::create_dir_all(out_dir)?;
    let mpk_env = mpk_to_envelope(&mpk);
    write_json(&out_dir.join(MPK_FILE), &mpk_env)?;
    write_json(&out_dir.join(MSK_FILE), &msk_to_envelope(&msk))?;
    let fk_envs: Vec<Envelope> = fks.iter().map(|fk| fk_to_envelope(fk, &group)).collect();
    write_json(
        &out_dir.join(FKSET_FILE),
        &FkSetFile {
            version: 1,
            group: group.name().into(),
            keys: fk_envs.clone(),
        },
    )?;
    let xapp_model = XappModel::from_quantized(&qmodel)?;
    let bundle = XappBundle {
        group: group.name().into(),
        fk_set: fk_envs,
        model: xapp_model,
        model_fingerprint: mpk_env.fingerprint()?,
    };
    write_json(&out_dir.join(XAPP_BUNDLE_FILE), &bundle)?;

    let fingerprint = mpk_env.fingerprint()?;
    emit(
        json!({
            "group": group.name(),
            "keys_issued": bundle.fk_set.len(),
            "solution_space_bits": report.budget.solution_space_bits,
            "mpk_fingerprint": fingerprint,
            "out_dir": out_dir,
        }),
        json,
        || {
            format!(
                "issued {} functional keys on {} ({} plaintext solution-space bits)\nmpk fingerprint {}\nkeys written to {}",
                bundle.fk_set.len(),
                group.name(),
                report.budget.solution_space_bits,
                fingerprint,
                out_dir.display()
            )
        },
    );
    Ok(())
}

pub fn calibrate(model: &Path, data: &Path, json: bool) -> Result<()> {
    let float = fuse_linear_relu(&load_float(model)?)?;
    let cal = run_calibration(&float, &calibration_from_csv(data)?)?;
    emit(serde_json::to_value(&cal)?, json, || {
        let mut s = format!(
            "input: scale {:.6} zero_point {}\n",
            cal.input.scale, cal.input.zero_point
        );
        for (k, lq) in cal.layers.iter().enumerate() {
            s.push_str(&format!(
                "layer {k}: weight scale {:.6} zp {} | output scale {:.6} zp {}\n",
                lq.weight.scale, lq.weight.zero_point, lq.output.scale, lq.output.zero_point
            ));
        }
        if !cal.degenerate.is_empty() {
            s.push_str(&format!(
                "degenerate tensors: {}\n",
                cal.degenerate.join(", ")
            ));
        }
        s.trim_end().to_string()
    });
    Ok(())
}

pub fn quantize(model: &Path, data: &Path, out: &Path, json: bool) -> Result<()> {
    let float = fuse_linear_relu(&load_float(model)?)?;
    let qmodel = quantize_model(&float, &calibration_from_csv(data)?)?;
    ModelFile::from_quantized(Some(&float), &qmodel).save(out)?;
    emit(
        json!({
            "dims": qmodel.layer_dims,
            "parameters": qmodel.parameter_count(),
            "out": out,
        }),
        json,
        || {
            format!(
                "quantized {:?} model ({} parameters) -> {}",
                qmodel.layer_dims,
                qmodel.parameter_count(),
                out.display()
            )
        },
    );
    Ok(())
}

pub fn gen_data(
    out: &Path,
    count: usize,
    time_windows: usize,
    seed: u64,
    balance: f64,
) -> Result<()> {
    let cfg = SynthConfig {
        time_windows,
        balance,
        ..SynthConfig::with_seed(seed)
    };
    let windows = lab::generate_dataset(&cfg, count)?;
    lab::export_dataset(out, &windows)?;
    println!(
        "wrote {} windows (t={}, l={}) to {}",
        windows.len(),
        time_windows,
        cfg.input_len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    data: &Path,
    out: &Path,
    dims: &[usize],
    seed: u64,
    epochs: usize,
    learning_rate: f64,
    json: bool,
) -> Result<()> {
    let windows = lab::import_dataset(data)?;
    let cfg = TrainConfig {
        seed,
        epochs,
        learning_rate,
        ..TrainConfig::default()
    };
    let outcome = lab::train_mlp(&windows, dims, &cfg)?;
    ModelFile::from_float(&outcome.model).save(out)?;
    emit(
        json!({
            "dims": dims,
            "train_accuracy": outcome.train_accuracy,
            "val_accuracy": outcome.val_accuracy,
            "final_loss": outcome.final_loss,
            "out": out,
        }),
        json,
        || {
            format!(
                "trained {:?}: train acc {:.4}, val acc {:.4}, loss {:.6} -> {}",
                dims,
                outcome.train_accuracy,
                outcome.val_accuracy,
                outcome.final_loss,
                out.display()
            )
        },
    );
    Ok(())
}

pub fn validate_weights(model: &Path, json: bool) -> Result<()> {
    let qmodel = load_quantized(model)?;
    let report = validator::validate_for_issuance(qmodel.first_layer_weights());
    emit(serde_json::to_value(&report)?, json, || {
        let basis = match report.basis.offending_basis_index {
            Some(k) => format!("failed (standard basis vector e_{k} in column space)"),
            None => "passed".into(),
        };
        format!(
            "key budget: {} ({} keys / {} inputs, {} bits)\nbasis check: {}\nverdict: {}",
            if report.budget.passed {
                "passed"
            } else {
                "failed"
            },
            report.budget.n,
            report.budget.l,
            report.budget.solution_space_bits,
            basis,
            if report.passed { "ISSUE" } else { "REFUSE" }
        )
    });
    if !report.passed {
        return Err(validator::refusal_error(&report));
    }
    Ok(())
}

pub fn encrypt(mpk: &Path, model: &Path, data: &Path, out: &Path, seed: u64) -> Result<()> {
    let env: Envelope = serde_json::from_slice(&std::fs::read(mpk)?)?;
    let mpk = mpk_from_envelope(&env)?;
    let qmodel = load_quantized(model)?;
    let windows = lab::import_dataset(data)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cts = Vec::with_capacity(windows.len());
    for w in &windows {
        let x_q: Vec<i64> = qmodel
            .quantize_input(&w.readings)?
            .into_iter()
            .map(i64::from)
            .collect();
        let ct = ipfe::encrypt(&mpk, &x_q, &mut rng)?;
        cts.push(ct_to_envelope(&ct, mpk.group()));
    }
    write_json(
        out,
        &CiphertextSetFile {
            version: 1,
            group: mpk.group().name().into(),
            ciphertexts: cts,
        },
    )?;
    println!("encrypted {} windows -> {}", windows.len(), out.display());
    Ok(())
}

fn classify_plaintext(qmodel: &QuantizedModel, windows: &[KpmWindow]) -> Result<Vec<usize>> {
    windows
        .iter()
        .map(|w| {
            let x_q = qmodel.quantize_input(&w.readings)?;
            Ok(quantized_forward(qmodel, &x_q)?.1)
        })
        .collect()
}

fn classify_encrypted(
    ctx: &EncryptedInferenceContext,
    mpk: &ipfe::MasterPublicKey,
    qmodel: &QuantizedModel,
    windows: &[KpmWindow],
    seed: u64,
) -> Result<Vec<usize>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    windows
        .iter()
        .map(|w| {
            let x_q: Vec<i64> = qmodel
                .quantize_input(&w.readings)?
                .into_iter()
                .map(i64::from)
                .collect();
            let ct = ipfe::encrypt(mpk, &x_q, &mut rng)?;
            Ok(ctx.evaluate_encrypted(&ct)?.class)
        })
        .collect()
}

pub fn infer(
    encrypted: bool,
    plaintext: bool,
    model: &Path,
    data: &Path,
    keys: Option<&Path>,
    seed: u64,
    json: bool,
) -> Result<()> {
    if encrypted == plaintext {
        return Err(Error::UnsupportedTopology(
            "choose exactly one of --encrypted or --plaintext".into(),
        ));
    }
    let qmodel = load_quantized(model)?;
    let windows = lab::import_dataset(data)?;
    let classes = if plaintext {
        classify_plaintext(&qmodel, &windows)?
    } else {
        let keys = keys.ok_or_else(|| {
            Error::UnsupportedTopology("--keys is required with --encrypted".into())
        })?;
        let bundle: XappBundle =
            serde_json::from_slice(&std::fs::read(keys.join(XAPP_BUNDLE_FILE))?)?;
        let env: Envelope = serde_json::from_slice(&std::fs::read(keys.join(MPK_FILE))?)?;
        let mpk = mpk_from_envelope(&env)?;
        let ctx = build_context(&bundle)?;
        classify_encrypted(&ctx, &mpk, &qmodel, &windows, seed)?
    };

    let agreement: Vec<bool> = windows
        .iter()
        .zip(&classes)
        .map(|(w, &c)| usize::from(w.label) == c)
        .collect();
    let accuracy = agreement.iter().filter(|&&a| a).count() as f64 / classes.len().max(1) as f64;
    emit(
        json!({
            "path": if plaintext { "plaintext" } else { "encrypted" },
            "classes": classes,
            "accuracy_vs_labels": accuracy,
        }),
        json,
        || {
            let mut s = String::new();
            for (i, c) in classes.iter().enumerate() {
                s.push_str(&format!(
                    "window {i}: class {c} ({})\n",
                    if *c == 1 { "jammer" } else { "clear" }
                ));
            }
            s.push_str(&format!("accuracy vs labels: {accuracy:.4}"));
            s
        },
    );
    Ok(())
}

pub fn pipeline(scenario: &Path, mode: &str, timings_csv: Option<&Path>, json: bool) -> Result<()> {
    let cfg: ScenarioConfig = serde_json::from_slice(&std::fs::read(scenario)?)?;
    let model_path = cfg
        .model
        .clone()
        .ok_or_else(|| Error::Pipeline("scenario file must name a model".into()))?;
    let qmodel = load_quantized(&model_path)?;
    let mode = match mode {
        "thread" => RunMode::Thread,
        "process" => RunMode::Process {
            agent_cmd: vec![
                std::env::current_exe()?.to_string_lossy().into_owned(),
                "ran-agent".into(),
            ],
        },
        other => {
            return Err(Error::UnsupportedTopology(format!(
                "mode must be thread or process, got {other}"
            )))
        }
    };
    let outcome = run_pipeline(&cfg, &qmodel, mode)?;
    if let Some(path) = timings_csv {
        let mut file = std::fs::File::create(path)?;
        pipeline::write_timing_csv(&mut file, &outcome.timings)?;
    }
    let row = summarize(cfg.time_windows, qmodel.input_dim(), &outcome.timings);
    emit(
        json!({
            "summary": row,
            "decisions": outcome.decisions,
            "dropped_windows": outcome.dropped_windows,
            "alarms": outcome.alarms,
            "partial": outcome.partial,
        }),
        json,
        || {
            format!(
                "{}\ndecisions: {} | dropped: {} | alarms: {} | partial: {}",
                pipeline::format_table(std::slice::from_ref(&row)),
                outcome.decisions.len(),
                outcome.dropped_windows,
                outcome.alarms,
                outcome.partial
            )
        },
    );
    Ok(())
}

/// Random-weight quantized model for benchmarking one time-window
/// configuration; first hidden width respects the key budget.
pub fn bench_model(time_windows: usize, seed: u64) -> Result<QuantizedModel> {
    use rand::Rng;
    let l = time_windows * lab::KPM_COUNT;
    let h1 = (l * 4 / 5).min(30);
    let dims = vec![l, h1, 15, 7, 2];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let layers = dims.len() - 1;
    let model = FloatModel {
        layer_dims: dims.clone(),
        weights: (0..layers)
            .map(|k| {
                (0..dims[k] * dims[k + 1])
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect(),
        biases: (0..layers)
            .map(|k| (0..dims[k + 1]).map(|_| rng.gen_range(-0.3..0.3)).collect())
            .collect(),
        activations: (0..layers)
            .map(|k| {
                if k + 1 == layers {
                    Activation::Linear
                } else {
                    Activation::Relu
                }
            })
            .collect(),
    };
    let model = fuse_linear_relu(&model)?;
    let synth = SynthConfig {
        time_windows,
        ..SynthConfig::with_seed(seed)
    };
    let cal: Vec<Vec<f64>> = lab::generate_dataset(&synth, 50)?
        .into_iter()
        .map(|w| w.readings)
        .collect();
    quantize_model(&model, &CalibrationSet::new(cal))
}

pub fn bench(
    group: &str,
    windows: &[usize],
    count: usize,
    seed: u64,
    csv: Option<&Path>,
    json: bool,
) -> Result<()> {
    let mut rows: Vec<BenchRow> = Vec::with_capacity(windows.len());
    for &t in windows {
        let qmodel = bench_model(t, seed ^ t as u64)?;
        let cfg = ScenarioConfig {
            group: group.to_string(),
            model: None,
            time_windows: t,
            window_count: count,
            window_interval_ms: 0,
            seed,
        };
        let outcome = run_pipeline(&cfg, &qmodel, RunMode::Thread)?;
        if outcome.partial {
            return Err(Error::Pipeline(format!("bench run for t={t} was partial")));
        }
        rows.push(summarize(t, qmodel.input_dim(), &outcome.timings));
    }
    if let Some(path) = csv {
        let mut file = std::fs::File::create(path)?;
        pipeline::write_bench_csv(&mut file, &rows)?;
    }
    emit(serde_json::to_value(&rows)?, json, || {
        pipeline::format_table(&rows)
    });
    Ok(())
}

pub fn ran_agent(
    connect: &str,
    seed: u64,
    time_windows: usize,
    count: usize,
    interval_ms: u64,
) -> Result<()> {
    pipeline::run_agent(&pipeline::AgentArgs {
        connect: connect.to_string(),
        seed,
        time_windows,
        window_count: count,
        window_interval_ms: interval_ms,
    })
}
