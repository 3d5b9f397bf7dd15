//! Synthetic KPM traces, a small deterministic MLP trainer, and dataset
//! tooling. The jammer regime is modeled as per-KPM mean shifts plus
//! variance inflation, which preserves the learnable structure a
//! detection xApp relies on without pretending to reproduce RF physics.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{Activation, FloatModel};

pub const KPM_COUNT: usize = 5;
pub const KPM_NAMES: [&str; KPM_COUNT] = ["bitrate", "mcs", "bler", "sinr", "bsr"];
pub const SUPPORTED_TIME_WINDOWS: [usize; 3] = [5, 10, 20];

/// One flattened t x m KPM matrix (row-major, time-major) plus its label.
#[derive(Debug, Clone, PartialEq)]
pub struct KpmWindow {
    pub readings: Vec<f64>,
    pub label: bool,
}

impl KpmWindow {
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpmDistribution {
    pub mean: f64,
    pub std: f64,
}

/// Synthetic trace configuration. All draws are pure functions of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub time_windows: usize,
    pub benign: [KpmDistribution; KPM_COUNT],
    /// Additive mean shift under jamming, one per KPM.
    pub jammer_shift: [f64; KPM_COUNT],
    /// Multiplicative std inflation under jamming.
    pub jammer_std_inflation: f64,
    /// Fraction of jammer-labeled windows.
    pub balance: f64,
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn input_len(&self) -> usize {
        self.time_windows * KPM_COUNT
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_TIME_WINDOWS.contains(&self.time_windows) {
            return Err(Error::UnsupportedTopology(format!(
                "time_windows must be one of {SUPPORTED_TIME_WINDOWS:?}, got {}",
                self.time_windows
            )));
        }
        if self.benign.iter().any(|d| d.std <= 0.0) {
            return Err(Error::UnsupportedTopology(
                "KPM std must be positive".into(),
            ));
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return Err(Error::UnsupportedTopology(
                "balance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            time_windows: 10,
            // bitrate Mbps, MCS index, BLER percent, SINR dB, BSR: benign
            // operating points with mild noise. A single quantization
            // scale has to serve all five KPMs, so they are reported in
            // units of comparable magnitude (BLER as a percentage).
            benign: [
                KpmDistribution {
                    mean: 12.0,
                    std: 2.5,
                },
                KpmDistribution {
                    mean: 20.0,
                    std: 3.0,
                },
                KpmDistribution {
                    mean: 8.0,
                    std: 4.0,
                },
                KpmDistribution {
                    mean: 18.0,
                    std: 3.5,
                },
                KpmDistribution {
                    mean: 6.0,
                    std: 2.0,
                },
            ],
            // Under jamming: throughput, MCS, and SINR drop; BLER and BSR
            // rise. Just over half a sigma per reading keeps the classes
            // overlapping enough that accuracy stays off the ceiling.
            jammer_shift: [-1.4, -1.65, 2.2, -1.9, 1.1],
            jammer_std_inflation: 1.2,
            balance: 0.5,
        }
    }
}

fn derived_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut impl RngCore) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn sample_window(cfg: &SynthConfig, index: u64, label: bool) -> KpmWindow {
    let mut rng = ChaCha20Rng::seed_from_u64(derived_seed(cfg.seed, index));
    let mut readings = Vec::with_capacity(cfg.input_len());
    for _ in 0..cfg.time_windows {
        for k in 0..KPM_COUNT {
            let d = cfg.benign[k];
            let (mean, std) = if label {
                (
                    d.mean + cfg.jammer_shift[k],
                    d.std * cfg.jammer_std_inflation,
                )
            } else {
                (d.mean, d.std)
            };
            readings.push((mean + std * gaussian(&mut rng)).max(0.0));
        }
    }
    KpmWindow { readings, label }
}

/// Deterministic dataset: exactly round(count * balance) jammer windows,
/// shuffled by the seed. Windows are generated in parallel from per-index
/// derived seeds, so the result is independent of scheduling.
pub fn generate_dataset(cfg: &SynthConfig, count: usize) -> Result<Vec<KpmWindow>> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::UnsupportedTopology(
            "count must be at least 1".into(),
        ));
    }
    let jammers = ((count as f64) * cfg.balance).round() as usize;
    let mut labels = vec![false; count];
    labels[..jammers.min(count)].fill(true);
    shuffle(
        &mut labels,
        &mut ChaCha20Rng::seed_from_u64(derived_seed(cfg.seed, u64::MAX)),
    );

    Ok(labels
        .into_par_iter()
        .enumerate()
        .map(|(i, label)| sample_window(cfg, i as u64, label))
        .collect())
}

fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub val_split: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 40,
            batch_size: 32,
            seed: 42,
            val_split: 0.2,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.epochs == 0
            || self.batch_size == 0
            || !(0.0..1.0).contains(&self.val_split)
        {
            return Err(Error::UnsupportedTopology(
                "training hyperparameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FloatModel,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub final_loss: f64,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn float_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy of the model on a labeled batch.
pub fn batch_loss(model: &FloatModel, batch: &[(Vec<f64>, usize)]) -> f64 {
    let mut total = 0.0;
    for (x, label) in batch {
        let probs = softmax(&model.forward(x));
        total -= probs[*label].max(1e-300).ln();
    }
    total / batch.len() as f64
}

/// Analytic gradients of `batch_loss` with respect to every weight and
/// bias, in the same layout as `FloatModel::weights` / `biases`.
pub fn batch_gradients(
    model: &FloatModel,
    batch: &[(Vec<f64>, usize)],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let layers = model.weights.len();
    let mut w_grads: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut b_grads: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    for (x, label) in batch {
        // Forward, keeping each layer's input and pre-activation.
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut acts = x.clone();
        for k in 0..layers {
            let d_out = model.layer_dims[k + 1];
            let mut z = model.biases[k].clone();
            for (j, &a) in acts.iter().enumerate() {
                if a != 0.0 {
                    let row = &model.weights[k][j * d_out..(j + 1) * d_out];
                    for (zi, wi) in z.iter_mut().zip(row) {
                        *zi += a * wi;
                    }
                }
            }
            inputs.push(acts);
            pre.push(z.clone());
            if model.activations[k] != Activation::Linear {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts = z;
        }

        // delta at the output: softmax - onehot
        let mut delta = softmax(&acts);
        delta[*label] -= 1.0;

        for k in (0..layers).rev() {
            let d_out = model.layer_dims[k + 1];
            for (i, &d) in delta.iter().enumerate() {
                b_grads[k][i] += d;
            }
            for (j, &a) in inputs[k].iter().enumerate() {
                if a != 0.0 {
                    for (i, &d) in delta.iter().enumerate() {
                        w_grads[k][j * d_out + i] += a * d;
                    }
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; model.layer_dims[k]];
                for (j, p) in prev.iter_mut().enumerate() {
                    // ReLU gate of the previous layer
                    if pre[k - 1][j] > 0.0 {
                        let row = &model.weights[k][j * d_out..(j + 1) * d_out];
                        *p = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    }
                }
                delta = prev;
            }
        }
    }

    let scale = 1.0 / batch.len() as f64;
    for g in w_grads.iter_mut().chain(b_grads.iter_mut()) {
        for v in g.iter_mut() {
            *v *= scale;
        }
    }
    (w_grads, b_grads)
}

/// Plain minibatch SGD on softmax cross-entropy, single-threaded for
/// determinism. Features are standardized on the training split and the
/// standardization is folded back into the first layer, so the returned
/// model consumes raw KPM windows.
pub fn train_mlp(data: &[KpmWindow], dims: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::UnsupportedTopology("empty training set".into()));
    }
    let input_dim = dims.first().copied().unwrap_or(0);
    if dims.len() < 2 || *dims.last().unwrap() != 2 {
        return Err(Error::UnsupportedTopology(
            "classifier dims must end in 2 output classes".into(),
        ));
    }
    for w in data {
        if w.len() != input_dim {
            return Err(Error::ShapeMismatch {
                expected: input_dim,
                got: w.len(),
            });
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    // Deterministic shuffled split.
    let mut order: Vec<usize> = (0..data.len()).collect();
    shuffle(&mut order, &mut rng);
    let val_len = ((data.len() as f64) * cfg.val_split).floor() as usize;
    let (val_idx, train_idx) = order.split_at(val_len);
    let train_idx = if train_idx.is_empty() {
        val_idx
    } else {
        train_idx
    };

    // Standardization statistics from the training split.
    let mut mean = vec![0.0f64; input_dim];
    for &i in train_idx {
        for (m, &v) in mean.iter_mut().zip(&data[i].readings) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= train_idx.len() as f64;
    }
    let mut std = vec![0.0f64; input_dim];
    for &i in train_idx {
        for (s, (&v, m)) in std.iter_mut().zip(data[i].readings.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / train_idx.len() as f64).sqrt().max(1e-9);
    }

    let standardize = |w: &KpmWindow| -> (Vec<f64>, usize) {
        let x = w
            .readings
            .iter()
            .zip(mean.iter().zip(&std))
            .map(|(&v, (m, s))| (v - m) / s)
            .collect();
        (x, usize::from(w.label))
    };
    let train_set: Vec<(Vec<f64>, usize)> =
        train_idx.iter().map(|&i| standardize(&data[i])).collect();

    // He initialization.
    let layers = dims.len() - 1;
    let mut model = FloatModel {
        layer_dims: dims.to_vec(),
        weights: (0..layers)
            .map(|k| {
                let scale = (2.0 / dims[k] as f64).sqrt();
                (0..dims[k] * dims[k + 1])
                    .map(|_| gaussian(&mut rng) * scale)
                    .collect()
            })
            .collect(),
        biases: (0..layers).map(|k| vec![0.0; dims[k + 1]]).collect(),
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

    let mut final_loss = f64::NAN;
    let mut batch_order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        shuffle(&mut batch_order, &mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in batch_order.chunks(cfg.batch_size) {
            let batch: Vec<(Vec<f64>, usize)> =
                chunk.iter().map(|&i| train_set[i].clone()).collect();
            let (w_grads, b_grads) = batch_gradients(&model, &batch);
            for k in 0..layers {
                for (w, g) in model.weights[k].iter_mut().zip(&w_grads[k]) {
                    *w -= cfg.learning_rate * g;
                }
                for (b, g) in model.biases[k].iter_mut().zip(&b_grads[k]) {
                    *b -= cfg.learning_rate * g;
                }
            }
            epoch_loss += batch_loss(&model, &batch);
            batches += 1;
        }
        final_loss = epoch_loss / batches as f64;
        if !final_loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
    }

    // Fold standardization into the first layer: the deployed model takes
    // raw windows.
    let d_out = dims[1];
    for j in 0..input_dim {
        for i in 0..d_out {
            let w = model.weights[0][j * d_out + i] / std[j];
            model.weights[0][j * d_out + i] = w;
            model.biases[0][i] -= w * mean[j];
        }
    }

    let accuracy_of = |idx: &[usize]| -> f64 {
        if idx.is_empty() {
            return f64::NAN;
        }
        let hits = idx
            .iter()
            .filter(|&&i| {
                float_argmax(&model.forward(&data[i].readings)) == usize::from(data[i].label)
            })
            .count();
        hits as f64 / idx.len() as f64
    };

    Ok(TrainOutcome {
        train_accuracy: accuracy_of(train_idx),
        val_accuracy: accuracy_of(val_idx),
        model,
        final_loss,
    })
}

/// Model accuracy of a float model over labeled windows.
pub fn float_accuracy(model: &FloatModel, windows: &[KpmWindow]) -> f64 {
    let hits = windows
        .iter()
        .filter(|w| float_argmax(&model.forward(&w.readings)) == usize::from(w.label))
        .count();
    hits as f64 / windows.len() as f64
}

fn csv_header(time_windows: usize) -> String {
    let mut cols: Vec<String> = Vec::with_capacity(time_windows * KPM_COUNT + 1);
    for t in 0..time_windows {
        for name in KPM_NAMES {
            cols.push(format!("{name}_t{t}"));
        }
    }
    cols.push("label".into());
    cols.join(",")
}

/// Writes windows as CSV with a header row; floats use the shortest
/// round-trip representation, so import is lossless.
pub fn export_dataset(path: impl AsRef<Path>, windows: &[KpmWindow]) -> Result<()> {
    let time_windows = windows
        .first()
        .map(|w| w.len() / KPM_COUNT)
        .unwrap_or(SUPPORTED_TIME_WINDOWS[1]);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", csv_header(time_windows))?;
    for w in windows {
        let mut line = String::new();
        for v in &w.readings {
            line.push_str(&format!("{v},"));
        }
        line.push(if w.label { '1' } else { '0' });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dataset exported by `export_dataset`. An empty file is an
/// empty dataset; malformed rows report their 1-based line number.
pub fn import_dataset(path: impl AsRef<Path>) -> Result<Vec<KpmWindow>> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let Some(header) = lines.next() else {
        return Ok(Vec::new());
    };
    let header = header?;
    let columns = header.split(',').count();
    if columns < 2 || (columns - 1) % KPM_COUNT != 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header must have t*{KPM_COUNT} feature columns plus label"),
        });
    }
    let time_windows = (columns - 1) / KPM_COUNT;
    if !SUPPORTED_TIME_WINDOWS.contains(&time_windows) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported time window count {time_windows}"),
        });
    }
    if header != csv_header(time_windows) {
        return Err(Error::Parse {
            line: 1,
            msg: "unrecognized header".into(),
        });
    }

    let mut windows = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {columns} columns, got {}", fields.len()),
            });
        }
        let mut readings = Vec::with_capacity(columns - 1);
        for f in &fields[..columns - 1] {
            readings.push(f.parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad float {f:?}: {e}"),
            })?);
        }
        let label = match fields[columns - 1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label must be 0 or 1, got {other:?}"),
                })
            }
        };
        windows.push(KpmWindow { readings, label });
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::with_seed(42);
        let a = generate_dataset(&cfg, 10).unwrap();
        let b = generate_dataset(&cfg, 10).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|w| w.len() == 50));
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_dataset(&SynthConfig::with_seed(1), 5).unwrap();
        let b = generate_dataset(&SynthConfig::with_seed(2), 5).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn label_balance_is_exact() {
        let mut cfg = SynthConfig::with_seed(7);
        cfg.balance = 0.3;
        let data = generate_dataset(&cfg, 10_000).unwrap();
        let jam = data.iter().filter(|w| w.label).count();
        assert_eq!(jam, 3000);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = SynthConfig {
            time_windows: 7,
            ..SynthConfig::default()
        };
        assert!(generate_dataset(&cfg, 1).is_err());
        let cfg = SynthConfig {
            balance: 1.0,
            ..SynthConfig::default()
        };
        assert!(generate_dataset(&cfg, 1).is_err());
        assert!(generate_dataset(&SynthConfig::default(), 0).is_err());
    }

    #[test]
    fn readings_are_non_negative() {
        let data = generate_dataset(&SynthConfig::with_seed(3), 200).unwrap();
        assert!(data.iter().flat_map(|w| &w.readings).all(|&v| v >= 0.0));
    }

    /// Test-only logistic probe trained by gradient descent; independent
    /// of the MLP trainer.
    fn logistic_probe_accuracy(data: &[KpmWindow]) -> f64 {
        let dim = data[0].len();
        let n = data.len();
        // standardize for conditioning
        let mut mean = vec![0.0; dim];
        for w in data {
            for (m, &v) in mean.iter_mut().zip(&w.readings) {
                *m += v / n as f64;
            }
        }
        let mut std = vec![0.0; dim];
        for w in data {
            for (s, (&v, m)) in std.iter_mut().zip(w.readings.iter().zip(&mean)) {
                *s += (v - m) * (v - m) / n as f64;
            }
        }
        for s in &mut std {
            *s = s.sqrt().max(1e-9);
        }
        let xs: Vec<Vec<f64>> = data
            .iter()
            .map(|w| {
                w.readings
                    .iter()
                    .zip(mean.iter().zip(&std))
                    .map(|(&v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect();

        let mut weights = vec![0.0f64; dim];
        let mut bias = 0.0f64;
        for _ in 0..200 {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for (x, w) in xs.iter().zip(data) {
                let z: f64 = bias + x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
                let p = 1.0 / (1.0 + (-z).exp());
                let err = p - f64::from(w.label);
                for (g, &xi) in gw.iter_mut().zip(x) {
                    *g += err * xi / n as f64;
                }
                gb += err / n as f64;
            }
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= 0.5 * g;
            }
            bias -= 0.5 * gb;
        }
        let hits = xs
            .iter()
            .zip(data)
            .filter(|(x, w)| {
                let z: f64 = bias + x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();
                (z > 0.0) == w.label
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn default_config_is_linearly_separable() {
        let data = generate_dataset(&SynthConfig::with_seed(42), 5000).unwrap();
        let acc = logistic_probe_accuracy(&data);
        assert!(acc > 0.9, "probe accuracy {acc}");
    }

    #[test]
    fn neutral_jammer_gives_chance_accuracy() {
        let mut cfg = SynthConfig::with_seed(42);
        cfg.jammer_shift = [0.0; KPM_COUNT];
        cfg.jammer_std_inflation = 1.0;
        let data = generate_dataset(&cfg, 2000).unwrap();
        let outcome = train_mlp(&data, &[50, 8, 2], &TrainConfig::default()).unwrap();
        assert!(
            (outcome.val_accuracy - 0.5).abs() <= 0.05,
            "val accuracy {} on label-independent data",
            outcome.val_accuracy
        );
    }

    /// Regression anchor: the canonical training run. The exact value
    /// was produced by the first verified run of this configuration and
    /// is frozen here; a drift means the trainer or generator changed.
    #[test]
    fn canonical_training_accuracy_anchor() {
        let data = generate_dataset(&SynthConfig::with_seed(42), 2000).unwrap();
        let outcome = train_mlp(&data, &[50, 30, 15, 7, 2], &TrainConfig::default()).unwrap();
        assert!(
            outcome.val_accuracy >= 0.95,
            "val accuracy {}",
            outcome.val_accuracy
        );
        assert!(
            (outcome.val_accuracy - 0.9575).abs() < 1e-12,
            "val accuracy drifted: {}",
            outcome.val_accuracy
        );
    }

    #[test]
    fn training_is_deterministic() {
        let data = generate_dataset(&SynthConfig::with_seed(9), 300).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let a = train_mlp(&data, &[50, 10, 2], &cfg).unwrap();
        let b = train_mlp(&data, &[50, 10, 2], &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.val_accuracy, b.val_accuracy);
    }

    #[test]
    fn single_sample_overfits() {
        let data = generate_dataset(&SynthConfig::with_seed(4), 1).unwrap();
        let cfg = TrainConfig {
            val_split: 0.0,
            epochs: 60,
            ..TrainConfig::default()
        };
        let outcome = train_mlp(&data, &[50, 6, 2], &cfg).unwrap();
        assert_eq!(outcome.train_accuracy, 1.0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // perturb-by-index is the point
    fn gradients_match_finite_differences() {
        let data = generate_dataset(&SynthConfig::with_seed(11), 6).unwrap();
        // small rectified net over a 4-feature slice
        let batch: Vec<(Vec<f64>, usize)> = data
            .iter()
            .map(|w| (w.readings[..4].to_vec(), usize::from(w.label)))
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let dims = [4usize, 3, 2];
        let mut model = FloatModel {
            layer_dims: dims.to_vec(),
            weights: vec![
                (0..12).map(|_| gaussian(&mut rng) * 0.7).collect(),
                (0..6).map(|_| gaussian(&mut rng) * 0.7).collect(),
            ],
            biases: vec![vec![0.1, -0.2, 0.3], vec![0.05, -0.05]],
            activations: vec![Activation::Relu, Activation::Linear],
        };

        let (w_grads, b_grads) = batch_gradients(&model, &batch);
        let h = 1e-5;
        let mut checked = 0;
        for k in 0..2 {
            for idx in 0..model.weights[k].len() {
                let orig = model.weights[k][idx];
                model.weights[k][idx] = orig + h;
                let up = batch_loss(&model, &batch);
                model.weights[k][idx] = orig - h;
                let down = batch_loss(&model, &batch);
                model.weights[k][idx] = orig;
                let fd = (up - down) / (2.0 * h);
                let analytic = w_grads[k][idx];
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((analytic - fd) / denom).abs() < 1e-4,
                    "w[{k}][{idx}]: analytic {analytic}, fd {fd}"
                );
                checked += 1;
            }
            for idx in 0..model.biases[k].len() {
                let orig = model.biases[k][idx];
                model.biases[k][idx] = orig + h;
                let up = batch_loss(&model, &batch);
                model.biases[k][idx] = orig - h;
                let down = batch_loss(&model, &batch);
                model.biases[k][idx] = orig;
                let fd = (up - down) / (2.0 * h);
                let analytic = b_grads[k][idx];
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((analytic - fd) / denom).abs() < 1e-4,
                    "b[{k}][{idx}]: analytic {analytic}, fd {fd}"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 23);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = generate_dataset(&SynthConfig::with_seed(13), 100).unwrap();
        export_dataset(&path, &data).unwrap();
        let back = import_dataset(&path).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn empty_file_is_an_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(import_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn wrong_column_count_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let data = generate_dataset(&SynthConfig::with_seed(13), 3).unwrap();
        export_dataset(&path, &data).unwrap();
        let mut contents = std::fs::read_to_string(&path).unwrap();
        contents.push_str("1.0,2.0,3\n");
        std::fs::write(&path, contents).unwrap();
        match import_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_labels_and_floats_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad2.csv");
        let header = csv_header(5);
        let row_ok: String = (0..25).map(|_| "1.0,".to_string()).collect::<String>() + "1";
        let row_bad_label: String = (0..25).map(|_| "1.0,".to_string()).collect::<String>() + "2";
        std::fs::write(&path, format!("{header}\n{row_ok}\n{row_bad_label}\n")).unwrap();
        match import_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
