//! Post-training quantization of a float MLP into an integer-only model.
//!
//! Activations and non-first-layer weights live in [0, 255] with a scale
//! and zero point per tensor; first-layer weights are symmetric signed in
//! [-127, 127] with zero point 0 so the encrypted path recovers the raw
//! integer inner product. Between layers a wide accumulator is rescaled
//! by a fixed-point multiplier (32 fractional bits), rounded half away
//! from zero, and clamped, which keeps the forward pass bit-exact across
//! implementations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// Smallest scale a degenerate (constant) tensor is allowed to calibrate
/// to; dividing by it stays finite for every representable input.
pub const SCALE_FLOOR: f64 = f64::EPSILON;

/// Interior activation scales get 5% headroom above the observed float
/// range: integer rounding of inputs and weights can push a quantized
/// accumulator a few percent past the float maximum, and a calibration
/// sample must never hit the 255 ceiling.
const OUTPUT_HEADROOM: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub scale: f64,
    pub zero_point: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    FusedLinearRelu,
}

impl Activation {
    fn rectifies(self) -> bool {
        matches!(self, Activation::Relu | Activation::FusedLinearRelu)
    }
}

/// Plain float MLP: per-layer row-major weight matrices (in_dim x out_dim)
/// and bias vectors, with an activation tag per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatModel {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activations: Vec<Activation>,
}

impl FloatModel {
    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 {
            return Err(Error::UnsupportedTopology("need at least one layer".into()));
        }
        let layers = self.layer_dims.len() - 1;
        for (name, len) in [
            ("weights", self.weights.len()),
            ("biases", self.biases.len()),
            ("activations", self.activations.len()),
        ] {
            if len != layers {
                return Err(Error::UnsupportedTopology(format!(
                    "{name} has {len} entries for {layers} layers"
                )));
            }
        }
        for k in 0..layers {
            let (d_in, d_out) = (self.layer_dims[k], self.layer_dims[k + 1]);
            if self.weights[k].len() != d_in * d_out {
                return Err(Error::ShapeMismatch {
                    expected: d_in * d_out,
                    got: self.weights[k].len(),
                });
            }
            if self.biases[k].len() != d_out {
                return Err(Error::ShapeMismatch {
                    expected: d_out,
                    got: self.biases[k].len(),
                });
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims
            .windows(2)
            .map(|pair| pair[0] * pair[1] + pair[1])
            .sum()
    }

    /// Forward pass returning the final activations (logits for the usual
    /// linear output layer).
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_with_taps(x).1
    }

    /// Forward pass that also returns every layer's pre-activation vector,
    /// which calibration uses to observe value ranges.
    pub fn forward_with_taps(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut taps = Vec::with_capacity(self.weights.len());
        let mut acts = x.to_vec();
        for k in 0..self.weights.len() {
            let d_out = self.layer_dims[k + 1];
            let mut z = self.biases[k].clone();
            for (j, &a) in acts.iter().enumerate() {
                if a != 0.0 {
                    let row = &self.weights[k][j * d_out..(j + 1) * d_out];
                    for (zi, wi) in z.iter_mut().zip(row) {
                        *zi += a * wi;
                    }
                }
            }
            taps.push(z.clone());
            if self.activations[k].rectifies() {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts = z;
        }
        (taps, acts)
    }
}

/// Representative input windows used to pick scales and zero points.
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    pub samples: Vec<Vec<f64>>,
}

impl CalibrationSet {
    pub fn new(samples: Vec<Vec<f64>>) -> Self {
        Self { samples }
    }

    fn validate(&self, input_dim: usize) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::UnsupportedTopology(
                "calibration set is empty".into(),
            ));
        }
        for s in &self.samples {
            if s.len() != input_dim {
                return Err(Error::ShapeMismatch {
                    expected: input_dim,
                    got: s.len(),
                });
            }
        }
        Ok(())
    }
}

/// Eq. of the nearest-integer quantizer: round(x / scale + zero_point)
/// half away from zero, clamped into [0, 255].
pub fn quantize_value(x: f64, qp: QuantParams) -> u8 {
    let v = (x / qp.scale + qp.zero_point as f64).round();
    v.clamp(0.0, 255.0) as u8
}

fn round_i64(x: f64) -> i64 {
    x.round() as i64
}

/// Rescales a wide accumulator by m / 2^32, rounding half away from zero.
pub fn requantize(acc: i64, multiplier_q32: u64) -> i64 {
    let t = acc as i128 * multiplier_q32 as i128;
    if t >= 0 {
        ((t + (1i128 << 31)) >> 32) as i64
    } else {
        -(((-t + (1i128 << 31)) >> 32) as i64)
    }
}

/// Replaces each interior linear+ReLU pair with one fused layer whose
/// quantized output range starts at 0. Float semantics are unchanged.
pub fn fuse_linear_relu(model: &FloatModel) -> Result<FloatModel> {
    model.validate()?;
    let last = model.activations.len() - 1;
    let mut fused = model.clone();
    for (k, act) in fused.activations.iter_mut().enumerate() {
        match (*act, k == last) {
            (Activation::Relu | Activation::FusedLinearRelu, false) => {
                *act = Activation::FusedLinearRelu;
            }
            (Activation::Linear, true) => {}
            (Activation::Linear, false) => {
                return Err(Error::UnsupportedTopology(format!(
                    "interior layer {k} has no ReLU to fuse"
                )));
            }
            (_, true) => {
                return Err(Error::UnsupportedTopology(
                    "output layer must be linear".into(),
                ));
            }
        }
    }
    Ok(fused)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerQuant {
    pub weight: QuantParams,
    pub output: QuantParams,
}

/// Calibration result: one QuantParams per tensor, the names of any
/// tensors whose observed range collapsed to a point, and how many
/// calibration inputs the chosen input grid clamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub input: QuantParams,
    pub layers: Vec<LayerQuant>,
    pub degenerate: Vec<String>,
    pub input_clamp_events: usize,
}

fn floored_scale(raw: f64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if raw > SCALE_FLOOR {
        raw
    } else {
        degenerate.push(name.to_string());
        SCALE_FLOOR
    }
}

/// Observes input and pre-activation ranges over the calibration set and
/// derives scales and zero points for every tensor. The network input is
/// quantized with zero point 0 and scale max|x| / 255; rectified layers
/// calibrate their output range from 0.
pub fn calibrate(model: &FloatModel, cal: &CalibrationSet) -> Result<Calibration> {
    model.validate()?;
    cal.validate(model.input_dim())?;
    let layers = model.weights.len();
    let last = layers - 1;
    for (k, act) in model.activations.iter().enumerate() {
        if k != last && !act.rectifies() {
            return Err(Error::UnsupportedTopology(format!(
                "interior layer {k} must be rectified for range calibration"
            )));
        }
    }

    let mut degenerate = Vec::new();

    let max_abs = cal
        .samples
        .iter()
        .flat_map(|s| s.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let input = QuantParams {
        scale: floored_scale(max_abs / 255.0, "input", &mut degenerate),
        zero_point: 0,
    };
    // Components the chosen input grid has to clamp (with scale =
    // max|x|/255 and zero point 0, only negative readings can).
    let input_clamp_events = cal
        .samples
        .iter()
        .flat_map(|s| s.iter())
        .filter(|&&v| {
            let q = (v / input.scale).round();
            q < 0.0 || q > 255.0
        })
        .count();

    let mut max_pre = vec![0.0f64; layers];
    for sample in &cal.samples {
        let (taps, _) = model.forward_with_taps(sample);
        for (k, tap) in taps.iter().enumerate() {
            for &v in tap {
                max_pre[k] = max_pre[k].max(v);
            }
        }
    }

    let mut per_layer = Vec::with_capacity(layers);
    let mut in_scale = input.scale;
    for (k, layer_max) in max_pre.iter().enumerate() {
        let w = &model.weights[k];
        let weight = if k == 0 {
            let w_abs = w.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            QuantParams {
                scale: floored_scale(w_abs / 127.0, &format!("weights[{k}]"), &mut degenerate),
                zero_point: 0,
            }
        } else {
            // Extend the range to include zero so the zero point stays in
            // [0, 255] and zero is exactly representable.
            let lo = w.iter().fold(0.0f64, |m, &v| m.min(v));
            let hi = w.iter().fold(0.0f64, |m, &v| m.max(v));
            let scale = floored_scale((hi - lo) / 255.0, &format!("weights[{k}]"), &mut degenerate);
            let zp = (-lo / scale).round().clamp(0.0, 255.0) as u8;
            QuantParams {
                scale,
                zero_point: zp,
            }
        };

        let output = if k == last {
            // Logit scale; final-layer outputs stay wide.
            QuantParams {
                scale: in_scale * weight.scale,
                zero_point: 0,
            }
        } else {
            let top = layer_max.max(0.0) * OUTPUT_HEADROOM;
            QuantParams {
                scale: floored_scale(top / 255.0, &format!("output[{k}]"), &mut degenerate),
                zero_point: 0,
            }
        };

        per_layer.push(LayerQuant { weight, output });
        in_scale = output.scale;
    }

    Ok(Calibration {
        input,
        layers: per_layer,
        degenerate,
        input_clamp_events,
    })
}

/// One integer layer: quantized weights, wide biases at scale
/// s_in * s_w, and the fixed-point multiplier that maps the accumulator
/// onto the next layer's activation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedLayer {
    pub weights: IntMatrix,
    pub bias: Vec<i64>,
    pub input_qp: QuantParams,
    pub weight_qp: QuantParams,
    pub output_qp: QuantParams,
    pub requant_q32: Option<u64>,
    pub activation: Activation,
}

impl QuantizedLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Wide integer accumulation with both zero points removed.
    pub fn affine(&self, input: &[u8]) -> Vec<i64> {
        let in_zp = self.input_qp.zero_point as i64;
        let w_zp = self.weight_qp.zero_point as i64;
        let mut acc = self.bias.clone();
        for (j, &xq) in input.iter().enumerate() {
            let x = xq as i64 - in_zp;
            if x != 0 {
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += x * (self.weights.get(j, i) - w_zp);
                }
            }
        }
        acc
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ForwardStats {
    /// Requantized interior activations that exceeded 255 and were
    /// clamped down. ReLU flooring at zero is semantics, not loss, and is
    /// not counted.
    pub ceiling_clamps: usize,
}

/// Integer-only MLP. Immutable after construction; forward passes are
/// pure and safe to run concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<QuantizedLayer>,
}

impl QuantizedModel {
    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layers.len() != self.layer_dims.len() - 1 {
            return Err(Error::ModelFile("layer count does not match dims".into()));
        }
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.weights.rows() != self.layer_dims[k]
                || layer.weights.cols() != self.layer_dims[k + 1]
            {
                return Err(Error::ModelFile(format!("layer {k} weight shape mismatch")));
            }
            if layer.bias.len() != self.layer_dims[k + 1] {
                return Err(Error::ModelFile(format!("layer {k} bias length mismatch")));
            }
            if layer.input_qp.scale <= 0.0
                || layer.weight_qp.scale <= 0.0
                || layer.output_qp.scale <= 0.0
            {
                return Err(Error::ModelFile(format!(
                    "layer {k} has a non-positive scale"
                )));
            }
            if layer.output_qp.zero_point != 0 {
                return Err(Error::ModelFile(format!(
                    "layer {k} activation zero point must be 0"
                )));
            }
            if k == 0 {
                if layer.input_qp.zero_point != 0 || layer.weight_qp.zero_point != 0 {
                    return Err(Error::ModelFile(
                        "first layer requires zero-point-0 input and weights".into(),
                    ));
                }
                if layer
                    .weights
                    .data()
                    .iter()
                    .any(|&w| !(-127..=127).contains(&w))
                {
                    return Err(Error::ModelFile(
                        "first layer weights must lie in [-127, 127]".into(),
                    ));
                }
            } else {
                if layer
                    .weights
                    .data()
                    .iter()
                    .any(|&w| !(0..=255).contains(&w))
                {
                    return Err(Error::ModelFile(format!(
                        "layer {k} weights must lie in [0, 255]"
                    )));
                }
                if layer.input_qp != self.layers[k - 1].output_qp {
                    return Err(Error::ModelFile(format!(
                        "layer {k} input params disagree with layer {} output",
                        k - 1
                    )));
                }
            }
            match (k == last, layer.activation, layer.requant_q32) {
                (true, Activation::Linear, None) => {}
                (false, Activation::FusedLinearRelu, Some(_)) => {}
                _ => {
                    return Err(Error::ModelFile(format!(
                        "layer {k}: expected fused interior layers and a plain linear output"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn input_qp(&self) -> QuantParams {
        self.layers[0].input_qp
    }

    pub fn first_hidden_dim(&self) -> usize {
        self.layer_dims[1]
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims
            .windows(2)
            .map(|pair| pair[0] * pair[1] + pair[1])
            .sum()
    }

    /// First-layer weight matrix (l x n), the input to key derivation and
    /// the issuance validator.
    pub fn first_layer_weights(&self) -> &IntMatrix {
        &self.layers[0].weights
    }

    pub fn quantize_input(&self, x: &[f64]) -> Result<Vec<u8>> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let qp = self.input_qp();
        Ok(x.iter().map(|&v| quantize_value(v, qp)).collect())
    }
}

/// Runs a suffix of the network on already-quantized activations,
/// returning the wide logits of the final layer.
pub(crate) fn run_layers(
    layers: &[QuantizedLayer],
    input: &[u8],
    stats: &mut ForwardStats,
) -> Result<Vec<i64>> {
    let mut acts = input.to_vec();
    let last = layers.len() - 1;
    for (k, layer) in layers.iter().enumerate() {
        if acts.len() != layer.in_dim() {
            return Err(Error::ShapeMismatch {
                expected: layer.in_dim(),
                got: acts.len(),
            });
        }
        let acc = layer.affine(&acts);
        if k == last {
            return Ok(acc);
        }
        let m = layer.requant_q32.expect("validated interior layer");
        acts = acc
            .into_iter()
            .map(|a| {
                let r = requantize(a, m);
                if r > 255 {
                    stats.ceiling_clamps += 1;
                    255u8
                } else if r < 0 {
                    0u8
                } else {
                    r as u8
                }
            })
            .collect();
    }
    unreachable!("at least one layer");
}

pub fn argmax(logits: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Integer forward pass: wide logits plus the argmax class (ties resolve
/// to the lower index).
pub fn quantized_forward(model: &QuantizedModel, x_q: &[u8]) -> Result<(Vec<i64>, usize)> {
    let mut stats = ForwardStats::default();
    quantized_forward_with_stats(model, x_q, &mut stats)
}

pub fn quantized_forward_with_stats(
    model: &QuantizedModel,
    x_q: &[u8],
    stats: &mut ForwardStats,
) -> Result<(Vec<i64>, usize)> {
    let logits = run_layers(&model.layers, x_q, stats)?;
    let class = argmax(&logits);
    Ok((logits, class))
}

/// Quantizes a fused float model using scales calibrated on `cal`.
pub fn quantize_model(model: &FloatModel, cal: &CalibrationSet) -> Result<QuantizedModel> {
    let calibration = calibrate(model, cal)?;
    let last = model.weights.len() - 1;
    for (k, act) in model.activations.iter().enumerate() {
        let ok = if k == last {
            *act == Activation::Linear
        } else {
            *act == Activation::FusedLinearRelu
        };
        if !ok {
            return Err(Error::UnsupportedTopology(
                "quantize_model expects fuse_linear_relu output".into(),
            ));
        }
    }

    let mut layers = Vec::with_capacity(model.weights.len());
    let mut input_qp = calibration.input;
    for k in 0..model.weights.len() {
        let lq = &calibration.layers[k];
        let (d_in, d_out) = (model.layer_dims[k], model.layer_dims[k + 1]);
        let mut q_weights = IntMatrix::zeros(d_in, d_out);
        for j in 0..d_in {
            for i in 0..d_out {
                let w = model.weights[k][j * d_out + i];
                let q = if k == 0 {
                    round_i64(w / lq.weight.scale).clamp(-127, 127)
                } else {
                    (round_i64(w / lq.weight.scale) + lq.weight.zero_point as i64).clamp(0, 255)
                };
                q_weights.set(j, i, q);
            }
        }
        let bias_scale = input_qp.scale * lq.weight.scale;
        let bias = model.biases[k]
            .iter()
            .map(|&b| round_i64(b / bias_scale))
            .collect();
        let requant_q32 = if k == last {
            None
        } else {
            Some((bias_scale / lq.output.scale * (1u64 << 32) as f64).round() as u64)
        };
        layers.push(QuantizedLayer {
            weights: q_weights,
            bias,
            input_qp,
            weight_qp: lq.weight,
            output_qp: lq.output,
            requant_q32,
            activation: model.activations[k],
        });
        input_qp = lq.output;
    }

    let quantized = QuantizedModel {
        layer_dims: model.layer_dims.clone(),
        layers,
    };
    quantized.validate()?;
    Ok(quantized)
}

/// On-disk JSON model: dims, activations, float tensors, and (once
/// quantized) integer tensors with their quantization parameters. The
/// `quant` array is ordered input first, then weight/output pairs per
/// layer; `requant` holds one fixed-point multiplier per interior layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_biases: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_weights: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_biases: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quant: Option<Vec<QuantParams>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requant: Option<Vec<u64>>,
}

pub const MODEL_FILE_VERSION: u32 = 1;

impl ModelFile {
    pub fn from_float(model: &FloatModel) -> Self {
        Self {
            version: MODEL_FILE_VERSION,
            dims: model.layer_dims.clone(),
            activations: model.activations.clone(),
            float_weights: Some(model.weights.clone()),
            float_biases: Some(model.biases.clone()),
            q_weights: None,
            q_biases: None,
            quant: None,
            requant: None,
        }
    }

    pub fn from_quantized(float: Option<&FloatModel>, q: &QuantizedModel) -> Self {
        let mut quant = vec![q.input_qp()];
        for layer in &q.layers {
            quant.push(layer.weight_qp);
            quant.push(layer.output_qp);
        }
        Self {
            version: MODEL_FILE_VERSION,
            dims: q.layer_dims.clone(),
            activations: q.layers.iter().map(|l| l.activation).collect(),
            float_weights: float.map(|f| f.weights.clone()),
            float_biases: float.map(|f| f.biases.clone()),
            q_weights: Some(q.layers.iter().map(|l| l.weights.data().to_vec()).collect()),
            q_biases: Some(q.layers.iter().map(|l| l.bias.clone()).collect()),
            quant: Some(quant),
            requant: Some(q.layers.iter().filter_map(|l| l.requant_q32).collect()),
        }
    }

    pub fn float_model(&self) -> Result<FloatModel> {
        let (Some(w), Some(b)) = (&self.float_weights, &self.float_biases) else {
            return Err(Error::ModelFile("no float tensors present".into()));
        };
        let model = FloatModel {
            layer_dims: self.dims.clone(),
            weights: w.clone(),
            biases: b.clone(),
            activations: self.activations.clone(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn quantized_model(&self) -> Result<QuantizedModel> {
        let (Some(qw), Some(qb), Some(quant), Some(requant)) =
            (&self.q_weights, &self.q_biases, &self.quant, &self.requant)
        else {
            return Err(Error::ModelFile("no quantized tensors present".into()));
        };
        if self.dims.len() < 2 {
            return Err(Error::ModelFile("need at least one layer".into()));
        }
        let layers_n = self.dims.len() - 1;
        if quant.len() != 1 + 2 * layers_n {
            return Err(Error::ModelFile(format!(
                "quant array needs {} entries, got {}",
                1 + 2 * layers_n,
                quant.len()
            )));
        }
        if qw.len() != layers_n || qb.len() != layers_n || requant.len() != layers_n - 1 {
            return Err(Error::ModelFile(
                "quantized tensor counts disagree with dims".into(),
            ));
        }
        let mut layers = Vec::with_capacity(layers_n);
        let mut input_qp = quant[0];
        for k in 0..layers_n {
            let (d_in, d_out) = (self.dims[k], self.dims[k + 1]);
            let weights = IntMatrix::from_flat(d_in, d_out, qw[k].clone())?;
            layers.push(QuantizedLayer {
                weights,
                bias: qb[k].clone(),
                input_qp,
                weight_qp: quant[1 + 2 * k],
                output_qp: quant[2 + 2 * k],
                requant_q32: requant.get(k).copied(),
                activation: self.activations[k],
            });
            input_qp = quant[2 + 2 * k];
        }
        let model = QuantizedModel {
            layer_dims: self.dims.clone(),
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_vec_pretty(self)?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let file: ModelFile = serde_json::from_slice(&bytes)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported version {}",
                file.version
            )));
        }
        Ok(file)
    }
}
