//! Privacy-preserving xApp evaluation: the first layer's inner products
//! are recovered from the ciphertext through functional keys, biased,
//! rectified, and requantized; every later layer runs in the clear on
//! integer activations. The runtime context never holds first-layer
//! plaintext weights, so the input vector is never reconstructible here.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsgs::{BsgsTable, DlogBound};
use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::ipfe::{decrypt_inner_product_with_table, Ciphertext, FunctionalKey};
use crate::quant::{
    argmax, requantize, run_layers, ForwardStats, QuantParams, QuantizedLayer, QuantizedModel,
};
use crate::validator;

/// The model material an xApp is allowed to hold: first-layer bias and
/// requantization constants plus the full plaintext layers from the
/// second layer on. First-layer weights exist only as functional keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XappModel {
    layer_dims: Vec<usize>,
    first_bias: Vec<i64>,
    first_output_qp: QuantParams,
    first_requant_q32: u64,
    tail: Vec<QuantizedLayer>,
}

impl XappModel {
    /// Strips the first-layer weight matrix from a quantized model.
    pub fn from_quantized(model: &QuantizedModel) -> Result<Self> {
        model.validate()?;
        if model.layers.len() < 2 {
            return Err(Error::UnsupportedTopology(
                "encrypted evaluation needs a hidden layer ahead of the output".into(),
            ));
        }
        let first = &model.layers[0];
        Ok(Self {
            layer_dims: model.layer_dims.clone(),
            first_bias: first.bias.clone(),
            first_output_qp: first.output_qp,
            first_requant_q32: first.requant_q32.expect("validated fused first layer"),
            tail: model.layers[1..].to_vec(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 3 || self.tail.len() + 2 != self.layer_dims.len() {
            return Err(Error::ModelFile(
                "xapp model dims disagree with tail".into(),
            ));
        }
        if self.first_bias.len() != self.layer_dims[1] {
            return Err(Error::ModelFile("first-layer bias length mismatch".into()));
        }
        for (k, layer) in self.tail.iter().enumerate() {
            if layer.weights.rows() != self.layer_dims[k + 1]
                || layer.weights.cols() != self.layer_dims[k + 2]
            {
                return Err(Error::ModelFile(format!("tail layer {k} shape mismatch")));
            }
        }
        if self.tail[0].input_qp != self.first_output_qp {
            return Err(Error::ModelFile(
                "tail input params disagree with first-layer output".into(),
            ));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn first_hidden_dim(&self) -> usize {
        self.layer_dims[1]
    }

    pub fn tail_layers(&self) -> &[QuantizedLayer] {
        &self.tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTimings {
    pub first_layer_us: u64,
    pub tail_us: u64,
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceResult {
    pub class: usize,
    pub logits: Vec<i64>,
    pub timings: EvalTimings,
}

/// Immutable evaluation context: functional keys, the stripped model,
/// and one precomputed baby-step table shared by all columns and calls.
#[derive(Debug, Clone)]
pub struct EncryptedInferenceContext {
    model: XappModel,
    fk_set: Vec<FunctionalKey>,
    bound: DlogBound,
    table: BsgsTable,
}

impl EncryptedInferenceContext {
    /// Builds a context with the dlog window derived from the input
    /// length, which is the bound that always contains quantized inner
    /// products.
    pub fn new(group: &GroupParams, model: XappModel, fk_set: Vec<FunctionalKey>) -> Result<Self> {
        let bound = DlogBound::for_quantized_inputs(model.input_len());
        Self::with_bound(group, model, fk_set, bound)
    }

    /// Context with a caller-chosen window, for deployments with tighter
    /// weight statistics or tiny test groups.
    pub fn with_bound(
        group: &GroupParams,
        model: XappModel,
        fk_set: Vec<FunctionalKey>,
        bound: DlogBound,
    ) -> Result<Self> {
        model.validate()?;
        let l = model.input_len();
        let n = model.first_hidden_dim();
        if fk_set.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: fk_set.len(),
            });
        }
        for fk in &fk_set {
            if fk.len() != l {
                return Err(Error::ShapeMismatch {
                    expected: l,
                    got: fk.len(),
                });
            }
        }
        let budget = validator::check_key_budget(l, n);
        if !budget.passed {
            return Err(Error::IssuanceRefused(format!(
                "context refused: {n} functional keys for {l} inputs"
            )));
        }
        let table = BsgsTable::build(group, group.g(), bound);
        Ok(Self {
            model,
            fk_set,
            bound,
            table,
        })
    }

    pub fn bound(&self) -> DlogBound {
        self.bound
    }

    pub fn model(&self) -> &XappModel {
        &self.model
    }

    /// Recovers the first hidden layer from the ciphertext: per column,
    /// the exact inner product plus bias, rectified and requantized onto
    /// the [0, 255] activation grid. Columns decrypt in parallel with
    /// order preserved.
    pub fn first_layer_from_ciphertext(&self, ct: &Ciphertext) -> Result<Vec<u8>> {
        if ct.len() != self.model.input_len() {
            return Err(Error::ShapeMismatch {
                expected: self.model.input_len(),
                got: ct.len(),
            });
        }
        let m = self.model.first_requant_q32;
        self.fk_set
            .par_iter()
            .enumerate()
            .map(|(column, fk)| {
                let ip =
                    decrypt_inner_product_with_table(ct, fk, &self.table).map_err(|e| match e {
                        Error::DlogNotFound { lo, hi } => Error::ColumnBound { column, lo, hi },
                        other => other,
                    })?;
                let acc = ip + self.model.first_bias[column];
                Ok(requantize(acc, m).clamp(0, 255) as u8)
            })
            .collect()
    }

    /// Full encrypted inference: first layer from the ciphertext, then
    /// the plaintext tail. Logits are bit-identical to the all-plaintext
    /// integer forward pass of the same model.
    pub fn evaluate_encrypted(&self, ct: &Ciphertext) -> Result<InferenceResult> {
        let start = Instant::now();
        let acts = self.first_layer_from_ciphertext(ct)?;
        let first_layer_us = start.elapsed().as_micros() as u64;

        let tail_start = Instant::now();
        let mut stats = ForwardStats::default();
        let logits = run_layers(&self.model.tail, &acts, &mut stats)?;
        let tail_us = tail_start.elapsed().as_micros() as u64;

        let class = argmax(&logits);
        Ok(InferenceResult {
            class,
            logits,
            timings: EvalTimings {
                first_layer_us,
                tail_us,
                total_us: start.elapsed().as_micros() as u64,
            },
        })
    }
}
