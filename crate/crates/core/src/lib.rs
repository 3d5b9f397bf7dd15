//! Privacy-preserving RIC core: a DDH inner-product functional
//! encryption scheme, an integer-quantized MLP whose first layer runs on
//! encrypted KPM vectors, issuance-time weight-matrix checks, synthetic
//! KPM tooling with a small trainer, and a multi-process pipeline
//! simulator with per-stage timing.

pub mod bsgs;
pub mod envelope;
pub mod error;
pub mod group;
pub mod ipfe;
pub mod lab;
pub mod matrix;
pub mod pipeline;
pub mod quant;
pub mod secure;
pub mod validator;

pub use bsgs::{bsgs_dlog, BsgsTable, DlogBound};
pub use error::{Error, Result};
pub use group::GroupParams;
pub use ipfe::{
    decrypt_inner_product, encrypt, key_der, setup, Ciphertext, FunctionalKey, MasterPublicKey,
    MasterSecretKey,
};
pub use matrix::IntMatrix;
pub use quant::{
    calibrate, fuse_linear_relu, quantize_model, quantize_value, quantized_forward, Activation,
    CalibrationSet, FloatModel, ModelFile, QuantParams, QuantizedModel,
};
pub use validator::{
    check_key_budget, check_no_standard_basis, validate_for_issuance, BasisCheckReport,
    IssuanceReport, KeyBudgetReport,
};
