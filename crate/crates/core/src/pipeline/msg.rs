//! Frame payloads and issuance bundles.

use serde::{Deserialize, Serialize};

use crate::envelope::Envelope;
use crate::quant::QuantParams;
use crate::secure::XappModel;
use crate::validator::IssuanceReport;

/// KEY_ISSUE payload for the RAN-side encryptor: the master public key
/// plus the input quantization the model was calibrated with. No
/// functional keys ever travel in this direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncryptorBundle {
    pub group: String,
    pub mpk: Envelope,
    pub input_qp: QuantParams,
    pub window_len: usize,
}

/// Issuance bundle for the xApp: functional keys and the stripped model
/// (layer >= 2 weights only). The master secret never appears here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XappBundle {
    pub group: String,
    pub fk_set: Vec<Envelope>,
    pub model: XappModel,
    pub model_fingerprint: String,
}

/// ENC_KPM payload: one encrypted window plus the encryption time the
/// RAN side measured for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncKpmPayload {
    pub window_id: u64,
    pub encryption_us: u64,
    pub ciphertext: Envelope,
}

/// CONTROL payload: the classification decision returned to the RAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlDecision {
    pub window_id: u64,
    pub jammer_present: bool,
    /// Wall-clock microseconds since the epoch, for logs only.
    pub issued_at_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckPayload {
    pub window_id: u64,
}

/// What the KDC logs when it issues keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssuanceLog {
    pub report: IssuanceReport,
    pub mpk_fingerprint: String,
    pub fk_fingerprints: Vec<String>,
    pub model_fingerprint: String,
}

pub fn wall_clock_us() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(0)
}
