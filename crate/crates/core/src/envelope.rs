//! JSON file envelopes for key material and ciphertexts.
//!
//! Every big integer is serialized as base64 over `len_be_u32 || magnitude`,
//! where `magnitude` is the minimal big-endian byte string (empty for zero)
//! and `len_be_u32` is its length as a 4-byte big-endian prefix. The
//! envelope itself is `{"version":1,"group":...,"kind":...,"l":...,"data":[...]}`.
//!
//! Kinds: `mpk` (data = h_1..h_l), `msk` (data = s_1..s_l),
//! `fk` (data = sk, w_1..w_l with signed w stored mod q and decoded to the
//! centered representative), `ct` (data = c0, c_1..c_l).

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::ipfe::{Ciphertext, FunctionalKey, MasterPublicKey, MasterSecretKey};

pub const ENVELOPE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub version: u32,
    pub group: String,
    pub kind: String,
    pub l: usize,
    pub data: Vec<String>,
}

/// base64(len_be_u32 || minimal big-endian magnitude).
pub fn encode_biguint(v: &BigUint) -> String {
    let magnitude = if v.is_zero() {
        Vec::new()
    } else {
        v.to_bytes_be()
    };
    let mut bytes = Vec::with_capacity(4 + magnitude.len());
    bytes.extend_from_slice(&(magnitude.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&magnitude);
    BASE64.encode(bytes)
}

pub fn decode_biguint(s: &str) -> Result<BigUint> {
    let bytes = BASE64
        .decode(s)
        .map_err(|e| Error::Envelope(format!("bad base64: {e}")))?;
    if bytes.len() < 4 {
        return Err(Error::Envelope(
            "integer field shorter than its length prefix".into(),
        ));
    }
    let declared = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let magnitude = &bytes[4..];
    if magnitude.len() != declared {
        return Err(Error::Envelope(format!(
            "length prefix {declared} does not match payload of {} bytes",
            magnitude.len()
        )));
    }
    if magnitude.first() == Some(&0) {
        return Err(Error::Envelope("magnitude has a leading zero byte".into()));
    }
    Ok(BigUint::from_bytes_be(magnitude))
}

impl Envelope {
    fn new(group: &GroupParams, kind: &str, l: usize, values: Vec<BigUint>) -> Self {
        Self {
            version: ENVELOPE_VERSION,
            group: group.name().to_string(),
            kind: kind.to_string(),
            l,
            data: values.iter().map(encode_biguint).collect(),
        }
    }

    fn check(&self, kind: &str, data_len: usize) -> Result<()> {
        if self.version != ENVELOPE_VERSION {
            return Err(Error::Envelope(format!(
                "unsupported version {}",
                self.version
            )));
        }
        if self.kind != kind {
            return Err(Error::Envelope(format!(
                "expected kind {kind:?}, got {:?}",
                self.kind
            )));
        }
        if self.data.len() != data_len {
            return Err(Error::Envelope(format!(
                "kind {kind:?} with l={} needs {data_len} data items, got {}",
                self.l,
                self.data.len()
            )));
        }
        Ok(())
    }

    pub fn group_params(&self) -> Result<GroupParams> {
        GroupParams::by_name(&self.group)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Hex SHA-256 of the canonical JSON encoding, used as the key
    /// fingerprint in issuance logs.
    pub fn fingerprint(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&bytes);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    fn decoded(&self) -> Result<Vec<BigUint>> {
        self.data.iter().map(|s| decode_biguint(s)).collect()
    }
}

pub fn mpk_to_envelope(mpk: &MasterPublicKey) -> Envelope {
    Envelope::new(mpk.group(), "mpk", mpk.len(), mpk.elements().to_vec())
}

pub fn mpk_from_envelope(env: &Envelope) -> Result<MasterPublicKey> {
    env.check("mpk", env.l)?;
    MasterPublicKey::from_elements(env.group_params()?, env.decoded()?)
}

pub fn msk_to_envelope(msk: &MasterSecretKey) -> Envelope {
    Envelope::new(msk.group(), "msk", msk.len(), msk.components().to_vec())
}

pub fn msk_from_envelope(env: &Envelope) -> Result<MasterSecretKey> {
    env.check("msk", env.l)?;
    MasterSecretKey::from_components(env.group_params()?, env.decoded()?)
}

pub fn fk_to_envelope(fk: &FunctionalKey, group: &GroupParams) -> Envelope {
    let mut values = Vec::with_capacity(1 + fk.len());
    values.push(fk.sk().clone());
    values.extend(fk.weights().iter().map(|&w| group.mod_q_signed(w)));
    Envelope::new(group, "fk", fk.len(), values)
}

pub fn fk_from_envelope(env: &Envelope) -> Result<FunctionalKey> {
    env.check("fk", env.l + 1)?;
    let group = env.group_params()?;
    let values = env.decoded()?;
    let sk = values[0].clone();
    let half_q = group.q() >> 1;
    let w = values[1..]
        .iter()
        .map(|v| {
            if v >= group.q() {
                return Err(Error::Envelope("fk weight residue outside [0, q-1]".into()));
            }
            let centered = if v > &half_q {
                let m = group.q() - v;
                -i64::try_from(&m).map_err(|_| Error::Envelope("fk weight too large".into()))?
            } else {
                i64::try_from(v).map_err(|_| Error::Envelope("fk weight too large".into()))?
            };
            Ok(centered)
        })
        .collect::<Result<Vec<i64>>>()?;
    FunctionalKey::from_parts(&group, w, sk)
}

pub fn ct_to_envelope(ct: &Ciphertext, group: &GroupParams) -> Envelope {
    let mut values = Vec::with_capacity(1 + ct.len());
    values.push(ct.c0().clone());
    values.extend(ct.components().iter().cloned());
    Envelope::new(group, "ct", ct.len(), values)
}

pub fn ct_from_envelope(env: &Envelope) -> Result<Ciphertext> {
    env.check("ct", env.l + 1)?;
    let group = env.group_params()?;
    let mut values = env.decoded()?;
    let c = values.split_off(1);
    let c0 = values.pop().expect("one element left");
    Ciphertext::from_parts(&group, c0, c)
}
