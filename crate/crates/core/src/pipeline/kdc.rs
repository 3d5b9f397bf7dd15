//! Key ceremony: validate the first-layer weight matrix, generate master
//! keys, derive one functional key per column, and split the results into
//! the encryptor-side and xApp-side bundles. The master secret never
//! leaves this function.

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::envelope;
use crate::error::Result;
use crate::group::GroupParams;
use crate::ipfe;
use crate::pipeline::msg::{EncryptorBundle, IssuanceLog, XappBundle};
use crate::quant::QuantizedModel;
use crate::secure::{EncryptedInferenceContext, XappModel};
use crate::validator;

pub fn kdc_issue(
    group: &GroupParams,
    model: &QuantizedModel,
    rng: &mut impl RngCore,
) -> Result<(EncryptorBundle, XappBundle, IssuanceLog)> {
    model.validate()?;
    let weights = model.first_layer_weights();
    let report = validator::validate_for_issuance(weights);
    if !report.passed {
        return Err(validator::refusal_error(&report));
    }

    let (mpk, msk) = ipfe::setup(group, model.input_dim(), rng)?;
    let fks = ipfe::key_der(&msk, weights)?;
    drop(msk);

    let mpk_env = envelope::mpk_to_envelope(&mpk);
    let fk_envs: Vec<envelope::Envelope> = fks
        .iter()
        .map(|fk| envelope::fk_to_envelope(fk, group))
        .collect();

    let xapp_model = XappModel::from_quantized(model)?;
    let model_fingerprint = {
        let digest = Sha256::digest(serde_json::to_vec(&xapp_model)?);
        digest
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>()
    };

    let log = IssuanceLog {
        report,
        mpk_fingerprint: mpk_env.fingerprint()?,
        fk_fingerprints: fk_envs
            .iter()
            .map(|e| e.fingerprint())
            .collect::<Result<Vec<_>>>()?,
        model_fingerprint: model_fingerprint.clone(),
    };

    let encryptor = EncryptorBundle {
        group: group.name().to_string(),
        mpk: mpk_env,
        input_qp: model.input_qp(),
        window_len: model.input_dim(),
    };
    let xapp = XappBundle {
        group: group.name().to_string(),
        fk_set: fk_envs,
        model: xapp_model,
        model_fingerprint,
    };
    Ok((encryptor, xapp, log))
}

/// Builds the xApp's runtime context from its issuance bundle.
pub fn build_context(bundle: &XappBundle) -> Result<EncryptedInferenceContext> {
    let group = GroupParams::by_name(&bundle.group)?;
    let fks = bundle
        .fk_set
        .iter()
        .map(envelope::fk_from_envelope)
        .collect::<Result<Vec<_>>>()?;
    EncryptedInferenceContext::new(&group, bundle.model.clone(), fks)
}
