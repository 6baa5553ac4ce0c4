//! Checkpoint format.
//!
//! ```text
//! "ZSDIAGCK" | u32 version | u32 header_len | header (JSON) | sections | SHA-256
//! ```
//! The header echoes the training configuration and embedder id and lists the
//! parameter sections by name and length. Section values are little-endian `f32`.
//! The trailing digest covers every preceding byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zsdiag_core::cdm::CdmVariant;
use zsdiag_core::model::{Ablation, DiagnosisModel};
use zsdiag_core::train::{TrainConfig, TrainedModel};

const MAGIC: &[u8; 8] = b"ZSDIAGCK";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint is truncated or corrupted")]
    Checksum,
    #[error("bad checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint section mismatch: {0}")]
    Shape(String),
    #[error("refusing to save a model that is not frozen")]
    NotFrozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Section {
    name: String,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    tem_id: String,
    language_dim: usize,
    dim: usize,
    hidden: Vec<usize>,
    head_width: usize,
    cdm: String,
    ablation: String,
    batch_size: usize,
    learning_rate: f64,
    max_epochs: usize,
    patience: usize,
    seed: u64,
    domain_weights: Option<Vec<f64>>,
    pooled_validation: bool,
    source_domains: Vec<String>,
    best_val_auc: Vec<(String, f64)>,
    best_epoch: usize,
    epochs_run: usize,
    frozen: bool,
    sections: Vec<Section>,
}

pub fn to_bytes(model: &TrainedModel) -> Result<Vec<u8>, CheckpointError> {
    if !model.frozen {
        return Err(CheckpointError::NotFrozen);
    }
    let c = &model.config;
    let params = model.model.named_params();
    let header = Header {
        tem_id: model.tem_id.clone(),
        language_dim: model.model.config.language_dim,
        dim: c.dim,
        hidden: c.hidden.clone(),
        head_width: c.head_width,
        cdm: c.variant.name().into(),
        ablation: c.ablation.name().into(),
        batch_size: c.batch_size,
        learning_rate: c.learning_rate,
        max_epochs: c.max_epochs,
        patience: c.patience,
        seed: c.seed,
        domain_weights: c.domain_weights.clone(),
        pooled_validation: c.pooled_validation,
        source_domains: model.source_domains.clone(),
        best_val_auc: model.best_val_auc.clone(),
        best_epoch: model.best_epoch,
        epochs_run: model.epochs_run,
        frozen: model.frozen,
        sections: params
            .iter()
            .map(|(name, v)| Section {
                name: name.clone(),
                len: v.len(),
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, values) in &params {
        for &v in *values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel, CheckpointError> {
    if bytes.len() < MAGIC.len() + 8 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(CheckpointError::Checksum);
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let header_len = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
    let header_end = 16 + header_len;
    let header: Header = serde_json::from_slice(body.get(16..header_end).ok_or(CheckpointError::Checksum)?)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;

    let variant = CdmVariant::parse(&header.cdm)
        .ok_or_else(|| CheckpointError::Header(format!("unknown interaction function `{}`", header.cdm)))?;
    let ablation = Ablation::parse(&header.ablation)
        .ok_or_else(|| CheckpointError::Header(format!("unknown ablation `{}`", header.ablation)))?;
    let config = TrainConfig {
        dim: header.dim,
        hidden: header.hidden.clone(),
        head_width: header.head_width,
        variant,
        batch_size: header.batch_size,
        learning_rate: header.learning_rate,
        max_epochs: header.max_epochs,
        patience: header.patience,
        seed: header.seed,
        domain_weights: header.domain_weights.clone(),
        ablation,
        pooled_validation: header.pooled_validation,
    };
    let mut model = DiagnosisModel::init(config.model_config(header.language_dim), header.seed);
    let expected: Vec<(String, usize)> = model
        .named_params()
        .into_iter()
        .map(|(n, v)| (n, v.len()))
        .collect();
    let stored: Vec<(String, usize)> = header.sections.iter().map(|s| (s.name.clone(), s.len)).collect();
    if expected != stored {
        return Err(CheckpointError::Shape(format!(
            "header lists {} sections, configuration implies {}",
            stored.len(),
            expected.len()
        )));
    }
    let total: usize = stored.iter().map(|(_, n)| n).sum();
    let values = &body[header_end..];
    if values.len() != 4 * total {
        return Err(CheckpointError::Shape(format!(
            "{} value bytes for {total} parameters",
            values.len()
        )));
    }
    let mut floats = values
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())));
    for group in model.params_mut() {
        for v in group.iter_mut() {
            *v = floats.next().unwrap();
        }
    }
    Ok(TrainedModel {
        model,
        tem_id: header.tem_id,
        config,
        source_domains: header.source_domains,
        best_val_auc: header.best_val_auc,
        best_epoch: header.best_epoch,
        epochs_run: header.epochs_run,
        frozen: header.frozen,
    })
}

pub fn save(path: &Path, model: &TrainedModel) -> Result<(), CheckpointError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TrainedModel, CheckpointError> {
    from_bytes(&std::fs::read(path)?)
}
