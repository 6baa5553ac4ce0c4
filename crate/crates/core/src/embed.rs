//! Text-embedding modules (TEMs) and mean pooling of interaction embeddings.
//!
//! [`LocalHashEmbedder`] is a deterministic feature-hashing embedder that runs offline.
//! Remote backends and the persistent cache live in the std companion crate and plug in
//! through [`TextEmbedder`].

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::math;

/// Texts longer than this many characters are truncated before embedding.
pub const MAX_TEXT_CHARS: usize = 8192;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no interactions to pool")]
    NoInteractions,
    #[error("vector of length {got} does not match embedder dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid embedder configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemKind {
    Remote,
    LocalHash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemDescriptor {
    /// Model name plus version; part of every cache key and checkpoint.
    pub tem_id: String,
    pub dim: usize,
    pub kind: TemKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageVector {
    pub values: Vec<f64>,
    pub tem_id: Arc<str>,
}

impl LanguageVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub trait TextEmbedder {
    fn descriptor(&self) -> &TemDescriptor;

    /// Embeds one already-prepared text. Callers normally go through [`embed_text`].
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

impl<T: TextEmbedder + ?Sized> TextEmbedder for &T {
    fn descriptor(&self) -> &TemDescriptor {
        (**self).descriptor()
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        (**self).embed_raw(text)
    }
}

/// Rejects empty text and truncates overlong text at [`MAX_TEXT_CHARS`] characters.
pub fn prepare_text(text: &str) -> Result<&str, EmbedError> {
    if text.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    match text.char_indices().nth(MAX_TEXT_CHARS) {
        Some((cut, _)) => {
            log::warn!("profile text truncated at {MAX_TEXT_CHARS} characters");
            Ok(&text[..cut])
        }
        None => Ok(text),
    }
}

/// Embeds `text`, checking length and finiteness of the backend's answer.
pub fn embed_text<T: TextEmbedder + ?Sized>(tem: &T, text: &str) -> Result<LanguageVector, EmbedError> {
    let text = prepare_text(text)?;
    let desc = tem.descriptor();
    let values = tem.embed_raw(text)?;
    if values.len() != desc.dim {
        return Err(EmbedError::DimMismatch {
            expected: desc.dim,
            got: values.len(),
        });
    }
    if !math::all_finite(&values) {
        return Err(EmbedError::BackendUnavailable(
            "backend returned non-finite values".into(),
        ));
    }
    Ok(LanguageVector {
        values,
        tem_id: Arc::from(desc.tem_id.as_str()),
    })
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Signed feature hashing of the token bag, L2-normalized.
///
/// Each token is hashed with SHA-256 under the seed; the first eight bytes pick the
/// bucket and the low bit of the ninth byte picks the sign. Returns `None` when the
/// text has no tokens or every token cancels out.
pub fn local_hash_embed(text: &str, dim: usize, seed: u64) -> Option<Vec<f64>> {
    let mut v = alloc::vec![0.0f64; dim];
    let mut any = false;
    for token in tokenize(text) {
        let digest = Sha256::new()
            .chain_update(seed.to_le_bytes())
            .chain_update(token.as_bytes())
            .finalize();
        let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) % dim as u64;
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        v[bucket as usize] += sign;
        any = true;
    }
    let norm = math::l2_norm(&v);
    if !any || norm == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Offline embedder backed by [`local_hash_embed`].
#[derive(Debug, Clone)]
pub struct LocalHashEmbedder {
    descriptor: TemDescriptor,
    seed: u64,
}

impl LocalHashEmbedder {
    pub const MIN_DIM: usize = 8;

    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < Self::MIN_DIM {
            return Err(EmbedError::InvalidConfig(format!(
                "local-hash dimension must be at least {}, got {dim}",
                Self::MIN_DIM
            )));
        }
        Ok(Self {
            descriptor: TemDescriptor {
                tem_id: format!("local-hash-v1:d{dim}:s{seed}"),
                dim,
                kind: TemKind::LocalHash,
            },
            seed,
        })
    }
}

impl TextEmbedder for LocalHashEmbedder {
    fn descriptor(&self) -> &TemDescriptor {
        &self.descriptor
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        // A token-less text still gets a deterministic unit vector.
        Ok(local_hash_embed(text, self.descriptor.dim, self.seed).unwrap_or_else(|| {
            let mut v = alloc::vec![0.0; self.descriptor.dim];
            v[0] = 1.0;
            v
        }))
    }
}

/// Arithmetic mean of equally long vectors.
pub fn mean_pool<'a, I>(vectors: I) -> Result<Vec<f64>, EmbedError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(EmbedError::NoInteractions)?;
    let mut sum = first.to_vec();
    let mut n = 1usize;
    for v in iter {
        if v.len() != sum.len() {
            return Err(EmbedError::DimMismatch {
                expected: sum.len(),
                got: v.len(),
            });
        }
        math::axpy(1.0, v, &mut sum);
        n += 1;
    }
    let inv = n as f64;
    sum.iter_mut().for_each(|x| *x /= inv);
    Ok(sum)
}

/// Student language vector: mean of the embeddings of the student's interaction texts.
pub fn student_language_vector<T: TextEmbedder + ?Sized, S: AsRef<str>>(
    interaction_texts: &[S],
    tem: &T,
) -> Result<LanguageVector, EmbedError> {
    let embedded = interaction_texts
        .iter()
        .map(|t| embed_text(tem, t.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let values = mean_pool(embedded.iter().map(|v| v.values.as_slice()))?;
    Ok(LanguageVector {
        values,
        tem_id: Arc::from(tem.descriptor().tem_id.as_str()),
    })
}
