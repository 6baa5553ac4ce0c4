//! Persistent embedding cache keyed by `(tem_id, SHA-256(text))`.
//!
//! The file is append-only. Each frame is
//! `u32 payload_len | payload | 8-byte checksum`, where the payload is
//! `u16 tem_id_len | tem_id | 32-byte text digest | u32 dim | dim x f32 (LE)` and the
//! checksum is the first 8 bytes of SHA-256 over the payload. The in-memory index is
//! rebuilt on open; a truncated tail is cut off before the next append.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use zsdiag_core::embed::{EmbedError, TemDescriptor, TextEmbedder};

const CHECKSUM_LEN: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cache {0} is locked by another writer")]
    Locked(PathBuf),
    #[error("corrupt cache entry: {0}")]
    CorruptCacheEntry(String),
}

pub fn text_digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

type Key = (String, [u8; 32]);

#[derive(Debug)]
pub struct EmbeddingCache {
    path: PathBuf,
    file: File,
    index: HashMap<Key, Vec<f32>>,
    corrupt: HashMap<Key, String>,
    skipped_frames: usize,
}

fn checksum(payload: &[u8]) -> [u8; CHECKSUM_LEN] {
    let d = Sha256::digest(payload);
    d[..CHECKSUM_LEN].try_into().unwrap()
}

fn encode_payload(tem_id: &str, digest: &[u8; 32], values: &[f32]) -> Vec<u8> {
    let mut p = Vec::with_capacity(2 + tem_id.len() + 32 + 4 + 4 * values.len());
    p.extend_from_slice(&(tem_id.len() as u16).to_le_bytes());
    p.extend_from_slice(tem_id.as_bytes());
    p.extend_from_slice(digest);
    p.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        p.extend_from_slice(&v.to_le_bytes());
    }
    p
}

/// Splits a payload into key and values. A declared dimension that disagrees with
/// the bytes present is reported as corrupt together with the key when readable.
fn decode_payload(p: &[u8]) -> Result<(Key, Vec<f32>), (Option<Key>, String)> {
    let take = |at: usize, n: usize| p.get(at..at + n).ok_or((None, "payload too short".to_string()));
    let id_len = u16::from_le_bytes(take(0, 2)?.try_into().unwrap()) as usize;
    let tem_id = std::str::from_utf8(take(2, id_len)?)
        .map_err(|_| (None, "tem_id is not UTF-8".to_string()))?
        .to_string();
    let digest: [u8; 32] = take(2 + id_len, 32)?.try_into().unwrap();
    let key = (tem_id, digest);
    let at = 2 + id_len + 32;
    let dim = match p.get(at..at + 4) {
        Some(b) => u32::from_le_bytes(b.try_into().unwrap()) as usize,
        None => return Err((Some(key), "missing dimension".into())),
    };
    let body = &p[at + 4..];
    if body.len() != 4 * dim {
        return Err((
            Some(key),
            format!("declared dimension {dim} but {} value bytes", body.len()),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((key, values))
}

impl EmbeddingCache {
    /// Opens (creating if needed) the cache file as its single writer.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| CacheError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(std::fs::TryLockError::WouldBlock) => return Err(CacheError::Locked(path)),
            Err(std::fs::TryLockError::Error(e)) => return Err(io(e)),
        }
        let mut bytes = Vec::new();
        file.seek(SeekFrom::Start(0)).map_err(io)?;
        file.read_to_end(&mut bytes).map_err(io)?;

        let mut cache = Self {
            path: path.clone(),
            file,
            index: HashMap::new(),
            corrupt: HashMap::new(),
            skipped_frames: 0,
        };
        let mut at = 0usize;
        while at < bytes.len() {
            let Some(len) = bytes.get(at..at + 4) else { break };
            let len = u32::from_le_bytes(len.try_into().unwrap()) as usize;
            let end = at + 4 + len + CHECKSUM_LEN;
            if end > bytes.len() {
                break;
            }
            let payload = &bytes[at + 4..at + 4 + len];
            let stored = &bytes[at + 4 + len..end];
            if stored != checksum(payload) {
                cache.skipped_frames += 1;
                log::warn!("{}: checksum mismatch at byte {at}; entry ignored", path.display());
                if let Err((Some(key), _)) | Ok((key, _)) = decode_payload(payload) {
                    cache.index.remove(&key);
                    cache.corrupt.insert(key, "checksum mismatch".into());
                }
            } else {
                match decode_payload(payload) {
                    Ok((key, values)) => {
                        cache.corrupt.remove(&key);
                        cache.index.insert(key, values);
                    }
                    Err((key, reason)) => {
                        cache.skipped_frames += 1;
                        log::warn!("{}: {reason} at byte {at}; entry ignored", path.display());
                        if let Some(key) = key {
                            cache.index.remove(&key);
                            cache.corrupt.insert(key, reason);
                        }
                    }
                }
            }
            at = end;
        }
        if at < bytes.len() {
            log::warn!(
                "{}: truncated entry at byte {at}; discarding {} trailing bytes",
                path.display(),
                bytes.len() - at
            );
            cache.file.set_len(at as u64).map_err(io)?;
        }
        Ok(cache)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Frames skipped while rebuilding the index.
    pub fn skipped_frames(&self) -> usize {
        self.skipped_frames
    }

    /// `Ok(None)` on a miss, `Err` when the stored entry for this key is unusable.
    pub fn lookup(&self, tem_id: &str, text: &str, dim: usize) -> Result<Option<&[f32]>, CacheError> {
        let key = (tem_id.to_string(), text_digest(text));
        if let Some(reason) = self.corrupt.get(&key) {
            return Err(CacheError::CorruptCacheEntry(reason.clone()));
        }
        match self.index.get(&key) {
            None => Ok(None),
            Some(v) if v.len() != dim => Err(CacheError::CorruptCacheEntry(format!(
                "stored length {} but embedder dimension {dim}",
                v.len()
            ))),
            Some(v) => Ok(Some(v)),
        }
    }

    /// Cached vector, with unusable entries logged and treated as misses.
    pub fn get(&self, tem_id: &str, text: &str, dim: usize) -> Option<&[f32]> {
        match self.lookup(tem_id, text, dim) {
            Ok(hit) => hit,
            Err(e) => {
                log::warn!("{}: {e}; treating as miss", self.path.display());
                None
            }
        }
    }

    pub fn put(&mut self, tem_id: &str, text: &str, values: &[f32]) -> Result<(), CacheError> {
        let digest = text_digest(text);
        let payload = encode_payload(tem_id, &digest, values);
        let mut frame = Vec::with_capacity(payload.len() + 4 + CHECKSUM_LEN);
        frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        frame.extend_from_slice(&payload);
        frame.extend_from_slice(&checksum(&payload));
        self.file.write_all(&frame).map_err(|source| CacheError::Io {
            path: self.path.clone(),
            source,
        })?;
        let key = (tem_id.to_string(), digest);
        self.corrupt.remove(&key);
        self.index.insert(key, values.to_vec());
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), CacheError> {
        self.file.sync_data().map_err(|source| CacheError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

/// Embedder that consults the cache first and stores every miss. Vectors are
/// served in single precision on both paths, so cold and warm runs agree bit for bit.
pub struct CachedEmbedder<T> {
    inner: T,
    cache: Option<Mutex<EmbeddingCache>>,
    hits: Mutex<(usize, usize)>,
}

impl<T: TextEmbedder> CachedEmbedder<T> {
    pub fn new(inner: T, cache: Option<EmbeddingCache>) -> Self {
        Self {
            inner,
            cache: cache.map(Mutex::new),
            hits: Mutex::new((0, 0)),
        }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    /// `(hits, misses)` so far.
    pub fn stats(&self) -> (usize, usize) {
        *self.hits.lock().unwrap()
    }

    pub fn into_cache(self) -> Option<EmbeddingCache> {
        self.cache.map(|m| m.into_inner().unwrap())
    }

    /// Texts not yet in the cache, in first-appearance order without repeats.
    pub fn misses<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
        let desc = self.inner.descriptor();
        let mut seen = std::collections::HashSet::new();
        let guard = self.cache.as_ref().map(|c| c.lock().unwrap());
        texts
            .into_iter()
            .filter(|t| seen.insert(*t))
            .filter(|t| match &guard {
                Some(c) => c.get(&desc.tem_id, t, desc.dim).is_none(),
                None => true,
            })
            .collect()
    }

    /// Stores precomputed vectors (e.g. from a batched remote call).
    pub fn store(&self, text: &str, values: &[f64]) -> Result<Vec<f64>, EmbedError> {
        let rounded: Vec<f32> = values.iter().map(|&v| v as f32).collect();
        if let Some(cache) = &self.cache {
            cache
                .lock()
                .unwrap()
                .put(&self.inner.descriptor().tem_id, text, &rounded)
                .map_err(|e| EmbedError::BackendUnavailable(e.to_string()))?;
        }
        Ok(rounded.into_iter().map(f64::from).collect())
    }
}

impl<T: TextEmbedder> TextEmbedder for CachedEmbedder<T> {
    fn descriptor(&self) -> &TemDescriptor {
        self.inner.descriptor()
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let desc = self.inner.descriptor();
        if let Some(cache) = &self.cache {
            if let Some(v) = cache.lock().unwrap().get(&desc.tem_id, text, desc.dim) {
                self.hits.lock().unwrap().0 += 1;
                return Ok(v.iter().map(|&x| f64::from(x)).collect());
            }
        }
        self.hits.lock().unwrap().1 += 1;
        let values = self.inner.embed_raw(text)?;
        self.store(text, &values)
    }
}
