//! Run configuration: a flat key-value file (TOML syntax) plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};
use zsdiag_core::cdm::CdmVariant;
use zsdiag_core::metrics::{DoaOptions, DoaPairs};
use zsdiag_core::model::Ablation;
use zsdiag_core::synth::SynthConfig;
use zsdiag_core::train::TrainConfig;
use zsdiag_core::zeroshot::DEFAULT_EDIT_ALPHA;

use crate::remote::RemoteConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error("config key `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemChoice {
    LocalHash,
    Remote,
}

impl TemChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "local-hash" => Some(TemChoice::LocalHash),
            "remote" => Some(TemChoice::Remote),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemChoice::LocalHash => "local-hash",
            TemChoice::Remote => "remote",
        }
    }
}

/// Which records DOA is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoaRecords {
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub tem: TemChoice,
    pub tem_dim: usize,
    pub tem_seed: u64,
    pub remote: RemoteConfig,
    pub cache: Option<PathBuf>,
    pub min_responses: Option<usize>,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub alpha: f64,
    pub doa_weighted: bool,
    pub doa_pairs: DoaPairs,
    pub doa_records: DoaRecords,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tem: TemChoice::LocalHash,
            tem_dim: 256,
            tem_seed: 0,
            remote: RemoteConfig::default(),
            cache: None,
            min_responses: None,
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            alpha: DEFAULT_EDIT_ALPHA,
            doa_weighted: false,
            doa_pairs: DoaPairs::Comparable,
            doa_records: DoaRecords::Test,
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        reason: reason.into(),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64, ConfigError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::String(s) => s.parse().map_err(|_| bad(key, "expected a non-negative integer")),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize, ConfigError> {
    Ok(as_u64(key, v)? as usize)
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => s.parse().map_err(|_| bad(key, "expected a number")),
        _ => Err(bad(key, "expected a number")),
    }
}

fn as_bool(key: &str, v: &toml::Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| bad(key, "expected true or false"))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

/// Arrays or comma-separated strings.
fn as_list<T>(key: &str, v: &toml::Value, item: impl Fn(&str, &toml::Value) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    match v {
        toml::Value::Array(a) => a.iter().map(|x| item(key, x)).collect(),
        toml::Value::String(s) => s
            .split(',')
            .map(|p| item(key, &toml::Value::String(p.trim().to_string())))
            .collect(),
        _ => Err(bad(key, "expected a list")),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        self.apply_str(&text).map_err(|e| match e {
            ConfigError::File { reason, .. } => ConfigError::File {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }

    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::File {
            path: PathBuf::new(),
            reason: e.to_string(),
        })?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        for (k, v) in &flat {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Applies one setting; keys mirror the field names.
    pub fn set(&mut self, key: &str, v: &toml::Value) -> Result<(), ConfigError> {
        let t = &mut self.train;
        let s = &mut self.synth;
        match key {
            "seed" => self.seed = as_u64(key, v)?,
            "tem" => {
                self.tem = TemChoice::parse(as_str(key, v)?)
                    .ok_or_else(|| bad(key, "expected local-hash or remote"))?
            }
            "tem_dim" => self.tem_dim = as_usize(key, v)?,
            "tem_seed" => self.tem_seed = as_u64(key, v)?,
            "cache" => self.cache = Some(PathBuf::from(as_str(key, v)?)),
            "embed.endpoint" => self.remote.endpoint = as_str(key, v)?.into(),
            "embed.model" => self.remote.model = as_str(key, v)?.into(),
            "embed.batch_size" => self.remote.batch_size = as_usize(key, v)?,
            "embed.max_inflight" => self.remote.max_inflight = as_usize(key, v)?,
            "embed.max_retries" => self.remote.max_retries = as_u64(key, v)? as u32,
            "embed.initial_backoff_ms" => self.remote.initial_backoff = Duration::from_millis(as_u64(key, v)?),
            "embed.timeout_secs" => self.remote.timeout = Duration::from_secs(as_u64(key, v)?),
            "embed.token_env" => self.remote.token_env = as_str(key, v)?.into(),
            "min_responses" => {
                let n = as_usize(key, v)?;
                if n == 0 {
                    return Err(bad(key, "must be at least 1"));
                }
                self.min_responses = Some(n)
            }
            "dim" => t.dim = as_usize(key, v)?,
            "hidden" => t.hidden = as_list(key, v, as_usize)?,
            "head_width" => t.head_width = as_usize(key, v)?,
            "cdm" => {
                t.variant = CdmVariant::parse(as_str(key, v)?)
                    .ok_or_else(|| bad(key, "expected mirt, ncdm or kancd"))?
            }
            "batch_size" => t.batch_size = as_usize(key, v)?,
            "learning_rate" => t.learning_rate = as_f64(key, v)?,
            "max_epochs" => t.max_epochs = as_usize(key, v)?,
            "patience" => t.patience = as_usize(key, v)?,
            "domain_weights" => t.domain_weights = Some(as_list(key, v, as_f64)?),
            "ablation" => {
                t.ablation = Ablation::parse(as_str(key, v)?)
                    .ok_or_else(|| bad(key, "expected none, no_tcp or no_lcm"))?
            }
            "pooled_validation" => t.pooled_validation = as_bool(key, v)?,
            "synth.n_domains" => s.n_domains = as_usize(key, v)?,
            "synth.n_students" => s.n_students = as_usize(key, v)?,
            "synth.n_exercises" => s.n_exercises = as_usize(key, v)?,
            "synth.n_concepts" => s.n_concepts = as_usize(key, v)?,
            "synth.shared_vocab_fraction" => s.shared_vocab_fraction = as_f64(key, v)?,
            "synth.latent_dim" => s.latent_dim = as_usize(key, v)?,
            "synth.responses_per_student" => s.responses_per_student = as_usize(key, v)?,
            "synth.guess" => s.guess = as_f64(key, v)?,
            "synth.slip" => s.slip = as_f64(key, v)?,
            "synth.difficulty_mean" => s.difficulty_mean = as_f64(key, v)?,
            "synth.difficulty_std" => s.difficulty_std = as_f64(key, v)?,
            "synth.discrimination_min" => s.discrimination.0 = as_f64(key, v)?,
            "synth.discrimination_max" => s.discrimination.1 = as_f64(key, v)?,
            "alpha" => self.alpha = as_f64(key, v)?,
            "doa_weighted" => self.doa_weighted = as_bool(key, v)?,
            "doa_pairs" => {
                self.doa_pairs = match as_str(key, v)? {
                    "comparable" => DoaPairs::Comparable,
                    "all" => DoaPairs::All,
                    _ => return Err(bad(key, "expected comparable or all")),
                }
            }
            "doa_records" => {
                self.doa_records = match as_str(key, v)? {
                    "test" => DoaRecords::Test,
                    "all" => DoaRecords::All,
                    _ => return Err(bad(key, "expected test or all")),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tem_dim < 8 {
            return Err(bad("tem_dim", "must be at least 8"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(bad("alpha", "must lie in [0, 1]"));
        }
        self.training()
            .validate()
            .map_err(|e| bad("train", e.to_string()))?;
        Ok(())
    }

    pub fn min_responses(&self) -> Result<usize, ConfigError> {
        self.min_responses.ok_or(ConfigError::Missing("min_responses"))
    }

    /// Training settings with the run seed applied.
    pub fn training(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// Generator settings with the run seed applied.
    pub fn synthetic(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn doa_options(&self) -> DoaOptions {
        DoaOptions {
            pairs: self.doa_pairs,
            weighted: self.doa_weighted,
        }
    }

    /// Canonical `key -> value` rendering of every setting.
    pub fn pairs(&self) -> BTreeMap<String, String> {
        let t = self.training();
        let s = self.synthetic();
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("seed", self.seed.to_string());
        put("tem", self.tem.name().into());
        put("tem_dim", self.tem_dim.to_string());
        put("tem_seed", self.tem_seed.to_string());
        put("cache", self.cache.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("embed.endpoint", self.remote.endpoint.clone());
        put("embed.model", self.remote.model.clone());
        put("embed.batch_size", self.remote.batch_size.to_string());
        put("embed.max_inflight", self.remote.max_inflight.to_string());
        put("embed.max_retries", self.remote.max_retries.to_string());
        put("embed.token_env", self.remote.token_env.clone());
        put("min_responses", self.min_responses.map(|n| n.to_string()).unwrap_or_default());
        put("dim", t.dim.to_string());
        put("hidden", list(&t.hidden));
        put("head_width", t.head_width.to_string());
        put("cdm", t.variant.name().into());
        put("batch_size", t.batch_size.to_string());
        put("learning_rate", t.learning_rate.to_string());
        put("max_epochs", t.max_epochs.to_string());
        put("patience", t.patience.to_string());
        put(
            "domain_weights",
            t.domain_weights
                .as_ref()
                .map(|w| w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .unwrap_or_default(),
        );
        put("ablation", t.ablation.name().into());
        put("pooled_validation", t.pooled_validation.to_string());
        put("synth.n_domains", s.n_domains.to_string());
        put("synth.n_students", s.n_students.to_string());
        put("synth.n_exercises", s.n_exercises.to_string());
        put("synth.n_concepts", s.n_concepts.to_string());
        put("synth.shared_vocab_fraction", s.shared_vocab_fraction.to_string());
        put("synth.latent_dim", s.latent_dim.to_string());
        put("synth.responses_per_student", s.responses_per_student.to_string());
        put("synth.guess", s.guess.to_string());
        put("synth.slip", s.slip.to_string());
        put("synth.difficulty_mean", s.difficulty_mean.to_string());
        put("synth.difficulty_std", s.difficulty_std.to_string());
        put("synth.discrimination_min", s.discrimination.0.to_string());
        put("synth.discrimination_max", s.discrimination.1.to_string());
        put("alpha", self.alpha.to_string());
        put("doa_weighted", self.doa_weighted.to_string());
        put(
            "doa_pairs",
            match self.doa_pairs {
                DoaPairs::Comparable => "comparable",
                DoaPairs::All => "all",
            }
            .into(),
        );
        put(
            "doa_records",
            match self.doa_records {
                DoaRecords::Test => "test",
                DoaRecords::All => "all",
            }
            .into(),
        );
        m
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.pairs() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        zsdiag_core::model::to_hex(&h.finalize())
    }
}
