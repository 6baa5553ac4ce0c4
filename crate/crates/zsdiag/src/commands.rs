//! The pipeline behind each subcommand: synth, embed, train, diagnose, evaluate, edit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use zsdiag_core::corpus::{preprocess, split_per_student, CorpusError, Domain, Observation, SplitDomain, DEFAULT_SPLIT};
use zsdiag_core::embed::{EmbedError, LocalHashEmbedder, TemDescriptor, TextEmbedder};
use zsdiag_core::encode::{encode_profiles, EncodeError, EncodedDomain};
use zsdiag_core::metrics::{self, EvalReport, MetricError};
use zsdiag_core::model::derive_seed;
use zsdiag_core::profiles::{DomainProfiles, ProfileError};
use zsdiag_core::synth::{self, SynthError};
use zsdiag_core::train::{train_multi_domain, TrainError, TrainedModel};
use zsdiag_core::words::WORD_POOL_VERSION;
use zsdiag_core::zeroshot::{diagnose_encoded, edit_interaction_text, edit_profile, EditTarget, ZeroShotError};

use crate::cache::{CacheError, CachedEmbedder, EmbeddingCache};
use crate::checkpoint::{self, CheckpointError};
use crate::config::{ConfigError, DoaRecords, RunConfig, TemChoice};
use crate::io::{self, DataError, DomainFiles, PredictionRow};
use crate::manifest::{RunManifest, Timings};
use crate::remote::RemoteEmbedder;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MASTERY_FILE: &str = "mastery.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Split stream of the run seed.
const SPLIT_STREAM: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("embedding backend error: {0}")]
    Backend(String),
    #[error("embedder mismatch: {0}")]
    TemMismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Backend(_) => 5,
            CliError::TemMismatch(_) => 6,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::BackendUnavailable(_) => CliError::Backend(e.to_string()),
            EmbedError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        match e {
            EncodeError::Embed(e) => e.into(),
            EncodeError::Profile(e) => e.into(),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            TrainError::InvalidConfig(_) | TrainError::NoDomains => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ZeroShotError> for CliError {
    fn from(e: ZeroShotError) -> Self {
        match e {
            ZeroShotError::TemMismatch { .. } => CliError::TemMismatch(e.to_string()),
            ZeroShotError::EmptyEdit | ZeroShotError::InvalidAlpha(_) => CliError::Config(e.to_string()),
            ZeroShotError::Embed(e) => e.into(),
            ZeroShotError::Encode(e) => e.into(),
            ZeroShotError::Train(e) => e.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Data(format!("checkpoint: {e}"))
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::Io(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Either built-in embedder.
pub enum Embedder {
    Local(LocalHashEmbedder),
    Remote(Box<RemoteEmbedder>),
}

impl TextEmbedder for Embedder {
    fn descriptor(&self) -> &TemDescriptor {
        match self {
            Embedder::Local(e) => e.descriptor(),
            Embedder::Remote(e) => e.descriptor(),
        }
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        match self {
            Embedder::Local(e) => e.embed_raw(text),
            Embedder::Remote(e) => e.embed_raw(text),
        }
    }
}

pub fn build_embedder(cfg: &RunConfig) -> Result<CachedEmbedder<Embedder>, CliError> {
    let inner = match cfg.tem {
        TemChoice::LocalHash => Embedder::Local(LocalHashEmbedder::new(cfg.tem_dim, cfg.tem_seed)?),
        TemChoice::Remote => {
            let mut remote = cfg.remote.clone();
            remote.dim = cfg.tem_dim;
            Embedder::Remote(Box::new(RemoteEmbedder::new(remote)?))
        }
    };
    let cache = cfg.cache.as_ref().map(EmbeddingCache::open).transpose()?;
    Ok(CachedEmbedder::new(inner, cache))
}

/// A loaded, preprocessed and split domain with its training-only profiles.
pub struct PreparedDomain {
    pub files: DomainFiles,
    pub split: SplitDomain,
    pub profiles: DomainProfiles,
}

pub fn prepare_domain(dir: &Path, cfg: &RunConfig) -> Result<PreparedDomain, CliError> {
    let files = DomainFiles::in_dir(dir);
    let raw = io::load_domain_dir(dir)?;
    let domain = preprocess(&raw, cfg.min_responses()?)?;
    let split = split_per_student(&domain, DEFAULT_SPLIT, derive_seed(cfg.seed, SPLIT_STREAM))?;
    let profiles = DomainProfiles::build(&split)?;
    log::info!(
        "{}: {} students, {} exercises, {} concepts, {}/{}/{} records",
        domain.name,
        domain.n_students(),
        domain.n_exercises(),
        domain.n_concepts(),
        split.train.len(),
        split.valid.len(),
        split.test.len()
    );
    Ok(PreparedDomain { files, split, profiles })
}

fn profile_texts(p: &DomainProfiles) -> Vec<&str> {
    p.concepts
        .iter()
        .map(|c| c.text.as_str())
        .chain(p.exercises.iter().map(|e| e.text.as_str()))
        .chain(p.students.iter().flat_map(|s| s.interactions.iter().map(|i| i.text.as_str())))
        .collect()
}

/// Embeds every profile of `prepared`, batching remote requests for cache misses.
pub fn encode_prepared(
    prepared: &PreparedDomain,
    embedder: &CachedEmbedder<Embedder>,
) -> Result<EncodedDomain, CliError> {
    if let Embedder::Remote(remote) = embedder.inner() {
        let misses = embedder.misses(profile_texts(&prepared.profiles));
        if !misses.is_empty() {
            log::info!("{}: embedding {} texts remotely", prepared.split.name(), misses.len());
            for (text, values) in misses.iter().zip(remote.embed_many(&misses)?) {
                embedder.store(text, &values)?;
            }
        }
    }
    Ok(encode_profiles(&prepared.split, &prepared.profiles, embedder)?)
}

fn manifest(command: &str, cfg: &RunConfig) -> RunManifest {
    RunManifest {
        command: command.into(),
        config_digest: cfg.digest(),
        config: cfg.pairs(),
        seed: cfg.seed,
        ..RunManifest::default()
    }
}

fn input_digests(prepared: &[PreparedDomain]) -> Result<BTreeMap<String, String>, CliError> {
    Ok(io::digest_files(prepared.iter().flat_map(|p| p.files.all()))?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(io::write_bytes(path, text.as_bytes())?)
}

// ---------------------------------------------------------------- synth

/// Writes one directory per generated domain, the ground truth and a manifest.
pub fn cmd_synth(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut timings = Timings::new();
    let scfg = cfg.synthetic();
    let (domains, truth) = timings.phase("generate", || synth::generate(&scfg))?;
    let mut dirs = Vec::new();
    let mut outputs = Vec::new();
    let mut truth_domains = Vec::new();
    for (domain, dt) in domains.iter().zip(&truth.domains) {
        let dir = out_dir.join(&domain.name);
        io::write_domain(&dir, domain)?;
        for f in [io::RECORDS_FILE, io::QMATRIX_FILE, io::NAMES_FILE] {
            outputs.push(format!("{}/{f}", domain.name));
        }
        let oracle = synth::oracle_auc_bound(&truth, dt, domain.records()).ok();
        truth_domains.push(json!({
            "name": dt.name,
            "oracle_auc": oracle,
            "concepts": dt.concepts.iter().map(|c| json!({"id": c.id, "name": c.name, "loading": c.loading})).collect::<Vec<_>>(),
            "exercises": dt.exercises.iter().map(|e| json!({
                "id": e.id,
                "concept": dt.concepts[e.concept].id,
                "difficulty": e.difficulty,
                "discrimination": e.discrimination,
            })).collect::<Vec<_>>(),
            "students": dt.students.iter().map(|s| json!({"id": s.id, "ability": s.ability})).collect::<Vec<_>>(),
        }));
        dirs.push(dir);
    }
    write_json(
        &out_dir.join(GROUND_TRUTH_FILE),
        &json!({
            "seed": scfg.seed,
            "word_pool": WORD_POOL_VERSION,
            "guess": truth.guess,
            "slip": truth.slip,
            "latent_dim": scfg.latent_dim,
            "domains": truth_domains,
        }),
    )?;
    outputs.push(GROUND_TRUTH_FILE.into());
    let mut m = manifest("synth", cfg);
    m.outputs = outputs;
    m.timings_ms = timings.finish();
    m.write(out_dir)?;
    Ok(dirs)
}

// ---------------------------------------------------------------- embed

/// Builds and dumps profiles for each domain and warms the embedding cache.
pub fn cmd_embed(dirs: &[PathBuf], cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    cfg.validate()?;
    let mut timings = Timings::new();
    let embedder = build_embedder(cfg)?;
    let prepared = dirs
        .iter()
        .map(|d| prepare_domain(d, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut outputs = Vec::new();
    for p in &prepared {
        timings.phase("embed", || encode_prepared(p, &embedder))?;
        let name = p.split.name().to_string();
        let path = out_dir.join(&name).join(PROFILES_FILE);
        let mut lines = String::new();
        let prof = &p.profiles;
        let mut push = |v: serde_json::Value| {
            lines.push_str(&v.to_string());
            lines.push('\n');
        };
        for c in &prof.concepts {
            push(json!({"kind": "concept", "id": c.concept_id, "text": c.text}));
        }
        for e in &prof.exercises {
            push(json!({"kind": "exercise", "id": e.exercise_id, "text": e.text, "acr": e.acr}));
        }
        for s in &prof.students {
            for i in &s.interactions {
                push(json!({"kind": "interaction", "id": format!("{}/{}", i.student_id, i.exercise_id), "text": i.text}));
            }
        }
        io::write_bytes(&path, lines.as_bytes())?;
        outputs.push(format!("{name}/{PROFILES_FILE}"));
    }
    let (hits, misses) = embedder.stats();
    log::info!("embedding cache: {hits} hits, {misses} misses");
    let mut m = manifest("embed", cfg);
    m.tem_id = embedder.descriptor().tem_id.clone();
    m.input_digests = input_digests(&prepared)?;
    m.outputs = outputs;
    m.timings_ms = timings.finish();
    m.write(out_dir)?;
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Serialize)]
struct EpochLine<'a> {
    epoch: usize,
    train_loss: f64,
    val_auc: BTreeMap<&'a str, f64>,
    mean_val_auc: f64,
    lr: f64,
}

/// Trains on every source domain and writes the checkpoint, log and manifest.
pub fn cmd_train(dirs: &[PathBuf], cfg: &RunConfig, out_dir: &Path) -> Result<TrainedModel, CliError> {
    cfg.validate()?;
    if dirs.is_empty() {
        return Err(CliError::Config("no source domains given".into()));
    }
    let mut timings = Timings::new();
    let embedder = build_embedder(cfg)?;
    let prepared = timings.phase("load", || {
        dirs.iter().map(|d| prepare_domain(d, cfg)).collect::<Result<Vec<_>, _>>()
    })?;
    let encoded = timings.phase("embed", || {
        prepared
            .iter()
            .map(|p| encode_prepared(p, &embedder))
            .collect::<Result<Vec<_>, _>>()
    })?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let log_path = out_dir.join(TRAIN_LOG_FILE);
    let mut log_file = std::fs::File::create(&log_path).map_err(|e| io_error(&log_path, e))?;
    let mut log_err = None;
    let trained = timings.phase("train", || {
        train_multi_domain(&encoded, &cfg.training(), &mut |epoch| {
            let line = EpochLine {
                epoch: epoch.epoch,
                train_loss: epoch.train_loss,
                val_auc: epoch.val_auc.iter().map(|(d, a)| (d.as_str(), *a)).collect(),
                mean_val_auc: epoch.mean_val_auc,
                lr: epoch.lr,
            };
            log::info!(
                "epoch {}: loss {:.4}, validation AUC {:.4}",
                epoch.epoch,
                epoch.train_loss,
                epoch.mean_val_auc
            );
            let text = serde_json::to_string(&line).expect("log line serializes");
            if let Err(e) = writeln!(log_file, "{text}") {
                log_err.get_or_insert(e);
            }
        })
    })?;
    if let Some(e) = log_err {
        return Err(io_error(&log_path, e));
    }
    let ckpt = out_dir.join(CHECKPOINT_FILE);
    checkpoint::save(&ckpt, &trained).map_err(|e| CliError::Io(e.to_string()))?;
    log::info!(
        "best epoch {} of {}; checkpoint {}",
        trained.best_epoch,
        trained.epochs_run,
        ckpt.display()
    );
    let mut m = manifest("train", cfg);
    m.tem_id = trained.tem_id.clone();
    m.input_digests = input_digests(&prepared)?;
    m.outputs = vec![CHECKPOINT_FILE.into(), TRAIN_LOG_FILE.into()];
    m.timings_ms = timings.finish();
    m.write(out_dir)?;
    Ok(trained)
}

// ---------------------------------------------------------------- diagnose

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MetricsJson {
    pub auc: f64,
    pub doa: f64,
    pub n_records: usize,
    pub n_doa_concepts: usize,
    pub seed: u64,
    pub model_digest: String,
}

impl From<EvalReport> for MetricsJson {
    fn from(r: EvalReport) -> Self {
        Self {
            auc: r.auc,
            doa: r.doa,
            n_records: r.n_records,
            n_doa_concepts: r.n_doa_concepts,
            seed: r.seed,
            model_digest: r.model_digest,
        }
    }
}

fn check_tem(model: &TrainedModel, embedder: &impl TextEmbedder) -> Result<(), CliError> {
    let got = &embedder.descriptor().tem_id;
    if *got != model.tem_id {
        return Err(CliError::TemMismatch(format!(
            "checkpoint was trained with `{}`, configured embedder is `{got}`",
            model.tem_id
        )));
    }
    Ok(())
}

fn doa_records(cfg: &RunConfig, enc: &EncodedDomain) -> Vec<Observation> {
    match cfg.doa_records {
        DoaRecords::Test => enc.test.clone(),
        DoaRecords::All => enc.train.iter().chain(&enc.valid).chain(&enc.test).copied().collect(),
    }
}

/// Zero-shot diagnosis of `target_dir` with a frozen checkpoint.
pub fn cmd_diagnose(
    checkpoint_path: &Path,
    target_dir: &Path,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<MetricsJson, CliError> {
    cfg.validate()?;
    let mut timings = Timings::new();
    let model = checkpoint::load(checkpoint_path)?;
    let embedder = build_embedder(cfg)?;
    check_tem(&model, &embedder)?;
    let prepared = prepare_domain(target_dir, cfg)?;
    let encoded = timings.phase("embed", || encode_prepared(&prepared, &embedder))?;
    let diag = timings.phase("diagnose", || diagnose_encoded(&model, &encoded))?;
    if !diag.parameters_unchanged() {
        return Err(CliError::Numeric("model parameters changed during inference".into()));
    }
    let digest = zsdiag_core::model::to_hex(&diag.digest_after);
    let report = metrics::evaluate(
        &diag.predictions,
        &diag.test_records,
        &diag.mastery,
        &encoded.q_rows,
        cfg.doa_options(),
        cfg.seed,
        &digest,
    )?;
    let report = if cfg.doa_records == DoaRecords::All {
        let doa = metrics::doa(&diag.mastery, &doa_records(cfg, &encoded), &encoded.q_rows, cfg.doa_options())?;
        EvalReport {
            doa: doa.doa,
            n_doa_concepts: doa.n_concepts,
            ..report
        }
    } else {
        report
    };

    let domain = &prepared.split.parent;
    let rows: Vec<PredictionRow> = diag
        .test_records
        .iter()
        .zip(&diag.predictions)
        .map(|(r, &p)| PredictionRow {
            student_id: domain.students().id(r.student).into(),
            exercise_id: domain.exercises().id(r.exercise).into(),
            y_true: r.score,
            p_hat: p,
        })
        .collect();
    io::write_predictions(&out_dir.join(PREDICTIONS_FILE), &rows)?;
    io::write_mastery(&out_dir.join(MASTERY_FILE), domain, &diag.mastery)?;
    let metrics: MetricsJson = report.into();
    write_json(&out_dir.join(METRICS_FILE), &metrics)?;
    log::info!("{}: AUC {:.4}, DOA {:.4}", domain.name, metrics.auc, metrics.doa);

    let mut m = manifest("diagnose", cfg);
    m.tem_id = model.tem_id.clone();
    m.input_digests = input_digests(std::slice::from_ref(&prepared))?;
    m.input_digests.insert(
        checkpoint_path.display().to_string(),
        io::sha256_file(checkpoint_path)?,
    );
    m.outputs = vec![PREDICTIONS_FILE.into(), MASTERY_FILE.into(), METRICS_FILE.into()];
    m.timings_ms = timings.finish();
    m.write(out_dir)?;
    Ok(metrics)
}

// ---------------------------------------------------------------- evaluate

/// Recomputes metrics from exported predictions and mastery files.
pub fn cmd_evaluate(
    target_dir: &Path,
    predictions: &Path,
    mastery: &Path,
    model_digest: &str,
    cfg: &RunConfig,
) -> Result<MetricsJson, CliError> {
    let domain: Domain = io::load_domain_dir(target_dir)?;
    let rows = io::read_predictions(predictions)?;
    let mastery = io::read_mastery(mastery, &domain)?;
    let records = rows
        .iter()
        .map(|r| {
            let student = domain
                .students()
                .get(&r.student_id)
                .ok_or_else(|| CliError::Data(format!("unknown student `{}`", r.student_id)))?;
            let exercise = domain
                .exercises()
                .get(&r.exercise_id)
                .ok_or_else(|| CliError::Data(format!("unknown exercise `{}`", r.exercise_id)))?;
            Ok(Observation {
                student,
                exercise,
                score: r.y_true,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let p: Vec<f64> = rows.iter().map(|r| r.p_hat).collect();
    let report = metrics::evaluate(
        &p,
        &records,
        &mastery,
        domain.q_rows(),
        cfg.doa_options(),
        cfg.seed,
        model_digest,
    )?;
    Ok(report.into())
}

// ---------------------------------------------------------------- edit

/// One line of an edits file: `name, correct|incorrect`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditLine {
    pub name: String,
    pub score: u8,
}

pub fn parse_edits(text: &str) -> Result<Vec<EditLine>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, outcome) = line
            .rsplit_once(',')
            .ok_or_else(|| CliError::Config(format!("edits line {}: expected `name, correct|incorrect`", i + 1)))?;
        let score = match outcome.trim().to_ascii_lowercase().as_str() {
            "correct" | "1" => 1,
            "incorrect" | "0" => 0,
            other => {
                return Err(CliError::Config(format!(
                    "edits line {}: outcome must be correct or incorrect, got `{other}`",
                    i + 1
                )))
            }
        };
        let name = name.trim();
        if name.is_empty() {
            return Err(CliError::Config(format!("edits line {}: empty name", i + 1)));
        }
        out.push(EditLine {
            name: name.into(),
            score,
        });
    }
    if out.is_empty() {
        return Err(CliError::Config("edits file has no entries".into()));
    }
    Ok(out)
}

fn resolve_edit(domain: &Domain, name: &str) -> Option<EditTarget> {
    if let Some(j) = domain.exercises().get(name) {
        return Some(EditTarget::Exercise(j));
    }
    if let Some(k) = domain.concepts().get(name) {
        return Some(EditTarget::Concept(k));
    }
    (0..domain.n_concepts())
        .find(|&k| domain.concept_name(k).eq_ignore_ascii_case(name))
        .map(EditTarget::Concept)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditedValue {
    pub id: String,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditReport {
    pub student_id: String,
    pub alpha: f64,
    pub mastery: Vec<EditedValue>,
    pub predictions: Vec<EditedValue>,
}

/// Applies profile edits for one student of `target_dir` and reports mastery and
/// per-exercise predictions before and after.
pub fn cmd_edit(
    checkpoint_path: &Path,
    target_dir: &Path,
    student_id: &str,
    edits: &[EditLine],
    cfg: &RunConfig,
) -> Result<EditReport, CliError> {
    cfg.validate()?;
    let model = checkpoint::load(checkpoint_path)?;
    let embedder = build_embedder(cfg)?;
    check_tem(&model, &embedder)?;
    let prepared = prepare_domain(target_dir, cfg)?;
    let domain = &prepared.split.parent;
    let s = domain
        .students()
        .get(student_id)
        .ok_or_else(|| CliError::Data(format!("unknown student `{student_id}`")))?;
    let new: Vec<String> = edits
        .iter()
        .map(|e| {
            resolve_edit(domain, &e.name)
                .map(|t| edit_interaction_text(&prepared.split, &prepared.profiles.acr, t, e.score))
                .ok_or_else(|| CliError::Config(format!("`{}` is neither an exercise nor a concept", e.name)))
        })
        .collect::<Result<_, _>>()?;
    let old: Vec<String> = prepared.profiles.students[s]
        .interactions
        .iter()
        .map(|i| i.text.clone())
        .collect();
    let encoded = encode_prepared(&prepared, &embedder)?;
    let edit = edit_profile(&model, &encoded, &old, &new, cfg.alpha, &embedder)?;
    let values = |ids: &[String], before: &[f64], after: &[f64]| -> Vec<EditedValue> {
        ids.iter()
            .zip(before.iter().zip(after))
            .map(|(id, (&b, &a))| EditedValue {
                id: id.clone(),
                before: b,
                after: a,
            })
            .collect()
    };
    Ok(EditReport {
        student_id: student_id.into(),
        alpha: cfg.alpha,
        mastery: values(domain.concepts().ids(), &edit.mastery_before, &edit.mastery_after),
        predictions: values(
            domain.exercises().ids(),
            &edit.predictions_before,
            &edit.predictions_after,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edits_file_parsing() {
        let e = parse_edits("# comment\nAngle, correct\n\ne12 ,INCORRECT\nLines, angles, correct\n").unwrap();
        assert_eq!(
            e,
            vec![
                EditLine { name: "Angle".into(), score: 1 },
                EditLine { name: "e12".into(), score: 0 },
                EditLine { name: "Lines, angles".into(), score: 1 },
            ]
        );
        for bad in ["Angle", "Angle, maybe", ", correct", ""] {
            assert_eq!(parse_edits(bad).unwrap_err().exit_code(), 2, "{bad:?}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(TrainError::NonFiniteLoss { epoch: 1, batch: 0, domain: "d".into() }).exit_code(), 4);
        assert_eq!(CliError::from(EmbedError::BackendUnavailable("x".into())).exit_code(), 5);
        assert_eq!(
            CliError::from(ZeroShotError::TemMismatch { expected: "a".into(), got: "b".into() }).exit_code(),
            6
        );
        assert_eq!(CliError::from(ConfigError::Missing("min_responses")).exit_code(), 2);
    }
}
