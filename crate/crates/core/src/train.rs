//! Multi-domain supervised training with Adam, per-domain loss weights, validation-AUC
//! model selection and early stopping.
//!
//! Batches never mix domains: each epoch shuffles every domain's training records,
//! cuts them into batches and visits the batches round-robin across domains. A batch
//! from domain `m` contributes `w_m` times its mean BCE.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cdm::{CdmError, CdmInput, CdmInputGrads, CdmParams, CdmVariant};
use crate::corpus::Observation;
use crate::encode::EncodedDomain;
use crate::mapper::{ForwardCache, MapperError, MapperRole};
use crate::math;
use crate::metrics;
use crate::model::{derive_seed, Ablation, DiagnosisModel, ModelConfig};
use crate::optim::AdamState;

pub const LEARNING_RATE_GRID: [f64; 6] = [1e-5, 5e-5, 1e-4, 2.5e-4, 5e-4, 2e-3];

/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` inside the loss.
pub const P_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("no source domains")]
    NoDomains,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("domain `{domain}`: {what}")]
    MissingVector { domain: String, what: String },
    #[error("domains disagree on {0}")]
    InconsistentDomains(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch} of domain `{domain}`")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        domain: String,
    },
    #[error(transparent)]
    Cdm(#[from] CdmError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub hidden: Vec<usize>,
    pub head_width: usize,
    pub variant: CdmVariant,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// per-domain loss weights; `None` means uniform `1 / #domains`
    pub domain_weights: Option<Vec<f64>>,
    pub ablation: Ablation,
    /// select on AUC pooled over all validation records instead of the domain mean
    pub pooled_validation: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            hidden: alloc::vec![512, 256],
            head_width: 16,
            variant: CdmVariant::Kancd,
            batch_size: 256,
            learning_rate: 2.5e-4,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            domain_weights: None,
            ablation: Ablation::None,
            pooled_validation: false,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self, language_dim: usize) -> ModelConfig {
        ModelConfig {
            language_dim,
            hidden: self.hidden.clone(),
            dim: self.dim,
            variant: self.variant,
            head_width: self.head_width,
            ablation: self.ablation,
        }
    }

    pub fn weights(&self, n_domains: usize) -> Result<Vec<f64>, TrainError> {
        match &self.domain_weights {
            None => Ok(alloc::vec![1.0 / n_domains as f64; n_domains]),
            Some(w) if w.len() != n_domains => Err(TrainError::InvalidConfig(alloc::format!(
                "{} domain weights for {n_domains} domains",
                w.len()
            ))),
            Some(w) if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) => Err(
                TrainError::InvalidConfig("domain weights must be positive".into()),
            ),
            Some(w) => Ok(w.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.dim == 0 || self.hidden.iter().any(|&h| h == 0) {
            return bad("layer widths must be positive");
        }
        if self.variant != CdmVariant::Mirt && self.head_width == 0 {
            return bad("head_width must be positive");
        }
        Ok(())
    }
}

/// Binary cross-entropy with the probability clamped away from 0 and 1.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    if y == 1 {
        -math::ln(p)
    } else {
        -math::ln(1.0 - p)
    }
}

/// Cognitive vectors of every entity of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CognitiveDomain {
    pub students: Vec<Vec<f64>>,
    pub exercises: Vec<Vec<f64>>,
    pub concepts: Vec<Vec<f64>>,
}

/// A parameter set the trainer can optimize: entity representations plus the
/// interaction function.
pub trait Learner: Clone {
    type Cache;

    fn cdm(&self) -> &CdmParams;
    fn cdm_mut(&mut self) -> &mut CdmParams;
    fn zeros_like(&self) -> Self;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
    /// Same group order as [`Learner::params_mut`].
    fn param_slices(&self) -> Vec<&[f64]>;
    fn represent(
        &self,
        domain: &EncodedDomain,
        role: MapperRole,
        entity: usize,
    ) -> Result<(Vec<f64>, Self::Cache), TrainError>;
    fn accumulate(
        &self,
        role: MapperRole,
        entity: usize,
        cache: &Self::Cache,
        upstream: &[f64],
        grads: &mut Self,
    ) -> Result<(), TrainError>;
    /// Hook run after every optimizer step.
    fn after_step(&mut self);

    fn cognitive_domain(&self, domain: &EncodedDomain) -> Result<CognitiveDomain, TrainError> {
        let map = |role, n| {
            (0..n)
                .map(|i| self.represent(domain, role, i).map(|(v, _)| v))
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(CognitiveDomain {
            students: map(MapperRole::Student, domain.n_students())?,
            exercises: map(MapperRole::Exercise, domain.n_exercises())?,
            concepts: map(MapperRole::Concept, domain.n_concepts())?,
        })
    }
}

pub fn predict_records(
    cdm: &CdmParams,
    cog: &CognitiveDomain,
    q_rows: &[Vec<usize>],
    records: &[Observation],
) -> Result<Vec<f64>, CdmError> {
    records
        .iter()
        .map(|r| {
            cdm.predict(&CdmInput {
                student: &cog.students[r.student],
                exercise: &cog.exercises[r.exercise],
                concepts: &cog.concepts,
                q_row: &q_rows[r.exercise],
            })
        })
        .collect()
}

impl Learner for DiagnosisModel {
    type Cache = Option<ForwardCache>;

    fn cdm(&self) -> &CdmParams {
        &self.cdm
    }

    fn cdm_mut(&mut self) -> &mut CdmParams {
        &mut self.cdm
    }

    fn zeros_like(&self) -> Self {
        DiagnosisModel::zeros_like(self)
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        DiagnosisModel::params_mut(self)
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        self.named_params().into_iter().map(|(_, v)| v).collect()
    }

    fn represent(
        &self,
        domain: &EncodedDomain,
        role: MapperRole,
        entity: usize,
    ) -> Result<(Vec<f64>, Self::Cache), TrainError> {
        let x = match role {
            MapperRole::Student => &domain.students[entity],
            MapperRole::Exercise => &domain.exercises[entity],
            MapperRole::Concept => &domain.concepts[entity],
        };
        match &self.mappers {
            Some(m) => {
                let cache = m.get(role).forward_cached(x)?;
                Ok((cache.output().to_vec(), Some(cache)))
            }
            None => Ok((self.map(role, x)?, None)),
        }
    }

    fn accumulate(
        &self,
        role: MapperRole,
        _entity: usize,
        cache: &Self::Cache,
        upstream: &[f64],
        grads: &mut Self,
    ) -> Result<(), TrainError> {
        if let (Some(m), Some(g), Some(c)) = (&self.mappers, &mut grads.mappers, cache) {
            m.get(role).backward_into(c, upstream, g.get_mut(role))?;
        }
        Ok(())
    }

    fn after_step(&mut self) {
        self.cdm.project_nonneg();
        self.round_to_f32();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// weighted mean training BCE over the epoch's batches
    pub train_loss: f64,
    pub val_auc: Vec<(String, f64)>,
    /// selection metric: mean (or pooled) validation AUC
    pub mean_val_auc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome<L> {
    pub best: L,
    pub best_epoch: usize,
    pub best_score: f64,
    pub best_val_auc: Vec<(String, f64)>,
    pub epochs_run: usize,
    pub history: Vec<EpochLog>,
}

fn check_domain(d: &EncodedDomain) -> Result<(), TrainError> {
    let missing = |what: String| {
        Err(TrainError::MissingVector {
            domain: d.name.clone(),
            what,
        })
    };
    for r in d.train.iter().chain(&d.valid).chain(&d.test) {
        if r.student >= d.students.len() {
            return missing(alloc::format!("student {} has no vector", r.student));
        }
        if r.exercise >= d.exercises.len() || r.exercise >= d.q_rows.len() {
            return missing(alloc::format!("exercise {} has no vector", r.exercise));
        }
    }
    if d.q_rows.iter().flatten().any(|&k| k >= d.concepts.len()) {
        return missing("concept without vector".into());
    }
    Ok(())
}

struct Slots {
    index: Vec<usize>,
    entities: Vec<usize>,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            index: alloc::vec![usize::MAX; n],
            entities: Vec::new(),
        }
    }

    fn slot(&mut self, entity: usize) -> usize {
        if self.index[entity] == usize::MAX {
            self.index[entity] = self.entities.len();
            self.entities.push(entity);
        }
        self.index[entity]
    }

    fn reset(&mut self) {
        for &e in &self.entities {
            self.index[e] = usize::MAX;
        }
        self.entities.clear();
    }
}

/// Mean BCE of `batch` and the gradient of `weight ×` that mean w.r.t. every
/// parameter of `learner`.
pub fn batch_gradients<L: Learner>(
    learner: &L,
    domain: &EncodedDomain,
    batch: &[Observation],
    weight: f64,
) -> Result<(f64, L), TrainError> {
    check_domain(domain)?;
    let mut slots = [Slots::new(domain.n_students()), Slots::new(domain.n_exercises())];
    gradients(learner, domain, batch, weight, &mut slots)
}

/// Forward, backward and one optimizer step on one batch. Returns the batch's mean BCE.
fn train_batch<L: Learner>(
    learner: &mut L,
    adam: &mut AdamState,
    domain: &EncodedDomain,
    batch: &[Observation],
    weight: f64,
    lr: f64,
    slots: &mut [Slots; 2],
) -> Result<f64, TrainError> {
    let (mean_loss, grads) = gradients(learner, domain, batch, weight, slots)?;
    if !mean_loss.is_finite() {
        return Ok(mean_loss);
    }
    let grad_slices = grads.param_slices();
    let mut params = learner.params_mut();
    adam.step(&mut params, &grad_slices, lr);
    learner.after_step();
    Ok(mean_loss)
}

fn gradients<L: Learner>(
    learner: &L,
    domain: &EncodedDomain,
    batch: &[Observation],
    weight: f64,
    slots: &mut [Slots; 2],
) -> Result<(f64, L), TrainError> {
    let dim = learner.cdm().dim;
    let [students, exercises] = slots;
    students.reset();
    exercises.reset();
    let mut record_slots = Vec::with_capacity(batch.len());
    for r in batch {
        record_slots.push((students.slot(r.student), exercises.slot(r.exercise)));
    }
    let mut concept_used = alloc::vec![false; domain.n_concepts()];
    for &j in &exercises.entities {
        for &k in &domain.q_rows[j] {
            concept_used[k] = true;
        }
    }

    let mut s_vecs = Vec::with_capacity(students.entities.len());
    let mut s_caches = Vec::with_capacity(students.entities.len());
    for &s in &students.entities {
        let (v, c) = learner.represent(domain, MapperRole::Student, s)?;
        s_vecs.push(v);
        s_caches.push(c);
    }
    let mut e_vecs = Vec::with_capacity(exercises.entities.len());
    let mut e_caches = Vec::with_capacity(exercises.entities.len());
    for &e in &exercises.entities {
        let (v, c) = learner.represent(domain, MapperRole::Exercise, e)?;
        e_vecs.push(v);
        e_caches.push(c);
    }
    let mut c_vecs = alloc::vec![alloc::vec![0.0; dim]; domain.n_concepts()];
    let mut c_caches: Vec<Option<L::Cache>> = Vec::with_capacity(domain.n_concepts());
    for (k, used) in concept_used.iter().enumerate() {
        if *used {
            let (v, c) = learner.represent(domain, MapperRole::Concept, k)?;
            c_vecs[k] = v;
            c_caches.push(Some(c));
        } else {
            c_caches.push(None);
        }
    }

    let cdm = learner.cdm();
    let mut grads = learner.zeros_like();
    let mut cdm_grads = cdm.zeros_like();
    let mut s_grads = alloc::vec![alloc::vec![0.0; dim]; s_vecs.len()];
    let mut e_grads = alloc::vec![alloc::vec![0.0; dim]; e_vecs.len()];
    let mut input_grads = CdmInputGrads::zeros(dim, domain.n_concepts());
    let scale = weight / batch.len() as f64;
    let mut loss = 0.0;
    for (r, &(si, ei)) in batch.iter().zip(&record_slots) {
        let input = CdmInput {
            student: &s_vecs[si],
            exercise: &e_vecs[ei],
            concepts: &c_vecs,
            q_row: &domain.q_rows[r.exercise],
        };
        let cache = cdm.forward(&input)?;
        loss += bce_loss(cache.p, r.score);
        let g = scale * (cache.p - r.score as f64);
        input_grads.student.iter_mut().for_each(|v| *v = 0.0);
        input_grads.exercise.iter_mut().for_each(|v| *v = 0.0);
        cdm.backward_logit(&input, &cache, g, &mut cdm_grads, &mut input_grads);
        math::axpy(1.0, &input_grads.student, &mut s_grads[si]);
        math::axpy(1.0, &input_grads.exercise, &mut e_grads[ei]);
    }
    let mean_loss = loss / batch.len() as f64;
    if !mean_loss.is_finite() {
        return Ok((mean_loss, grads));
    }

    for (slot, &s) in students.entities.iter().enumerate() {
        learner.accumulate(MapperRole::Student, s, &s_caches[slot], &s_grads[slot], &mut grads)?;
    }
    for (slot, &e) in exercises.entities.iter().enumerate() {
        learner.accumulate(MapperRole::Exercise, e, &e_caches[slot], &e_grads[slot], &mut grads)?;
    }
    for (k, cache) in c_caches.iter().enumerate() {
        if let Some(c) = cache {
            learner.accumulate(MapperRole::Concept, k, c, &input_grads.concepts[k], &mut grads)?;
        }
    }
    *grads.cdm_mut() = cdm_grads;
    Ok((mean_loss, grads))
}

fn validation_score<L: Learner>(
    learner: &L,
    domains: &[EncodedDomain],
    pooled: bool,
) -> Result<(f64, Vec<(String, f64)>), TrainError> {
    let mut per_domain = Vec::new();
    let mut all = Vec::new();
    for d in domains {
        if d.valid.is_empty() {
            continue;
        }
        let cog = learner.cognitive_domain(d)?;
        let preds = predict_records(learner.cdm(), &cog, &d.q_rows, &d.valid)?;
        let scored: Vec<(f64, u8)> = preds.iter().zip(&d.valid).map(|(&p, r)| (p, r.score)).collect();
        if let Ok(a) = metrics::auc(&scored) {
            per_domain.push((d.name.clone(), a));
        }
        all.extend(scored);
    }
    let score = if pooled {
        metrics::auc(&all).unwrap_or(f64::NAN)
    } else if per_domain.is_empty() {
        f64::NAN
    } else {
        per_domain.iter().map(|(_, a)| a).sum::<f64>() / per_domain.len() as f64
    };
    Ok((score, per_domain))
}

/// Generic training loop shared by the language-space model and the id-embedding
/// reference model.
pub fn fit<L: Learner>(
    mut learner: L,
    domains: &[EncodedDomain],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<FitOutcome<L>, TrainError> {
    cfg.validate()?;
    if domains.is_empty() {
        return Err(TrainError::NoDomains);
    }
    for d in domains {
        check_domain(d)?;
    }
    let weights = cfg.weights(domains.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 10));
    let mut adam = AdamState::default();
    let mut slots: Vec<[Slots; 2]> = domains
        .iter()
        .map(|d| [Slots::new(d.n_students()), Slots::new(d.n_exercises())])
        .collect();

    let (initial, initial_val) = validation_score(&learner, domains, cfg.pooled_validation)?;
    let mut best = FitOutcome {
        best: learner.clone(),
        best_epoch: 0,
        best_score: initial,
        best_val_auc: initial_val,
        epochs_run: 0,
        history: Vec::new(),
    };
    let mut since_best = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let schedules: Vec<Vec<Observation>> = domains
            .iter()
            .map(|d| {
                let mut order = d.train.clone();
                order.shuffle(&mut rng);
                order
            })
            .collect();
        let n_batches: Vec<usize> = schedules
            .iter()
            .map(|s| s.len().div_ceil(cfg.batch_size))
            .collect();
        let rounds = n_batches.iter().copied().max().unwrap_or(0);
        let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
        for b in 0..rounds {
            for (m, d) in domains.iter().enumerate() {
                if b >= n_batches[m] {
                    continue;
                }
                let end = ((b + 1) * cfg.batch_size).min(schedules[m].len());
                let batch = &schedules[m][b * cfg.batch_size..end];
                let loss = train_batch(
                    &mut learner,
                    &mut adam,
                    d,
                    batch,
                    weights[m],
                    cfg.learning_rate,
                    &mut slots[m],
                )?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        batch: b,
                        domain: d.name.clone(),
                    });
                }
                loss_sum += weights[m] * loss * batch.len() as f64;
                weight_sum += weights[m] * batch.len() as f64;
            }
        }
        let (score, per_domain) = validation_score(&learner, domains, cfg.pooled_validation)?;
        let log = EpochLog {
            epoch,
            train_loss: if weight_sum > 0.0 { loss_sum / weight_sum } else { 0.0 },
            val_auc: per_domain.clone(),
            mean_val_auc: score,
            lr: cfg.learning_rate,
        };
        on_epoch(&log);
        best.history.push(log);
        best.epochs_run = epoch;
        // NaN scores (no usable validation data) never beat the initial snapshot,
        // so fall back to keeping the latest parameters.
        let improved = score > best.best_score || (best.best_score.is_nan() && !score.is_nan());
        if improved || score.is_nan() && best.best_score.is_nan() {
            best.best = learner.clone();
            best.best_epoch = epoch;
            best.best_score = score;
            best.best_val_auc = per_domain;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(best)
}

/// A trained, frozen model together with what is needed to use it elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: DiagnosisModel,
    pub tem_id: String,
    pub config: TrainConfig,
    pub source_domains: Vec<String>,
    pub best_val_auc: Vec<(String, f64)>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub frozen: bool,
}

/// Language vectors actually fed to the model: random draws under `NoTcp`.
pub fn model_inputs(domain: &EncodedDomain, ablation: Ablation, seed: u64) -> EncodedDomain {
    match ablation {
        Ablation::NoTcp => domain.with_random_vectors(derive_seed(seed, 0x7c9 ^ name_hash(&domain.name))),
        _ => domain.clone(),
    }
}

fn name_hash(name: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let d = Sha256::digest(name.as_bytes());
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn check_language_space(domains: &[EncodedDomain]) -> Result<(String, usize), TrainError> {
    let first = domains.first().ok_or(TrainError::NoDomains)?;
    for d in domains {
        if d.tem_id != first.tem_id {
            return Err(TrainError::InconsistentDomains("embedder".into()));
        }
        if d.language_dim != first.language_dim {
            return Err(TrainError::InconsistentDomains("language dimension".into()));
        }
    }
    Ok((first.tem_id.clone(), first.language_dim))
}

/// An untrained model with the same initialization `train_multi_domain` would use.
pub fn initial_model(domains: &[EncodedDomain], cfg: &TrainConfig) -> Result<TrainedModel, TrainError> {
    let (tem_id, language_dim) = check_language_space(domains)?;
    let mut model = DiagnosisModel::init(cfg.model_config(language_dim), cfg.seed);
    model.round_to_f32();
    Ok(TrainedModel {
        model,
        tem_id,
        config: cfg.clone(),
        source_domains: domains.iter().map(|d| d.name.clone()).collect(),
        best_val_auc: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
        frozen: true,
    })
}

/// Jointly trains mappers and interaction function on every source domain.
pub fn train_multi_domain(
    domains: &[EncodedDomain],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainedModel, TrainError> {
    let init = initial_model(domains, cfg)?;
    let inputs: Vec<EncodedDomain> = domains
        .iter()
        .map(|d| model_inputs(d, cfg.ablation, cfg.seed))
        .collect();
    let outcome = fit(init.model.clone(), &inputs, cfg, on_epoch)?;
    if !outcome.best.all_finite() {
        return Err(TrainError::NonFiniteLoss {
            epoch: outcome.best_epoch,
            batch: 0,
            domain: String::new(),
        });
    }
    Ok(TrainedModel {
        model: outcome.best,
        best_val_auc: outcome.best_val_auc,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.epochs_run,
        ..init
    })
}

/// `Σ_m w_m Σ_{r ∈ train_m} BCE(r)` at fixed parameters.
pub fn weighted_training_loss<L: Learner>(
    learner: &L,
    domains: &[EncodedDomain],
    weights: &[f64],
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (d, &w) in domains.iter().zip(weights) {
        let cog = learner.cognitive_domain(d)?;
        let preds = predict_records(learner.cdm(), &cog, &d.q_rows, &d.train)?;
        let loss: f64 = preds.iter().zip(&d.train).map(|(&p, r)| bce_loss(p, r.score)).sum();
        total += w * loss;
    }
    Ok(total)
}

/// Reference model with free per-entity vectors (one table row per id) and the same
/// interaction function; only meaningful inside the domain it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct IdEmbeddingModel {
    pub students: Vec<Vec<f64>>,
    pub exercises: Vec<Vec<f64>>,
    pub concepts: Vec<Vec<f64>>,
    pub cdm: CdmParams,
}

impl IdEmbeddingModel {
    pub fn init(domain: &EncodedDomain, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 20));
        let dim = cfg.dim;
        let mut table = |n: usize| -> Vec<Vec<f64>> {
            let bound = math::xavier_bound(dim, n);
            (0..n).map(|_| math::uniform_vec(&mut rng, dim, bound)).collect()
        };
        let students = table(domain.n_students());
        let exercises = table(domain.n_exercises());
        let concepts = table(domain.n_concepts());
        Self {
            students,
            exercises,
            concepts,
            cdm: CdmParams::new(cfg.variant, dim, cfg.head_width, derive_seed(cfg.seed, 4)),
        }
    }

    fn table(&self, role: MapperRole) -> &Vec<Vec<f64>> {
        match role {
            MapperRole::Student => &self.students,
            MapperRole::Exercise => &self.exercises,
            MapperRole::Concept => &self.concepts,
        }
    }
}

impl Learner for IdEmbeddingModel {
    type Cache = ();

    fn cdm(&self) -> &CdmParams {
        &self.cdm
    }

    fn cdm_mut(&mut self) -> &mut CdmParams {
        &mut self.cdm
    }

    fn zeros_like(&self) -> Self {
        let z = |t: &Vec<Vec<f64>>| t.iter().map(|r| alloc::vec![0.0; r.len()]).collect();
        Self {
            students: z(&self.students),
            exercises: z(&self.exercises),
            concepts: z(&self.concepts),
            cdm: self.cdm.zeros_like(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for t in [&mut self.students, &mut self.exercises, &mut self.concepts] {
            out.extend(t.iter_mut().map(|r| r.as_mut_slice()));
        }
        for v in self.cdm.slices_mut() {
            if !v.is_empty() {
                out.push(v.as_mut_slice());
            }
        }
        out
    }

    fn param_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for t in [&self.students, &self.exercises, &self.concepts] {
            out.extend(t.iter().map(|r| r.as_slice()));
        }
        out.extend(
            self.cdm
                .named_slices()
                .into_iter()
                .map(|(_, v)| v)
                .filter(|v| !v.is_empty()),
        );
        out
    }

    fn represent(
        &self,
        _domain: &EncodedDomain,
        role: MapperRole,
        entity: usize,
    ) -> Result<(Vec<f64>, ()), TrainError> {
        Ok((self.table(role)[entity].clone(), ()))
    }

    fn accumulate(
        &self,
        role: MapperRole,
        entity: usize,
        _cache: &(),
        upstream: &[f64],
        grads: &mut Self,
    ) -> Result<(), TrainError> {
        let row = match role {
            MapperRole::Student => &mut grads.students[entity],
            MapperRole::Exercise => &mut grads.exercises[entity],
            MapperRole::Concept => &mut grads.concepts[entity],
        };
        math::axpy(1.0, upstream, row);
        Ok(())
    }

    fn after_step(&mut self) {
        self.cdm.project_nonneg();
    }
}

/// Result of training the id-embedding reference on one domain.
#[derive(Debug, Clone)]
pub struct IdBaseline {
    pub model: IdEmbeddingModel,
    pub best_val_auc: f64,
    pub test_auc: f64,
}

/// Trains free per-id vectors with the configured interaction function on `domain`
/// and scores its test split.
pub fn train_id_baseline(
    domain: &EncodedDomain,
    cfg: &TrainConfig,
) -> Result<IdBaseline, TrainError> {
    let model = IdEmbeddingModel::init(domain, cfg);
    let outcome = fit(model, core::slice::from_ref(domain), cfg, &mut |_| {})?;
    let cog = outcome.best.cognitive_domain(domain)?;
    let preds = predict_records(&outcome.best.cdm, &cog, &domain.q_rows, &domain.test)?;
    let scored: Vec<(f64, u8)> = preds.iter().zip(&domain.test).map(|(&p, r)| (p, r.score)).collect();
    Ok(IdBaseline {
        test_auc: metrics::auc(&scored).unwrap_or(f64::NAN),
        best_val_auc: outcome.best_score,
        model: outcome.best,
    })
}
