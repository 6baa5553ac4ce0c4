//! Synthetic multi-domain response data with known ground truth.
//!
//! Every concept name carries a fixed latent loading, so domains that reuse a name
//! reuse its meaning. A student answers exercise `e` (testing concept `c`) correctly
//! with probability `(1 - slip)·σ(z) + guess·(1 - σ(z))`, where
//! `z = a_e (θ_s · v_c - b_e)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use sha2::{Digest, Sha256};

use crate::corpus::{Catalog, CorpusError, Domain, ResponseRecord};
use crate::math::{self, sigmoid};
use crate::metrics::{self, MasteryMatrix};
use crate::model::derive_seed;
use crate::words::WORD_POOL;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_domains: usize,
    pub n_students: usize,
    pub n_exercises: usize,
    pub n_concepts: usize,
    /// fraction of concept names every domain shares
    pub shared_vocab_fraction: f64,
    pub latent_dim: usize,
    pub responses_per_student: usize,
    pub guess: f64,
    pub slip: f64,
    pub difficulty_mean: f64,
    pub difficulty_std: f64,
    pub discrimination: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_domains: 3,
            n_students: 800,
            n_exercises: 200,
            n_concepts: 12,
            shared_vocab_fraction: 0.8,
            latent_dim: 3,
            responses_per_student: 30,
            guess: 0.05,
            slip: 0.05,
            difficulty_mean: 0.0,
            difficulty_std: 1.0,
            discrimination: (1.0, 2.5),
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn n_shared(&self) -> usize {
        libm::round(self.shared_vocab_fraction * self.n_concepts as f64) as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_domains == 0
            || self.n_students == 0
            || self.n_exercises == 0
            || self.n_concepts == 0
            || self.latent_dim == 0
            || self.responses_per_student == 0
        {
            return bad("counts must be positive".into());
        }
        for (name, v) in [
            ("shared_vocab_fraction", self.shared_vocab_fraction),
            ("guess", self.guess),
            ("slip", self.slip),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.difficulty_std >= 0.0) || !self.difficulty_mean.is_finite() {
            return bad("difficulty distribution".into());
        }
        let (lo, hi) = self.discrimination;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("discrimination range".into());
        }
        let needed = self.n_shared() + self.n_domains * (self.n_concepts - self.n_shared());
        if needed > WORD_POOL.len() {
            return bad(format!(
                "{needed} distinct concept names needed, pool has {}",
                WORD_POOL.len()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptTruth {
    pub id: String,
    pub name: String,
    /// unit-length latent loading, a function of the name alone
    pub loading: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseTruth {
    pub id: String,
    pub concept: usize,
    pub difficulty: f64,
    pub discrimination: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentTruth {
    pub id: String,
    pub ability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainTruth {
    pub name: String,
    pub students: Vec<StudentTruth>,
    pub exercises: Vec<ExerciseTruth>,
    pub concepts: Vec<ConceptTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub guess: f64,
    pub slip: f64,
    pub domains: Vec<DomainTruth>,
}

/// Unit loading vector for a concept name: normalized `|N(0, I)|` seeded by the name.
pub fn name_loading(seed: u64, name: &str, latent_dim: usize) -> Vec<f64> {
    let digest = Sha256::digest(name.as_bytes());
    let name_key = u64::from_le_bytes(digest[..8].try_into().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x4e41_4d45) ^ name_key);
    let mut v: Vec<f64> = math::standard_normal_vec(&mut rng, latent_dim)
        .into_iter()
        .map(f64::abs)
        .collect();
    let norm = math::l2_norm(&v);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v[0] = 1.0;
    }
    v
}

impl DomainTruth {
    pub fn logit(&self, student: usize, exercise: usize) -> f64 {
        let e = &self.exercises[exercise];
        let c = &self.concepts[e.concept];
        e.discrimination * (math::dot(&self.students[student].ability, &c.loading) - e.difficulty)
    }

    /// True mastery `σ(θ_s · v_c)` aligned with `domain`'s dense indices.
    pub fn mastery(&self, domain: &Domain) -> MasteryMatrix {
        let students: BTreeMap<&str, usize> =
            self.students.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let concepts: BTreeMap<&str, usize> =
            self.concepts.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
        let rows: Vec<Vec<f64>> = domain
            .students()
            .ids()
            .iter()
            .map(|sid| {
                let theta = &self.students[students[sid.as_str()]].ability;
                domain
                    .concepts()
                    .ids()
                    .iter()
                    .map(|cid| sigmoid(math::dot(theta, &self.concepts[concepts[cid.as_str()]].loading)))
                    .collect()
            })
            .collect();
        MasteryMatrix::from_rows(&rows, domain.n_concepts())
    }
}

impl GroundTruth {
    pub fn probability(&self, domain: &DomainTruth, student: usize, exercise: usize) -> f64 {
        let s = sigmoid(domain.logit(student, exercise));
        (1.0 - self.slip) * s + self.guess * (1.0 - s)
    }

    pub fn domain(&self, name: &str) -> Option<&DomainTruth> {
        self.domains.iter().find(|d| d.name == name)
    }
}

/// Name of the `m`-th generated domain (0-based).
pub fn domain_name(m: usize) -> String {
    format!("synth{}", m + 1)
}

fn pick_names(cfg: &SynthConfig) -> Vec<Vec<&'static str>> {
    let mut pool: Vec<&'static str> = WORD_POOL.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 999));
    pool.shuffle(&mut rng);
    let n_shared = cfg.n_shared();
    let (shared, rest) = pool.split_at(n_shared);
    let unique = cfg.n_concepts - n_shared;
    (0..cfg.n_domains)
        .map(|m| {
            let mut names = shared.to_vec();
            names.extend_from_slice(&rest[m * unique..(m + 1) * unique]);
            names
        })
        .collect()
}

fn generate_domain(
    cfg: &SynthConfig,
    m: usize,
    names: &[&str],
) -> Result<(Domain, DomainTruth), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1000 + m as u64));
    let concepts: Vec<ConceptTruth> = names
        .iter()
        .enumerate()
        .map(|(k, name)| ConceptTruth {
            id: format!("c{}-{k}", m + 1),
            name: (*name).into(),
            loading: name_loading(cfg.seed, name, cfg.latent_dim),
        })
        .collect();

    let mut concept_of: Vec<usize> = (0..cfg.n_exercises).map(|j| j % cfg.n_concepts).collect();
    concept_of.shuffle(&mut rng);
    let difficulty = Normal::new(cfg.difficulty_mean, cfg.difficulty_std)
        .map_err(|_| SynthError::InvalidConfig("difficulty distribution".into()))?;
    let (lo, hi) = cfg.discrimination;
    let discrimination = Uniform::new_inclusive(lo, hi)
        .map_err(|_| SynthError::InvalidConfig("discrimination range".into()))?;
    let exercises: Vec<ExerciseTruth> = concept_of
        .iter()
        .enumerate()
        .map(|(j, &concept)| ExerciseTruth {
            id: format!("e{}-{j:04x}", m + 1),
            concept,
            difficulty: difficulty.sample(&mut rng),
            discrimination: discrimination.sample(&mut rng),
        })
        .collect();
    let students: Vec<StudentTruth> = (0..cfg.n_students)
        .map(|i| StudentTruth {
            id: format!("s{}-{i:05x}", m + 1),
            ability: math::standard_normal_vec(&mut rng, cfg.latent_dim),
        })
        .collect();
    let truth = DomainTruth {
        name: domain_name(m),
        students,
        exercises,
        concepts,
    };
    let gt = GroundTruth {
        guess: cfg.guess,
        slip: cfg.slip,
        domains: Vec::new(),
    };

    let per_student = cfg.responses_per_student.min(cfg.n_exercises);
    let mut order: Vec<usize> = (0..cfg.n_exercises).collect();
    let mut records = Vec::with_capacity(cfg.n_students * per_student);
    for s in 0..cfg.n_students {
        let (chosen, _) = order.partial_shuffle(&mut rng, per_student);
        for (pos, &j) in chosen.iter().enumerate() {
            let p = gt.probability(&truth, s, j);
            let score = rng.random_bool(p.clamp(0.0, 1.0)) as u8;
            records.push(ResponseRecord::new(
                truth.students[s].id.clone(),
                truth.exercises[j].id.clone(),
                score,
                pos as u64,
            ));
        }
    }
    let catalog = Catalog::from_pairs(
        truth
            .exercises
            .iter()
            .map(|e| (e.id.clone(), truth.concepts[e.concept].id.clone())),
        truth.concepts.iter().map(|c| (c.id.clone(), c.name.clone())),
    );
    let domain = Domain::new(truth.name.clone(), records, catalog)?;
    Ok((domain, truth))
}

/// Generates `cfg.n_domains` domains and their ground truth; deterministic per seed.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<Domain>, GroundTruth), SynthError> {
    cfg.validate()?;
    let names = pick_names(cfg);
    let mut domains = Vec::with_capacity(cfg.n_domains);
    let mut truths = Vec::with_capacity(cfg.n_domains);
    for (m, names) in names.iter().enumerate() {
        let (d, t) = generate_domain(cfg, m, names)?;
        domains.push(d);
        truths.push(t);
    }
    Ok((
        domains,
        GroundTruth {
            guess: cfg.guess,
            slip: cfg.slip,
            domains: truths,
        },
    ))
}

/// AUC of the true response probabilities against the realized scores of
/// `records`: the ceiling any model can reach on them.
pub fn oracle_auc_bound(
    gt: &GroundTruth,
    domain: &DomainTruth,
    records: &[ResponseRecord],
) -> Result<f64, metrics::MetricError> {
    let students: BTreeMap<&str, usize> =
        domain.students.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let exercises: BTreeMap<&str, usize> =
        domain.exercises.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let scored: Vec<(f64, u8)> = records
        .iter()
        .filter_map(|r| {
            let s = *students.get(r.student_id.as_str())?;
            let j = *exercises.get(r.exercise_id.as_str())?;
            Some((gt.probability(domain, s, j), r.score))
        })
        .collect();
    metrics::auc(&scored)
}
