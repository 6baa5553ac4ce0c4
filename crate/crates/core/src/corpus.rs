//! Response-log domains: validation, first-attempt dedup, sparsity filtering and
//! per-student splitting.
//!
//! A [`Domain`] owns its records together with a catalog (Q-matrix links and concept
//! names). Dense indices only cover the entities the records actually reference, so
//! filtering students automatically prunes exercises and concepts that fall out of use.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid score {score} for ({student_id}, {exercise_id}); expected 0 or 1")]
    InvalidScore {
        student_id: String,
        exercise_id: String,
        score: u8,
    },
    #[error("duplicate record ({student_id}, {exercise_id}, order {order_index})")]
    DuplicateRecord {
        student_id: String,
        exercise_id: String,
        order_index: u64,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("domain `{0}` has no records")]
    EmptyDomain(String),
    #[error("min_responses must be at least 1")]
    InvalidMinResponses,
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
}

/// One scored attempt. `order_index` is the position in the student's log.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResponseRecord {
    pub student_id: String,
    pub exercise_id: String,
    pub score: u8,
    pub order_index: u64,
}

impl ResponseRecord {
    pub fn new(
        student_id: impl Into<String>,
        exercise_id: impl Into<String>,
        score: u8,
        order_index: u64,
    ) -> Self {
        Self {
            student_id: student_id.into(),
            exercise_id: exercise_id.into(),
            score,
            order_index,
        }
    }
}

/// Bijection between opaque string ids and dense indices, in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdIndex {
    ids: Vec<String>,
    lookup: BTreeMap<String, usize>,
}

impl IdIndex {
    /// Returns the index of `id`, inserting it at the end if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.lookup.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.lookup.insert(id.to_string(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Q-matrix links and concept names, shared between a domain and its filtered views.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    /// exercise id -> linked concept ids (deduplicated, file order)
    pub q_links: BTreeMap<String, Vec<String>>,
    pub concept_names: BTreeMap<String, String>,
}

impl Catalog {
    pub fn from_pairs<I, J>(q_links: I, names: J) -> Self
    where
        I: IntoIterator<Item = (String, String)>,
        J: IntoIterator<Item = (String, String)>,
    {
        let mut links: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (exercise, concept) in q_links {
            let row = links.entry(exercise).or_default();
            if !row.contains(&concept) {
                row.push(concept);
            }
        }
        Self {
            q_links: links,
            concept_names: names.into_iter().collect(),
        }
    }
}

/// Dense-index view of one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub student: usize,
    pub exercise: usize,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    records: Vec<ResponseRecord>,
    catalog: Arc<Catalog>,
    students: IdIndex,
    exercises: IdIndex,
    concepts: IdIndex,
    /// exercise index -> sorted concept indices
    q_rows: Vec<Vec<usize>>,
}

impl Domain {
    /// Validates the records against the catalog and assigns dense indices.
    pub fn new(
        name: impl Into<String>,
        records: Vec<ResponseRecord>,
        catalog: Catalog,
    ) -> Result<Self, CorpusError> {
        Self::build(name.into(), records, Arc::new(catalog))
    }

    fn build(
        name: String,
        records: Vec<ResponseRecord>,
        catalog: Arc<Catalog>,
    ) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::EmptyDomain(name));
        }
        let mut seen = BTreeSet::new();
        let mut students = IdIndex::default();
        let mut exercises = IdIndex::default();
        let mut concepts = IdIndex::default();
        let mut q_rows: Vec<Vec<usize>> = Vec::new();
        for r in &records {
            if r.score > 1 {
                return Err(CorpusError::InvalidScore {
                    student_id: r.student_id.clone(),
                    exercise_id: r.exercise_id.clone(),
                    score: r.score,
                });
            }
            if !seen.insert((r.student_id.as_str(), r.exercise_id.as_str(), r.order_index)) {
                return Err(CorpusError::DuplicateRecord {
                    student_id: r.student_id.clone(),
                    exercise_id: r.exercise_id.clone(),
                    order_index: r.order_index,
                });
            }
            students.intern(&r.student_id);
            if exercises.get(&r.exercise_id).is_some() {
                continue;
            }
            let links = match catalog.q_links.get(&r.exercise_id) {
                Some(links) if !links.is_empty() => links,
                _ => {
                    return Err(CorpusError::DanglingReference(alloc::format!(
                        "exercise `{}` has no Q-matrix row",
                        r.exercise_id
                    )))
                }
            };
            let mut row = Vec::with_capacity(links.len());
            for concept in links {
                match catalog.concept_names.get(concept) {
                    Some(n) if !n.trim().is_empty() => {}
                    _ => {
                        return Err(CorpusError::DanglingReference(alloc::format!(
                            "concept `{concept}` has no name"
                        )))
                    }
                }
                row.push(concepts.intern(concept));
            }
            row.sort_unstable();
            row.dedup();
            exercises.intern(&r.exercise_id);
            q_rows.push(row);
        }
        Ok(Self {
            name,
            records,
            catalog,
            students,
            exercises,
            concepts,
            q_rows,
        })
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn students(&self) -> &IdIndex {
        &self.students
    }

    pub fn exercises(&self) -> &IdIndex {
        &self.exercises
    }

    pub fn concepts(&self) -> &IdIndex {
        &self.concepts
    }

    /// Concept indices linked to the exercise at `exercise` (sorted, non-empty).
    pub fn q_row(&self, exercise: usize) -> &[usize] {
        &self.q_rows[exercise]
    }

    pub fn q_rows(&self) -> &[Vec<usize>] {
        &self.q_rows
    }

    /// Trimmed name of the concept at `concept`.
    pub fn concept_name(&self, concept: usize) -> &str {
        self.catalog.concept_names[self.concepts.id(concept)].trim()
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_exercises(&self) -> usize {
        self.exercises.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    /// Dense view of a record belonging to this domain.
    ///
    /// Panics if the record references an id unknown to the domain.
    pub fn observe(&self, r: &ResponseRecord) -> Observation {
        Observation {
            student: self.students.get(&r.student_id).expect("student in domain"),
            exercise: self.exercises.get(&r.exercise_id).expect("exercise in domain"),
            score: r.score,
        }
    }

    /// Same domain restricted to `records`, with indices rebuilt.
    pub fn with_records(&self, records: Vec<ResponseRecord>) -> Result<Self, CorpusError> {
        Self::build(self.name.clone(), records, Arc::clone(&self.catalog))
    }
}

/// Keeps only the earliest attempt (minimal `order_index`) of each (student, exercise)
/// pair. Surviving records keep their relative order.
pub fn dedup_first_attempt(d: &Domain) -> Domain {
    let mut first: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for r in d.records() {
        first
            .entry((r.student_id.as_str(), r.exercise_id.as_str()))
            .and_modify(|o| *o = (*o).min(r.order_index))
            .or_insert(r.order_index);
    }
    let kept: Vec<ResponseRecord> = d
        .records()
        .iter()
        .filter(|r| first[&(r.student_id.as_str(), r.exercise_id.as_str())] == r.order_index)
        .cloned()
        .collect();
    if kept.len() == d.records().len() {
        return d.clone();
    }
    d.with_records(kept)
        .expect("subset of a valid domain stays valid")
}

/// Drops students with fewer than `min_responses` records and prunes whatever
/// exercises and concepts are left unreferenced.
pub fn filter_students(d: &Domain, min_responses: usize) -> Result<Domain, CorpusError> {
    if min_responses == 0 {
        return Err(CorpusError::InvalidMinResponses);
    }
    let mut counts = alloc::vec![0usize; d.n_students()];
    for r in d.records() {
        counts[d.students().get(&r.student_id).unwrap()] += 1;
    }
    if counts.iter().all(|&c| c >= min_responses) {
        return Ok(d.clone());
    }
    let kept: Vec<ResponseRecord> = d
        .records()
        .iter()
        .filter(|r| counts[d.students().get(&r.student_id).unwrap()] >= min_responses)
        .cloned()
        .collect();
    d.with_records(kept)
}

/// Disjoint train/validation/test partition of a domain's records.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDomain {
    pub train: Vec<ResponseRecord>,
    pub valid: Vec<ResponseRecord>,
    pub test: Vec<ResponseRecord>,
    pub parent: Domain,
}

impl SplitDomain {
    pub fn name(&self) -> &str {
        &self.parent.name
    }

    pub fn train_obs(&self) -> Vec<Observation> {
        self.train.iter().map(|r| self.parent.observe(r)).collect()
    }

    pub fn valid_obs(&self) -> Vec<Observation> {
        self.valid.iter().map(|r| self.parent.observe(r)).collect()
    }

    pub fn test_obs(&self) -> Vec<Observation> {
        self.test.iter().map(|r| self.parent.observe(r)).collect()
    }
}

pub const DEFAULT_SPLIT: [f64; 3] = [0.7, 0.2, 0.1];

/// Per-student shuffle-and-cut. Each student with `n` records gets
/// `floor(r0 * n)` train and `floor(r1 * n)` validation records; the rest go to test.
/// Students are visited in index order from a single seeded stream, and every
/// output list keeps the original record order.
pub fn split_per_student(
    d: &Domain,
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitDomain, CorpusError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|&r| !(r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(ratios));
    }
    let mut by_student: Vec<Vec<usize>> = alloc::vec![Vec::new(); d.n_students()];
    for (i, r) in d.records().iter().enumerate() {
        by_student[d.students().get(&r.student_id).unwrap()].push(i);
    }
    // 0 = train, 1 = valid, 2 = test
    let mut assignment = alloc::vec![2u8; d.records().len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for positions in &mut by_student {
        positions.shuffle(&mut rng);
        let n = positions.len() as f64;
        let n_train = libm::floor(ratios[0] * n + 1e-9) as usize;
        let n_valid = libm::floor(ratios[1] * n + 1e-9) as usize;
        for (rank, &pos) in positions.iter().enumerate() {
            assignment[pos] = if rank < n_train {
                0
            } else if rank < n_train + n_valid {
                1
            } else {
                2
            };
        }
    }
    let mut split = SplitDomain {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        parent: d.clone(),
    };
    for (r, a) in d.records().iter().zip(assignment) {
        match a {
            0 => split.train.push(r.clone()),
            1 => split.valid.push(r.clone()),
            _ => split.test.push(r.clone()),
        }
    }
    Ok(split)
}

/// Canonical preprocessing: dedup first attempts, then drop sparse students.
pub fn preprocess(d: &Domain, min_responses: usize) -> Result<Domain, CorpusError> {
    filter_students(&dedup_first_attempt(d), min_responses)
}
