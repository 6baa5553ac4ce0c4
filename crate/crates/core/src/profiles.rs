//! Textual cognitive profiles for concepts, exercises and student interactions.
//!
//! Everything here is computed from training records only. The rendered strings are
//! fixed templates (version [`TEMPLATE_VERSION`]); they are the cache keys for the
//! embedding layer, so any wording change must bump the version.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Domain, ResponseRecord, SplitDomain};
use crate::math::format_half_even;

pub const TEMPLATE_VERSION: &str = "tcp-v1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("concept `{0}` has an empty name")]
    EmptyName(String),
    #[error("exercise `{0}` has no linked concepts")]
    NoConcepts(String),
    #[error("exercise `{0}` has no training records")]
    NoTrainingData(String),
    #[error("student `{0}` has no training records")]
    NoTrainingRecords(String),
    #[error("domain has no training records")]
    EmptyTraining,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptProfile {
    pub concept_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseProfile {
    pub exercise_id: String,
    pub acr: f64,
    /// `acr` is the domain training mean because the exercise had no training records.
    pub imputed: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionProfile {
    pub student_id: String,
    pub exercise_id: String,
    pub score: u8,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentProfile {
    pub student_id: String,
    pub interactions: Vec<InteractionProfile>,
}

/// Average correct rate of one exercise over the given training records.
pub fn exercise_acr(exercise_id: &str, train: &[ResponseRecord]) -> Result<f64, ProfileError> {
    let (hits, total) = train
        .iter()
        .filter(|r| r.exercise_id == exercise_id)
        .fold((0u64, 0u64), |(h, t), r| (h + r.score as u64, t + 1));
    if total == 0 {
        return Err(ProfileError::NoTrainingData(exercise_id.into()));
    }
    Ok(hits as f64 / total as f64)
}

/// Per-exercise ACRs for a domain, with cold exercises imputed by the training mean.
#[derive(Debug, Clone, PartialEq)]
pub struct AcrTable {
    pub values: Vec<f64>,
    pub imputed: Vec<bool>,
    pub domain_mean: f64,
}

impl AcrTable {
    pub fn from_training(domain: &Domain, train: &[ResponseRecord]) -> Result<Self, ProfileError> {
        if train.is_empty() {
            return Err(ProfileError::EmptyTraining);
        }
        let n = domain.n_exercises();
        let mut hits = alloc::vec![0u64; n];
        let mut totals = alloc::vec![0u64; n];
        for r in train {
            let j = domain.exercises().get(&r.exercise_id).expect("exercise in domain");
            hits[j] += r.score as u64;
            totals[j] += 1;
        }
        let domain_mean =
            hits.iter().sum::<u64>() as f64 / totals.iter().sum::<u64>() as f64;
        let mut values = Vec::with_capacity(n);
        let mut imputed = Vec::with_capacity(n);
        for j in 0..n {
            if totals[j] == 0 {
                values.push(domain_mean);
                imputed.push(true);
            } else {
                values.push(hits[j] as f64 / totals[j] as f64);
                imputed.push(false);
            }
        }
        Ok(Self {
            values,
            imputed,
            domain_mean,
        })
    }
}

pub fn render_concept_profile(concept_id: &str, name: &str) -> Result<ConceptProfile, ProfileError> {
    let text = name.trim();
    if text.is_empty() {
        return Err(ProfileError::EmptyName(concept_id.into()));
    }
    Ok(ConceptProfile {
        concept_id: concept_id.into(),
        text: text.into(),
    })
}

fn concept_list(names: &[&str]) -> String {
    let mut sorted: Vec<&str> = names.iter().map(|n| n.trim()).collect();
    sorted.sort_unstable();
    sorted.join(", ")
}

pub fn render_exercise_profile(
    exercise_id: &str,
    acr: f64,
    concept_names: &[&str],
) -> Result<ExerciseProfile, ProfileError> {
    if concept_names.is_empty() {
        return Err(ProfileError::NoConcepts(exercise_id.into()));
    }
    let text = format!(
        "Exercise on concepts: {}. Average correct rate: {}.",
        concept_list(concept_names),
        format_half_even(acr, 2)
    );
    Ok(ExerciseProfile {
        exercise_id: exercise_id.into(),
        acr,
        imputed: false,
        text,
    })
}

pub fn interaction_text(acr: f64, score: u8, concept_names: &[&str]) -> String {
    format!(
        "Concepts: {}. Exercise average correct rate: {}. Student answer: {}.",
        concept_list(concept_names),
        format_half_even(acr, 2),
        if score == 1 { "correct" } else { "incorrect" }
    )
}

pub fn render_interaction_profile(
    record: &ResponseRecord,
    acr: f64,
    concept_names: &[&str],
) -> Result<InteractionProfile, ProfileError> {
    if concept_names.is_empty() {
        return Err(ProfileError::NoConcepts(record.exercise_id.clone()));
    }
    Ok(InteractionProfile {
        student_id: record.student_id.clone(),
        exercise_id: record.exercise_id.clone(),
        score: record.score,
        text: interaction_text(acr, record.score, concept_names),
    })
}

/// Names of the concepts linked to the exercise at dense index `exercise`.
pub fn exercise_concept_names(domain: &Domain, exercise: usize) -> Vec<&str> {
    domain
        .q_row(exercise)
        .iter()
        .map(|&k| domain.concept_name(k))
        .collect()
}

/// One interaction per training record of `student_id`, in record order.
pub fn build_student_profile(
    student_id: &str,
    split: &SplitDomain,
    acr: &AcrTable,
) -> Result<StudentProfile, ProfileError> {
    let domain = &split.parent;
    let interactions = split
        .train
        .iter()
        .filter(|r| r.student_id == student_id)
        .map(|r| {
            let j = domain.exercises().get(&r.exercise_id).expect("exercise in domain");
            render_interaction_profile(r, acr.values[j], &exercise_concept_names(domain, j))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if interactions.is_empty() {
        return Err(ProfileError::NoTrainingRecords(student_id.into()));
    }
    Ok(StudentProfile {
        student_id: student_id.into(),
        interactions,
    })
}

/// All profiles of a split domain, indexed like the parent domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainProfiles {
    pub concepts: Vec<ConceptProfile>,
    pub exercises: Vec<ExerciseProfile>,
    pub students: Vec<StudentProfile>,
    pub acr: AcrTable,
}

impl DomainProfiles {
    pub fn build(split: &SplitDomain) -> Result<Self, ProfileError> {
        let domain = &split.parent;
        let acr = AcrTable::from_training(domain, &split.train)?;
        let concepts = (0..domain.n_concepts())
            .map(|k| render_concept_profile(domain.concepts().id(k), domain.concept_name(k)))
            .collect::<Result<Vec<_>, _>>()?;
        let exercises = (0..domain.n_exercises())
            .map(|j| {
                let mut p = render_exercise_profile(
                    domain.exercises().id(j),
                    acr.values[j],
                    &exercise_concept_names(domain, j),
                )?;
                p.imputed = acr.imputed[j];
                Ok(p)
            })
            .collect::<Result<Vec<_>, ProfileError>>()?;

        // Single pass over training records instead of one scan per student.
        let mut interactions: Vec<Vec<InteractionProfile>> =
            alloc::vec![Vec::new(); domain.n_students()];
        for r in &split.train {
            let obs = domain.observe(r);
            interactions[obs.student].push(render_interaction_profile(
                r,
                acr.values[obs.exercise],
                &exercise_concept_names(domain, obs.exercise),
            )?);
        }
        let students = interactions
            .into_iter()
            .enumerate()
            .map(|(i, list)| {
                let student_id = domain.students().id(i);
                if list.is_empty() {
                    return Err(ProfileError::NoTrainingRecords(student_id.into()));
                }
                Ok(StudentProfile {
                    student_id: student_id.into(),
                    interactions: list,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            concepts,
            exercises,
            students,
            acr,
        })
    }
}
