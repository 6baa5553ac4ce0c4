//! Zero-shot diagnosis of an unseen target domain and student profile editing, both
//! with every trained parameter frozen.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cdm::{CdmError, CdmInput};
use crate::corpus::{Observation, SplitDomain};
use crate::embed::{EmbedError, TextEmbedder};
use crate::encode::{encode_domain, EncodeError, EncodedDomain, MemoEmbedder};
use crate::mapper::{MapperError, MapperRole};
use crate::metrics::MasteryMatrix;
use crate::profiles::{interaction_text, AcrTable};
use crate::train::{model_inputs, predict_records, CognitiveDomain, Learner, TrainError, TrainedModel};

/// Mixing weight of the old profile when editing.
pub const DEFAULT_EDIT_ALPHA: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ZeroShotError {
    #[error("model was trained with embedder `{expected}`, got `{got}`")]
    TemMismatch { expected: String, got: String },
    #[error("target domain `{0}` has no training records to build profiles from")]
    EmptyTargetTrain(String),
    #[error("profile edit has no new interactions")]
    EmptyEdit,
    #[error("mixing weight {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Cdm(#[from] CdmError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDiagnosis {
    pub domain: String,
    pub cognitive: CognitiveDomain,
    pub mastery: MasteryMatrix,
    pub test_records: Vec<Observation>,
    /// predicted probabilities aligned with `test_records`
    pub predictions: Vec<f64>,
    pub digest_before: [u8; 32],
    pub digest_after: [u8; 32],
}

impl TargetDiagnosis {
    pub fn parameters_unchanged(&self) -> bool {
        self.digest_before == self.digest_after
    }
}

fn check_tem(model: &TrainedModel, tem_id: &str) -> Result<(), ZeroShotError> {
    if model.tem_id != tem_id {
        return Err(ZeroShotError::TemMismatch {
            expected: model.tem_id.clone(),
            got: tem_id.into(),
        });
    }
    Ok(())
}

/// Mastery rows for every student given cognitive vectors.
pub fn mastery_matrix(model: &TrainedModel, cog: &CognitiveDomain) -> Result<MasteryMatrix, CdmError> {
    let rows = cog
        .students
        .iter()
        .map(|s| model.model.cdm.mastery(s, &cog.concepts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MasteryMatrix::from_rows(&rows, cog.concepts.len()))
}

/// Diagnoses an already encoded target domain.
pub fn diagnose_encoded(model: &TrainedModel, target: &EncodedDomain) -> Result<TargetDiagnosis, ZeroShotError> {
    check_tem(model, &target.tem_id)?;
    if target.train.is_empty() {
        return Err(ZeroShotError::EmptyTargetTrain(target.name.clone()));
    }
    let digest_before = model.model.digest();
    let inputs = model_inputs(target, model.config.ablation, model.config.seed);
    let cognitive = model.model.cognitive_domain(&inputs)?;
    let mastery = mastery_matrix(model, &cognitive)?;
    let predictions = predict_records(&model.model.cdm, &cognitive, &target.q_rows, &target.test)?;
    Ok(TargetDiagnosis {
        domain: target.name.clone(),
        cognitive,
        mastery,
        test_records: target.test.clone(),
        predictions,
        digest_before,
        digest_after: model.model.digest(),
    })
}

/// Builds profiles from the target's training records, embeds them with `tem` and
/// runs the frozen model on them.
pub fn diagnose_target<T: TextEmbedder + ?Sized>(
    model: &TrainedModel,
    target: &SplitDomain,
    tem: &T,
) -> Result<TargetDiagnosis, ZeroShotError> {
    check_tem(model, &tem.descriptor().tem_id)?;
    if target.train.is_empty() {
        return Err(ZeroShotError::EmptyTargetTrain(target.name().into()));
    }
    let encoded = encode_domain(target, tem)?;
    diagnose_encoded(model, &encoded)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEdit {
    pub mastery_before: Vec<f64>,
    pub mastery_after: Vec<f64>,
    /// per-exercise probabilities before and after the edit, indexed by exercise
    pub predictions_before: Vec<f64>,
    pub predictions_after: Vec<f64>,
}

/// Which entity a new interaction is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditTarget {
    Exercise(usize),
    Concept(usize),
}

/// Interaction text for a hypothetical new answer. A concept-level answer uses the
/// mean ACR of the concept's exercises.
pub fn edit_interaction_text(
    target: &SplitDomain,
    acr: &AcrTable,
    about: EditTarget,
    score: u8,
) -> String {
    let domain = &target.parent;
    match about {
        EditTarget::Exercise(j) => {
            let names = crate::profiles::exercise_concept_names(domain, j);
            interaction_text(acr.values[j], score, &names)
        }
        EditTarget::Concept(k) => {
            let linked: Vec<f64> = (0..domain.n_exercises())
                .filter(|&j| domain.q_row(j).contains(&k))
                .map(|j| acr.values[j])
                .collect();
            let rate = if linked.is_empty() {
                acr.domain_mean
            } else {
                linked.iter().sum::<f64>() / linked.len() as f64
            };
            interaction_text(rate, score, &[domain.concept_name(k)])
        }
    }
}

/// Recomputes one student's mastery from `alpha · old + (1 - alpha) · new`, where
/// `old` and `new` are mean-pooled interaction embeddings, through the frozen
/// student mapper.
pub fn edit_profile<T: TextEmbedder + ?Sized, S: AsRef<str>>(
    model: &TrainedModel,
    target: &EncodedDomain,
    old_interactions: &[S],
    new_interactions: &[S],
    alpha: f64,
    tem: &T,
) -> Result<ProfileEdit, ZeroShotError> {
    check_tem(model, &tem.descriptor().tem_id)?;
    if new_interactions.is_empty() {
        return Err(ZeroShotError::EmptyEdit);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ZeroShotError::InvalidAlpha(alpha));
    }
    let mut memo = MemoEmbedder::new(tem);
    let old = memo.pooled(old_interactions)?;
    let new = memo.pooled(new_interactions)?;
    let combined: Vec<f64> = old
        .iter()
        .zip(&new)
        .map(|(o, n)| alpha * o + (1.0 - alpha) * n)
        .collect();

    let inputs = model_inputs(target, model.config.ablation, model.config.seed);
    let exercises = (0..inputs.n_exercises())
        .map(|j| model.model.represent(&inputs, MapperRole::Exercise, j).map(|(v, _)| v))
        .collect::<Result<Vec<_>, _>>()?;
    let concepts = (0..inputs.n_concepts())
        .map(|k| model.model.represent(&inputs, MapperRole::Concept, k).map(|(v, _)| v))
        .collect::<Result<Vec<_>, _>>()?;

    let outcome = |language: &[f64]| -> Result<(Vec<f64>, Vec<f64>), ZeroShotError> {
        let student = model.model.map(MapperRole::Student, language)?;
        let mastery = model.model.cdm.mastery(&student, &concepts)?;
        let predictions = exercises
            .iter()
            .enumerate()
            .map(|(j, e)| {
                model.model.cdm.predict(&CdmInput {
                    student: &student,
                    exercise: e,
                    concepts: &concepts,
                    q_row: &target.q_rows[j],
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((mastery, predictions))
    };
    let (mastery_before, predictions_before) = outcome(&old)?;
    let (mastery_after, predictions_after) = outcome(&combined)?;
    Ok(ProfileEdit {
        mastery_before,
        mastery_after,
        predictions_before,
        predictions_after,
    })
}
