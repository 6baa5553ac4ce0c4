//! Language-space encoding of a split domain: profiles -> embeddings -> per-entity
//! language vectors, all derived from training records only.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Observation, SplitDomain};
use crate::embed::{embed_text, mean_pool, EmbedError, TextEmbedder};
use crate::math;
use crate::profiles::{AcrTable, DomainProfiles, ProfileError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Everything training and inference need from one domain, with dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDomain {
    pub name: String,
    pub tem_id: String,
    pub language_dim: usize,
    pub students: Vec<Vec<f64>>,
    pub exercises: Vec<Vec<f64>>,
    pub concepts: Vec<Vec<f64>>,
    pub q_rows: Vec<Vec<usize>>,
    pub train: Vec<Observation>,
    pub valid: Vec<Observation>,
    pub test: Vec<Observation>,
    pub acr: AcrTable,
}

/// Embeds each distinct text once.
pub struct MemoEmbedder<'a, T: TextEmbedder + ?Sized> {
    tem: &'a T,
    memo: BTreeMap<String, Vec<f64>>,
}

impl<'a, T: TextEmbedder + ?Sized> MemoEmbedder<'a, T> {
    pub fn new(tem: &'a T) -> Self {
        Self {
            tem,
            memo: BTreeMap::new(),
        }
    }

    pub fn embed(&mut self, text: &str) -> Result<&[f64], EmbedError> {
        if !self.memo.contains_key(text) {
            let v = embed_text(self.tem, text)?.values;
            self.memo.insert(text.into(), v);
        }
        Ok(&self.memo[text])
    }

    pub fn pooled<S: AsRef<str>>(&mut self, texts: &[S]) -> Result<Vec<f64>, EmbedError> {
        for t in texts {
            self.embed(t.as_ref())?;
        }
        mean_pool(texts.iter().map(|t| self.memo[t.as_ref()].as_slice()))
    }

    pub fn distinct_texts(&self) -> usize {
        self.memo.len()
    }
}

pub fn encode_profiles<T: TextEmbedder + ?Sized>(
    split: &SplitDomain,
    profiles: &DomainProfiles,
    tem: &T,
) -> Result<EncodedDomain, EncodeError> {
    let mut memo = MemoEmbedder::new(tem);
    let concepts = profiles
        .concepts
        .iter()
        .map(|c| memo.embed(&c.text).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    let exercises = profiles
        .exercises
        .iter()
        .map(|e| memo.embed(&e.text).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>, _>>()?;
    let students = profiles
        .students
        .iter()
        .map(|s| {
            let texts: Vec<&str> = s.interactions.iter().map(|i| i.text.as_str()).collect();
            memo.pooled(&texts)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let desc = tem.descriptor();
    Ok(EncodedDomain {
        name: split.name().into(),
        tem_id: desc.tem_id.clone(),
        language_dim: desc.dim,
        students,
        exercises,
        concepts,
        q_rows: split.parent.q_rows().to_vec(),
        train: split.train_obs(),
        valid: split.valid_obs(),
        test: split.test_obs(),
        acr: profiles.acr.clone(),
    })
}

/// Builds training-only profiles for `split` and embeds them with `tem`.
pub fn encode_domain<T: TextEmbedder + ?Sized>(
    split: &SplitDomain,
    tem: &T,
) -> Result<EncodedDomain, EncodeError> {
    let profiles = DomainProfiles::build(split)?;
    encode_profiles(split, &profiles, tem)
}

impl EncodedDomain {
    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_exercises(&self) -> usize {
        self.exercises.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    /// Copy with every language vector replaced by a standard-normal draw.
    pub fn with_random_vectors(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.language_dim;
        let mut draw = |n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| math::standard_normal_vec(&mut rng, dim)).collect()
        };
        let students = draw(self.n_students());
        let exercises = draw(self.n_exercises());
        let concepts = draw(self.n_concepts());
        Self {
            students,
            exercises,
            concepts,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_per_student, Catalog, Domain, ResponseRecord, DEFAULT_SPLIT};
    use crate::embed::LocalHashEmbedder;
    use alloc::vec;

    fn split() -> SplitDomain {
        let cat = Catalog::from_pairs(
            vec![("e1".into(), "c1".into()), ("e2".into(), "c2".into())],
            vec![("c1".into(), "Angle".into()), ("c2".into(), "Linear equations".into())],
        );
        let mut records = Vec::new();
        for s in 0..4u64 {
            for i in 0..10u64 {
                let e = if i % 2 == 0 { "e1" } else { "e2" };
                records.push(ResponseRecord::new(
                    alloc::format!("s{s}"),
                    e,
                    ((i + s) % 3 == 0) as u8,
                    i,
                ));
            }
        }
        let d = Domain::new("toy", records, cat).unwrap();
        split_per_student(&d, DEFAULT_SPLIT, 1).unwrap()
    }

    #[test]
    fn encoding_shapes_and_leakage() {
        let tem = LocalHashEmbedder::new(32, 0).unwrap();
        let s = split();
        let enc = encode_domain(&s, &tem).unwrap();
        assert_eq!(enc.students.len(), 4);
        assert_eq!(enc.exercises.len(), 2);
        assert_eq!(enc.concepts.len(), 2);
        assert!(enc.students.iter().all(|v| v.len() == 32));

        let mut perturbed = s.clone();
        for r in &mut perturbed.test {
            r.score = 1 - r.score;
        }
        let enc2 = encode_domain(&perturbed, &tem).unwrap();
        assert_eq!(enc.students, enc2.students);
        assert_eq!(enc.exercises, enc2.exercises);
        assert_eq!(enc.acr, enc2.acr);
        assert_ne!(enc.test, enc2.test);
    }

    #[test]
    fn random_vectors_keep_shapes() {
        let tem = LocalHashEmbedder::new(16, 0).unwrap();
        let enc = encode_domain(&split(), &tem).unwrap();
        let r = enc.with_random_vectors(5);
        assert_eq!(r.students.len(), enc.students.len());
        assert_ne!(r.students, enc.students);
        assert_eq!(r, enc.with_random_vectors(5));
    }
}
