#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsdiag_core::cdm::CdmVariant;
use zsdiag_core::corpus::{Catalog, Domain, Observation, ResponseRecord};
use zsdiag_core::encode::EncodedDomain;
use zsdiag_core::mapper::MapperParams;
use zsdiag_core::metrics::{DoaOptions, DoaPairs, MasteryMatrix};
use zsdiag_core::model::{Ablation, DiagnosisModel, ModelConfig};
use zsdiag_core::profiles::AcrTable;
use zsdiag_core::train::{batch_gradients, weighted_training_loss, Learner, TrainError};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Random non-empty concept subset, sorted.
pub fn q_row(rng: &mut impl Rng, n_concepts: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n_concepts).collect();
    all.shuffle(rng);
    let take = rng.random_range(1..=n_concepts.min(3));
    let mut row = all[..take].to_vec();
    row.sort_unstable();
    row
}

/// Toy encoded domain with random unit language vectors and `n_records` random
/// training observations.
pub fn toy_domain(
    rng: &mut impl Rng,
    language_dim: usize,
    n_students: usize,
    n_exercises: usize,
    n_concepts: usize,
    n_records: usize,
) -> EncodedDomain {
    let vecs = |rng: &mut _, n| (0..n).map(|_| unit_vector(rng, language_dim)).collect::<Vec<_>>();
    let students = vecs(rng, n_students);
    let exercises = vecs(rng, n_exercises);
    let concepts = vecs(rng, n_concepts);
    let q_rows = (0..n_exercises).map(|_| q_row(rng, n_concepts)).collect();
    let train = (0..n_records)
        .map(|_| Observation {
            student: rng.random_range(0..n_students),
            exercise: rng.random_range(0..n_exercises),
            score: rng.random_range(0..=1),
        })
        .collect();
    EncodedDomain {
        name: "toy".into(),
        tem_id: "toy".into(),
        language_dim,
        students,
        exercises,
        concepts,
        q_rows,
        train,
        valid: Vec::new(),
        test: Vec::new(),
        acr: AcrTable {
            values: vec![0.5; n_exercises],
            imputed: vec![false; n_exercises],
            domain_mean: 0.5,
        },
    }
}

pub fn model(variant: CdmVariant, ablation: Ablation, language_dim: usize, hidden: Vec<usize>, dim: usize, seed: u64) -> DiagnosisModel {
    let mut m = DiagnosisModel::init(
        ModelConfig {
            language_dim,
            hidden,
            dim,
            variant,
            head_width: 4,
            ablation,
        },
        seed,
    );
    m.cdm.project_nonneg();
    m
}

/// Smallest |pre-activation| of any hidden ReLU unit for input `x`.
pub fn relu_margin(mapper: &MapperParams, x: &[f64]) -> f64 {
    let mut current = x.to_vec();
    let mut margin = f64::INFINITY;
    let last = mapper.layers.len() - 1;
    for (i, layer) in mapper.layers.iter().enumerate() {
        let z: Vec<f64> = (0..layer.fan_out)
            .map(|o| layer.bias[o] + layer.row(o).iter().zip(&current).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        if i < last {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            current = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    margin
}

pub fn model_relu_margin(m: &DiagnosisModel, d: &EncodedDomain) -> f64 {
    let Some(mappers) = &m.mappers else {
        return f64::INFINITY;
    };
    let mut margin = f64::INFINITY;
    for x in &d.students {
        margin = margin.min(relu_margin(&mappers.student, x));
    }
    for x in &d.exercises {
        margin = margin.min(relu_margin(&mappers.exercise, x));
    }
    for x in &d.concepts {
        margin = margin.min(relu_margin(&mappers.concept, x));
    }
    margin
}

/// `weight ×` mean BCE of `d.train` at the learner's current parameters.
pub fn batch_loss<L: Learner>(learner: &L, d: &EncodedDomain, weight: f64) -> f64 {
    weighted_training_loss(learner, std::slice::from_ref(d), &[weight]).unwrap() / d.train.len() as f64
}

/// Worst relative error `|a - n| / (|a| + 1e-8)` between the trainer's analytic
/// gradient and a five-point central difference, over `per_group` random
/// coordinates of every parameter group.
pub fn gradient_error<L: Learner>(
    learner: &L,
    d: &EncodedDomain,
    weight: f64,
    per_group: usize,
    rng: &mut impl Rng,
) -> Result<f64, TrainError> {
    const EPS: f64 = 1e-3;
    let (_, grads) = batch_gradients(learner, d, &d.train, weight)?;
    let analytic: Vec<Vec<f64>> = grads.param_slices().iter().map(|s| s.to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (g, group) in analytic.iter().enumerate() {
        for _ in 0..per_group.min(group.len()) {
            let i = rng.random_range(0..group.len());
            let at = |delta: f64| {
                let mut probe = learner.clone();
                probe.params_mut()[g][i] += delta;
                batch_loss(&probe, d, weight)
            };
            let numeric = (8.0 * (at(EPS) - at(-EPS)) - (at(2.0 * EPS) - at(-2.0 * EPS))) / (12.0 * EPS);
            let err = (group[i] - numeric).abs() / (group[i].abs() + 1e-8);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// AUC by enumerating every positive/negative pair.
pub fn brute_auc(scored: &[(f64, u8)]) -> Option<f64> {
    let pos: Vec<f64> = scored.iter().filter(|s| s.1 == 1).map(|s| s.0).collect();
    let neg: Vec<f64> = scored.iter().filter(|s| s.1 == 0).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut twice_wins = 0u64;
    for p in &pos {
        for n in &neg {
            twice_wins += if p > n { 2 } else if p == n { 1 } else { 0 };
        }
    }
    Some(twice_wins as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// DOA by enumerating every ordered student pair and every exercise of each concept.
pub fn brute_doa(m: &MasteryMatrix, records: &[Observation], q_rows: &[Vec<usize>], options: DoaOptions) -> Option<f64> {
    let mut answer: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    for r in records {
        answer.entry((r.student, r.exercise)).or_insert(r.score);
    }
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for k in 0..m.n_concepts {
        let mut terms = Vec::new();
        let mut ordered = 0u64;
        for a in 0..m.n_students {
            for b in 0..m.n_students {
                if !(m.get(a, k) > m.get(b, k)) {
                    continue;
                }
                ordered += 1;
                let (mut agree, mut differ) = (0u32, 0u32);
                for (j, row) in q_rows.iter().enumerate() {
                    if !row.contains(&k) {
                        continue;
                    }
                    if let (Some(&ya), Some(&yb)) = (answer.get(&(a, j)), answer.get(&(b, j))) {
                        if ya != yb {
                            differ += 1;
                            agree += (ya == 1) as u32;
                        }
                    }
                }
                if differ > 0 {
                    terms.push(agree as f64 / differ as f64);
                }
            }
        }
        if terms.is_empty() {
            continue;
        }
        let z = match options.pairs {
            DoaPairs::Comparable => terms.len() as f64,
            DoaPairs::All => ordered as f64,
        };
        terms.sort_by(f64::total_cmp);
        values.push(terms.iter().sum::<f64>() / z);
        weights.push(z);
    }
    if values.is_empty() {
        return None;
    }
    Some(if options.weighted {
        let total: f64 = weights.iter().sum();
        values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    })
}

/// Small raw domain over concepts `c0..` named from `names`.
pub fn raw_domain(name: &str, records: Vec<ResponseRecord>, n_exercises: usize, names: &[&str]) -> Domain {
    let q = (0..n_exercises).map(|j| (format!("e{j}"), format!("c{}", j % names.len())));
    let n = names.iter().enumerate().map(|(k, s)| (format!("c{k}"), s.to_string()));
    Domain::new(name, records, Catalog::from_pairs(q, n)).unwrap()
}
