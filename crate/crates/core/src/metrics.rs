//! Score-prediction AUC and mastery degree of agreement (DOA).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Observation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("AUC needs both classes; got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },
    #[error("non-finite prediction")]
    NonFinite,
    #[error("no concept has a comparable student pair")]
    NoValidConcepts,
    #[error("evaluation set is empty")]
    EmptyEvaluation,
    #[error("mastery matrix has {rows} rows but record references student {student}")]
    MissingMasteryRow { rows: usize, student: usize },
}

/// Students x concepts matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasteryMatrix {
    pub n_students: usize,
    pub n_concepts: usize,
    pub values: Vec<f64>,
}

impl MasteryMatrix {
    pub fn from_rows(rows: &[Vec<f64>], n_concepts: usize) -> Self {
        let mut values = Vec::with_capacity(rows.len() * n_concepts);
        for r in rows {
            assert_eq!(r.len(), n_concepts, "ragged mastery rows");
            values.extend_from_slice(r);
        }
        Self {
            n_students: rows.len(),
            n_concepts,
            values,
        }
    }

    pub fn get(&self, student: usize, concept: usize) -> f64 {
        self.values[student * self.n_concepts + concept]
    }

    pub fn row(&self, student: usize) -> &[f64] {
        &self.values[student * self.n_concepts..(student + 1) * self.n_concepts]
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic
/// `P(p_pos > p_neg) + 0.5 P(p_pos = p_neg)`, computed with integer counts.
pub fn auc(predictions: &[(f64, u8)]) -> Result<f64, MetricError> {
    if predictions.iter().any(|(p, _)| !p.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let positives = predictions.iter().filter(|(_, y)| *y == 1).count();
    let negatives = predictions.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass {
            positives,
            negatives,
        });
    }
    let mut sorted: Vec<(f64, u8)> = predictions.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // twice the Mann-Whitney U: each positive scores 2 per lower negative, 1 per tie
    let mut twice_u: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u128, 0u128);
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            if sorted[j].1 == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_u += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    Ok(twice_u as f64 / (2 * positives as u128 * negatives as u128) as f64)
}

/// Which ordered pairs normalize a concept's DOA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DoaPairs {
    /// Pairs with higher mastery that also share at least one differently scored
    /// exercise on the concept.
    #[default]
    Comparable,
    /// Every pair with higher mastery; pairs without shared evidence add zero.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DoaOptions {
    pub pairs: DoaPairs,
    /// weight each concept by its pair count instead of a plain mean
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaReport {
    pub doa: f64,
    /// per-concept DOA, `None` where the concept had no valid pair
    pub per_concept: Vec<Option<f64>>,
    pub n_concepts: usize,
}

/// Sum in ascending order so the result does not depend on enumeration order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

pub fn doa(
    mastery: &MasteryMatrix,
    records: &[Observation],
    q_rows: &[Vec<usize>],
    options: DoaOptions,
) -> Result<DoaReport, MetricError> {
    // exercise -> (student -> score), first record wins
    let mut answers: BTreeMap<usize, BTreeMap<usize, u8>> = BTreeMap::new();
    for r in records {
        if r.student >= mastery.n_students {
            return Err(MetricError::MissingMasteryRow {
                rows: mastery.n_students,
                student: r.student,
            });
        }
        answers
            .entry(r.exercise)
            .or_default()
            .entry(r.student)
            .or_insert(r.score);
    }
    let mut by_concept: Vec<Vec<usize>> = alloc::vec![Vec::new(); mastery.n_concepts];
    for (&j, _) in &answers {
        for &k in &q_rows[j] {
            by_concept[k].push(j);
        }
    }

    let mut per_concept = Vec::with_capacity(mastery.n_concepts);
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for (k, exercises) in by_concept.iter().enumerate() {
        // (lo, hi) -> [lo correct & hi incorrect, hi correct & lo incorrect, differing]
        let mut pairs: BTreeMap<(usize, usize), [u32; 3]> = BTreeMap::new();
        for j in exercises {
            let students = &answers[j];
            for (&a, &ya) in students {
                if ya != 1 {
                    continue;
                }
                for (&b, &yb) in students {
                    if yb != 0 {
                        continue;
                    }
                    let key = (a.min(b), a.max(b));
                    let e = pairs.entry(key).or_insert([0; 3]);
                    e[if a < b { 0 } else { 1 }] += 1;
                    e[2] += 1;
                }
            }
        }
        let mut terms = Vec::new();
        for (&(lo, hi), &[lo_wins, hi_wins, differing]) in &pairs {
            let (m_lo, m_hi) = (mastery.get(lo, k), mastery.get(hi, k));
            if m_lo > m_hi {
                terms.push(lo_wins as f64 / differing as f64);
            } else if m_hi > m_lo {
                terms.push(hi_wins as f64 / differing as f64);
            }
        }
        if terms.is_empty() {
            per_concept.push(None);
            continue;
        }
        let z = match options.pairs {
            DoaPairs::Comparable => terms.len() as f64,
            DoaPairs::All => strictly_ordered_pairs(mastery, k) as f64,
        };
        let value = ordered_sum(terms) / z;
        per_concept.push(Some(value));
        values.push(value);
        weights.push(z);
    }
    if values.is_empty() {
        return Err(MetricError::NoValidConcepts);
    }
    let doa = if options.weighted {
        let total: f64 = weights.iter().sum();
        values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    Ok(DoaReport {
        doa,
        n_concepts: values.len(),
        per_concept,
    })
}

/// Number of ordered pairs `(a, b)` with `mastery[a,k] > mastery[b,k]`.
fn strictly_ordered_pairs(mastery: &MasteryMatrix, k: usize) -> u64 {
    let mut column: Vec<f64> = (0..mastery.n_students).map(|s| mastery.get(s, k)).collect();
    column.sort_by(f64::total_cmp);
    let n = column.len() as u64;
    let mut ties = 0u64;
    let mut i = 0;
    while i < column.len() {
        let mut j = i;
        while j < column.len() && column[j] == column[i] {
            j += 1;
        }
        let t = (j - i) as u64;
        ties += t * (t - 1) / 2;
        i = j;
    }
    n * (n - 1) / 2 - ties
}

/// Metrics of one evaluated split.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub auc: f64,
    pub doa: f64,
    pub n_records: usize,
    pub n_doa_concepts: usize,
    pub seed: u64,
    pub model_digest: String,
}

/// AUC of `predictions` (aligned with `records`) plus DOA of `mastery` on `records`.
pub fn evaluate(
    predictions: &[f64],
    records: &[Observation],
    mastery: &MasteryMatrix,
    q_rows: &[Vec<usize>],
    options: DoaOptions,
    seed: u64,
    model_digest: &str,
) -> Result<EvalReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyEvaluation);
    }
    let scored: Vec<(f64, u8)> = predictions
        .iter()
        .zip(records)
        .map(|(&p, r)| (p, r.score))
        .collect();
    let auc = auc(&scored)?;
    let report = doa(mastery, records, q_rows, options)?;
    Ok(EvalReport {
        auc,
        doa: report.doa,
        n_records: records.len(),
        n_doa_concepts: report.n_concepts,
        seed,
        model_digest: model_digest.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn obs(student: usize, exercise: usize, score: u8) -> Observation {
        Observation {
            student,
            exercise,
            score,
        }
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[(0.9, 1), (0.8, 1), (0.2, 0), (0.1, 0)]).unwrap(), 1.0);
        assert_eq!(auc(&[(0.4, 1), (0.4, 0), (0.4, 1)]).unwrap(), 0.5);
        assert_eq!(auc(&[(0.9, 1), (0.8, 0), (0.7, 1), (0.6, 0)]).unwrap(), 0.75);
        assert!(matches!(auc(&[(0.3, 1)]), Err(MetricError::SingleClass { .. })));
        assert_eq!(auc(&[(f64::NAN, 1), (0.2, 0)]), Err(MetricError::NonFinite));
    }

    #[test]
    fn doa_single_pair() {
        let q = vec![vec![0]];
        let records = [obs(0, 0, 1), obs(1, 0, 0)];
        let agree = MasteryMatrix::from_rows(&[vec![0.8], vec![0.3]], 1);
        assert_eq!(doa(&agree, &records, &q, DoaOptions::default()).unwrap().doa, 1.0);
        let disagree = MasteryMatrix::from_rows(&[vec![0.3], vec![0.8]], 1);
        assert_eq!(doa(&disagree, &records, &q, DoaOptions::default()).unwrap().doa, 0.0);
    }

    #[test]
    fn doa_without_evidence_fails() {
        let q = vec![vec![0]];
        let m = MasteryMatrix::from_rows(&[vec![0.8], vec![0.3]], 1);
        let records = [obs(0, 0, 1), obs(1, 0, 1)];
        assert_eq!(
            doa(&m, &records, &q, DoaOptions::default()),
            Err(MetricError::NoValidConcepts)
        );
    }

    #[test]
    fn all_pairs_normalization_counts_pairs_without_evidence() {
        // three students, only students 0 and 1 share an exercise
        let q = vec![vec![0], vec![0]];
        let m = MasteryMatrix::from_rows(&[vec![0.9], vec![0.5], vec![0.1]], 1);
        let records = [obs(0, 0, 1), obs(1, 0, 0), obs(2, 1, 1)];
        let comparable = doa(&m, &records, &q, DoaOptions::default()).unwrap();
        assert_eq!(comparable.doa, 1.0);
        let all = doa(
            &m,
            &records,
            &q,
            DoaOptions {
                pairs: DoaPairs::All,
                weighted: false,
            },
        )
        .unwrap();
        assert!((all.doa - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_empty_split() {
        let m = MasteryMatrix::from_rows(&[vec![0.5]], 1);
        assert_eq!(
            evaluate(&[], &[], &m, &[vec![0]], DoaOptions::default(), 0, ""),
            Err(MetricError::EmptyEvaluation)
        );
    }
}
