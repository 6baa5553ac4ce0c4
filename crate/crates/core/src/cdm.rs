//! Interaction functions that turn cognitive vectors into a correctness probability.
//!
//! All three variants are independent of the concept count `K`: concept vectors enter
//! through dot products and the ncdm/kancd prediction head is one small network shared
//! by every concept, averaged over the exercise's active concepts.
//!
//! * `mirt`:  `p = σ(h_s·h_e + w_b·h_e)`
//! * `ncdm`:  `mas_k = σ(h_s·h_k)`, `diff_k = σ(h_e·h_k)`, `disc = σ(w_d·h_e)`,
//!   `x_k = disc·(mas_k − diff_k)`, `p = σ(mean_{k∈q} head(x_k))`
//! * `kancd`: as ncdm but `diff_k = σ(Σ_i λ_i h_e,i h_k,i)` with a learned per-dimension scale λ.
//!
//! `head(x) = Σ_h w2_h · tanh(w1_h·x + b1_h) + b2` with `w1, w2 ≥ 0`, which keeps `p`
//! non-decreasing in every active mastery entry.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{self, sigmoid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CdmError {
    #[error("expected vector of length {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("exercise has no active concepts")]
    EmptyQRow,
    #[error("concept index {index} out of range for {count} concepts")]
    ConceptOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CdmVariant {
    Mirt,
    Ncdm,
    Kancd,
}

impl CdmVariant {
    pub fn name(self) -> &'static str {
        match self {
            CdmVariant::Mirt => "mirt",
            CdmVariant::Ncdm => "ncdm",
            CdmVariant::Kancd => "kancd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mirt" => Some(CdmVariant::Mirt),
            "ncdm" => Some(CdmVariant::Ncdm),
            "kancd" => Some(CdmVariant::Kancd),
            _ => None,
        }
    }
}

/// Parameters of the integrated interaction function. Vectors a variant does not use
/// are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CdmParams {
    pub variant: CdmVariant,
    pub dim: usize,
    /// mirt: exercise bias read-out `w_b`
    pub exercise_bias: Vec<f64>,
    /// ncdm/kancd: discrimination read-out `w_d`
    pub disc: Vec<f64>,
    /// kancd: per-dimension scale λ of the difficulty interaction
    pub diff_scale: Vec<f64>,
    pub head_w1: Vec<f64>,
    pub head_b1: Vec<f64>,
    pub head_w2: Vec<f64>,
    pub head_b2: Vec<f64>,
}

/// Borrowed inputs for one (student, exercise) prediction.
#[derive(Debug, Clone, Copy)]
pub struct CdmInput<'a> {
    pub student: &'a [f64],
    pub exercise: &'a [f64],
    /// all concept vectors of the domain, indexed by concept
    pub concepts: &'a [Vec<f64>],
    /// active concept indices of the exercise
    pub q_row: &'a [usize],
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct CdmCache {
    pub logit: f64,
    pub p: f64,
    mas: Vec<f64>,
    diff: Vec<f64>,
    disc: f64,
    x: Vec<f64>,
    /// tanh activations, `q_row.len() x head_width`
    hidden: Vec<f64>,
}

/// Gradients of one backward pass w.r.t. the entity vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CdmInputGrads {
    pub student: Vec<f64>,
    pub exercise: Vec<f64>,
    /// one row per domain concept; rows of inactive concepts stay zero
    pub concepts: Vec<Vec<f64>>,
}

impl CdmParams {
    pub fn new(variant: CdmVariant, dim: usize, head_width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let readout = |rng: &mut ChaCha8Rng| math::uniform_vec(rng, dim, math::xavier_bound(dim, 1));
        match variant {
            CdmVariant::Mirt => Self {
                variant,
                dim,
                exercise_bias: readout(&mut rng),
                ..Self::empty(variant, dim)
            },
            CdmVariant::Ncdm | CdmVariant::Kancd => {
                let disc = readout(&mut rng);
                let abs = |v: Vec<f64>| v.into_iter().map(f64::abs).collect::<Vec<_>>();
                let w1 = abs(math::uniform_vec(&mut rng, head_width, math::xavier_bound(1, head_width)));
                let w2 = abs(math::uniform_vec(&mut rng, head_width, math::xavier_bound(head_width, 1)));
                Self {
                    variant,
                    dim,
                    disc,
                    diff_scale: if variant == CdmVariant::Kancd {
                        alloc::vec![1.0; dim]
                    } else {
                        Vec::new()
                    },
                    head_w1: w1,
                    head_b1: alloc::vec![0.0; head_width],
                    head_w2: w2,
                    head_b2: alloc::vec![0.0],
                    ..Self::empty(variant, dim)
                }
            }
        }
    }

    fn empty(variant: CdmVariant, dim: usize) -> Self {
        Self {
            variant,
            dim,
            exercise_bias: Vec::new(),
            disc: Vec::new(),
            diff_scale: Vec::new(),
            head_w1: Vec::new(),
            head_b1: Vec::new(),
            head_w2: Vec::new(),
            head_b2: Vec::new(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |v: &Vec<f64>| alloc::vec![0.0; v.len()];
        Self {
            variant: self.variant,
            dim: self.dim,
            exercise_bias: z(&self.exercise_bias),
            disc: z(&self.disc),
            diff_scale: z(&self.diff_scale),
            head_w1: z(&self.head_w1),
            head_b1: z(&self.head_b1),
            head_w2: z(&self.head_w2),
            head_b2: z(&self.head_b2),
        }
    }

    pub fn head_width(&self) -> usize {
        self.head_w1.len()
    }

    /// Named parameter groups in a fixed order; empty groups included.
    pub fn named_slices(&self) -> [(&'static str, &[f64]); 7] {
        [
            ("exercise_bias", &self.exercise_bias),
            ("disc", &self.disc),
            ("diff_scale", &self.diff_scale),
            ("head.w1", &self.head_w1),
            ("head.b1", &self.head_b1),
            ("head.w2", &self.head_w2),
            ("head.b2", &self.head_b2),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.exercise_bias,
            &mut self.disc,
            &mut self.diff_scale,
            &mut self.head_w1,
            &mut self.head_b1,
            &mut self.head_w2,
            &mut self.head_b2,
        ]
    }

    /// Clamps the prediction-head weights at zero (ncdm/kancd); no-op for mirt.
    pub fn project_nonneg(&mut self) {
        if self.variant == CdmVariant::Mirt {
            return;
        }
        for w in self.head_w1.iter_mut().chain(self.head_w2.iter_mut()) {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<(), CdmError> {
        if v.len() != self.dim {
            return Err(CdmError::DimMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `σ(h_s · h_k)` for every concept.
    pub fn mastery(&self, student: &[f64], concepts: &[Vec<f64>]) -> Result<Vec<f64>, CdmError> {
        self.check_len(student)?;
        concepts
            .iter()
            .map(|c| {
                self.check_len(c)?;
                Ok(sigmoid(math::dot(student, c)))
            })
            .collect()
    }

    fn difficulty(&self, exercise: &[f64], concept: &[f64]) -> f64 {
        match self.variant {
            CdmVariant::Kancd => {
                let mut acc = 0.0;
                for i in 0..self.dim {
                    acc += self.diff_scale[i] * exercise[i] * concept[i];
                }
                sigmoid(acc)
            }
            _ => sigmoid(math::dot(exercise, concept)),
        }
    }

    /// Head output for one concept input; returns the pre-sigmoid contribution and
    /// pushes the hidden activations into `hidden`.
    fn head(&self, x: f64, hidden: &mut Vec<f64>) -> f64 {
        let mut out = self.head_b2[0];
        for h in 0..self.head_width() {
            let t = math::tanh(self.head_w1[h] * x + self.head_b1[h]);
            hidden.push(t);
            out += self.head_w2[h] * t;
        }
        out
    }

    /// Logit of the ncdm/kancd prediction from already computed per-concept
    /// mastery, difficulty and the exercise discrimination.
    pub fn interaction_logit(&self, mastery: &[f64], difficulty: &[f64], disc: f64) -> f64 {
        let mut scratch = Vec::new();
        let total: f64 = mastery
            .iter()
            .zip(difficulty)
            .map(|(m, d)| self.head(disc * (m - d), &mut scratch))
            .sum();
        total / mastery.len() as f64
    }

    fn validate(&self, input: &CdmInput<'_>) -> Result<(), CdmError> {
        self.check_len(input.student)?;
        self.check_len(input.exercise)?;
        if input.q_row.is_empty() {
            return Err(CdmError::EmptyQRow);
        }
        for &k in input.q_row {
            let c = input.concepts.get(k).ok_or(CdmError::ConceptOutOfRange {
                index: k,
                count: input.concepts.len(),
            })?;
            self.check_len(c)?;
        }
        Ok(())
    }

    pub fn predict(&self, input: &CdmInput<'_>) -> Result<f64, CdmError> {
        Ok(self.forward(input)?.p)
    }

    pub fn forward(&self, input: &CdmInput<'_>) -> Result<CdmCache, CdmError> {
        self.validate(input)?;
        let mut cache = CdmCache::default();
        match self.variant {
            CdmVariant::Mirt => {
                cache.logit = math::dot(input.student, input.exercise)
                    + math::dot(&self.exercise_bias, input.exercise);
            }
            CdmVariant::Ncdm | CdmVariant::Kancd => {
                cache.disc = sigmoid(math::dot(&self.disc, input.exercise));
                let mut total = 0.0;
                for &k in input.q_row {
                    let c = &input.concepts[k];
                    let mas = sigmoid(math::dot(input.student, c));
                    let diff = self.difficulty(input.exercise, c);
                    let x = cache.disc * (mas - diff);
                    total += self.head(x, &mut cache.hidden);
                    cache.mas.push(mas);
                    cache.diff.push(diff);
                    cache.x.push(x);
                }
                cache.logit = total / input.q_row.len() as f64;
            }
        }
        cache.p = sigmoid(cache.logit);
        Ok(cache)
    }

    /// Reverse pass given `upstream = ∂L/∂logit`. Parameter gradients accumulate into
    /// `param_grads`; entity gradients accumulate into `input_grads`.
    pub fn backward_logit(
        &self,
        input: &CdmInput<'_>,
        cache: &CdmCache,
        upstream: f64,
        param_grads: &mut CdmParams,
        input_grads: &mut CdmInputGrads,
    ) {
        let g = upstream;
        match self.variant {
            CdmVariant::Mirt => {
                math::axpy(g, input.exercise, &mut input_grads.student);
                math::axpy(g, input.student, &mut input_grads.exercise);
                math::axpy(g, &self.exercise_bias, &mut input_grads.exercise);
                math::axpy(g, input.exercise, &mut param_grads.exercise_bias);
            }
            CdmVariant::Ncdm | CdmVariant::Kancd => {
                let width = self.head_width();
                let g_out = g / input.q_row.len() as f64;
                let mut g_disc = 0.0;
                for (slot, &k) in input.q_row.iter().enumerate() {
                    let hidden = &cache.hidden[slot * width..(slot + 1) * width];
                    let x = cache.x[slot];
                    param_grads.head_b2[0] += g_out;
                    let mut g_x = 0.0;
                    for h in 0..width {
                        param_grads.head_w2[h] += g_out * hidden[h];
                        let g_z = g_out * self.head_w2[h] * (1.0 - hidden[h] * hidden[h]);
                        param_grads.head_w1[h] += g_z * x;
                        param_grads.head_b1[h] += g_z;
                        g_x += g_z * self.head_w1[h];
                    }
                    let (mas, diff) = (cache.mas[slot], cache.diff[slot]);
                    g_disc += g_x * (mas - diff);
                    let g_mas = g_x * cache.disc * mas * (1.0 - mas);
                    let g_diff = -g_x * cache.disc * diff * (1.0 - diff);
                    let c = &input.concepts[k];
                    math::axpy(g_mas, c, &mut input_grads.student);
                    math::axpy(g_mas, input.student, &mut input_grads.concepts[k]);
                    match self.variant {
                        CdmVariant::Kancd => {
                            let gc = &mut input_grads.concepts[k];
                            for i in 0..self.dim {
                                let s = self.diff_scale[i];
                                param_grads.diff_scale[i] += g_diff * input.exercise[i] * c[i];
                                input_grads.exercise[i] += g_diff * s * c[i];
                                gc[i] += g_diff * s * input.exercise[i];
                            }
                        }
                        _ => {
                            math::axpy(g_diff, c, &mut input_grads.exercise);
                            math::axpy(g_diff, input.exercise, &mut input_grads.concepts[k]);
                        }
                    }
                }
                let g_w = g_disc * cache.disc * (1.0 - cache.disc);
                math::axpy(g_w, input.exercise, &mut param_grads.disc);
                math::axpy(g_w, &self.disc, &mut input_grads.exercise);
            }
        }
    }

    /// Gradients of `upstream · p` w.r.t. parameters and entity vectors.
    pub fn backward(
        &self,
        input: &CdmInput<'_>,
        upstream: f64,
    ) -> Result<(CdmParams, CdmInputGrads), CdmError> {
        let cache = self.forward(input)?;
        let mut grads = self.zeros_like();
        let mut input_grads = CdmInputGrads::zeros(self.dim, input.concepts.len());
        let g_logit = upstream * cache.p * (1.0 - cache.p);
        self.backward_logit(input, &cache, g_logit, &mut grads, &mut input_grads);
        Ok((grads, input_grads))
    }
}

impl CdmInputGrads {
    pub fn zeros(dim: usize, n_concepts: usize) -> Self {
        Self {
            student: alloc::vec![0.0; dim],
            exercise: alloc::vec![0.0; dim],
            concepts: alloc::vec![alloc::vec![0.0; dim]; n_concepts],
        }
    }
}

/// Converts a binary Q row into active concept indices.
pub fn active_concepts(q_row: &[u8]) -> Vec<usize> {
    q_row
        .iter()
        .enumerate()
        .filter(|(_, &q)| q != 0)
        .map(|(k, _)| k)
        .collect()
}
