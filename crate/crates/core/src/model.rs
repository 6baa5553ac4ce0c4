//! The full parameter set: three mappers plus the interaction function.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::cdm::{CdmParams, CdmVariant};
use crate::mapper::{MapperError, MapperParams, MapperRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ablation {
    None,
    /// language vectors replaced by standard-normal draws
    NoTcp,
    /// mappers bypassed; the interaction function works in language space
    NoLcm,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoTcp => "no_tcp",
            Ablation::NoLcm => "no_lcm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Ablation::None),
            "no_tcp" => Some(Ablation::NoTcp),
            "no_lcm" => Some(Ablation::NoLcm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// language-space dimension
    pub language_dim: usize,
    pub hidden: Vec<usize>,
    /// cognitive-space dimension
    pub dim: usize,
    pub variant: CdmVariant,
    pub head_width: usize,
    pub ablation: Ablation,
}

impl ModelConfig {
    /// Dimension of the vectors the interaction function consumes.
    pub fn cognitive_dim(&self) -> usize {
        if self.ablation == Ablation::NoLcm {
            self.language_dim
        } else {
            self.dim
        }
    }

    pub fn mapper_dims(&self) -> Vec<usize> {
        let mut dims = alloc::vec![self.language_dim];
        dims.extend_from_slice(&self.hidden);
        dims.push(self.dim);
        dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mappers {
    pub student: MapperParams,
    pub exercise: MapperParams,
    pub concept: MapperParams,
}

impl Mappers {
    pub fn get(&self, role: MapperRole) -> &MapperParams {
        match role {
            MapperRole::Student => &self.student,
            MapperRole::Exercise => &self.exercise,
            MapperRole::Concept => &self.concept,
        }
    }

    pub fn get_mut(&mut self, role: MapperRole) -> &mut MapperParams {
        match role {
            MapperRole::Student => &mut self.student,
            MapperRole::Exercise => &mut self.exercise,
            MapperRole::Concept => &mut self.concept,
        }
    }
}

/// Independent sub-seed for stream `stream` of a run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisModel {
    pub config: ModelConfig,
    pub mappers: Option<Mappers>,
    pub cdm: CdmParams,
}

impl DiagnosisModel {
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let mappers = (config.ablation != Ablation::NoLcm).then(|| {
            let dims = config.mapper_dims();
            let mk = |role: MapperRole, stream| MapperParams::xavier(role, &dims, derive_seed(seed, stream));
            Mappers {
                student: mk(MapperRole::Student, 1),
                exercise: mk(MapperRole::Exercise, 2),
                concept: mk(MapperRole::Concept, 3),
            }
        });
        let cdm = CdmParams::new(
            config.variant,
            config.cognitive_dim(),
            config.head_width,
            derive_seed(seed, 4),
        );
        Self {
            config,
            mappers,
            cdm,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            mappers: self.mappers.as_ref().map(|m| Mappers {
                student: m.student.zeros_like(),
                exercise: m.exercise.zeros_like(),
                concept: m.concept.zeros_like(),
            }),
            cdm: self.cdm.zeros_like(),
        }
    }

    /// Maps a language vector into cognitive space (identity under `NoLcm`).
    pub fn map(&self, role: MapperRole, x: &[f64]) -> Result<Vec<f64>, MapperError> {
        match &self.mappers {
            Some(m) => m.get(role).forward(x),
            None if x.len() == self.config.language_dim => Ok(x.to_vec()),
            None => Err(MapperError::DimMismatch {
                expected: self.config.language_dim,
                got: x.len(),
            }),
        }
    }

    /// Named parameter groups in a fixed order, empty groups omitted.
    pub fn named_params(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        if let Some(m) = &self.mappers {
            for role in MapperRole::ALL {
                for (i, layer) in m.get(role).layers.iter().enumerate() {
                    out.push((format!("mapper.{}.{i}.weight", role.name()), layer.weight.as_slice()));
                    out.push((format!("mapper.{}.{i}.bias", role.name()), layer.bias.as_slice()));
                }
            }
        }
        for (name, values) in self.cdm.named_slices() {
            if !values.is_empty() {
                out.push((format!("cdm.{name}"), values));
            }
        }
        out
    }

    /// Mutable parameter groups in the same order as [`Self::named_params`].
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        if let Some(m) = &mut self.mappers {
            out.extend(m.student.param_slices_mut());
            out.extend(m.exercise.param_slices_mut());
            out.extend(m.concept.param_slices_mut());
        }
        for v in self.cdm.slices_mut() {
            if !v.is_empty() {
                out.push(v.as_mut_slice());
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, v)| v.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.named_params().iter().all(|(_, v)| crate::math::all_finite(v))
    }

    /// SHA-256 over parameter names and little-endian values.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (name, values) in self.named_params() {
            h.update(name.as_bytes());
            h.update((values.len() as u64).to_le_bytes());
            for v in values {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().into()
    }

    pub fn digest_hex(&self) -> String {
        to_hex(&self.digest())
    }

    /// Rounds every parameter to the nearest `f32`; parameters are stored in single
    /// precision while arithmetic runs in double.
    pub fn round_to_f32(&mut self) {
        for group in self.params_mut() {
            for v in group.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    use core::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(ablation: Ablation) -> ModelConfig {
        ModelConfig {
            language_dim: 16,
            hidden: alloc::vec![8, 4],
            dim: 3,
            variant: CdmVariant::Kancd,
            head_width: 4,
            ablation,
        }
    }

    #[test]
    fn mappers_do_not_share_parameters() {
        let m = DiagnosisModel::init(config(Ablation::None), 7);
        let maps = m.mappers.as_ref().unwrap();
        assert_ne!(maps.student.layers[0].weight, maps.exercise.layers[0].weight);
        assert_ne!(maps.exercise.layers[0].weight, maps.concept.layers[0].weight);
        assert_ne!(
            maps.student.layers[0].weight.as_ptr(),
            maps.concept.layers[0].weight.as_ptr()
        );
    }

    #[test]
    fn named_and_mutable_params_line_up() {
        let mut m = DiagnosisModel::init(config(Ablation::None), 7);
        let lens: Vec<usize> = m.named_params().iter().map(|(_, v)| v.len()).collect();
        let mut_lens: Vec<usize> = m.params_mut().iter().map(|v| v.len()).collect();
        assert_eq!(lens, mut_lens);
        assert_eq!(m.named_params()[0].0, "mapper.student.0.weight");
    }

    #[test]
    fn no_lcm_has_no_mappers_and_language_sized_cdm() {
        let m = DiagnosisModel::init(config(Ablation::NoLcm), 7);
        assert!(m.mappers.is_none());
        assert_eq!(m.cdm.dim, 16);
        assert_eq!(m.map(MapperRole::Student, &[0.5; 16]).unwrap(), alloc::vec![0.5; 16]);
    }

    #[test]
    fn digest_tracks_parameters() {
        let a = DiagnosisModel::init(config(Ablation::None), 7);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.cdm.head_b2[0] += 1e-6;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest_hex().len(), 64);
    }
}
