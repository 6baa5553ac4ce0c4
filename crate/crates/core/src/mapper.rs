//! Language-cognitive mappers: per-role MLPs `d_l -> hidden.. -> d` with ReLU between
//! affine layers and a linear output.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapperError {
    #[error("expected input of length {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapperRole {
    Student,
    Exercise,
    Concept,
}

impl MapperRole {
    pub const ALL: [MapperRole; 3] = [MapperRole::Student, MapperRole::Exercise, MapperRole::Concept];

    pub fn name(self) -> &'static str {
        match self {
            MapperRole::Student => "student",
            MapperRole::Exercise => "exercise",
            MapperRole::Concept => "concept",
        }
    }
}

/// Affine layer; `weight` is row-major `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weight: alloc::vec![0.0; fan_in * fan_out],
            bias: alloc::vec![0.0; fan_out],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weight[i * self.fan_in..(i + 1) * self.fan_in]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.fan_out).map(|i| math::dot(self.row(i), x) + self.bias[i]));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapperParams {
    pub role: MapperRole,
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// inputs to each layer; `inputs[0]` is the language vector
    inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl MapperParams {
    /// Xavier-uniform weights, zero biases. `dims` = `[d_l, hidden.., d]`.
    pub fn xavier(role: MapperRole, dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0), "mapper dims must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = math::xavier_bound(fan_in, fan_out);
                Dense {
                    fan_in,
                    fan_out,
                    weight: math::uniform_vec(&mut rng, fan_in * fan_out, bound),
                    bias: alloc::vec![0.0; fan_out],
                }
            })
            .collect();
        Self { role, layers }
    }

    pub fn zeros(role: MapperRole, dims: &[usize]) -> Self {
        Self {
            role,
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            role: self.role,
            layers: self.layers.iter().map(|l| Dense::zeros(l.fan_in, l.fan_out)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().fan_out
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = alloc::vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.fan_out));
        dims
    }

    fn check(&self, x: &[f64]) -> Result<(), MapperError> {
        if x.len() != self.input_dim() {
            return Err(MapperError::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MapperError> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, MapperError> {
        self.check(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.apply(&current, &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(core::mem::replace(&mut current, out));
        }
        Ok(ForwardCache {
            inputs,
            output: current,
        })
    }

    /// Accumulates parameter gradients into `tape` and returns the input gradient.
    /// ReLU's subgradient at zero is zero.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        tape: &mut MapperParams,
    ) -> Result<Vec<f64>, MapperError> {
        if upstream.len() != self.output_dim() {
            return Err(MapperError::DimMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let mut grad = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let t = &mut tape.layers[i];
            for (o, &g) in grad.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                t.bias[o] += g;
                math::axpy(g, input, &mut t.weight[o * layer.fan_in..(o + 1) * layer.fan_in]);
            }
            let mut next = alloc::vec![0.0; layer.fan_in];
            for (o, &g) in grad.iter().enumerate() {
                if g != 0.0 {
                    math::axpy(g, layer.row(o), &mut next);
                }
            }
            if i > 0 {
                // `input` is the post-ReLU activation of the previous layer.
                for (n, &a) in next.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *n = 0.0;
                    }
                }
            }
            grad = next;
        }
        Ok(grad)
    }

    /// Gradients of `upstream . forward(x)` w.r.t. parameters and input.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(MapperParams, Vec<f64>), MapperError> {
        let cache = self.forward_cached(x)?;
        let mut tape = self.zeros_like();
        let input_grad = self.backward_into(&cache, upstream, &mut tape)?;
        Ok((tape, input_grad))
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn xavier_bounds_and_zero_bias() {
        let m = MapperParams::xavier(MapperRole::Student, &[3072, 512, 256, 64], 5);
        let bound = math::sqrt(6.0 / 3584.0);
        assert!(m.layers[0].weight.iter().all(|w| w.abs() <= bound));
        assert!(m.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(m.dims(), vec![3072, 512, 256, 64]);
    }

    #[test]
    fn same_seed_same_params() {
        let a = MapperParams::xavier(MapperRole::Concept, &[16, 8, 4, 2], 42);
        let b = MapperParams::xavier(MapperRole::Concept, &[16, 8, 4, 2], 42);
        let c = MapperParams::xavier(MapperRole::Concept, &[16, 8, 4, 2], 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let m = MapperParams::zeros(MapperRole::Exercise, &[4, 3, 3, 2]);
        assert_eq!(m.forward(&[0.0; 4]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            m.forward(&[0.0; 3]),
            Err(MapperError::DimMismatch { expected: 4, got: 3 })
        );
    }

    /// 2 -> 2 -> 2 -> 1 network evaluated by hand:
    /// h1 = relu([1 2; -1 1] x + [0, 0.5]) with x = (1, 1) -> relu(3, 0.5) = (3, 0.5)
    /// h2 = relu([1 0; 0 -2] h1 + [0, 0])            -> relu(3, -1)  = (3, 0)
    /// y  = [2 5] h2 + 1                             -> 7
    #[test]
    fn toy_network_matches_hand_computation() {
        let mut m = MapperParams::zeros(MapperRole::Student, &[2, 2, 2, 1]);
        m.layers[0].weight = vec![1.0, 2.0, -1.0, 1.0];
        m.layers[0].bias = vec![0.0, 0.5];
        m.layers[1].weight = vec![1.0, 0.0, 0.0, -2.0];
        m.layers[2].weight = vec![2.0, 5.0];
        m.layers[2].bias = vec![1.0];
        assert_eq!(m.forward(&[1.0, 1.0]).unwrap(), vec![7.0]);

        // Only the first unit of each hidden layer is active, so dy/dx = 2 * 1 * (1, 2).
        let (_, dx) = m.backward(&[1.0, 1.0], &[1.0]).unwrap();
        assert_eq!(dx, vec![2.0, 4.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_tape() {
        let m = MapperParams::xavier(MapperRole::Student, &[6, 5, 4, 3], 1);
        let (tape, dx) = m.backward(&[0.3; 6], &[0.0; 3]).unwrap();
        assert_eq!(tape, m.zeros_like());
        assert_eq!(dx, vec![0.0; 6]);
    }

    #[test]
    fn linear_region_gradient_is_weight_product() {
        // Positive weights and inputs keep every pre-activation positive.
        let mut m = MapperParams::xavier(MapperRole::Student, &[3, 4, 3, 2], 8);
        for l in &mut m.layers {
            l.weight.iter_mut().for_each(|w| *w = w.abs() + 0.05);
        }
        let x = [0.4, 0.7, 0.2];
        let up = [0.5, -1.5];
        let (_, dx) = m.backward(&x, &up).unwrap();
        // closed form: W1^T W2^T W3^T up
        let mut g = up.to_vec();
        for l in m.layers.iter().rev() {
            let mut next = vec![0.0; l.fan_in];
            for o in 0..l.fan_out {
                for i in 0..l.fan_in {
                    next[i] += l.weight[o * l.fan_in + i] * g[o];
                }
            }
            g = next;
        }
        for (a, b) in dx.iter().zip(&g) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
