//! Adam with bias correction.

use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Default for AdamState {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

impl AdamState {
    /// One update of every parameter group. `params` and `grads` must list the same
    /// groups in the same order on every call.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient group count");
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| alloc::vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (gi, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(p.len(), g.len(), "shape mismatch in group {gi}");
            let (m, v) = (&mut self.m[gi], &mut self.v[gi]);
            for i in 0..g.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (math::sqrt(v_hat) + eps);
            }
        }
    }
}
