use serde::{Deserialize, Serialize};

use crate::network::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction; moments are kept per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub hyper: AdamHyper,
    /// Number of updates applied so far.
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl Adam {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self {
            hyper: AdamHyper::default(),
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &[Tensor], lr: f64) {
        assert_eq!(grads.len(), params.len());
        self.t += 1;
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (i, p) in params.tensors_mut().iter_mut().enumerate() {
            let (m, v, g) = (self.m[i].data_mut(), self.v[i].data_mut(), grads[i].data());
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                *w -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// Rescales gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.data()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            g.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::from_vec([1, 1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap());
        let mut adam = Adam::new(&ps);
        let g = Tensor::from_vec([1, 1, 1, 3], vec![0.5, -4.0, 0.0]).unwrap();
        adam.step(&mut ps, std::slice::from_ref(&g), 0.1);
        let d = ps.tensors()[0].data();
        assert!((d[0] - 0.9).abs() < 1e-7);
        assert!((d[1] - 2.1).abs() < 1e-7);
        assert_eq!(d[2], 3.0);
    }

    #[test]
    fn clipping() {
        let mut g = vec![Tensor::from_vec([1, 1, 1, 2], vec![3.0, 4.0]).unwrap()];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0].data()[0] - 0.6).abs() < 1e-15);
    }
}
