//! Adaptive-moment optimizer with bias correction.

use super::{Module, Scalar};

/// Optimizer state: one pair of moment accumulators per parameter block,
/// kept in f64 regardless of the network scalar type.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update over every parameter block of the module. Blocks are
    /// visited in the module's fixed order, so state stays aligned.
    pub fn step<S: Scalar, M: Module<S> + ?Sized>(&mut self, module: &mut M) {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let (m_all, v_all) = (&mut self.m, &mut self.v);
        let mut block = 0usize;
        module.visit_params(&mut |_name, params, grads| {
            if m_all.len() == block {
                m_all.push(vec![0.0; params.len()]);
                v_all.push(vec![0.0; params.len()]);
            }
            let m = &mut m_all[block];
            let v = &mut v_all[block];
            assert_eq!(m.len(), params.len(), "optimizer state misaligned");
            for i in 0..params.len() {
                let g = grads[i].to_f64();
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let p = params[i].to_f64() - lr * m_hat / (v_hat.sqrt() + eps);
                params[i] = S::from_f64(p);
            }
            block += 1;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Mode, Tensor};

    /// Single learnable scalar treated as a module, for optimizer tests.
    struct ScalarParam {
        p: Vec<f64>,
        g: Vec<f64>,
    }

    impl Module<f64> for ScalarParam {
        fn forward(&mut self, x: &Tensor<f64>, _mode: Mode) -> Tensor<f64> {
            x.clone()
        }

        fn backward(&mut self, grad: &Tensor<f64>) -> Tensor<f64> {
            grad.clone()
        }

        fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [f64], &mut [f64])) {
            f("p", &mut self.p, &mut self.g);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut sp = ScalarParam { p: vec![1.5], g: vec![0.0] };
        let mut adam = Adam::new(8e-5);
        adam.step(&mut sp);
        assert_eq!(sp.p[0], 1.5);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // Bias-corrected first step with g = 1: m_hat = 1, v_hat = 1,
        // so the update is lr / (1 + eps) ~= lr.
        let mut sp = ScalarParam { p: vec![0.0], g: vec![1.0] };
        let mut adam = Adam::new(8e-5);
        adam.step(&mut sp);
        let delta = -sp.p[0];
        assert!((delta - 8e-5).abs() < 1e-9, "delta {delta}");
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut sp = ScalarParam { p: vec![0.3], g: vec![0.0] };
            let mut adam = Adam::new(1e-2);
            for i in 0..50 {
                sp.g[0] = (i as f64 * 0.1).sin();
                adam.step(&mut sp);
            }
            sp.p[0]
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }

    #[test]
    fn descends_a_convex_quadratic() {
        // loss = (p - 3)^2, gradient 2(p - 3)
        let loss = |p: f64| (p - 3.0) * (p - 3.0);
        // One step from rest strictly decreases the loss for any small lr.
        for lr in [1e-4, 1e-3, 1e-2, 0.1] {
            let mut sp = ScalarParam { p: vec![0.0], g: vec![2.0 * (0.0 - 3.0)] };
            let mut adam = Adam::new(lr);
            adam.step(&mut sp);
            assert!(loss(sp.p[0]) < loss(0.0), "lr {lr}");
        }
        // And repeated steps converge.
        let mut sp = ScalarParam { p: vec![0.0], g: vec![0.0] };
        let mut adam = Adam::new(0.05);
        for _ in 0..500 {
            sp.g[0] = 2.0 * (sp.p[0] - 3.0);
            adam.step(&mut sp);
        }
        assert!(loss(sp.p[0]) < 0.1);
    }
}
