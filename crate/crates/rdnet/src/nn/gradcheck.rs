//! Finite-difference gradient verification.
//!
//! The check probes a module through the scalar loss L = sum(out .* r) for
//! a fixed random coefficient tensor r, whose analytic gradient w.r.t. the
//! output is r itself. Central differences with step 1e-5 scaled by the
//! parameter magnitude; 64-bit scalars only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mode, Module, Tensor};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max relative error per parameter block.
    pub blocks: Vec<(String, f64)>,
    /// Max relative error over the input gradient.
    pub input_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|(_, e)| *e)
            .fold(self.input_error, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= self.tolerance
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = (a.abs() + b.abs()).max(1e-6);
    (a - b).abs() / denom
}

fn probe_loss<M: Module<f64> + ?Sized>(module: &mut M, input: &Tensor<f64>, coeffs: &[f64]) -> f64 {
    let out = module.forward(input, Mode::Train);
    out.data().iter().zip(coeffs).map(|(o, c)| o * c).sum()
}

/// Verifies every parameter gradient and the input gradient of `module`
/// against central finite differences at the given relative tolerance.
pub fn grad_check<M: Module<f64> + ?Sized>(
    module: &mut M,
    input: &Tensor<f64>,
    tolerance: f64,
    seed: u64,
) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Analytic pass.
    let out = module.forward(input, Mode::Train);
    let coeffs: Vec<f64> = (0..out.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    module.zero_grads();
    let grad_out = Tensor::from_data(out.shape(), coeffs.clone());
    let input_grad = module.backward(&grad_out);

    // Snapshot analytic parameter gradients.
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    module.visit_params(&mut |name, _p, g| analytic.push((name.to_string(), g.to_vec())));

    // Numeric parameter gradients, one block at a time.
    let mut blocks = Vec::new();
    let n_blocks = analytic.len();
    for block in 0..n_blocks {
        let block_len = analytic[block].1.len();
        let mut max_err = 0.0f64;
        for i in 0..block_len {
            let mut orig = 0.0;
            let visit_set = |module: &mut M, value: f64| {
                let mut b = 0usize;
                module.visit_params(&mut |_n, p, _g| {
                    if b == block {
                        p[i] = value;
                    }
                    b += 1;
                });
            };
            {
                let mut b = 0usize;
                module.visit_params(&mut |_n, p, _g| {
                    if b == block {
                        orig = p[i];
                    }
                    b += 1;
                });
            }
            let h = 1e-5 * orig.abs().max(1.0);
            visit_set(module, orig + h);
            let lp = probe_loss(module, input, &coeffs);
            visit_set(module, orig - h);
            let lm = probe_loss(module, input, &coeffs);
            visit_set(module, orig);
            let numeric = (lp - lm) / (2.0 * h);
            max_err = max_err.max(rel_err(analytic[block].1[i], numeric));
        }
        blocks.push((analytic[block].0.clone(), max_err));
    }

    // Numeric input gradient.
    let mut x = input.clone();
    let mut input_error = 0.0f64;
    for i in 0..x.len() {
        let orig = x.data()[i];
        let h = 1e-5 * orig.abs().max(1.0);
        x.data_mut()[i] = orig + h;
        let lp = probe_loss(module, &x, &coeffs);
        x.data_mut()[i] = orig - h;
        let lm = probe_loss(module, &x, &coeffs);
        x.data_mut()[i] = orig;
        let numeric = (lp - lm) / (2.0 * h);
        input_error = input_error.max(rel_err(input_grad.data()[i], numeric));
    }

    GradCheckReport { blocks, input_error, tolerance }
}
