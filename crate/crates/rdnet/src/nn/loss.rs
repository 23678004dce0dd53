//! Sum-of-squared-errors loss over range-Doppler maps.

use super::{Scalar, Tensor};

/// Squared error summed over each map and averaged over the batch.
/// Returns (loss, gradient w.r.t. the prediction) with
/// grad = 2 (pred - target) / batch.
pub fn sse_loss<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> (f64, Tensor<S>) {
    assert_eq!(pred.shape(), target.shape(), "sse_loss shape mismatch");
    let bs = pred.batch() as f64;
    let mut loss = 0.0f64;
    let mut grad = Tensor::zeros(pred.shape());
    for i in 0..pred.len() {
        let d = pred.data()[i].to_f64() - target.data()[i].to_f64();
        loss += d * d;
        grad.data_mut()[i] = S::from_f64(2.0 * d / bs);
    }
    (loss / bs, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_when_equal() {
        let a: Tensor<f64> = Tensor::from_data([2, 1, 2, 2], vec![1.0; 8]);
        let (l, g) = sse_loss(&a, &a);
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_cell_delta() {
        let a: Tensor<f64> = Tensor::zeros([1, 1, 2, 2]);
        let mut b = a.clone();
        b.data_mut()[3] = 0.25;
        let (l, _) = sse_loss(&a, &b);
        assert!((l - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4;
        let pred: Vec<f64> = (0..2 * n * n).map(|_| rng.gen::<f64>() * 10.0).collect();
        let gt: Vec<f64> = (0..2 * n * n).map(|_| rng.gen::<f64>() * 10.0).collect();
        let p = Tensor::from_data([2, 1, n, n], pred.clone());
        let g = Tensor::from_data([2, 1, n, n], gt.clone());
        let (l, _) = sse_loss(&p, &g);
        // Independent direct evaluation, one map at a time.
        let mut want = 0.0;
        for b in 0..2 {
            for k in 0..n {
                for j in 0..n {
                    let i = b * n * n + k * n + j;
                    want += (pred[i] - gt[i]) * (pred[i] - gt[i]);
                }
            }
        }
        want /= 2.0;
        assert!((l - want).abs() <= 1e-12 * want.max(1.0));
    }
}
