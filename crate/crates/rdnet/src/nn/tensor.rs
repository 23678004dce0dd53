//! Contiguous 4D tensors in (batch, channels, height, width) layout.

use super::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: [usize; 4],
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        let len = shape.iter().product();
        Tensor { shape, data: vec![S::zero(); len] }
    }

    pub fn from_data(shape: [usize; 4], data: Vec<S>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/storage mismatch");
        Tensor { shape, data }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// Flat index of (b, c, y, x).
    #[inline]
    pub fn idx(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        ((b * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x
    }

    #[inline]
    pub fn at(&self, b: usize, c: usize, y: usize, x: usize) -> S {
        self.data[self.idx(b, c, y, x)]
    }

    /// One batch item as a flat slice of c*h*w values.
    pub fn sample(&self, b: usize) -> &[S] {
        let stride = self.shape[1] * self.shape[2] * self.shape[3];
        &self.data[b * stride..(b + 1) * stride]
    }

    pub fn sample_mut(&mut self, b: usize) -> &mut [S] {
        let stride = self.shape[1] * self.shape[2] * self.shape[3];
        &mut self.data[b * stride..(b + 1) * stride]
    }

    /// Same storage reinterpreted with a new shape of equal volume.
    pub fn reshaped(mut self, shape: [usize; 4]) -> Self {
        assert_eq!(shape.iter().product::<usize>(), self.data.len(), "reshape changes volume");
        self.shape = shape;
        self
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| T::from_f64(Scalar::to_f64(*v))).collect(),
        }
    }
}

/// c[m x n] += a[m x k] * b[k x n], all row-major.
///
/// Inner dimension is blocked by four so each pass over a c row retires
/// four rank-1 updates; the innermost loop is a straight FMA chain the
/// compiler vectorizes.
pub fn matmul_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let k4 = k / 4 * 4;
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        let mut t = 0;
        while t < k4 {
            let (a0, a1, a2, a3) = (arow[t], arow[t + 1], arow[t + 2], arow[t + 3]);
            let b0 = &b[t * n..(t + 1) * n];
            let b1 = &b[(t + 1) * n..(t + 2) * n];
            let b2 = &b[(t + 2) * n..(t + 3) * n];
            let b3 = &b[(t + 3) * n..(t + 4) * n];
            for j in 0..n {
                crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
            }
            t += 4;
        }
        while t < k {
            let av = arow[t];
            let brow = &b[t * n..(t + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += av * *bv;
            }
            t += 1;
        }
    }
}

/// c[m x n] += a[m x k] * b^T where b is [n x k] row-major (dot-product form).
///
/// The reduction runs over eight independent accumulator lanes so the
/// compiler can vectorize it without reassociating a single serial chain.
pub fn matmul_abt_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    const LANES: usize = 8;
    let k8 = k / LANES * LANES;
    let m4 = m / 4 * 4;
    let mut i = 0;
    // Four a rows per pass over b, so b is streamed m/4 times, not m.
    while i < m4 {
        let a0 = &a[i * k..(i + 1) * k];
        let a1 = &a[(i + 1) * k..(i + 2) * k];
        let a2 = &a[(i + 2) * k..(i + 3) * k];
        let a3 = &a[(i + 3) * k..(i + 4) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut l0 = [S::zero(); LANES];
            let mut l1 = [S::zero(); LANES];
            let mut l2 = [S::zero(); LANES];
            let mut l3 = [S::zero(); LANES];
            let bi = brow[..k8].chunks_exact(LANES);
            let i0 = a0[..k8].chunks_exact(LANES);
            let i1 = a1[..k8].chunks_exact(LANES);
            let i2 = a2[..k8].chunks_exact(LANES);
            let i3 = a3[..k8].chunks_exact(LANES);
            for ((((b8, x0), x1), x2), x3) in bi.zip(i0).zip(i1).zip(i2).zip(i3) {
                for l in 0..LANES {
                    let bv = b8[l];
                    l0[l] += x0[l] * bv;
                    l1[l] += x1[l] * bv;
                    l2[l] += x2[l] * bv;
                    l3[l] += x3[l] * bv;
                }
            }
            let mut acc = [S::zero(); 4];
            for l in 0..LANES {
                acc[0] += l0[l];
                acc[1] += l1[l];
                acc[2] += l2[l];
                acc[3] += l3[l];
            }
            for t in k8..k {
                let bv = brow[t];
                acc[0] += a0[t] * bv;
                acc[1] += a1[t] * bv;
                acc[2] += a2[t] * bv;
                acc[3] += a3[t] * bv;
            }
            for (r, v) in acc.iter().enumerate() {
                c[(i + r) * n + j] += *v;
            }
        }
        i += 4;
    }
    while i < m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut lanes = [S::zero(); LANES];
            let mut t = 0;
            while t < k8 {
                for (l, lane) in lanes.iter_mut().enumerate() {
                    *lane += arow[t + l] * brow[t + l];
                }
                t += LANES;
            }
            let mut acc = S::zero();
            for lane in lanes {
                acc += lane;
            }
            while t < k {
                acc += arow[t] * brow[t];
                t += 1;
            }
            c[i * n + j] += acc;
        }
        i += 1;
    }
}

/// c[k x n] += a^T * b where a is [m x k] and b is [m x n], row-major.
///
/// Blocked by four over the contraction (batch) axis to quarter the
/// write traffic on c, which dominates when k x n is large.
pub fn matmul_atb_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    let m4 = m / 4 * 4;
    let mut t = 0;
    while t < m4 {
        let b0 = &b[t * n..(t + 1) * n];
        let b1 = &b[(t + 1) * n..(t + 2) * n];
        let b2 = &b[(t + 2) * n..(t + 3) * n];
        let b3 = &b[(t + 3) * n..(t + 4) * n];
        for i in 0..k {
            let (a0, a1, a2, a3) =
                (a[t * k + i], a[(t + 1) * k + i], a[(t + 2) * k + i], a[(t + 3) * k + i]);
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
            }
        }
        t += 4;
    }
    while t < m {
        let brow = &b[t * n..(t + 1) * n];
        for i in 0..k {
            let av = a[t * k + i];
            if av == S::zero() {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += av * *bv;
            }
        }
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree_with_naive() {
        let (m, k, n) = (3usize, 4usize, 5usize);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.73).cos()).collect();
        let mut want = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for t in 0..k {
                    want[i * n + j] += a[i * k + t] * b[t * n + j];
                }
            }
        }
        let mut c = vec![0.0; m * n];
        matmul_acc(&a, &b, &mut c, m, k, n);
        assert_eq!(c, want);

        // b transposed layout
        let mut bt = vec![0.0; n * k];
        for t in 0..k {
            for j in 0..n {
                bt[j * k + t] = b[t * n + j];
            }
        }
        let mut c = vec![0.0; m * n];
        matmul_abt_acc(&a, &bt, &mut c, m, k, n);
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }

        // a^T b contraction over the batch dimension m
        let big_n = n;
        let b2: Vec<f64> = (0..m * big_n).map(|i| (i as f64 * 0.11).sin()).collect();
        let mut c2 = vec![0.0; k * big_n];
        matmul_atb_acc(&a, &b2, &mut c2, m, k, big_n);
        let mut want_atb = vec![0.0; k * big_n];
        for i in 0..k {
            for j in 0..big_n {
                for t in 0..m {
                    want_atb[i * big_n + j] += a[t * k + i] * b2[t * big_n + j];
                }
            }
        }
        for (x, y) in c2.iter().zip(&want_atb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
