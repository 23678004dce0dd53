//! Layers: conv2d, batch norm, ReLU, dropout, dense. Each caches its
//! forward activations and produces exact gradients on the way back.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{matmul_abt_acc, matmul_acc, matmul_atb_acc, Tensor};
use super::{Mode, Module, Scalar};
use crate::sim::standard_normal;

fn gaussian_init<S: Scalar, R: Rng>(len: usize, fan_in: usize, rng: &mut R) -> Vec<S> {
    let std = 1.0 / (fan_in as f64).sqrt();
    (0..len).map(|_| S::from_f64(standard_normal(rng) * std)).collect()
}

/// 2D cross-correlation, stride 1, zero same-padding, odd kernel sides
/// (rectangular kernels allowed).
#[derive(Debug, Clone)]
pub struct Conv2d<S> {
    cin: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    pub w: Vec<S>,  // [cout][cin * kh * kw]
    pub b: Vec<S>,  // [cout]; empty when the bias is disabled
    has_bias: bool,
    pub dw: Vec<S>,
    pub db: Vec<S>,
    name: String,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Conv2d<S> {
    pub fn new<R: Rng>(name: &str, cin: usize, cout: usize, k: usize, rng: &mut R) -> Self {
        Self::new_rect(name, cin, cout, k, k, rng)
    }

    /// Rectangular kernel of `kh` rows by `kw` columns.
    pub fn new_rect<R: Rng>(
        name: &str,
        cin: usize,
        cout: usize,
        kh: usize,
        kw: usize,
        rng: &mut R,
    ) -> Self {
        assert!(kh % 2 == 1 && kw % 2 == 1, "kernel sides must be odd for same-padding");
        let fan_in = cin * kh * kw;
        Conv2d {
            cin,
            cout,
            kh,
            kw,
            w: gaussian_init(cout * fan_in, fan_in, rng),
            b: vec![S::zero(); cout],
            dw: vec![S::zero(); cout * fan_in],
            db: vec![S::zero(); cout],
            has_bias: true,
            name: name.to_string(),
            cache: None,
        }
    }

    /// Drops the bias term; a conv feeding batch norm has no use for one
    /// (the mean subtraction cancels it exactly).
    pub fn without_bias(mut self) -> Self {
        self.has_bias = false;
        self.b.clear();
        self.db.clear();
        self
    }

    pub fn kernel(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }

    pub fn cin(&self) -> usize {
        self.cin
    }

    pub fn cout(&self) -> usize {
        self.cout
    }

    /// Unrolls one sample into a [cin*kh*kw x h*w] patch matrix.
    fn im2col(&self, x: &[S], h: usize, w: usize, cols: &mut [S]) {
        let (kh, kw) = (self.kh, self.kw);
        let (pad_h, pad_w) = (kh / 2, kw / 2);
        let hw = h * w;
        for c in 0..self.cin {
            let plane = &x[c * hw..(c + 1) * hw];
            for dy in 0..kh {
                for dx in 0..kw {
                    let row = ((c * kh + dy) * kw + dx) * hw;
                    for y in 0..h {
                        let sy = y as i64 + dy as i64 - pad_h as i64;
                        let dst = &mut cols[row + y * w..row + (y + 1) * w];
                        if sy < 0 || sy >= h as i64 {
                            dst.iter_mut().for_each(|v| *v = S::zero());
                            continue;
                        }
                        let src_row = &plane[sy as usize * w..(sy as usize + 1) * w];
                        for x_out in 0..w {
                            let sx = x_out as i64 + dx as i64 - pad_w as i64;
                            dst[x_out] = if sx < 0 || sx >= w as i64 {
                                S::zero()
                            } else {
                                src_row[sx as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[S], h: usize, w: usize, dx_sample: &mut [S]) {
        let (kh, kw) = (self.kh, self.kw);
        let (pad_h, pad_w) = (kh / 2, kw / 2);
        let hw = h * w;
        for c in 0..self.cin {
            let plane = &mut dx_sample[c * hw..(c + 1) * hw];
            for dy in 0..kh {
                for dx in 0..kw {
                    let row = ((c * kh + dy) * kw + dx) * hw;
                    for y in 0..h {
                        let sy = y as i64 + dy as i64 - pad_h as i64;
                        if sy < 0 || sy >= h as i64 {
                            continue;
                        }
                        let src = &cols[row + y * w..row + (y + 1) * w];
                        for x_out in 0..w {
                            let sx = x_out as i64 + dx as i64 - pad_w as i64;
                            if sx >= 0 && sx < w as i64 {
                                plane[sy as usize * w + sx as usize] += src[x_out];
                            }
                        }
                    }
                }
            }
        }
    }
}

impl<S: Scalar> Module<S> for Conv2d<S> {
    fn forward(&mut self, x: &Tensor<S>, _mode: Mode) -> Tensor<S> {
        assert_eq!(x.channels(), self.cin, "conv2d channel mismatch");
        let (bs, h, w) = (x.batch(), x.height(), x.width());
        let hw = h * w;
        let kdim = self.cin * self.kh * self.kw;
        let mut out = Tensor::zeros([bs, self.cout, h, w]);
        let mut cols = vec![S::zero(); kdim * hw];
        for s in 0..bs {
            self.im2col(x.sample(s), h, w, &mut cols);
            let y = out.sample_mut(s);
            matmul_acc(&self.w, &cols, y, self.cout, kdim, hw);
            if self.has_bias {
                for c in 0..self.cout {
                    let bias = self.b[c];
                    for v in &mut y[c * hw..(c + 1) * hw] {
                        *v += bias;
                    }
                }
            }
        }
        self.cache = Some(x.clone());
        out
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let x = self.cache.as_ref().expect("backward before forward");
        let (bs, h, w) = (x.batch(), x.height(), x.width());
        let hw = h * w;
        let kdim = self.cin * self.kh * self.kw;
        let mut dx = Tensor::zeros(x.shape());
        let mut cols = vec![S::zero(); kdim * hw];
        let mut dcols = vec![S::zero(); kdim * hw];
        for s in 0..bs {
            let dy = grad.sample(s);
            self.im2col(x.sample(s), h, w, &mut cols);
            // dW += dY * cols^T  (both operands row-major over hw)
            matmul_abt_acc(dy, &cols, &mut self.dw, self.cout, hw, kdim);
            if self.has_bias {
                for c in 0..self.cout {
                    let mut acc = S::zero();
                    for v in &dy[c * hw..(c + 1) * hw] {
                        acc += *v;
                    }
                    self.db[c] += acc;
                }
            }
            // dcols = W^T * dY
            dcols.iter_mut().for_each(|v| *v = S::zero());
            matmul_atb_acc(&self.w, dy, &mut dcols, self.cout, kdim, hw);
            self.col2im(&dcols, h, w, dx.sample_mut(s));
        }
        dx
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        f(&format!("{}.w", self.name), &mut self.w, &mut self.dw);
        if self.has_bias {
            f(&format!("{}.b", self.name), &mut self.b, &mut self.db);
        }
    }
}

/// Per-channel batch normalization over (batch, height, width).
#[derive(Debug, Clone)]
pub struct BatchNorm2d<S> {
    c: usize,
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub dgamma: Vec<S>,
    pub dbeta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
    momentum: f64,
    eps: f64,
    name: String,
    cache: Option<BnCache<S>>,
}

#[derive(Debug, Clone)]
struct BnCache<S> {
    xhat: Tensor<S>,
    inv_std: Vec<S>,
    mode: Mode,
}

impl<S: Scalar> BatchNorm2d<S> {
    pub fn new(name: &str, c: usize) -> Self {
        BatchNorm2d {
            c,
            gamma: vec![S::one(); c],
            beta: vec![S::zero(); c],
            dgamma: vec![S::zero(); c],
            dbeta: vec![S::zero(); c],
            running_mean: vec![S::zero(); c],
            running_var: vec![S::one(); c],
            momentum: 0.9,
            eps: 1e-5,
            name: name.to_string(),
            cache: None,
        }
    }
}

impl<S: Scalar> Module<S> for BatchNorm2d<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S> {
        assert_eq!(x.channels(), self.c, "batch norm channel mismatch");
        let (bs, h, w) = (x.batch(), x.height(), x.width());
        let hw = h * w;
        let group = bs * hw;
        let mut out = Tensor::zeros(x.shape());
        let mut xhat = Tensor::zeros(x.shape());
        let mut inv_std = vec![S::zero(); self.c];
        for c in 0..self.c {
            let (mean, var) = match mode {
                Mode::Train => {
                    let mut sum = 0.0f64;
                    for s in 0..bs {
                        for i in 0..hw {
                            sum += x.data()[(s * self.c + c) * hw + i].to_f64();
                        }
                    }
                    let mean = sum / group as f64;
                    let mut sq = 0.0f64;
                    for s in 0..bs {
                        for i in 0..hw {
                            let d = x.data()[(s * self.c + c) * hw + i].to_f64() - mean;
                            sq += d * d;
                        }
                    }
                    let var = sq / group as f64; // population variance
                    let rm = self.running_mean[c].to_f64();
                    let rv = self.running_var[c].to_f64();
                    self.running_mean[c] = S::from_f64(self.momentum * rm + (1.0 - self.momentum) * mean);
                    self.running_var[c] = S::from_f64(self.momentum * rv + (1.0 - self.momentum) * var);
                    (mean, var)
                }
                Mode::Eval => (self.running_mean[c].to_f64(), self.running_var[c].to_f64()),
            };
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[c] = S::from_f64(istd);
            let g = self.gamma[c];
            let b = self.beta[c];
            for s in 0..bs {
                let base = (s * self.c + c) * hw;
                for i in 0..hw {
                    let xh = S::from_f64((x.data()[base + i].to_f64() - mean) * istd);
                    xhat.data_mut()[base + i] = xh;
                    out.data_mut()[base + i] = g * xh + b;
                }
            }
        }
        self.cache = Some(BnCache { xhat, inv_std, mode });
        out
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let cache = self.cache.as_ref().expect("backward before forward");
        let (bs, h, w) = (grad.batch(), grad.height(), grad.width());
        let hw = h * w;
        let group = (bs * hw) as f64;
        let mut dx = Tensor::zeros(grad.shape());
        for c in 0..self.c {
            let mut sum_dy = 0.0f64;
            let mut sum_dy_xhat = 0.0f64;
            for s in 0..bs {
                let base = (s * self.c + c) * hw;
                for i in 0..hw {
                    let dy = grad.data()[base + i].to_f64();
                    sum_dy += dy;
                    sum_dy_xhat += dy * cache.xhat.data()[base + i].to_f64();
                }
            }
            self.dbeta[c] += S::from_f64(sum_dy);
            self.dgamma[c] += S::from_f64(sum_dy_xhat);
            let g = self.gamma[c].to_f64();
            let istd = cache.inv_std[c].to_f64();
            for s in 0..bs {
                let base = (s * self.c + c) * hw;
                for i in 0..hw {
                    let dy = grad.data()[base + i].to_f64();
                    let v = match cache.mode {
                        Mode::Train => {
                            let xh = cache.xhat.data()[base + i].to_f64();
                            g * istd * (dy - sum_dy / group - xh * sum_dy_xhat / group)
                        }
                        // Eval treats the running statistics as constants.
                        Mode::Eval => g * istd * dy,
                    };
                    dx.data_mut()[base + i] = S::from_f64(v);
                }
            }
        }
        dx
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        f(&format!("{}.gamma", self.name), &mut self.gamma, &mut self.dgamma);
        f(&format!("{}.beta", self.name), &mut self.beta, &mut self.dbeta);
    }
}

/// Elementwise max(0, x).
#[derive(Debug, Clone, Default)]
pub struct Relu<S> {
    mask: Vec<bool>,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Relu<S> {
    pub fn new() -> Self {
        Relu { mask: Vec::new(), _marker: std::marker::PhantomData }
    }
}

impl<S: Scalar> Module<S> for Relu<S> {
    fn forward(&mut self, x: &Tensor<S>, _mode: Mode) -> Tensor<S> {
        let mut out = x.clone();
        self.mask = x.data().iter().map(|v| *v > S::zero()).collect();
        for (v, keep) in out.data_mut().iter_mut().zip(&self.mask) {
            if !keep {
                *v = S::zero();
            }
        }
        out
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let mut dx = grad.clone();
        for (v, keep) in dx.data_mut().iter_mut().zip(&self.mask) {
            if !keep {
                *v = S::zero();
            }
        }
        dx
    }

    fn visit_params(&mut self, _f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {}
}

/// Inverted-scaling dropout: train mode keeps units with probability 1-rate
/// and scales by 1/(1-rate); eval mode is the identity.
///
/// The mask is a pure function of (seed, step); `advance()` moves to the
/// next mask, so repeated forwards inside a gradient check see the same one.
#[derive(Debug, Clone)]
pub struct Dropout<S> {
    pub rate: f64,
    seed: u64,
    step: u64,
    mask: Vec<bool>,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Dropout<S> {
    pub fn new(rate: f64, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        Dropout { rate, seed, step: 0, mask: Vec::new(), _marker: std::marker::PhantomData }
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

impl<S: Scalar> Module<S> for Dropout<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S> {
        if mode == Mode::Eval || self.rate == 0.0 {
            self.mask = vec![true; x.len()];
            return x.clone();
        }
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(self.step.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let scale = S::from_f64(1.0 / (1.0 - self.rate));
        let mut out = x.clone();
        self.mask = (0..x.len()).map(|_| rng.gen::<f64>() >= self.rate).collect();
        for (v, keep) in out.data_mut().iter_mut().zip(&self.mask) {
            if *keep {
                *v *= scale;
            } else {
                *v = S::zero();
            }
        }
        out
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let scale = S::from_f64(1.0 / (1.0 - self.rate));
        let mut dx = grad.clone();
        for (v, keep) in dx.data_mut().iter_mut().zip(&self.mask) {
            if *keep {
                if self.rate > 0.0 {
                    *v *= scale;
                }
            } else {
                *v = S::zero();
            }
        }
        dx
    }

    fn visit_params(&mut self, _f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {}
}

/// Fully connected layer over the flattened (c, h, w) volume.
#[derive(Debug, Clone)]
pub struct Dense<S> {
    in_features: usize,
    out_features: usize,
    pub w: Vec<S>,  // [out][in]
    pub b: Vec<S>,
    pub dw: Vec<S>,
    pub db: Vec<S>,
    name: String,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Dense<S> {
    pub fn new<R: Rng>(name: &str, in_features: usize, out_features: usize, rng: &mut R) -> Self {
        Dense {
            in_features,
            out_features,
            w: gaussian_init(out_features * in_features, in_features, rng),
            b: vec![S::zero(); out_features],
            dw: vec![S::zero(); out_features * in_features],
            db: vec![S::zero(); out_features],
            name: name.to_string(),
            cache: None,
        }
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn out_features(&self) -> usize {
        self.out_features
    }
}

impl<S: Scalar> Module<S> for Dense<S> {
    fn forward(&mut self, x: &Tensor<S>, _mode: Mode) -> Tensor<S> {
        let bs = x.batch();
        let feat = x.len() / bs;
        assert_eq!(feat, self.in_features, "dense feature mismatch");
        let mut out = Tensor::zeros([bs, self.out_features, 1, 1]);
        // y[b][o] = sum_t x[b][t] w[o][t] + b[o]
        matmul_abt_acc(x.data(), &self.w, out.data_mut(), bs, feat, self.out_features);
        for s in 0..bs {
            let y = out.sample_mut(s);
            for (v, bias) in y.iter_mut().zip(&self.b) {
                *v += *bias;
            }
        }
        self.cache = Some(x.clone());
        out
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let x = self.cache.as_ref().expect("backward before forward");
        let bs = x.batch();
        // dW[o][t] += sum_b dy[b][o] x[b][t]
        matmul_atb_acc(grad.data(), x.data(), &mut self.dw, bs, self.out_features, self.in_features);
        for s in 0..bs {
            for (o, dbias) in self.db.iter_mut().enumerate() {
                *dbias += grad.data()[s * self.out_features + o];
            }
        }
        // dx[b][t] = sum_o dy[b][o] w[o][t]
        let mut dx = Tensor::zeros(x.shape());
        matmul_acc(grad.data(), &self.w, dx.data_mut(), bs, self.out_features, self.in_features);
        dx
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        f(&format!("{}.w", self.name), &mut self.w, &mut self.dw);
        f(&format!("{}.b", self.name), &mut self.b, &mut self.db);
    }
}

/// Elementwise sum of two equal-shape branches; the gradient passes to both
/// unchanged.
pub fn residual_add<S: Scalar>(x: &Tensor<S>, skip: &Tensor<S>) -> Tensor<S> {
    assert_eq!(x.shape(), skip.shape(), "residual_add shape mismatch");
    let mut out = x.clone();
    for (v, s) in out.data_mut().iter_mut().zip(skip.data()) {
        *v += *s;
    }
    out
}
