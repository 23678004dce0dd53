//! The range-Doppler estimation network: a convolutional matched-filter
//! stem, three residual frequency-resolution blocks, dropout, and a dense
//! head mapping flattened features back to the N x M map.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};
use crate::map::RdMap;
use crate::nn::{
    residual_add, sse_loss, Adam, BatchNorm2d, Conv2d, Dense, Dropout, Mode, Module, ParamBlock,
    Relu, Scalar, Tensor,
};
use crate::sim::ChannelEstimate;

/// One residual block spec: U repetitions of (conv VxV -> BN -> ReLU).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    /// Number of conv/BN/ReLU repetitions (U).
    pub reps: usize,
    /// Square filter size (V), odd.
    pub kernel: usize,
    /// Output channel count.
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Map rows (range bins).
    pub n: usize,
    /// Map columns (velocity bins).
    pub m: usize,
    /// Matched-filter stem: conv layer count, width and kernel. The kernel
    /// may be rectangular — tall kernels make the stem a frequency-selective
    /// filter bank along the range axis, which the rest of the network needs
    /// because a stack of small square kernels cannot resolve range
    /// frequencies finer than its receptive field.
    pub stem_layers: usize,
    pub stem_width: usize,
    pub stem_kernel: usize,
    /// Kernel columns of the stem; rows come from `stem_kernel`.
    pub stem_kernel_cols: usize,
    /// Exactly three frequency-resolution blocks.
    pub blocks: [BlockSpec; 3],
    pub dropout: f64,
    /// Use a 1x1 convolutional head instead of the dense head.
    pub conv_head: bool,
    /// Parameter initialization seed.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n: 64,
            m: 8,
            stem_layers: 1,
            stem_width: 16,
            stem_kernel: 3,
            stem_kernel_cols: 3,
            blocks: [
                BlockSpec { reps: 2, kernel: 3, width: 16 },
                BlockSpec { reps: 2, kernel: 3, width: 16 },
                BlockSpec { reps: 2, kernel: 3, width: 16 },
            ],
            dropout: 0.5,
            conv_head: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("map dimensions must be positive".into()));
        }
        if self.stem_layers == 0
            || self.stem_width == 0
            || self.stem_kernel % 2 == 0
            || self.stem_kernel_cols % 2 == 0
        {
            return Err(Error::Config("stem needs >= 1 layer, width >= 1, odd kernel sides".into()));
        }
        for b in &self.blocks {
            if b.reps == 0 || b.width == 0 || b.kernel % 2 == 0 {
                return Err(Error::Config("blocks need U >= 1, width >= 1, odd V".into()));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Early-stop patience in epochs without validation improvement.
    pub patience: usize,
    /// Shuffling / dropout seed.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lr: 1e-3, batch_size: 64, epochs: 30, patience: 15, seed: 0 }
    }
}

/// Conv -> BN -> ReLU unit.
#[derive(Debug, Clone)]
struct ConvUnit<S> {
    conv: Conv2d<S>,
    bn: BatchNorm2d<S>,
    relu: Relu<S>,
}

impl<S: Scalar> ConvUnit<S> {
    fn new<R: Rng>(name: &str, cin: usize, cout: usize, k: (usize, usize), rng: &mut R) -> Self {
        ConvUnit {
            conv: Conv2d::new_rect(&format!("{name}.conv"), cin, cout, k.0, k.1, rng)
                .without_bias(),
            bn: BatchNorm2d::new(&format!("{name}.bn"), cout),
            relu: Relu::new(),
        }
    }

    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S> {
        let y = self.conv.forward(x, mode);
        let y = self.bn.forward(&y, mode);
        self.relu.forward(&y, mode)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let g = self.relu.backward(grad);
        let g = self.bn.backward(&g);
        self.conv.backward(&g)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        self.conv.visit_params(f);
        self.bn.visit_params(f);
    }
}

/// U conv units with a shortcut added after the repetitions; the shortcut
/// is the identity, or a 1x1 projection conv when the widths differ.
#[derive(Debug, Clone)]
struct ResidualBlock<S> {
    units: Vec<ConvUnit<S>>,
    projection: Option<Conv2d<S>>,
}

impl<S: Scalar> ResidualBlock<S> {
    fn new<R: Rng>(name: &str, cin: usize, spec: &BlockSpec, rng: &mut R) -> Self {
        let mut units = Vec::with_capacity(spec.reps);
        let mut width_in = cin;
        for u in 0..spec.reps {
            units.push(ConvUnit::new(
                &format!("{name}.u{u}"),
                width_in,
                spec.width,
                (spec.kernel, spec.kernel),
                rng,
            ));
            width_in = spec.width;
        }
        let projection = if cin != spec.width {
            Some(Conv2d::new(&format!("{name}.proj"), cin, spec.width, 1, rng))
        } else {
            None
        };
        ResidualBlock { units, projection }
    }

    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S> {
        let mut y = x.clone();
        for u in &mut self.units {
            y = u.forward(&y, mode);
        }
        let skip = match &mut self.projection {
            Some(p) => p.forward(x, mode),
            None => x.clone(),
        };
        residual_add(&y, &skip)
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let mut g = grad.clone();
        for u in self.units.iter_mut().rev() {
            g = u.backward(&g);
        }
        let skip_grad = match &mut self.projection {
            Some(p) => p.backward(grad),
            None => grad.clone(),
        };
        residual_add(&g, &skip_grad)
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        for u in &mut self.units {
            u.visit_params(f);
        }
        if let Some(p) = &mut self.projection {
            p.visit_params(f);
        }
    }
}

#[derive(Debug, Clone)]
enum Head<S> {
    Dense(Dense<S>),
    Conv1x1(Conv2d<S>),
}

/// The assembled network. Input (batch, 2, N, M) with channels (I, Q);
/// output (batch, 1, N, M).
#[derive(Debug, Clone)]
pub struct RdNet<S> {
    cfg: ModelConfig,
    stem: Vec<ConvUnit<S>>,
    blocks: Vec<ResidualBlock<S>>,
    dropout: Dropout<S>,
    head: Head<S>,
}

impl<S: Scalar> RdNet<S> {
    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Advance the dropout mask; the training loop calls this once per step.
    pub fn advance_dropout(&mut self) {
        self.dropout.advance();
    }

    /// Disable a block's shortcut (test hook for the ablation property).
    #[doc(hidden)]
    pub fn ablate_shortcut(&mut self, block: usize) {
        // Zero the projection so the skip path contributes nothing.
        if let Some(p) = &mut self.blocks[block].projection {
            p.w.iter_mut().for_each(|v| *v = S::zero());
            p.b.iter_mut().for_each(|v| *v = S::zero());
        }
    }
}

/// Builds the network with fan-in-scaled zero-mean Gaussian initialization,
/// seeded from `cfg.seed`.
pub fn build_model<S: Scalar>(cfg: &ModelConfig) -> Result<RdNet<S>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stem = Vec::with_capacity(cfg.stem_layers);
    let mut cin = 2;
    for i in 0..cfg.stem_layers {
        stem.push(ConvUnit::new(
            &format!("stem{i}"),
            cin,
            cfg.stem_width,
            (cfg.stem_kernel, cfg.stem_kernel_cols),
            &mut rng,
        ));
        cin = cfg.stem_width;
    }
    let mut blocks = Vec::with_capacity(3);
    for (i, spec) in cfg.blocks.iter().enumerate() {
        blocks.push(ResidualBlock::new(&format!("block{i}"), cin, spec, &mut rng));
        cin = spec.width;
    }
    let dropout = Dropout::new(cfg.dropout, cfg.seed ^ 0xD509_0CF3);
    let head = if cfg.conv_head {
        Head::Conv1x1(Conv2d::new("head", cin, 1, 1, &mut rng))
    } else {
        Head::Dense(Dense::new("head", cin * cfg.n * cfg.m, cfg.n * cfg.m, &mut rng))
    };
    Ok(RdNet { cfg: cfg.clone(), stem, blocks, dropout, head })
}

impl<S: Scalar> Module<S> for RdNet<S> {
    fn forward(&mut self, x: &Tensor<S>, mode: Mode) -> Tensor<S> {
        assert_eq!(x.channels(), 2, "input must carry (I, Q) channels");
        let bs = x.batch();
        let mut y = x.clone();
        for unit in &mut self.stem {
            y = unit.forward(&y, mode);
        }
        for block in &mut self.blocks {
            y = block.forward(&y, mode);
        }
        y = self.dropout.forward(&y, mode);
        let out = match &mut self.head {
            Head::Dense(d) => d.forward(&y, mode),
            Head::Conv1x1(c) => c.forward(&y, mode),
        };
        out.reshaped([bs, 1, self.cfg.n, self.cfg.m])
    }

    fn backward(&mut self, grad: &Tensor<S>) -> Tensor<S> {
        let bs = grad.batch();
        let mut g = match &mut self.head {
            Head::Dense(d) => {
                let flat = grad.clone().reshaped([bs, self.cfg.n * self.cfg.m, 1, 1]);
                d.backward(&flat)
            }
            Head::Conv1x1(c) => c.backward(grad),
        };
        // Dense returns the flattened feature gradient; restore the volume.
        let width = self.blocks.last().map(|b| b.units.last().unwrap().conv.cout()).unwrap();
        g = g.reshaped([bs, width, self.cfg.n, self.cfg.m]);
        g = self.dropout.backward(&g);
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g);
        }
        for unit in self.stem.iter_mut().rev() {
            g = unit.backward(&g);
        }
        g
    }

    fn visit_params(&mut self, f: &mut dyn FnMut(&str, &mut [S], &mut [S])) {
        for unit in &mut self.stem {
            unit.visit_params(f);
        }
        for block in &mut self.blocks {
            block.visit_params(f);
        }
        match &mut self.head {
            Head::Dense(d) => d.visit_params(f),
            Head::Conv1x1(c) => c.visit_params(f),
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpointing

fn bn_state_blocks<S: Scalar>(net: &RdNet<S>) -> Vec<ParamBlock> {
    let mut blocks = Vec::new();
    let mut push_bn = |name: String, bn: &BatchNorm2d<S>| {
        blocks.push(ParamBlock {
            name: format!("{name}.running_mean"),
            values: bn.running_mean.iter().map(|v| Scalar::to_f64(*v) as f32).collect(),
        });
        blocks.push(ParamBlock {
            name: format!("{name}.running_var"),
            values: bn.running_var.iter().map(|v| Scalar::to_f64(*v) as f32).collect(),
        });
    };
    for (i, u) in net.stem.iter().enumerate() {
        push_bn(format!("stem{i}.bn"), &u.bn);
    }
    for (i, b) in net.blocks.iter().enumerate() {
        for (j, u) in b.units.iter().enumerate() {
            push_bn(format!("block{i}.u{j}.bn"), &u.bn);
        }
    }
    blocks
}

fn restore_bn_state<S: Scalar>(net: &mut RdNet<S>, blocks: &[ParamBlock]) -> Result<()> {
    let restore = |name: String, bn: &mut BatchNorm2d<S>| -> Result<()> {
        for (suffix, field) in
            [("running_mean", &mut bn.running_mean), ("running_var", &mut bn.running_var)]
        {
            let full = format!("{name}.{suffix}");
            let block = blocks
                .iter()
                .find(|b| b.name == full)
                .ok_or_else(|| Error::Format(format!("checkpoint missing block {full}")))?;
            if block.values.len() != field.len() {
                return Err(Error::Format(format!("block {full} has wrong length")));
            }
            for (dst, src) in field.iter_mut().zip(&block.values) {
                *dst = S::from_f64(*src as f64);
            }
        }
        Ok(())
    };
    for i in 0..net.stem.len() {
        restore(format!("stem{i}.bn"), &mut net.stem[i].bn)?;
    }
    for i in 0..net.blocks.len() {
        for j in 0..net.blocks[i].units.len() {
            restore(format!("block{i}.u{j}.bn"), &mut net.blocks[i].units[j].bn)?;
        }
    }
    Ok(())
}

fn config_to_bytes(cfg: &ModelConfig) -> Vec<u8> {
    let mut out = Vec::new();
    for v in [
        cfg.n as u64,
        cfg.m as u64,
        cfg.stem_layers as u64,
        cfg.stem_width as u64,
        cfg.stem_kernel as u64,
        cfg.stem_kernel_cols as u64,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for b in &cfg.blocks {
        for v in [b.reps as u64, b.kernel as u64, b.width as u64] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&cfg.dropout.to_le_bytes());
    out.push(cfg.conv_head as u8);
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    out
}

fn config_from_bytes<R: Read>(r: &mut R) -> Result<ModelConfig> {
    let mut u64_buf = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut u64_buf).map_err(|_| Error::Format("truncated model header".into()))?;
        Ok(u64::from_le_bytes(u64_buf))
    };
    let n = next_u64(r)? as usize;
    let m = next_u64(r)? as usize;
    let stem_layers = next_u64(r)? as usize;
    let stem_width = next_u64(r)? as usize;
    let stem_kernel = next_u64(r)? as usize;
    let stem_kernel_cols = next_u64(r)? as usize;
    let mut blocks = [BlockSpec { reps: 1, kernel: 1, width: 1 }; 3];
    for b in &mut blocks {
        b.reps = next_u64(r)? as usize;
        b.kernel = next_u64(r)? as usize;
        b.width = next_u64(r)? as usize;
    }
    let mut f64_buf = [0u8; 8];
    r.read_exact(&mut f64_buf).map_err(|_| Error::Format("truncated model header".into()))?;
    let dropout = f64::from_le_bytes(f64_buf);
    let mut byte = [0u8; 1];
    r.read_exact(&mut byte).map_err(|_| Error::Format("truncated model header".into()))?;
    let conv_head = byte[0] != 0;
    let seed = next_u64(r)?;
    Ok(ModelConfig { n, m, stem_layers, stem_width, stem_kernel, stem_kernel_cols, blocks, dropout, conv_head, seed })
}

const MODEL_MAGIC: [u8; 4] = *b"RDNC";

/// Saves config header plus all parameter and batch-norm state blocks.
pub fn save_model<S: Scalar>(net: &mut RdNet<S>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&MODEL_MAGIC)?;
    let hdr = config_to_bytes(&net.cfg);
    w.write_all(&(hdr.len() as u32).to_le_bytes())?;
    w.write_all(&hdr)?;
    let mut blocks = Vec::new();
    net.visit_params(&mut |name, p, _g| {
        blocks.push(ParamBlock {
            name: name.to_string(),
            values: p.iter().map(|v| Scalar::to_f64(*v) as f32).collect(),
        });
    });
    blocks.extend(bn_state_blocks(net));
    crate::nn::save_blocks(&mut w, &blocks)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<S: Scalar>(path: &Path) -> Result<RdNet<S>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("truncated model file".into()))?;
    if magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad model magic {magic:?}")));
    }
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf).map_err(|_| Error::Format("truncated model file".into()))?;
    let mut hdr = vec![0u8; u32::from_le_bytes(len_buf) as usize];
    r.read_exact(&mut hdr).map_err(|_| Error::Format("truncated model file".into()))?;
    let cfg = config_from_bytes(&mut hdr.as_slice())?;
    let mut net = build_model::<S>(&cfg)?;
    let blocks = crate::nn::load_blocks(&mut r)?;
    let mut idx = 0usize;
    let mut err: Option<Error> = None;
    net.visit_params(&mut |name, p, _g| {
        if err.is_some() {
            return;
        }
        match blocks.get(idx) {
            Some(b) if b.name == name && b.values.len() == p.len() => {
                for (dst, src) in p.iter_mut().zip(&b.values) {
                    *dst = S::from_f64(*src as f64);
                }
            }
            _ => err = Some(Error::Format(format!("checkpoint block mismatch at {name}"))),
        }
        idx += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    restore_bn_state(&mut net, &blocks[idx..])?;
    Ok(net)
}

// ---------------------------------------------------------------------------
// Training

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

fn records_to_tensors(records: &[DatasetRecord]) -> (Tensor<f32>, Tensor<f32>) {
    assert!(!records.is_empty());
    let (n, m) = (records[0].channel.n(), records[0].channel.m());
    let bs = records.len();
    let mut x = Tensor::zeros([bs, 2, n, m]);
    let mut y = Tensor::zeros([bs, 1, n, m]);
    for (s, r) in records.iter().enumerate() {
        let xoff = s * 2 * n * m;
        for (i, v) in r.channel.i_plane().iter().enumerate() {
            x.data_mut()[xoff + i] = *v as f32;
        }
        for (i, v) in r.channel.q_plane().iter().enumerate() {
            x.data_mut()[xoff + n * m + i] = *v as f32;
        }
        let yoff = s * n * m;
        for (i, v) in r.gt.values().iter().enumerate() {
            y.data_mut()[yoff + i] = *v as f32;
        }
    }
    (x, y)
}

fn slice_batch(x: &Tensor<f32>, y: &Tensor<f32>, indices: &[usize]) -> (Tensor<f32>, Tensor<f32>) {
    let [_, cx, n, m] = x.shape();
    let bs = indices.len();
    let mut bx = Tensor::zeros([bs, cx, n, m]);
    let mut by = Tensor::zeros([bs, 1, n, m]);
    for (row, &src) in indices.iter().enumerate() {
        bx.sample_mut(row).copy_from_slice(x.sample(src));
        by.sample_mut(row).copy_from_slice(y.sample(src));
    }
    (bx, by)
}

fn mean_loss_eval(net: &mut RdNet<f32>, x: &Tensor<f32>, y: &Tensor<f32>, batch: usize) -> f64 {
    let count = x.batch();
    let mut total = 0.0;
    let mut start = 0;
    while start < count {
        let end = (start + batch).min(count);
        let indices: Vec<usize> = (start..end).collect();
        let (bx, by) = slice_batch(x, y, &indices);
        let out = net.forward(&bx, Mode::Eval);
        let (loss, _) = sse_loss(&out, &by);
        total += loss * indices.len() as f64;
        start = end;
    }
    total / count as f64
}

fn snapshot_params(net: &mut RdNet<f32>) -> Vec<Vec<f32>> {
    let mut out = Vec::new();
    net.visit_params(&mut |_n, p, _g| out.push(p.to_vec()));
    out
}

fn restore_params(net: &mut RdNet<f32>, snap: &[Vec<f32>]) {
    let mut i = 0;
    net.visit_params(&mut |_n, p, _g| {
        p.copy_from_slice(&snap[i]);
        i += 1;
    });
}

/// Mini-batch training with seeded shuffling, per-epoch train/validation
/// loss, best-validation checkpointing, and a divergence guard.
///
/// When `checkpoint_path` is given, the best-validation model is written
/// there each time it improves; the returned model always carries the
/// best-validation parameters.
pub fn train(
    net: &mut RdNet<f32>,
    train_records: &[DatasetRecord],
    val_records: &[DatasetRecord],
    tc: &TrainConfig,
    checkpoint_path: Option<&Path>,
    mut progress: Option<&mut dyn FnMut(usize, f64, f64)>,
) -> Result<TrainReport> {
    if train_records.is_empty() || val_records.is_empty() {
        return Err(Error::Config("training and validation splits must be nonempty".into()));
    }
    if tc.lr <= 0.0 || tc.batch_size == 0 || tc.epochs == 0 {
        return Err(Error::Config("lr, batch size and epochs must be positive".into()));
    }
    let (x_train, y_train) = records_to_tensors(train_records);
    let (x_val, y_val) = records_to_tensors(val_records);
    let count = x_train.batch();

    let mut adam = Adam::new(tc.lr);
    let mut report = TrainReport { train_loss: Vec::new(), val_loss: Vec::new(), best_epoch: 0 };
    let mut best_val = f64::INFINITY;
    let mut best_params: Vec<Vec<f32>> = Vec::new();
    let mut bn_snapshot: Option<RdNet<f32>> = None;

    for epoch in 0..tc.epochs {
        let mut order: Vec<usize> = (0..count).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tc.seed ^ (epoch as u64).wrapping_mul(0x9E37));
        // Fisher-Yates
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(tc.batch_size) {
            let (bx, by) = slice_batch(&x_train, &y_train, chunk);
            let out = net.forward(&bx, Mode::Train);
            let (loss, grad) = sse_loss(&out, &by);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
            net.zero_grads();
            net.backward(&grad);
            adam.step(net);
            net.advance_dropout();
        }
        let train_loss = epoch_loss / seen as f64;
        let val_loss = mean_loss_eval(net, &x_val, &y_val, tc.batch_size);
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        if let Some(cb) = progress.as_deref_mut() {
            cb(epoch, train_loss, val_loss);
        }

        if val_loss < best_val {
            best_val = val_loss;
            report.best_epoch = epoch;
            best_params = snapshot_params(net);
            bn_snapshot = Some(net.clone());
            if let Some(path) = checkpoint_path {
                save_model(net, path)?;
            }
        } else if epoch - report.best_epoch >= tc.patience {
            break;
        }
    }

    // Restore the best-validation parameters and batch-norm statistics.
    if let Some(best) = bn_snapshot {
        *net = best;
    } else if !best_params.is_empty() {
        restore_params(net, &best_params);
    }
    Ok(report)
}

/// Writes the per-epoch loss curve as CSV: epoch,train_loss,val_loss.
pub fn write_loss_csv(report: &TrainReport, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "epoch,train_loss,val_loss")?;
    for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        writeln!(f, "{i},{t},{v}")?;
    }
    f.flush()?;
    Ok(())
}

/// Eval-mode prediction; negative outputs clamped at zero.
pub fn predict(net: &mut RdNet<f32>, h: &ChannelEstimate) -> RdMap {
    let mut map = predict_raw(net, h);
    map.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    map
}

/// Eval-mode prediction without the nonnegativity clamp.
pub fn predict_raw(net: &mut RdNet<f32>, h: &ChannelEstimate) -> RdMap {
    let (n, m) = (h.n(), h.m());
    let mut x = Tensor::zeros([1, 2, n, m]);
    for (i, v) in h.i_plane().iter().enumerate() {
        x.data_mut()[i] = *v as f32;
    }
    for (i, v) in h.q_plane().iter().enumerate() {
        x.data_mut()[n * m + i] = *v as f32;
    }
    let out = net.forward(&x, Mode::Eval);
    RdMap::from_values(n, m, out.data().iter().map(|v| *v as f64).collect()).unwrap()
}

/// Batched eval-mode prediction over whole records.
pub fn predict_batch(net: &mut RdNet<f32>, records: &[DatasetRecord]) -> Vec<RdMap> {
    if records.is_empty() {
        return Vec::new();
    }
    let (n, m) = (records[0].channel.n(), records[0].channel.m());
    let (x, _) = records_to_tensors(records);
    let out = net.forward(&x, Mode::Eval);
    (0..records.len())
        .map(|s| {
            let vals: Vec<f64> =
                out.sample(s).iter().map(|v| (*v as f64).max(0.0)).collect();
            RdMap::from_values(n, m, vals).unwrap()
        })
        .collect()
}
