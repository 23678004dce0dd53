//! Scene sampling, ground-truth label construction, and dataset generation.

mod container;

pub use container::{read_dataset, write_dataset, DatasetHeader, DatasetReader, MAGIC, VERSION};

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::map::RdMap;
use crate::sim::{self, ChannelEstimate, RadarConfig, Target, TargetScene};

/// Uniform label grids over [-0.5, 0.5): F1[i] = -0.5 + i/n_f1,
/// F2[j] = -0.5 + j/n_f2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_f1: usize,
    pub n_f2: usize,
}

impl GridSpec {
    /// Default grid matching the map dimensions, so label indices are exact.
    pub fn matching(cfg: &RadarConfig) -> Self {
        GridSpec { n_f1: cfg.n, n_f2: cfg.m }
    }

    pub fn f1(&self, i: usize) -> f64 {
        -0.5 + i as f64 / self.n_f1 as f64
    }

    pub fn f2(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n_f2 as f64
    }

    fn index_on(cardinality: usize, f: f64) -> Option<usize> {
        let x = (f + 0.5) * cardinality as f64;
        let i = x.round() as i64;
        if (x - i as f64).abs() > 1e-9 || i < 0 || i >= cardinality as i64 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Index of an on-grid f1 value, or None when off-grid.
    pub fn index_of_f1(&self, f: f64) -> Option<usize> {
        Self::index_on(self.n_f1, f)
    }

    pub fn index_of_f2(&self, f: f64) -> Option<usize> {
        Self::index_on(self.n_f2, f)
    }
}

/// Amplitude sampling rule b = |offset + r|, r standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRule {
    pub offset: f64,
}

impl Default for AmplitudeRule {
    fn default() -> Self {
        AmplitudeRule { offset: 0.1 }
    }
}

impl AmplitudeRule {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        (self.offset + sim::standard_normal(rng)).abs()
    }
}

const PLACEMENT_RETRY_BUDGET: usize = 100_000;

/// Samples `n_targets` targets on the grid with distinct frequencies
/// satisfying the wrap-around minimum separations `min_sep = (sep_f1, sep_f2)`
/// on both axes, rejection-resampling until the constraints hold.
///
/// The common phase is left at 0; callers that want a random phase set it.
pub fn sample_scene<R: Rng>(
    rng: &mut R,
    grid: &GridSpec,
    n_targets: usize,
    amp_rule: &AmplitudeRule,
    min_sep: (f64, f64),
) -> Result<TargetScene> {
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(n_targets);
    let mut attempts = 0usize;
    while placed.len() < n_targets {
        attempts += 1;
        if attempts > PLACEMENT_RETRY_BUDGET {
            return Err(Error::Placement { attempts, targets: n_targets });
        }
        let f1 = grid.f1(rng.gen_range(0..grid.n_f1));
        let f2 = grid.f2(rng.gen_range(0..grid.n_f2));
        let ok = placed.iter().all(|&(a, b)| {
            sim::wrap_distance(a, f1) >= min_sep.0 && sim::wrap_distance(b, f2) >= min_sep.1
        });
        if ok {
            placed.push((f1, f2));
        }
    }
    let targets = placed
        .into_iter()
        .map(|(f1, f2)| Target { b: amp_rule.sample(rng), f1, f2 })
        .collect();
    Ok(TargetScene { targets, phi: 0.0 })
}

/// Builds the sparse ground-truth map: zero everywhere except
/// g_t(k_p, l_p) = beta * ln(gamma * b_p + 1) at each target cell, with
/// k_p = floor(i_p * N / N_F1) and l_p = floor(j_p * M / N_F2).
pub fn build_gt_map(
    scene: &TargetScene,
    grid: &GridSpec,
    beta: f64,
    gamma: f64,
    n: usize,
    m: usize,
) -> Result<RdMap> {
    let mut map = RdMap::zeros(n, m);
    for t in &scene.targets {
        let i = grid.index_of_f1(t.f1).ok_or(Error::OffGrid { freq: t.f1, axis: "f1" })?;
        let j = grid.index_of_f2(t.f2).ok_or(Error::OffGrid { freq: t.f2, axis: "f2" })?;
        let k = i * n / grid.n_f1;
        let l = j * m / grid.n_f2;
        map.set(k, l, beta * (gamma * t.b + 1.0).ln());
    }
    Ok(map)
}

/// One (channel, ground truth, SNR, scene) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub channel: ChannelEstimate,
    pub gt: RdMap,
    pub snr_db: f64,
    pub scene: TargetScene,
}

/// Dataset generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    /// Number of noise-free scenes; each yields one record per SNR level.
    pub clean_count: usize,
    pub snr_levels_db: Vec<f64>,
    pub n_targets: usize,
    pub beta: f64,
    pub gamma: f64,
    pub amp_rule: AmplitudeRule,
    /// Draw a common phase uniform in [0, 2pi) per scene; default keeps phi = 0.
    pub random_phase: bool,
    /// Train/val/test fractions over clean scenes; must sum to 1.
    pub split: (f64, f64, f64),
    pub seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            clean_count: 3000,
            snr_levels_db: default_snr_levels(),
            n_targets: 5,
            beta: 100.0,
            gamma: 100.0,
            amp_rule: AmplitudeRule::default(),
            random_phase: false,
            split: (0.8, 0.1, 0.1),
            seed: 0,
        }
    }
}

/// Ten SNR levels evenly spaced over [-15, 30] dB.
pub fn default_snr_levels() -> Vec<f64> {
    (0..10).map(|i| -15.0 + 5.0 * i as f64).collect()
}

fn scene_rng(seed: u64, scene_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * scene_index);
    rng
}

fn noise_rng(seed: u64, record_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * record_index + 1);
    rng
}

/// All records derived from one clean scene (one per SNR level, shared GT).
pub fn generate_scene_records(
    cfg: &RadarConfig,
    grid: &GridSpec,
    params: &DatasetParams,
    scene_index: usize,
) -> Result<Vec<DatasetRecord>> {
    let min_sep = (1.0 / (3.0 * cfg.n as f64), 1.0 / (3.0 * cfg.m as f64));
    let mut rng = scene_rng(params.seed, scene_index as u64);
    let mut scene = sample_scene(&mut rng, grid, params.n_targets, &params.amp_rule, min_sep)?;
    if params.random_phase {
        scene.phi = rng.gen::<f64>() * std::f64::consts::TAU;
    }
    let gt = build_gt_map(&scene, grid, params.beta, params.gamma, cfg.n, cfg.m)?;
    let clean = sim::synthesize_channel(&scene, cfg)?;
    let levels = params.snr_levels_db.len();
    let mut records = Vec::with_capacity(levels);
    for (j, &snr) in params.snr_levels_db.iter().enumerate() {
        let record_index = (scene_index * levels + j) as u64;
        let mut nrng = noise_rng(params.seed, record_index);
        let channel = sim::add_awgn(&clean, snr, &mut nrng)?;
        records.push(DatasetRecord { channel, gt: gt.clone(), snr_db: snr, scene: scene.clone() });
    }
    Ok(records)
}

/// Summary of a generated dataset directory.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSummary {
    pub counts: [usize; 3], // train, val, test records
    pub total: usize,
    pub per_snr: Vec<(f64, usize)>,
}

/// Generates the full SNR-stratified dataset and writes `train.rdds`,
/// `val.rdds`, `test.rdds` plus a plain-text `manifest.txt` into `dir`.
///
/// Splitting is by clean scene so no scene (and hence no GT map) leaks
/// across splits. Deterministic given `params.seed`.
pub fn generate_dataset(
    cfg: &RadarConfig,
    grid: &GridSpec,
    params: &DatasetParams,
    dir: &Path,
) -> Result<GenerationSummary> {
    cfg.validate()?;
    let (ft, fv, fe) = params.split;
    if !(ft >= 0.0 && fv >= 0.0 && fe >= 0.0 && (ft + fv + fe - 1.0).abs() < 1e-9) {
        return Err(Error::Config(format!("split fractions {:?} must sum to 1", params.split)));
    }
    if params.snr_levels_db.is_empty() {
        return Err(Error::Config("need at least one SNR level".into()));
    }
    std::fs::create_dir_all(dir)?;

    let n_train = (params.clean_count as f64 * ft).round() as usize;
    let n_val = (params.clean_count as f64 * fv).round() as usize;
    let n_val = n_val.min(params.clean_count - n_train);
    let boundaries = [0, n_train, n_train + n_val, params.clean_count];
    let names = ["train.rdds", "val.rdds", "test.rdds"];

    let mut counts = [0usize; 3];
    let mut per_snr: Vec<(f64, usize)> =
        params.snr_levels_db.iter().map(|&s| (s, 0usize)).collect();

    for (split, name) in names.iter().enumerate() {
        let mut records = Vec::new();
        for scene_index in boundaries[split]..boundaries[split + 1] {
            let scene_records = generate_scene_records(cfg, grid, params, scene_index)?;
            for r in &scene_records {
                if let Some(entry) = per_snr.iter_mut().find(|(s, _)| *s == r.snr_db) {
                    entry.1 += 1;
                }
            }
            records.extend(scene_records);
        }
        counts[split] = records.len();
        write_dataset(&dir.join(name), &records)?;
    }

    let total = counts.iter().sum();
    let summary = GenerationSummary { counts, total, per_snr };
    write_manifest(cfg, grid, params, dir, &summary)?;
    Ok(summary)
}

fn write_manifest(
    cfg: &RadarConfig,
    grid: &GridSpec,
    params: &DatasetParams,
    dir: &Path,
    summary: &GenerationSummary,
) -> Result<()> {
    let mut f = std::fs::File::create(dir.join("manifest.txt"))?;
    writeln!(f, "format = RDDS v{VERSION}")?;
    writeln!(f, "seed = {}", params.seed)?;
    writeln!(f, "radar.n = {}", cfg.n)?;
    writeln!(f, "radar.m = {}", cfg.m)?;
    writeln!(f, "grid.n_f1 = {}", grid.n_f1)?;
    writeln!(f, "grid.n_f2 = {}", grid.n_f2)?;
    writeln!(f, "dataset.clean_count = {}", params.clean_count)?;
    writeln!(f, "dataset.n_targets = {}", params.n_targets)?;
    writeln!(f, "dataset.beta = {}", params.beta)?;
    writeln!(f, "dataset.gamma = {}", params.gamma)?;
    writeln!(f, "dataset.amp_offset = {}", params.amp_rule.offset)?;
    writeln!(f, "dataset.random_phase = {}", params.random_phase)?;
    writeln!(f, "dataset.split = {}/{}/{}", params.split.0, params.split.1, params.split.2)?;
    let levels: Vec<String> = params.snr_levels_db.iter().map(|s| s.to_string()).collect();
    writeln!(f, "dataset.snr_levels_db = {}", levels.join(","))?;
    writeln!(f, "records.train = {}", summary.counts[0])?;
    writeln!(f, "records.val = {}", summary.counts[1])?;
    writeln!(f, "records.test = {}", summary.counts[2])?;
    writeln!(f, "records.total = {}", summary.total)?;
    for (snr, count) in &summary.per_snr {
        writeln!(f, "records.snr[{snr}] = {count}")?;
    }
    Ok(())
}
