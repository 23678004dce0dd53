//! Evaluation: index RMSE via optimal peak assignment, PSNR, and per-SNR
//! aggregate rows with prediction timing.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};
use crate::map::RdMap;
use crate::model::{predict, RdNet};
use crate::periodogram::{extract_peaks, periodogram_2d, Peak, PeakList, PeriodogramSpec};

/// One evaluation row, aggregated over all records at a single SNR level.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snr_db: f64,
    /// Range-index RMSE in bins, pooled over all residuals at this SNR.
    pub rmse_range: f64,
    /// Velocity-index RMSE in bins.
    pub rmse_velocity: f64,
    /// Mean PSNR in dB; +inf sentinel rows are excluded from the mean and
    /// counted in `psnr_inf_count`.
    pub psnr_db: f64,
    pub psnr_inf_count: usize,
    pub mean_predict_time_s: f64,
    pub count: usize,
    /// Records the estimator failed on (skipped, not fatal).
    pub failures: usize,
}

/// Wrap-around distance between two bin indices on a circle of `len` bins.
pub fn wrap_index_distance(a: usize, b: usize, len: usize) -> f64 {
    let d = (a as i64 - b as i64).rem_euclid(len as i64) as usize;
    d.min(len - d) as f64
}

/// Squared assignment cost between a predicted and a true peak.
fn pair_cost(p: &Peak, g: &Peak, n: usize, m: usize) -> f64 {
    let dk = wrap_index_distance(p.k, g.k, n);
    let dl = wrap_index_distance(p.l, g.l, m);
    dk * dk + dl * dl
}

/// Per-axis residual of a matched pair; missing predictions are charged the
/// maximum wrap distance on each axis.
fn pair_residual(p: Option<&Peak>, g: &Peak, n: usize, m: usize) -> (f64, f64) {
    match p {
        Some(p) => (wrap_index_distance(p.k, g.k, n), wrap_index_distance(p.l, g.l, m)),
        None => ((n / 2) as f64, (m / 2) as f64),
    }
}

fn sentinel_cost(n: usize, m: usize) -> f64 {
    let (dk, dl) = ((n / 2) as f64, (m / 2) as f64);
    dk * dk + dl * dl
}

/// Minimum-cost one-to-one assignment of `pred` onto `gt` (columns of the
/// cost matrix). Exhaustive over permutations up to 6 ground-truth peaks,
/// Hungarian algorithm beyond. Short predictions are padded with a
/// max-cost sentinel.
///
/// Returns one (k, l) residual pair per ground-truth peak.
pub fn match_residuals(pred: &PeakList, gt: &PeakList, n: usize, m: usize) -> Vec<(f64, f64)> {
    if gt.is_empty() {
        // Nothing to estimate: every spurious prediction is a sentinel-cost
        // mismatch, surfaced as one residual pair per extra peak.
        return pred.iter().map(|_| ((n / 2) as f64, (m / 2) as f64)).collect();
    }
    let rows = gt.len();
    // cost[g][p]; column index >= pred.len() is the sentinel.
    let cols = rows.max(pred.len());
    let mut cost = vec![vec![0.0f64; cols]; rows];
    for (gi, g) in gt.iter().enumerate() {
        for p in 0..cols {
            cost[gi][p] = match pred.get(p) {
                Some(peak) => pair_cost(peak, g, n, m),
                None => sentinel_cost(n, m),
            };
        }
    }
    let assignment = if rows <= 6 {
        best_permutation(&cost)
    } else {
        hungarian(&cost)
    };
    gt.iter()
        .zip(&assignment)
        .map(|(g, &p)| pair_residual(pred.get(p), g, n, m))
        .collect()
}

/// (rmse_k, rmse_l) of the optimal matching.
pub fn match_and_rmse(pred: &PeakList, gt: &PeakList, n: usize, m: usize) -> (f64, f64) {
    let residuals = match_residuals(pred, gt, n, m);
    if residuals.is_empty() {
        return (0.0, 0.0);
    }
    let c = residuals.len() as f64;
    let sk: f64 = residuals.iter().map(|(k, _)| k * k).sum();
    let sl: f64 = residuals.iter().map(|(_, l)| l * l).sum();
    ((sk / c).sqrt(), (sl / c).sqrt())
}

/// Exhaustive search over column permutations; rows <= 6 keeps this cheap.
fn best_permutation(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    let cols = cost[0].len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(rows);
    let mut used = vec![false; cols];
    fn recurse(
        cost: &[Vec<f64>],
        row: usize,
        acc: f64,
        current: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if let Some((b, _)) = best {
            if acc >= *b {
                return;
            }
        }
        if row == cost.len() {
            *best = Some((acc, current.clone()));
            return;
        }
        for p in 0..used.len() {
            if used[p] {
                continue;
            }
            used[p] = true;
            current.push(p);
            recurse(cost, row + 1, acc + cost[row][p], current, used, best);
            current.pop();
            used[p] = false;
        }
    }
    recurse(cost, 0, 0.0, &mut current, &mut used, &mut best);
    best.unwrap().1
}

/// O(n^3) Hungarian algorithm (potentials form) on a rows x cols cost
/// matrix with rows <= cols; returns the chosen column per row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    let cols = cost[0].len();
    assert!(rows <= cols);
    let inf = f64::INFINITY;
    // 1-based potentials over rows/columns.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut match_col = vec![0usize; cols + 1]; // row matched to each column

    for i in 1..=rows {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if match_col[j] > 0 {
            assignment[match_col[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Peak signal-to-noise ratio in dB between two maps, each min-max
/// normalized to [0, 1] first. Identical maps give the +inf sentinel.
pub fn psnr(pred: &RdMap, gt: &RdMap) -> Result<f64> {
    if pred.n() != gt.n() || pred.m() != gt.m() {
        return Err(Error::Shape(format!(
            "psnr shape mismatch: {}x{} vs {}x{}",
            pred.n(),
            pred.m(),
            gt.n(),
            gt.m()
        )));
    }
    let p = pred.normalized();
    let g = gt.normalized();
    let count = p.values().len() as f64;
    let mse: f64 =
        p.values().iter().zip(g.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / count;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (p.max() / mse.sqrt()).log10())
}

/// Anything that turns a channel estimate into a range-Doppler map.
pub trait Estimator {
    fn name(&self) -> &str;
    fn estimate(&mut self, record: &DatasetRecord) -> Result<RdMap>;
}

/// The 2D-periodogram baseline.
pub struct PeriodogramEstimator {
    pub spec: PeriodogramSpec,
}

impl Estimator for PeriodogramEstimator {
    fn name(&self) -> &str {
        "periodogram"
    }

    fn estimate(&mut self, record: &DatasetRecord) -> Result<RdMap> {
        periodogram_2d(&record.channel, &self.spec)
    }
}

/// The trained network.
pub struct CnnEstimator {
    pub net: RdNet<f32>,
}

impl Estimator for CnnEstimator {
    fn name(&self) -> &str {
        "cnn"
    }

    fn estimate(&mut self, record: &DatasetRecord) -> Result<RdMap> {
        Ok(predict(&mut self.net, &record.channel))
    }
}

/// Oracle that echoes the ground truth; pins the metric floor in tests.
pub struct IdealEstimator;

impl Estimator for IdealEstimator {
    fn name(&self) -> &str {
        "ideal"
    }

    fn estimate(&mut self, record: &DatasetRecord) -> Result<RdMap> {
        Ok(record.gt.clone())
    }
}

/// Ground-truth peaks: the nonzero cells of the label map.
pub fn gt_peaks(gt: &RdMap) -> PeakList {
    let mut peaks: PeakList = Vec::new();
    for k in 0..gt.n() {
        for l in 0..gt.m() {
            let v = gt.get(k, l);
            if v > 0.0 {
                peaks.push(Peak { k, l, magnitude: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap());
    peaks
}

/// Maps a peak index from a zero-padded map back onto the base grid, only
/// valid when the padded size is an integer multiple of the base size.
fn scale_peaks(peaks: &PeakList, from_n: usize, to_n: usize, from_m: usize, to_m: usize) -> PeakList {
    peaks
        .iter()
        .map(|p| Peak {
            k: (p.k * to_n + from_n / 2) / from_n % to_n,
            l: (p.l * to_m + from_m / 2) / from_m % to_m,
            magnitude: p.magnitude,
        })
        .collect()
}

/// Runs `estimator` over `records`, extracts as many peaks as the record's
/// scene holds, and aggregates one MetricRow per SNR level found. Residuals
/// are pooled per SNR bin before the root is taken. Timing covers the
/// estimator call only, single stream.
pub fn evaluate(
    estimator: &mut dyn Estimator,
    records: &[DatasetRecord],
    guard: (usize, usize),
) -> Result<Vec<MetricRow>> {
    if records.is_empty() {
        return Err(Error::Config("cannot evaluate an empty split".into()));
    }
    struct Bin {
        snr_db: f64,
        residuals: Vec<(f64, f64)>,
        psnr_sum: f64,
        psnr_finite: usize,
        psnr_inf: usize,
        time_s: f64,
        count: usize,
        failures: usize,
    }
    let mut bins: Vec<Bin> = Vec::new();
    for record in records {
        let (n, m) = (record.gt.n(), record.gt.m());
        let snr = record.snr_db;
        let idx = match bins.iter().position(|b| b.snr_db == snr) {
            Some(i) => i,
            None => {
                bins.push(Bin {
                    snr_db: snr,
                    residuals: Vec::new(),
                    psnr_sum: 0.0,
                    psnr_finite: 0,
                    psnr_inf: 0,
                    time_s: 0.0,
                    count: 0,
                    failures: 0,
                });
                bins.len() - 1
            }
        };
        let t = Instant::now();
        let map = match estimator.estimate(record) {
            Ok(map) => map,
            Err(_) => {
                bins[idx].failures += 1;
                continue;
            }
        };
        let elapsed = t.elapsed().as_secs_f64();
        let gt = gt_peaks(&record.gt);
        let mut peaks = extract_peaks(&map, gt.len(), guard.0, guard.1);
        if map.n() != n || map.m() != m {
            peaks = scale_peaks(&peaks, map.n(), n, map.m(), m);
        }
        let residuals = match_residuals(&peaks, &gt, n, m);
        let p = psnr(&map, &record.gt)?;
        let bin = &mut bins[idx];
        bin.residuals.extend(residuals);
        if p.is_finite() {
            bin.psnr_sum += p;
            bin.psnr_finite += 1;
        } else {
            bin.psnr_inf += 1;
        }
        bin.time_s += elapsed;
        bin.count += 1;
    }
    bins.sort_by(|a, b| a.snr_db.partial_cmp(&b.snr_db).unwrap());
    Ok(bins
        .into_iter()
        .map(|b| {
            let c = b.residuals.len().max(1) as f64;
            let sk: f64 = b.residuals.iter().map(|(k, _)| k * k).sum();
            let sl: f64 = b.residuals.iter().map(|(_, l)| l * l).sum();
            MetricRow {
                snr_db: b.snr_db,
                rmse_range: (sk / c).sqrt(),
                rmse_velocity: (sl / c).sqrt(),
                psnr_db: if b.psnr_finite > 0 {
                    b.psnr_sum / b.psnr_finite as f64
                } else {
                    f64::INFINITY
                },
                psnr_inf_count: b.psnr_inf,
                mean_predict_time_s: b.time_s / b.count.max(1) as f64,
                count: b.count,
                failures: b.failures,
            }
        })
        .collect())
}

/// Writes metric rows as CSV with a fixed documented header.
pub fn write_metrics_csv(rows: &[(String, Vec<MetricRow>)], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "estimator,snr_db,rmse_range,rmse_velocity,psnr_db,psnr_inf_count,mean_predict_time_s,count,failures"
    )?;
    for (name, metric_rows) in rows {
        for r in metric_rows {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{}",
                name,
                r.snr_db,
                r.rmse_range,
                r.rmse_velocity,
                r.psnr_db,
                r.psnr_inf_count,
                r.mean_predict_time_s,
                r.count,
                r.failures
            )?;
        }
    }
    f.flush()?;
    Ok(())
}
