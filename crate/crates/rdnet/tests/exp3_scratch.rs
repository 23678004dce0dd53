use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdnet::dataset::*;
use rdnet::map::RdMap;
use rdnet::metrics::*;
use rdnet::model::*;
use rdnet::nn::{sse_loss, Adam, Dense, Mode, Module, Tensor};
use rdnet::periodogram::extract_peaks;
use rdnet::sim::RadarConfig;

fn to_x(recs: &[DatasetRecord]) -> (Tensor<f32>, Tensor<f32>) {
    let (n, m) = (64usize, 8usize);
    let bs = recs.len();
    let mut x = Tensor::zeros([bs, 2, n, m]);
    let mut y = Tensor::zeros([bs, 1, n, m]);
    for (s, r) in recs.iter().enumerate() {
        let xo = s * 2 * n * m;
        for (i, v) in r.channel.i_plane().iter().enumerate() {
            x.data_mut()[xo + i] = *v as f32;
        }
        for (i, v) in r.channel.q_plane().iter().enumerate() {
            x.data_mut()[xo + n * m + i] = *v as f32;
        }
        for (i, v) in r.gt.values().iter().enumerate() {
            y.data_mut()[s * n * m + i] = *v as f32;
        }
    }
    (x, y)
}

#[test]
#[ignore]
fn linear_bound() {
    let cfg = RadarConfig::default();
    let grid = GridSpec::matching(&cfg);
    let params = DatasetParams::default();
    let mut train_recs = Vec::new();
    let mut test_recs = Vec::new();
    for i in 0..700 {
        let recs = generate_scene_records(&cfg, &grid, &params, i).unwrap();
        if i < 600 {
            train_recs.extend(recs);
        } else {
            test_recs.extend(recs);
        }
    }
    let (x, y) = to_x(&train_recs);
    let mut dense: Dense<f32> = Dense::new("d", 1024, 512, &mut ChaCha8Rng::seed_from_u64(1));
    let lr: f64 = std::env::var("EXPLR").ok().and_then(|v| v.parse().ok()).unwrap_or(1e-3);
    let epochs: usize = std::env::var("EXPEP").ok().and_then(|v| v.parse().ok()).unwrap_or(40);
    let mut adam = Adam::new(lr);
    let count = x.batch();
    for epoch in 0..epochs {
        let mut loss_sum = 0.0;
        for start in (0..count).step_by(64) {
            let end = (start + 64).min(count);
            let idx: Vec<usize> = (start..end).collect();
            let mut bx = Tensor::zeros([idx.len(), 2, 64, 8]);
            let mut by = Tensor::zeros([idx.len(), 1, 64, 8]);
            for (row, &s) in idx.iter().enumerate() {
                bx.data_mut()[row * 1024..(row + 1) * 1024]
                    .copy_from_slice(&x.data()[s * 1024..(s + 1) * 1024]);
                by.data_mut()[row * 512..(row + 1) * 512]
                    .copy_from_slice(&y.data()[s * 512..(s + 1) * 512]);
            }
            let out = dense.forward(&bx, Mode::Train);
            let out4 = Tensor::from_data([idx.len(), 1, 64, 8], out.data().to_vec());
            let (loss, grad) = sse_loss(&out4, &by);
            loss_sum += loss * idx.len() as f64;
            let g2 = Tensor::from_data(out.shape(), grad.data().to_vec());
            dense.zero_grads();
            dense.backward(&g2);
            adam.step(&mut dense);
        }
        if epoch % 10 == 9 {
            println!("epoch {epoch}: train {:.0}", loss_sum / count as f64);
        }
    }

    // Evaluate index RMSE per SNR with the shared matching metric.
    let mut rows: std::collections::BTreeMap<i64, Vec<(f64, f64)>> = Default::default();
    for r in &test_recs {
        let (bx, _) = to_x(std::slice::from_ref(r));
        let out = dense.forward(&bx, Mode::Eval);
        let vals: Vec<f64> = out.data().iter().map(|v| (*v as f64).max(0.0)).collect();
        let map = RdMap::from_values(64, 8, vals).unwrap();
        let pred = extract_peaks(&map, 5, 0, 0);
        let res = match_residuals(&pred, &gt_peaks(&r.gt), 64, 8);
        rows.entry(r.snr_db as i64).or_default().extend(res);
    }
    for (snr, res) in rows {
        let rk = (res.iter().map(|(a, _)| a * a).sum::<f64>() / res.len() as f64).sqrt();
        println!("linear snr {snr}: rmse_k {rk:.3}");
    }
}
