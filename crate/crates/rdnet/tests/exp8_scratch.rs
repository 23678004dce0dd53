use rdnet::dataset::*;
use rdnet::metrics::*;
use rdnet::model::*;
use rdnet::nn::Module;
use rdnet::sim::RadarConfig;
use std::f64::consts::PI;
use std::time::Instant;

fn set_dft_stem(net: &mut impl Module<f32>) {
    net.visit_params(&mut |name, w, _| {
        if name == "stem0.conv.w" && w.len() == 128 * 2 * 63 {
            for q in 0..64usize {
                for dy in 0..63usize {
                    let ph = 2.0 * PI * (q as f64 / 64.0) * (dy as f64 - 31.0);
                    let (s, c) = ph.sin_cos();
                    w[((2 * q) * 2) * 63 + dy] = (c / 63.0) as f32;
                    w[((2 * q) * 2 + 1) * 63 + dy] = (s / 63.0) as f32;
                    w[((2 * q + 1) * 2) * 63 + dy] = (-s / 63.0) as f32;
                    w[((2 * q + 1) * 2 + 1) * 63 + dy] = (c / 63.0) as f32;
                }
            }
        }
    });
}

#[test]
#[ignore]
fn experiment() {
    let cfg = RadarConfig::default();
    let grid = GridSpec::matching(&cfg);
    let params = DatasetParams::default();
    let mut train_recs = Vec::new();
    let mut val_recs = Vec::new();
    let mut test_recs = Vec::new();
    for i in 0..1400 {
        let recs = generate_scene_records(&cfg, &grid, &params, i).unwrap();
        if i < 1200 {
            train_recs.extend(recs);
        } else if i < 1300 {
            val_recs.extend(recs);
        } else {
            test_recs.extend(recs);
        }
    }

    let b = |reps, kernel, width| BlockSpec { reps, kernel, width };
    let mcfg = ModelConfig {
        stem_kernel: 63,
        stem_kernel_cols: 1,
        stem_width: 128,
        blocks: [b(2, 1, 128), b(2, 1, 64), b(2, 1, 64)],
        ..ModelConfig::default()
    };
    for (name, dft) in [("wide-dftstem", true), ("wide-rand", false)] {
        let mut net = build_model::<f32>(&mcfg).unwrap();
        if dft {
            set_dft_stem(&mut net);
        }
        let tc = TrainConfig { epochs: 8, ..TrainConfig::default() };
        let t = Instant::now();
        let report = train(&mut net, &train_recs, &val_recs, &tc, None, None).unwrap();
        println!(
            "{name}: {:.0}s best {} val {:?}",
            t.elapsed().as_secs_f64(),
            report.best_epoch,
            report.val_loss.iter().map(|v| *v as i64).collect::<Vec<_>>()
        );
        let rows = evaluate(&mut CnnEstimator { net }, &test_recs, (0, 0)).unwrap();
        for r in &rows {
            println!("cnn {name} snr {:>5}: rmse_k {:.3} psnr {:.1}", r.snr_db, r.rmse_range, r.psnr_db);
        }
    }
}
