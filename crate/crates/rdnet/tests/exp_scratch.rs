use rdnet::dataset::*;
use rdnet::metrics::*;
use rdnet::model::*;
use rdnet::sim::RadarConfig;
use std::time::Instant;

#[test]
#[ignore]
fn experiment() {
    let cfg = RadarConfig::default();
    let grid = GridSpec::matching(&cfg);
    let params = DatasetParams::default();
    let mut train_recs = Vec::new();
    let mut val_recs = Vec::new();
    let mut test_recs = Vec::new();
    for i in 0..800 {
        let recs = generate_scene_records(&cfg, &grid, &params, i).unwrap();
        if i < 600 {
            train_recs.extend(recs);
        } else if i < 700 {
            val_recs.extend(recs);
        } else {
            test_recs.extend(recs);
        }
    }

    let b = |reps, kernel, width| BlockSpec { reps, kernel, width };
    let cases: Vec<(&str, ModelConfig)> = vec![
        ("stem17", ModelConfig { stem_kernel: 17, ..ModelConfig::default() }),
        ("stem33", ModelConfig { stem_kernel: 33, ..ModelConfig::default() }),
        (
            "stem17-v5",
            ModelConfig {
                stem_kernel: 17,
                blocks: [b(2, 5, 16), b(2, 5, 16), b(2, 5, 16)],
                ..ModelConfig::default()
            },
        ),
        (
            "stem33-deep",
            ModelConfig {
                stem_kernel: 33,
                blocks: [b(3, 3, 16), b(3, 3, 16), b(3, 3, 16)],
                ..ModelConfig::default()
            },
        ),
    ];
    for (name, mcfg) in cases {
        let mut net = build_model::<f32>(&mcfg).unwrap();
        let tc = TrainConfig { epochs: 10, ..TrainConfig::default() };
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
