//! Command-line driver: dataset generation, training, evaluation,
//! prediction, rendering, and timing benchmarks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use rdnet::config::RunConfig;
use rdnet::dataset::{generate_dataset, read_dataset, DatasetRecord};
use rdnet::metrics::{
    evaluate, write_metrics_csv, CnnEstimator, Estimator, MetricRow, PeriodogramEstimator,
};
use rdnet::model::{
    build_model, load_model, predict, train, write_loss_csv, RdNet, TrainReport,
};
use rdnet::periodogram::default_guard;
use rdnet::render::{read_map, write_map, write_pgm};
use rdnet::Result;

#[derive(Parser)]
#[command(name = "rdnet", version, about = "OFDM radar range-Doppler estimation toolkit")]
struct Cli {
    /// Config file (key = value); defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Cnn,
    Periodogram,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/val/test datasets plus a manifest.
    Gen {
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Override dataset.clean_count.
        #[arg(long)]
        clean_count: Option<usize>,
        /// Override dataset.snr_levels_db (comma-separated dB values).
        #[arg(long)]
        snr_levels: Option<String>,
    },
    /// Train the network on a generated dataset directory.
    Train {
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Override train.epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate estimators on the test split; writes metrics.csv.
    Eval {
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Checkpoint path (required for cnn/both).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        estimator: EstimatorKind,
    },
    /// Predict one record's map and write it as a raw map file.
    Predict {
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Record index within the test split.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Render a raw map file to an 8-bit PGM heatmap.
    Render {
        /// Input .rdmp map file.
        map: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Timing table: training time, time per epoch, prediction time.
    Bench {
        #[arg(short, long)]
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Epochs to time (default 1).
        #[arg(long, default_value_t = 1)]
        epochs: usize,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => {
            // Still honor RDNET_SEED with no file present.
            RunConfig::from_str_content("")
        }
    }
}

fn write_manifest(dir: &Path, cfg: &RunConfig, extra: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = String::new();
    text.push_str(&format!("# rdnet {}\n", env!("CARGO_PKG_VERSION")));
    for (k, v) in extra {
        text.push_str(&format!("# {k}: {v}\n"));
    }
    text.push_str(&cfg.to_text());
    std::fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

fn split_path(dataset: &Path, split: &str) -> PathBuf {
    dataset.join(format!("{split}.rdds"))
}

fn load_split(dataset: &Path, split: &str) -> Result<Vec<DatasetRecord>> {
    read_dataset(&split_path(dataset, split))
}

fn cmd_gen(
    cfg: &mut RunConfig,
    out: &Path,
    clean_count: Option<usize>,
    snr_levels: Option<String>,
) -> Result<()> {
    if let Some(c) = clean_count {
        cfg.dataset.clean_count = c;
    }
    if let Some(levels) = snr_levels {
        cfg.dataset.snr_levels_db = levels
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| rdnet::Error::Config(format!("bad SNR level \"{v}\"")))
            })
            .collect::<Result<Vec<f64>>>()?;
    }
    let summary = generate_dataset(&cfg.radar, &cfg.grid, &cfg.dataset, out)?;
    write_manifest(out, cfg, &[("command".into(), "gen".into())])?;
    println!(
        "generated {} records (train {}, val {}, test {})",
        summary.total, summary.counts[0], summary.counts[1], summary.counts[2]
    );
    println!("records per SNR level:");
    for (snr, count) in &summary.per_snr {
        println!("  {snr:>6} dB: {count}");
    }
    Ok(())
}

fn cmd_train(cfg: &mut RunConfig, dataset: &Path, out: &Path, epochs: Option<usize>) -> Result<()> {
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    let train_recs = load_split(dataset, "train")?;
    let val_recs = load_split(dataset, "val")?;
    std::fs::create_dir_all(out)?;
    let checkpoint = out.join("model.rdnc");
    let mut net = build_model::<f32>(&cfg.model)?;
    let started = Instant::now();
    let mut progress = |epoch: usize, tr: f64, va: f64| {
        println!(
            "epoch {epoch}: train loss {tr:.3}, val loss {va:.3} ({:.0}s)",
            started.elapsed().as_secs_f64()
        );
    };
    let report = train(
        &mut net,
        &train_recs,
        &val_recs,
        &cfg.train,
        Some(&checkpoint),
        Some(&mut progress),
    )?;
    write_loss_csv(&report, &out.join("loss.csv"))?;
    write_manifest(
        out,
        cfg,
        &[
            ("command".into(), "train".into()),
            ("best_epoch".into(), report.best_epoch.to_string()),
            ("best_val_loss".into(), report.val_loss[report.best_epoch].to_string()),
        ],
    )?;
    println!(
        "done: {} epochs, best epoch {}, checkpoint {}",
        report.train_loss.len(),
        report.best_epoch,
        checkpoint.display()
    );
    Ok(())
}

fn run_estimators(
    cfg: &RunConfig,
    records: &[DatasetRecord],
    kind: EstimatorKind,
    checkpoint: Option<&Path>,
) -> Result<Vec<(String, Vec<MetricRow>)>> {
    let mut out = Vec::new();
    if matches!(kind, EstimatorKind::Periodogram | EstimatorKind::Both) {
        let guard = default_guard(&cfg.periodogram);
        let mut est = PeriodogramEstimator { spec: cfg.periodogram.clone() };
        let rows = evaluate(&mut est, records, guard)?;
        out.push((est.name().to_string(), rows));
    }
    if matches!(kind, EstimatorKind::Cnn | EstimatorKind::Both) {
        let path = checkpoint.ok_or_else(|| {
            rdnet::Error::Config("--checkpoint is required to evaluate the cnn".into())
        })?;
        let net: RdNet<f32> = load_model(path)?;
        let mut est = CnnEstimator { net };
        let rows = evaluate(&mut est, records, (0, 0))?;
        out.push((est.name().to_string(), rows));
    }
    Ok(out)
}

fn cmd_eval(
    cfg: &RunConfig,
    dataset: &Path,
    out: &Path,
    checkpoint: Option<&Path>,
    kind: EstimatorKind,
) -> Result<()> {
    let records = load_split(dataset, "test")?;
    let results = run_estimators(cfg, &records, kind, checkpoint)?;
    std::fs::create_dir_all(out)?;
    write_metrics_csv(&results, &out.join("metrics.csv"))?;
    write_manifest(out, cfg, &[("command".into(), "eval".into())])?;
    for (name, rows) in &results {
        println!("{name}:");
        for r in rows {
            println!(
                "  snr {:>6} dB: rmse_range {:.3}, rmse_velocity {:.3}, psnr {:.2} dB ({} records)",
                r.snr_db, r.rmse_range, r.rmse_velocity, r.psnr_db, r.count
            );
        }
    }
    Ok(())
}

fn cmd_predict(dataset: &Path, checkpoint: &Path, index: usize, out: &Path) -> Result<()> {
    let records = load_split(dataset, "test")?;
    let record = records.get(index).ok_or_else(|| {
        rdnet::Error::Config(format!(
            "index {index} out of range; test split holds {} records",
            records.len()
        ))
    })?;
    let mut net: RdNet<f32> = load_model(checkpoint)?;
    let map = predict(&mut net, &record.channel);
    write_map(&map, out)?;
    println!(
        "record {index} (snr {} dB): map written to {}",
        record.snr_db,
        out.display()
    );
    Ok(())
}

fn cmd_render(map_path: &Path, out: &Path) -> Result<()> {
    let map = read_map(map_path)?;
    write_pgm(&map, out)?;
    println!("rendered {}x{} map to {}", map.n(), map.m(), out.display());
    Ok(())
}

fn cmd_bench(cfg: &mut RunConfig, dataset: &Path, out: &Path, epochs: usize) -> Result<()> {
    cfg.train.epochs = epochs;
    cfg.train.patience = usize::MAX;
    let train_recs = load_split(dataset, "train")?;
    let val_recs = load_split(dataset, "val")?;
    let test_recs = load_split(dataset, "test")?;

    let mut net = build_model::<f32>(&cfg.model)?;
    let started = Instant::now();
    let report: TrainReport = train(&mut net, &train_recs, &val_recs, &cfg.train, None, None)?;
    let train_time = started.elapsed().as_secs_f64();
    let per_epoch = train_time / report.train_loss.len() as f64;

    let mut timings: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    {
        let guard = default_guard(&cfg.periodogram);
        let mut pg = PeriodogramEstimator { spec: cfg.periodogram.clone() };
        let rows = evaluate(&mut pg, &test_recs, guard)?;
        let total: f64 = rows.iter().map(|r| r.mean_predict_time_s * r.count as f64).sum();
        timings.insert(pg.name().to_string(), (total, test_recs.len()));
    }
    {
        let mut cnn = CnnEstimator { net };
        let rows = evaluate(&mut cnn, &test_recs, (0, 0))?;
        let total: f64 = rows.iter().map(|r| r.mean_predict_time_s * r.count as f64).sum();
        timings.insert(cnn.name().to_string(), (total, test_recs.len()));
    }

    let mut table = String::new();
    table.push_str(&format!(
        "training: {:.2} s total over {} epochs ({:.2} s/epoch, {} records)\n",
        train_time,
        report.train_loss.len(),
        per_epoch,
        train_recs.len()
    ));
    for (name, (total, count)) in &timings {
        table.push_str(&format!(
            "{name} prediction: {:.3} s total over {count} records ({:.3} ms/record)\n",
            total,
            total / *count as f64 * 1e3
        ));
    }
    print!("{table}");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("bench.txt"), &table)?;
    write_manifest(out, cfg, &[("command".into(), "bench".into())])?;
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli.config)?;
    if cli.verbose > 0 {
        eprintln!("effective config:\n{}", cfg.to_text());
    }
    match cli.command {
        Command::Gen { out, clean_count, snr_levels } => {
            cmd_gen(&mut cfg, &out, clean_count, snr_levels)
        }
        Command::Train { dataset, out, epochs } => cmd_train(&mut cfg, &dataset, &out, epochs),
        Command::Eval { dataset, out, checkpoint, estimator } => {
            cmd_eval(&cfg, &dataset, &out, checkpoint.as_deref(), estimator)
        }
        Command::Predict { dataset, checkpoint, index, out } => {
            cmd_predict(&dataset, &checkpoint, index, &out)
        }
        Command::Render { map, out } => cmd_render(&map, &out),
        Command::Bench { dataset, out, epochs } => cmd_bench(&mut cfg, &dataset, &out, epochs),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
