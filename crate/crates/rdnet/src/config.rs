//! Flat key=value run configuration with section prefixes.
//!
//! Example:
//! ```text
//! # comment
//! seed = 7
//! radar.n = 64
//! dataset.snr_levels_db = -15,-10,-5,0,5,10,15,20,25,30
//! model.blocks = 2x3x16, 2x3x16, 2x3x16
//! train.lr = 8e-5
//! ```
//!
//! Unknown keys are errors. The `RDNET_SEED` environment variable, when
//! set, overrides the configured seed.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::{DatasetParams, GridSpec};
use crate::error::{Error, Result};
use crate::model::{BlockSpec, ModelConfig, TrainConfig};
use crate::periodogram::{PeriodogramSpec, Window};
use crate::sim::RadarConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub radar: RadarConfig,
    pub grid: GridSpec,
    pub dataset: DatasetParams,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub periodogram: PeriodogramSpec,
    /// Global seed; propagated to dataset/model/train seeds.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let radar = RadarConfig::default();
        let grid = GridSpec::matching(&radar);
        let mut cfg = RunConfig {
            radar,
            grid,
            dataset: DatasetParams::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            periodogram: PeriodogramSpec::default(),
            seed: 0,
        };
        cfg.apply_seed(0);
        cfg
    }
}

impl RunConfig {
    fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.dataset.seed = seed;
        self.model.seed = seed;
        self.train.seed = seed;
    }

    /// Parses a config file; missing file is an error, empty file gives
    /// the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_content(&text)
    }

    pub fn from_str_content(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        // Global seed first so section-specific seeds may override it.
        if let Some(v) = entries.remove("seed") {
            cfg.apply_seed(parse(&v, "seed")?);
        }
        for (key, value) in entries {
            cfg.set(&key, &value)?;
        }
        if let Ok(env_seed) = std::env::var("RDNET_SEED") {
            let seed = env_seed
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("RDNET_SEED={env_seed} is not a u64")))?;
            cfg.apply_seed(seed);
        }
        // The model always maps onto the radar geometry.
        cfg.model.n = cfg.radar.n;
        cfg.model.m = cfg.radar.m;
        cfg.radar.validate()?;
        cfg.model.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "radar.n" => self.radar.n = parse(value, key)?,
            "radar.m" => self.radar.m = parse(value, key)?,
            "radar.delta_f" => self.radar.delta_f = parse(value, key)?,
            "radar.f_c" => self.radar.f_c = parse(value, key)?,
            "radar.n_cp" => self.radar.n_cp = parse(value, key)?,
            "radar.sigma_rcs" => self.radar.sigma_rcs = parse(value, key)?,
            "grid.n_f1" => self.grid.n_f1 = parse(value, key)?,
            "grid.n_f2" => self.grid.n_f2 = parse(value, key)?,
            "dataset.clean_count" => self.dataset.clean_count = parse(value, key)?,
            "dataset.snr_levels_db" => self.dataset.snr_levels_db = parse_list(value, key)?,
            "dataset.n_targets" => self.dataset.n_targets = parse(value, key)?,
            "dataset.beta" => self.dataset.beta = parse(value, key)?,
            "dataset.gamma" => self.dataset.gamma = parse(value, key)?,
            "dataset.amp_offset" => self.dataset.amp_rule.offset = parse(value, key)?,
            "dataset.random_phase" => self.dataset.random_phase = parse_bool(value, key)?,
            "dataset.split" => {
                let parts: Vec<f64> = parse_list(value, key)?;
                if parts.len() != 3 {
                    return Err(Error::Config(format!("{key}: expected three fractions")));
                }
                self.dataset.split = (parts[0], parts[1], parts[2]);
            }
            "dataset.seed" => self.dataset.seed = parse(value, key)?,
            "model.stem_layers" => self.model.stem_layers = parse(value, key)?,
            "model.stem_width" => self.model.stem_width = parse(value, key)?,
            "model.stem_kernel" => self.model.stem_kernel = parse(value, key)?,
            "model.stem_kernel_cols" => self.model.stem_kernel_cols = parse(value, key)?,
            "model.blocks" => self.model.blocks = parse_blocks(value)?,
            "model.dropout" => self.model.dropout = parse(value, key)?,
            "model.conv_head" => self.model.conv_head = parse_bool(value, key)?,
            "model.seed" => self.model.seed = parse(value, key)?,
            "train.lr" => self.train.lr = parse(value, key)?,
            "train.batch_size" => self.train.batch_size = parse(value, key)?,
            "train.epochs" => self.train.epochs = parse(value, key)?,
            "train.patience" => self.train.patience = parse(value, key)?,
            "train.seed" => self.train.seed = parse(value, key)?,
            "periodogram.zp_k" => self.periodogram.zp_k = parse(value, key)?,
            "periodogram.zp_l" => self.periodogram.zp_l = parse(value, key)?,
            "periodogram.window" => {
                self.periodogram.window = match value.to_ascii_lowercase().as_str() {
                    "none" => Window::None,
                    "hann" => Window::Hann,
                    other => {
                        return Err(Error::Config(format!("unknown window \"{other}\"")));
                    }
                }
            }
            other => return Err(Error::Config(format!("unknown config key \"{other}\""))),
        }
        Ok(())
    }

    /// Serializes every setting back out, suitable for manifests; parsing
    /// the result reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let snrs: Vec<String> = self.dataset.snr_levels_db.iter().map(|v| v.to_string()).collect();
        let blocks: Vec<String> = self
            .model
            .blocks
            .iter()
            .map(|b| format!("{}x{}x{}", b.reps, b.kernel, b.width))
            .collect();
        let window = match self.periodogram.window {
            Window::None => "none",
            Window::Hann => "hann",
        };
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "radar.n = {}", self.radar.n).unwrap();
        writeln!(s, "radar.m = {}", self.radar.m).unwrap();
        writeln!(s, "radar.delta_f = {}", self.radar.delta_f).unwrap();
        writeln!(s, "radar.f_c = {}", self.radar.f_c).unwrap();
        writeln!(s, "radar.n_cp = {}", self.radar.n_cp).unwrap();
        writeln!(s, "radar.sigma_rcs = {}", self.radar.sigma_rcs).unwrap();
        writeln!(s, "grid.n_f1 = {}", self.grid.n_f1).unwrap();
        writeln!(s, "grid.n_f2 = {}", self.grid.n_f2).unwrap();
        writeln!(s, "dataset.clean_count = {}", self.dataset.clean_count).unwrap();
        writeln!(s, "dataset.snr_levels_db = {}", snrs.join(",")).unwrap();
        writeln!(s, "dataset.n_targets = {}", self.dataset.n_targets).unwrap();
        writeln!(s, "dataset.beta = {}", self.dataset.beta).unwrap();
        writeln!(s, "dataset.gamma = {}", self.dataset.gamma).unwrap();
        writeln!(s, "dataset.amp_offset = {}", self.dataset.amp_rule.offset).unwrap();
        writeln!(s, "dataset.random_phase = {}", self.dataset.random_phase).unwrap();
        writeln!(
            s,
            "dataset.split = {},{},{}",
            self.dataset.split.0, self.dataset.split.1, self.dataset.split.2
        )
        .unwrap();
        writeln!(s, "dataset.seed = {}", self.dataset.seed).unwrap();
        writeln!(s, "model.stem_layers = {}", self.model.stem_layers).unwrap();
        writeln!(s, "model.stem_width = {}", self.model.stem_width).unwrap();
        writeln!(s, "model.stem_kernel = {}", self.model.stem_kernel).unwrap();
        writeln!(s, "model.stem_kernel_cols = {}", self.model.stem_kernel_cols).unwrap();
        writeln!(s, "model.blocks = {}", blocks.join(",")).unwrap();
        writeln!(s, "model.dropout = {}", self.model.dropout).unwrap();
        writeln!(s, "model.conv_head = {}", self.model.conv_head).unwrap();
        writeln!(s, "model.seed = {}", self.model.seed).unwrap();
        writeln!(s, "train.lr = {}", self.train.lr).unwrap();
        writeln!(s, "train.batch_size = {}", self.train.batch_size).unwrap();
        writeln!(s, "train.epochs = {}", self.train.epochs).unwrap();
        writeln!(s, "train.patience = {}", self.train.patience).unwrap();
        writeln!(s, "train.seed = {}", self.train.seed).unwrap();
        writeln!(s, "periodogram.zp_k = {}", self.periodogram.zp_k).unwrap();
        writeln!(s, "periodogram.zp_l = {}", self.periodogram.zp_l).unwrap();
        writeln!(s, "periodogram.window = {window}").unwrap();
        s
    }
}

fn parse<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse \"{value}\"")))
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got \"{value}\""))),
    }
}

fn parse_list(value: &str, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse::<f64>(v.trim(), key))
        .collect()
}

/// Three comma-separated UxVxW triples, e.g. "2x3x16,2x3x16,2x3x16".
fn parse_blocks(value: &str) -> Result<[BlockSpec; 3]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "model.blocks: expected exactly three UxVxW triples, got {}",
            parts.len()
        )));
    }
    let mut blocks = [BlockSpec { reps: 1, kernel: 1, width: 1 }; 3];
    for (b, part) in blocks.iter_mut().zip(&parts) {
        let dims: Vec<&str> = part.split('x').collect();
        if dims.len() != 3 {
            return Err(Error::Config(format!("model.blocks: bad triple \"{part}\"")));
        }
        b.reps = parse(dims[0], "model.blocks")?;
        b.kernel = parse(dims[1], "model.blocks")?;
        b.width = parse(dims[2], "model.blocks")?;
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = RunConfig::from_str_content("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn parses_sections_and_comments() {
        let text = "\n# comment\nseed = 9\nradar.n = 32   # trailing\nmodel.blocks = 1x3x8, 2x5x8, 1x1x4\ntrain.lr = 1e-3\ndataset.snr_levels_db = 0, 10\n";
        let cfg = RunConfig::from_str_content(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dataset.seed, 9);
        assert_eq!(cfg.radar.n, 32);
        assert_eq!(cfg.model.n, 32);
        assert_eq!(cfg.model.blocks[1], BlockSpec { reps: 2, kernel: 5, width: 8 });
        assert_eq!(cfg.train.lr, 1e-3);
        assert_eq!(cfg.dataset.snr_levels_db, vec![0.0, 10.0]);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_str_content("radar.bogus = 1").is_err());
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(RunConfig::from_str_content("just words").is_err());
    }

    #[test]
    fn section_seed_overrides_global() {
        let cfg = RunConfig::from_str_content("seed = 3\ntrain.seed = 8").unwrap();
        assert_eq!(cfg.train.seed, 8);
        assert_eq!(cfg.dataset.seed, 3);
    }

    #[test]
    fn env_seed_overrides_file() {
        // Env mutation: keep this the only test touching RDNET_SEED.
        std::env::set_var("RDNET_SEED", "4242");
        let cfg = RunConfig::from_str_content("seed = 3").unwrap();
        std::env::remove_var("RDNET_SEED");
        assert_eq!(cfg.seed, 4242);
        assert_eq!(cfg.model.seed, 4242);
    }

    #[test]
    fn text_roundtrip() {
        let text = "seed = 11\nradar.n = 16\nradar.m = 4\nmodel.dropout = 0.25\nperiodogram.window = hann\n";
        let cfg = RunConfig::from_str_content(text).unwrap();
        let back = RunConfig::from_str_content(&cfg.to_text()).unwrap();
        assert_eq!(cfg, back);
    }
}
