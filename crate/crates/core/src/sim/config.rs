use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::coreset::SampleParams;
use crate::dataio::DatasetFormat;
use crate::energy::{CostTable, TraceProfile, TraceSource, DEFAULT_PREDICTOR_WINDOW};
use crate::error::{Error, Result};

/// Everything a simulation run needs. See CONFIG.md for the key reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub codec: CodecConfig,
    /// Empty means three sensors, sensor i reading channel `i mod C`.
    #[serde(default)]
    pub sensors: Vec<SensorConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        #[serde(default = "d_classes")]
        n_classes: usize,
        #[serde(default = "d_channels")]
        channels: usize,
        #[serde(default = "d_sigma")]
        noise_sigma: f64,
        #[serde(default = "d_train_wpc")]
        train_windows_per_class: usize,
        #[serde(default = "d_test_wpc")]
        test_windows_per_class: usize,
        #[serde(default = "d_rate")]
        sample_rate_hz: f64,
    },
    File {
        path: PathBuf,
        format: DatasetFormat,
        /// Columns to read; defaults to the format's usual channels.
        #[serde(default)]
        channels: Option<Vec<usize>>,
        #[serde(default)]
        label_col: Option<usize>,
        /// Leading share of windows used for training; the rest is simulated.
        #[serde(default = "d_train_fraction")]
        train_fraction: f64,
    },
}

fn d_classes() -> usize {
    4
}
fn d_channels() -> usize {
    3
}
fn d_sigma() -> f64 {
    0.1
}
fn d_train_wpc() -> usize {
    50
}
fn d_test_wpc() -> usize {
    50
}
fn d_rate() -> f64 {
    50.0
}
fn d_train_fraction() -> f64 {
    0.5
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic {
            n_classes: d_classes(),
            channels: d_channels(),
            noise_sigma: d_sigma(),
            train_windows_per_class: d_train_wpc(),
            test_windows_per_class: d_test_wpc(),
            sample_rate_hz: d_rate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub length: usize,
    pub overlap: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { length: 60, overlap: 30 }
    }
}

/// Where a sensor's harvested power comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceConfig {
    File {
        file: PathBuf,
        #[serde(default = "d_source")]
        source: TraceSource,
    },
    Generated(TraceProfile),
}

fn d_source() -> TraceSource {
    TraceSource::Synthetic
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig::Generated(TraceProfile::MarkovBurst {
            on_uw: 150.0,
            off_uw: 0.0,
            mean_on_s: 1.0,
            mean_off_s: 3.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub capacity_uj: f64,
    pub initial_uj: f64,
    pub leakage_uw: f64,
    pub predictor_window: usize,
    pub step_ms: f64,
    /// Default trace for sensors that do not name their own.
    pub trace: TraceConfig,
    pub cost_table: CostTable,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            capacity_uj: 200.0,
            initial_uj: 0.0,
            leakage_uw: 0.0,
            predictor_window: DEFAULT_PREDICTOR_WINDOW,
            step_ms: 1.0,
            trace: TraceConfig::default(),
            cost_table: CostTable::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Bit widths of the D1 and D2 node models.
    pub d1_bits: u32,
    pub d2_bits: u32,
    /// Accuracy drop on the calibration set that triggers a fine-tune pass.
    pub finetune_max_drop: f64,
    /// Reconstructions per payload at the host (training and inference).
    pub host_draws: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 64,
            epochs: 40,
            lr: 0.003,
            batch_size: 32,
            d1_bits: 16,
            d2_bits: 12,
            finetune_max_drop: 0.01,
            host_draws: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    /// Default (and largest) cluster count.
    pub k_max: usize,
    pub max_iter: usize,
    pub samples: usize,
    pub min_gap: usize,
    pub max_rounds: usize,
    pub memo_threshold: f64,
    /// Activity-aware clustering: pick k per predicted class.
    pub aac: bool,
    /// Accuracy loss tolerated when calibrating per-class cluster counts.
    pub aac_tolerance: f64,
    /// Explicit per-class cluster counts; overrides calibration.
    pub cluster_budget: BTreeMap<String, usize>,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            k_max: 12,
            max_iter: 4,
            samples: 20,
            min_gap: 2,
            max_rounds: 7,
            memo_threshold: 0.95,
            aac: true,
            aac_tolerance: 0.01,
            cluster_budget: BTreeMap::new(),
        }
    }
}

impl CodecConfig {
    pub fn sample_params(&self) -> SampleParams {
        SampleParams {
            m: self.samples,
            min_gap: self.min_gap,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// Dataset channels this sensor observes.
    pub channels: Vec<usize>,
    #[serde(default)]
    pub trace: Option<TraceConfig>,
    #[serde(default)]
    pub initial_uj: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            policy: Policy::default(),
            dataset: DatasetConfig::default(),
            window: WindowConfig::default(),
            energy: EnergyConfig::default(),
            model: ModelConfig::default(),
            codec: CodecConfig::default(),
            sensors: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config; relative file paths inside it resolve against
    /// the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = SimConfig::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let DatasetConfig::File { path, .. } = &mut self.dataset {
            fix(path);
        }
        if let TraceConfig::File { file, .. } = &mut self.energy.trace {
            fix(file);
        }
        for s in &mut self.sensors {
            if let Some(TraceConfig::File { file, .. }) = &mut s.trace {
                fix(file);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.window;
        if w.length == 0 || w.overlap >= w.length {
            return Err(Error::config("window.length must be positive and window.overlap < window.length"));
        }
        if w.length > 64 {
            return Err(Error::config("window.length above 64 does not fit the 6-bit time fields"));
        }
        match &self.dataset {
            DatasetConfig::Synthetic {
                n_classes,
                channels,
                noise_sigma,
                train_windows_per_class,
                test_windows_per_class,
                sample_rate_hz,
            } => {
                if *n_classes < 2 || *n_classes > 256 {
                    return Err(Error::config("dataset.n_classes must be in [2, 256]"));
                }
                if *channels == 0 || *train_windows_per_class == 0 || *test_windows_per_class == 0 {
                    return Err(Error::config("dataset channel and window counts must be positive"));
                }
                if !(*noise_sigma >= 0.0) || !(*sample_rate_hz > 0.0) {
                    return Err(Error::config("dataset.noise_sigma must be >= 0 and sample_rate_hz > 0"));
                }
            }
            DatasetConfig::File { train_fraction, .. } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(Error::config("dataset.train_fraction must be in (0, 1)"));
                }
            }
        }
        let e = &self.energy;
        if !(e.capacity_uj > 0.0) || !(e.initial_uj >= 0.0 && e.initial_uj <= e.capacity_uj) {
            return Err(Error::config("energy.capacity_uj must be positive and initial_uj in [0, capacity_uj]"));
        }
        if !(e.step_ms > 0.0) || e.predictor_window == 0 || !(e.leakage_uw >= 0.0) {
            return Err(Error::config("energy.step_ms and predictor_window must be positive, leakage_uw >= 0"));
        }
        e.cost_table.validate()?;
        let m = &self.model;
        if m.hidden == 0 || m.epochs == 0 || m.batch_size == 0 || m.host_draws == 0 || !(m.lr > 0.0) {
            return Err(Error::config("model hidden, epochs, batch_size, host_draws and lr must be positive"));
        }
        for b in [m.d1_bits, m.d2_bits] {
            if !(2..=16).contains(&b) {
                return Err(Error::config(format!("model bit width {b} outside [2, 16]")));
            }
        }
        let c = &self.codec;
        if c.k_max == 0 || c.k_max > 63 || c.k_max > w.length {
            return Err(Error::config("codec.k_max must be in [1, min(63, window.length)]"));
        }
        if c.samples == 0 || c.samples > 255 || c.max_iter == 0 {
            return Err(Error::config("codec.samples must be in [1, 255] and max_iter positive"));
        }
        if !c.memo_threshold.is_finite() {
            return Err(Error::config("codec.memo_threshold must be finite (use a value above 1 to disable memoization)"));
        }
        for (class, &k) in &c.cluster_budget {
            class
                .parse::<usize>()
                .map_err(|_| Error::config(format!("codec.cluster_budget key '{class}' is not a class id")))?;
            if k == 0 || k > c.k_max {
                return Err(Error::config(format!("codec.cluster_budget.{class} must be in [1, k_max]")));
            }
        }
        if self.sensors.len() > 255 {
            return Err(Error::config("at most 255 sensors"));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            if s.channels.is_empty() {
                return Err(Error::config(format!("sensors[{i}].channels is empty")));
            }
            if s.initial_uj.is_some_and(|v| !(v >= 0.0 && v <= e.capacity_uj)) {
                return Err(Error::config(format!("sensors[{i}].initial_uj outside [0, capacity_uj]")));
            }
        }
        Ok(())
    }
}
