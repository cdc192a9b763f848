//! Run configuration: plain `key=value` text, defaults matching the
//! training setup the cascade was designed around.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::cascade::{CascadeConfig, Stage1Input, Stage1Rule};
use crate::error::{Error, Result};
use crate::infer::TrainConfig;
use crate::metrics::F1Average;

/// How training data imbalance is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Balance {
    /// Inverse-frequency sample weights in the loss.
    Weighted,
    /// Downsample every class to the minority count.
    Downsample,
}

impl Balance {
    pub fn parse(s: &str) -> Result<Balance> {
        match s {
            "weighted" => Ok(Balance::Weighted),
            "downsample" => Ok(Balance::Downsample),
            other => Err(Error::Config(format!("unknown balance {other}"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Balance::Weighted => "weighted",
            Balance::Downsample => "downsample",
        }
    }
}

/// Whether stage-1 ROC-AUC uses clip-level or segment-level scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucLevel {
    Clip,
    Segment,
}

impl AucLevel {
    pub fn parse(s: &str) -> Result<AucLevel> {
        match s {
            "clip" => Ok(AucLevel::Clip),
            "segment" => Ok(AucLevel::Segment),
            other => Err(Error::Config(format!("unknown stage1_auc {other}"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            AucLevel::Clip => "clip",
            AucLevel::Segment => "segment",
        }
    }
}

/// Every tunable of the pipeline. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seg_seconds: f64,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub resize: usize,
    pub gallery_threshold: f64,
    pub stage1_rule: Stage1Rule,
    pub stage1_threshold: f64,
    pub stage1_input: Stage1Input,
    pub stage1_auc: AucLevel,
    pub stage2_every_n_frames: usize,
    pub stage2_threshold: f64,
    pub f1_average: F1Average,
    pub balance: Balance,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub seed: u64,
    pub frame_rate: f64,
    pub trim_gate_db: f64,
    pub trim_min_silence_ms: f64,
    pub noise_reduction_db: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seg_seconds: 3.0,
            n_fft: 2048,
            hop: 512,
            n_mels: 64,
            resize: 224,
            gallery_threshold: 0.4,
            stage1_rule: Stage1Rule::Ratio,
            stage1_threshold: 0.5,
            stage1_input: Stage1Input::Mel,
            stage1_auc: AucLevel::Clip,
            stage2_every_n_frames: 5,
            stage2_threshold: 0.5,
            f1_average: F1Average::Weighted,
            balance: Balance::Weighted,
            batch_size: 32,
            epochs: 25,
            learning_rate: 0.001,
            lr_decay_factor: 0.1,
            lr_decay_every: 20,
            seed: 42,
            frame_rate: 10.0,
            trim_gate_db: -40.0,
            trim_min_silence_ms: 500.0,
            noise_reduction_db: 10.0,
        }
    }
}

impl RunConfig {
    /// Apply one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid value for {what}: {value}"));
        match key {
            "seg_seconds" => self.seg_seconds = value.parse().map_err(|_| bad(key))?,
            "n_fft" => self.n_fft = value.parse().map_err(|_| bad(key))?,
            "hop" => self.hop = value.parse().map_err(|_| bad(key))?,
            "n_mels" => self.n_mels = value.parse().map_err(|_| bad(key))?,
            "resize" => self.resize = value.parse().map_err(|_| bad(key))?,
            "gallery_threshold" => self.gallery_threshold = value.parse().map_err(|_| bad(key))?,
            "stage1_rule" => self.stage1_rule = Stage1Rule::parse(value)?,
            "stage1_threshold" => self.stage1_threshold = value.parse().map_err(|_| bad(key))?,
            "stage1_input" => self.stage1_input = Stage1Input::parse(value)?,
            "stage1_auc" => self.stage1_auc = AucLevel::parse(value)?,
            "stage2_every_n_frames" => {
                self.stage2_every_n_frames = value.parse().map_err(|_| bad(key))?
            }
            "stage2_threshold" => self.stage2_threshold = value.parse().map_err(|_| bad(key))?,
            "f1_average" => self.f1_average = F1Average::parse(value)?,
            "balance" => self.balance = Balance::parse(value)?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad(key))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad(key))?,
            "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad(key))?,
            "lr_decay_factor" => self.lr_decay_factor = value.parse().map_err(|_| bad(key))?,
            "lr_decay_every" => self.lr_decay_every = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "frame_rate" => self.frame_rate = value.parse().map_err(|_| bad(key))?,
            "trim_gate_db" => self.trim_gate_db = value.parse().map_err(|_| bad(key))?,
            "trim_min_silence_ms" => {
                self.trim_min_silence_ms = value.parse().map_err(|_| bad(key))?
            }
            "noise_reduction_db" => {
                self.noise_reduction_db = value.parse().map_err(|_| bad(key))?
            }
            other => return Err(Error::Config(format!("unknown config key: {other}"))),
        }
        Ok(())
    }

    /// Parse a `key=value` file (blank lines and `#` comments allowed).
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key=value, got {line}",
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let text =
            fs::read_to_string(path).map_err(|e| Error::format(path, format!("cannot read: {e}")))?;
        cfg.apply_text(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.seg_seconds > 0.0) {
            return Err(Error::Config("seg_seconds must be positive".into()));
        }
        if !self.n_fft.is_power_of_two() {
            return Err(Error::Config("n_fft must be a power of two".into()));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::Config("hop must satisfy 0 < hop <= n_fft".into()));
        }
        if self.n_mels < 2 {
            return Err(Error::Config("n_mels must be at least 2".into()));
        }
        if !(self.gallery_threshold > 0.0 && self.gallery_threshold < 2.0) {
            return Err(Error::Config("gallery_threshold must be in (0, 2)".into()));
        }
        if !(self.stage1_threshold > 0.0 && self.stage1_threshold <= 1.0) {
            return Err(Error::Config("stage1_threshold must be in (0, 1]".into()));
        }
        if !(self.stage2_threshold > 0.0 && self.stage2_threshold <= 1.0) {
            return Err(Error::Config("stage2_threshold must be in (0, 1]".into()));
        }
        if self.stage2_every_n_frames == 0 {
            return Err(Error::Config("stage2_every_n_frames must be >= 1".into()));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Config("frame_rate must be positive".into()));
        }
        if !(self.trim_gate_db < 0.0) {
            return Err(Error::Config("trim_gate_db must be negative".into()));
        }
        if !(self.trim_min_silence_ms > 0.0) {
            return Err(Error::Config("trim_min_silence_ms must be positive".into()));
        }
        if self.noise_reduction_db < 0.0 {
            return Err(Error::Config("noise_reduction_db must be >= 0".into()));
        }
        Ok(())
    }

    /// The classification-time view of this configuration.
    pub fn cascade_config(&self) -> CascadeConfig {
        CascadeConfig {
            seg_seconds: self.seg_seconds,
            n_fft: self.n_fft,
            hop: self.hop,
            n_mels: self.n_mels,
            mel_floor: 1e-10,
            resize: self.resize,
            stage1_input: self.stage1_input,
            trim_gate_db: self.trim_gate_db,
            trim_min_silence_ms: self.trim_min_silence_ms,
            noise_reduction_db: self.noise_reduction_db,
            stage1_rule: self.stage1_rule,
            stage1_threshold: self.stage1_threshold,
            stage2_every_n_frames: self.stage2_every_n_frames,
            stage2_threshold: self.stage2_threshold,
        }
    }

    /// The training-time view of this configuration.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            lr_decay_factor: self.lr_decay_factor,
            lr_decay_every: self.lr_decay_every,
            seed: self.seed,
        }
    }

    /// Echo the effective configuration as `key=value` text.
    pub fn to_text(&self) -> String {
        let rule = match self.stage1_rule {
            Stage1Rule::Ratio => "ratio",
            Stage1Rule::Any => "any",
            Stage1Rule::Mean => "mean",
        };
        let input = match self.stage1_input {
            Stage1Input::Mel => "mel",
            Stage1Input::Resized => "resized",
        };
        let f1 = match self.f1_average {
            F1Average::Weighted => "weighted",
            F1Average::Macro => "macro",
            F1Average::Binary => "binary",
        };
        format!(
            "seg_seconds={}\nn_fft={}\nhop={}\nn_mels={}\nresize={}\ngallery_threshold={}\n\
             stage1_rule={rule}\nstage1_threshold={}\nstage1_input={input}\nstage1_auc={}\n\
             stage2_every_n_frames={}\nstage2_threshold={}\nf1_average={f1}\nbalance={}\n\
             batch_size={}\nepochs={}\nlearning_rate={}\nlr_decay_factor={}\nlr_decay_every={}\n\
             seed={}\nframe_rate={}\ntrim_gate_db={}\ntrim_min_silence_ms={}\nnoise_reduction_db={}\n",
            self.seg_seconds,
            self.n_fft,
            self.hop,
            self.n_mels,
            self.resize,
            self.gallery_threshold,
            self.stage1_threshold,
            self.stage1_auc.as_str(),
            self.stage2_every_n_frames,
            self.stage2_threshold,
            self.balance.as_str(),
            self.batch_size,
            self.epochs,
            self.learning_rate,
            self.lr_decay_factor,
            self.lr_decay_every,
            self.seed,
            self.frame_rate,
            self.trim_gate_db,
            self.trim_min_silence_ms,
            self.noise_reduction_db,
        )
    }

    /// All recognized keys, for error messages and docs.
    pub fn known_keys() -> BTreeSet<&'static str> {
        [
            "seg_seconds", "n_fft", "hop", "n_mels", "resize", "gallery_threshold",
            "stage1_rule", "stage1_threshold", "stage1_input", "stage1_auc",
            "stage2_every_n_frames", "stage2_threshold", "f1_average", "balance",
            "batch_size", "epochs", "learning_rate", "lr_decay_factor", "lr_decay_every",
            "seed", "frame_rate", "trim_gate_db", "trim_min_silence_ms", "noise_reduction_db",
        ]
        .into_iter()
        .collect()
    }
}
