//! One flat run configuration shared by every subcommand.
//!
//! Defaults come straight from the library `Default` impls so the CLI can
//! never drift from them. A JSON config file may override any subset of
//! keys; unknown keys are rejected. Command-line flags are merged on top by
//! `main`, after the file is parsed.

use std::fs;
use std::path::{Path, PathBuf};

use emoface::corpus::{sha256_hex, CorpusConfig, Emotion};
use emoface::sequentializers::{SequentializerConfig, TrainConfig};
use emoface::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which sequentializer stages a `train` invocation fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainStage {
    Stage1,
    Stage2,
    Both,
}

impl TrainStage {
    pub fn trains_stage1(self) -> bool {
        self != TrainStage::Stage2
    }

    pub fn trains_stage2(self) -> bool {
        self != TrainStage::Stage1
    }
}

/// Every tunable the five commands read, in one serializable struct. Paths
/// default to empty strings; each command demands the ones it needs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // Corpus generation.
    pub sequences_per_emotion: usize,
    pub frames_per_sequence: usize,
    pub corpus_seed: u64,
    pub fps: f64,
    pub sample_rate: u32,
    pub with_keypoints: bool,
    pub keypoint_sigma: f64,

    // Model shape.
    pub encoder_hidden: usize,
    pub hidden: usize,
    pub emotion_embed_dim: usize,
    pub gaze_embed_dim: usize,
    pub window: usize,
    pub scale_factor: f64,
    pub y_weight: f64,
    pub model_seed: u64,

    // Training.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_seed: u64,
    pub split_fraction: f64,
    pub split_seed: u64,
    pub stage: String,
    pub resume: bool,

    // Paths and per-command selectors.
    pub corpus_dir: String,
    pub checkpoint_dir: String,
    pub out_dir: String,
    pub audio: String,
    pub emotion: String,
    pub identity_corpus: String,
    pub identity_index: usize,
    pub pred_bundle: String,
    pub gt_bundle: String,
    pub gt_corpus: String,
    pub gt_index: usize,
    pub bundle: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let corpus = CorpusConfig::default();
        let model = SequentializerConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            sequences_per_emotion: corpus.sequences_per_emotion,
            frames_per_sequence: corpus.frames_per_sequence,
            corpus_seed: corpus.seed,
            fps: corpus.fps,
            sample_rate: corpus.sample_rate,
            with_keypoints: corpus.with_keypoints,
            keypoint_sigma: corpus.keypoint_sigma,
            encoder_hidden: model.encoder_hidden,
            hidden: model.hidden,
            emotion_embed_dim: model.emotion_embed_dim,
            gaze_embed_dim: model.gaze_embed_dim,
            window: model.window,
            scale_factor: model.scale_factor,
            y_weight: model.y_weight,
            model_seed: model.seed,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            train_seed: train.seed,
            split_fraction: 0.8,
            split_seed: 1234,
            stage: "both".to_string(),
            resume: false,
            corpus_dir: String::new(),
            checkpoint_dir: String::new(),
            out_dir: String::new(),
            audio: String::new(),
            emotion: "neutral".to_string(),
            identity_corpus: String::new(),
            identity_index: 0,
            pred_bundle: String::new(),
            gt_bundle: String::new(),
            gt_corpus: String::new(),
            gt_index: 0,
            bundle: String::new(),
        }
    }
}

impl RunConfig {
    /// Defaults, optionally overridden by a JSON config file.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::config(format!("config file {}: {e}", p.display())))
            }
        }
    }

    /// Content hash of the resolved configuration, for run manifests.
    pub fn sha256(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)
            .map_err(|e| Error::config(format!("cannot serialize run config: {e}")))?;
        Ok(sha256_hex(&bytes))
    }

    pub fn corpus_config(&self) -> CorpusConfig {
        CorpusConfig {
            sequences_per_emotion: self.sequences_per_emotion,
            frames_per_sequence: self.frames_per_sequence,
            seed: self.corpus_seed,
            fps: self.fps,
            sample_rate: self.sample_rate,
            with_keypoints: self.with_keypoints,
            keypoint_sigma: self.keypoint_sigma,
        }
    }

    pub fn model_config(&self) -> SequentializerConfig {
        SequentializerConfig {
            encoder_hidden: self.encoder_hidden,
            hidden: self.hidden,
            emotion_embed_dim: self.emotion_embed_dim,
            gaze_embed_dim: self.gaze_embed_dim,
            window: self.window,
            scale_factor: self.scale_factor,
            y_weight: self.y_weight,
            seed: self.model_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.train_seed,
        }
    }

    /// The emotion selector, with the valid names spelled out on failure.
    pub fn emotion(&self) -> Result<Emotion> {
        Emotion::from_name(&self.emotion).map_err(|_| {
            let names: Vec<&str> = Emotion::ALL.iter().map(|e| e.name()).collect();
            Error::config(format!(
                "unknown emotion {:?}; expected one of {}",
                self.emotion,
                names.join(", ")
            ))
        })
    }

    /// The parsed `stage` selector for `train`.
    pub fn train_stage(&self) -> Result<TrainStage> {
        match self.stage.as_str() {
            "1" => Ok(TrainStage::Stage1),
            "2" => Ok(TrainStage::Stage2),
            "both" => Ok(TrainStage::Both),
            other => Err(Error::config(format!(
                "stage must be \"1\", \"2\", or \"both\", got {other:?}"
            ))),
        }
    }

    /// A path-valued key that this command cannot run without.
    pub fn require_path(&self, value: &str, key: &str, flag: &str) -> Result<PathBuf> {
        if value.is_empty() {
            return Err(Error::config(format!(
                "missing {key}: pass {flag} or set {key:?} in the config file"
            )));
        }
        Ok(PathBuf::from(value))
    }
}
