//! Auto-regressive cue sequentializers.
//!
//! Stage 1 holds three causal LSTM generators over a shared bidirectional
//! audio window encoder and a shared emotion embedding: one generator each
//! for normalized landmarks, head pose, and discretized gaze, plus a linear
//! emotion classifier fed by the concatenated generator features. Stage 2 is
//! a fourth causal generator that maps recomposed image-space landmarks plus
//! audio and emotion onto latent keypoints.
//!
//! Training is teacher-forced: step s consumes ground-truth frame s and
//! predicts frame s + 1, so a sequence of L frames yields L - 1 steps.
//! Synthesis is free-running: each generator consumes its own previous
//! output, seeded with an identity frame, an initial pose, and an initial
//! gaze label, and produces one output frame per audio frame.

mod models;
mod stepcheck;
mod synthesis;
mod training;

pub use models::{Stage1Model, Stage2Model, StepState};
pub use stepcheck::{
    layer_harnesses, stage1_joint_harness, stage1_step_harness, stage2_step_harness, tiny_config,
    tiny_records, LayerHarness, Stage1Part, StepHarness,
};
pub use synthesis::{synthesize, synthesize_from_features, SynthesisFrame, SynthesisInputs};
pub use training::{
    evaluate_stage1, evaluate_stage2, train_stage1, train_stage2, EpochLoss, Stage1Evaluation,
    Stage2EpochLoss, TrainConfig, LR_HALVING_EPOCHS,
};

use crate::corpus::{KeypointSet, EMOTION_COUNT, KEYPOINT_COUNT};
use crate::error::{Error, Result};

/// Shape and seeding knobs shared by both stages. Audio feature width is not
/// configurable: it is pinned to [`crate::audiofeat::AUDIO_FEATURE_DIMS`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequentializerConfig {
    /// Hidden width of each direction of the audio window encoder; the
    /// context vector is twice this.
    pub encoder_hidden: usize,
    /// Hidden width of every causal generator cell.
    pub hidden: usize,
    pub emotion_embed_dim: usize,
    pub gaze_embed_dim: usize,
    /// Audio context half-width W: the window around frame n is [n-W, n+W],
    /// clamped at sequence edges.
    pub window: usize,
    /// Canonical-to-image scale used when recomposing and when feeding
    /// recomposed landmarks back into stage 2.
    pub scale_factor: f64,
    /// Extra weight on vertical (y) residuals in the landmark L1 loss.
    pub y_weight: f64,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for SequentializerConfig {
    fn default() -> Self {
        SequentializerConfig {
            encoder_hidden: 32,
            hidden: 128,
            emotion_embed_dim: 16,
            gaze_embed_dim: 16,
            window: 2,
            scale_factor: crate::geometry::DEFAULT_SCALE_FACTOR,
            y_weight: 2.0,
            seed: 42,
        }
    }
}

impl SequentializerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("encoder_hidden", self.encoder_hidden),
            ("hidden", self.hidden),
            ("emotion_embed_dim", self.emotion_embed_dim),
            ("gaze_embed_dim", self.gaze_embed_dim),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !(self.scale_factor.is_finite() && self.scale_factor > 0.0) {
            return Err(Error::config(format!(
                "scale factor must be positive, got {}",
                self.scale_factor
            )));
        }
        if !(self.y_weight.is_finite() && self.y_weight >= 1.0) {
            return Err(Error::config(format!(
                "y weight must be at least 1, got {}",
                self.y_weight
            )));
        }
        Ok(())
    }

    /// Width of the encoder output consumed by every generator.
    pub fn context_dim(&self) -> usize {
        2 * self.encoder_hidden
    }
}

/// One generator feature vector per cue stream, concatenated (landmark,
/// pose, gaze) to drive the emotion classifier.
#[derive(Clone, Debug)]
pub struct CueFeatures {
    pub f_landmark: Vec<f64>,
    pub f_pose: Vec<f64>,
    pub f_gaze: Vec<f64>,
}

/// One frame of latent keypoints: the stage-2 output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatentKeypointFrame {
    pub points: KeypointSet,
}

impl LatentKeypointFrame {
    pub fn new(points: KeypointSet) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numeric("latent keypoints contain non-finite values"));
        }
        Ok(LatentKeypointFrame { points })
    }

    /// The seed frame K_0 for free-running synthesis.
    pub fn zeros() -> Self {
        LatentKeypointFrame { points: [[0.0; 3]; KEYPOINT_COUNT] }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != 3 * KEYPOINT_COUNT {
            return Err(Error::structural(format!(
                "latent keypoint frame needs {} values, got {}",
                3 * KEYPOINT_COUNT,
                values.len()
            )));
        }
        let mut points = [[0.0; 3]; KEYPOINT_COUNT];
        for (k, chunk) in values.chunks_exact(3).enumerate() {
            points[k] = [chunk[0], chunk[1], chunk[2]];
        }
        LatentKeypointFrame::new(points)
    }
}

/// Raw classifier outputs over the eight emotion classes.
#[derive(Clone, Debug)]
pub struct EmotionLogits {
    pub logits: Vec<f64>,
}

impl EmotionLogits {
    pub fn new(logits: Vec<f64>) -> Result<Self> {
        if logits.len() != EMOTION_COUNT {
            return Err(Error::structural(format!(
                "expected {EMOTION_COUNT} emotion logits, got {}",
                logits.len()
            )));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("emotion logits contain non-finite values"));
        }
        Ok(EmotionLogits { logits })
    }

    /// Argmax label; ties resolve to the lowest index.
    pub fn label(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.logits.iter().enumerate() {
            if v > self.logits[best] {
                best = i;
            }
        }
        best
    }
}

/// Clamped index window [n-w, n+w] into a sequence of `len` frames. Edge
/// frames repeat, so the window always holds 2w + 1 entries.
pub fn window_indices(n: usize, len: usize, w: usize) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::domain("cannot take an audio window over an empty sequence"));
    }
    if n >= len {
        return Err(Error::domain(format!(
            "window center {n} is outside a sequence of {len} frames"
        )));
    }
    let mut idx = Vec::with_capacity(2 * w + 1);
    for j in -(w as isize)..=(w as isize) {
        let i = (n as isize + j).clamp(0, len as isize - 1);
        idx.push(i as usize);
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_indices_clamp_at_both_edges() {
        assert_eq!(window_indices(0, 10, 2).unwrap(), vec![0, 0, 0, 1, 2]);
        assert_eq!(window_indices(1, 10, 2).unwrap(), vec![0, 0, 1, 2, 3]);
        assert_eq!(window_indices(5, 10, 2).unwrap(), vec![3, 4, 5, 6, 7]);
        assert_eq!(window_indices(9, 10, 2).unwrap(), vec![7, 8, 9, 9, 9]);
        assert_eq!(window_indices(0, 1, 2).unwrap(), vec![0, 0, 0, 0, 0]);
        assert!(window_indices(0, 0, 2).is_err());
        assert!(window_indices(10, 10, 2).is_err());
    }

    #[test]
    fn logits_argmax_breaks_ties_toward_the_lowest_index() {
        let l = EmotionLogits::new(vec![0.0; EMOTION_COUNT]).unwrap();
        assert_eq!(l.label(), 0);
        let l = EmotionLogits::new(vec![0.0, 3.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(l.label(), 1);
        assert!(EmotionLogits::new(vec![0.0; 3]).is_err());
        assert!(EmotionLogits::new(vec![f64::NAN; EMOTION_COUNT]).is_err());
    }

    #[test]
    fn keypoint_frames_round_trip_through_flattening() {
        let mut points = [[0.0; 3]; KEYPOINT_COUNT];
        for (k, p) in points.iter_mut().enumerate() {
            *p = [k as f64, -(k as f64), 0.5 * k as f64];
        }
        let frame = LatentKeypointFrame::new(points).unwrap();
        let back = LatentKeypointFrame::from_flat(&frame.flatten()).unwrap();
        assert_eq!(frame, back);
        assert!(LatentKeypointFrame::from_flat(&[0.0; 29]).is_err());
        let mut bad = points;
        bad[3][1] = f64::INFINITY;
        assert!(LatentKeypointFrame::new(bad).is_err());
    }

    #[test]
    fn config_validation_rejects_degenerate_shapes() {
        let ok = SequentializerConfig::default();
        ok.validate().unwrap();
        let mut c = ok;
        c.hidden = 0;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.scale_factor = -1.0;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.y_weight = 0.5;
        assert!(c.validate().is_err());
    }
}
