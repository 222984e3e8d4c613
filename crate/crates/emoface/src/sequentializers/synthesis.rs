//! Free-running synthesis: one frame of every cue type per audio frame.
//!
//! Each generator consumes its own previous output. Frame 0 is seeded with
//! the identity frame, the initial pose, the initial gaze label, and a zero
//! keypoint frame; frame n's audio context is the clamped window
//! [n - W, n + W]. The recomposed frame R_n is produced by the geometric
//! relocation of that frame's own predicted cues, then drives the stage-2
//! keypoint generator.

use crate::audiofeat::{mfcc_sequence, AudioFeatureFrame, MfccConfig, Waveform};
use crate::corpus::Emotion;
use crate::error::{Error, Result};
use crate::gaze::{classify_gaze, GazeLabel};
use crate::geometry::{relocate, HeadPose, NormalizedLandmarkFrame, RelocatedLandmarkFrame};

use super::models::{Stage1Model, Stage2Model};
use super::{window_indices, CueFeatures, EmotionLogits, LatentKeypointFrame};

/// Seed state for free-running synthesis.
#[derive(Clone, Debug)]
pub struct SynthesisInputs {
    pub identity: NormalizedLandmarkFrame,
    pub initial_pose: HeadPose,
    pub initial_gaze: GazeLabel,
    pub emotion: Emotion,
}

/// Every cue stream at one output frame.
#[derive(Clone, Debug)]
pub struct SynthesisFrame {
    /// C_n: canonical-space landmarks.
    pub landmarks: NormalizedLandmarkFrame,
    /// r_n: head pose with wrapped angles.
    pub pose: HeadPose,
    /// The argmax joint gaze label.
    pub gaze: GazeLabel,
    /// The full softmax distribution the label was drawn from.
    pub gaze_probabilities: Vec<f64>,
    /// R_n: the relocated (image-space) landmarks.
    pub relocated: RelocatedLandmarkFrame,
    /// K_n: latent keypoints.
    pub keypoints: LatentKeypointFrame,
    /// Per-frame classifier diagnostics.
    pub emotion_logits: EmotionLogits,
}

/// Synthesizes from a waveform at the default 30 fps feature rate.
pub fn synthesize(
    stage1: &Stage1Model,
    stage2: &Stage2Model,
    audio: &Waveform,
    inputs: &SynthesisInputs,
) -> Result<Vec<SynthesisFrame>> {
    let features = mfcc_sequence(audio, &MfccConfig::default())?;
    synthesize_from_features(stage1, stage2, &features, inputs)
}

/// Synthesizes one output frame per audio feature frame.
pub fn synthesize_from_features(
    stage1: &Stage1Model,
    stage2: &Stage2Model,
    features: &[AudioFeatureFrame],
    inputs: &SynthesisInputs,
) -> Result<Vec<SynthesisFrame>> {
    if !stage1.is_trained() || !stage2.is_trained() {
        return Err(Error::usage(
            "synthesis needs trained checkpoints for both stages; train or load them first",
        ));
    }
    if stage1.config != stage2.config {
        return Err(Error::usage(
            "stage-1 and stage-2 checkpoints disagree on their shape config",
        ));
    }
    if features.is_empty() {
        return Err(Error::domain("cannot synthesize from zero audio frames"));
    }
    inputs.identity.validate_canonical()?;
    let n_frames = features.len();
    let w = stage1.config.window;
    let scale = stage1.config.scale_factor;
    let emotion = inputs.emotion;

    let mut prev_landmarks = inputs.identity.clone();
    let mut prev_pose = inputs.initial_pose;
    let mut prev_gaze = inputs.initial_gaze;
    let mut prev_keypoints = LatentKeypointFrame::zeros();
    let mut state_l = stage1.zero_state();
    let mut state_r = stage1.zero_state();
    let mut state_g = stage1.zero_state();
    let mut state_k = stage2.zero_state();

    let mut frames = Vec::with_capacity(n_frames);
    for n in 0..n_frames {
        let window: Vec<AudioFeatureFrame> =
            window_indices(n, n_frames, w)?.iter().map(|&i| features[i]).collect();
        let (f_landmark, landmarks, next_l) =
            stage1.landmark_step(&prev_landmarks, &window, emotion, &state_l)?;
        let (f_pose, pose, next_r) = stage1.pose_step(&prev_pose, &window, emotion, &state_r)?;
        let (f_gaze, gaze_probabilities, next_g) =
            stage1.gaze_step(&prev_gaze, &window, emotion, &state_g)?;
        let gaze = classify_gaze(&gaze_probabilities)?;
        let emotion_logits =
            stage1.classify_emotion(&CueFeatures { f_landmark, f_pose, f_gaze })?;
        let relocated = relocate(&landmarks, &pose, &gaze, scale)?;
        let (keypoints, next_k) =
            stage2.keypoint_step(&prev_keypoints, &relocated, &window, emotion, &state_k)?;

        prev_landmarks = landmarks.clone();
        prev_pose = pose;
        prev_gaze = gaze;
        prev_keypoints = keypoints;
        state_l = next_l;
        state_r = next_r;
        state_g = next_g;
        state_k = next_k;
        frames.push(SynthesisFrame {
            landmarks,
            pose,
            gaze,
            gaze_probabilities,
            relocated,
            keypoints,
            emotion_logits,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::super::stepcheck::{tiny_config, tiny_records};
    use super::*;
    use crate::corpus::default_identity_frame;

    fn trained_pair() -> (Stage1Model, Stage2Model) {
        let mut stage1 = Stage1Model::new(&tiny_config()).unwrap();
        let mut stage2 = Stage2Model::new(&tiny_config(), &stage1).unwrap();
        // Mark the fresh models usable; these tests exercise the plumbing,
        // not the fit.
        stage1.trained_epochs = 1;
        stage2.trained_epochs = 1;
        (stage1, stage2)
    }

    fn default_inputs() -> SynthesisInputs {
        SynthesisInputs {
            identity: default_identity_frame(),
            initial_pose: HeadPose::identity(),
            initial_gaze: GazeLabel::center(),
            emotion: Emotion::Happy,
        }
    }

    fn feature_ramp(n: usize) -> Vec<AudioFeatureFrame> {
        let records = tiny_records(1, n, false, 31);
        records[0].frames.iter().map(|f| f.audio).collect()
    }

    #[test]
    fn one_output_frame_per_audio_frame_and_deterministic() {
        let (stage1, stage2) = trained_pair();
        let features = feature_ramp(9);
        let a = synthesize_from_features(&stage1, &stage2, &features, &default_inputs()).unwrap();
        let b = synthesize_from_features(&stage1, &stage2, &features, &default_inputs()).unwrap();
        assert_eq!(a.len(), 9);
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.landmarks.points, fb.landmarks.points);
            assert_eq!(fa.pose, fb.pose);
            assert_eq!(fa.gaze, fb.gaze);
            assert_eq!(fa.keypoints, fb.keypoints);
        }
        for f in &a {
            assert_eq!(f.relocated.source_pose, f.pose);
            assert_eq!(f.relocated.source_gaze, f.gaze);
            assert_eq!(f.gaze_probabilities.len(), crate::gaze::JOINT_CLASSES);
        }
    }

    #[test]
    fn truncating_audio_never_changes_settled_frames() {
        let (stage1, stage2) = trained_pair();
        let features = feature_ramp(12);
        let full = synthesize_from_features(&stage1, &stage2, &features, &default_inputs()).unwrap();
        let prefix =
            synthesize_from_features(&stage1, &stage2, &features[..8], &default_inputs()).unwrap();
        let w = stage1.config().window;
        // Keeping frames 0..8 means outputs up to frame 7 - w are settled:
        // their clamped windows never reach the cut.
        for n in 0..=(7 - w) {
            assert_eq!(
                full[n].landmarks.points, prefix[n].landmarks.points,
                "landmarks changed at settled frame {n}"
            );
            assert_eq!(full[n].pose, prefix[n].pose, "pose changed at settled frame {n}");
            assert_eq!(full[n].gaze, prefix[n].gaze, "gaze changed at settled frame {n}");
            assert_eq!(
                full[n].keypoints, prefix[n].keypoints,
                "keypoints changed at settled frame {n}"
            );
        }
    }

    #[test]
    fn untrained_models_are_a_usage_error() {
        let stage1 = Stage1Model::new(&tiny_config()).unwrap();
        let mut stage2 = Stage2Model::new(&tiny_config(), &stage1).unwrap();
        stage2.trained_epochs = 1;
        let features = feature_ramp(5);
        let err = synthesize_from_features(&stage1, &stage2, &features, &default_inputs())
            .unwrap_err();
        assert!(err.to_string().contains("usage error"), "got: {err}");
        assert!(err.to_string().contains("trained"), "got: {err}");
    }

    #[test]
    fn mismatched_stage_configs_are_a_usage_error() {
        let (stage1, _) = trained_pair();
        let mut other = tiny_config();
        other.seed = 77;
        let alt1 = Stage1Model::new(&other).unwrap();
        let mut stage2 = Stage2Model::new(&other, &alt1).unwrap();
        stage2.trained_epochs = 1;
        let features = feature_ramp(5);
        let err = synthesize_from_features(&stage1, &stage2, &features, &default_inputs())
            .unwrap_err();
        assert!(err.to_string().contains("disagree"), "got: {err}");
    }
}
