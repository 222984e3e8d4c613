//! Dataset records and the synthetic emotion-conditioned corpus generator.
//!
//! The generator is the desk-scale ground-truth oracle: every cue stream is a
//! known smooth function of the synthetic audio, the emotion profile, and a
//! seeded per-sequence parameter draw, so learnability and per-emotion
//! statistics hold by construction. Records are line-delimited text (one
//! frame per line) with one JSON manifest per sequence and one per corpus.

mod face;
mod format;
mod generate;
mod oracle;

pub use face::{
    default_identity_frame, mouth_opening, synthesize_face, BASE_EYE_OPENING, BASE_MOUTH_OPENING,
    MOUTH_AUDIO_SCALE, MOUTH_GAP_MIN,
};
pub use format::{
    load_corpus, load_sequence, read_record_file, sha256_hex, write_record_file, write_sequence,
    CorpusManifest, SequenceManifest, RECORD_VERSION,
};
pub use generate::{default_profiles, generate_synthetic, CorpusConfig};
pub use oracle::{KeypointOracle, GAUSSIAN_NORM_MEAN_3D};

use crate::audiofeat::AudioFeatureFrame;
use crate::error::{Error, Result};
use crate::gaze::{GazeLabel, ZONE_COUNT};
use crate::geometry::{HeadPose, NormalizedLandmarkFrame, Point3, LANDMARK_COUNT};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The eight emotion categories, in the fixed label order used everywhere.
pub const EMOTION_COUNT: usize = 8;

/// Latent keypoints per frame.
pub const KEYPOINT_COUNT: usize = 10;

/// One latent keypoint frame as stored in records.
pub type KeypointSet = [[f64; 3]; KEYPOINT_COUNT];

/// Emotion categories with their fixed indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Neutral = 0,
    Angry = 1,
    Contempt = 2,
    Disgust = 3,
    Fear = 4,
    Happy = 5,
    Sad = 6,
    Surprised = 7,
}

impl Emotion {
    pub const ALL: [Emotion; EMOTION_COUNT] = [
        Emotion::Neutral,
        Emotion::Angry,
        Emotion::Contempt,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Surprised,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Result<Emotion> {
        Emotion::ALL
            .get(idx)
            .copied()
            .ok_or_else(|| Error::domain(format!("emotion index {idx} outside 0..{EMOTION_COUNT}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Angry => "angry",
            Emotion::Contempt => "contempt",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Surprised => "surprised",
        }
    }

    pub fn from_name(name: &str) -> Result<Emotion> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::domain(format!("unknown emotion name {name:?}")))
    }
}

impl std::fmt::Display for Emotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-emotion motion archetype driving the synthetic generator.
#[derive(Clone, Debug, PartialEq)]
pub struct EmotionMotionProfile {
    pub emotion: Emotion,
    /// Multiplies the base eyelid separation; narrowed < 1 < widened.
    pub eye_opening_scale: f64,
    /// Mean pitch in radians; positive tilts the head upward.
    pub pitch_bias: f64,
    /// Gaze zones visited in order, both eyes conjugate.
    pub gaze_cycle: Vec<u8>,
    /// Frames spent in each cycle zone before advancing.
    pub gaze_dwell: usize,
    /// Yaw/pitch/roll oscillation amplitudes in radians.
    pub pose_amplitude: [f64; 3],
    /// Yaw/pitch/roll oscillation frequencies in Hz.
    pub pose_frequency: [f64; 3],
    /// Scales how strongly the audio envelope opens the mouth.
    pub mouth_gain: f64,
}

impl EmotionMotionProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "profile {}: {name} must be positive, got {v}",
                    self.emotion
                )))
            }
        };
        positive("eye_opening_scale", self.eye_opening_scale)?;
        positive("mouth_gain", self.mouth_gain)?;
        for axis in 0..3 {
            positive("pose_amplitude", self.pose_amplitude[axis])?;
            positive("pose_frequency", self.pose_frequency[axis])?;
        }
        if !self.pitch_bias.is_finite() {
            return Err(Error::config(format!("profile {}: pitch_bias is not finite", self.emotion)));
        }
        if self.pitch_bias.abs() + self.pose_amplitude[1] >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::config(format!(
                "profile {}: pitch range reaches +-pi/2",
                self.emotion
            )));
        }
        if self.gaze_cycle.is_empty() {
            return Err(Error::config(format!("profile {}: empty gaze cycle", self.emotion)));
        }
        if let Some(&z) = self.gaze_cycle.iter().find(|&&z| z as usize >= ZONE_COUNT) {
            return Err(Error::config(format!(
                "profile {}: gaze zone {z} outside 0..{ZONE_COUNT}",
                self.emotion
            )));
        }
        if self.gaze_dwell == 0 {
            return Err(Error::config(format!("profile {}: gaze dwell must be >= 1", self.emotion)));
        }
        Ok(())
    }
}

/// Checks a full profile set: every profile valid, one per emotion, all
/// eight emotions covered, and no two profiles identical.
pub fn validate_profiles(profiles: &[EmotionMotionProfile]) -> Result<()> {
    for p in profiles {
        p.validate()?;
    }
    let mut seen = [false; EMOTION_COUNT];
    for p in profiles {
        if seen[p.emotion.index()] {
            return Err(Error::config(format!("duplicate profile for emotion {}", p.emotion)));
        }
        seen[p.emotion.index()] = true;
    }
    if profiles.len() != EMOTION_COUNT {
        return Err(Error::config(format!(
            "profile set must cover all {EMOTION_COUNT} emotions, got {}",
            profiles.len()
        )));
    }
    for (i, a) in profiles.iter().enumerate() {
        for b in profiles.iter().skip(i + 1) {
            if a == b {
                return Err(Error::config(format!(
                    "profiles for {} and {} are identical",
                    a.emotion, b.emotion
                )));
            }
        }
    }
    Ok(())
}

/// One frame of aligned cues.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub audio: AudioFeatureFrame,
    pub landmarks: Vec<Point3>,
    pub pose: HeadPose,
    pub gaze: GazeLabel,
    pub keypoints: Option<KeypointSet>,
}

/// One aligned cue sequence plus its sequence-level metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub identity: String,
    pub emotion: Emotion,
    pub fps: f64,
    pub seed: u64,
    pub canonical_width: f64,
    pub frames: Vec<FrameRecord>,
}

impl SequenceRecord {
    /// Frame `n`'s landmarks as a typed normalized frame.
    pub fn landmark_frame(&self, n: usize) -> Result<NormalizedLandmarkFrame> {
        let frame = self
            .frames
            .get(n)
            .ok_or_else(|| Error::domain(format!("frame {n} outside sequence of {}", self.frames.len())))?;
        NormalizedLandmarkFrame::new(frame.landmarks.clone(), self.canonical_width)
    }

    /// Structural invariants every record must satisfy.
    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::data(format!("sequence {}: fps must be positive", self.identity)));
        }
        if !(self.canonical_width.is_finite() && self.canonical_width > 0.0) {
            return Err(Error::data(format!(
                "sequence {}: canonical width must be positive",
                self.identity
            )));
        }
        let with_keypoints = self.frames.first().map(|f| f.keypoints.is_some());
        for (n, frame) in self.frames.iter().enumerate() {
            if frame.landmarks.len() != LANDMARK_COUNT {
                return Err(Error::data(format!(
                    "sequence {} frame {n}: {} landmarks instead of {LANDMARK_COUNT}",
                    self.identity,
                    frame.landmarks.len()
                )));
            }
            if frame.keypoints.is_some() != with_keypoints.unwrap_or(false) {
                return Err(Error::data(format!(
                    "sequence {} frame {n}: keypoints present on some frames but not others",
                    self.identity
                )));
            }
        }
        Ok(())
    }
}

/// Splits by whole sequences: shuffles deterministically, takes
/// round(n * train_fraction) for training, the rest held out.
pub fn split<'a>(
    records: &'a [SequenceRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<&'a SequenceRecord>, Vec<&'a SequenceRecord>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(format!(
            "train fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (records.len() as f64 * train_fraction).round() as usize;
    let train = order[..n_train].iter().map(|&i| &records[i]).collect();
    let heldout = order[n_train..].iter().map(|&i| &records[i]).collect();
    Ok((train, heldout))
}
