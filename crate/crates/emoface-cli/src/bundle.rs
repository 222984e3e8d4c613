//! On-disk synthesis bundle: `bundle.jsonl` with one frame per line plus a
//! `manifest.json` naming the emotion, frame count, and the hashes of
//! everything that produced it. The JSON layer keeps frames greppable and
//! diffable; all floats round-trip exactly.

use std::fs;
use std::path::Path;

use emoface::corpus::Emotion;
use emoface::gaze::GazeLabel;
use emoface::geometry::{HeadPose, NormalizedLandmarkFrame, Point3};
use emoface::metrics::CueTrack;
use emoface::sequentializers::SynthesisFrame;
use emoface::{Error, Result};
use serde::{Deserialize, Serialize};

pub const BUNDLE_VERSION: &str = "emoface-bundle v1";
pub const BUNDLE_FRAMES_FILE: &str = "bundle.jsonl";
pub const BUNDLE_MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BundlePose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub translation: [f64; 3],
}

/// One synthesized frame: every cue stream plus the recomposition and the
/// latent keypoints it drives.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BundleFrame {
    pub frame: usize,
    /// C_n: canonical-space landmarks, 147 points.
    pub landmarks: Vec<Point3>,
    /// r_n: head pose.
    pub pose: BundlePose,
    pub gaze_left: u8,
    pub gaze_right: u8,
    pub gaze_joint: u8,
    /// R_n: recomposed image-space landmarks, 147 points.
    pub relocated: Vec<Point3>,
    /// K_n: latent keypoints, 10 points.
    pub keypoints: Vec<Point3>,
    /// Raw per-frame classifier outputs, 8 values.
    pub emotion_logits: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BundleManifest {
    pub version: String,
    pub emotion: String,
    pub emotion_index: usize,
    pub fps: f64,
    pub frame_count: usize,
    pub canonical_width: f64,
    pub scale_factor: f64,
    pub audio_sha256: String,
    pub stage1_sha256: String,
    pub stage2_sha256: String,
    pub config_sha256: String,
}

impl BundleManifest {
    pub fn emotion(&self) -> Result<Emotion> {
        Emotion::from_name(&self.emotion)
    }
}

/// Writes `bundle.jsonl` and `manifest.json` into `dir`.
pub fn write_bundle(
    dir: &Path,
    manifest: &BundleManifest,
    frames: &[SynthesisFrame],
) -> Result<()> {
    if manifest.frame_count != frames.len() {
        return Err(Error::usage(format!(
            "bundle manifest promises {} frames but {} were supplied",
            manifest.frame_count,
            frames.len()
        )));
    }
    let mut lines = String::new();
    for (n, f) in frames.iter().enumerate() {
        let bf = BundleFrame {
            frame: n,
            landmarks: f.landmarks.points.clone(),
            pose: BundlePose {
                yaw: f.pose.yaw,
                pitch: f.pose.pitch,
                roll: f.pose.roll,
                translation: f.pose.translation,
            },
            gaze_left: f.gaze.left(),
            gaze_right: f.gaze.right(),
            gaze_joint: f.gaze.joint(),
            relocated: f.relocated.points.clone(),
            keypoints: f.keypoints.points.to_vec(),
            emotion_logits: f.emotion_logits.logits.clone(),
        };
        lines.push_str(
            &serde_json::to_string(&bf)
                .map_err(|e| Error::data(format!("cannot serialize frame {n}: {e}")))?,
        );
        lines.push('\n');
    }
    fs::write(dir.join(BUNDLE_FRAMES_FILE), lines)?;
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::data(format!("cannot serialize bundle manifest: {e}")))?;
    fs::write(dir.join(BUNDLE_MANIFEST_FILE), text + "\n")?;
    Ok(())
}

/// Reads a bundle back, checking version, frame numbering, and frame count.
pub fn read_bundle(dir: &Path) -> Result<(BundleManifest, Vec<BundleFrame>)> {
    let manifest_path = dir.join(BUNDLE_MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)?;
    let manifest: BundleManifest = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.version != BUNDLE_VERSION {
        return Err(Error::data(format!(
            "{}: unsupported bundle version {:?} (expected {BUNDLE_VERSION:?})",
            manifest_path.display(),
            manifest.version
        )));
    }

    let frames_path = dir.join(BUNDLE_FRAMES_FILE);
    let text = fs::read_to_string(&frames_path)?;
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let f: BundleFrame = serde_json::from_str(line)
            .map_err(|e| Error::data(format!("{} line {}: {e}", frames_path.display(), i + 1)))?;
        if f.frame != i {
            return Err(Error::data(format!(
                "{} line {}: frame numbered {} (frames must be 0..n in order)",
                frames_path.display(),
                i + 1,
                f.frame
            )));
        }
        frames.push(f);
    }
    if frames.len() != manifest.frame_count {
        return Err(Error::data(format!(
            "{}: holds {} frames but its manifest promises {}",
            frames_path.display(),
            frames.len(),
            manifest.frame_count
        )));
    }
    Ok((manifest, frames))
}

/// Re-types bundle frames as the cue track the metric suite consumes.
pub fn bundle_track(manifest: &BundleManifest, frames: &[BundleFrame]) -> Result<CueTrack> {
    let mut landmarks = Vec::with_capacity(frames.len());
    let mut poses = Vec::with_capacity(frames.len());
    let mut gaze = Vec::with_capacity(frames.len());
    for f in frames {
        landmarks.push(NormalizedLandmarkFrame::new(
            f.landmarks.clone(),
            manifest.canonical_width,
        )?);
        poses.push(HeadPose::new(f.pose.yaw, f.pose.pitch, f.pose.roll, f.pose.translation)?);
        gaze.push(GazeLabel::new(f.gaze_left, f.gaze_right)?);
    }
    CueTrack::new(landmarks, poses, gaze)
}
