//! On-disk corpus formats: line-delimited frame records (one frame per
//! line), a JSON manifest per sequence, and a JSON manifest per corpus.
//!
//! A frame line holds, space separated: 28 audio coefficients, 147 x 3
//! landmark coordinates, 6 pose components (yaw pitch roll tx ty tz), the
//! gaze label as 3 integers (left, right, joint), and optionally 10 x 3
//! latent keypoints. Floats print in Rust's shortest round-trip form, so
//! write-then-read is bit-exact.

use super::{Emotion, FrameRecord, KeypointSet, SequenceRecord, KEYPOINT_COUNT};
use crate::audiofeat::{AudioFeatureFrame, AUDIO_FEATURE_DIMS};
use crate::error::{Error, Result};
use crate::gaze::GazeLabel;
use crate::geometry::{HeadPose, Point3, LANDMARK_COUNT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const RECORD_VERSION: &str = "emoface-corpus v1";

const BASE_FIELDS: usize = AUDIO_FEATURE_DIMS + 3 * LANDMARK_COUNT + 6 + 3;
const KEYPOINT_FIELDS: usize = 3 * KEYPOINT_COUNT;

/// Sequence-level metadata stored next to each record file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceManifest {
    pub version: String,
    pub identity: String,
    pub emotion: String,
    pub emotion_index: u8,
    pub fps: f64,
    pub seed: u64,
    pub frames: usize,
    pub canonical_width: f64,
    pub has_keypoints: bool,
    pub record_file: String,
    pub wav_file: Option<String>,
}

/// Corpus-level metadata: seed, profile hash, fps, and counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub version: String,
    pub seed: u64,
    pub fps: f64,
    pub profile_hash: String,
    pub sequences_per_emotion: usize,
    pub frames_per_sequence: usize,
    pub with_keypoints: bool,
    pub keypoint_sigma: f64,
    pub sequences: Vec<String>,
    pub total_frames: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn push_floats(line: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        if !line.is_empty() {
            line.push(' ');
        }
        let _ = write!(line, "{v}");
    }
}

/// Serializes one sequence's frames to the line-delimited record format.
pub fn write_record_file(path: &Path, record: &SequenceRecord) -> Result<()> {
    record.validate()?;
    let mut text = String::new();
    for frame in &record.frames {
        let mut line = String::new();
        push_floats(&mut line, frame.audio.coefficients.iter().copied());
        push_floats(&mut line, frame.landmarks.iter().flat_map(|p| p.iter().copied()));
        push_floats(
            &mut line,
            [
                frame.pose.yaw,
                frame.pose.pitch,
                frame.pose.roll,
                frame.pose.translation[0],
                frame.pose.translation[1],
                frame.pose.translation[2],
            ],
        );
        let _ = write!(line, " {} {} {}", frame.gaze.left(), frame.gaze.right(), frame.gaze.joint());
        if let Some(k) = &frame.keypoints {
            push_floats(&mut line, k.iter().flat_map(|p| p.iter().copied()));
        }
        line.push('\n');
        text.push_str(&line);
    }
    fs::write(path, text)?;
    Ok(())
}

struct LineContext<'a> {
    file: &'a Path,
    line_no: usize,
    byte_offset: usize,
}

impl LineContext<'_> {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::data(format!(
            "{}:{} (byte offset {}): {msg}",
            self.file.display(),
            self.line_no,
            self.byte_offset
        ))
    }
}

fn parse_floats(tokens: &[&str], ctx: &LineContext<'_>) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| ctx.err(format!("bad number {t:?}"))))
        .collect()
}

fn parse_frame(line: &str, has_keypoints: bool, ctx: &LineContext<'_>) -> Result<FrameRecord> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let expected = BASE_FIELDS + if has_keypoints { KEYPOINT_FIELDS } else { 0 };
    if tokens.len() != expected {
        return Err(ctx.err(format!("expected {expected} fields, got {}", tokens.len())));
    }
    let mut cursor = 0;
    let mut take = |n: usize| {
        let slice = &tokens[cursor..cursor + n];
        cursor += n;
        slice
    };

    let audio_vals = parse_floats(take(AUDIO_FEATURE_DIMS), ctx)?;
    let audio = AudioFeatureFrame::from_slice(&audio_vals).map_err(|e| ctx.err(e))?;

    let lm_vals = parse_floats(take(3 * LANDMARK_COUNT), ctx)?;
    let landmarks: Vec<Point3> =
        lm_vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    if !landmarks.iter().all(|p| p.iter().all(|v| v.is_finite())) {
        return Err(ctx.err("non-finite landmark coordinate"));
    }

    let pose_vals = parse_floats(take(6), ctx)?;
    let pose = HeadPose::new(
        pose_vals[0],
        pose_vals[1],
        pose_vals[2],
        [pose_vals[3], pose_vals[4], pose_vals[5]],
    )
    .map_err(|e| ctx.err(e))?;

    let gaze_tokens = take(3);
    let gaze_ints: Vec<u8> = gaze_tokens
        .iter()
        .map(|t| t.parse::<u8>().map_err(|_| ctx.err(format!("bad gaze integer {t:?}"))))
        .collect::<Result<_>>()?;
    let gaze = GazeLabel::new(gaze_ints[0], gaze_ints[1]).map_err(|e| ctx.err(e))?;
    if gaze.joint() != gaze_ints[2] {
        return Err(ctx.err(format!(
            "joint gaze index {} does not equal left {} + 10 * right {}",
            gaze_ints[2],
            gaze.left(),
            gaze.right()
        )));
    }

    let keypoints = if has_keypoints {
        let k_vals = parse_floats(take(KEYPOINT_FIELDS), ctx)?;
        if !k_vals.iter().all(|v| v.is_finite()) {
            return Err(ctx.err("non-finite keypoint coordinate"));
        }
        let mut set: KeypointSet = [[0.0; 3]; KEYPOINT_COUNT];
        for (i, c) in k_vals.chunks_exact(3).enumerate() {
            set[i] = [c[0], c[1], c[2]];
        }
        Some(set)
    } else {
        None
    };

    Ok(FrameRecord { audio, landmarks, pose, gaze, keypoints })
}

/// Parses one record file using its manifest for sequence-level fields.
/// Violations are reported with file, line number, and byte offset.
pub fn read_record_file(path: &Path, manifest: &SequenceManifest) -> Result<SequenceRecord> {
    if manifest.version != RECORD_VERSION {
        return Err(Error::data(format!(
            "{}: record version {:?} unsupported (want {RECORD_VERSION:?})",
            path.display(),
            manifest.version
        )));
    }
    let emotion = Emotion::from_name(&manifest.emotion)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    if emotion.index() != manifest.emotion_index as usize {
        return Err(Error::data(format!(
            "{}: emotion name {} does not match index {}",
            path.display(),
            manifest.emotion,
            manifest.emotion_index
        )));
    }
    let text = fs::read_to_string(path)?;
    let mut frames = Vec::new();
    let mut byte_offset = 0;
    for (idx, raw_line) in text.split_inclusive('\n').enumerate() {
        let ctx = LineContext { file: path, line_no: idx + 1, byte_offset };
        byte_offset += raw_line.len();
        let line = raw_line.trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            return Err(ctx.err("empty frame line"));
        }
        frames.push(parse_frame(line, manifest.has_keypoints, &ctx)?);
    }
    if frames.len() != manifest.frames {
        return Err(Error::data(format!(
            "{}: manifest declares {} frames, file holds {}",
            path.display(),
            manifest.frames,
            frames.len()
        )));
    }
    let record = SequenceRecord {
        identity: manifest.identity.clone(),
        emotion,
        fps: manifest.fps,
        seed: manifest.seed,
        canonical_width: manifest.canonical_width,
        frames,
    };
    record.validate()?;
    Ok(record)
}

/// Writes `<stem>.rec` plus `<stem>.json` into `dir`; `wav_file` merely
/// names an already-written sibling.
pub fn write_sequence(
    dir: &Path,
    stem: &str,
    record: &SequenceRecord,
    wav_file: Option<String>,
) -> Result<()> {
    let record_file = format!("{stem}.rec");
    write_record_file(&dir.join(&record_file), record)?;
    let manifest = SequenceManifest {
        version: RECORD_VERSION.to_string(),
        identity: record.identity.clone(),
        emotion: record.emotion.name().to_string(),
        emotion_index: record.emotion.index() as u8,
        fps: record.fps,
        seed: record.seed,
        frames: record.frames.len(),
        canonical_width: record.canonical_width,
        has_keypoints: record.frames.first().is_some_and(|f| f.keypoints.is_some()),
        record_file,
        wav_file,
    };
    write_json(&dir.join(format!("{stem}.json")), &manifest)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

/// Loads one sequence by stem: `<stem>.json` then the record file it names.
pub fn load_sequence(dir: &Path, stem: &str) -> Result<SequenceRecord> {
    let manifest: SequenceManifest = read_json(&dir.join(format!("{stem}.json")))?;
    read_record_file(&dir.join(&manifest.record_file), &manifest)
}

/// Loads a full corpus directory: the corpus manifest, then every sequence.
pub fn load_corpus(dir: &Path) -> Result<(CorpusManifest, Vec<SequenceRecord>)> {
    let manifest: CorpusManifest = read_json(&dir.join("corpus.json"))?;
    if manifest.version != RECORD_VERSION {
        return Err(Error::data(format!(
            "{}: corpus version {:?} unsupported (want {RECORD_VERSION:?})",
            dir.display(),
            manifest.version
        )));
    }
    let mut records = Vec::with_capacity(manifest.sequences.len());
    for stem in &manifest.sequences {
        records.push(load_sequence(dir, stem)?);
    }
    Ok((manifest, records))
}
