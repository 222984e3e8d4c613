//! Synthetic corpus generation: seeded audio with a known modulation
//! envelope, faces whose mouth tracks that envelope, per-emotion eye
//! opening, gaze cycles, and head pose oscillations, plus optional latent
//! keypoint targets from the fixed linear oracle.
//!
//! Every stream is a closed-form function of the per-sequence parameter
//! draw, so tests can re-derive expected values exactly. Audio features are
//! extracted from the WAV file read back from disk, so stored features match
//! what any later pass over the same file computes.

use super::face::{synthesize_face, BASE_EYE_OPENING, MOUTH_AUDIO_SCALE};
use super::format::{write_json, write_sequence, CorpusManifest, RECORD_VERSION};
use super::oracle::KeypointOracle;
use super::{
    sha256_hex, validate_profiles, Emotion, EmotionMotionProfile, FrameRecord, SequenceRecord,
};
use crate::audiofeat::{
    mfcc_sequence, read_wav, write_wav, AudioFeatureFrame, MfccConfig, Waveform,
    EXPECTED_SAMPLE_RATE,
};
use crate::error::{Error, Result};
use crate::gaze::GazeLabel;
use crate::geometry::{
    relocate, HeadPose, NormalizedLandmarkFrame, DEFAULT_CANONICAL_WIDTH, DEFAULT_SCALE_FACTOR,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Carrier amplitude before envelope modulation; keeps 16-bit headroom.
const CARRIER_GAIN: f64 = 0.6;
/// Eyelid oscillation: fractional wobble around the profile's mean opening.
const EYE_WOBBLE: f64 = 0.08;
/// Duration of a default-length sequence; profile oscillations complete
/// whole cycles over it so per-sequence means equal the profile targets.
const DEFAULT_SEQ_SECS: f64 = 2.4;
/// Eyelid oscillation frequency: 3 cycles per default sequence.
const EYE_WOBBLE_HZ: f64 = 3.0 / DEFAULT_SEQ_SECS;
/// The shared identity every synthetic sequence uses.
const IDENTITY: &str = "canonical";

/// Generator knobs; defaults give 8 emotions x 6 sequences x 2.4 s.
#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub sequences_per_emotion: usize,
    pub frames_per_sequence: usize,
    pub seed: u64,
    pub fps: f64,
    pub sample_rate: u32,
    pub with_keypoints: bool,
    pub keypoint_sigma: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            sequences_per_emotion: 6,
            frames_per_sequence: 72,
            seed: 7,
            fps: 30.0,
            sample_rate: EXPECTED_SAMPLE_RATE,
            with_keypoints: true,
            keypoint_sigma: 0.01,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sequences_per_emotion == 0 {
            return Err(Error::config("need at least one sequence per emotion"));
        }
        if self.frames_per_sequence < 30 {
            return Err(Error::config(format!(
                "need at least 30 frames per sequence, got {}",
                self.frames_per_sequence
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::config(format!("fps must be positive, got {}", self.fps)));
        }
        if self.sample_rate != EXPECTED_SAMPLE_RATE {
            return Err(Error::config(format!(
                "sample rate must be {EXPECTED_SAMPLE_RATE}, got {}",
                self.sample_rate
            )));
        }
        if !(self.keypoint_sigma.is_finite() && self.keypoint_sigma >= 0.0) {
            return Err(Error::config(format!(
                "keypoint sigma must be >= 0, got {}",
                self.keypoint_sigma
            )));
        }
        let samples = self.samples_per_sequence();
        if (samples - samples.round()).abs() > 1e-9 {
            return Err(Error::config(format!(
                "{} frames at {} fps and {} Hz is not a whole number of samples",
                self.frames_per_sequence, self.fps, self.sample_rate
            )));
        }
        Ok(())
    }

    fn samples_per_sequence(&self) -> f64 {
        self.frames_per_sequence as f64 / self.fps * self.sample_rate as f64
    }
}

/// The per-sequence random draw, in the fixed order tests re-derive:
/// envelope (f1, phi1, f2, phi2), carrier, eye phase, gaze offset, pose
/// phases, translation amplitudes, frequencies, phases.
#[derive(Clone, Debug)]
pub(crate) struct SequenceParams {
    pub env_f1: f64,
    pub env_phi1: f64,
    pub env_f2: f64,
    pub env_phi2: f64,
    pub carrier_hz: f64,
    pub eye_phase: f64,
    pub gaze_offset: usize,
    pub pose_phase: [f64; 3],
    pub trans_amp: [f64; 3],
    pub trans_freq: [f64; 3],
    pub trans_phase: [f64; 3],
}

impl SequenceParams {
    pub(crate) fn draw(rng: &mut ChaCha20Rng, profile: &EmotionMotionProfile) -> SequenceParams {
        let env_f1 = rng.gen_range(0.7..1.5);
        let env_phi1 = rng.gen_range(0.0..TAU);
        let env_f2 = rng.gen_range(1.9..3.1);
        let env_phi2 = rng.gen_range(0.0..TAU);
        let carrier_hz = rng.gen_range(180.0..320.0);
        let eye_phase = rng.gen_range(0.0..TAU);
        let gaze_offset = rng.gen_range(0..profile.gaze_dwell * profile.gaze_cycle.len());
        let mut pose_phase = [0.0; 3];
        for p in &mut pose_phase {
            *p = rng.gen_range(0.0..TAU);
        }
        let trans_amp =
            [rng.gen_range(0.4..1.6), rng.gen_range(0.4..1.6), rng.gen_range(0.1..0.4)];
        let mut trans_freq = [0.0; 3];
        for f in &mut trans_freq {
            *f = rng.gen_range(0.15..0.45);
        }
        let mut trans_phase = [0.0; 3];
        for p in &mut trans_phase {
            *p = rng.gen_range(0.0..TAU);
        }
        SequenceParams {
            env_f1,
            env_phi1,
            env_f2,
            env_phi2,
            carrier_hz,
            eye_phase,
            gaze_offset,
            pose_phase,
            trans_amp,
            trans_freq,
            trans_phase,
        }
    }

    /// Loudness envelope in [0.10, 1.00]; the mouth tracks it exactly.
    pub(crate) fn envelope(&self, t: f64) -> f64 {
        0.55 + 0.30 * (TAU * self.env_f1 * t + self.env_phi1).sin()
            + 0.15 * (TAU * self.env_f2 * t + self.env_phi2).sin()
    }
}

/// Deterministic stream per (emotion, sequence); streams 0 and 1 are
/// reserved (1 seeds the keypoint oracle).
pub(crate) fn sequence_rng(
    seed: u64,
    emotion_idx: usize,
    seq_idx: usize,
    sequences_per_emotion: usize,
) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2 + (emotion_idx * sequences_per_emotion + seq_idx) as u64);
    rng
}

fn oracle_seed(seed: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng.gen()
}

/// Stable digest over every profile field, in emotion order, so corpora
/// generated from different profile sets cannot be confused.
fn profile_hash(profiles: &[EmotionMotionProfile]) -> String {
    let mut text = String::new();
    for p in profiles {
        let _ = writeln!(
            text,
            "{};eye={};pitch={};cycle={:?};dwell={};amp={:?};freq={:?};gain={}",
            p.emotion,
            p.eye_opening_scale,
            p.pitch_bias,
            p.gaze_cycle,
            p.gaze_dwell,
            p.pose_amplitude,
            p.pose_frequency,
            p.mouth_gain
        );
    }
    sha256_hex(text.as_bytes())
}

/// One motion archetype per emotion. Every profile differs from every
/// other in at least the eye opening scale.
///
/// Pose frequencies are whole cycle counts over the default 2.4 s sequence
/// and gaze cycle periods divide the default 72 frames, so per-sequence
/// means and zone histograms equal the closed-form targets exactly (up to
/// float rounding) regardless of the random phases and offsets.
pub fn default_profiles() -> Vec<EmotionMotionProfile> {
    let hz = |cycles: f64| cycles / DEFAULT_SEQ_SECS;
    let profile = |emotion,
                   eye_opening_scale,
                   pitch_bias,
                   gaze_cycle: &[u8],
                   gaze_dwell,
                   pose_amplitude,
                   cycles: [f64; 3],
                   mouth_gain| EmotionMotionProfile {
        emotion,
        eye_opening_scale,
        pitch_bias,
        gaze_cycle: gaze_cycle.to_vec(),
        gaze_dwell,
        pose_amplitude,
        pose_frequency: [hz(cycles[0]), hz(cycles[1]), hz(cycles[2])],
        mouth_gain,
    };
    vec![
        profile(Emotion::Neutral, 1.0, 0.0, &[2, 7], 18, [0.06, 0.05, 0.03], [1.0, 2.0, 1.0], 1.0),
        profile(Emotion::Angry, 0.8, -0.08, &[2, 1, 3], 12, [0.11, 0.08, 0.05], [3.0, 4.0, 2.0], 1.35),
        profile(Emotion::Contempt, 0.5, 0.15, &[3, 4], 18, [0.05, 0.04, 0.06], [1.0, 1.0, 2.0], 0.85),
        profile(Emotion::Disgust, 0.7, -0.12, &[1, 0], 12, [0.08, 0.07, 0.04], [2.0, 3.0, 1.0], 0.9),
        profile(Emotion::Fear, 1.45, -0.05, &[2, 0, 4], 8, [0.12, 0.09, 0.07], [4.0, 5.0, 3.0], 1.1),
        profile(Emotion::Happy, 1.15, 0.04, &[2, 7], 12, [0.09, 0.06, 0.05], [2.0, 4.0, 2.0], 1.5),
        profile(Emotion::Sad, 0.65, -0.18, &[0, 1], 36, [0.04, 0.03, 0.02], [1.0, 1.0, 1.0], 0.7),
        profile(Emotion::Surprised, 1.7, 0.0, &[2], 72, [0.10, 0.11, 0.04], [3.0, 2.0, 1.0], 1.25),
    ]
}

fn synth_waveform(params: &SequenceParams, config: &CorpusConfig) -> Result<Waveform> {
    let n_samples = config.samples_per_sequence().round() as usize;
    let samples: Vec<f64> = (0..n_samples)
        .map(|k| {
            let t = k as f64 / config.sample_rate as f64;
            CARRIER_GAIN * params.envelope(t) * (TAU * params.carrier_hz * t).sin()
        })
        .collect();
    Waveform::new(samples, config.sample_rate)
}

fn build_sequence(
    profile: &EmotionMotionProfile,
    params: &SequenceParams,
    features: Vec<AudioFeatureFrame>,
    oracle: Option<&KeypointOracle>,
    rng: &mut ChaCha20Rng,
    config: &CorpusConfig,
    stream: u64,
) -> Result<SequenceRecord> {
    let mut frames = Vec::with_capacity(features.len());
    for (n, audio) in features.into_iter().enumerate() {
        let t_n = (n as f64 + 0.5) / config.fps;
        let mouth_open = profile.mouth_gain * MOUTH_AUDIO_SCALE * params.envelope(t_n);
        let eye_ry = 0.5
            * BASE_EYE_OPENING
            * profile.eye_opening_scale
            * (1.0 + EYE_WOBBLE * (TAU * EYE_WOBBLE_HZ * t_n + params.eye_phase).sin());
        let cycle_slot = (n + params.gaze_offset) / profile.gaze_dwell;
        let zone = profile.gaze_cycle[cycle_slot % profile.gaze_cycle.len()];
        let gaze = GazeLabel::new(zone, zone)?;
        let landmarks = synthesize_face(eye_ry, mouth_open, &gaze)?;

        let osc = |axis: usize| {
            profile.pose_amplitude[axis]
                * (TAU * profile.pose_frequency[axis] * t_n + params.pose_phase[axis]).sin()
        };
        let trans = |axis: usize| {
            params.trans_amp[axis]
                * (TAU * params.trans_freq[axis] * t_n + params.trans_phase[axis]).sin()
        };
        let pose = HeadPose::new(
            osc(0),
            profile.pitch_bias + osc(1),
            osc(2),
            [trans(0), trans(1), trans(2)],
        )?;

        let keypoints = match oracle {
            Some(o) => {
                let frame =
                    NormalizedLandmarkFrame::new(landmarks.clone(), DEFAULT_CANONICAL_WIDTH)?;
                let relocated = relocate(&frame, &pose, &gaze, DEFAULT_SCALE_FACTOR)?;
                Some(o.sample(&relocated, DEFAULT_SCALE_FACTOR, rng)?)
            }
            None => None,
        };

        frames.push(FrameRecord { audio, landmarks, pose, gaze, keypoints });
    }
    Ok(SequenceRecord {
        identity: IDENTITY.to_string(),
        emotion: profile.emotion,
        fps: config.fps,
        seed: stream,
        canonical_width: DEFAULT_CANONICAL_WIDTH,
        frames,
    })
}

/// Generates the full corpus into `out_dir`: one WAV, one record file, and
/// one manifest per sequence, plus `corpus.json`. Byte-deterministic for a
/// given (profiles, config) pair.
pub fn generate_synthetic(
    profiles: &[EmotionMotionProfile],
    config: &CorpusConfig,
    out_dir: &Path,
) -> Result<CorpusManifest> {
    config.validate()?;
    validate_profiles(profiles)?;
    let mut sorted = profiles.to_vec();
    sorted.sort_by_key(|p| p.emotion.index());
    fs::create_dir_all(out_dir)?;

    let oracle = if config.with_keypoints {
        Some(KeypointOracle::new(oracle_seed(config.seed), config.keypoint_sigma)?)
    } else {
        None
    };
    let mfcc_config = MfccConfig { fps: config.fps, ..MfccConfig::default() };

    let mut stems = Vec::new();
    let mut total_frames = 0;
    for (e_idx, profile) in sorted.iter().enumerate() {
        for s_idx in 0..config.sequences_per_emotion {
            let stream = 2 + (e_idx * config.sequences_per_emotion + s_idx) as u64;
            let mut rng = sequence_rng(config.seed, e_idx, s_idx, config.sequences_per_emotion);
            let params = SequenceParams::draw(&mut rng, profile);

            let stem = format!("seq_{}_{s_idx:02}", profile.emotion);
            let wav_name = format!("{stem}.wav");
            write_wav(&out_dir.join(&wav_name), &synth_waveform(&params, config)?)?;
            let written = read_wav(&out_dir.join(&wav_name))?;
            let features = mfcc_sequence(&written, &mfcc_config)?;
            if features.len() != config.frames_per_sequence {
                return Err(Error::data(format!(
                    "{stem}: audio yields {} feature frames, expected {}",
                    features.len(),
                    config.frames_per_sequence
                )));
            }

            let record = build_sequence(
                profile,
                &params,
                features,
                oracle.as_ref(),
                &mut rng,
                config,
                stream,
            )?;
            write_sequence(out_dir, &stem, &record, Some(wav_name))?;
            total_frames += record.frames.len();
            stems.push(stem);
        }
    }

    let manifest = CorpusManifest {
        version: RECORD_VERSION.to_string(),
        seed: config.seed,
        fps: config.fps,
        profile_hash: profile_hash(&sorted),
        sequences_per_emotion: config.sequences_per_emotion,
        frames_per_sequence: config.frames_per_sequence,
        with_keypoints: config.with_keypoints,
        keypoint_sigma: config.keypoint_sigma,
        sequences: stems,
        total_frames,
    };
    write_json(&out_dir.join("corpus.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::face::MOUTH_GAP_MIN;
    use crate::corpus::{load_corpus, mouth_opening, EMOTION_COUNT};
    use crate::gaze::ZONE_COUNT;
    use crate::geometry::eye_opening;
    use std::sync::OnceLock;
    use tempfile::TempDir;

    fn stats_corpus() -> &'static (TempDir, CorpusManifest, Vec<SequenceRecord>) {
        static CORPUS: OnceLock<(TempDir, CorpusManifest, Vec<SequenceRecord>)> = OnceLock::new();
        CORPUS.get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let config = CorpusConfig {
                sequences_per_emotion: 4,
                with_keypoints: false,
                ..CorpusConfig::default()
            };
            generate_synthetic(&default_profiles(), &config, dir.path()).unwrap();
            let (manifest, records) = load_corpus(dir.path()).unwrap();
            (dir, manifest, records)
        })
    }

    fn by_emotion(records: &[SequenceRecord], emotion: Emotion) -> Vec<&SequenceRecord> {
        records.iter().filter(|r| r.emotion == emotion).collect()
    }

    /// |grand mean - target| <= 3 * (empirical standard error across
    /// per-sequence means) + epsilon; epsilon covers exact-match cases
    /// where the spread is zero.
    fn assert_within_3se(per_seq: &[f64], target: f64, what: &str) {
        let n = per_seq.len() as f64;
        let grand = per_seq.iter().sum::<f64>() / n;
        let var = per_seq.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let tol = 3.0 * se + 1e-9;
        assert!(
            (grand - target).abs() <= tol,
            "{what}: grand mean {grand} vs target {target} (tolerance {tol})"
        );
    }

    #[test]
    fn per_emotion_statistics_match_the_profiles() {
        let (_dir, _manifest, records) = stats_corpus();
        for profile in default_profiles() {
            let seqs = by_emotion(records, profile.emotion);
            assert_eq!(seqs.len(), 4);

            let eye_means: Vec<f64> = seqs
                .iter()
                .map(|r| {
                    r.frames.iter().map(|f| eye_opening(&f.landmarks).unwrap()).sum::<f64>()
                        / r.frames.len() as f64
                })
                .collect();
            let eye_target = BASE_EYE_OPENING * profile.eye_opening_scale;
            assert_within_3se(&eye_means, eye_target, &format!("{} eye opening", profile.emotion));

            let pitch_means: Vec<f64> = seqs
                .iter()
                .map(|r| r.frames.iter().map(|f| f.pose.pitch).sum::<f64>() / r.frames.len() as f64)
                .collect();
            assert_within_3se(&pitch_means, profile.pitch_bias, &format!("{} pitch", profile.emotion));

            for zone in 0..ZONE_COUNT as u8 {
                let cycle_share = profile.gaze_cycle.iter().filter(|&&z| z == zone).count() as f64
                    / profile.gaze_cycle.len() as f64;
                let shares: Vec<f64> = seqs
                    .iter()
                    .map(|r| {
                        r.frames.iter().filter(|f| f.gaze.left() == zone).count() as f64
                            / r.frames.len() as f64
                    })
                    .collect();
                assert_within_3se(
                    &shares,
                    cycle_share,
                    &format!("{} gaze zone {zone} share", profile.emotion),
                );
            }
        }
    }

    #[test]
    fn contempt_narrows_the_eyes_and_lifts_the_chin_relative_to_neutral() {
        let (_dir, _manifest, records) = stats_corpus();
        let mean_over = |emotion, f: &dyn Fn(&FrameRecord) -> f64| {
            let seqs = by_emotion(records, emotion);
            let mut sum = 0.0;
            let mut count = 0;
            for r in &seqs {
                for frame in &r.frames {
                    sum += f(frame);
                    count += 1;
                }
            }
            sum / count as f64
        };
        let eye = |frame: &FrameRecord| eye_opening(&frame.landmarks).unwrap();
        let pitch = |frame: &FrameRecord| frame.pose.pitch;
        assert!(
            mean_over(Emotion::Contempt, &eye) < mean_over(Emotion::Neutral, &eye),
            "contempt must narrow the eyes relative to neutral"
        );
        assert!(
            mean_over(Emotion::Contempt, &pitch) > mean_over(Emotion::Neutral, &pitch),
            "contempt must tilt the head upward relative to neutral"
        );
    }

    #[test]
    fn surprise_stares_at_the_center_zone() {
        let (_dir, _manifest, records) = stats_corpus();
        let mut counts = [0usize; ZONE_COUNT];
        for r in by_emotion(records, Emotion::Surprised) {
            for frame in &r.frames {
                counts[frame.gaze.left() as usize] += 1;
            }
        }
        let modal = counts.iter().enumerate().max_by_key(|(_, &c)| c).unwrap().0;
        assert_eq!(modal as u8, crate::gaze::CENTER_ZONE);
    }

    #[test]
    fn mouth_opening_tracks_the_audio_envelope_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let config = CorpusConfig {
            sequences_per_emotion: 1,
            frames_per_sequence: 33,
            with_keypoints: false,
            ..CorpusConfig::default()
        };
        generate_synthetic(&default_profiles(), &config, dir.path()).unwrap();
        let (_, records) = load_corpus(dir.path()).unwrap();
        for profile in default_profiles() {
            let record = &by_emotion(&records, profile.emotion)[0];
            let mut rng =
                sequence_rng(config.seed, profile.emotion.index(), 0, config.sequences_per_emotion);
            let params = SequenceParams::draw(&mut rng, &profile);
            for (n, frame) in record.frames.iter().enumerate() {
                let t_n = (n as f64 + 0.5) / config.fps;
                let expected =
                    MOUTH_GAP_MIN + profile.mouth_gain * MOUTH_AUDIO_SCALE * params.envelope(t_n);
                let got = mouth_opening(&frame.landmarks).unwrap();
                assert!(
                    (got - expected).abs() < 1e-9,
                    "{} frame {n}: mouth {got} vs envelope-derived {expected}",
                    profile.emotion
                );
            }
        }
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let config = CorpusConfig {
            sequences_per_emotion: 1,
            frames_per_sequence: 30,
            ..CorpusConfig::default()
        };
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for dir in &dirs {
            generate_synthetic(&default_profiles(), &config, dir.path()).unwrap();
        }
        let list = |dir: &TempDir| {
            let mut names: Vec<String> = fs::read_dir(dir.path())
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .collect();
            names.sort();
            names
        };
        let names = list(&dirs[0]);
        assert_eq!(names, list(&dirs[1]));
        assert_eq!(names.len(), 3 * EMOTION_COUNT + 1, "wav + rec + json per sequence, plus corpus.json");
        for name in &names {
            let a = fs::read(dirs[0].path().join(name)).unwrap();
            let b = fs::read(dirs[1].path().join(name)).unwrap();
            assert_eq!(a, b, "{name} must be byte-identical across runs");
        }
    }

    #[test]
    fn generated_corpus_loads_cleanly_with_keypoints() {
        let dir = tempfile::tempdir().unwrap();
        let config = CorpusConfig {
            sequences_per_emotion: 1,
            frames_per_sequence: 30,
            ..CorpusConfig::default()
        };
        let manifest = generate_synthetic(&default_profiles(), &config, dir.path()).unwrap();
        assert_eq!(manifest.total_frames, 30 * EMOTION_COUNT);
        let (loaded, records) = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded.profile_hash, manifest.profile_hash);
        assert_eq!(records.len(), EMOTION_COUNT);
        for record in &records {
            assert_eq!(record.frames.len(), 30);
            for (n, frame) in record.frames.iter().enumerate() {
                assert!(frame.keypoints.is_some(), "frame {n} should carry keypoints");
            }
            record.landmark_frame(0).unwrap().validate_canonical().unwrap();
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let bad = [
            CorpusConfig { sequences_per_emotion: 0, ..CorpusConfig::default() },
            CorpusConfig { frames_per_sequence: 10, ..CorpusConfig::default() },
            CorpusConfig { frames_per_sequence: 31, ..CorpusConfig::default() },
            CorpusConfig { sample_rate: 44_100, ..CorpusConfig::default() },
            CorpusConfig { keypoint_sigma: -0.1, ..CorpusConfig::default() },
            CorpusConfig { fps: 0.0, ..CorpusConfig::default() },
        ];
        for config in bad {
            assert!(
                matches!(config.validate().unwrap_err(), Error::Config(_)),
                "{config:?} should be a config error"
            );
        }
    }
}
