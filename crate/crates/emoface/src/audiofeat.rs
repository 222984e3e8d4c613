//! Audio ingestion and MFCC extraction, one feature frame per 30 FPS video
//! frame.
//!
//! Frame n is computed over a 30 ms analysis window centered on the frame
//! timestamp t_n = (n + 0.5) / fps. The analysis chain is pinned for
//! reproducibility: pre-emphasis 0.97, symmetric Hann window, 512-point
//! spectrum, 40 triangular mel filters (HTK scale, 0 Hz to Nyquist), natural
//! log with a 1e-30 floor, orthonormal DCT-II, first 28 coefficients kept
//! (including the 0th energy coefficient).

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::path::Path;

/// Width of one audio feature vector (a_n).
pub const AUDIO_FEATURE_DIMS: usize = 28;
/// The only sample rate the pipeline accepts; no implicit resampling.
pub const EXPECTED_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_FPS: f64 = 30.0;

#[derive(Clone, Debug)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        if !samples.iter().all(|s| s.is_finite()) {
            return Err(Error::numeric("waveform contains non-finite samples"));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// One 28-dimensional MFCC vector aligned to one video frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AudioFeatureFrame {
    pub coefficients: [f64; AUDIO_FEATURE_DIMS],
}

impl AudioFeatureFrame {
    pub fn new(coefficients: [f64; AUDIO_FEATURE_DIMS]) -> Result<Self> {
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(Error::numeric("feature frame contains non-finite coefficients"));
        }
        Ok(AudioFeatureFrame { coefficients })
    }

    pub fn from_slice(coefficients: &[f64]) -> Result<Self> {
        if coefficients.len() != AUDIO_FEATURE_DIMS {
            return Err(Error::structural(format!(
                "feature frame must hold {AUDIO_FEATURE_DIMS} coefficients, got {}",
                coefficients.len()
            )));
        }
        let mut buf = [0.0; AUDIO_FEATURE_DIMS];
        buf.copy_from_slice(coefficients);
        AudioFeatureFrame::new(buf)
    }
}

/// Analysis constants. Defaults are the pinned reproducible configuration;
/// the coefficient count itself is fixed by [`AudioFeatureFrame`].
#[derive(Clone, Copy, Debug)]
pub struct MfccConfig {
    pub fps: f64,
    pub window_secs: f64,
    pub pre_emphasis: f64,
    pub fft_size: usize,
    pub mel_filters: usize,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            fps: DEFAULT_FPS,
            window_secs: 0.030,
            pre_emphasis: 0.97,
            fft_size: 512,
            mel_filters: 40,
            log_floor: 1e-30,
        }
    }
}

impl MfccConfig {
    fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::config("fps must be positive"));
        }
        let window = (self.window_secs * sample_rate as f64).round() as usize;
        if window < 2 {
            return Err(Error::config("analysis window shorter than 2 samples"));
        }
        if self.fft_size < window {
            return Err(Error::config(format!(
                "fft size {} smaller than the {window}-sample analysis window",
                self.fft_size
            )));
        }
        if self.mel_filters < AUDIO_FEATURE_DIMS {
            return Err(Error::config(format!(
                "need at least {AUDIO_FEATURE_DIMS} mel filters, got {}",
                self.mel_filters
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::config("log floor must be positive"));
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank: `mel_filters` rows over `fft_size / 2 + 1` spectrum
/// bins, HTK mel spacing from 0 Hz to Nyquist.
fn mel_filterbank(config: &MfccConfig, sample_rate: u32) -> Vec<Vec<f64>> {
    let bins = config.fft_size / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..config.mel_filters + 2)
        .map(|j| mel_to_hz(mel_max * j as f64 / (config.mel_filters + 1) as f64))
        .collect();
    let mut bank = vec![vec![0.0; bins]; config.mel_filters];
    for (m, row) in bank.iter_mut().enumerate() {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * sample_rate as f64 / config.fft_size as f64;
            if f > lo && f < mid {
                *w = (f - lo) / (mid - lo);
            } else if (f - mid).abs() == 0.0 {
                *w = 1.0;
            } else if f > mid && f < hi {
                *w = (hi - f) / (hi - mid);
            }
        }
    }
    bank
}

/// Extracts one MFCC frame per video frame: count = round(duration * fps).
pub fn mfcc_sequence(w: &Waveform, config: &MfccConfig) -> Result<Vec<AudioFeatureFrame>> {
    if w.sample_rate != EXPECTED_SAMPLE_RATE {
        return Err(Error::domain(format!(
            "expected {EXPECTED_SAMPLE_RATE} Hz audio, got {} Hz (resample upstream)",
            w.sample_rate
        )));
    }
    config.validate(w.sample_rate)?;
    if w.samples.is_empty() || w.duration_secs() <= 1.0 / config.fps {
        return Err(Error::domain(format!(
            "audio of {:.4} s is too short for one {:.4} s hop",
            w.duration_secs(),
            1.0 / config.fps
        )));
    }
    let frame_count = (w.duration_secs() * config.fps).round() as usize;
    let window_len = (config.window_secs * w.sample_rate as f64).round() as usize;
    let bank = mel_filterbank(config, w.sample_rate);
    let hann: Vec<f64> = (0..window_len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (window_len - 1) as f64).cos())
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(config.fft_size);

    let mut frames = Vec::with_capacity(frame_count);
    let mut buf = vec![Complex::new(0.0, 0.0); config.fft_size];
    for n in 0..frame_count {
        let center = (n as f64 + 0.5) / config.fps * w.sample_rate as f64;
        let start = (center - window_len as f64 / 2.0).round() as isize;
        let sample_at = |i: isize| -> f64 {
            if i < 0 || i as usize >= w.samples.len() {
                0.0
            } else {
                w.samples[i as usize]
            }
        };
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < window_len {
                let x = sample_at(start + i as isize);
                let prev = if i == 0 { 0.0 } else { sample_at(start + i as isize - 1) };
                let emphasized = if i == 0 { x } else { x - config.pre_emphasis * prev };
                Complex::new(emphasized * hann[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        let power: Vec<f64> =
            buf[..config.fft_size / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        let log_energies: Vec<f64> = bank
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(config.log_floor).ln()
            })
            .collect();
        let mut coeffs = [0.0; AUDIO_FEATURE_DIMS];
        let m_count = config.mel_filters as f64;
        for (i, c) in coeffs.iter_mut().enumerate() {
            let alpha = if i == 0 { (1.0 / m_count).sqrt() } else { (2.0 / m_count).sqrt() };
            *c = alpha
                * log_energies
                    .iter()
                    .enumerate()
                    .map(|(m, &e)| {
                        e * (std::f64::consts::PI * i as f64 * (2.0 * m as f64 + 1.0)
                            / (2.0 * m_count))
                            .cos()
                    })
                    .sum::<f64>();
        }
        frames.push(AudioFeatureFrame::new(coeffs)?);
    }
    Ok(frames)
}

/// Forces a feature sequence to exactly `target` frames by truncating or
/// repeating the last frame. Misalignment beyond 2 frames is a data error:
/// it signals a broken audio/video pairing, not rounding.
pub fn align_lengths(
    mut features: Vec<AudioFeatureFrame>,
    target: usize,
) -> Result<Vec<AudioFeatureFrame>> {
    let diff = features.len().abs_diff(target);
    if diff > 2 {
        return Err(Error::data(format!(
            "feature count {} and target {target} differ by {diff} frames",
            features.len()
        )));
    }
    if features.len() > target {
        features.truncate(target);
    } else if features.len() < target {
        let last = *features
            .last()
            .ok_or_else(|| Error::data("cannot edge-pad an empty feature sequence"))?;
        features.resize(target, last);
    }
    Ok(features)
}

/// Reads a mono 16 kHz-agnostic WAV file (16-bit PCM or 32-bit float).
/// The sample-rate requirement is enforced at extraction time.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::data(format!(
            "{}: expected mono audio, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?,
        (format, bits) => {
            return Err(Error::data(format!(
                "{}: unsupported WAV encoding {format:?}/{bits}-bit",
                path.display()
            )))
        }
    };
    Waveform::new(samples, spec.sample_rate)
}

/// Writes 16-bit PCM; samples clamp to [-1, 1].
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    for &s in &w.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    writer.finalize().map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    Ok(())
}
