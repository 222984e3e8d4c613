//! Model shells for both stages: layer wiring, per-step inference, and
//! checkpoint round-trips.
//!
//! Stage 1 shares one bidirectional audio window encoder and one emotion
//! embedding across its three causal generators. Each generator is an LSTM
//! cell followed by a single linear head; the emotion classifier is a single
//! linear layer over the three concatenated LSTM features. Stage 2 owns a
//! separate window encoder and a causal keypoint generator whose head also
//! sees the scaled recomposed landmarks through a skip connection.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::audiofeat::{AudioFeatureFrame, AUDIO_FEATURE_DIMS};
use crate::corpus::{Emotion, EMOTION_COUNT, KEYPOINT_COUNT};
use crate::error::{Error, Result};
use crate::gaze::{GazeLabel, JOINT_CLASSES};
use crate::geometry::{
    HeadPose, NormalizedLandmarkFrame, Point3, RelocatedLandmarkFrame, LANDMARK_COUNT,
};
use crate::neural::{softmax, Checkpoint, Embedding, Linear, RecurrentLayer, Tensor};

use super::{CueFeatures, EmotionLogits, LatentKeypointFrame, SequentializerConfig};

pub(crate) const LANDMARK_DIMS: usize = 3 * LANDMARK_COUNT;
pub(crate) const POSE_DIMS: usize = 6;
pub(crate) const KEYPOINT_DIMS: usize = 3 * KEYPOINT_COUNT;

/// Recurrent (h, c) state carried by the caller between causal steps.
#[derive(Clone, Debug)]
pub struct StepState {
    pub(crate) h: Array2<f64>,
    pub(crate) c: Array2<f64>,
}

/// Per-coefficient normalization of the raw MFCC features, fitted on the
/// training corpus and stored in the checkpoint. Defaults to the identity so
/// freshly built models still run.
#[derive(Clone, Debug)]
pub(crate) struct AudioNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AudioNorm {
    fn identity() -> AudioNorm {
        AudioNorm { mean: vec![0.0; AUDIO_FEATURE_DIMS], std: vec![1.0; AUDIO_FEATURE_DIMS] }
    }

    pub fn apply(&self, frame: &AudioFeatureFrame) -> [f64; AUDIO_FEATURE_DIMS] {
        let mut out = [0.0; AUDIO_FEATURE_DIMS];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (frame.coefficients[i] - self.mean[i]) / self.std[i];
        }
        out
    }

    fn save(&self, ckpt: &mut Checkpoint) -> Result<()> {
        ckpt.add_tensor("audio_norm.mean", vec![AUDIO_FEATURE_DIMS], self.mean.clone())?;
        ckpt.add_tensor("audio_norm.std", vec![AUDIO_FEATURE_DIMS], self.std.clone())
    }

    fn load(ckpt: &Checkpoint) -> Result<AudioNorm> {
        let mean = ckpt.require_tensor("audio_norm.mean", &[AUDIO_FEATURE_DIMS])?.to_vec();
        let std = ckpt.require_tensor("audio_norm.std", &[AUDIO_FEATURE_DIMS])?.to_vec();
        if std.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::data("audio normalization has a non-positive std entry"));
        }
        Ok(AudioNorm { mean, std })
    }
}

/// Stage 1: three emotion-conditioned causal generators (landmarks, pose,
/// gaze) over one shared audio window encoder, plus the emotion classifier.
/// Exported Adam moments, kept with the model so an interrupted training
/// schedule resumes exactly where it stopped.
#[derive(Clone)]
pub(crate) struct OptimizerSnapshot {
    pub(crate) step_count: u64,
    pub(crate) tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl OptimizerSnapshot {
    fn save(&self, ckpt: &mut Checkpoint) -> Result<()> {
        ckpt.meta.insert("adam.t".into(), self.step_count.to_string());
        for (name, shape, values) in &self.tensors {
            ckpt.add_tensor(name, shape.clone(), values.clone())?;
        }
        Ok(())
    }

    fn load(ckpt: &Checkpoint) -> Result<Option<OptimizerSnapshot>> {
        let Some(t) = ckpt.meta.get("adam.t") else {
            return Ok(None);
        };
        let step_count = t
            .parse()
            .map_err(|_| Error::data(format!("checkpoint meta adam.t is not a count: {t:?}")))?;
        let tensors = ckpt
            .tensors()
            .iter()
            .filter(|(name, _, _)| name.starts_with("adam."))
            .cloned()
            .collect();
        Ok(Some(OptimizerSnapshot { step_count, tensors }))
    }
}

pub struct Stage1Model {
    pub(crate) config: SequentializerConfig,
    pub(crate) encoder: RecurrentLayer,
    pub(crate) emotion_embed: Embedding,
    pub(crate) gaze_embed: Embedding,
    pub(crate) landmark_cell: RecurrentLayer,
    pub(crate) pose_cell: RecurrentLayer,
    pub(crate) gaze_cell: RecurrentLayer,
    pub(crate) landmark_head: Linear,
    pub(crate) pose_head: Linear,
    pub(crate) gaze_head: Linear,
    pub(crate) classifier: Linear,
    pub(crate) audio_norm: AudioNorm,
    pub(crate) trained_epochs: usize,
    pub(crate) opt_state: Option<OptimizerSnapshot>,
}

impl Stage1Model {
    pub fn new(config: &SequentializerConfig) -> Result<Stage1Model> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let ctx = config.context_dim();
        let emo = config.emotion_embed_dim;
        // Construction order is part of the initialization contract: it
        // fixes which random draws land in which tensor.
        let encoder = RecurrentLayer::bidirectional_encoder(
            "stage1.encoder",
            AUDIO_FEATURE_DIMS,
            config.encoder_hidden,
            &mut rng,
        );
        let emotion_embed = Embedding::new("emotion", emo, EMOTION_COUNT, &mut rng);
        let gaze_embed =
            Embedding::new("stage1.gaze_embed", config.gaze_embed_dim, JOINT_CLASSES, &mut rng);
        let landmark_cell = RecurrentLayer::causal(
            "stage1.landmark.cell",
            LANDMARK_DIMS + ctx + emo,
            config.hidden,
            &mut rng,
        );
        let pose_cell = RecurrentLayer::causal(
            "stage1.pose.cell",
            POSE_DIMS + ctx + emo,
            config.hidden,
            &mut rng,
        );
        let gaze_cell = RecurrentLayer::causal(
            "stage1.gaze.cell",
            config.gaze_embed_dim + ctx + emo,
            config.hidden,
            &mut rng,
        );
        let landmark_head = Linear::new("stage1.landmark.head", config.hidden, LANDMARK_DIMS, &mut rng);
        let pose_head = Linear::new("stage1.pose.head", config.hidden, POSE_DIMS, &mut rng);
        let gaze_head = Linear::new("stage1.gaze.head", config.hidden, JOINT_CLASSES, &mut rng);
        let classifier = Linear::new("stage1.classifier", 3 * config.hidden, EMOTION_COUNT, &mut rng);
        Ok(Stage1Model {
            config: *config,
            encoder,
            emotion_embed,
            gaze_embed,
            landmark_cell,
            pose_cell,
            gaze_cell,
            landmark_head,
            pose_head,
            gaze_head,
            classifier,
            audio_norm: AudioNorm::identity(),
            trained_epochs: 0,
            opt_state: None,
        })
    }

    pub fn config(&self) -> &SequentializerConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained_epochs > 0
    }

    pub(crate) fn set_audio_norm(&mut self, norm: AudioNorm) {
        self.audio_norm = norm;
    }

    /// Fresh zero state for any of the three generators (they share the
    /// hidden width), batch size 1.
    pub fn zero_state(&self) -> StepState {
        let (h, c) = self.landmark_cell.zero_state(1);
        StepState { h, c }
    }

    pub(crate) fn normalize_frame(&self, frame: &AudioFeatureFrame) -> [f64; AUDIO_FEATURE_DIMS] {
        self.audio_norm.apply(frame)
    }

    /// Encodes one clamped audio window into the shared context vector.
    fn encode_window(&self, window: &[AudioFeatureFrame]) -> Result<Array2<f64>> {
        if window.is_empty() {
            return Err(Error::usage("audio window must hold at least one frame"));
        }
        let xs: Vec<Array2<f64>> = window
            .iter()
            .map(|f| {
                Array2::from_shape_vec((1, AUDIO_FEATURE_DIMS), self.normalize_frame(f).to_vec())
                    .expect("fixed-width row")
            })
            .collect();
        self.encoder.infer_window(&xs)
    }

    fn embed_emotion_row(&self, emotion: Emotion) -> Result<Array2<f64>> {
        self.emotion_embed.infer(&[emotion.index()])
    }

    /// One auto-regressive landmark step: previous canonical frame plus the
    /// audio window and emotion produce the next canonical frame and the
    /// landmark cue feature f_l.
    pub fn landmark_step(
        &self,
        prev: &NormalizedLandmarkFrame,
        window: &[AudioFeatureFrame],
        emotion: Emotion,
        state: &StepState,
    ) -> Result<(Vec<f64>, NormalizedLandmarkFrame, StepState)> {
        let ctx = self.encode_window(window)?;
        let emo = self.embed_emotion_row(emotion)?;
        let mut x = Vec::with_capacity(self.landmark_cell.in_dim());
        for p in &prev.points {
            x.extend_from_slice(p);
        }
        x.extend(ctx.row(0).iter());
        x.extend(emo.row(0).iter());
        let x = Array2::from_shape_vec((1, x.len()), x).expect("row layout");
        let (h, c) = self.landmark_cell.step_infer(&x, &state.h, &state.c)?;
        let out = self.landmark_head.infer(&h);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("landmark generator produced a non-finite output"));
        }
        let points: Vec<Point3> = out
            .row(0)
            .as_slice()
            .expect("contiguous row")
            .chunks_exact(3)
            .map(|ch| [ch[0], ch[1], ch[2]])
            .collect();
        let frame = NormalizedLandmarkFrame::new(points, prev.canonical_width)?;
        Ok((h.row(0).to_vec(), frame, StepState { h, c }))
    }

    /// One auto-regressive pose step; output angles are wrapped into
    /// (-pi, pi].
    pub fn pose_step(
        &self,
        prev: &HeadPose,
        window: &[AudioFeatureFrame],
        emotion: Emotion,
        state: &StepState,
    ) -> Result<(Vec<f64>, HeadPose, StepState)> {
        let ctx = self.encode_window(window)?;
        let emo = self.embed_emotion_row(emotion)?;
        let mut x = Vec::with_capacity(self.pose_cell.in_dim());
        x.extend_from_slice(&[prev.yaw, prev.pitch, prev.roll]);
        x.extend_from_slice(&prev.translation);
        x.extend(ctx.row(0).iter());
        x.extend(emo.row(0).iter());
        let x = Array2::from_shape_vec((1, x.len()), x).expect("row layout");
        let (h, c) = self.pose_cell.step_infer(&x, &state.h, &state.c)?;
        let out = self.pose_head.infer(&h);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("pose generator produced a non-finite output"));
        }
        let o = out.row(0);
        let pose = HeadPose::from_unwrapped(o[0], o[1], o[2], [o[3], o[4], o[5]])?;
        Ok((h.row(0).to_vec(), pose, StepState { h, c }))
    }

    /// One auto-regressive gaze step: the previous joint label enters as a
    /// learned embedding; the output is the softmax distribution over the
    /// 100 joint gaze classes.
    pub fn gaze_step(
        &self,
        prev: &GazeLabel,
        window: &[AudioFeatureFrame],
        emotion: Emotion,
        state: &StepState,
    ) -> Result<(Vec<f64>, Vec<f64>, StepState)> {
        let ctx = self.encode_window(window)?;
        let emo = self.embed_emotion_row(emotion)?;
        let prev_embed = self.gaze_embed.infer(&[prev.joint() as usize])?;
        let mut x = Vec::with_capacity(self.gaze_cell.in_dim());
        x.extend(prev_embed.row(0).iter());
        x.extend(ctx.row(0).iter());
        x.extend(emo.row(0).iter());
        let x = Array2::from_shape_vec((1, x.len()), x).expect("row layout");
        let (h, c) = self.gaze_cell.step_infer(&x, &state.h, &state.c)?;
        let logits = self.gaze_head.infer(&h);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("gaze generator produced a non-finite output"));
        }
        let probs = softmax(&logits).row(0).to_vec();
        Ok((h.row(0).to_vec(), probs, StepState { h, c }))
    }

    /// Emotion logits from the three concatenated cue features.
    pub fn classify_emotion(&self, cues: &CueFeatures) -> Result<EmotionLogits> {
        let h = self.config.hidden;
        for (name, f) in [
            ("landmark", &cues.f_landmark),
            ("pose", &cues.f_pose),
            ("gaze", &cues.f_gaze),
        ] {
            if f.len() != h {
                return Err(Error::usage(format!(
                    "{name} cue feature has length {}, expected the generator width {h}",
                    f.len()
                )));
            }
        }
        let mut x = Vec::with_capacity(3 * h);
        x.extend_from_slice(&cues.f_landmark);
        x.extend_from_slice(&cues.f_pose);
        x.extend_from_slice(&cues.f_gaze);
        let x = Array2::from_shape_vec((1, 3 * h), x).expect("row layout");
        let logits = self.classifier.infer(&x);
        EmotionLogits::new(logits.row(0).to_vec())
    }

    /// Every trainable tensor, in the fixed optimizer order.
    pub(crate) fn params(&mut self) -> Vec<&mut Tensor> {
        let mut ps = self.encoder.params();
        ps.extend(self.emotion_embed.params());
        ps.extend(self.gaze_embed.params());
        ps.extend(self.landmark_cell.params());
        ps.extend(self.pose_cell.params());
        ps.extend(self.gaze_cell.params());
        ps.extend(self.landmark_head.params());
        ps.extend(self.pose_head.params());
        ps.extend(self.gaze_head.params());
        ps.extend(self.classifier.params());
        ps
    }

    pub(crate) fn clear_caches(&mut self) {
        self.encoder.clear_cache();
        self.emotion_embed.clear_cache();
        self.gaze_embed.clear_cache();
        self.landmark_cell.clear_cache();
        self.pose_cell.clear_cache();
        self.gaze_cell.clear_cache();
        self.landmark_head.clear_cache();
        self.pose_head.clear_cache();
        self.gaze_head.clear_cache();
        self.classifier.clear_cache();
    }

    pub fn to_checkpoint(&mut self) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new();
        ckpt.meta.insert("kind".into(), "stage1".into());
        save_config(&mut ckpt, &self.config);
        ckpt.meta.insert("trained_epochs".into(), self.trained_epochs.to_string());
        self.audio_norm.save(&mut ckpt)?;
        for p in self.params() {
            let values = p.value.iter().copied().collect();
            let shape = p.shape().to_vec();
            ckpt.add_tensor(&p.name, shape, values)?;
        }
        if let Some(state) = &self.opt_state {
            state.save(&mut ckpt)?;
        }
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Stage1Model> {
        require_kind(ckpt, "stage1")?;
        let config = load_config(ckpt)?;
        let mut model = Stage1Model::new(&config)?;
        model.trained_epochs = meta_usize(ckpt, "trained_epochs")?;
        model.audio_norm = AudioNorm::load(ckpt)?;
        for p in model.params() {
            load_tensor(p, ckpt)?;
        }
        model.opt_state = OptimizerSnapshot::load(ckpt)?;
        Ok(model)
    }
}

/// Stage 2: the causal latent-keypoint generator. It owns its audio window
/// encoder; the emotion embedding is copied from stage 1 and frozen.
pub struct Stage2Model {
    pub(crate) config: SequentializerConfig,
    pub(crate) encoder: RecurrentLayer,
    pub(crate) emotion_embed: Embedding,
    pub(crate) keypoint_cell: RecurrentLayer,
    pub(crate) keypoint_head: Linear,
    pub(crate) audio_norm: AudioNorm,
    pub(crate) trained_epochs: usize,
    pub(crate) opt_state: Option<OptimizerSnapshot>,
}

impl Stage2Model {
    /// Builds a fresh stage-2 model around the (frozen) emotion embedding of
    /// a stage-1 model. The two configs must agree.
    pub fn new(config: &SequentializerConfig, stage1: &Stage1Model) -> Result<Stage2Model> {
        config.validate()?;
        if stage1.config != *config {
            return Err(Error::usage(
                "stage-2 config must match the stage-1 config it builds on",
            ));
        }
        let emotion_embed = Embedding::from_matrix(
            "emotion",
            config.emotion_embed_dim,
            EMOTION_COUNT,
            stage1.emotion_embed.params_snapshot(),
        )?;
        Stage2Model::with_emotion_embed(config, emotion_embed, stage1.audio_norm.clone())
    }

    fn with_emotion_embed(
        config: &SequentializerConfig,
        emotion_embed: Embedding,
        audio_norm: AudioNorm,
    ) -> Result<Stage2Model> {
        // Stream 1 of the seed keeps stage-2 draws independent of the
        // stage-1 construction order.
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let ctx = config.context_dim();
        let emo = config.emotion_embed_dim;
        let encoder = RecurrentLayer::bidirectional_encoder(
            "stage2.encoder",
            AUDIO_FEATURE_DIMS,
            config.encoder_hidden,
            &mut rng,
        );
        let keypoint_cell = RecurrentLayer::causal(
            "stage2.keypoint.cell",
            KEYPOINT_DIMS + LANDMARK_DIMS + ctx + emo,
            config.hidden,
            &mut rng,
        );
        // The head sees the scaled recomposed landmarks again through a skip
        // connection, so the oracle's linear map is directly representable.
        let keypoint_head = Linear::new(
            "stage2.keypoint.head",
            config.hidden + LANDMARK_DIMS,
            KEYPOINT_DIMS,
            &mut rng,
        );
        Ok(Stage2Model {
            config: *config,
            encoder,
            emotion_embed,
            keypoint_cell,
            keypoint_head,
            audio_norm,
            trained_epochs: 0,
            opt_state: None,
        })
    }

    pub fn config(&self) -> &SequentializerConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained_epochs > 0
    }

    pub fn zero_state(&self) -> StepState {
        let (h, c) = self.keypoint_cell.zero_state(1);
        StepState { h, c }
    }

    pub(crate) fn normalize_frame(&self, frame: &AudioFeatureFrame) -> [f64; AUDIO_FEATURE_DIMS] {
        self.audio_norm.apply(frame)
    }

    fn encode_window(&self, window: &[AudioFeatureFrame]) -> Result<Array2<f64>> {
        if window.is_empty() {
            return Err(Error::usage("audio window must hold at least one frame"));
        }
        let xs: Vec<Array2<f64>> = window
            .iter()
            .map(|f| {
                Array2::from_shape_vec((1, AUDIO_FEATURE_DIMS), self.normalize_frame(f).to_vec())
                    .expect("fixed-width row")
            })
            .collect();
        self.encoder.infer_window(&xs)
    }

    /// Flattens a recomposed frame and divides by the scale factor, bringing
    /// image-space landmarks back to canonical magnitude for the network.
    pub(crate) fn scale_relocated(&self, relocated: &RelocatedLandmarkFrame) -> Result<Vec<f64>> {
        if relocated.points.len() != LANDMARK_COUNT {
            return Err(Error::structural(format!(
                "recomposed frame must hold {LANDMARK_COUNT} points, got {}",
                relocated.points.len()
            )));
        }
        let inv = 1.0 / self.config.scale_factor;
        let mut out = Vec::with_capacity(LANDMARK_DIMS);
        for p in &relocated.points {
            out.extend(p.iter().map(|v| v * inv));
        }
        Ok(out)
    }

    /// One auto-regressive keypoint step: previous keypoints, the current
    /// recomposed landmarks, the audio window, and the emotion produce the
    /// next latent keypoint frame.
    pub fn keypoint_step(
        &self,
        prev: &LatentKeypointFrame,
        relocated: &RelocatedLandmarkFrame,
        window: &[AudioFeatureFrame],
        emotion: Emotion,
        state: &StepState,
    ) -> Result<(LatentKeypointFrame, StepState)> {
        let ctx = self.encode_window(window)?;
        let emo = self.emotion_embed.infer(&[emotion.index()])?;
        let r_scaled = self.scale_relocated(relocated)?;
        let mut x = Vec::with_capacity(self.keypoint_cell.in_dim());
        x.extend(prev.flatten());
        x.extend_from_slice(&r_scaled);
        x.extend(ctx.row(0).iter());
        x.extend(emo.row(0).iter());
        let x = Array2::from_shape_vec((1, x.len()), x).expect("row layout");
        let (h, c) = self.keypoint_cell.step_infer(&x, &state.h, &state.c)?;
        let mut head_in = h.row(0).to_vec();
        head_in.extend_from_slice(&r_scaled);
        let head_in =
            Array2::from_shape_vec((1, head_in.len()), head_in).expect("row layout");
        let out = self.keypoint_head.infer(&head_in);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("keypoint generator produced a non-finite output"));
        }
        let frame = LatentKeypointFrame::from_flat(out.row(0).as_slice().expect("contiguous"))?;
        Ok((frame, StepState { h, c }))
    }

    /// Trainable tensors. The emotion embedding is frozen in stage 2 and
    /// deliberately excluded.
    pub(crate) fn params(&mut self) -> Vec<&mut Tensor> {
        let mut ps = self.encoder.params();
        ps.extend(self.keypoint_cell.params());
        ps.extend(self.keypoint_head.params());
        ps
    }

    pub(crate) fn clear_caches(&mut self) {
        self.encoder.clear_cache();
        self.emotion_embed.clear_cache();
        self.keypoint_cell.clear_cache();
        self.keypoint_head.clear_cache();
    }

    pub fn to_checkpoint(&mut self) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new();
        ckpt.meta.insert("kind".into(), "stage2".into());
        save_config(&mut ckpt, &self.config);
        ckpt.meta.insert("trained_epochs".into(), self.trained_epochs.to_string());
        self.audio_norm.save(&mut ckpt)?;
        // The frozen emotion table rides along so synthesis needs only the
        // two checkpoint files.
        let emo_values = self.emotion_embed.params_snapshot();
        ckpt.add_tensor(
            "emotion.table",
            vec![self.config.emotion_embed_dim, EMOTION_COUNT],
            emo_values,
        )?;
        for p in self.params() {
            let values = p.value.iter().copied().collect();
            let shape = p.shape().to_vec();
            ckpt.add_tensor(&p.name, shape, values)?;
        }
        if let Some(state) = &self.opt_state {
            state.save(&mut ckpt)?;
        }
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Stage2Model> {
        require_kind(ckpt, "stage2")?;
        let config = load_config(ckpt)?;
        let table = ckpt
            .require_tensor("emotion.table", &[config.emotion_embed_dim, EMOTION_COUNT])?
            .to_vec();
        let emotion_embed =
            Embedding::from_matrix("emotion", config.emotion_embed_dim, EMOTION_COUNT, table)?;
        let audio_norm = AudioNorm::load(ckpt)?;
        let mut model = Stage2Model::with_emotion_embed(&config, emotion_embed, audio_norm)?;
        model.trained_epochs = meta_usize(ckpt, "trained_epochs")?;
        for p in model.params() {
            load_tensor(p, ckpt)?;
        }
        model.opt_state = OptimizerSnapshot::load(ckpt)?;
        Ok(model)
    }
}

fn save_config(ckpt: &mut Checkpoint, config: &SequentializerConfig) {
    ckpt.meta.insert("encoder_hidden".into(), config.encoder_hidden.to_string());
    ckpt.meta.insert("hidden".into(), config.hidden.to_string());
    ckpt.meta.insert("emotion_embed_dim".into(), config.emotion_embed_dim.to_string());
    ckpt.meta.insert("gaze_embed_dim".into(), config.gaze_embed_dim.to_string());
    ckpt.meta.insert("window".into(), config.window.to_string());
    ckpt.meta.insert("scale_factor".into(), format!("{:?}", config.scale_factor));
    ckpt.meta.insert("y_weight".into(), format!("{:?}", config.y_weight));
    ckpt.meta.insert("seed".into(), config.seed.to_string());
}

fn load_config(ckpt: &Checkpoint) -> Result<SequentializerConfig> {
    let config = SequentializerConfig {
        encoder_hidden: meta_usize(ckpt, "encoder_hidden")?,
        hidden: meta_usize(ckpt, "hidden")?,
        emotion_embed_dim: meta_usize(ckpt, "emotion_embed_dim")?,
        gaze_embed_dim: meta_usize(ckpt, "gaze_embed_dim")?,
        window: meta_usize(ckpt, "window")?,
        scale_factor: meta_f64(ckpt, "scale_factor")?,
        y_weight: meta_f64(ckpt, "y_weight")?,
        seed: meta_usize(ckpt, "seed")? as u64,
    };
    config.validate()?;
    Ok(config)
}

fn require_kind(ckpt: &Checkpoint, kind: &str) -> Result<()> {
    match ckpt.meta.get("kind") {
        Some(k) if k == kind => Ok(()),
        Some(k) => Err(Error::data(format!("checkpoint holds a {k} model, expected {kind}"))),
        None => Err(Error::data("checkpoint is missing the model kind")),
    }
}

fn meta_usize(ckpt: &Checkpoint, key: &str) -> Result<usize> {
    let raw = ckpt
        .meta
        .get(key)
        .ok_or_else(|| Error::data(format!("checkpoint is missing meta key {key}")))?;
    raw.parse()
        .map_err(|_| Error::data(format!("checkpoint meta {key} is not an integer: {raw}")))
}

fn meta_f64(ckpt: &Checkpoint, key: &str) -> Result<f64> {
    let raw = ckpt
        .meta
        .get(key)
        .ok_or_else(|| Error::data(format!("checkpoint is missing meta key {key}")))?;
    raw.parse()
        .map_err(|_| Error::data(format!("checkpoint meta {key} is not a number: {raw}")))
}

fn load_tensor(p: &mut Tensor, ckpt: &Checkpoint) -> Result<()> {
    let values = ckpt.require_tensor(&p.name, p.shape())?;
    for (slot, v) in p.value.iter_mut().zip(values) {
        *slot = *v;
    }
    Ok(())
}

/// Zeroes every trainable value (weights and biases, including the LSTM
/// forget-gate bias). Test helper for the fixed-point examples.
#[cfg(test)]
pub(crate) fn zero_all_params(params: Vec<&mut Tensor>) {
    for p in params {
        p.value.fill(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::super::window_indices;
    use super::*;
    use crate::corpus::default_identity_frame;

    fn audio_frames(n: usize) -> Vec<AudioFeatureFrame> {
        (0..n)
            .map(|i| {
                let mut c = [0.0; AUDIO_FEATURE_DIMS];
                for (j, v) in c.iter_mut().enumerate() {
                    *v = ((i * 31 + j * 7) as f64 * 0.37).sin();
                }
                AudioFeatureFrame::new(c).expect("finite coefficients")
            })
            .collect()
    }

    fn tiny() -> SequentializerConfig {
        SequentializerConfig {
            encoder_hidden: 3,
            hidden: 5,
            emotion_embed_dim: 4,
            gaze_embed_dim: 4,
            window: 2,
            scale_factor: 128.0,
            y_weight: 2.0,
            seed: 9,
        }
    }

    #[test]
    fn zeroed_network_emits_the_bias_point_everywhere() {
        let mut model = Stage1Model::new(&tiny()).unwrap();
        zero_all_params(model.params());
        let frames = audio_frames(8);
        let identity = default_identity_frame();
        let s = model.zero_state();
        let w1: Vec<_> = window_indices(3, 8, 2).unwrap().iter().map(|&i| frames[i]).collect();
        let w2: Vec<_> = window_indices(6, 8, 2).unwrap().iter().map(|&i| frames[i]).collect();
        let (f1, c1, _) = model.landmark_step(&identity, &w1, Emotion::Happy, &s).unwrap();
        let (_, c2, _) = model.landmark_step(&identity, &w2, Emotion::Sad, &s).unwrap();
        assert_eq!(c1.points, c2.points, "zero network must ignore its inputs");
        assert!(c1.points.iter().flatten().all(|&v| v == 0.0), "zero head bias means zero output");

        let (_, probs, _) = model.gaze_step(&GazeLabel::center(), &w1, Emotion::Happy, &s).unwrap();
        let uniform = 1.0 / JOINT_CLASSES as f64;
        assert!(
            probs.iter().all(|p| (p - uniform).abs() < 1e-12),
            "zero gaze logits must give the uniform distribution"
        );
        let label = crate::gaze::classify_gaze(&probs).unwrap();
        assert_eq!((label.left(), label.right()), (0, 0), "uniform ties resolve to zone (0, 0)");

        let (f_r, pose, _) = model.pose_step(&HeadPose::identity(), &w1, Emotion::Happy, &s).unwrap();
        assert_eq!(pose, HeadPose::identity());
        let logits = model
            .classify_emotion(&CueFeatures { f_landmark: f1, f_pose: f_r.clone(), f_gaze: f_r })
            .unwrap();
        assert_eq!(logits.label(), 0, "all-equal logits tie-break to label 0");
    }

    #[test]
    fn same_seed_builds_bitwise_identical_models() {
        let mut a = Stage1Model::new(&tiny()).unwrap();
        let mut b = Stage1Model::new(&tiny()).unwrap();
        for (pa, pb) in a.params().iter().zip(b.params().iter()) {
            assert_eq!(pa.name, pb.name);
            assert_eq!(pa.value, pb.value, "init differs for {}", pa.name);
        }
    }

    #[test]
    fn stage1_checkpoint_round_trips_bitwise() {
        let mut model = Stage1Model::new(&tiny()).unwrap();
        model.trained_epochs = 3;
        model.set_audio_norm(AudioNorm {
            mean: (0..AUDIO_FEATURE_DIMS).map(|i| i as f64 * 0.1).collect(),
            std: (0..AUDIO_FEATURE_DIMS).map(|i| 1.0 + i as f64 * 0.01).collect(),
        });
        let ckpt = model.to_checkpoint().unwrap();
        let text = ckpt.serialize();
        let back = Checkpoint::deserialize(&text).unwrap();
        let mut restored = Stage1Model::from_checkpoint(&back).unwrap();
        assert_eq!(restored.trained_epochs, 3);
        assert_eq!(restored.audio_norm.mean, model.audio_norm.mean);
        for (pa, pb) in model.params().iter().zip(restored.params().iter()) {
            assert_eq!(pa.value, pb.value, "weights differ for {}", pa.name);
        }
        let frames = audio_frames(6);
        let w: Vec<_> = window_indices(2, 6, 2).unwrap().iter().map(|&i| frames[i]).collect();
        let s = model.zero_state();
        let identity = default_identity_frame();
        let (_, c_orig, _) = model.landmark_step(&identity, &w, Emotion::Angry, &s).unwrap();
        let (_, c_back, _) = restored.landmark_step(&identity, &w, Emotion::Angry, &s).unwrap();
        assert_eq!(c_orig.points, c_back.points, "restored model must step identically");
    }

    #[test]
    fn stage2_checkpoint_round_trips_and_carries_the_frozen_embedding() {
        let stage1 = Stage1Model::new(&tiny()).unwrap();
        let mut model = Stage2Model::new(&tiny(), &stage1).unwrap();
        model.trained_epochs = 2;
        let ckpt = model.to_checkpoint().unwrap();
        let mut restored = Stage2Model::from_checkpoint(&ckpt).unwrap();
        assert_eq!(restored.trained_epochs, 2);
        assert_eq!(
            restored.emotion_embed.params_snapshot(),
            model.emotion_embed.params_snapshot(),
            "frozen emotion table must survive the round trip"
        );
        for (pa, pb) in model.params().iter().zip(restored.params().iter()) {
            assert_eq!(pa.value, pb.value, "weights differ for {}", pa.name);
        }
        let wrong = Stage1Model::new(&tiny()).unwrap().to_checkpoint().unwrap();
        let err = Stage2Model::from_checkpoint(&wrong).err().expect("kind mismatch must fail");
        assert!(err.to_string().contains("stage1"), "kind mismatch should name the found kind");
    }

    #[test]
    fn classify_emotion_rejects_misshapen_cues() {
        let model = Stage1Model::new(&tiny()).unwrap();
        let good = vec![0.0; tiny().hidden];
        let short = vec![0.0; 2];
        let err = model
            .classify_emotion(&CueFeatures {
                f_landmark: good.clone(),
                f_pose: short,
                f_gaze: good,
            })
            .unwrap_err();
        assert!(err.to_string().contains("usage error"), "got: {err}");
        assert!(err.to_string().contains("pose"), "should name the offending cue: {err}");
    }

    #[test]
    fn keypoint_step_consumes_recomposed_landmarks() {
        let stage1 = Stage1Model::new(&tiny()).unwrap();
        let model = Stage2Model::new(&tiny(), &stage1).unwrap();
        let identity = default_identity_frame();
        let pose = HeadPose::new(0.1, -0.05, 0.02, [0.5, -0.3, 0.1]).unwrap();
        let relocated =
            crate::geometry::relocate(&identity, &pose, &GazeLabel::center(), 128.0).unwrap();
        let frames = audio_frames(6);
        let w: Vec<_> = window_indices(1, 6, 2).unwrap().iter().map(|&i| frames[i]).collect();
        let s = model.zero_state();
        let (k1, s1) =
            model.keypoint_step(&LatentKeypointFrame::zeros(), &relocated, &w, Emotion::Fear, &s).unwrap();
        let (k2, _) = model.keypoint_step(&k1, &relocated, &w, Emotion::Fear, &s1).unwrap();
        assert!(k1.points.iter().flatten().all(|v| v.is_finite()));
        assert_ne!(k1, k2, "carrying state and output forward should move the prediction");
    }
}
