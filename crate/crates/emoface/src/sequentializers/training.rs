//! Teacher-forced batched training and held-out evaluation for both stages.
//!
//! A sequence of L frames yields L - 1 training steps: step n consumes
//! ground-truth frame n plus the audio window centered on frame n + 1 and
//! predicts frame n + 1. Every sequence in a training call must have the
//! same length so steps can be batched; the per-epoch visit order is
//! shuffled with a stream derived statelessly from the master seed and the
//! epoch number.

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::audiofeat::AUDIO_FEATURE_DIMS;
use crate::corpus::SequenceRecord;
use crate::error::{Error, Result};
use crate::geometry::{relocate, LANDMARK_COUNT};
use crate::neural::{
    mean_absolute_error, mean_squared_error, softmax_cross_entropy, weighted_l1_with_grad, Adam,
};

use super::models::{
    AudioNorm, OptimizerSnapshot, Stage1Model, Stage2Model, KEYPOINT_DIMS, LANDMARK_DIMS,
    POSE_DIMS,
};

/// The base learning rate is halved once per this many epochs (counted from
/// the model's global epoch index, so resumed runs stay on schedule).
pub const LR_HALVING_EPOCHS: usize = 20;

/// Optimization knobs, separate from the model-shape config.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Base Adam step size; decays by halving every `LR_HALVING_EPOCHS`.
    pub learning_rate: f64,
    /// Master seed for the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, batch_size: 2, learning_rate: 5e-3, seed: 100 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("training needs at least one epoch"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// One stage-1 loss-curve entry. The total is the sum of the four
/// components; that identity is a logged invariant, not a rounding accident.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub landmark: f64,
    pub pose: f64,
    pub gaze: f64,
    pub classifier: f64,
    pub total: f64,
}

/// One stage-2 loss-curve entry; the single component is the keypoint MSE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage2EpochLoss {
    pub epoch: usize,
    pub keypoint: f64,
    pub total: f64,
}

/// Held-out teacher-forced quality of a stage-1 model.
#[derive(Clone, Copy, Debug)]
pub struct Stage1Evaluation {
    /// Mean per-point Euclidean distance between predicted and ground-truth
    /// canonical landmarks.
    pub landmark_error: f64,
    /// Mean absolute error over the six pose components.
    pub pose_error: f64,
    /// Fraction of steps whose argmax joint gaze class matches the target.
    pub gaze_accuracy: f64,
    /// Fraction of steps whose argmax emotion matches the sequence label.
    pub emotion_accuracy: f64,
}

/// Per-component gradient scales for the shared batched pass. Training uses
/// all ones; the gradient-check harnesses isolate one component at a time.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LossWeights {
    pub landmark: f64,
    pub pose: f64,
    pub gaze: f64,
    pub classifier: f64,
}

impl LossWeights {
    pub fn ones() -> LossWeights {
        LossWeights { landmark: 1.0, pose: 1.0, gaze: 1.0, classifier: 1.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Stage1BatchLoss {
    pub landmark: f64,
    pub pose: f64,
    pub gaze: f64,
    pub classifier: f64,
}

/// A sequence flattened into the matrix layout the batched passes consume.
pub(crate) struct Stage1Sequence {
    pub audio: Array2<f64>,
    pub landmarks: Array2<f64>,
    pub pose: Array2<f64>,
    pub gaze: Vec<usize>,
    pub emotion: usize,
}

pub(crate) struct Stage2Sequence {
    pub audio: Array2<f64>,
    /// Recomposed landmarks divided by the scale factor, one row per frame.
    pub r_scaled: Array2<f64>,
    pub keypoints: Array2<f64>,
    pub emotion: usize,
}

/// Rejects corpora the batched teacher-forcing pass cannot consume.
fn validate_alignment(records: &[&SequenceRecord], need_keypoints: bool) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::data("training corpus is empty"));
    }
    let len = records[0].frames.len();
    for r in records {
        r.validate()?;
        if r.frames.len() != len {
            return Err(Error::data(format!(
                "misaligned corpus: sequence {} (seed {}) has {} frames, expected {len}",
                r.identity,
                r.seed,
                r.frames.len()
            )));
        }
        if need_keypoints && r.frames.iter().any(|f| f.keypoints.is_none()) {
            return Err(Error::data(format!(
                "sequence {} (seed {}) has no latent keypoints; regenerate the corpus with keypoints",
                r.identity, r.seed
            )));
        }
    }
    if len < 2 {
        return Err(Error::data(format!(
            "teacher forcing needs at least 2 frames per sequence, got {len}"
        )));
    }
    Ok(len)
}

/// Per-coefficient mean and std of the raw MFCC features over a corpus.
/// Near-constant coefficients fall back to unit scale.
pub(crate) fn fit_audio_norm(records: &[&SequenceRecord]) -> AudioNorm {
    let mut mean = vec![0.0; AUDIO_FEATURE_DIMS];
    let mut count = 0.0;
    for r in records {
        for f in &r.frames {
            for (m, c) in mean.iter_mut().zip(f.audio.coefficients.iter()) {
                *m += c;
            }
            count += 1.0;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut var = vec![0.0; AUDIO_FEATURE_DIMS];
    for r in records {
        for f in &r.frames {
            for (v, (c, m)) in var.iter_mut().zip(f.audio.coefficients.iter().zip(mean.iter())) {
                *v += (c - m) * (c - m);
            }
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let s = (v / count).sqrt();
            if s < 1e-8 {
                1.0
            } else {
                s
            }
        })
        .collect();
    AudioNorm { mean, std }
}

pub(crate) fn prepare_stage1(
    model: &Stage1Model,
    records: &[&SequenceRecord],
) -> Result<Vec<Stage1Sequence>> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let len = r.frames.len();
        let mut audio = Array2::zeros((len, AUDIO_FEATURE_DIMS));
        let mut landmarks = Array2::zeros((len, LANDMARK_DIMS));
        let mut pose = Array2::zeros((len, POSE_DIMS));
        let mut gaze = Vec::with_capacity(len);
        for (n, f) in r.frames.iter().enumerate() {
            audio.row_mut(n).assign(&ndarray::ArrayView1::from(&model.normalize_frame(&f.audio)[..]));
            for (k, p) in f.landmarks.iter().enumerate() {
                for d in 0..3 {
                    landmarks[[n, 3 * k + d]] = p[d];
                }
            }
            let rp = [f.pose.yaw, f.pose.pitch, f.pose.roll];
            for d in 0..3 {
                pose[[n, d]] = rp[d];
                pose[[n, 3 + d]] = f.pose.translation[d];
            }
            gaze.push(f.gaze.joint() as usize);
        }
        out.push(Stage1Sequence { audio, landmarks, pose, gaze, emotion: r.emotion.index() });
    }
    Ok(out)
}

pub(crate) fn prepare_stage2(
    model: &Stage2Model,
    records: &[&SequenceRecord],
) -> Result<Vec<Stage2Sequence>> {
    let scale = model.config.scale_factor;
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let len = r.frames.len();
        let mut audio = Array2::zeros((len, AUDIO_FEATURE_DIMS));
        let mut r_scaled = Array2::zeros((len, LANDMARK_DIMS));
        let mut keypoints = Array2::zeros((len, KEYPOINT_DIMS));
        for (n, f) in r.frames.iter().enumerate() {
            audio.row_mut(n).assign(&ndarray::ArrayView1::from(&model.normalize_frame(&f.audio)[..]));
            let norm = r.landmark_frame(n)?;
            let relocated = relocate(&norm, &f.pose, &f.gaze, scale)?;
            let flat = model.scale_relocated(&relocated)?;
            r_scaled.row_mut(n).assign(&ndarray::ArrayView1::from(&flat[..]));
            let kps = f.keypoints.as_ref().ok_or_else(|| {
                Error::data(format!("sequence {} frame {n} has no latent keypoints", r.identity))
            })?;
            for (k, p) in kps.iter().enumerate() {
                for d in 0..3 {
                    keypoints[[n, 3 * k + d]] = p[d];
                }
            }
        }
        out.push(Stage2Sequence { audio, r_scaled, keypoints, emotion: r.emotion.index() });
    }
    Ok(out)
}

/// Stacks the clamped audio windows for every (step, batch) pair. Slot j of
/// the result holds, at row n * B + b, sequence b's audio at the clamped
/// index (n + 1) + j - w: the window is centered on the TARGET frame.
fn window_stacks(audio: &[&Array2<f64>], steps: usize, w: usize) -> Vec<Array2<f64>> {
    let b = audio.len();
    let len = audio[0].nrows();
    let width = audio[0].ncols();
    let mut slots = Vec::with_capacity(2 * w + 1);
    for j in 0..(2 * w + 1) {
        let mut m = Array2::zeros((steps * b, width));
        for n in 0..steps {
            let idx = (n as isize + 1 + j as isize - w as isize).clamp(0, len as isize - 1) as usize;
            for (bi, a) in audio.iter().enumerate() {
                m.row_mut(n * b + bi).assign(&a.row(idx));
            }
        }
        slots.push(m);
    }
    slots
}

fn hstack(parts: &[&Array2<f64>]) -> Array2<f64> {
    let rows = parts[0].nrows();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Array2::zeros((rows, cols));
    let mut c0 = 0;
    for p in parts {
        out.slice_mut(s![.., c0..c0 + p.ncols()]).assign(p);
        c0 += p.ncols();
    }
    out
}

/// Rows n * B .. (n + 1) * B of a step-major stack.
fn step_chunks(stack: &Array2<f64>, steps: usize, b: usize) -> Vec<Array2<f64>> {
    (0..steps).map(|n| stack.slice(s![n * b..(n + 1) * b, ..]).to_owned()).collect()
}

fn stack_steps(chunks: &[Array2<f64>]) -> Array2<f64> {
    let b = chunks[0].nrows();
    let cols = chunks[0].ncols();
    let mut out = Array2::zeros((chunks.len() * b, cols));
    for (n, ch) in chunks.iter().enumerate() {
        out.slice_mut(s![n * b..(n + 1) * b, ..]).assign(ch);
    }
    out
}

/// One forward + backward pass over a batch of aligned sequences. Leaves
/// gradients accumulated on the model; the caller owns zeroing and the
/// optimizer step. Loss values are returned unweighted.
pub(crate) fn stage1_batch(
    model: &mut Stage1Model,
    batch: &[&Stage1Sequence],
    weights: &LossWeights,
) -> Result<Stage1BatchLoss> {
    if batch.is_empty() {
        return Err(Error::usage("stage-1 batch is empty"));
    }
    let b = batch.len();
    let len = batch[0].audio.nrows();
    if batch.iter().any(|s| s.audio.nrows() != len) || len < 2 {
        return Err(Error::usage("stage-1 batch sequences must share a length of at least 2"));
    }
    let steps = len - 1;
    let w = model.config.window;
    let hidden = model.config.hidden;
    let ctx_dim = model.config.context_dim();
    let emo_dim = model.config.emotion_embed_dim;
    let gaze_dim = model.config.gaze_embed_dim;

    // Forward, in a fixed order; the backward pass unwinds it exactly in
    // reverse because every layer caches on a stack.
    let labels: Vec<usize> = batch.iter().map(|sq| sq.emotion).collect();
    let e_rows = model.emotion_embed.forward(&labels)?;

    let prev_gaze: Vec<usize> =
        (0..steps).flat_map(|n| batch.iter().map(move |sq| sq.gaze[n])).collect();
    let g_rows = model.gaze_embed.forward(&prev_gaze)?;

    let audio: Vec<&Array2<f64>> = batch.iter().map(|sq| &sq.audio).collect();
    let slots = window_stacks(&audio, steps, w);
    let ctx = model.encoder.forward_window(&slots)?;

    let build_xs = |prev_cols: &dyn Fn(usize, usize) -> Vec<f64>, prev_dim: usize| {
        let mut xs = Vec::with_capacity(steps);
        for n in 0..steps {
            let mut m = Array2::zeros((b, prev_dim + ctx_dim + emo_dim));
            for bi in 0..b {
                let prev = prev_cols(n, bi);
                m.row_mut(bi)
                    .slice_mut(s![0..prev_dim])
                    .assign(&ndarray::ArrayView1::from(&prev[..]));
                m.row_mut(bi)
                    .slice_mut(s![prev_dim..prev_dim + ctx_dim])
                    .assign(&ctx.row(n * b + bi));
                m.row_mut(bi)
                    .slice_mut(s![prev_dim + ctx_dim..])
                    .assign(&e_rows.row(bi));
            }
            xs.push(m);
        }
        xs
    };
    let xs_l = build_xs(&|n, bi| batch[bi].landmarks.row(n).to_vec(), LANDMARK_DIMS);
    let xs_r = build_xs(&|n, bi| batch[bi].pose.row(n).to_vec(), POSE_DIMS);
    let xs_g = build_xs(&|n, bi| g_rows.row(n * b + bi).to_vec(), gaze_dim);

    let hs_l = model.landmark_cell.forward_sequence(&xs_l)?;
    let hs_r = model.pose_cell.forward_sequence(&xs_r)?;
    let hs_g = model.gaze_cell.forward_sequence(&xs_g)?;
    let hl = stack_steps(&hs_l);
    let hr = stack_steps(&hs_r);
    let hg = stack_steps(&hs_g);

    let pred_l = model.landmark_head.forward(&hl);
    let pred_r = model.pose_head.forward(&hr);
    let gaze_logits = model.gaze_head.forward(&hg);

    let feats = hstack(&[&hl, &hr, &hg]);
    let class_logits = model.classifier.forward(&feats);

    // Targets: frame n + 1 of each stream, in the same row order.
    let mut tgt_l = Array2::zeros((steps * b, LANDMARK_DIMS));
    let mut tgt_r = Array2::zeros((steps * b, POSE_DIMS));
    let mut tgt_g = Vec::with_capacity(steps * b);
    let mut tgt_e = Vec::with_capacity(steps * b);
    for n in 0..steps {
        for (bi, sq) in batch.iter().enumerate() {
            tgt_l.row_mut(n * b + bi).assign(&sq.landmarks.row(n + 1));
            tgt_r.row_mut(n * b + bi).assign(&sq.pose.row(n + 1));
            tgt_g.push(sq.gaze[n + 1]);
            tgt_e.push(sq.emotion);
        }
    }

    let (loss_l, mut d_l) = weighted_l1_with_grad(&pred_l, &tgt_l, model.config.y_weight)?;
    let (loss_r, mut d_r) = mean_absolute_error(&pred_r, &tgt_r)?;
    let (loss_g, _, mut d_g) = softmax_cross_entropy(&gaze_logits, &tgt_g)?;
    let (loss_c, _, mut d_c) = softmax_cross_entropy(&class_logits, &tgt_e)?;
    d_l *= weights.landmark;
    d_r *= weights.pose;
    d_g *= weights.gaze;
    d_c *= weights.classifier;

    // Backward: exact reverse of the forward order. Zero-weighted branches
    // still run so every cache entry is popped.
    let d_feats = model.classifier.backward(&d_c);
    let mut d_hl = model.landmark_head.backward(&d_l);
    let mut d_hr = model.pose_head.backward(&d_r);
    let mut d_hg = model.gaze_head.backward(&d_g);
    d_hl += &d_feats.slice(s![.., 0..hidden]);
    d_hr += &d_feats.slice(s![.., hidden..2 * hidden]);
    d_hg += &d_feats.slice(s![.., 2 * hidden..]);

    let dxs_g = model.gaze_cell.backward_sequence(&step_chunks(&d_hg, steps, b))?;
    let dxs_r = model.pose_cell.backward_sequence(&step_chunks(&d_hr, steps, b))?;
    let dxs_l = model.landmark_cell.backward_sequence(&step_chunks(&d_hl, steps, b))?;

    // Route the input gradients: previous-frame slots are ground truth and
    // are dropped; context flows to the encoder, embeddings to their tables.
    let mut d_ctx = Array2::zeros((steps * b, ctx_dim));
    let mut d_emo = Array2::zeros((b, emo_dim));
    let mut d_gz = Array2::zeros((steps * b, gaze_dim));
    for (prev_dim, dxs) in
        [(LANDMARK_DIMS, &dxs_l), (POSE_DIMS, &dxs_r), (gaze_dim, &dxs_g)]
    {
        for (n, dx) in dxs.iter().enumerate() {
            let mut ctx_rows = d_ctx.slice_mut(s![n * b..(n + 1) * b, ..]);
            ctx_rows += &dx.slice(s![.., prev_dim..prev_dim + ctx_dim]);
            d_emo += &dx.slice(s![.., prev_dim + ctx_dim..]);
        }
    }
    for (n, dx) in dxs_g.iter().enumerate() {
        let mut gz_rows = d_gz.slice_mut(s![n * b..(n + 1) * b, ..]);
        gz_rows += &dx.slice(s![.., 0..gaze_dim]);
    }

    model.encoder.backward_window(&d_ctx, 2 * w + 1)?;
    model.gaze_embed.backward(&d_gz);
    model.emotion_embed.backward(&d_emo);

    Ok(Stage1BatchLoss { landmark: loss_l, pose: loss_r, gaze: loss_g, classifier: loss_c })
}

/// One forward + backward pass for the keypoint generator. The emotion
/// embedding is frozen: it enters through the no-cache inference path and
/// its slice of the input gradient is dropped.
pub(crate) fn stage2_batch(
    model: &mut Stage2Model,
    batch: &[&Stage2Sequence],
    weight: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::usage("stage-2 batch is empty"));
    }
    let b = batch.len();
    let len = batch[0].audio.nrows();
    if batch.iter().any(|s| s.audio.nrows() != len) || len < 2 {
        return Err(Error::usage("stage-2 batch sequences must share a length of at least 2"));
    }
    let steps = len - 1;
    let w = model.config.window;
    let hidden = model.config.hidden;
    let ctx_dim = model.config.context_dim();
    let emo_dim = model.config.emotion_embed_dim;

    let labels: Vec<usize> = batch.iter().map(|sq| sq.emotion).collect();
    let e_rows = model.emotion_embed.infer(&labels)?;

    let audio: Vec<&Array2<f64>> = batch.iter().map(|sq| &sq.audio).collect();
    let slots = window_stacks(&audio, steps, w);
    let ctx = model.encoder.forward_window(&slots)?;

    // The recomposed landmarks of the TARGET frame, reused by both the cell
    // input and the head's skip connection.
    let mut r_stack = Array2::zeros((steps * b, LANDMARK_DIMS));
    for n in 0..steps {
        for (bi, sq) in batch.iter().enumerate() {
            r_stack.row_mut(n * b + bi).assign(&sq.r_scaled.row(n + 1));
        }
    }

    let in_dim = KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim + emo_dim;
    let mut xs = Vec::with_capacity(steps);
    for n in 0..steps {
        let mut m = Array2::zeros((b, in_dim));
        for (bi, sq) in batch.iter().enumerate() {
            let mut row = m.row_mut(bi);
            row.slice_mut(s![0..KEYPOINT_DIMS]).assign(&sq.keypoints.row(n));
            row.slice_mut(s![KEYPOINT_DIMS..KEYPOINT_DIMS + LANDMARK_DIMS])
                .assign(&r_stack.row(n * b + bi));
            row.slice_mut(s![
                KEYPOINT_DIMS + LANDMARK_DIMS..KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim
            ])
            .assign(&ctx.row(n * b + bi));
            row.slice_mut(s![KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim..])
                .assign(&e_rows.row(bi));
        }
        xs.push(m);
    }

    let hs = model.keypoint_cell.forward_sequence(&xs)?;
    let h_stack = stack_steps(&hs);
    let head_in = hstack(&[&h_stack, &r_stack]);
    let pred = model.keypoint_head.forward(&head_in);

    let mut tgt = Array2::zeros((steps * b, KEYPOINT_DIMS));
    for n in 0..steps {
        for (bi, sq) in batch.iter().enumerate() {
            tgt.row_mut(n * b + bi).assign(&sq.keypoints.row(n + 1));
        }
    }

    let (loss, mut d_pred) = mean_squared_error(&pred, &tgt)?;
    d_pred *= weight;

    let d_head_in = model.keypoint_head.backward(&d_pred);
    let d_h = d_head_in.slice(s![.., 0..hidden]).to_owned();
    // The skip slice of the head gradient lands on input data, not
    // parameters, and is dropped.
    let dxs = model.keypoint_cell.backward_sequence(&step_chunks(&d_h, steps, b))?;
    let mut d_ctx = Array2::zeros((steps * b, ctx_dim));
    for (n, dx) in dxs.iter().enumerate() {
        let mut ctx_rows = d_ctx.slice_mut(s![n * b..(n + 1) * b, ..]);
        ctx_rows += &dx.slice(s![
            ..,
            KEYPOINT_DIMS + LANDMARK_DIMS..KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim
        ]);
    }
    model.encoder.backward_window(&d_ctx, 2 * w + 1)?;

    Ok(loss)
}

fn shuffled_indices(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Imports the model's stored optimizer moments into a fresh Adam instance,
/// so a training call on a checkpointed model continues the uninterrupted
/// schedule exactly. Fresh models start with empty moments.
fn restore_optimizer<'a>(
    adam: &mut Adam,
    state: Option<&OptimizerSnapshot>,
    params: &[&'a crate::neural::Tensor],
) -> Result<()> {
    let Some(state) = state else {
        return Ok(());
    };
    adam.import_state(state.step_count, params, &mut |key| {
        state
            .tensors
            .iter()
            .find(|(name, _, _)| name == key)
            .map(|(_, shape, values)| (shape.clone(), values.clone()))
    })
}

fn export_optimizer(adam: &Adam, names: &[String]) -> Result<Option<OptimizerSnapshot>> {
    Ok(Some(OptimizerSnapshot {
        step_count: adam.step_count(),
        tensors: adam.export_state(names)?,
    }))
}

/// Trains the three stage-1 generators and the classifier jointly, teacher
/// forced, and returns the per-epoch loss curve. A fresh model first fits
/// the audio normalization on `records`; a previously trained model keeps
/// its normalization and resumes its optimizer state and epoch numbering,
/// so splitting one schedule across two calls (or across a checkpoint
/// round-trip) reproduces the uninterrupted curve.
pub fn train_stage1(
    model: &mut Stage1Model,
    records: &[&SequenceRecord],
    config: &TrainConfig,
) -> Result<Vec<EpochLoss>> {
    config.validate()?;
    validate_alignment(records, false)?;
    let start_epoch = model.trained_epochs;
    if start_epoch == 0 {
        model.set_audio_norm(fit_audio_norm(records));
    }
    let seqs = prepare_stage1(model, records)?;
    let mut adam = Adam::new(config.learning_rate);
    let state = model.opt_state.take();
    {
        let ps = model.params();
        let refs: Vec<&crate::neural::Tensor> = ps.iter().map(|p| &**p).collect();
        restore_optimizer(&mut adam, state.as_ref(), &refs)?;
    }
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in (start_epoch..).take(config.epochs) {
        adam.lr = config.learning_rate * 0.5f64.powi((epoch / LR_HALVING_EPOCHS) as i32);
        let order = shuffled_indices(seqs.len(), config.seed, epoch);
        let mut sums = [0.0; 4];
        let mut weight_total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            for p in model.params() {
                p.zero_grad();
            }
            model.clear_caches();
            let batch: Vec<&Stage1Sequence> = chunk.iter().map(|&i| &seqs[i]).collect();
            let losses = stage1_batch(model, &batch, &LossWeights::ones())?;
            let mut ps = model.params();
            adam.step(&mut ps)?;
            let bw = chunk.len() as f64;
            sums[0] += losses.landmark * bw;
            sums[1] += losses.pose * bw;
            sums[2] += losses.gaze * bw;
            sums[3] += losses.classifier * bw;
            weight_total += bw;
        }
        let [landmark, pose, gaze, classifier] = sums.map(|s| s / weight_total);
        curve.push(EpochLoss {
            epoch,
            landmark,
            pose,
            gaze,
            classifier,
            total: landmark + pose + gaze + classifier,
        });
    }
    model.trained_epochs += config.epochs;
    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();
    model.opt_state = export_optimizer(&adam, &names)?;
    Ok(curve)
}

/// Trains the stage-2 keypoint generator against the corpus keypoints, with
/// recomposed landmarks derived from ground-truth stage-1 cues. Resumes the
/// optimizer state and epoch numbering like `train_stage1`.
pub fn train_stage2(
    model: &mut Stage2Model,
    records: &[&SequenceRecord],
    config: &TrainConfig,
) -> Result<Vec<Stage2EpochLoss>> {
    config.validate()?;
    validate_alignment(records, true)?;
    let start_epoch = model.trained_epochs;
    let seqs = prepare_stage2(model, records)?;
    let mut adam = Adam::new(config.learning_rate);
    let state = model.opt_state.take();
    {
        let ps = model.params();
        let refs: Vec<&crate::neural::Tensor> = ps.iter().map(|p| &**p).collect();
        restore_optimizer(&mut adam, state.as_ref(), &refs)?;
    }
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in (start_epoch..).take(config.epochs) {
        adam.lr = config.learning_rate * 0.5f64.powi((epoch / LR_HALVING_EPOCHS) as i32);
        let order = shuffled_indices(seqs.len(), config.seed, epoch);
        let mut sum = 0.0;
        let mut weight_total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            for p in model.params() {
                p.zero_grad();
            }
            model.clear_caches();
            let batch: Vec<&Stage2Sequence> = chunk.iter().map(|&i| &seqs[i]).collect();
            let loss = stage2_batch(model, &batch, 1.0)?;
            let mut ps = model.params();
            adam.step(&mut ps)?;
            sum += loss * chunk.len() as f64;
            weight_total += chunk.len() as f64;
        }
        let keypoint = sum / weight_total;
        curve.push(Stage2EpochLoss { epoch, keypoint, total: keypoint });
    }
    model.trained_epochs += config.epochs;
    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();
    model.opt_state = export_optimizer(&adam, &names)?;
    Ok(curve)
}

/// Teacher-forced held-out metrics, computed in one batched inference pass.
pub fn evaluate_stage1(
    model: &Stage1Model,
    records: &[&SequenceRecord],
) -> Result<Stage1Evaluation> {
    validate_alignment(records, false)?;
    let seqs = prepare_stage1(model, records)?;
    let b = seqs.len();
    let len = seqs[0].audio.nrows();
    let steps = len - 1;
    let ctx_dim = model.config.context_dim();
    let emo_dim = model.config.emotion_embed_dim;
    let gaze_dim = model.config.gaze_embed_dim;

    let labels: Vec<usize> = seqs.iter().map(|sq| sq.emotion).collect();
    let e_rows = model.emotion_embed.infer(&labels)?;
    let prev_gaze: Vec<usize> =
        (0..steps).flat_map(|n| seqs.iter().map(move |sq| sq.gaze[n])).collect();
    let g_rows = model.gaze_embed.infer(&prev_gaze)?;
    let audio: Vec<&Array2<f64>> = seqs.iter().map(|sq| &sq.audio).collect();
    let slots = window_stacks(&audio, steps, model.config.window);
    let ctx = model.encoder.infer_window(&slots)?;

    let build_xs = |prev_cols: &dyn Fn(usize, usize) -> Vec<f64>, prev_dim: usize| {
        let mut xs = Vec::with_capacity(steps);
        for n in 0..steps {
            let mut m = Array2::zeros((b, prev_dim + ctx_dim + emo_dim));
            for bi in 0..b {
                let prev = prev_cols(n, bi);
                m.row_mut(bi)
                    .slice_mut(s![0..prev_dim])
                    .assign(&ndarray::ArrayView1::from(&prev[..]));
                m.row_mut(bi)
                    .slice_mut(s![prev_dim..prev_dim + ctx_dim])
                    .assign(&ctx.row(n * b + bi));
                m.row_mut(bi).slice_mut(s![prev_dim + ctx_dim..]).assign(&e_rows.row(bi));
            }
            xs.push(m);
        }
        xs
    };
    let xs_l = build_xs(&|n, bi| seqs[bi].landmarks.row(n).to_vec(), LANDMARK_DIMS);
    let xs_r = build_xs(&|n, bi| seqs[bi].pose.row(n).to_vec(), POSE_DIMS);
    let xs_g = build_xs(&|n, bi| g_rows.row(n * b + bi).to_vec(), gaze_dim);

    let hl = stack_steps(&model.landmark_cell.infer_sequence(&xs_l)?);
    let hr = stack_steps(&model.pose_cell.infer_sequence(&xs_r)?);
    let hg = stack_steps(&model.gaze_cell.infer_sequence(&xs_g)?);
    let pred_l = model.landmark_head.infer(&hl);
    let pred_r = model.pose_head.infer(&hr);
    let gaze_logits = model.gaze_head.infer(&hg);
    let class_logits = model.classifier.infer(&hstack(&[&hl, &hr, &hg]));

    let mut lm_sum = 0.0;
    let mut pose_sum = 0.0;
    let mut gaze_hits = 0usize;
    let mut emo_hits = 0usize;
    let rows = steps * b;
    for n in 0..steps {
        for (bi, sq) in seqs.iter().enumerate() {
            let row = n * b + bi;
            let pl = pred_l.row(row);
            let tl = sq.landmarks.row(n + 1);
            let mut per_frame = 0.0;
            for k in 0..LANDMARK_COUNT {
                let dx = pl[3 * k] - tl[3 * k];
                let dy = pl[3 * k + 1] - tl[3 * k + 1];
                let dz = pl[3 * k + 2] - tl[3 * k + 2];
                per_frame += (dx * dx + dy * dy + dz * dz).sqrt();
            }
            lm_sum += per_frame / LANDMARK_COUNT as f64;
            let pr = pred_r.row(row);
            let tr = sq.pose.row(n + 1);
            pose_sum += (0..POSE_DIMS).map(|d| (pr[d] - tr[d]).abs()).sum::<f64>()
                / POSE_DIMS as f64;
            if argmax(gaze_logits.row(row).as_slice().expect("contiguous")) == sq.gaze[n + 1] {
                gaze_hits += 1;
            }
            if argmax(class_logits.row(row).as_slice().expect("contiguous")) == sq.emotion {
                emo_hits += 1;
            }
        }
    }
    Ok(Stage1Evaluation {
        landmark_error: lm_sum / rows as f64,
        pose_error: pose_sum / rows as f64,
        gaze_accuracy: gaze_hits as f64 / rows as f64,
        emotion_accuracy: emo_hits as f64 / rows as f64,
    })
}

/// Teacher-forced held-out mean per-point keypoint error against the stored
/// (noisy) targets.
pub fn evaluate_stage2(model: &Stage2Model, records: &[&SequenceRecord]) -> Result<f64> {
    validate_alignment(records, true)?;
    let seqs = prepare_stage2(model, records)?;
    let b = seqs.len();
    let len = seqs[0].audio.nrows();
    let steps = len - 1;
    let ctx_dim = model.config.context_dim();
    let emo_dim = model.config.emotion_embed_dim;

    let labels: Vec<usize> = seqs.iter().map(|sq| sq.emotion).collect();
    let e_rows = model.emotion_embed.infer(&labels)?;
    let audio: Vec<&Array2<f64>> = seqs.iter().map(|sq| &sq.audio).collect();
    let slots = window_stacks(&audio, steps, model.config.window);
    let ctx = model.encoder.infer_window(&slots)?;

    let mut r_stack = Array2::zeros((steps * b, LANDMARK_DIMS));
    for n in 0..steps {
        for (bi, sq) in seqs.iter().enumerate() {
            r_stack.row_mut(n * b + bi).assign(&sq.r_scaled.row(n + 1));
        }
    }
    let in_dim = KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim + emo_dim;
    let mut xs = Vec::with_capacity(steps);
    for n in 0..steps {
        let mut m = Array2::zeros((b, in_dim));
        for (bi, sq) in seqs.iter().enumerate() {
            let mut row = m.row_mut(bi);
            row.slice_mut(s![0..KEYPOINT_DIMS]).assign(&sq.keypoints.row(n));
            row.slice_mut(s![KEYPOINT_DIMS..KEYPOINT_DIMS + LANDMARK_DIMS])
                .assign(&r_stack.row(n * b + bi));
            row.slice_mut(s![
                KEYPOINT_DIMS + LANDMARK_DIMS..KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim
            ])
            .assign(&ctx.row(n * b + bi));
            row.slice_mut(s![KEYPOINT_DIMS + LANDMARK_DIMS + ctx_dim..]).assign(&e_rows.row(bi));
        }
        xs.push(m);
    }
    let h_stack = stack_steps(&model.keypoint_cell.infer_sequence(&xs)?);
    let pred = model.keypoint_head.infer(&hstack(&[&h_stack, &r_stack]));

    let mut sum = 0.0;
    for n in 0..steps {
        for (bi, sq) in seqs.iter().enumerate() {
            let row = n * b + bi;
            let p = pred.row(row);
            let t = sq.keypoints.row(n + 1);
            let mut per_frame = 0.0;
            for k in 0..KEYPOINT_DIMS / 3 {
                let dx = p[3 * k] - t[3 * k];
                let dy = p[3 * k + 1] - t[3 * k + 1];
                let dz = p[3 * k + 2] - t[3 * k + 2];
                per_frame += (dx * dx + dy * dy + dz * dz).sqrt();
            }
            sum += per_frame / (KEYPOINT_DIMS / 3) as f64;
        }
    }
    Ok(sum / (steps * b) as f64)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
