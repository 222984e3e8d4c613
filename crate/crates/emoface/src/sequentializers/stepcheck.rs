//! Finite-difference harnesses over the real training passes, plus the tiny
//! synthetic fixtures they run on.
//!
//! These are compiled into the library (not just the test profile) so the
//! integration-level verification suite can drive the exact batched
//! forward/backward code that training uses, with one loss component
//! isolated at a time.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::audiofeat::{AudioFeatureFrame, AUDIO_FEATURE_DIMS};
use crate::corpus::{Emotion, FrameRecord, SequenceRecord, EMOTION_COUNT, KEYPOINT_COUNT};
use crate::error::Result;
use crate::gaze::GazeLabel;
use crate::geometry::{HeadPose, Point3, LANDMARK_COUNT};
use crate::neural::{
    mean_squared_error, softmax_cross_entropy, weighted_l1_with_grad, Embedding, GradCheckable,
    Linear, RecurrentLayer, Tensor,
};

use super::models::{Stage1Model, Stage2Model};
use super::training::{
    fit_audio_norm, prepare_stage1, prepare_stage2, stage1_batch, stage2_batch, LossWeights,
    Stage1Sequence, Stage2Sequence,
};
use super::SequentializerConfig;

/// Small shape config shared by unit tests and the verification harnesses.
pub fn tiny_config() -> SequentializerConfig {
    SequentializerConfig {
        encoder_hidden: 2,
        hidden: 3,
        emotion_embed_dim: 2,
        gaze_embed_dim: 2,
        window: 1,
        scale_factor: 128.0,
        y_weight: 2.0,
        seed: 9,
    }
}

/// Deterministic synthetic sequence records with valid shapes but arbitrary
/// content: enough to exercise every code path without a real corpus.
pub fn tiny_records(
    n_seq: usize,
    frames: usize,
    with_keypoints: bool,
    seed: u64,
) -> Vec<SequenceRecord> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n_seq)
        .map(|i| {
            let emotion = Emotion::from_index(i % EMOTION_COUNT).expect("index in range");
            let frames = (0..frames)
                .map(|_| {
                    let mut c = [0.0; AUDIO_FEATURE_DIMS];
                    for v in &mut c {
                        *v = rng.gen_range(-1.0..1.0);
                    }
                    let landmarks: Vec<Point3> = (0..LANDMARK_COUNT)
                        .map(|_| {
                            [
                                rng.gen_range(-0.5..0.5),
                                rng.gen_range(-0.5..0.5),
                                rng.gen_range(-0.2..0.2),
                            ]
                        })
                        .collect();
                    let pose = HeadPose::new(
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        rng.gen_range(-0.3..0.3),
                        [
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-0.4..0.4),
                        ],
                    )
                    .expect("angles within range");
                    let gaze = GazeLabel::new(rng.gen_range(0..10), rng.gen_range(0..10))
                        .expect("zones within range");
                    let keypoints = with_keypoints.then(|| {
                        let mut kp = [[0.0; 3]; KEYPOINT_COUNT];
                        for p in &mut kp {
                            for d in p.iter_mut() {
                                *d = rng.gen_range(-1.0..1.0);
                            }
                        }
                        kp
                    });
                    FrameRecord {
                        audio: AudioFeatureFrame::new(c).expect("finite coefficients"),
                        landmarks,
                        pose,
                        gaze,
                        keypoints,
                    }
                })
                .collect();
            SequenceRecord {
                identity: "toy".into(),
                emotion,
                fps: 30.0,
                seed: seed.wrapping_add(i as u64),
                canonical_width: 1.0,
                frames,
            }
        })
        .collect()
}

/// Which stage-1 loss component a step harness isolates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage1Part {
    Landmark,
    Pose,
    Gaze,
    Classifier,
}

enum StepInner {
    Stage1 { model: Stage1Model, seqs: Vec<Stage1Sequence>, weights: LossWeights },
    Stage2 { model: Stage2Model, seqs: Vec<Stage2Sequence> },
}

/// Grad-checkable wrapper around one full batched training step. Both
/// entry points run the identical forward + backward pass: the backward
/// pops every cache it pushed, so repeated pure-loss calls stay balanced.
pub struct StepHarness {
    name: String,
    inner: StepInner,
}

impl StepHarness {
    pub fn name(&self) -> &str {
        &self.name
    }

    fn run(&mut self) -> Result<f64> {
        match &mut self.inner {
            StepInner::Stage1 { model, seqs, weights } => {
                for p in model.params() {
                    p.zero_grad();
                }
                model.clear_caches();
                let batch: Vec<&Stage1Sequence> = seqs.iter().collect();
                let l = stage1_batch(model, &batch, weights)?;
                Ok(weights.landmark * l.landmark
                    + weights.pose * l.pose
                    + weights.gaze * l.gaze
                    + weights.classifier * l.classifier)
            }
            StepInner::Stage2 { model, seqs } => {
                for p in model.params() {
                    p.zero_grad();
                }
                model.clear_caches();
                let batch: Vec<&Stage2Sequence> = seqs.iter().collect();
                stage2_batch(model, &batch, 1.0)
            }
        }
    }
}

impl GradCheckable for StepHarness {
    fn loss(&mut self) -> Result<f64> {
        self.run()
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        self.run()
    }

    fn params(&mut self) -> Vec<&mut Tensor> {
        match &mut self.inner {
            StepInner::Stage1 { model, .. } => model.params(),
            StepInner::Stage2 { model, .. } => model.params(),
        }
    }
}

/// All four stage-1 loss components at once. Every cell and head is touched
/// by exactly one component, so their gradients are still checked in
/// isolation; only the shared encoder and emotion table see a sum.
pub fn stage1_joint_harness() -> Result<StepHarness> {
    let (model, seqs) = stage1_fixture()?;
    Ok(StepHarness {
        name: "stage-1 joint step (all four losses)".into(),
        inner: StepInner::Stage1 { model, seqs, weights: LossWeights::ones() },
    })
}

fn stage1_fixture() -> Result<(Stage1Model, Vec<Stage1Sequence>)> {
    let config = tiny_config();
    let mut model = Stage1Model::new(&config)?;
    let records = tiny_records(2, 3, false, 17);
    let refs: Vec<&SequenceRecord> = records.iter().collect();
    model.set_audio_norm(fit_audio_norm(&refs));
    let seqs = prepare_stage1(&model, &refs)?;
    Ok((model, seqs))
}

/// A full teacher-forced stage-1 step (shared encoder, embeddings, one
/// generator cell per cue, heads, classifier) with one loss isolated.
pub fn stage1_step_harness(part: Stage1Part) -> Result<StepHarness> {
    let (model, seqs) = stage1_fixture()?;
    let (name, weights) = match part {
        Stage1Part::Landmark => {
            ("stage-1 landmark step", LossWeights { landmark: 1.0, pose: 0.0, gaze: 0.0, classifier: 0.0 })
        }
        Stage1Part::Pose => {
            ("stage-1 pose step", LossWeights { landmark: 0.0, pose: 1.0, gaze: 0.0, classifier: 0.0 })
        }
        Stage1Part::Gaze => {
            ("stage-1 gaze step", LossWeights { landmark: 0.0, pose: 0.0, gaze: 1.0, classifier: 0.0 })
        }
        Stage1Part::Classifier => {
            ("stage-1 classifier", LossWeights { landmark: 0.0, pose: 0.0, gaze: 0.0, classifier: 1.0 })
        }
    };
    Ok(StepHarness { name: name.into(), inner: StepInner::Stage1 { model, seqs, weights } })
}

/// A full teacher-forced stage-2 keypoint step with its MSE loss.
pub fn stage2_step_harness() -> Result<StepHarness> {
    let config = tiny_config();
    let stage1 = Stage1Model::new(&config)?;
    let mut model = Stage2Model::new(&config, &stage1)?;
    let records = tiny_records(2, 3, true, 18);
    let refs: Vec<&SequenceRecord> = records.iter().collect();
    model.audio_norm = fit_audio_norm(&refs);
    let seqs = prepare_stage2(&model, &refs)?;
    Ok(StepHarness {
        name: "stage-2 keypoint step".into(),
        inner: StepInner::Stage2 { model, seqs },
    })
}

enum LayerInner {
    Linear { lin: Linear, x: Array2<f64>, target: Array2<f64> },
    Embed { emb: Embedding, head: Linear, labels: Vec<usize>, targets: Vec<usize> },
    Causal { layer: RecurrentLayer, head: Linear, xs: Vec<Array2<f64>>, targets: Vec<Vec<usize>> },
    Window { enc: RecurrentLayer, xs: Vec<Array2<f64>>, target: Array2<f64> },
}

/// Grad-checkable wrapper around one trainable layer type with a scalar
/// loss on top.
pub struct LayerHarness {
    name: String,
    inner: LayerInner,
}

impl LayerHarness {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl GradCheckable for LayerHarness {
    fn loss(&mut self) -> Result<f64> {
        match &mut self.inner {
            LayerInner::Linear { lin, x, target } => {
                Ok(weighted_l1_with_grad(&lin.infer(x), target, 2.0)?.0)
            }
            LayerInner::Embed { emb, head, labels, targets } => {
                let e = emb.infer(labels)?;
                Ok(softmax_cross_entropy(&head.infer(&e), targets)?.0)
            }
            LayerInner::Causal { layer, head, xs, targets } => {
                let hs = layer.infer_sequence(xs)?;
                let mut total = 0.0;
                for (h, t) in hs.iter().zip(targets.iter()) {
                    total += softmax_cross_entropy(&head.infer(h), t)?.0;
                }
                Ok(total / targets.len() as f64)
            }
            LayerInner::Window { enc, xs, target } => {
                Ok(mean_squared_error(&enc.infer_window(xs)?, target)?.0)
            }
        }
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        for p in self.params() {
            p.zero_grad();
        }
        match &mut self.inner {
            LayerInner::Linear { lin, x, target } => {
                lin.clear_cache();
                let y = lin.forward(x);
                let (l, d) = weighted_l1_with_grad(&y, target, 2.0)?;
                lin.backward(&d);
                Ok(l)
            }
            LayerInner::Embed { emb, head, labels, targets } => {
                emb.clear_cache();
                head.clear_cache();
                let e = emb.forward(labels)?;
                let logits = head.forward(&e);
                let (l, _, d_logits) = softmax_cross_entropy(&logits, targets)?;
                let d_e = head.backward(&d_logits);
                emb.backward(&d_e);
                Ok(l)
            }
            LayerInner::Causal { layer, head, xs, targets } => {
                layer.clear_cache();
                head.clear_cache();
                let hs = layer.forward_sequence(xs)?;
                let steps = hs.len() as f64;
                let mut total = 0.0;
                let mut d_logits_all = Vec::new();
                for (h, t) in hs.iter().zip(targets.iter()) {
                    let logits = head.forward(h);
                    let (l, _, d) = softmax_cross_entropy(&logits, t)?;
                    total += l;
                    d_logits_all.push(d.mapv(|v| v / steps));
                }
                let mut d_hidden: Vec<Array2<f64>> = Vec::new();
                for d in d_logits_all.iter().rev() {
                    d_hidden.push(head.backward(d));
                }
                d_hidden.reverse();
                layer.backward_sequence(&d_hidden)?;
                Ok(total / steps)
            }
            LayerInner::Window { enc, xs, target } => {
                enc.clear_cache();
                let out = enc.forward_window(xs)?;
                let (l, d) = mean_squared_error(&out, target)?;
                enc.backward_window(&d, xs.len())?;
                Ok(l)
            }
        }
    }

    fn params(&mut self) -> Vec<&mut Tensor> {
        match &mut self.inner {
            LayerInner::Linear { lin, .. } => lin.params(),
            LayerInner::Embed { emb, head, .. } => {
                let mut ps = emb.params();
                ps.extend(head.params());
                ps
            }
            LayerInner::Causal { layer, head, .. } => {
                let mut ps = layer.params();
                ps.extend(head.params());
                ps
            }
            LayerInner::Window { enc, .. } => enc.params(),
        }
    }
}

/// One harness per trainable layer type: linear, embedding, causal LSTM,
/// and the bidirectional window encoder.
pub fn layer_harnesses(seed: u64) -> Vec<LayerHarness> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let linear = LayerHarness {
        name: "linear + weighted L1".into(),
        inner: LayerInner::Linear {
            lin: Linear::new("check.linear", 5, 6, &mut rng),
            x: Array2::from_shape_fn((3, 5), |_| rng.gen_range(-1.0..1.0)),
            target: Array2::from_shape_fn((3, 6), |_| rng.gen_range(-1.0..1.0)),
        },
    };
    let embed = LayerHarness {
        name: "embedding + softmax CE".into(),
        inner: LayerInner::Embed {
            emb: Embedding::new("check.embed", 6, 8, &mut rng),
            head: Linear::new("check.embed_head", 6, 5, &mut rng),
            labels: vec![0, 3, 7],
            targets: vec![2, 2, 0],
        },
    };
    let causal = LayerHarness {
        name: "causal LSTM + CE over 3 steps".into(),
        inner: LayerInner::Causal {
            layer: RecurrentLayer::causal("check.causal", 4, 5, &mut rng),
            head: Linear::new("check.causal_head", 5, 6, &mut rng),
            xs: (0..3).map(|_| Array2::from_shape_fn((2, 4), |_| rng.gen_range(-1.0..1.0))).collect(),
            targets: vec![vec![1, 4], vec![4, 0], vec![2, 3]],
        },
    };
    let window = LayerHarness {
        name: "bidirectional window encoder + MSE".into(),
        inner: LayerInner::Window {
            enc: RecurrentLayer::bidirectional_encoder("check.window", 3, 4, &mut rng),
            xs: (0..5).map(|_| Array2::from_shape_fn((2, 3), |_| rng.gen_range(-1.0..1.0))).collect(),
            target: Array2::from_shape_fn((2, 8), |_| rng.gen_range(-1.0..1.0)),
        },
    };
    vec![linear, embed, causal, window]
}
