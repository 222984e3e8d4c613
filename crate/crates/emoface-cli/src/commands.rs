//! The five subcommand bodies. Each resolves its inputs from the shared
//! [`RunConfig`], does the work through the library, prints a short summary,
//! and leaves a `run_manifest.json` next to its outputs.

use std::fs;
use std::fmt::Write as _;
use std::path::Path;

use emoface::corpus::{
    default_identity_frame, default_profiles, generate_synthetic, load_corpus, split,
    SequenceRecord,
};
use emoface::gaze::{build_eye_grid, gaze_distribution, GazeLabel, ZONE_COUNT};
use emoface::geometry::{table, HeadPose};
use emoface::metrics::{report, CueTrack};
use emoface::neural::Checkpoint;
use emoface::sequentializers::{
    evaluate_stage1, evaluate_stage2, synthesize, train_stage1, train_stage2, EpochLoss,
    Stage1Model, Stage2EpochLoss, Stage2Model, SynthesisInputs,
};
use emoface::{Error, Result};

use crate::bundle::{
    bundle_track, read_bundle, write_bundle, BundleManifest, BUNDLE_FRAMES_FILE,
    BUNDLE_MANIFEST_FILE, BUNDLE_VERSION,
};
use crate::config::RunConfig;
use crate::manifest::{file_sha256, RunManifest};
use crate::render::{
    bar_chart, line_plot, render_face, save_png, SERIES_BLUE, SERIES_GREEN, SERIES_RED,
};

pub const STAGE1_CHECKPOINT: &str = "stage1.ckpt";
pub const STAGE2_CHECKPOINT: &str = "stage2.ckpt";
pub const STAGE1_LOSSES: &str = "stage1_losses.csv";
pub const STAGE2_LOSSES: &str = "stage2_losses.csv";
pub const CORPUS_MANIFEST: &str = "corpus.json";

/// `gen-corpus`: writes the synthetic oracle corpus for the built-in
/// emotion profiles.
pub fn gen_corpus(cfg: &RunConfig) -> Result<()> {
    let out_dir = cfg.require_path(&cfg.corpus_dir, "corpus_dir", "--out")?;
    let manifest = generate_synthetic(&default_profiles(), &cfg.corpus_config(), &out_dir)?;

    let mut run = RunManifest::new("gen-corpus", cfg)?;
    run.add_output(&out_dir.join(CORPUS_MANIFEST))?;
    run.write(&out_dir)?;
    println!(
        "wrote {} sequences / {} frames to {}",
        manifest.sequences.len(),
        manifest.total_frames,
        out_dir.display()
    );
    Ok(())
}

fn write_stage1_losses(path: &Path, curve: &[EpochLoss], append: bool) -> Result<()> {
    let mut text = if append && path.exists() {
        fs::read_to_string(path)?
    } else {
        "epoch,landmark,pose,gaze,classifier,total\n".to_string()
    };
    for e in curve {
        writeln!(
            text,
            "{},{:?},{:?},{:?},{:?},{:?}",
            e.epoch, e.landmark, e.pose, e.gaze, e.classifier, e.total
        )
        .expect("write to String cannot fail");
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_stage2_losses(path: &Path, curve: &[Stage2EpochLoss], append: bool) -> Result<()> {
    let mut text = if append && path.exists() {
        fs::read_to_string(path)?
    } else {
        "epoch,keypoint,total\n".to_string()
    };
    for e in curve {
        writeln!(text, "{},{:?},{:?}", e.epoch, e.keypoint, e.total)
            .expect("write to String cannot fail");
    }
    fs::write(path, text)?;
    Ok(())
}

/// `train`: fits stage 1 and/or stage 2 on a corpus and writes checkpoints
/// plus per-epoch loss CSVs. With `resume`, existing checkpoints (weights,
/// optimizer moments, epoch counter) continue exactly where they stopped.
pub fn train(cfg: &RunConfig) -> Result<()> {
    let corpus_dir = cfg.require_path(&cfg.corpus_dir, "corpus_dir", "--corpus")?;
    let ckpt_dir = cfg.require_path(&cfg.checkpoint_dir, "checkpoint_dir", "--checkpoints")?;
    let stage = cfg.train_stage()?;
    let train_config = cfg.train_config();
    fs::create_dir_all(&ckpt_dir)?;

    let (_, records) = load_corpus(&corpus_dir)?;
    let (train_recs, held_recs) = split(&records, cfg.split_fraction, cfg.split_seed)?;
    println!(
        "loaded {} sequences: {} train / {} held out",
        records.len(),
        train_recs.len(),
        held_recs.len()
    );

    let s1_path = ckpt_dir.join(STAGE1_CHECKPOINT);
    let s2_path = ckpt_dir.join(STAGE2_CHECKPOINT);
    let mut run = RunManifest::new("train", cfg)?;
    run.add_input(&corpus_dir.join(CORPUS_MANIFEST))?;

    if stage.trains_stage1() {
        let mut model = if cfg.resume {
            run.add_input(&s1_path)?;
            Stage1Model::from_checkpoint(&Checkpoint::read(&s1_path)?)?
        } else {
            Stage1Model::new(&cfg.model_config())?
        };
        let curve = train_stage1(&mut model, &train_recs, &train_config)?;
        model.to_checkpoint()?.write(&s1_path)?;
        write_stage1_losses(&ckpt_dir.join(STAGE1_LOSSES), &curve, cfg.resume)?;

        let last = curve.last().expect("training returns one entry per epoch");
        println!(
            "stage 1: epochs {}..={}, total loss {:.5}",
            curve[0].epoch, last.epoch, last.total
        );
        if held_recs.is_empty() {
            println!("stage 1 held out: no sequences (split kept everything for training)");
        } else {
            let eval = evaluate_stage1(&model, &held_recs)?;
            println!(
                "stage 1 held out: landmark {:.5}  pose {:.5}  gaze acc {:.3}  emotion acc {:.3}",
                eval.landmark_error, eval.pose_error, eval.gaze_accuracy, eval.emotion_accuracy
            );
        }
    }

    if stage.trains_stage2() {
        let mut model = if cfg.resume {
            run.add_input(&s2_path)?;
            Stage2Model::from_checkpoint(&Checkpoint::read(&s2_path)?)?
        } else {
            if !s1_path.exists() {
                return Err(Error::usage(format!(
                    "stage 2 needs a stage-1 checkpoint at {}; train stage 1 first",
                    s1_path.display()
                )));
            }
            let stage1 = Stage1Model::from_checkpoint(&Checkpoint::read(&s1_path)?)?;
            Stage2Model::new(&cfg.model_config(), &stage1)?
        };
        let curve = train_stage2(&mut model, &train_recs, &train_config)?;
        model.to_checkpoint()?.write(&s2_path)?;
        write_stage2_losses(&ckpt_dir.join(STAGE2_LOSSES), &curve, cfg.resume)?;

        let last = curve.last().expect("training returns one entry per epoch");
        println!(
            "stage 2: epochs {}..={}, keypoint loss {:.6}",
            curve[0].epoch, last.epoch, last.total
        );
        if !held_recs.is_empty() {
            let err = evaluate_stage2(&model, &held_recs)?;
            println!("stage 2 held out: keypoint error {err:.6}");
        }
    }

    if stage.trains_stage1() {
        run.add_output(&s1_path)?;
        run.add_output(&ckpt_dir.join(STAGE1_LOSSES))?;
    }
    if stage.trains_stage2() {
        run.add_output(&s2_path)?;
        run.add_output(&ckpt_dir.join(STAGE2_LOSSES))?;
    }
    run.write(&ckpt_dir)?;
    Ok(())
}

/// `synthesize`: drives trained checkpoints with a WAV file and writes a
/// bundle (frames, manifest, per-frame PNG previews).
pub fn synthesize_cmd(cfg: &RunConfig) -> Result<()> {
    let audio_path = cfg.require_path(&cfg.audio, "audio", "--audio")?;
    let ckpt_dir = cfg.require_path(&cfg.checkpoint_dir, "checkpoint_dir", "--checkpoints")?;
    let out_dir = cfg.require_path(&cfg.out_dir, "out_dir", "--out")?;
    let emotion = cfg.emotion()?;

    let s1_path = ckpt_dir.join(STAGE1_CHECKPOINT);
    let s2_path = ckpt_dir.join(STAGE2_CHECKPOINT);
    let stage1 = Stage1Model::from_checkpoint(&Checkpoint::read(&s1_path)?)?;
    let stage2 = Stage2Model::from_checkpoint(&Checkpoint::read(&s2_path)?)?;
    let audio = emoface::audiofeat::read_wav(&audio_path)?;

    let inputs = if cfg.identity_corpus.is_empty() {
        SynthesisInputs {
            identity: default_identity_frame(),
            initial_pose: HeadPose::new(0.0, 0.0, 0.0, [0.0; 3])?,
            initial_gaze: GazeLabel::center(),
            emotion,
        }
    } else {
        let (_, records) = load_corpus(Path::new(&cfg.identity_corpus))?;
        let rec = records.get(cfg.identity_index).ok_or_else(|| {
            Error::config(format!(
                "identity_index {} outside corpus of {} sequences",
                cfg.identity_index,
                records.len()
            ))
        })?;
        SynthesisInputs {
            identity: rec.landmark_frame(0)?,
            initial_pose: rec.frames[0].pose,
            initial_gaze: rec.frames[0].gaze,
            emotion,
        }
    };

    let frames = synthesize(&stage1, &stage2, &audio, &inputs)?;

    fs::create_dir_all(&out_dir)?;
    let manifest = BundleManifest {
        version: BUNDLE_VERSION.to_string(),
        emotion: emotion.name().to_string(),
        emotion_index: emotion.index(),
        fps: cfg.fps,
        frame_count: frames.len(),
        canonical_width: inputs.identity.canonical_width,
        scale_factor: stage1.config().scale_factor,
        audio_sha256: file_sha256(&audio_path)?,
        stage1_sha256: file_sha256(&s1_path)?,
        stage2_sha256: file_sha256(&s2_path)?,
        config_sha256: cfg.sha256()?,
    };
    write_bundle(&out_dir, &manifest, &frames)?;

    let previews = out_dir.join("previews");
    fs::create_dir_all(&previews)?;
    for (n, frame) in frames.iter().enumerate() {
        let img = render_face(&frame.relocated.points);
        save_png(&img, &previews.join(format!("frame_{n:04}.png")))?;
    }

    let mut run = RunManifest::new("synthesize", cfg)?;
    run.add_input(&audio_path)?;
    run.add_input(&s1_path)?;
    run.add_input(&s2_path)?;
    run.add_output(&out_dir.join(BUNDLE_FRAMES_FILE))?;
    run.add_output(&out_dir.join(BUNDLE_MANIFEST_FILE))?;
    run.write(&out_dir)?;
    println!(
        "synthesized {} frames ({}) into {}",
        frames.len(),
        emotion.name(),
        out_dir.display()
    );
    Ok(())
}

/// A corpus sequence re-typed as the cue track the metric suite consumes.
fn record_track(rec: &SequenceRecord) -> Result<CueTrack> {
    let mut landmarks = Vec::with_capacity(rec.frames.len());
    let mut poses = Vec::with_capacity(rec.frames.len());
    let mut gaze = Vec::with_capacity(rec.frames.len());
    for n in 0..rec.frames.len() {
        landmarks.push(rec.landmark_frame(n)?);
        poses.push(rec.frames[n].pose);
        gaze.push(rec.frames[n].gaze);
    }
    CueTrack::new(landmarks, poses, gaze)
}

/// `evaluate`: scores a synthesis bundle against a reference (another
/// bundle, or one corpus sequence) and writes `report.csv` / `report.json`.
pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let pred_dir = cfg.require_path(&cfg.pred_bundle, "pred_bundle", "--pred")?;
    let out_dir = cfg.require_path(&cfg.out_dir, "out_dir", "--out")?;
    if cfg.gt_bundle.is_empty() && cfg.gt_corpus.is_empty() {
        return Err(Error::config(
            "evaluate needs a reference: pass --gt BUNDLE_DIR or --gt-corpus DIR [--gt-index N]",
        ));
    }

    let mut run = RunManifest::new("evaluate", cfg)?;
    let (pred_manifest, pred_frames) = read_bundle(&pred_dir)?;
    let pred = bundle_track(&pred_manifest, &pred_frames)?;
    run.add_input(&pred_dir.join(BUNDLE_FRAMES_FILE))?;

    let gt = if !cfg.gt_bundle.is_empty() {
        let dir = Path::new(&cfg.gt_bundle);
        let (m, f) = read_bundle(dir)?;
        run.add_input(&dir.join(BUNDLE_FRAMES_FILE))?;
        bundle_track(&m, &f)?
    } else if !cfg.gt_corpus.is_empty() {
        let dir = Path::new(&cfg.gt_corpus);
        let (_, records) = load_corpus(dir)?;
        run.add_input(&dir.join(CORPUS_MANIFEST))?;
        let rec = records.get(cfg.gt_index).ok_or_else(|| {
            Error::config(format!(
                "gt_index {} outside corpus of {} sequences",
                cfg.gt_index,
                records.len()
            ))
        })?;
        record_track(rec)?
    };

    let t = table();
    let face = default_identity_frame();
    let left_grid = build_eye_grid(&face.points[t.eye_ring_left()])?;
    let right_grid = build_eye_grid(&face.points[t.eye_ring_right()])?;
    let rep = report(&pred, &gt, &t.mouth(), &left_grid, &right_grid)?;

    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("report.csv"), rep.to_csv())?;
    fs::write(out_dir.join("report.json"), rep.to_json()? + "\n")?;
    for (name, value) in rep.scalars() {
        println!("{name:>14}  {value:.6}");
    }
    run.add_output(&out_dir.join("report.csv"))?;
    run.add_output(&out_dir.join("report.json"))?;
    run.write(&out_dir)?;
    Ok(())
}

/// `plot`: renders pose curves and the gaze-zone histogram from a bundle,
/// as CSVs plus PNGs.
pub fn plot(cfg: &RunConfig) -> Result<()> {
    let bundle_dir = cfg.require_path(&cfg.bundle, "bundle", "--bundle")?;
    let out_dir = cfg.require_path(&cfg.out_dir, "out_dir", "--out")?;

    let (_, frames) = read_bundle(&bundle_dir)?;
    if frames.is_empty() {
        return Err(Error::data(format!(
            "bundle {} has no frames to plot",
            bundle_dir.display()
        )));
    }
    fs::create_dir_all(&out_dir)?;

    let mut csv = String::from("frame,pitch,yaw,roll\n");
    for f in &frames {
        writeln!(csv, "{},{:?},{:?},{:?}", f.frame, f.pose.pitch, f.pose.yaw, f.pose.roll)
            .expect("write to String cannot fail");
    }
    fs::write(out_dir.join("pose_angles.csv"), csv)?;

    let pitch: Vec<f64> = frames.iter().map(|f| f.pose.pitch).collect();
    let yaw: Vec<f64> = frames.iter().map(|f| f.pose.yaw).collect();
    let roll: Vec<f64> = frames.iter().map(|f| f.pose.roll).collect();
    let img = line_plot(
        640,
        320,
        &[(SERIES_RED, &pitch), (SERIES_GREEN, &yaw), (SERIES_BLUE, &roll)],
    )?;
    save_png(&img, &out_dir.join("pose_angles.png"))?;

    let labels: Vec<GazeLabel> = frames
        .iter()
        .map(|f| GazeLabel::new(f.gaze_left, f.gaze_right))
        .collect::<Result<_>>()?;
    let (left, right) = gaze_distribution(&labels)?;
    let mut csv = String::from("zone,left,right\n");
    for z in 0..ZONE_COUNT {
        writeln!(csv, "{z},{},{}", left.counts[z], right.counts[z])
            .expect("write to String cannot fail");
    }
    fs::write(out_dir.join("gaze_zones.csv"), csv)?;

    let groups: Vec<(u64, u64)> =
        (0..ZONE_COUNT).map(|z| (left.counts[z], right.counts[z])).collect();
    save_png(&bar_chart(640, 320, &groups)?, &out_dir.join("gaze_zones.png"))?;

    let mut run = RunManifest::new("plot", cfg)?;
    run.add_input(&bundle_dir.join(BUNDLE_FRAMES_FILE))?;
    for name in ["pose_angles.csv", "pose_angles.png", "gaze_zones.csv", "gaze_zones.png"] {
        run.add_output(&out_dir.join(name))?;
    }
    run.write(&out_dir)?;
    println!("plotted {} frames into {}", frames.len(), out_dir.display());
    Ok(())
}
