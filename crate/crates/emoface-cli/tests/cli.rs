//! End-to-end tests of the emoface binary: every subcommand runs as a real
//! process against a tiny corpus and a tiny model, and failure paths are
//! checked against the pinned exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn emoface(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emoface"))
        .args(args)
        .output()
        .expect("the emoface binary launches")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (exit {:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// A corpus and model small enough that training takes a moment, not minutes.
fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(
        &path,
        r#"{
    "sequences_per_emotion": 1,
    "frames_per_sequence": 30,
    "corpus_seed": 11,
    "encoder_hidden": 4,
    "hidden": 8,
    "emotion_embed_dim": 3,
    "gaze_embed_dim": 3,
    "epochs": 2,
    "batch_size": 4,
    "learning_rate": 0.01,
    "split_fraction": 0.75,
    "split_seed": 5
}"#,
    )
    .unwrap();
    path
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn gen_corpus_is_deterministic_and_validates_its_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("corpus_a");
    let b = tmp.path().join("corpus_b");

    let out = emoface(&["gen-corpus", "--config", cfg, "--out", a.to_str().unwrap()]);
    assert_success(&out, "gen-corpus into a");
    assert!(stdout(&out).contains("8 sequences"), "summary line: {}", stdout(&out));
    let out = emoface(&["gen-corpus", "--config", cfg, "--out", b.to_str().unwrap()]);
    assert_success(&out, "gen-corpus into b");

    // Same config and seed must give byte-identical corpus files. The run
    // manifest is excluded: it records the differing output paths.
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "run_manifest.json")
        .collect();
    names.sort();
    assert!(names.len() > 16, "corpus holds wav + manifest + records per sequence");
    for name in names {
        let left = fs::read(a.join(&name)).unwrap();
        let right = fs::read(b.join(&name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }

    // Zero sequences per emotion is a configuration error.
    let out = emoface(&[
        "gen-corpus",
        "--config",
        cfg,
        "--out",
        tmp.path().join("corpus_c").to_str().unwrap(),
        "--sequences-per-emotion",
        "0",
    ]);
    assert_eq!(exit_code(&out), 2, "invalid corpus config: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn the_full_pipeline_round_trips_through_every_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tiny_config(tmp.path());
    let cfg = cfg_path.to_str().unwrap();
    let corpus = tmp.path().join("corpus");
    let ckpts = tmp.path().join("ckpts");

    let out = emoface(&["gen-corpus", "--config", cfg, "--out", corpus.to_str().unwrap()]);
    assert_success(&out, "gen-corpus");

    // Fresh training writes checkpoints and one loss row per epoch.
    let out = emoface(&[
        "train",
        "--config",
        cfg,
        "--corpus",
        corpus.to_str().unwrap(),
        "--checkpoints",
        ckpts.to_str().unwrap(),
    ]);
    assert_success(&out, "train");
    assert!(stdout(&out).contains("gaze acc"), "held-out summary: {}", stdout(&out));
    assert!(ckpts.join("stage1.ckpt").exists(), "stage-1 checkpoint written");
    assert!(ckpts.join("stage2.ckpt").exists(), "stage-2 checkpoint written");
    assert!(ckpts.join("run_manifest.json").exists(), "run manifest written");
    assert_eq!(line_count(&ckpts.join("stage1_losses.csv")), 3, "header + 2 epochs");
    assert_eq!(line_count(&ckpts.join("stage2_losses.csv")), 3, "header + 2 epochs");

    // Resuming appends to the curves and keeps counting epochs globally.
    let out = emoface(&[
        "train",
        "--config",
        cfg,
        "--corpus",
        corpus.to_str().unwrap(),
        "--checkpoints",
        ckpts.to_str().unwrap(),
        "--resume",
        "--epochs",
        "1",
    ]);
    assert_success(&out, "train --resume");
    let losses = fs::read_to_string(ckpts.join("stage1_losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 4, "one appended epoch:\n{losses}");
    assert!(
        losses.lines().last().unwrap().starts_with("2,"),
        "resumed epoch numbering is global:\n{losses}"
    );

    // Synthesis: a 30-frame corpus wav (1.0 s at 30 fps) gives 30 frames.
    let wav = corpus.join("seq_happy_00.wav");
    let bundle_a = tmp.path().join("bundle_a");
    let bundle_b = tmp.path().join("bundle_b");
    let synth = |out_dir: &Path| {
        emoface(&[
            "synthesize",
            "--config",
            cfg,
            "--audio",
            wav.to_str().unwrap(),
            "--emotion",
            "happy",
            "--checkpoints",
            ckpts.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
    };
    let out = synth(&bundle_a);
    assert_success(&out, "synthesize into a");
    assert_eq!(line_count(&bundle_a.join("bundle.jsonl")), 30, "one line per frame");
    assert!(bundle_a.join("previews/frame_0029.png").exists(), "last preview rendered");
    assert!(!bundle_a.join("previews/frame_0030.png").exists(), "no extra previews");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bundle_a.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["frame_count"], 30, "manifest frame count");
    assert_eq!(manifest["emotion"], "happy", "manifest emotion");

    // Identical inputs give byte-identical frames and previews.
    let out = synth(&bundle_b);
    assert_success(&out, "synthesize into b");
    assert_eq!(
        fs::read(bundle_a.join("bundle.jsonl")).unwrap(),
        fs::read(bundle_b.join("bundle.jsonl")).unwrap(),
        "synthesis is deterministic"
    );
    assert_eq!(
        fs::read(bundle_a.join("previews/frame_0000.png")).unwrap(),
        fs::read(bundle_b.join("previews/frame_0000.png")).unwrap(),
        "previews are deterministic"
    );

    // A bundle scored against itself is exactly zero on every distance.
    let eval_self = tmp.path().join("eval_self");
    let out = emoface(&[
        "evaluate",
        "--config",
        cfg,
        "--pred",
        bundle_a.to_str().unwrap(),
        "--gt",
        bundle_b.to_str().unwrap(),
        "--out",
        eval_self.to_str().unwrap(),
    ]);
    assert_success(&out, "evaluate against self");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(eval_self.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mld"], 0.0, "self mld");
    assert_eq!(report["fld"], 0.0, "self fld");
    assert_eq!(report["dtw_pitch"], 0.0, "self pose dtw");
    assert_eq!(line_count(&eval_self.join("report.csv")), 2, "csv header + row");

    // Scoring against a corpus sequence of the same length also works.
    let eval_gt = tmp.path().join("eval_gt");
    let out = emoface(&[
        "evaluate",
        "--config",
        cfg,
        "--pred",
        bundle_a.to_str().unwrap(),
        "--gt-corpus",
        corpus.to_str().unwrap(),
        "--gt-index",
        "0",
        "--out",
        eval_gt.to_str().unwrap(),
    ]);
    assert_success(&out, "evaluate against corpus");
    assert!(stdout(&out).contains("mld"), "scalar table printed: {}", stdout(&out));

    // Plot: one CSV row per frame, one histogram row per zone, two PNGs.
    let plots = tmp.path().join("plots");
    let out = emoface(&[
        "plot",
        "--config",
        cfg,
        "--bundle",
        bundle_a.to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert_success(&out, "plot");
    assert_eq!(line_count(&plots.join("pose_angles.csv")), 31, "header + 30 frames");
    assert_eq!(line_count(&plots.join("gaze_zones.csv")), 11, "header + 10 zones");
    for png in ["pose_angles.png", "gaze_zones.png"] {
        let bytes = fs::read(plots.join(png)).unwrap();
        assert!(bytes.starts_with(b"\x89PNG"), "{png} is a PNG");
    }

    // A tampered checkpoint digest is refused with the checksum exit code.
    let bad = tmp.path().join("bad_ckpts");
    fs::create_dir_all(&bad).unwrap();
    fs::copy(ckpts.join("stage2.ckpt"), bad.join("stage2.ckpt")).unwrap();
    let text = fs::read_to_string(ckpts.join("stage1.ckpt")).unwrap();
    let flipped = if text.trim_end().ends_with('0') { "1\n" } else { "0\n" };
    let tampered = text.trim_end()[..text.trim_end().len() - 1].to_string() + flipped;
    fs::write(bad.join("stage1.ckpt"), tampered).unwrap();
    let out = emoface(&[
        "synthesize",
        "--config",
        cfg,
        "--audio",
        wav.to_str().unwrap(),
        "--emotion",
        "happy",
        "--checkpoints",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().join("bundle_c").to_str().unwrap(),
    ]);
    assert_eq!(
        exit_code(&out),
        7,
        "tampered checkpoint: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn failures_map_to_the_documented_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    // Unknown config key: configuration error.
    let bad_cfg = tmp.path().join("bad.json");
    fs::write(&bad_cfg, r#"{"bogus_knob": 1}"#).unwrap();
    let out = emoface(&["gen-corpus", "--config", bad_cfg.to_str().unwrap(), "--out", "x"]);
    assert_eq!(exit_code(&out), 2, "unknown config key");
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("bogus_knob"),
        "stderr names the key: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Unknown emotion: configuration error, checked before any file access.
    let out = emoface(&[
        "synthesize",
        "--audio",
        "missing.wav",
        "--checkpoints",
        "missing",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
        "--emotion",
        "bored",
    ]);
    assert_eq!(exit_code(&out), 2, "unknown emotion");

    // Evaluate without any reference: configuration error.
    let out = emoface(&[
        "evaluate",
        "--pred",
        "somewhere",
        "--out",
        tmp.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "missing reference");

    // Missing corpus directory: I/O error.
    let out = emoface(&[
        "train",
        "--corpus",
        tmp.path().join("no_corpus").to_str().unwrap(),
        "--checkpoints",
        tmp.path().join("ck").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 5, "missing corpus dir");

    // Stage 2 without a stage-1 checkpoint: usage error.
    let corpus = tmp.path().join("corpus");
    let cfg = tiny_config(tmp.path());
    let out = emoface(&[
        "gen-corpus",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_success(&out, "gen-corpus for stage-2 check");
    let out = emoface(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--checkpoints",
        tmp.path().join("ck2").to_str().unwrap(),
        "--stage",
        "2",
    ]);
    assert_eq!(exit_code(&out), 6, "stage 2 first: {}", String::from_utf8_lossy(&out.stderr));

    // A bundle with no frames cannot be plotted: data error.
    let empty = tmp.path().join("empty_bundle");
    fs::create_dir_all(&empty).unwrap();
    fs::write(empty.join("bundle.jsonl"), "").unwrap();
    fs::write(
        empty.join("manifest.json"),
        r#"{
    "version": "emoface-bundle v1",
    "emotion": "neutral",
    "emotion_index": 0,
    "fps": 30.0,
    "frame_count": 0,
    "canonical_width": 1.0,
    "scale_factor": 128.0,
    "audio_sha256": "",
    "stage1_sha256": "",
    "stage2_sha256": "",
    "config_sha256": ""
}"#,
    )
    .unwrap();
    let out = emoface(&[
        "plot",
        "--bundle",
        empty.to_str().unwrap(),
        "--out",
        tmp.path().join("p").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3, "empty bundle: {}", String::from_utf8_lossy(&out.stderr));

    // Unknown flags are usage errors; help is a success.
    let out = emoface(&["train", "--frobnicate"]);
    assert_eq!(exit_code(&out), 6, "unknown flag");
    let out = emoface(&["--help"]);
    assert_eq!(exit_code(&out), 0, "help");
    let out = emoface(&["synthesize", "--help"]);
    assert_eq!(exit_code(&out), 0, "subcommand help");
}
