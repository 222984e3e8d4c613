//! `emoface`: CLI for the emotional talking-face cue pipeline.
//!
//! Every subcommand reads an optional JSON config file (`--config`), merges
//! command-line flags on top, runs, and writes a `run_manifest.json` beside
//! its outputs. Exit codes are stable per error kind; see
//! [`emoface_cli::exit_code`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emoface_cli::commands;
use emoface_cli::config::RunConfig;
use emoface_cli::exit_code;
use emoface::Result;

#[derive(Parser)]
#[command(
    name = "emoface",
    version,
    about = "Emotion-conditioned talking-face cues: corpus, training, synthesis, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic oracle corpus for the built-in emotion profiles.
    GenCorpus(GenCorpusArgs),
    /// Train the two sequentializer stages on a corpus.
    Train(TrainArgs),
    /// Drive trained checkpoints with a WAV file and write a synthesis bundle.
    Synthesize(SynthesizeArgs),
    /// Score a synthesis bundle against a reference bundle or corpus sequence.
    Evaluate(EvaluateArgs),
    /// Render pose curves and the gaze histogram from a bundle.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenCorpusArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Corpus output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sequences_per_emotion: Option<usize>,
    #[arg(long)]
    frames_per_sequence: Option<usize>,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    #[arg(long)]
    keypoint_sigma: Option<f64>,
    /// Skip the latent-keypoint oracle stream.
    #[arg(long)]
    no_keypoints: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Corpus directory to train on.
    #[arg(long, value_name = "DIR")]
    corpus: Option<String>,
    /// Directory for checkpoints and loss curves.
    #[arg(long, value_name = "DIR")]
    checkpoints: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Which stages to fit: "1", "2", or "both".
    #[arg(long)]
    stage: Option<String>,
    /// Continue from the existing checkpoints instead of starting fresh.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    encoder_hidden: Option<usize>,
    #[arg(long)]
    emotion_embed_dim: Option<usize>,
    #[arg(long)]
    gaze_embed_dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    scale_factor: Option<f64>,
    #[arg(long)]
    y_weight: Option<f64>,
    #[arg(long)]
    model_seed: Option<u64>,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Input WAV file.
    #[arg(long, value_name = "FILE")]
    audio: Option<String>,
    /// Emotion condition (neutral, angry, contempt, disgust, fear, happy, sad, surprised).
    #[arg(long)]
    emotion: Option<String>,
    /// Directory holding stage1.ckpt and stage2.ckpt.
    #[arg(long, value_name = "DIR")]
    checkpoints: Option<String>,
    /// Bundle output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Take identity, initial pose, and initial gaze from this corpus.
    #[arg(long, value_name = "DIR")]
    identity_corpus: Option<String>,
    /// Sequence index inside --identity-corpus.
    #[arg(long)]
    identity_index: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Bundle directory to score.
    #[arg(long, value_name = "DIR")]
    pred: Option<String>,
    /// Reference bundle directory.
    #[arg(long, value_name = "DIR")]
    gt: Option<String>,
    /// Reference corpus directory (alternative to --gt).
    #[arg(long, value_name = "DIR")]
    gt_corpus: Option<String>,
    /// Sequence index inside --gt-corpus.
    #[arg(long)]
    gt_index: Option<usize>,
    /// Report output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Bundle directory to plot.
    #[arg(long, value_name = "DIR")]
    bundle: Option<String>,
    /// Plot output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
}

fn merge<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus(a) => {
            let mut cfg = RunConfig::load(a.config.as_deref())?;
            merge(&mut cfg.corpus_dir, a.out);
            merge(&mut cfg.corpus_seed, a.seed);
            merge(&mut cfg.sequences_per_emotion, a.sequences_per_emotion);
            merge(&mut cfg.frames_per_sequence, a.frames_per_sequence);
            merge(&mut cfg.fps, a.fps);
            merge(&mut cfg.sample_rate, a.sample_rate);
            merge(&mut cfg.keypoint_sigma, a.keypoint_sigma);
            if a.no_keypoints {
                cfg.with_keypoints = false;
            }
            commands::gen_corpus(&cfg)
        }
        Command::Train(a) => {
            let mut cfg = RunConfig::load(a.config.as_deref())?;
            merge(&mut cfg.corpus_dir, a.corpus);
            merge(&mut cfg.checkpoint_dir, a.checkpoints);
            merge(&mut cfg.epochs, a.epochs);
            merge(&mut cfg.batch_size, a.batch_size);
            merge(&mut cfg.learning_rate, a.learning_rate);
            merge(&mut cfg.train_seed, a.train_seed);
            merge(&mut cfg.split_fraction, a.split_fraction);
            merge(&mut cfg.split_seed, a.split_seed);
            merge(&mut cfg.stage, a.stage);
            if a.resume {
                cfg.resume = true;
            }
            merge(&mut cfg.hidden, a.hidden);
            merge(&mut cfg.encoder_hidden, a.encoder_hidden);
            merge(&mut cfg.emotion_embed_dim, a.emotion_embed_dim);
            merge(&mut cfg.gaze_embed_dim, a.gaze_embed_dim);
            merge(&mut cfg.window, a.window);
            merge(&mut cfg.scale_factor, a.scale_factor);
            merge(&mut cfg.y_weight, a.y_weight);
            merge(&mut cfg.model_seed, a.model_seed);
            commands::train(&cfg)
        }
        Command::Synthesize(a) => {
            let mut cfg = RunConfig::load(a.config.as_deref())?;
            merge(&mut cfg.audio, a.audio);
            merge(&mut cfg.emotion, a.emotion);
            merge(&mut cfg.checkpoint_dir, a.checkpoints);
            merge(&mut cfg.out_dir, a.out);
            merge(&mut cfg.identity_corpus, a.identity_corpus);
            merge(&mut cfg.identity_index, a.identity_index);
            commands::synthesize_cmd(&cfg)
        }
        Command::Evaluate(a) => {
            let mut cfg = RunConfig::load(a.config.as_deref())?;
            merge(&mut cfg.pred_bundle, a.pred);
            merge(&mut cfg.gt_bundle, a.gt);
            merge(&mut cfg.gt_corpus, a.gt_corpus);
            merge(&mut cfg.gt_index, a.gt_index);
            merge(&mut cfg.out_dir, a.out);
            commands::evaluate(&cfg)
        }
        Command::Plot(a) => {
            let mut cfg = RunConfig::load(a.config.as_deref())?;
            merge(&mut cfg.bundle, a.bundle);
            merge(&mut cfg.out_dir, a.out);
            commands::plot(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; anything else is a
            // usage error and shares its exit code.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(6),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
