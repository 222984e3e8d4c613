//! Command-line front end for the emoface pipeline.
//!
//! Five subcommands cover the full loop: `gen-corpus` writes the synthetic
//! oracle corpus, `train` fits the two sequentializer stages, `synthesize`
//! drives trained checkpoints with a WAV file and writes a bundle,
//! `evaluate` scores a bundle against a reference, and `plot` renders
//! diagnostics from a bundle. Every command reads one flat [`config::RunConfig`]
//! (JSON file plus flag overrides) and leaves a `run_manifest.json` with the
//! resolved config and content hashes of what it read and wrote.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod render;

/// Maps every library error kind to a stable process exit code, so scripts
/// can distinguish bad configuration from bad data from a corrupt artifact.
///
/// | code | meaning                  |
/// |------|--------------------------|
/// | 0    | success                  |
/// | 2    | invalid configuration    |
/// | 3    | malformed data file      |
/// | 4    | numeric failure          |
/// | 5    | I/O failure              |
/// | 6    | usage error              |
/// | 7    | checksum mismatch        |
/// | 1    | any other failure        |
pub fn exit_code(e: &emoface::Error) -> i32 {
    match e {
        emoface::Error::Config(_) => 2,
        emoface::Error::Data(_) => 3,
        emoface::Error::Numeric(_) => 4,
        emoface::Error::Io(_) => 5,
        emoface::Error::Usage(_) => 6,
        emoface::Error::Checksum(_) => 7,
        _ => 1,
    }
}
