//! Emotion-conditioned talking-face cue synthesis.
//!
//! The pipeline turns MFCC audio features plus an emotion label into three
//! synchronized cue streams (normalized 3D facial landmarks, head pose,
//! discretized gaze), recomposes them into image-space landmarks, and drives
//! a latent-keypoint generator from the recomposition. A synthetic oracle
//! corpus and a metric suite (MLD, FLD, DTW) close the loop for training and
//! evaluation.

pub mod error;
pub mod audiofeat;
pub mod corpus;
pub mod gaze;
pub mod geometry;
pub mod neural;
pub mod metrics;
pub mod sequentializers;

pub use error::{Error, Result};
