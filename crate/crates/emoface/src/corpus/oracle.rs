//! Desk-scale stand-in for the pretrained latent-keypoint encoder: a fixed,
//! seeded random linear map of the relocated landmarks plus small Gaussian
//! noise. Keypoint learning claims are all relative to this oracle.

use super::{KeypointSet, KEYPOINT_COUNT};
use crate::error::{Error, Result};
use crate::geometry::{RelocatedLandmarkFrame, LANDMARK_COUNT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

/// Mean norm of a 3-dimensional standard Gaussian: sqrt(2) * Gamma(2) /
/// Gamma(3/2). Scaled by sigma it is the oracle's per-point noise floor.
pub const GAUSSIAN_NORM_MEAN_3D: f64 = 1.5957691216057308;

const INPUT_DIMS: usize = 3 * LANDMARK_COUNT;
const OUTPUT_DIMS: usize = 3 * KEYPOINT_COUNT;

/// The fixed projection. Entries are uniform on (-1, 1) scaled by
/// 1/sqrt(input dims), so canonical-magnitude inputs give keypoints of
/// order a few tenths.
#[derive(Clone, Debug)]
pub struct KeypointOracle {
    projection: Vec<f64>,
    sigma: f64,
}

impl KeypointOracle {
    pub fn new(seed: u64, sigma: f64) -> Result<KeypointOracle> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::config(format!("oracle noise sigma must be >= 0, got {sigma}")));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let scale = 1.0 / (INPUT_DIMS as f64).sqrt();
        let projection =
            (0..OUTPUT_DIMS * INPUT_DIMS).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        Ok(KeypointOracle { projection, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Expected per-point distance between a noisy sample and the noiseless
    /// projection.
    pub fn noise_floor(&self) -> f64 {
        self.sigma * GAUSSIAN_NORM_MEAN_3D
    }

    /// The noiseless projection of one relocated frame. Inputs are divided by
    /// `scale_factor` so the map sees canonical-magnitude coordinates.
    pub fn project(&self, relocated: &RelocatedLandmarkFrame, scale_factor: f64) -> Result<KeypointSet> {
        if relocated.points.len() != LANDMARK_COUNT {
            return Err(Error::structural(format!(
                "oracle expects {LANDMARK_COUNT} relocated points, got {}",
                relocated.points.len()
            )));
        }
        if !(scale_factor.is_finite() && scale_factor > 0.0) {
            return Err(Error::domain(format!("scale factor must be positive, got {scale_factor}")));
        }
        let x: Vec<f64> =
            relocated.points.iter().flat_map(|p| p.iter().map(|&v| v / scale_factor)).collect();
        let mut out = [[0.0; 3]; KEYPOINT_COUNT];
        for j in 0..OUTPUT_DIMS {
            let row = &self.projection[j * INPUT_DIMS..(j + 1) * INPUT_DIMS];
            let y: f64 = row.iter().zip(&x).map(|(w, v)| w * v).sum();
            out[j / 3][j % 3] = y;
        }
        Ok(out)
    }

    /// Projection plus per-coordinate Gaussian noise drawn from `rng`.
    pub fn sample(
        &self,
        relocated: &RelocatedLandmarkFrame,
        scale_factor: f64,
        rng: &mut ChaCha20Rng,
    ) -> Result<KeypointSet> {
        let mut out = self.project(relocated, scale_factor)?;
        let normal = Normal::new(0.0, self.sigma)
            .map_err(|e| Error::config(format!("oracle noise distribution: {e}")))?;
        for point in &mut out {
            for v in point {
                *v += normal.sample(rng);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::face::synthesize_face;
    use crate::gaze::GazeLabel;
    use crate::geometry::{relocate, HeadPose, NormalizedLandmarkFrame, DEFAULT_SCALE_FACTOR};

    fn relocated_fixture(seed: u64) -> RelocatedLandmarkFrame {
        let points = synthesize_face(0.045, 0.03 + 0.01 * seed as f64, &GazeLabel::center()).unwrap();
        let frame = NormalizedLandmarkFrame::new(points, 1.0).unwrap();
        let pose = HeadPose::new(0.1, -0.05, 0.02, [1.0, -2.0, 0.5]).unwrap();
        relocate(&frame, &pose, &GazeLabel::center(), DEFAULT_SCALE_FACTOR).unwrap()
    }

    #[test]
    fn projection_is_deterministic_and_linear_scale() {
        let oracle = KeypointOracle::new(9, 0.01).unwrap();
        let r = relocated_fixture(1);
        let a = oracle.project(&r, DEFAULT_SCALE_FACTOR).unwrap();
        let b = oracle.project(&r, DEFAULT_SCALE_FACTOR).unwrap();
        assert_eq!(a, b, "projection is a fixed map");
        let other = KeypointOracle::new(10, 0.01).unwrap();
        assert_ne!(a, other.project(&r, DEFAULT_SCALE_FACTOR).unwrap(), "seed selects the map");
    }

    #[test]
    fn keypoints_have_workable_magnitudes() {
        let oracle = KeypointOracle::new(9, 0.01).unwrap();
        for seed in 0..4 {
            let k = oracle.project(&relocated_fixture(seed), DEFAULT_SCALE_FACTOR).unwrap();
            let max = k.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));
            assert!(max < 3.0, "keypoints should stay order-1, got max |k| = {max}");
            assert!(max > 1e-3, "projection should not collapse to zero");
        }
    }

    #[test]
    fn sampled_noise_matches_the_declared_floor() {
        let oracle = KeypointOracle::new(9, 0.01).unwrap();
        let r = relocated_fixture(2);
        let clean = oracle.project(&r, DEFAULT_SCALE_FACTOR).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let trials = 4000;
        let mut total = 0.0;
        for _ in 0..trials {
            let noisy = oracle.sample(&r, DEFAULT_SCALE_FACTOR, &mut rng).unwrap();
            for (a, b) in noisy.iter().zip(clean.iter()) {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                total += d;
            }
        }
        let mean = total / (trials * KEYPOINT_COUNT) as f64;
        let floor = oracle.noise_floor();
        assert!(
            (mean - floor).abs() < 0.02 * floor,
            "empirical mean point distance {mean} vs declared floor {floor}"
        );
    }

    #[test]
    fn sigma_must_be_non_negative() {
        assert!(KeypointOracle::new(1, -0.1).is_err());
        assert!(KeypointOracle::new(1, f64::NAN).is_err());
    }
}
