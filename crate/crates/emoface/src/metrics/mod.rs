//! Quantitative evaluation of generated cue sequences: mean landmark
//! distances over the mouth region (MLD) and the whole face (FLD), dynamic
//! time warping over pose-angle and pupil-speed sequences, and gaze-zone
//! histograms, bundled into a serializable report.
//!
//! DTW here is the classic unnormalized total cost over monotone alignments
//! with unit steps and absolute-difference local cost. Reported magnitudes
//! are therefore not comparable to length-normalized variants.

mod bruteforce;

pub use bruteforce::{dtw_bruteforce, sequences_up_to};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{gaze_distribution, place_pupil, EyeGrid, GazeLabel, ZONE_COUNT};
use crate::geometry::{vec3, HeadPose, NormalizedLandmarkFrame, LANDMARK_COUNT};

/// Mean Euclidean landmark distance over a point subset, averaged over frames
/// and points. Both sequences must be frame-aligned.
fn mean_point_distance(
    pred: &[NormalizedLandmarkFrame],
    gt: &[NormalizedLandmarkFrame],
    points: &Range<usize>,
) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::data(format!(
            "landmark distance needs aligned sequences, got {} vs {} frames",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::domain("landmark distance over zero frames is undefined"));
    }
    if points.is_empty() || points.end > LANDMARK_COUNT {
        return Err(Error::domain(format!(
            "point subset {points:?} is not a non-empty range within 0..{LANDMARK_COUNT}"
        )));
    }
    let mut sum = 0.0;
    for (p, g) in pred.iter().zip(gt) {
        for i in points.clone() {
            sum += vec3::dist(p.points[i], g.points[i]);
        }
    }
    Ok(sum / (pred.len() * points.len()) as f64)
}

/// Mouth landmark distance: mean per-point Euclidean distance restricted to
/// the given mouth index range (canonical units).
pub fn mld(
    pred: &[NormalizedLandmarkFrame],
    gt: &[NormalizedLandmarkFrame],
    mouth: &Range<usize>,
) -> Result<f64> {
    mean_point_distance(pred, gt, mouth)
}

/// Full-face landmark distance: mean per-point Euclidean distance over all
/// 147 points (canonical units).
pub fn fld(pred: &[NormalizedLandmarkFrame], gt: &[NormalizedLandmarkFrame]) -> Result<f64> {
    mean_point_distance(pred, gt, &(0..LANDMARK_COUNT))
}

/// Classic dynamic time warping with absolute-difference cost: the minimal
/// total cost over monotone alignments with unit steps (match, insert,
/// delete), no window constraint, and no length normalization.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::domain("dtw is undefined for empty sequences"));
    }
    for (name, s) in [("first", a), ("second", b)] {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("{name} dtw input contains a non-finite value")));
        }
    }
    // Rolling-row DP over the (a.len() x b.len()) accumulated-cost matrix.
    let mut prev = vec![0.0f64; b.len()];
    let mut curr = vec![0.0f64; b.len()];
    for (j, bv) in b.iter().enumerate() {
        prev[j] = (a[0] - bv).abs() + if j == 0 { 0.0 } else { prev[j - 1] };
    }
    for av in &a[1..] {
        curr[0] = (av - b[0]).abs() + prev[0];
        for j in 1..b.len() {
            let best = prev[j].min(prev[j - 1]).min(curr[j - 1]);
            curr[j] = (av - b[j]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[b.len() - 1])
}

/// DTW per head-pose angle channel, returned as (pitch, yaw, roll).
pub fn pose_dtw(pred: &[HeadPose], gt: &[HeadPose]) -> Result<(f64, f64, f64)> {
    let channel = |f: fn(&HeadPose) -> f64| -> (Vec<f64>, Vec<f64>) {
        (pred.iter().map(f).collect(), gt.iter().map(f).collect())
    };
    let (pp, pg) = channel(|r| r.pitch);
    let (yp, yg) = channel(|r| r.yaw);
    let (rp, rg) = channel(|r| r.roll);
    Ok((dtw(&pp, &pg)?, dtw(&yp, &yg)?, dtw(&rp, &rg)?))
}

/// Per-frame pupil speed for one eye: Euclidean displacement of the
/// `place_pupil` position between consecutive labels. Length is L - 1.
fn pupil_speeds(labels: &[GazeLabel], grid: &EyeGrid, left_eye: bool) -> Result<Vec<f64>> {
    if labels.len() < 2 {
        return Err(Error::domain(format!(
            "pupil speed needs at least 2 frames, got {}",
            labels.len()
        )));
    }
    let positions: Vec<(f64, f64)> = labels
        .iter()
        .map(|l| place_pupil(if left_eye { l.left() } else { l.right() }, grid))
        .collect::<Result<_>>()?;
    Ok(positions
        .windows(2)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
        })
        .collect())
}

/// DTW over pupil movement speed sequences, per eye, returned as
/// (left, right). Speeds are in the grid's coordinate units per frame.
pub fn gaze_speed_dtw(
    pred: &[GazeLabel],
    gt: &[GazeLabel],
    left_grid: &EyeGrid,
    right_grid: &EyeGrid,
) -> Result<(f64, f64)> {
    let left = dtw(
        &pupil_speeds(pred, left_grid, true)?,
        &pupil_speeds(gt, left_grid, true)?,
    )?;
    let right = dtw(
        &pupil_speeds(pred, right_grid, false)?,
        &pupil_speeds(gt, right_grid, false)?,
    )?;
    Ok((left, right))
}

/// One aligned cue sequence under evaluation: per-frame canonical landmarks,
/// head pose, and gaze label.
#[derive(Debug, Clone)]
pub struct CueTrack {
    pub landmarks: Vec<NormalizedLandmarkFrame>,
    pub poses: Vec<HeadPose>,
    pub gaze: Vec<GazeLabel>,
}

impl CueTrack {
    pub fn new(
        landmarks: Vec<NormalizedLandmarkFrame>,
        poses: Vec<HeadPose>,
        gaze: Vec<GazeLabel>,
    ) -> Result<Self> {
        if landmarks.len() != poses.len() || landmarks.len() != gaze.len() {
            return Err(Error::data(format!(
                "cue track components disagree on length: {} landmarks, {} poses, {} gaze labels",
                landmarks.len(),
                poses.len(),
                gaze.len()
            )));
        }
        Ok(CueTrack { landmarks, poses, gaze })
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }
}

/// The full evaluation report: landmark distances, per-channel DTW values,
/// and gaze-zone occupancy histograms for both sequences.
///
/// Serialized as JSON (this struct verbatim) or as a two-line CSV with the
/// fixed 47-column order: `mld`, `fld`, `dtw_pitch`, `dtw_yaw`, `dtw_roll`,
/// `dtw_gaze_left`, `dtw_gaze_right`, then `pred_left_0..=9`,
/// `pred_right_0..=9`, `gt_left_0..=9`, `gt_right_0..=9` zone counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mld: f64,
    pub fld: f64,
    pub dtw_pitch: f64,
    pub dtw_yaw: f64,
    pub dtw_roll: f64,
    pub dtw_gaze_left: f64,
    pub dtw_gaze_right: f64,
    pub pred_gaze_left: [u64; ZONE_COUNT],
    pub pred_gaze_right: [u64; ZONE_COUNT],
    pub gt_gaze_left: [u64; ZONE_COUNT],
    pub gt_gaze_right: [u64; ZONE_COUNT],
}

impl MetricReport {
    /// The scalar metrics in CSV column order, paired with their names.
    pub fn scalars(&self) -> [(&'static str, f64); 7] {
        [
            ("mld", self.mld),
            ("fld", self.fld),
            ("dtw_pitch", self.dtw_pitch),
            ("dtw_yaw", self.dtw_yaw),
            ("dtw_roll", self.dtw_roll),
            ("dtw_gaze_left", self.dtw_gaze_left),
            ("dtw_gaze_right", self.dtw_gaze_right),
        ]
    }

    /// All distances finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.scalars() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::numeric(format!("report field {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Two-line CSV (header + one data row) in the fixed column order.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = self.scalars().iter().map(|(n, _)| n.to_string()).collect();
        let mut values: Vec<String> = self.scalars().iter().map(|(_, v)| format!("{v:?}")).collect();
        for (prefix, counts) in self.histograms() {
            for (zone, c) in counts.iter().enumerate() {
                header.push(format!("{prefix}_{zone}"));
                values.push(c.to_string());
            }
        }
        format!("{}\n{}\n", header.join(","), values.join(","))
    }

    fn histograms(&self) -> [(&'static str, &[u64; ZONE_COUNT]); 4] {
        [
            ("pred_left", &self.pred_gaze_left),
            ("pred_right", &self.pred_gaze_right),
            ("gt_left", &self.gt_gaze_left),
            ("gt_right", &self.gt_gaze_right),
        ]
    }

    /// Parses the CSV produced by `to_csv`, verifying the header.
    pub fn from_csv(text: &str) -> Result<MetricReport> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::data("report CSV is empty"))?;
        let row = lines.next().ok_or_else(|| Error::data("report CSV has no data row"))?;
        let zero = MetricReport::zero();
        let expected = zero.to_csv();
        let expected_header = expected.lines().next().expect("zero report renders a header");
        if header != expected_header {
            return Err(Error::data(format!("report CSV header mismatch: got {header:?}")));
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 7 + 4 * ZONE_COUNT {
            return Err(Error::data(format!(
                "report CSV row must hold {} fields, got {}",
                7 + 4 * ZONE_COUNT,
                fields.len()
            )));
        }
        let scalar = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::data(format!("bad numeric field {:?} in report CSV", fields[i])))
        };
        let mut report = MetricReport {
            mld: scalar(0)?,
            fld: scalar(1)?,
            dtw_pitch: scalar(2)?,
            dtw_yaw: scalar(3)?,
            dtw_roll: scalar(4)?,
            dtw_gaze_left: scalar(5)?,
            dtw_gaze_right: scalar(6)?,
            ..MetricReport::zero()
        };
        for (h, hist_field) in [
            &mut report.pred_gaze_left,
            &mut report.pred_gaze_right,
            &mut report.gt_gaze_left,
            &mut report.gt_gaze_right,
        ]
        .into_iter()
        .enumerate()
        {
            for zone in 0..ZONE_COUNT {
                let i = 7 + h * ZONE_COUNT + zone;
                hist_field[zone] = fields[i]
                    .parse()
                    .map_err(|_| Error::data(format!("bad count field {:?} in report CSV", fields[i])))?;
            }
        }
        Ok(report)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::data(format!("report JSON encoding failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<MetricReport> {
        serde_json::from_str(text).map_err(|e| Error::data(format!("report JSON decoding failed: {e}")))
    }

    fn zero() -> MetricReport {
        MetricReport {
            mld: 0.0,
            fld: 0.0,
            dtw_pitch: 0.0,
            dtw_yaw: 0.0,
            dtw_roll: 0.0,
            dtw_gaze_left: 0.0,
            dtw_gaze_right: 0.0,
            pred_gaze_left: [0; ZONE_COUNT],
            pred_gaze_right: [0; ZONE_COUNT],
            gt_gaze_left: [0; ZONE_COUNT],
            gt_gaze_right: [0; ZONE_COUNT],
        }
    }
}

/// Computes every metric over an aligned pair of cue tracks. The pupil grids
/// come from the identity face the tracks were generated for.
pub fn report(
    pred: &CueTrack,
    gt: &CueTrack,
    mouth: &Range<usize>,
    left_grid: &EyeGrid,
    right_grid: &EyeGrid,
) -> Result<MetricReport> {
    if pred.len() != gt.len() {
        return Err(Error::data(format!(
            "report needs aligned tracks, got {} vs {} frames",
            pred.len(),
            gt.len()
        )));
    }
    let (dtw_pitch, dtw_yaw, dtw_roll) = pose_dtw(&pred.poses, &gt.poses)?;
    let (dtw_gaze_left, dtw_gaze_right) = gaze_speed_dtw(&pred.gaze, &gt.gaze, left_grid, right_grid)?;
    let (pred_left, pred_right) = gaze_distribution(&pred.gaze)?;
    let (gt_left, gt_right) = gaze_distribution(&gt.gaze)?;
    let report = MetricReport {
        mld: mld(&pred.landmarks, &gt.landmarks, mouth)?,
        fld: fld(&pred.landmarks, &gt.landmarks)?,
        dtw_pitch,
        dtw_yaw,
        dtw_roll,
        dtw_gaze_left,
        dtw_gaze_right,
        pred_gaze_left: pred_left.counts,
        pred_gaze_right: pred_right.counts,
        gt_gaze_left: gt_left.counts,
        gt_gaze_right: gt_right.counts,
    };
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::default_identity_frame;
    use crate::gaze::build_eye_grid;
    use crate::geometry::{table, DEFAULT_CANONICAL_WIDTH};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_frames(n: usize, rng: &mut ChaCha20Rng) -> Vec<NormalizedLandmarkFrame> {
        (0..n)
            .map(|_| {
                let points = (0..LANDMARK_COUNT)
                    .map(|_| {
                        [
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.5..0.5),
                            rng.gen_range(-0.2..0.2),
                        ]
                    })
                    .collect();
                NormalizedLandmarkFrame::new(points, DEFAULT_CANONICAL_WIDTH)
                    .expect("random frame is structurally valid")
            })
            .collect()
    }

    #[test]
    fn landmark_distances_detect_a_uniform_shift_exactly() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let gt = random_frames(4, &mut rng);
        let shifted: Vec<NormalizedLandmarkFrame> = gt
            .iter()
            .map(|f| {
                let points = f.points.iter().map(|p| [p[0], p[1] + 1.0, p[2]]).collect();
                NormalizedLandmarkFrame::new(points, f.canonical_width).expect("shifted frame")
            })
            .collect();
        let mouth = table().mouth();
        assert!((mld(&gt, &gt, &mouth).expect("mld") - 0.0).abs() < 1e-15, "identical tracks give zero mld");
        assert!((fld(&gt, &gt).expect("fld") - 0.0).abs() < 1e-15, "identical tracks give zero fld");
        let m = mld(&shifted, &gt, &mouth).expect("shifted mld");
        let f = fld(&shifted, &gt).expect("shifted fld");
        assert!((m - 1.0).abs() < 1e-12, "uniform unit shift must give mld 1.0, got {m}");
        assert!((f - 1.0).abs() < 1e-12, "uniform unit shift must give fld 1.0, got {f}");
    }

    #[test]
    fn landmark_distances_match_a_double_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let gt = random_frames(5, &mut rng);
        let pred = random_frames(5, &mut rng);
        let mouth = table().mouth();
        let oracle = |points: &Range<usize>| {
            let mut total = 0.0;
            let mut count = 0usize;
            for (p, g) in pred.iter().zip(&gt) {
                for i in points.clone() {
                    let d: f64 = (0..3).map(|k| (p.points[i][k] - g.points[i][k]).powi(2)).sum();
                    total += d.sqrt();
                    count += 1;
                }
            }
            total / count as f64
        };
        let m = mld(&pred, &gt, &mouth).expect("mld");
        let f = fld(&pred, &gt).expect("fld");
        assert!((m - oracle(&mouth)).abs() < 1e-12, "mld must match the double-loop oracle");
        assert!((f - oracle(&(0..LANDMARK_COUNT))).abs() < 1e-12, "fld must match the double-loop oracle");
    }

    #[test]
    fn landmark_distance_errors_cover_misalignment_and_empty_input() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let gt = random_frames(3, &mut rng);
        let pred = random_frames(2, &mut rng);
        let mouth = table().mouth();
        let err = mld(&pred, &gt, &mouth).err().expect("length mismatch must fail");
        assert!(matches!(err, Error::Data(_)), "mismatch is a data error, got {err}");
        let err = fld(&[], &[]).err().expect("empty input must fail");
        assert!(matches!(err, Error::Domain(_)), "empty input is a domain error, got {err}");
    }

    #[test]
    fn dtw_handles_the_pinned_small_cases() {
        let a = [0.0, 1.0, 2.0];
        assert_eq!(dtw(&a, &a).expect("identical"), 0.0, "identical sequences cost 0");
        assert_eq!(dtw(&[0.0], &[1.0]).expect("single cell"), 1.0, "single-cell case is |0-1|");
        let err = dtw(&[], &[1.0]).err().expect("empty sequence must fail");
        assert!(matches!(err, Error::Domain(_)), "empty dtw input is a domain error, got {err}");
    }

    #[test]
    fn dtw_is_symmetric_nonnegative_and_scales_linearly() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..50 {
            let la = rng.gen_range(1..8);
            let lb = rng.gen_range(1..8);
            let a: Vec<f64> = (0..la).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..lb).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let d = dtw(&a, &b).expect("dtw");
            let rev = dtw(&b, &a).expect("reverse dtw");
            assert!(d >= 0.0, "dtw must be non-negative, got {d}");
            assert!((d - rev).abs() < 1e-12, "dtw must be symmetric: {d} vs {rev}");
            assert_eq!(dtw(&a, &a).expect("self dtw"), 0.0, "dtw(a, a) must be exactly 0");
            let c = 3.5;
            let ca: Vec<f64> = a.iter().map(|v| c * v).collect();
            let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
            let scaled = dtw(&ca, &cb).expect("scaled dtw");
            assert!((scaled - c * d).abs() < 1e-9, "dtw must scale linearly: {scaled} vs {}", c * d);
        }
    }

    #[test]
    fn dtw_agrees_with_brute_force_on_random_short_sequences() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..200 {
            let la = rng.gen_range(1..=6);
            let lb = rng.gen_range(1..=6);
            let a: Vec<f64> = (0..la).map(|_| rng.gen_range(0..3) as f64).collect();
            let b: Vec<f64> = (0..lb).map(|_| rng.gen_range(0..3) as f64).collect();
            let fast = dtw(&a, &b).expect("dp dtw");
            let slow = dtw_bruteforce(&a, &b).expect("brute-force dtw");
            assert!((fast - slow).abs() < 1e-12, "dp {fast} differs from enumeration {slow} on {a:?} vs {b:?}");
        }
    }

    #[test]
    fn pose_dtw_is_zero_on_identical_tracks_and_exact_on_constant_offsets() {
        let poses: Vec<HeadPose> = (0..6)
            .map(|i| HeadPose::new(0.1 * i as f64, -0.05 * i as f64, 0.02, [0.0, 0.0, 0.0]).expect("pose"))
            .collect();
        let (p, y, r) = pose_dtw(&poses, &poses).expect("self pose dtw");
        assert_eq!((p, y, r), (0.0, 0.0, 0.0), "identical pose tracks give a zero triple");

        let delta = 0.07;
        let base: Vec<HeadPose> =
            (0..5).map(|_| HeadPose::new(0.3, 0.1, -0.2, [0.0, 0.0, 0.0]).expect("pose")).collect();
        let offset: Vec<HeadPose> =
            (0..5).map(|_| HeadPose::new(0.3 + delta, 0.1, -0.2, [0.0, 0.0, 0.0]).expect("pose")).collect();
        let (p, y, r) = pose_dtw(&offset, &base).expect("offset pose dtw");
        assert!((y - 5.0 * delta).abs() < 1e-12, "constant yaw offset over 5 frames costs 5 delta, got {y}");
        assert_eq!((p, r), (0.0, 0.0), "untouched channels stay zero");
    }

    #[test]
    fn gaze_speed_dtw_composes_placement_displacement_and_dtw() {
        let face = default_identity_frame();
        let t = table();
        let left_grid = build_eye_grid(&face.points[t.eye_ring_left()]).expect("left grid");
        let right_grid = build_eye_grid(&face.points[t.eye_ring_right()]).expect("right grid");

        let constant: Vec<GazeLabel> = (0..4).map(|_| GazeLabel::center()).collect();
        let (l, r) = gaze_speed_dtw(&constant, &constant, &left_grid, &right_grid).expect("constant");
        assert_eq!((l, r), (0.0, 0.0), "constant labels have zero speed everywhere");

        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let random_labels = |rng: &mut ChaCha20Rng, n: usize| -> Vec<GazeLabel> {
            (0..n)
                .map(|_| {
                    GazeLabel::new(rng.gen_range(0..ZONE_COUNT) as u8, rng.gen_range(0..ZONE_COUNT) as u8)
                        .expect("zone in range")
                })
                .collect()
        };
        let pred = random_labels(&mut rng, 7);
        let gt = random_labels(&mut rng, 5);
        let (l, r) = gaze_speed_dtw(&pred, &gt, &left_grid, &right_grid).expect("random");
        let speeds = |labels: &[GazeLabel], grid: &EyeGrid, left: bool| -> Vec<f64> {
            labels
                .windows(2)
                .map(|w| {
                    let zone = |lab: &GazeLabel| if left { lab.left() } else { lab.right() };
                    let (x0, y0) = place_pupil(zone(&w[0]), grid).expect("pupil");
                    let (x1, y1) = place_pupil(zone(&w[1]), grid).expect("pupil");
                    ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
                })
                .collect()
        };
        let expect_l = dtw(&speeds(&pred, &left_grid, true), &speeds(&gt, &left_grid, true)).expect("dtw");
        let expect_r = dtw(&speeds(&pred, &right_grid, false), &speeds(&gt, &right_grid, false)).expect("dtw");
        assert!((l - expect_l).abs() < 1e-12, "left eye speed dtw must match the composition oracle");
        assert!((r - expect_r).abs() < 1e-12, "right eye speed dtw must match the composition oracle");

        let err = gaze_speed_dtw(&pred[..1], &gt, &left_grid, &right_grid)
            .err()
            .expect("single-frame input must fail");
        assert!(matches!(err, Error::Domain(_)), "too-short gaze track is a domain error, got {err}");
    }

    #[test]
    fn report_on_identical_tracks_is_zero_and_round_trips() {
        let face = default_identity_frame();
        let t = table();
        let left_grid = build_eye_grid(&face.points[t.eye_ring_left()]).expect("left grid");
        let right_grid = build_eye_grid(&face.points[t.eye_ring_right()]).expect("right grid");

        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let frames = random_frames(6, &mut rng);
        let poses: Vec<HeadPose> = (0..6)
            .map(|i| HeadPose::new(0.05 * i as f64, 0.01, -0.02, [1.0, 2.0, 0.0]).expect("pose"))
            .collect();
        let gaze: Vec<GazeLabel> =
            (0..6).map(|i| GazeLabel::new(i as u8 % 10, (i + 3) as u8 % 10).expect("label")).collect();
        let track = CueTrack::new(frames, poses, gaze).expect("track");

        let rep = report(&track, &track, &t.mouth(), &left_grid, &right_grid).expect("report");
        assert_eq!(
            (rep.mld, rep.fld, rep.dtw_pitch, rep.dtw_yaw, rep.dtw_roll),
            (0.0, 0.0, 0.0, 0.0, 0.0),
            "identical tracks must give all-zero distances"
        );
        assert_eq!((rep.dtw_gaze_left, rep.dtw_gaze_right), (0.0, 0.0));
        assert_eq!(rep.pred_gaze_left, rep.gt_gaze_left, "identical tracks share histograms");
        let total: u64 = rep.pred_gaze_left.iter().sum();
        assert_eq!(total, 6, "left histogram counts every frame once");

        let csv = rep.to_csv();
        assert_eq!(csv.lines().next().expect("header").split(',').count(), 47, "CSV has 47 columns");
        let back = MetricReport::from_csv(&csv).expect("CSV parses back");
        assert_eq!(back, rep, "CSV round-trip preserves the report exactly");
        let json = rep.to_json().expect("JSON encodes");
        assert_eq!(MetricReport::from_json(&json).expect("JSON parses"), rep, "JSON round-trip is exact");
    }

    #[test]
    fn report_fields_equal_the_individually_computed_metrics() {
        let face = default_identity_frame();
        let t = table();
        let left_grid = build_eye_grid(&face.points[t.eye_ring_left()]).expect("left grid");
        let right_grid = build_eye_grid(&face.points[t.eye_ring_right()]).expect("right grid");

        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let make = |rng: &mut ChaCha20Rng| -> CueTrack {
            let frames = random_frames(5, rng);
            let poses = (0..5)
                .map(|_| {
                    HeadPose::new(
                        rng.gen_range(-0.4..0.4),
                        rng.gen_range(-0.4..0.4),
                        rng.gen_range(-0.4..0.4),
                        [0.0, 0.0, 0.0],
                    )
                    .expect("pose")
                })
                .collect();
            let gaze = (0..5)
                .map(|_| {
                    GazeLabel::new(rng.gen_range(0..10) as u8, rng.gen_range(0..10) as u8).expect("label")
                })
                .collect();
            CueTrack::new(frames, poses, gaze).expect("track")
        };
        let pred = make(&mut rng);
        let gt = make(&mut rng);
        let rep = report(&pred, &gt, &t.mouth(), &left_grid, &right_grid).expect("report");

        assert_eq!(rep.mld, mld(&pred.landmarks, &gt.landmarks, &t.mouth()).expect("mld"));
        assert_eq!(rep.fld, fld(&pred.landmarks, &gt.landmarks).expect("fld"));
        let triple = pose_dtw(&pred.poses, &gt.poses).expect("pose dtw");
        assert_eq!((rep.dtw_pitch, rep.dtw_yaw, rep.dtw_roll), triple);
        let pair = gaze_speed_dtw(&pred.gaze, &gt.gaze, &left_grid, &right_grid).expect("gaze dtw");
        assert_eq!((rep.dtw_gaze_left, rep.dtw_gaze_right), pair);

        let err = report(&pred, &CueTrack::new(vec![], vec![], vec![]).expect("empty track"), &t.mouth(), &left_grid, &right_grid)
            .err()
            .expect("misaligned report must fail");
        assert!(matches!(err, Error::Data(_)), "misaligned tracks are a data error, got {err}");
    }
}
