//! Procedural canonical face used by the synthetic corpus: a single fixed
//! identity whose eye opening, mouth opening, and pupil zones are the only
//! moving parts. All coordinates are canonical (nose tip at the origin,
//! cheeks at x = -0.5 and +0.5, y up, z toward the viewer).

use crate::error::Result;
use crate::gaze::{self, GazeLabel};
use crate::geometry::{table, NormalizedLandmarkFrame, Point3, DEFAULT_CANONICAL_WIDTH, LANDMARK_COUNT};
use std::f64::consts::{PI, TAU};
use std::ops::Range;

/// Eyelid separation at eye-opening scale 1 (twice the eye ring's y radius).
pub const BASE_EYE_OPENING: f64 = 0.09;

/// Inner-lip vertical gap when the mouth is fully closed.
pub const MOUTH_GAP_MIN: f64 = 0.016;

/// Mouth opening added per unit of audio envelope at mouth gain 1.
pub const MOUTH_AUDIO_SCALE: f64 = 0.12;

/// Mouth opening of the default identity frame (a relaxed, slightly
/// parted mouth).
pub const BASE_MOUTH_OPENING: f64 = 0.05;

const FACE_OVAL_CENTER: (f64, f64, f64) = (0.0, -0.02, -0.08);
const FACE_OVAL_RADII: (f64, f64) = (0.47, 0.62);
const LIPS_CENTER: (f64, f64) = (0.0, -0.30);
const LIPS_OUTER_RX: f64 = 0.17;
const LIPS_INNER_RX: f64 = 0.115;
const EYE_CENTER_LEFT: (f64, f64, f64) = (-0.19, 0.13, 0.0);
const EYE_CENTER_RIGHT: (f64, f64, f64) = (0.19, 0.13, 0.0);
const EYE_RX: f64 = 0.085;
const CHEEK_Y: f64 = 0.02;
const CHEEK_Z: f64 = -0.08;
const BROW_Y: f64 = 0.245;
const BROW_HALF_SPAN: f64 = 0.115;
const BROW_BUMP: f64 = 0.035;
const IRIS_SATELLITES: [(f64, f64); 4] = [(0.018, 0.0), (-0.018, 0.0), (0.0, 0.012), (0.0, -0.012)];

/// Nose polyline shape; the tip entry is overridden to the exact origin.
const NOSE_SHAPE: [Point3; 9] = [
    [0.0, 0.0, 0.0],
    [0.0, -0.055, 0.045],
    [0.0, 0.14, 0.07],
    [0.0, 0.07, 0.08],
    [0.0, 0.205, 0.06],
    [-0.07, -0.04, 0.01],
    [0.0, 0.27, 0.05],
    [0.0, 0.33, 0.04],
    [0.07, -0.04, 0.01],
];

fn ellipse_ring(points: &mut [Point3], span: Range<usize>, cx: f64, cy: f64, rx: f64, ry: f64, z: f64) {
    let n = span.len();
    for (k, pos) in span.enumerate() {
        let theta = TAU * k as f64 / n as f64;
        points[pos] = [cx + rx * theta.cos(), cy + ry * theta.sin(), z];
    }
}

/// One canonical face frame. `eye_ry` is each eye ring's y radius (half the
/// eyelid separation), `mouth_open` the inner-lip gap beyond the closed-mouth
/// minimum; pupils sit exactly on the gaze label's cell centers.
pub fn synthesize_face(eye_ry: f64, mouth_open: f64, gaze_label: &GazeLabel) -> Result<Vec<Point3>> {
    assert!(eye_ry > 0.0 && eye_ry.is_finite(), "eye ring y radius must be positive, got {eye_ry}");
    assert!(
        mouth_open >= 0.0 && mouth_open.is_finite(),
        "mouth opening must be non-negative, got {mouth_open}"
    );
    let t = table();
    let mut points = vec![[0.0; 3]; LANDMARK_COUNT];

    let (ocx, ocy, ocz) = FACE_OVAL_CENTER;
    ellipse_ring(&mut points, t.face_oval(), ocx, ocy, FACE_OVAL_RADII.0, FACE_OVAL_RADII.1, ocz);
    let (mx, my) = LIPS_CENTER;
    let outer_ry = 0.045 + 0.5 * mouth_open;
    let inner_ry = 0.5 * (MOUTH_GAP_MIN + mouth_open);
    ellipse_ring(&mut points, t.lips_outer(), mx, my, LIPS_OUTER_RX, outer_ry, 0.01);
    ellipse_ring(&mut points, t.lips_inner(), mx, my, LIPS_INNER_RX, inner_ry, 0.005);

    for (ring, brows, (ecx, ecy, ecz)) in [
        (t.eye_ring_left(), t.brow_left(), EYE_CENTER_LEFT),
        (t.eye_ring_right(), t.brow_right(), EYE_CENTER_RIGHT),
    ] {
        ellipse_ring(&mut points, ring, ecx, ecy, EYE_RX, eye_ry, ecz);
        let n = brows.len();
        for (k, pos) in brows.enumerate() {
            let frac = k as f64 / (n - 1) as f64;
            points[pos] = [
                ecx - BROW_HALF_SPAN + 2.0 * BROW_HALF_SPAN * frac,
                BROW_Y + BROW_BUMP * (PI * frac).sin(),
                0.02,
            ];
        }
    }

    for (k, pos) in t.nose().enumerate() {
        points[pos] = NOSE_SHAPE[k];
    }

    // Exact canonical anchors.
    points[t.nose_tip()] = [0.0, 0.0, 0.0];
    points[t.cheek_left()] = [-0.5 * DEFAULT_CANONICAL_WIDTH, CHEEK_Y, CHEEK_Z];
    points[t.cheek_right()] = [0.5 * DEFAULT_CANONICAL_WIDTH, CHEEK_Y, CHEEK_Z];
    let (lu, ll) = t.eyelid_left();
    points[lu] = [EYE_CENTER_LEFT.0, EYE_CENTER_LEFT.1 + eye_ry, EYE_CENTER_LEFT.2];
    points[ll] = [EYE_CENTER_LEFT.0, EYE_CENTER_LEFT.1 - eye_ry, EYE_CENTER_LEFT.2];
    let (ru, rl) = t.eyelid_right();
    points[ru] = [EYE_CENTER_RIGHT.0, EYE_CENTER_RIGHT.1 + eye_ry, EYE_CENTER_RIGHT.2];
    points[rl] = [EYE_CENTER_RIGHT.0, EYE_CENTER_RIGHT.1 - eye_ry, EYE_CENTER_RIGHT.2];

    for (ring, iris, zone) in [
        (t.eye_ring_left(), t.iris_left(), gaze_label.left()),
        (t.eye_ring_right(), t.iris_right(), gaze_label.right()),
    ] {
        let ring_points: Vec<Point3> = ring.clone().map(|i| points[i]).collect();
        let grid = gaze::build_eye_grid(&ring_points)?;
        let (cx, cy) = gaze::place_pupil(zone, &grid)?;
        let z = ring_points.iter().map(|p| p[2]).sum::<f64>() / ring_points.len() as f64;
        let mut iris_iter = iris.clone();
        let center_pos = iris_iter.next().expect("iris span holds five points");
        points[center_pos] = [cx, cy, z];
        for (pos, (dx, dy)) in iris_iter.zip(IRIS_SATELLITES) {
            points[pos] = [cx + dx, cy + dy, z];
        }
    }

    Ok(points)
}

/// Vertical extent of the inner-lip ring: the mouth-opening scalar the
/// synthetic corpus couples to the audio envelope.
pub fn mouth_opening(points: &[Point3]) -> Result<f64> {
    let frame = NormalizedLandmarkFrame::new(points.to_vec(), DEFAULT_CANONICAL_WIDTH)?;
    let t = table();
    let ys: Vec<f64> = t.lips_inner().map(|i| frame.points[i][1]).collect();
    let max = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(max - min)
}

/// The fixed identity used when no identity record is supplied: neutral eye
/// opening, a relaxed mouth, pupils centered.
pub fn default_identity_frame() -> NormalizedLandmarkFrame {
    let points = synthesize_face(0.5 * BASE_EYE_OPENING, BASE_MOUTH_OPENING, &GazeLabel::center())
        .expect("the fixed identity face is non-degenerate");
    NormalizedLandmarkFrame::new(points, DEFAULT_CANONICAL_WIDTH)
        .expect("the fixed identity face is canonical")
}
