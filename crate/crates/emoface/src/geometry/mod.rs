//! 3D landmark mathematics: the 147-point selection, frontalization into a
//! canonical space, Euler-angle rotation, and the relocation map that puts
//! synthesized faces back into image space.
//!
//! Canonical space is right-handed: x to the right, y up, z toward the
//! viewer. The nose tip sits at the origin and the inter-cheek segment spans
//! `canonical_width`. Rotation composes as R = Rz(roll) * Ry(yaw) * Rx(pitch);
//! positive pitch tilts the face upward.

mod table;

pub use table::{
    table, LandmarkTable, LANDMARK_COUNT, RAW_LANDMARK_COUNT, TABLE_FILE, TABLE_SHA256,
};

use crate::error::{Error, Result};
use crate::gaze::{self, GazeLabel};

pub type Point3 = [f64; 3];

pub const DEFAULT_CANONICAL_WIDTH: f64 = 1.0;
/// Canonical-to-image scaling: maps the unit-width face into a 256 px frame.
pub const DEFAULT_SCALE_FACTOR: f64 = 128.0;

/// Small fixed-size vector helpers used across the crate.
pub mod vec3 {
    use super::Point3;

    pub fn add(a: Point3, b: Point3) -> Point3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    pub fn sub(a: Point3, b: Point3) -> Point3 {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn scale(a: Point3, s: f64) -> Point3 {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    pub fn norm(a: Point3) -> f64 {
        (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
    }

    pub fn dist(a: Point3, b: Point3) -> f64 {
        norm(sub(a, b))
    }
}

fn all_finite(points: &[Point3]) -> bool {
    points.iter().all(|p| p.iter().all(|v| v.is_finite()))
}

/// Full detector mesh for one video frame, in image-space pixels.
#[derive(Clone, Debug)]
pub struct RawLandmarkFrame {
    pub points: Vec<Point3>,
    pub frame_index: usize,
}

impl RawLandmarkFrame {
    pub fn new(points: Vec<Point3>, frame_index: usize) -> Result<Self> {
        if points.len() != RAW_LANDMARK_COUNT {
            return Err(Error::structural(format!(
                "raw frame must hold {RAW_LANDMARK_COUNT} points, got {}",
                points.len()
            )));
        }
        if !all_finite(&points) {
            return Err(Error::numeric("raw frame contains non-finite coordinates"));
        }
        Ok(RawLandmarkFrame { points, frame_index })
    }
}

/// 147 points in canonical frontal space (the C_n of the pipeline).
///
/// Construction checks arity and finiteness only: sequentializer outputs are
/// approximately canonical until an explicit [`NormalizedLandmarkFrame::renormalize`].
/// [`NormalizedLandmarkFrame::validate_canonical`] applies the strict
/// nose-at-origin / width checks.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedLandmarkFrame {
    pub points: Vec<Point3>,
    pub canonical_width: f64,
}

impl NormalizedLandmarkFrame {
    pub fn new(points: Vec<Point3>, canonical_width: f64) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::structural(format!(
                "normalized frame must hold {LANDMARK_COUNT} points, got {}",
                points.len()
            )));
        }
        if !all_finite(&points) {
            return Err(Error::numeric("normalized frame contains non-finite coordinates"));
        }
        if !(canonical_width.is_finite() && canonical_width > 0.0) {
            return Err(Error::domain(format!("canonical width must be positive, got {canonical_width}")));
        }
        Ok(NormalizedLandmarkFrame { points, canonical_width })
    }

    /// Strict canonical-space invariants: nose tip at the origin within 1e-9,
    /// inter-cheek width equal to `canonical_width` within 1e-6.
    pub fn validate_canonical(&self) -> Result<()> {
        let t = table();
        let nose = self.points[t.nose_tip()];
        if vec3::norm(nose) > 1e-9 {
            return Err(Error::geometry(format!(
                "nose tip off origin by {:.3e}",
                vec3::norm(nose)
            )));
        }
        let width = vec3::dist(self.points[t.cheek_left()], self.points[t.cheek_right()]);
        if (width - self.canonical_width).abs() > 1e-6 {
            return Err(Error::geometry(format!(
                "face width {width} differs from canonical {}",
                self.canonical_width
            )));
        }
        Ok(())
    }

    /// Re-centers the nose tip on the origin and rescales the face to
    /// `canonical_width`. Applied to predicted frames, which drift slightly
    /// from the canonical invariants.
    pub fn renormalize(&self) -> Result<NormalizedLandmarkFrame> {
        let t = table();
        let nose = self.points[t.nose_tip()];
        let width = vec3::dist(self.points[t.cheek_left()], self.points[t.cheek_right()]);
        if width < 1e-12 {
            return Err(Error::geometry("degenerate face: zero inter-cheek width"));
        }
        let s = self.canonical_width / width;
        let points = self.points.iter().map(|&p| vec3::scale(vec3::sub(p, nose), s)).collect();
        NormalizedLandmarkFrame::new(points, self.canonical_width)
    }
}

/// Rigid head state: rotation as yaw/pitch/roll plus a 3-axis translation
/// (the m_n and b_n of the relocation map). Translation is in image-space
/// units, applied after scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub translation: [f64; 3],
}

impl HeadPose {
    pub fn new(yaw: f64, pitch: f64, roll: f64, translation: [f64; 3]) -> Result<Self> {
        for (name, v) in [("yaw", yaw), ("pitch", pitch), ("roll", roll)] {
            if !v.is_finite() {
                return Err(Error::numeric(format!("{name} is not finite")));
            }
            if !(-std::f64::consts::PI < v && v <= std::f64::consts::PI) {
                return Err(Error::domain(format!(
                    "{name} = {v} outside (-pi, pi]; wrap angles first"
                )));
            }
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("translation is not finite"));
        }
        Ok(HeadPose { yaw, pitch, roll, translation })
    }

    /// Builds a pose from unwrapped angles, folding each into (-pi, pi].
    pub fn from_unwrapped(yaw: f64, pitch: f64, roll: f64, translation: [f64; 3]) -> Result<Self> {
        HeadPose::new(wrap_angle(yaw), wrap_angle(pitch), wrap_angle(roll), translation)
    }

    pub fn identity() -> Self {
        HeadPose { yaw: 0.0, pitch: 0.0, roll: 0.0, translation: [0.0; 3] }
    }

    pub fn rotation(&self) -> RotationMatrix {
        euler_to_rotation(self.yaw, self.pitch, self.roll)
            .expect("pose angles are finite by construction")
    }
}

/// Folds an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Row-major 3x3 rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
        ]
    }

    pub fn transposed(&self) -> RotationMatrix {
        let m = &self.0;
        RotationMatrix([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max-abs entry of M * M^T - I; zero for a perfect rotation.
    pub fn orthonormality_error(&self) -> f64 {
        let m = &self.0;
        let mut err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - target).abs());
            }
        }
        err
    }
}

/// Rotation from Euler angles, composed as R = Rz(roll) * Ry(yaw) * Rx(pitch).
pub fn euler_to_rotation(yaw: f64, pitch: f64, roll: f64) -> Result<RotationMatrix> {
    if ![yaw, pitch, roll].iter().all(|v| v.is_finite()) {
        return Err(Error::numeric("rotation angles must be finite"));
    }
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    Ok(RotationMatrix([
        [cr * cy, cr * sy * sp - sr * cp, cr * sy * cp + sr * sp],
        [sr * cy, sr * sy * sp + cr * cp, sr * sy * cp - cr * sp],
        [-sy, cy * sp, cy * cp],
    ]))
}

/// Keeps the 147 pipeline points of a full detector frame, in table order.
pub fn select_147(raw: &RawLandmarkFrame) -> Result<Vec<Point3>> {
    if raw.points.len() != RAW_LANDMARK_COUNT {
        return Err(Error::structural(format!(
            "selection expects {RAW_LANDMARK_COUNT} points, got {}",
            raw.points.len()
        )));
    }
    if !all_finite(&raw.points) {
        return Err(Error::numeric("raw frame contains non-finite coordinates"));
    }
    Ok(table().raw_indices().iter().map(|&i| raw.points[i as usize]).collect())
}

/// Frontalizes an image-space 147-point frame: translate the nose tip to the
/// origin, undo the head rotation, then scale the face to `canonical_width`.
pub fn normalize_frame(
    points: &[Point3],
    pose: &HeadPose,
    canonical_width: f64,
) -> Result<NormalizedLandmarkFrame> {
    if points.len() != LANDMARK_COUNT {
        return Err(Error::structural(format!(
            "normalization expects {LANDMARK_COUNT} points, got {}",
            points.len()
        )));
    }
    if !all_finite(points) {
        return Err(Error::numeric("frame contains non-finite coordinates"));
    }
    let t = table();
    let inverse = pose.rotation().transposed();
    let nose = points[t.nose_tip()];
    let mut out: Vec<Point3> =
        points.iter().map(|&p| inverse.apply(vec3::sub(p, nose))).collect();
    let width = vec3::dist(out[t.cheek_left()], out[t.cheek_right()]);
    if width < 1e-12 {
        return Err(Error::geometry("degenerate face: zero inter-cheek width"));
    }
    let s = canonical_width / width;
    for p in &mut out {
        *p = vec3::scale(*p, s);
    }
    let frame = NormalizedLandmarkFrame::new(out, canonical_width)?;
    frame.validate_canonical()?;
    Ok(frame)
}

/// 147 points back in image space, with the pose and gaze that produced them.
#[derive(Clone, Debug)]
pub struct RelocatedLandmarkFrame {
    pub points: Vec<Point3>,
    pub source_pose: HeadPose,
    pub source_gaze: GazeLabel,
}

/// The relocation map: re-places both pupils at their gaze-zone cell centers,
/// then applies rotation, the canonical-to-image scale, and the translation.
pub fn relocate(
    norm: &NormalizedLandmarkFrame,
    pose: &HeadPose,
    gaze_label: &GazeLabel,
    scale_factor: f64,
) -> Result<RelocatedLandmarkFrame> {
    if !(scale_factor.is_finite() && scale_factor > 0.0) {
        return Err(Error::domain(format!("scale factor must be positive, got {scale_factor}")));
    }
    let t = table();
    let mut points = norm.points.clone();
    place_eye_pupil(&mut points, t.eye_ring_left(), t.iris_left(), gaze_label.left())?;
    place_eye_pupil(&mut points, t.eye_ring_right(), t.iris_right(), gaze_label.right())?;
    let rot = pose.rotation();
    for p in &mut points {
        *p = vec3::add(vec3::scale(rot.apply(*p), scale_factor), pose.translation);
    }
    Ok(RelocatedLandmarkFrame { points, source_pose: *pose, source_gaze: *gaze_label })
}

/// Moves one eye's 5 iris points rigidly so the iris center lands on the
/// requested zone's cell center, at the eye ring's mean depth.
fn place_eye_pupil(
    points: &mut [Point3],
    ring: std::ops::Range<usize>,
    iris: std::ops::Range<usize>,
    zone: u8,
) -> Result<()> {
    let ring_points: Vec<Point3> = ring.clone().map(|i| points[i]).collect();
    let grid = gaze::build_eye_grid(&ring_points)?;
    let (cx, cy) = gaze::place_pupil(zone, &grid)?;
    let z_eye = ring_points.iter().map(|p| p[2]).sum::<f64>() / ring_points.len() as f64;
    let center = points[iris.start];
    let delta = [cx - center[0], cy - center[1], z_eye - center[2]];
    for i in iris {
        points[i] = vec3::add(points[i], delta);
    }
    Ok(())
}

/// Mean eyelid separation over both eyes; the scalar the emotion profiles
/// modulate (narrowed vs widened eyes).
pub fn eye_opening(points: &[Point3]) -> Result<f64> {
    if points.len() != LANDMARK_COUNT {
        return Err(Error::structural(format!(
            "eye opening expects {LANDMARK_COUNT} points, got {}",
            points.len()
        )));
    }
    let t = table();
    let (lu, ll) = t.eyelid_left();
    let (ru, rl) = t.eyelid_right();
    Ok(0.5 * (vec3::dist(points[lu], points[ll]) + vec3::dist(points[ru], points[rl])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Procedural valid canonical face: nose at origin, cheeks at (+-0.5, 0, 0),
    /// elliptical eye rings with irises at the ring centers, everything else
    /// seeded noise. Enough structure for normalization and pupil placement.
    pub(crate) fn test_face(rng: &mut ChaCha20Rng) -> NormalizedLandmarkFrame {
        let t = table();
        let mut points = vec![[0.0; 3]; LANDMARK_COUNT];
        for p in points.iter_mut() {
            *p = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.5..0.3), rng.gen_range(-0.1..0.1)];
        }
        points[t.nose_tip()] = [0.0, 0.0, 0.0];
        points[t.cheek_left()] = [-0.5, 0.0, -0.05];
        points[t.cheek_right()] = [0.5, 0.0, -0.05];
        for (ring, iris, cx) in [
            (t.eye_ring_left(), t.iris_left(), -0.18),
            (t.eye_ring_right(), t.iris_right(), 0.18),
        ] {
            let n = ring.len();
            for (k, i) in ring.enumerate() {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                points[i] = [cx + 0.08 * a.cos(), 0.12 + 0.04 * a.sin(), 0.02];
            }
            let center = iris.start;
            points[center] = [cx, 0.12, 0.01];
            for (k, i) in iris.skip(1).enumerate() {
                let a = std::f64::consts::FRAC_PI_2 * k as f64;
                points[i] = [cx + 0.02 * a.cos(), 0.12 + 0.02 * a.sin(), 0.01];
            }
        }
        let frame = NormalizedLandmarkFrame::new(points, 1.0).unwrap();
        frame.validate_canonical().unwrap();
        frame
    }

    pub(crate) fn random_pose(rng: &mut ChaCha20Rng) -> HeadPose {
        HeadPose::new(
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-0.6..0.6),
            [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        )
        .unwrap()
    }

    #[test]
    fn selection_is_pure_indexing() {
        let points: Vec<Point3> = (0..RAW_LANDMARK_COUNT).map(|i| [i as f64, 0.0, 0.0]).collect();
        let raw = RawLandmarkFrame::new(points, 0).unwrap();
        let sel = select_147(&raw).unwrap();
        let t = table();
        for (j, p) in sel.iter().enumerate() {
            assert_eq!(p[0], t.raw_indices()[j] as f64);
        }
    }

    #[test]
    fn selection_rejects_wrong_arity() {
        let points: Vec<Point3> = vec![[0.0; 3]; 477];
        assert!(matches!(RawLandmarkFrame::new(points, 0), Err(Error::Structural(_))));

        let selected = RawLandmarkFrame {
            points: vec![[0.0; 3]; LANDMARK_COUNT],
            frame_index: 0,
        };
        assert!(matches!(select_147(&selected), Err(Error::Structural(_))));
    }

    #[test]
    fn euler_identity_and_half_turn() {
        let id = euler_to_rotation(0.0, 0.0, 0.0).unwrap();
        assert_eq!(id, RotationMatrix::identity());
        let half = euler_to_rotation(0.0, 0.0, std::f64::consts::PI).unwrap();
        let p = half.apply([1.0, 0.0, 0.0]);
        assert!((p[0] + 1.0).abs() < 1e-12 && p[1].abs() < 1e-12 && p[2].abs() < 1e-12);
        assert!(matches!(euler_to_rotation(f64::NAN, 0.0, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn euler_matches_single_axis_product_oracle() {
        // Independent oracle: numerically multiply the three single-axis
        // matrices instead of using the expanded closed form.
        let (yaw, pitch, roll) = (0.3, -0.2, 0.1);
        let (sy, cy) = (yaw as f64).sin_cos();
        let (sp, cp) = (pitch as f64).sin_cos();
        let (sr, cr) = (roll as f64).sin_cos();
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut out = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            out
        };
        let oracle = mul(rz, mul(ry, rx));
        let got = euler_to_rotation(yaw, pitch, roll).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (got.0[i][j] - oracle[i][j]).abs() < 1e-15,
                    "entry ({i},{j}): {} vs oracle {}",
                    got.0[i][j],
                    oracle[i][j]
                );
            }
        }
        assert!(got.orthonormality_error() < 1e-12);
    }

    #[test]
    fn rotations_stay_orthonormal() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r = euler_to_rotation(
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
            .unwrap();
            assert!(r.orthonormality_error() < 1e-9);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_is_fixed_point_on_canonical_frames() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let face = test_face(&mut rng);
        let out = normalize_frame(&face.points, &HeadPose::identity(), 1.0).unwrap();
        for (a, b) in out.points.iter().zip(&face.points) {
            assert!(vec3::dist(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn normalize_rejects_degenerate_faces() {
        let points = vec![[3.0, 1.0, 2.0]; LANDMARK_COUNT];
        let err = normalize_frame(&points, &HeadPose::identity(), 1.0);
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn relocate_then_normalize_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let t = table();
        for _ in 0..100 {
            let face = test_face(&mut rng);
            let pose = random_pose(&mut rng);
            let reloc = relocate(&face, &pose, &GazeLabel::center(), 128.0).unwrap();
            let back = normalize_frame(&reloc.points, &pose, face.canonical_width).unwrap();
            for (i, (a, b)) in back.points.iter().zip(&face.points).enumerate() {
                if t.is_pupil_position(i) {
                    continue;
                }
                assert!(
                    vec3::dist(*a, *b) < 1e-6,
                    "point {i} moved by {:.3e} through the round trip",
                    vec3::dist(*a, *b)
                );
            }
        }
    }

    #[test]
    fn relocate_identity_moves_only_pupils() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let face = test_face(&mut rng);
        let t = table();
        let out = relocate(&face, &HeadPose::identity(), &GazeLabel::center(), 1.0).unwrap();
        for i in 0..LANDMARK_COUNT {
            if !t.is_pupil_position(i) {
                assert!(vec3::dist(out.points[i], face.points[i]) < 1e-12);
            }
        }
        for (ring, iris, zone) in [
            (t.eye_ring_left(), t.iris_left(), GazeLabel::center().left()),
            (t.eye_ring_right(), t.iris_right(), GazeLabel::center().right()),
        ] {
            let ring_points: Vec<Point3> = ring.map(|i| face.points[i]).collect();
            let grid = gaze::build_eye_grid(&ring_points).unwrap();
            let (cx, cy) = gaze::place_pupil(zone, &grid).unwrap();
            let iris_center = out.points[iris.start];
            assert!((iris_center[0] - cx).abs() < 1e-12);
            assert!((iris_center[1] - cy).abs() < 1e-12);
        }
    }

    #[test]
    fn relocate_pure_translation_shifts_everything() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let face = test_face(&mut rng);
        let pose = HeadPose::new(0.0, 0.0, 0.0, [1.0, 2.0, 3.0]).unwrap();
        let base = relocate(&face, &HeadPose::identity(), &GazeLabel::center(), 1.0).unwrap();
        let moved = relocate(&face, &pose, &GazeLabel::center(), 1.0).unwrap();
        for (a, b) in moved.points.iter().zip(&base.points) {
            assert!(vec3::dist(*a, vec3::add(*b, [1.0, 2.0, 3.0])) < 1e-12);
        }
    }

    #[test]
    fn relocate_matches_dense_matmul_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let t = table();
        for _ in 0..20 {
            // Pin pupils to the label's cell centers first so the oracle is a
            // plain affine map of the whole frame.
            let label = GazeLabel::new(rng.gen_range(0..10), rng.gen_range(0..10)).unwrap();
            let mut face = test_face(&mut rng);
            let pinned = relocate(&face, &HeadPose::identity(), &label, 1.0).unwrap();
            face.points = pinned.points;

            let pose = random_pose(&mut rng);
            let s = rng.gen_range(1.0..200.0);
            let out = relocate(&face, &pose, &label, s).unwrap();

            let m = pose.rotation().0;
            for (i, &p) in face.points.iter().enumerate() {
                let mut oracle = [0.0; 3];
                for r in 0..3 {
                    oracle[r] = s * (m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2])
                        + pose.translation[r];
                }
                let d = vec3::dist(out.points[i], oracle);
                assert!(d < 1e-12, "point {} off oracle by {d:.3e}", t.raw_indices()[i]);
            }
        }
    }

    #[test]
    fn relocate_is_linear_on_non_pupil_points() {
        let mut rng = ChaCha20Rng::seed_from_u64(88);
        let t = table();
        for _ in 0..20 {
            let a = test_face(&mut rng);
            let b = test_face(&mut rng);
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let mixed_points: Vec<Point3> = a
                .points
                .iter()
                .zip(&b.points)
                .map(|(pa, pb)| {
                    vec3::add(vec3::scale(*pa, alpha), vec3::scale(*pb, 1.0 - alpha))
                })
                .collect();
            let mixed = NormalizedLandmarkFrame::new(mixed_points, 1.0).unwrap();
            let pose = random_pose(&mut rng);
            let label = GazeLabel::center();
            let ra = relocate(&a, &pose, &label, 128.0).unwrap();
            let rb = relocate(&b, &pose, &label, 128.0).unwrap();
            let rm = relocate(&mixed, &pose, &label, 128.0).unwrap();
            for i in 0..LANDMARK_COUNT {
                if t.is_pupil_position(i) {
                    continue;
                }
                let expect = vec3::add(
                    vec3::scale(ra.points[i], alpha),
                    vec3::scale(rb.points[i], 1.0 - alpha),
                );
                assert!(vec3::dist(rm.points[i], expect) < 1e-9);
            }
        }
    }

    #[test]
    fn angle_wrapping_folds_into_half_open_interval() {
        use std::f64::consts::PI;
        assert!((wrap_angle(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        let pose = HeadPose::from_unwrapped(0.0, PI + 0.1, 0.0, [0.0; 3]).unwrap();
        assert!((pose.pitch - (-PI + 0.1)).abs() < 1e-12);
        assert!(matches!(
            HeadPose::new(0.0, PI + 0.1, 0.0, [0.0; 3]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn eye_opening_tracks_lid_distance() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let face = test_face(&mut rng);
        let base = eye_opening(&face.points).unwrap();
        assert!(base > 0.0);
        let t = table();
        let mut widened = face.points.clone();
        let (lu, ll) = t.eyelid_left();
        let (ru, rl) = t.eyelid_right();
        for (u, l) in [(lu, ll), (ru, rl)] {
            let mid = vec3::scale(vec3::add(widened[u], widened[l]), 0.5);
            widened[u] = vec3::add(mid, vec3::scale(vec3::sub(widened[u], mid), 2.0));
            widened[l] = vec3::add(mid, vec3::scale(vec3::sub(widened[l], mid), 2.0));
        }
        let wider = eye_opening(&widened).unwrap();
        assert!((wider - 2.0 * base).abs() < 1e-9);
    }
}
