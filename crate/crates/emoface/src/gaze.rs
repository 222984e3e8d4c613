//! Eye-region gaze discretization: a 2x5 grid over each eye's bounding box,
//! per-eye zone assignment, the joint two-eye label codec, and pupil
//! placement (the inverse map used during synthesis).
//!
//! Zones are numbered row-major: zone = row * 5 + col, row 0 at the lower
//! y edge of the box. The joint class of a frame is v = u_left + 10 * u_right.

use crate::error::{Error, Result};

pub const GRID_ROWS: usize = 2;
pub const GRID_COLS: usize = 5;
/// Zones per eye (S in the joint-label formula v = u_left + S * u_right).
pub const ZONE_COUNT: usize = GRID_ROWS * GRID_COLS;
/// Joint classes over both eyes.
pub const JOINT_CLASSES: usize = ZONE_COUNT * ZONE_COUNT;
/// Default "straight ahead" zone: middle column of the row the iris rests in
/// on the template face. A 2x5 grid has no exact center cell; this is the
/// pinned convention.
pub const CENTER_ZONE: u8 = 2;

/// Axis-aligned 2x5 cell partition of one eye's bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl EyeGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("eye grid bounds must be finite"));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::geometry(format!(
                "eye grid box has no area: x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
            )));
        }
        Ok(EyeGrid { x_min, x_max, y_min, y_max })
    }

    pub fn cell_width(&self) -> f64 {
        (self.x_max - self.x_min) / GRID_COLS as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.y_max - self.y_min) / GRID_ROWS as f64
    }
}

/// Per-eye gaze zones for one frame. Construction enforces the zone range;
/// the joint class is always derived, so v = left + 10 * right cannot drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GazeLabel {
    left: u8,
    right: u8,
}

impl GazeLabel {
    pub fn new(left: u8, right: u8) -> Result<Self> {
        if left as usize >= ZONE_COUNT || right as usize >= ZONE_COUNT {
            return Err(Error::domain(format!(
                "gaze zones must be in [0, {}], got ({left}, {right})",
                ZONE_COUNT - 1
            )));
        }
        Ok(GazeLabel { left, right })
    }

    pub fn from_joint(v: u8) -> Result<Self> {
        let (left, right) = decode_joint(v)?;
        Ok(GazeLabel { left, right })
    }

    pub fn left(&self) -> u8 {
        self.left
    }

    pub fn right(&self) -> u8 {
        self.right
    }

    pub fn joint(&self) -> u8 {
        self.left + ZONE_COUNT as u8 * self.right
    }

    /// Both eyes on the pinned straight-ahead zone.
    pub fn center() -> Self {
        GazeLabel { left: CENTER_ZONE, right: CENTER_ZONE }
    }
}

/// Zone histogram for one eye over a label sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeDistribution {
    pub counts: [u64; ZONE_COUNT],
    pub frequencies: [f64; ZONE_COUNT],
}

impl GazeDistribution {
    fn from_zones<I: Iterator<Item = u8>>(zones: I) -> Self {
        let mut counts = [0u64; ZONE_COUNT];
        for z in zones {
            counts[z as usize] += 1;
        }
        let total: u64 = counts.iter().sum();
        let mut frequencies = [0.0; ZONE_COUNT];
        for (f, &c) in frequencies.iter_mut().zip(&counts) {
            *f = c as f64 / total as f64;
        }
        GazeDistribution { counts, frequencies }
    }
}

/// Bounding-box grid of an eye ring. Points are (x, y, z); depth is ignored.
pub fn build_eye_grid(ring: &[[f64; 3]]) -> Result<EyeGrid> {
    if ring.len() < 4 {
        return Err(Error::structural(format!(
            "eye ring needs at least 4 points, got {}",
            ring.len()
        )));
    }
    for p in ring {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("eye ring contains non-finite coordinates"));
        }
    }
    // Reject rings whose x/y projection is a line segment or a point: the
    // bounding box may still have area for a diagonal segment, but the ring
    // itself is degenerate.
    let a = ring[0];
    let far = ring
        .iter()
        .max_by(|p, q| {
            let dp = (p[0] - a[0]).hypot(p[1] - a[1]);
            let dq = (q[0] - a[0]).hypot(q[1] - a[1]);
            dp.partial_cmp(&dq).unwrap()
        })
        .unwrap();
    let max_cross = ring
        .iter()
        .map(|p| ((far[0] - a[0]) * (p[1] - a[1]) - (far[1] - a[1]) * (p[0] - a[0])).abs())
        .fold(0.0, f64::max);
    if max_cross <= 1e-12 {
        return Err(Error::geometry("eye ring points are collinear"));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in ring {
        x_min = x_min.min(p[0]);
        x_max = x_max.max(p[0]);
        y_min = y_min.min(p[1]);
        y_max = y_max.max(p[1]);
    }
    EyeGrid::new(x_min, x_max, y_min, y_max)
}

/// Cell index of a pupil position. Points outside the box clamp to the
/// nearest cell; points on an interior boundary go to the lower-indexed cell.
pub fn assign_zone(pupil: (f64, f64), grid: &EyeGrid) -> u8 {
    let col = axis_cell(pupil.0, grid.x_min, grid.x_max, GRID_COLS);
    let row = axis_cell(pupil.1, grid.y_min, grid.y_max, GRID_ROWS);
    (row * GRID_COLS + col) as u8
}

fn axis_cell(v: f64, min: f64, max: f64, cells: usize) -> usize {
    let rel = ((v - min) / (max - min)).clamp(0.0, 1.0);
    // ceil puts exact boundaries k/cells into cell k-1 (the lower index).
    let c = (rel * cells as f64).ceil() as isize - 1;
    c.clamp(0, cells as isize - 1) as usize
}

/// Center of a zone's cell; the inverse of `assign_zone` on zone indices.
pub fn place_pupil(zone: u8, grid: &EyeGrid) -> Result<(f64, f64)> {
    if zone as usize >= ZONE_COUNT {
        return Err(Error::domain(format!(
            "zone must be in [0, {}], got {zone}",
            ZONE_COUNT - 1
        )));
    }
    let row = zone as usize / GRID_COLS;
    let col = zone as usize % GRID_COLS;
    let x = grid.x_min + (col as f64 + 0.5) * grid.cell_width();
    let y = grid.y_min + (row as f64 + 0.5) * grid.cell_height();
    Ok((x, y))
}

/// Zone of the iris center within the grid spanned by its eye ring.
pub fn classify_gaze_geometric(iris_center: (f64, f64), ring: &[[f64; 3]]) -> Result<u8> {
    let grid = build_eye_grid(ring)?;
    Ok(assign_zone(iris_center, &grid))
}

pub fn encode_joint(u_left: u8, u_right: u8) -> Result<u8> {
    Ok(GazeLabel::new(u_left, u_right)?.joint())
}

pub fn decode_joint(v: u8) -> Result<(u8, u8)> {
    if v as usize >= JOINT_CLASSES {
        return Err(Error::domain(format!(
            "joint gaze class must be in [0, {}], got {v}",
            JOINT_CLASSES - 1
        )));
    }
    Ok((v % ZONE_COUNT as u8, v / ZONE_COUNT as u8))
}

/// Label of the maximal entry of a 100-class probability vector. Ties break
/// toward the lowest index. The result only depends on the argmax, so any
/// positive rescaling of the vector yields the same label.
pub fn classify_gaze(probabilities: &[f64]) -> Result<GazeLabel> {
    if probabilities.len() != JOINT_CLASSES {
        return Err(Error::structural(format!(
            "probability vector must have {JOINT_CLASSES} entries, got {}",
            probabilities.len()
        )));
    }
    let mut sum = 0.0;
    for &p in probabilities {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::domain(format!("malformed probability entry {p}")));
        }
        sum += p;
    }
    if sum <= 0.0 {
        return Err(Error::domain("probability vector sums to zero"));
    }
    let mut best = 0usize;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    GazeLabel::from_joint(best as u8)
}

/// Per-eye zone histograms of a label sequence: (left eye, right eye).
pub fn gaze_distribution(labels: &[GazeLabel]) -> Result<(GazeDistribution, GazeDistribution)> {
    if labels.is_empty() {
        return Err(Error::domain("gaze distribution of an empty sequence"));
    }
    let left = GazeDistribution::from_zones(labels.iter().map(|l| l.left));
    let right = GazeDistribution::from_zones(labels.iter().map(|l| l.right));
    Ok((left, right))
}
