//! The frozen 147-landmark index table.
//!
//! The table file pins which of the detector's 478 mesh points the pipeline
//! keeps, in which order, and what anatomical group each belongs to. Every
//! semantic lookup (nose tip, cheeks, eye rings, irises, mouth) resolves
//! through this table; nothing else in the crate hardcodes positions.

use std::ops::Range;
use std::sync::OnceLock;

pub const LANDMARK_COUNT: usize = 147;
pub const RAW_LANDMARK_COUNT: usize = 478;

/// Raw mesh index of the nose tip.
pub const RAW_NOSE_TIP: u16 = 1;
/// Raw mesh indices of the cheek pair whose distance defines face width.
pub const RAW_CHEEK_LEFT: u16 = 234;
pub const RAW_CHEEK_RIGHT: u16 = 454;
/// Raw mesh indices of the upper/lower eyelid midpoints per eye.
pub const RAW_EYELID_LEFT: (u16, u16) = (159, 145);
pub const RAW_EYELID_RIGHT: (u16, u16) = (386, 374);
/// Raw mesh indices of the iris centers.
pub const RAW_IRIS_CENTER_LEFT: u16 = 468;
pub const RAW_IRIS_CENTER_RIGHT: u16 = 473;

pub const TABLE_FILE: &str = include_str!("../../data/landmark_indices.txt");

/// Expected SHA-256 of the table file; the table is versioned data, not code,
/// so any edit must be deliberate enough to update this pin.
pub const TABLE_SHA256: &str = "3eb1b9813420194628e959e47961099401d20b1047a74be4ccbf20c4f2a1d6e1";

const GROUP_LAYOUT: [(&str, usize); 10] = [
    ("face_oval", 36),
    ("lips_outer", 20),
    ("lips_inner", 20),
    ("eye_left", 16),
    ("eye_right", 16),
    ("brow_left", 10),
    ("brow_right", 10),
    ("nose", 9),
    ("iris_left", 5),
    ("iris_right", 5),
];

/// Parsed index table. "Positions" are indices into the 147-point frames;
/// "raw" indices address the original 478-point mesh. Left/right name the
/// canonical-space side (x < 0 is left).
#[derive(Debug)]
pub struct LandmarkTable {
    raw: Vec<u16>,
    group_spans: Vec<(String, Range<usize>)>,
    nose_tip: usize,
    cheek_left: usize,
    cheek_right: usize,
    eyelid_left: (usize, usize),
    eyelid_right: (usize, usize),
    iris_center_left: usize,
    iris_center_right: usize,
}

impl LandmarkTable {
    fn parse(text: &str) -> LandmarkTable {
        let mut raw = Vec::with_capacity(LANDMARK_COUNT);
        let mut group_spans: Vec<(String, Range<usize>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let idx: u16 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .unwrap_or_else(|| panic!("landmark table line {}: bad index", lineno + 1));
            let group = parts
                .next()
                .unwrap_or_else(|| panic!("landmark table line {}: missing group", lineno + 1));
            assert!(parts.next().is_none(), "landmark table line {}: trailing tokens", lineno + 1);
            assert!((idx as usize) < RAW_LANDMARK_COUNT, "raw index {idx} out of range");
            let pos = raw.len();
            raw.push(idx);
            match group_spans.last_mut() {
                Some((name, span)) if name == group => span.end = pos + 1,
                _ => group_spans.push((group.to_string(), pos..pos + 1)),
            }
        }
        assert_eq!(raw.len(), LANDMARK_COUNT, "landmark table must hold {LANDMARK_COUNT} entries");
        let mut seen = [false; RAW_LANDMARK_COUNT];
        for &i in &raw {
            assert!(!seen[i as usize], "raw index {i} listed twice");
            seen[i as usize] = true;
        }
        assert_eq!(group_spans.len(), GROUP_LAYOUT.len(), "unexpected group count");
        for ((name, span), (want_name, want_len)) in group_spans.iter().zip(GROUP_LAYOUT) {
            assert_eq!(name, want_name, "group order must match the frozen layout");
            assert_eq!(span.len(), want_len, "group {name} has the wrong size");
        }

        let pos = |raw_idx: u16| {
            raw.iter()
                .position(|&r| r == raw_idx)
                .unwrap_or_else(|| panic!("required raw index {raw_idx} missing from table"))
        };
        LandmarkTable {
            nose_tip: pos(RAW_NOSE_TIP),
            cheek_left: pos(RAW_CHEEK_LEFT),
            cheek_right: pos(RAW_CHEEK_RIGHT),
            eyelid_left: (pos(RAW_EYELID_LEFT.0), pos(RAW_EYELID_LEFT.1)),
            eyelid_right: (pos(RAW_EYELID_RIGHT.0), pos(RAW_EYELID_RIGHT.1)),
            iris_center_left: pos(RAW_IRIS_CENTER_LEFT),
            iris_center_right: pos(RAW_IRIS_CENTER_RIGHT),
            raw,
            group_spans,
        }
    }

    /// Raw mesh indices in canonical 147-point order.
    pub fn raw_indices(&self) -> &[u16] {
        &self.raw
    }

    pub fn position_of_raw(&self, raw_idx: u16) -> Option<usize> {
        self.raw.iter().position(|&r| r == raw_idx)
    }

    fn span(&self, name: &str) -> Range<usize> {
        self.group_spans
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.clone())
            .expect("group name is part of the frozen layout")
    }

    /// Positions of the outer + inner lip rings (the mouth metric subset).
    pub fn mouth(&self) -> Range<usize> {
        let outer = self.span("lips_outer");
        let inner = self.span("lips_inner");
        assert_eq!(outer.end, inner.start, "lip groups are contiguous in the frozen layout");
        outer.start..inner.end
    }

    pub fn face_oval(&self) -> Range<usize> {
        self.span("face_oval")
    }

    pub fn lips_outer(&self) -> Range<usize> {
        self.span("lips_outer")
    }

    pub fn lips_inner(&self) -> Range<usize> {
        self.span("lips_inner")
    }

    pub fn eye_ring_left(&self) -> Range<usize> {
        self.span("eye_left")
    }

    pub fn eye_ring_right(&self) -> Range<usize> {
        self.span("eye_right")
    }

    pub fn brow_left(&self) -> Range<usize> {
        self.span("brow_left")
    }

    pub fn brow_right(&self) -> Range<usize> {
        self.span("brow_right")
    }

    /// The nose polyline positions; the tip is one of them.
    pub fn nose(&self) -> Range<usize> {
        self.span("nose")
    }

    /// Iris positions per eye; the center is the first entry of each span.
    pub fn iris_left(&self) -> Range<usize> {
        self.span("iris_left")
    }

    pub fn iris_right(&self) -> Range<usize> {
        self.span("iris_right")
    }

    pub fn nose_tip(&self) -> usize {
        self.nose_tip
    }

    pub fn cheek_left(&self) -> usize {
        self.cheek_left
    }

    pub fn cheek_right(&self) -> usize {
        self.cheek_right
    }

    pub fn eyelid_left(&self) -> (usize, usize) {
        self.eyelid_left
    }

    pub fn eyelid_right(&self) -> (usize, usize) {
        self.eyelid_right
    }

    pub fn iris_center_left(&self) -> usize {
        self.iris_center_left
    }

    pub fn iris_center_right(&self) -> usize {
        self.iris_center_right
    }

    /// True for positions that pupil placement may move (the 10 iris points).
    pub fn is_pupil_position(&self, pos: usize) -> bool {
        self.iris_left().contains(&pos) || self.iris_right().contains(&pos)
    }
}

static TABLE: OnceLock<LandmarkTable> = OnceLock::new();

/// The process-wide table parsed from the frozen data file.
pub fn table() -> &'static LandmarkTable {
    TABLE.get_or_init(|| LandmarkTable::parse(TABLE_FILE))
}
