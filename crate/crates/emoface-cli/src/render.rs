//! Minimal raster output: face previews, line plots, and bar charts, drawn
//! pixel by pixel into RGB buffers. No text, no anti-aliasing; the encoded
//! bytes depend only on the input values, which keeps renders reproducible.

use std::path::Path;

use emoface::geometry::{table, Point3};
use emoface::{Error, Result};
use image::{Rgb, RgbImage};

/// Face previews are square, with the canonical origin at the center:
/// px = size/2 + x, py = size/2 - y (image rows grow downward).
pub const PREVIEW_SIZE: u32 = 256;

const BACKGROUND: Rgb<u8> = Rgb([12, 12, 16]);
const CONTOUR: Rgb<u8> = Rgb([80, 140, 80]);
const POINT: Rgb<u8> = Rgb([235, 235, 235]);
const IRIS: Rgb<u8> = Rgb([240, 200, 80]);
const FRAME_GRAY: Rgb<u8> = Rgb([70, 70, 70]);
const ZERO_GRAY: Rgb<u8> = Rgb([40, 40, 40]);

pub const SERIES_RED: Rgb<u8> = Rgb([220, 80, 80]);
pub const SERIES_GREEN: Rgb<u8> = Rgb([90, 200, 90]);
pub const SERIES_BLUE: Rgb<u8> = Rgb([90, 130, 230]);
pub const BAR_LEFT: Rgb<u8> = Rgb([70, 170, 220]);
pub const BAR_RIGHT: Rgb<u8> = Rgb([230, 150, 60]);

const MARGIN: u32 = 10;

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

/// Integer line segment (Bresenham), clipped to the canvas.
pub fn draw_line(img: &mut RgbImage, from: (i64, i64), to: (i64, i64), color: Rgb<u8>) {
    let (mut x, mut y) = from;
    let (x1, y1) = to;
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, color);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn to_canvas(p: &Point3) -> (i64, i64) {
    let half = PREVIEW_SIZE as f64 / 2.0;
    ((half + p[0]).round() as i64, (half - p[1]).round() as i64)
}

fn polyline(img: &mut RgbImage, points: &[Point3], closed: bool, color: Rgb<u8>) {
    for pair in points.windows(2) {
        draw_line(img, to_canvas(&pair[0]), to_canvas(&pair[1]), color);
    }
    if closed && points.len() > 2 {
        draw_line(
            img,
            to_canvas(&points[points.len() - 1]),
            to_canvas(&points[0]),
            color,
        );
    }
}

/// Draws one 147-point frame (image-space coordinates) as contours plus
/// landmark dots. Iris points get their own color so gaze shifts are
/// visible frame to frame.
pub fn render_face(points: &[Point3]) -> RgbImage {
    let mut img = RgbImage::from_pixel(PREVIEW_SIZE, PREVIEW_SIZE, BACKGROUND);
    let t = table();
    for span in
        [t.face_oval(), t.eye_ring_left(), t.eye_ring_right(), t.lips_outer(), t.lips_inner()]
    {
        polyline(&mut img, &points[span], true, CONTOUR);
    }
    for span in [t.brow_left(), t.brow_right(), t.nose()] {
        polyline(&mut img, &points[span], false, CONTOUR);
    }
    for (pos, p) in points.iter().enumerate() {
        let (x, y) = to_canvas(p);
        let color = if t.is_pupil_position(pos) { IRIS } else { POINT };
        put(&mut img, x, y, color);
    }
    img
}

/// Line plot of one or more equally long series over the frame index, with
/// a shared autoscaled y-range and a zero line when the range crosses zero.
pub fn line_plot(width: u32, height: u32, series: &[(Rgb<u8>, &[f64])]) -> Result<RgbImage> {
    if series.is_empty() || series.iter().any(|(_, s)| s.is_empty()) {
        return Err(Error::domain("line plot needs at least one non-empty series"));
    }
    if series.iter().flat_map(|(_, s)| s.iter()).any(|v| !v.is_finite()) {
        return Err(Error::numeric("line plot values must be finite"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (_, s) in series {
        for &v in *s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }

    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    let (x0, x1) = (MARGIN as i64, (width - MARGIN) as i64 - 1);
    let (y0, y1) = (MARGIN as i64, (height - MARGIN) as i64 - 1);
    draw_line(&mut img, (x0, y0), (x1, y0), FRAME_GRAY);
    draw_line(&mut img, (x0, y1), (x1, y1), FRAME_GRAY);
    draw_line(&mut img, (x0, y0), (x0, y1), FRAME_GRAY);
    draw_line(&mut img, (x1, y0), (x1, y1), FRAME_GRAY);

    let y_of = |v: f64| -> i64 {
        let t = (v - lo) / (hi - lo);
        y1 - (t * (y1 - y0) as f64).round() as i64
    };
    if lo < 0.0 && hi > 0.0 {
        draw_line(&mut img, (x0, y_of(0.0)), (x1, y_of(0.0)), ZERO_GRAY);
    }

    for (color, s) in series {
        let x_of = |i: usize| -> i64 {
            if s.len() == 1 {
                (x0 + x1) / 2
            } else {
                x0 + ((i as f64 / (s.len() - 1) as f64) * (x1 - x0) as f64).round() as i64
            }
        };
        let mut prev = (x_of(0), y_of(s[0]));
        put(&mut img, prev.0, prev.1, *color);
        for (i, &v) in s.iter().enumerate().skip(1) {
            let next = (x_of(i), y_of(v));
            draw_line(&mut img, prev, next, *color);
            prev = next;
        }
    }
    Ok(img)
}

/// Grouped bar chart: one group per entry, two bars per group (left eye,
/// right eye), heights scaled to the largest count.
pub fn bar_chart(width: u32, height: u32, groups: &[(u64, u64)]) -> Result<RgbImage> {
    if groups.is_empty() {
        return Err(Error::domain("bar chart needs at least one group"));
    }
    let max = groups.iter().map(|&(l, r)| l.max(r)).max().unwrap_or(0).max(1);

    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    let (x0, x1) = (MARGIN as i64, (width - MARGIN) as i64 - 1);
    let (y_top, y_base) = (MARGIN as i64, (height - MARGIN) as i64 - 1);
    draw_line(&mut img, (x0, y_base), (x1, y_base), FRAME_GRAY);

    let slot = (x1 - x0) as f64 / groups.len() as f64;
    let bar = (slot / 3.0).max(1.0).round() as i64;
    for (g, &(left, right)) in groups.iter().enumerate() {
        let gx = x0 + (g as f64 * slot).round() as i64;
        for (b, (count, color)) in [(left, BAR_LEFT), (right, BAR_RIGHT)].iter().enumerate() {
            let h = ((*count as f64 / max as f64) * (y_base - y_top) as f64).round() as i64;
            if h == 0 {
                continue;
            }
            let bx = gx + bar / 2 + b as i64 * bar;
            for dx in 0..bar {
                draw_line(&mut img, (bx + dx, y_base - 1), (bx + dx, y_base - h), *color);
            }
        }
    }
    Ok(img)
}

/// PNG encode to disk, mapped into this crate's error type.
pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use emoface::corpus::default_identity_frame;
    use emoface::geometry::{relocate, DEFAULT_SCALE_FACTOR, HeadPose};
    use emoface::gaze::GazeLabel;

    fn count_pixels(img: &RgbImage, color: Rgb<u8>) -> usize {
        img.pixels().filter(|&&p| p == color).count()
    }

    #[test]
    fn face_previews_center_the_face_and_mark_the_pupils() {
        let identity = default_identity_frame();
        let pose = HeadPose::new(0.0, 0.0, 0.0, [0.0; 3]).unwrap();
        let relocated =
            relocate(&identity, &pose, &GazeLabel::center(), DEFAULT_SCALE_FACTOR).unwrap();
        let img = render_face(&relocated.points);
        assert_eq!(img.dimensions(), (PREVIEW_SIZE, PREVIEW_SIZE), "canvas size");
        assert!(count_pixels(&img, POINT) > 100, "most landmarks render as dots");
        assert_eq!(count_pixels(&img, IRIS), 10, "ten iris points in their own color");
        assert!(count_pixels(&img, CONTOUR) > 200, "contours are drawn");

        // The nose tip sits at the canonical origin, which maps to center.
        let t = table();
        let tip = relocated.points[t.nose_tip()];
        assert_eq!(super::to_canvas(&tip), (128, 128), "origin maps to canvas center");
    }

    #[test]
    fn line_plots_trace_constant_series_as_horizontal_rows() {
        let flat = vec![2.5; 40];
        let rising: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let img = line_plot(320, 160, &[(SERIES_RED, &flat), (SERIES_BLUE, &rising)]).unwrap();
        let red_rows: std::collections::BTreeSet<u32> = img
            .enumerate_pixels()
            .filter(|(_, _, &p)| p == SERIES_RED)
            .map(|(_, y, _)| y)
            .collect();
        assert_eq!(red_rows.len(), 1, "a constant series occupies one row");
        assert!(count_pixels(&img, SERIES_BLUE) > 40, "the rising series is drawn");

        let err = line_plot(320, 160, &[(SERIES_RED, &[][..])]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "empty series kind: {err}");
        let err = line_plot(320, 160, &[(SERIES_RED, &[f64::NAN][..])]).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "non-finite kind: {err}");
    }

    #[test]
    fn bar_charts_scale_heights_by_count() {
        let img = bar_chart(320, 160, &[(10, 0), (5, 10), (0, 0)]).unwrap();
        let left_cols: std::collections::BTreeMap<u32, usize> = img
            .enumerate_pixels()
            .filter(|(_, _, &p)| p == BAR_LEFT)
            .fold(std::collections::BTreeMap::new(), |mut m, (x, _, _)| {
                *m.entry(x).or_default() += 1;
                m
            });
        let tallest = *left_cols.values().max().unwrap();
        let cols_at_half =
            left_cols.values().filter(|&&h| (h as i64 - tallest as i64 / 2).abs() <= 1).count();
        assert!(tallest > 50, "a full-count bar spans the plot height");
        assert!(cols_at_half > 0, "a half-count bar is half as tall");
        assert!(count_pixels(&img, BAR_RIGHT) > 0, "right-eye bars drawn");
        assert!(matches!(bar_chart(320, 160, &[]).unwrap_err(), Error::Domain(_)));
    }
}
