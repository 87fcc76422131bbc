//! Minimal line-chart rendering for irate plots: a single polyline inside
//! a framed plot area with tick marks. PNG goes through `image`; SVG is
//! written by hand.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use image::{ImageEncoder, Rgb, RgbImage};

use crate::sim::PlotFormat;

pub const WIDTH: u32 = 800;
pub const HEIGHT: u32 = 400;
const MARGIN: f64 = 40.0;
const TICKS: usize = 5;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([60, 60, 60]);
const LINE: Rgb<u8> = Rgb([31, 119, 180]);

/// Maps data points into pixel space (y grows downwards).
fn project(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let w = WIDTH as f64 - 2.0 * MARGIN;
    let h = HEIGHT as f64 - 2.0 * MARGIN;
    points
        .iter()
        .map(|&(x, y)| {
            (
                MARGIN + (x - x0) / (x1 - x0) * w,
                HEIGHT as f64 - MARGIN - (y - y0) / (y1 - y0) * h,
            )
        })
        .collect()
}

fn draw_line(img: &mut RgbImage, (xa, ya): (f64, f64), (xb, yb): (f64, f64), color: Rgb<u8>) {
    let steps = (xb - xa).abs().max((yb - ya).abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = (xa + (xb - xa) * t).round();
        let y = (ya + (yb - ya) * t).round();
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

fn frame_and_ticks() -> Vec<((f64, f64), (f64, f64))> {
    let (l, r) = (MARGIN, WIDTH as f64 - MARGIN);
    let (t, b) = (MARGIN, HEIGHT as f64 - MARGIN);
    let mut segs = vec![((l, b), (r, b)), ((l, t), (l, b))];
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let x = l + (r - l) * f;
        let y = b - (b - t) * f;
        segs.push(((x, b), (x, b + 5.0)));
        segs.push(((l - 5.0, y), (l, y)));
    }
    segs
}

pub fn render_png(points: &[(f64, f64)]) -> Vec<u8> {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, BACKGROUND);
    for (a, b) in frame_and_ticks() {
        draw_line(&mut img, a, b, AXIS);
    }
    let px = project(points);
    for w in px.windows(2) {
        draw_line(&mut img, w[0], w[1], LINE);
    }
    if let [only] = px.as_slice() {
        draw_line(&mut img, *only, *only, LINE);
    }
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(img.as_raw(), WIDTH, HEIGHT, image::ExtendedColorType::Rgb8)
        .expect("in-memory PNG encoding");
    out
}

pub fn render_svg(points: &[(f64, f64)], title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, "<title>{}</title>", xml_escape(title));
    for ((xa, ya), (xb, yb)) in frame_and_ticks() {
        let _ = writeln!(
            s,
            r##"<line x1="{xa:.1}" y1="{ya:.1}" x2="{xb:.1}" y2="{yb:.1}" stroke="#3c3c3c"/>"##
        );
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if lo.is_finite() {
        let _ = writeln!(s, r#"<text x="4" y="{}" font-size="10">{}</text>"#, MARGIN - 4.0, short(hi));
        let _ = writeln!(
            s,
            r#"<text x="4" y="{}" font-size="10">{}</text>"#,
            HEIGHT as f64 - MARGIN + 14.0,
            short(lo)
        );
    }
    let coords: Vec<String> = project(points).iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        coords.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn short(v: f64) -> String {
    format!("{v:.3}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(points: &[(f64, f64)], title: &str, format: PlotFormat) -> Vec<u8> {
    match format {
        PlotFormat::Png => render_png(points),
        PlotFormat::Svg => render_svg(points, title).into_bytes(),
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes to a uniquely named temporary file in `dir`, then renames it over
/// `name`, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, dir.join(name))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_is_decodable_and_sized() {
        let bytes = render_png(&[(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]);
        let img = image::load_from_memory(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (WIDTH, HEIGHT));
    }

    #[test]
    fn png_is_deterministic() {
        let pts = [(0.0, 1.0), (5.0, 0.0)];
        assert_eq!(render_png(&pts), render_png(&pts));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let px = project(&[(1.0, 2.0), (1.0, 2.0)]);
        assert!(px.iter().all(|(x, y)| x.is_finite() && y.is_finite()));
    }

    #[test]
    fn svg_has_one_polyline() {
        let svg = render_svg(&[(0.0, 1.0), (1.0, 2.0)], "a<b");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.svg", b"abc").unwrap();
        write_atomic(dir.path(), "x.svg", b"abcd").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("x.svg")]);
        assert_eq!(fs::read(dir.path().join("x.svg")).unwrap(), b"abcd");
    }
}
