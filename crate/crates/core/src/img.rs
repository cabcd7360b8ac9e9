//! Grayscale image representation, file I/O, and tile splitting.
//!
//! Intensities are stored as `f64` in row-major order. The canonical working
//! range is [0, 255]; values only get clamped and rounded at 8-bit file
//! boundaries. Texture components are signed and are persisted losslessly via
//! the `.atxf` float sidecar format (see [`save_sidecar`]).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A 2D grid of real-valued intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from raw row-major samples.
    ///
    /// Panics if `data.len() != width * height` or either dimension is zero.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        assert_eq!(data.len(), width * height, "data length mismatch");
        debug_assert!(data.iter().all(|v| v.is_finite()));
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Pixel lookup with symmetric (half-sample) reflection at the borders:
    /// index -1 maps to 0, -2 to 1, `dim` to `dim - 1`, and so on.
    /// Valid for offsets up to one full image size past the border.
    #[inline]
    pub fn get_reflect(&self, x: isize, y: isize) -> f64 {
        let rx = reflect_index(x, self.width);
        let ry = reflect_index(y, self.height);
        self.data[ry * self.width + rx]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.data {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Pixelwise difference `self - other`. Panics on dimension mismatch.
    pub fn sub(&self, other: &GrayImage) -> GrayImage {
        assert_eq!(self.dimensions(), other.dimensions());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        GrayImage::new(self.width, self.height, data)
    }

    /// Copies the `w` x `h` rectangle whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> GrayImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = &self.data[y * self.width + x0..y * self.width + x0 + w];
            data.extend_from_slice(row);
        }
        GrayImage::new(w, h, data)
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

#[inline]
pub(crate) fn reflect_index(i: isize, dim: usize) -> usize {
    let dim = dim as isize;
    let r = if i < 0 {
        -i - 1
    } else if i >= dim {
        2 * dim - i - 1
    } else {
        i
    };
    debug_assert!(r >= 0 && r < dim, "reflection overshoot: {i} for dim {dim}");
    r as usize
}

/// Clamp to [0, 255] then round half away from zero, as stored in 8-bit files.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Loads a PGM (binary P5) or PNG (8-bit gray or RGB) file.
///
/// Multi-channel inputs are reduced with the 0.299 R + 0.587 G + 0.114 B
/// luminance formula; intensities end up on the [0, 255] scale.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    match extension(path) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => load_pgm(path),
        Some(ext) if ext.eq_ignore_ascii_case("png") => load_png(path),
        _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
}

/// Writes an 8-bit grayscale file; format selected by extension (.pgm or .png).
/// Intensities are clamped to [0, 255] and rounded half away from zero.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match extension(path) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => save_pgm(img, path),
        Some(ext) if ext.eq_ignore_ascii_case("png") => save_png(img, path),
        _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|detail| Error::CorruptData {
        path: path.to_path_buf(),
        detail,
    })
}

/// Binary PGM (P5) parser following the Netpbm grammar: '#' comments are
/// allowed in the header, a single whitespace byte separates the maxval from
/// the raster.
fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = next_header_int(bytes, &mut pos)?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // Exactly one whitespace byte between maxval and raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace before raster".into()),
    }
    let expected = width * height;
    let raster = bytes
        .get(pos..pos + expected)
        .ok_or_else(|| format!("raster truncated: expected {expected} bytes"))?;
    let scale = 255.0 / maxval as f64;
    let data = raster.iter().map(|&b| b as f64 * scale).collect();
    Ok(GrayImage::new(width, height, data))
}

fn next_header_int(bytes: &[u8], pos: &mut usize) -> std::result::Result<usize, String> {
    // Skip whitespace and '#' comments.
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => return Err(format!("unexpected byte 0x{b:02x} in header")),
            None => return Err("truncated header".into()),
        }
    }
    let mut value: usize = 0;
    while let Some(&b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as usize))
            .ok_or("header value overflow")?;
        *pos += 1;
    }
    Ok(value)
}

fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
        let bytes: Vec<u8> = img.data.iter().map(|&v| quantize_u8(v)).collect();
        w.write_all(&bytes)?;
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

fn load_png(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(
        |e| Error::CorruptData {
            path: path.to_path_buf(),
            detail: e.to_string(),
        },
    )?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let data = match decoded {
        image::DynamicImage::ImageLuma8(buf) => {
            buf.pixels().map(|p| p.0[0] as f64).collect::<Vec<_>>()
        }
        image::DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| LUMA_R * p.0[0] as f64 + LUMA_G * p.0[1] as f64 + LUMA_B * p.0[2] as f64)
            .collect(),
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    Ok(GrayImage::new(width, height, data))
}

fn save_png(img: &GrayImage, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize_u8(v)).collect();
    image::save_buffer(
        path,
        &bytes,
        img.width as u32,
        img.height as u32,
        image::ColorType::L8,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::CorruptData {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    })
}

const SIDECAR_MAGIC: &[u8] = b"ATXF1\n";

/// Writes the lossless float sidecar: magic "ATXF1\n", then "width height\n"
/// as ASCII decimals, then width x height little-endian IEEE-754 f64 values.
pub fn save_sidecar(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        w.write_all(SIDECAR_MAGIC)?;
        write!(w, "{} {}\n", img.width, img.height)?;
        for &v in &img.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

/// Reads a float sidecar written by [`save_sidecar`]. Bit-exact round trip.
pub fn load_sidecar(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |detail: &str| Error::CorruptData {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if bytes.len() < SIDECAR_MAGIC.len() || &bytes[..SIDECAR_MAGIC.len()] != SIDECAR_MAGIC {
        return Err(corrupt("missing ATXF1 magic"));
    }
    let mut pos = SIDECAR_MAGIC.len();
    let line_end = bytes[pos..]
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing dimension line"))?;
    let dims = std::str::from_utf8(&bytes[pos..pos + line_end])
        .map_err(|_| corrupt("dimension line not UTF-8"))?;
    let mut parts = dims.split_whitespace();
    let width: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| corrupt("bad width"))?;
    let height: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| corrupt("bad height"))?;
    if parts.next().is_some() {
        return Err(corrupt("trailing tokens in dimension line"));
    }
    if width == 0 || height == 0 {
        return Err(corrupt("zero dimension"));
    }
    pos += line_end + 1;
    let expected = width * height * 8;
    let raster = bytes
        .get(pos..pos + expected)
        .ok_or_else(|| corrupt("raster truncated"))?;
    let data: Vec<f64> = raster
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite sample"));
    }
    Ok(GrayImage::new(width, height, data))
}

/// Splits the image into non-overlapping `tile_w` x `tile_h` tiles in
/// row-major grid order. Trailing remainder pixels are discarded.
pub fn split_tiles(img: &GrayImage, tile_w: usize, tile_h: usize) -> Result<Vec<GrayImage>> {
    if tile_w == 0 || tile_h == 0 || tile_w > img.width || tile_h > img.height {
        return Err(Error::TileTooLarge {
            tile_w,
            tile_h,
            width: img.width,
            height: img.height,
        });
    }
    let cols = img.width / tile_w;
    let rows = img.height / tile_h;
    let mut tiles = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            tiles.push(img.crop(c * tile_w, r * tile_h, tile_w, tile_h));
        }
    }
    Ok(tiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounding_rules() {
        assert_eq!(quantize_u8(127.5), 128); // half away from zero
        assert_eq!(quantize_u8(-3.0), 0); // clamp floor
        assert_eq!(quantize_u8(300.0), 255); // clamp ceiling
        assert_eq!(quantize_u8(254.5), 255);
        assert_eq!(quantize_u8(0.49999), 0);
    }

    #[test]
    fn pgm_round_trip_integer_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::from_fn(13, 7, |x, y| ((x * 31 + y * 17) % 256) as f64);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn png_round_trip_integer_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = GrayImage::from_fn(9, 5, |x, y| ((x * 7 + y * 3) % 256) as f64);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_full_scale_pixel_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("white.pgm");
        save_image(&GrayImage::constant(1, 1, 255.0), &path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.get(0, 0), 255.0);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut bytes = b"P5\n# a comment\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 200]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[10.0, 200.0]);
    }

    #[test]
    fn pgm_truncated_raster_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.pgm");
        fs::write(&path, b"P5\n4 4\n255\nabc").unwrap();
        match load_image(&path) {
            Err(Error::CorruptData { .. }) => {}
            other => panic!("expected CorruptData, got {other:?}"),
        }
    }

    #[test]
    fn png_rgb_luminance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let raw = [255u8, 255, 255, 255, 0, 0];
        image::save_buffer(&path, &raw, 2, 1, image::ColorType::Rgb8).unwrap();
        let img = load_image(&path).unwrap();
        // luminance weights sum to 1
        assert!((img.get(0, 0) - 255.0).abs() < 1e-12);
        // 0.299 * 255, computed directly
        assert!((img.get(1, 0) - 76.245).abs() < 1e-12);
        assert!((img.get(1, 0) - LUMA_R * 255.0).abs() == 0.0);
    }

    #[test]
    fn missing_file_and_bad_extension() {
        match load_image("/nonexistent/nope.pgm") {
            Err(Error::FileNotFound(_)) => {}
            other => panic!("expected FileNotFound, got {other:?}"),
        }
        match load_image("/tmp/whatever.txt") {
            Err(Error::UnsupportedFormat(_)) => {}
            other => panic!("expected UnsupportedFormat, got {other:?}"),
        }
    }

    #[test]
    fn sidecar_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.atxf");
        let img = GrayImage::from_fn(5, 4, |x, y| (x as f64 - 2.0) * 0.1 + y as f64 * -3.7);
        save_sidecar(&img, &path).unwrap();
        let back = load_sidecar(&path).unwrap();
        assert_eq!(back.dimensions(), img.dimensions());
        for (a, b) in back.pixels().iter().zip(img.pixels()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sidecar_rejects_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.atxf");
        let mut bytes = b"ATXF1\n1 1\n".to_vec();
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_sidecar(&path),
            Err(Error::CorruptData { .. })
        ));
    }

    #[test]
    fn split_16_tiles_from_512() {
        let img = GrayImage::from_fn(512, 512, |x, y| ((x + y) % 256) as f64);
        let tiles = split_tiles(&img, 128, 128).unwrap();
        assert_eq!(tiles.len(), 16);
    }

    #[test]
    fn split_identity() {
        let img = GrayImage::from_fn(200, 200, |x, y| (x * y % 251) as f64);
        let tiles = split_tiles(&img, 200, 200).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0], img);
    }

    #[test]
    fn split_discards_remainders() {
        // floor(640/200) x floor(480/200) = 3 x 2
        let img = GrayImage::constant(640, 480, 7.0);
        let tiles = split_tiles(&img, 200, 200).unwrap();
        assert_eq!(tiles.len(), 6);
    }

    #[test]
    fn split_too_large_errors() {
        let img = GrayImage::constant(10, 10, 0.0);
        assert!(matches!(
            split_tiles(&img, 11, 4),
            Err(Error::TileTooLarge { .. })
        ));
    }

    #[test]
    fn tiles_match_source_pixels_and_reconstruct() {
        let img = GrayImage::from_fn(12, 8, |x, y| (x * 100 + y) as f64);
        let tiles = split_tiles(&img, 4, 4).unwrap();
        assert_eq!(tiles.len(), 6);
        let cols = 3;
        for (i, tile) in tiles.iter().enumerate() {
            let (r, c) = (i / cols, i % cols);
            for ty in 0..4 {
                for tx in 0..4 {
                    assert_eq!(tile.get(tx, ty), img.get(c * 4 + tx, r * 4 + ty));
                }
            }
        }
    }

    #[test]
    fn reflection_indexing() {
        assert_eq!(reflect_index(-1, 5), 0);
        assert_eq!(reflect_index(-2, 5), 1);
        assert_eq!(reflect_index(5, 5), 4);
        assert_eq!(reflect_index(6, 5), 3);
        assert_eq!(reflect_index(3, 5), 3);
    }
}
