//! 8-bit grayscale images with deterministic PGM (P5) and PNG loading.
//!
//! Color PNGs are converted with integer BT.601 luma, round-half-up, so a
//! loaded image is bit-identical across platforms.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    /// Row-major intensities, `width * height` bytes.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::Image(format!(
                "pixel buffer has {} bytes, expected {}",
                pixels.len(),
                (width as usize) * (height as usize)
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; (width as usize) * (height as usize)],
        }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }

    /// Whether the window `[x0, x1] × [y0, y1]` (inclusive) is inside.
    pub fn contains_window(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> bool {
        x0 >= 0 && y0 >= 0 && x1 < self.width as i64 && y1 < self.height as i64
    }

    /// Copy a `(2·half+1)²` window centered at `(cx, cy)` into a new image.
    pub fn window(&self, cx: i64, cy: i64, half: i64) -> Option<GrayImage> {
        if !self.contains_window(cx - half, cy - half, cx + half, cy + half) {
            return None;
        }
        let side = (2 * half + 1) as u32;
        let mut pixels = Vec::with_capacity((side * side) as usize);
        for y in (cy - half)..=(cy + half) {
            let row = y as usize * self.width as usize;
            pixels.extend_from_slice(&self.pixels[row + (cx - half) as usize..=row + (cx + half) as usize]);
        }
        Some(GrayImage {
            width: side,
            height: side,
            pixels,
        })
    }

    /// Load from PGM (`.pgm`) or PNG (`.png`), dispatching on the extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Self::load_pgm(path),
            Some("png") => Self::load_png(path),
            other => Err(Error::Image(format!(
                "unsupported image extension {other:?} for {}",
                path.display()
            ))),
        }
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path)?;
        parse_pgm(&data).map_err(|msg| Error::Image(format!("{}: {msg}", path.display())))
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
        let (width, height) = (img.width(), img.height());
        let pixels = match img {
            image::DynamicImage::ImageLuma8(gray) => gray.into_raw(),
            other => {
                // Integer BT.601 luma, round half up.
                let rgb = other.to_rgb8();
                rgb.pixels()
                    .map(|p| {
                        let (r, g, b) = (p[0] as u32, p[1] as u32, p[2] as u32);
                        ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
                    })
                    .collect()
            }
        };
        GrayImage::new(width, height, pixels)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        write!(file, "P5\n{} {}\n255\n", self.width, self.height)?;
        file.write_all(&self.pixels)?;
        Ok(())
    }
}

fn parse_pgm(data: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0usize;

    let mut token = |data: &[u8]| -> std::result::Result<String, String> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("unexpected end of header".into());
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };

    if token(data)? != "P5" {
        return Err("not a binary PGM (P5) file".into());
    }
    let width: u32 = token(data)?.parse().map_err(|_| "bad width".to_string())?;
    let height: u32 = token(data)?.parse().map_err(|_| "bad height".to_string())?;
    let maxval: u32 = token(data)?.parse().map_err(|_| "bad maxval".to_string())?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}, expected 255"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = (width as usize) * (height as usize);
    if data.len() < pos + need {
        return Err(format!("raster truncated: need {need} bytes"));
    }
    GrayImage::new(width, height, data[pos..pos + need].to_vec()).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pgm_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::new(4, 3, (0..12).map(|i| (i * 20) as u8).collect()).unwrap();
        img.save_pgm(&path).unwrap();
        let back = GrayImage::load(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pgm_comments_are_skipped() {
        let data = b"P5\n# a comment\n2 2\n255\n\x01\x02\x03\x04";
        let img = parse_pgm(data).unwrap();
        assert_eq!(img.pixels, vec![1, 2, 3, 4]);
    }

    #[test]
    fn png_color_uses_integer_luma() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.png");
        let mut rgb = image::RgbImage::new(2, 1);
        rgb.put_pixel(0, 0, image::Rgb([100, 150, 200]));
        rgb.put_pixel(1, 0, image::Rgb([1, 1, 2]));
        rgb.save(&path).unwrap();

        let img = GrayImage::load(&path).unwrap();
        // (299·100 + 587·150 + 114·200 + 500) / 1000 = 141.75 → 141 (the
        // +500 bias makes truncation round half up).
        assert_eq!(img.pixels, vec![141, 1]);
    }

    #[test]
    fn window_extraction() {
        let img = GrayImage::new(5, 5, (0..25).collect()).unwrap();
        let w = img.window(2, 2, 1).unwrap();
        assert_eq!(w.width, 3);
        assert_eq!(w.pixels, vec![6, 7, 8, 11, 12, 13, 16, 17, 18]);
        assert!(img.window(0, 0, 1).is_none());
    }
}
