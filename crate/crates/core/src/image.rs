//! RGB float images, PFM/PNG I/O and splat accumulation.

use crate::math::Rgb;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed PFM: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("pixel ({x}, {y}) channel {c} is {value}, expected finite and non-negative")]
    InvalidPixel { x: usize, y: usize, c: usize, value: f32 },
    #[error("{path}: {source}")]
    Png {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

/// Row-major RGB image with 32-bit float channels; row 0 is the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height * 3] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height * 3);
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = 3 * (y * self.width + x);
        Rgb::new(self.data[i] as f64, self.data[i + 1] as f64, self.data[i + 2] as f64)
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        let i = 3 * (y * self.width + x);
        self.data[i] = c.r as f32;
        self.data[i + 1] = c.g as f32;
        self.data[i + 2] = c.b as f32;
    }

    /// Checks that every channel is finite and non-negative.
    pub fn validate(&self) -> Result<(), ImageError> {
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                let p = i / 3;
                return Err(ImageError::InvalidPixel { x: p % self.width, y: p / self.width, c: i % 3, value: v });
            }
        }
        Ok(())
    }

    /// Per-channel mean over all pixels.
    pub fn mean(&self) -> Rgb {
        let mut s = [0.0f64; 3];
        for px in self.data.chunks_exact(3) {
            for c in 0..3 {
                s[c] += px[c] as f64;
            }
        }
        let n = (self.width * self.height).max(1) as f64;
        Rgb::new(s[0] / n, s[1] / n, s[2] / n)
    }

    /// Sum of all channel values times the pixel area of a unit-square image.
    pub fn integral(&self) -> Rgb {
        self.mean()
    }

    /// Root of the mean squared per-channel difference.
    pub fn rmse(&self, other: &Image) -> Result<f64, ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum();
        Ok((sum / self.data.len().max(1) as f64).sqrt())
    }

    pub fn scaled(&self, s: f64) -> Image {
        Image { width: self.width, height: self.height, data: self.data.iter().map(|&v| (v as f64 * s) as f32).collect() }
    }

    pub fn write_pfm(&self, path: &Path) -> Result<(), ImageError> {
        let io = |source| ImageError::Io { path: path.to_path_buf(), source };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(&self.pfm_bytes()).map_err(io)?;
        w.flush().map_err(io)
    }

    /// The PFM encoding: little-endian, rows stored bottom to top.
    pub fn pfm_bytes(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        for y in (0..self.height).rev() {
            let row = &self.data[3 * y * self.width..3 * (y + 1) * self.width];
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn read_pfm(path: &Path) -> Result<Image, ImageError> {
        let io = |source| ImageError::Io { path: path.to_path_buf(), source };
        let bad = |reason: &str| ImageError::Format { path: path.to_path_buf(), reason: reason.to_string() };
        let mut r = BufReader::new(File::open(path).map_err(io)?);
        let mut line = String::new();
        r.read_line(&mut line).map_err(io)?;
        if line.trim() != "PF" {
            return Err(bad("expected color PFM header 'PF'"));
        }
        line.clear();
        r.read_line(&mut line).map_err(io)?;
        let dims: Vec<usize> = line.split_whitespace().map(|t| t.parse().map_err(|_| bad("bad dimensions"))).collect::<Result<_, _>>()?;
        if dims.len() != 2 {
            return Err(bad("bad dimensions"));
        }
        line.clear();
        r.read_line(&mut line).map_err(io)?;
        let scale: f64 = line.trim().parse().map_err(|_| bad("bad scale"))?;
        let little = scale < 0.0;
        let (w, h) = (dims[0], dims[1]);
        let mut buf = vec![0u8; w * h * 12];
        r.read_exact(&mut buf).map_err(io)?;
        let mut data = vec![0.0f32; w * h * 3];
        for (k, chunk) in buf.chunks_exact(4).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            let (row, col) = (k / (3 * w), k % (3 * w));
            data[3 * w * (h - 1 - row) + col] = v;
        }
        Ok(Image::from_data(w, h, data))
    }

    /// Writes an 8-bit sRGB PNG after scaling by `2^exposure`.
    pub fn write_png(&self, path: &Path, exposure: f64) -> Result<(), ImageError> {
        let k = exposure.exp2();
        let bytes: Vec<u8> = self.data.iter().map(|&v| (srgb_encode((v as f64 * k).clamp(0.0, 1.0)) * 255.0 + 0.5) as u8).collect();
        image::save_buffer(path, &bytes, self.width as u32, self.height as u32, image::ExtendedColorType::Rgb8)
            .map_err(|source| ImageError::Png { path: path.to_path_buf(), source })
    }
}

fn srgb_encode(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Running per-pixel RGB sums in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageAccumulator {
    width: usize,
    height: usize,
    sums: Vec<f64>,
    pub samples: u64,
    pub b: f64,
}

impl ImageAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, sums: vec![0.0; width * height * 3], samples: 0, b: 1.0 }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn splat(&mut self, x: usize, y: usize, c: Rgb) {
        let i = 3 * (y * self.width + x);
        self.sums[i] += c.r;
        self.sums[i + 1] += c.g;
        self.sums[i + 2] += c.b;
    }

    /// Splat at continuous film coordinates in `[0,1)^2`; out-of-range
    /// coordinates are dropped.
    #[inline]
    pub fn splat_film(&mut self, fx: f64, fy: f64, c: Rgb) {
        if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fy) {
            return;
        }
        let x = ((fx * self.width as f64) as usize).min(self.width - 1);
        let y = ((fy * self.height as f64) as usize).min(self.height - 1);
        self.splat(x, y, c);
    }

    pub fn merge(&mut self, o: &ImageAccumulator) {
        assert_eq!((self.width, self.height), (o.width, o.height));
        for (a, b) in self.sums.iter_mut().zip(&o.sums) {
            *a += b;
        }
        self.samples += o.samples;
    }

    /// Adds `s * o` to the sums; sample counts are left alone.
    pub fn add_scaled(&mut self, o: &ImageAccumulator, s: f64) {
        assert_eq!((self.width, self.height), (o.width, o.height));
        for (a, b) in self.sums.iter_mut().zip(&o.sums) {
            *a += s * b;
        }
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// `b * sum / samples`, the normalized MLT estimate.
    pub fn to_image(&self) -> Image {
        let s = if self.samples == 0 { 0.0 } else { self.b / self.samples as f64 };
        self.to_image_scaled(s)
    }

    /// `scale * sum` per pixel.
    pub fn to_image_scaled(&self, scale: f64) -> Image {
        Image::from_data(self.width, self.height, self.sums.iter().map(|&v| (v * scale) as f32).collect())
    }
}
