//! Grayscale image loading and PNG output.
//!
//! Only PNG and binary PGM inputs are accepted. Color inputs are reduced to
//! luma with integer rec-601 weights (`(299 R + 587 G + 114 B + 500) / 1000`)
//! and 16-bit samples are brought to 8 bits by integer division by 257.

use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, ImageReader};
use thiserror::Error;

/// Number of gray levels handled everywhere in the crate.
pub const LEVELS: usize = 256;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("corrupt image {}: {reason}", path.display())]
    CorruptImage { path: PathBuf, reason: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),
}

/// 8-bit grayscale raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageIoError> {
        if width == 0 || height == 0 {
            return Err(ImageIoError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageIoError::InvalidImage(format!(
                "expected {expected} pixels for {width}x{height}, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image where every pixel has the same intensity.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, ImageIoError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> Option<u8> {
        if x >= self.width || y >= self.height {
            return None;
        }
        Some(self.pixels[y as usize * self.width as usize + x as usize])
    }
}

fn rec601(r: u32, g: u32, b: u32) -> u32 {
    (299 * r + 587 * g + 114 * b + 500) / 1000
}

fn to_gray(img: DynamicImage, path: &Path) -> Result<Vec<u8>, ImageIoError> {
    let out = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| rec601(p.0[0] as u32, p.0[1] as u32, p.0[2] as u32) as u8)
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| rec601(p.0[0] as u32, p.0[1] as u32, p.0[2] as u32) as u8)
            .collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| (p.0[0] / 257) as u8).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| (p.0[0] / 257) as u8).collect(),
        DynamicImage::ImageRgb16(buf) => buf
            .pixels()
            .map(|p| (rec601(p.0[0] as u32, p.0[1] as u32, p.0[2] as u32) / 257) as u8)
            .collect(),
        DynamicImage::ImageRgba16(buf) => buf
            .pixels()
            .map(|p| (rec601(p.0[0] as u32, p.0[1] as u32, p.0[2] as u32) / 257) as u8)
            .collect(),
        _ => return Err(ImageIoError::UnsupportedFormat(path.to_path_buf())),
    };
    Ok(out)
}

/// Load a PNG or binary PGM file as an 8-bit grayscale image.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, ImageIoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => ImageIoError::FileNotFound(path.to_path_buf()),
        _ => ImageIoError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    let reader = ImageReader::new(BufReader::new(file))
        .with_guessed_format()
        .map_err(|e| ImageIoError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        _ => return Err(ImageIoError::UnsupportedFormat(path.to_path_buf())),
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(_) => ImageIoError::UnsupportedFormat(path.to_path_buf()),
        other => ImageIoError::CorruptImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let (width, height) = (decoded.width(), decoded.height());
    let pixels = to_gray(decoded, path)?;
    GrayImage::new(width, height, pixels).map_err(|e| ImageIoError::CorruptImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Write `img` as an 8-bit grayscale PNG.
pub fn write_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
    let path = path.as_ref();
    let io_err = |source: io::Error| ImageIoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = io::BufWriter::new(file);
    image::write_buffer_with_format(
        &mut writer,
        &img.pixels,
        img.width,
        img.height,
        image::ExtendedColorType::L8,
        ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(source) => io_err(source),
        other => io_err(io::Error::other(other.to_string())),
    })
}
