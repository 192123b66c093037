use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {height}x{width}")]
    EmptyImage { height: usize, width: usize },
    #[error("image dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("pixel buffer has {got} values, expected {expected}")]
    BufferLength { got: usize, expected: usize },
}

/// Row-major H×W×3 RGB image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::EmptyImage { height, width });
        }
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Ok(Self { height, width, data })
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::EmptyImage { height, width });
        }
        let expected = height * width * 3;
        if data.len() != expected {
            return Err(ImageError::BufferLength { got: data.len(), expected });
        }
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [f64; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &Image) -> Result<(), ImageError> {
        if self.height != other.height || self.width != other.width {
            return Err(ImageError::DimensionMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(())
    }

    /// Mean squared error over all pixels and channels.
    pub fn mse(&self, other: &Image) -> Result<f64, ImageError> {
        self.same_shape(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.data.len() as f64)
    }

    pub fn max_abs_diff(&self, other: &Image) -> Result<f64, ImageError> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Binary PPM (P6, max value 255).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_dimensions() {
        assert!(Image::filled(0, 4, [0.0; 3]).is_err());
        assert!(Image::from_vec(2, 2, vec![0.0; 11]).is_err());
    }

    #[test]
    fn ppm_header_and_length() {
        let img = Image::filled(2, 3, [1.0, 0.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 18);
        assert_eq!(&buf[11..14], &[255, 0, 128]);
    }
}
