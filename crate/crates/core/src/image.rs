//! Float images and Netpbm/PFM writers.

use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Binary 8-bit PGM (`P5`); values are clamped to `[0, 1]`.
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&v| to_byte(v)));
        out
    }

    /// Grayscale PFM (`Pf`), little-endian, bottom row first.
    pub fn encode_pfm(&self) -> Vec<u8> {
        let mut out = format!("Pf\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                out.write_f32::<LittleEndian>(self.data[y * self.width + x] as f32).unwrap();
            }
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        write_all(path, &self.encode_pgm())
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        write_all(path, &self.encode_pfm())
    }

    /// Parses a binary 8-bit PGM back into `[0, 1]` values.
    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let (header, body) = split_header(bytes, "P5")?;
        let [width, height, maxval] = header;
        if maxval != 255 {
            return Err(Error::Format("only 8-bit PGM is supported".into()));
        }
        if body.len() != width * height {
            return Err(Error::Format("PGM payload size mismatch".into()));
        }
        Ok(Self {
            width,
            height,
            data: body.iter().map(|&b| b as f64 / 255.0).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl RgbImage {
    /// Binary 8-bit PPM (`P6`).
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().flat_map(|c| c.iter().map(|&v| to_byte(v))));
        out
    }

    /// Color PFM (`PF`), little-endian, bottom row first.
    pub fn encode_pfm(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                for &v in &self.data[y * self.width + x] {
                    out.write_f32::<LittleEndian>(v as f32).unwrap();
                }
            }
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_all(path, &self.encode_ppm())
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        write_all(path, &self.encode_pfm())
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

fn split_header<'a>(bytes: &'a [u8], magic: &str) -> Result<([usize; 3], &'a [u8])> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated Netpbm header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| Error::Format(e.to_string()))?);
    }
    if fields[0] != magic {
        return Err(Error::Format(format!("expected {magic}, found {}", fields[0])));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(e.to_string()));
    // Exactly one whitespace byte separates the header from the payload.
    Ok(([parse(fields[1])?, parse(fields[2])?, parse(fields[3])?], &bytes[pos + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let img = GrayImage {
            width: 3,
            height: 2,
            data: vec![0.0, 0.5, 1.0, 2.0, -1.0, 0.25],
        };
        let bytes = img.encode_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&bytes[11..], &[0, 128, 255, 255, 0, 64]);
        let back = GrayImage::decode_pgm(&bytes).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.data[2], 1.0);
    }

    #[test]
    fn ppm_and_pfm_sizes() {
        let img = RgbImage {
            width: 2,
            height: 2,
            data: vec![[1.0, 0.0, 0.0]; 4],
        };
        let ppm = img.encode_ppm();
        assert_eq!(ppm.len(), b"P6\n2 2\n255\n".len() + 12);
        assert_eq!(img.encode_pfm().len(), b"PF\n2 2\n-1.0\n".len() + 48);
    }
}
