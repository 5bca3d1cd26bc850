use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Camera counts, row-major, with the physical pixel size at the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFrame {
    counts: Vec<f64>,
    width: usize,
    height: usize,
    pixel_pitch: f64,
}

impl ImageFrame {
    pub fn new(counts: Vec<f64>, width: usize, height: usize, pixel_pitch: f64) -> Result<Self> {
        if counts.len() != width * height {
            return Err(Error::invalid(format!(
                "{} counts do not fill a {width}x{height} frame",
                counts.len()
            )));
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::invalid(format!(
                "pixel pitch must be positive, got {pixel_pitch}"
            )));
        }
        if let Some(bad) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!(
                "counts must be finite and >= 0, found {bad}"
            )));
        }
        Ok(Self {
            counts,
            width,
            height,
            pixel_pitch,
        })
    }

    pub fn zeros(width: usize, height: usize, pixel_pitch: f64) -> Result<Self> {
        Self::new(vec![0.0; width * height], width, height, pixel_pitch)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.counts[y * self.width + x]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.counts.iter().map(|c| c * factor).collect(),
            self.width,
            self.height,
            self.pixel_pitch,
        )
    }

    /// Sub-frame `[x0, x0+w) × [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid("crop window exceeds frame"));
        }
        let mut out = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            out.extend_from_slice(&self.counts[y * self.width + x0..y * self.width + x0 + w]);
        }
        Self::new(out, w, h, self.pixel_pitch)
    }

    /// Counts rounded to the nearest integer and clamped to 16 bits.
    pub fn to_u16(&self) -> Vec<u16> {
        self.counts
            .iter()
            .map(|c| c.round().clamp(0.0, u16::MAX as f64) as u16)
            .collect()
    }

    /// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.encode_pgm(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn encode_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.to_u16().iter().flat_map(|v| v.to_be_bytes()).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_pgm(path: &Path, pixel_pitch: f64) -> Result<Self> {
        Self::decode_pgm(BufReader::new(File::open(path)?), pixel_pitch)
    }

    /// Binary PGM with maxval up to 65535; 8-bit files are accepted too.
    pub fn decode_pgm<R: Read>(mut input: R, pixel_pitch: f64) -> Result<Self> {
        let mut data = Vec::new();
        input.read_to_end(&mut data)?;
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // skip whitespace and comments
            while pos < data.len() {
                if data[pos].is_ascii_whitespace() {
                    pos += 1;
                } else if data[pos] == b'#' {
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
                return Err(Error::Parse("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Parse(format!(
                "expected binary PGM (P5), found {}",
                fields[0]
            )));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad PGM header field {s:?}")))
        };
        let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
        }
        // single whitespace byte after maxval
        pos += 1;
        let depth = if maxval > 255 { 2 } else { 1 };
        let body = data
            .get(pos..pos + w * h * depth)
            .ok_or_else(|| Error::Parse("truncated PGM raster".into()))?;
        let counts = if depth == 2 {
            body.chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64)
                .collect()
        } else {
            body.iter().map(|&b| b as f64).collect()
        };
        Self::new(counts, w, h, pixel_pitch)
    }

    /// Row-major CSV, one image row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for row in self.counts.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, pixel_pitch: f64) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut counts = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse(format!(
                        "line {} has {} fields, expected {w}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            counts.extend(row);
            height += 1;
        }
        Self::new(counts, width.unwrap_or(0), height, pixel_pitch)
    }
}
