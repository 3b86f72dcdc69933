//! Image file I/O: binary/ASCII PGM and a lossless CSV float grid.
//!
//! PGM intensities are normalized to `[0, 1]` on load by dividing by the
//! file's maxval; on write they are multiplied by maxval, rounded, and
//! saturated at maxval. CSV stores one image row per line with
//! shortest-round-trip decimal formatting, so write-then-read is exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// ASCII PGM (`P2`).
    PgmAscii { maxval: u16 },
    /// Binary PGM (`P5`), 8-bit for maxval < 256, big-endian 16-bit otherwise.
    PgmBinary { maxval: u16 },
    Csv,
}

impl ImageFormat {
    /// Picks a format from the file extension: `.csv`, or `.pgm` (binary, 8-bit).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") => Ok(ImageFormat::Csv),
            Some("pgm") => Ok(ImageFormat::PgmBinary { maxval: 255 }),
            other => Err(Error::Config(format!(
                "cannot infer image format from extension {other:?} of {}",
                path.display()
            ))),
        }
    }
}

/// Reads an image; for PGM the P2/P5 variant and bit depth come from the header.
pub fn read_image(path: &Path, format: ImageFormat) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        ImageFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format {
                format: "CSV",
                reason: "not valid UTF-8".into(),
            })?;
            parse_csv(&text)
        }
        ImageFormat::PgmAscii { .. } | ImageFormat::PgmBinary { .. } => parse_pgm(&bytes),
    }
}

pub fn write_image(image: &Image, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = match format {
        ImageFormat::Csv => encode_csv(image).into_bytes(),
        ImageFormat::PgmAscii { maxval } => encode_pgm(image, maxval, false)?,
        ImageFormat::PgmBinary { maxval } => encode_pgm(image, maxval, true)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Infers the format from the extension and reads.
pub fn load(path: &Path) -> Result<Image> {
    read_image(path, ImageFormat::from_path(path)?)
}

pub fn save(image: &Image, path: &Path) -> Result<()> {
    write_image(image, path, ImageFormat::from_path(path)?)
}

pub fn encode_csv(image: &Image) -> String {
    let n = image.side();
    let mut out = String::with_capacity(n * n * 20);
    for row in image.data().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Image> {
    let bad = |reason: String| Error::Format {
        format: "CSV",
        reason,
    };
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(bad(format!(
                    "line {} has {} values, expected {w}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| bad("empty file".into()))?;
    Image::from_shape(width, height, data)
}

fn encode_pgm(image: &Image, maxval: u16, binary: bool) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::param("maxval", "must be positive"));
    }
    if let Some(v) = image.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Format {
            format: "PGM",
            reason: format!("negative intensity {v} cannot be stored"),
        });
    }
    let scale = f64::from(maxval);
    let levels: Vec<u16> = image
        .data()
        .iter()
        .map(|&v| (v * scale).round().min(scale) as u16)
        .collect();
    let n = image.side();
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{n} {n}\n{maxval}\n").into_bytes();
    if binary {
        for &l in &levels {
            if maxval < 256 {
                out.push(l as u8);
            } else {
                out.extend_from_slice(&l.to_be_bytes());
            }
        }
    } else {
        for row in levels.chunks(n) {
            let line: Vec<String> = row.iter().map(|l| l.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    let bad = |reason: &str| Error::Format {
        format: "PGM",
        reason: reason.to_string(),
    };
    let mut pos = 0;
    // Reads the next whitespace-delimited header token, skipping `#` comments.
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        _ => return Err(bad("unsupported magic number, expected P2 or P5")),
    };
    let number = |pos: &mut usize, what: &str| -> Result<usize> {
        token(pos)?
            .parse::<usize>()
            .map_err(|_| bad(&format!("invalid {what}")))
    };
    let width = number(&mut pos, "width")?;
    let height = number(&mut pos, "height")?;
    let maxval = number(&mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must be in 1..=65535"));
    }
    let count = width * height;
    let scale = maxval as f64;
    let mut data = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let raster = bytes
            .get(pos..pos + count * bpp)
            .ok_or_else(|| bad("raster shorter than width*height"))?;
        for chunk in raster.chunks(bpp) {
            let level = if bpp == 1 {
                chunk[0] as usize
            } else {
                u16::from_be_bytes([chunk[0], chunk[1]]) as usize
            };
            if level > maxval {
                return Err(bad("sample exceeds maxval"));
            }
            data.push(level as f64 / scale);
        }
    } else {
        let body = String::from_utf8_lossy(&bytes[pos..]);
        for tok in body.split_whitespace() {
            let level: usize = tok.parse().map_err(|_| bad("invalid sample"))?;
            if level > maxval {
                return Err(bad("sample exceeds maxval"));
            }
            data.push(level as f64 / scale);
        }
        if data.len() != count {
            return Err(bad(&format!(
                "expected {count} samples, found {}",
                data.len()
            )));
        }
    }
    Image::from_shape(width, height, data)
}
