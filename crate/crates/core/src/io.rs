//! Grayscale image files and flat `key = value` text records.
//!
//! PNG (8 or 16 bit) and ASCII PGM are supported. Pixel values map linearly
//! to `[0, 1]`; on write they are clamped to that range and quantized.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Reads a PNG or PGM file, choosing the decoder by extension.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::io(path, "no such file"));
    }
    match extension(path).as_str() {
        "pgm" => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_pgm(&text).map_err(|e| Error::io(path, e))
        }
        _ => {
            let img = image::open(path).map_err(|e| Error::io(path, e))?.into_luma16();
            let (w, h) = (img.width() as usize, img.height() as usize);
            ImageGrid::new(
                h,
                w,
                (0..w)
                    .flat_map(|c| (0..h).map(move |r| (r, c)))
                    .map(|(r, c)| img.get_pixel(c as u32, r as u32).0[0] as f64 / 65535.0)
                    .collect(),
            )
        }
    }
}

/// Writes a 16-bit PNG or a PGM with maximum value 65535.
pub fn write_image(path: impl AsRef<Path>, img: &ImageGrid) -> Result<()> {
    write_image_with(path, img, BitDepth::Sixteen)
}

pub fn write_image_with(path: impl AsRef<Path>, img: &ImageGrid, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = img.shape();
    let max = depth.max_value();
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * max as f64).round() as u32;
    match extension(path).as_str() {
        "pgm" => {
            let mut out = format!("P2\n{w} {h}\n{max}\n");
            for r in 0..h {
                let row: Vec<String> = (0..w).map(|c| quantize(img.get(r, c)).to_string()).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
            fs::write(path, out).map_err(|e| Error::io(path, e))
        }
        "png" => {
            let result = match depth {
                BitDepth::Sixteen => {
                    ImageBuffer::<Luma<u16>, _>::from_fn(w as u32, h as u32, |c, r| {
                        Luma([quantize(img.get(r as usize, c as usize)) as u16])
                    })
                    .save(path)
                }
                BitDepth::Eight => ImageBuffer::<Luma<u8>, _>::from_fn(w as u32, h as u32, |c, r| {
                    Luma([quantize(img.get(r as usize, c as usize)) as u8])
                })
                .save(path),
            };
            result.map_err(|e| Error::io(path, e))
        }
        other => Err(Error::io(path, format!("unsupported image extension '{other}'"))),
    }
}

fn parse_pgm(text: &str) -> std::result::Result<ImageGrid, String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err("not an ASCII PGM (P2) file".into());
    }
    let mut header = |what: &str| -> std::result::Result<usize, String> {
        tokens
            .next()
            .ok_or(format!("missing {what}"))?
            .parse()
            .map_err(|_| format!("bad {what}"))
    };
    let (w, h, max) = (header("width")?, header("height")?, header("maxval")?);
    if max == 0 || max > 65535 {
        return Err(format!("maxval {max} out of range"));
    }
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<u32>().map(|v| v as f64 / max as f64))
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| "bad pixel value".to_string())?;
    if values.len() != w * h {
        return Err(format!("expected {} pixels, found {}", w * h, values.len()));
    }
    Ok(ImageGrid::from_fn(h, w, |r, c| values[r * w + c]))
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Manifest(format!("line {}: expected 'key = value'", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn read_key_values(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text)
}

pub fn write_key_values<K: AsRef<str>, V: AsRef<str>>(path: impl AsRef<Path>, pairs: &[(K, V)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{} = {}", k.as_ref(), v.as_ref());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_parser_handles_comments() {
        let img = parse_pgm("P2\n# made by hand\n3 2\n4\n0 1 2 # first row\n3 4 0\n").unwrap();
        assert_eq!(img.shape(), (2, 3));
        assert_eq!(img.get(0, 2), 0.5);
        assert_eq!(img.get(1, 1), 1.0);
        assert!(parse_pgm("P2\n3 2\n4\n0 1 2\n").is_err());
        assert!(parse_pgm("P5\n1 1\n1\n0").is_err());
    }

    #[test]
    fn key_values() {
        let m = parse_key_values("a = 1\n# skip\n\n path=x y.png  # trailing\n").unwrap();
        assert_eq!(m["a"], "1");
        assert_eq!(m["path"], "x y.png");
        assert!(parse_key_values("novalue\n").is_err());
    }
}
