//! Image decoding: binary and ASCII PGM/PPM, 8/16-bit PNG, uncompressed BMP.
//!
//! Formats are recognized by magic bytes. 16-bit samples (and PNM files with
//! `maxval > 255`) are rescaled with `v * 255 / maxval` in integer arithmetic.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Channels, Image};

const KNOWN_EXTENSIONS: &[&str] = &["pgm", "ppm", "pnm", "png", "bmp"];

/// True if the path carries one of the supported image extensions.
pub fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| KNOWN_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match decode_image(&bytes) {
        Err(Error::UnsupportedFormat(_)) if has_image_extension(path) => Err(Error::CorruptData(
            format!("{} does not start with a valid image header", path.display()),
        )),
        Err(Error::UnsupportedFormat(msg)) => {
            Err(Error::UnsupportedFormat(format!("{}: {msg}", path.display())))
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Pnm,
    Png,
    Bmp,
}

fn sniff(bytes: &[u8]) -> Option<Format> {
    match bytes {
        [b'P', b'2' | b'3' | b'5' | b'6', ..] => Some(Format::Pnm),
        [0x89, b'P', b'N', b'G', ..] => Some(Format::Png),
        [b'B', b'M', ..] => Some(Format::Bmp),
        _ => None,
    }
}

/// Decodes an in-memory image, choosing the decoder from the leading bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    match sniff(bytes) {
        Some(Format::Pnm) => decode_pnm(bytes),
        Some(Format::Png) => decode_with_image_crate(bytes, image::ImageFormat::Png),
        Some(Format::Bmp) => decode_with_image_crate(bytes, image::ImageFormat::Bmp),
        None => Err(Error::UnsupportedFormat("unrecognized file signature".into())),
    }
}

struct PnmReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn integer(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptData(format!("expected {what} in PNM data")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptData(format!("{what} out of range")))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let magic = bytes[1];
    let (channels, ascii) = match magic {
        b'2' => (Channels::Gray, true),
        b'3' => (Channels::Rgb, true),
        b'5' => (Channels::Gray, false),
        b'6' => (Channels::Rgb, false),
        _ => unreachable!("sniffed"),
    };
    let mut r = PnmReader { bytes, pos: 2 };
    let width = r.integer("width")?;
    let height = r.integer("height")?;
    let maxval = r.integer("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptData(format!("bad dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::CorruptData(format!("bad maxval {maxval}")));
    }
    let n = (width as usize)
        .checked_mul(height as usize)
        .and_then(|p| p.checked_mul(channels.count()))
        .ok_or_else(|| Error::CorruptData("dimensions overflow".into()))?;

    let mut samples = Vec::with_capacity(n.min(1 << 24));
    if ascii {
        for _ in 0..n {
            let v = r.integer("sample")?;
            if v > maxval {
                return Err(Error::CorruptData(format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        if r.pos >= bytes.len() || !bytes[r.pos].is_ascii_whitespace() {
            return Err(Error::CorruptData("missing raster separator".into()));
        }
        let raster = &bytes[r.pos + 1..];
        let width_bytes = if maxval > 255 { 2 } else { 1 };
        if raster.len() < n * width_bytes {
            return Err(Error::CorruptData(format!(
                "raster truncated: need {} bytes, have {}",
                n * width_bytes,
                raster.len()
            )));
        }
        if width_bytes == 1 {
            samples.extend(raster[..n].iter().map(|&b| b as u32));
        } else {
            samples.extend(
                raster[..2 * n]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32),
            );
        }
        if samples.iter().any(|&v| v > maxval) {
            return Err(Error::CorruptData(format!("sample exceeds maxval {maxval}")));
        }
    }
    let data = if maxval > 255 {
        samples.iter().map(|&v| (v * 255 / maxval) as u8).collect()
    } else {
        samples.iter().map(|&v| v as u8).collect()
    };
    Image::new(width, height, channels, data)
}

fn decode_with_image_crate(bytes: &[u8], format: image::ImageFormat) -> Result<Image> {
    use image::DynamicImage as D;
    let decoded = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::CorruptData(other.to_string()),
    })?;
    let (w, h) = (decoded.width(), decoded.height());
    let scale16 = |v: u16| (v as u32 * 255 / 65535) as u8;
    match decoded {
        D::ImageLuma8(buf) => Image::gray(w, h, buf.into_raw()),
        D::ImageLumaA8(buf) => Image::gray(w, h, buf.pixels().map(|p| p.0[0]).collect()),
        D::ImageLuma16(buf) => Image::gray(w, h, buf.into_raw().into_iter().map(scale16).collect()),
        D::ImageLumaA16(buf) => Image::gray(w, h, buf.pixels().map(|p| scale16(p.0[0])).collect()),
        D::ImageRgb8(buf) => Image::rgb(w, h, buf.into_raw()),
        D::ImageRgba8(buf) => Image::rgb(
            w,
            h,
            buf.pixels().flat_map(|p| [p.0[0], p.0[1], p.0[2]]).collect(),
        ),
        D::ImageRgb16(buf) => Image::rgb(w, h, buf.into_raw().into_iter().map(scale16).collect()),
        D::ImageRgba16(buf) => Image::rgb(
            w,
            h,
            buf.pixels()
                .flat_map(|p| [scale16(p.0[0]), scale16(p.0[1]), scale16(p.0[2])])
                .collect(),
        ),
        other => Err(Error::UnsupportedFormat(format!(
            "unsupported pixel layout {:?}",
            other.color()
        ))),
    }
}

/// Encodes an image as binary PGM (gray) or PPM (RGB).
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = match img.channels() {
        Channels::Gray => "P5",
        Channels::Rgb => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

/// Encodes an image as 8-bit PNG.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let color = match img.channels() {
        Channels::Gray => image::ExtendedColorType::L8,
        Channels::Rgb => image::ExtendedColorType::Rgb8,
    };
    let mut out = Vec::new();
    image::ImageEncoder::write_image(
        image::codecs::png::PngEncoder::new(&mut out),
        img.data(),
        img.width(),
        img.height(),
        color,
    )
    .map_err(|e| Error::CorruptData(e.to_string()))?;
    Ok(out)
}

/// Area-averaged downscale so that the longer side is at most `max_side`.
/// Images already within the bound are returned unchanged.
pub fn thumbnail(img: &Image, max_side: u32) -> Image {
    let (w, h) = (img.width(), img.height());
    if w.max(h) <= max_side {
        return img.clone();
    }
    let (tw, th) = if w >= h {
        (max_side, ((h as u64 * max_side as u64 + w as u64 / 2) / w as u64).max(1) as u32)
    } else {
        (((w as u64 * max_side as u64 + h as u64 / 2) / h as u64).max(1) as u32, max_side)
    };
    let c = img.channels().count();
    let mut data = Vec::with_capacity(tw as usize * th as usize * c);
    for ty in 0..th {
        let y0 = (ty as u64 * h as u64 / th as u64) as u32;
        let y1 = (((ty + 1) as u64 * h as u64 / th as u64) as u32).max(y0 + 1);
        for tx in 0..tw {
            let x0 = (tx as u64 * w as u64 / tw as u64) as u32;
            let x1 = (((tx + 1) as u64 * w as u64 / tw as u64) as u32).max(x0 + 1);
            let mut acc = [0u64; 3];
            for y in y0..y1 {
                for x in x0..x1 {
                    let i = (y as usize * w as usize + x as usize) * c;
                    for (k, a) in acc.iter_mut().enumerate().take(c) {
                        *a += img.data()[i + k] as u64;
                    }
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as u64;
            data.extend(acc.iter().take(c).map(|&a| ((a + n / 2) / n) as u8));
        }
    }
    Image::new(tw, th, img.channels(), data).expect("thumbnail dimensions are consistent")
}
