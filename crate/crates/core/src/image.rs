//! Raster images, color-space conversions, gray-level histograms and CDFs.
//!
//! Images are plain row-major byte matrices with one (gray) or three (RGB)
//! interleaved channels. Everything in this module is a pure function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of interleaved samples per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// A 2-D gray or RGB image with 8-bit samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: Channels,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: Channels, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * channels.count();
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "expected {expected} samples for {width}x{height}x{}, got {}",
                channels.count(),
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Image::new(width, height, Channels::Gray, data)
    }

    pub fn rgb(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        Image::new(width, height, Channels::Rgb, data)
    }

    /// Builds a gray image by evaluating `f(x, y)` at every pixel.
    pub fn from_gray_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::gray(width, height, data)
    }

    /// Builds an RGB image by evaluating `f(x, y)` at every pixel.
    pub fn from_rgb_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image::rgb(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Gray value at `(x, y)`; panics on RGB images or out-of-range coordinates.
    pub fn gray_at(&self, x: u32, y: u32) -> u8 {
        assert_eq!(self.channels, Channels::Gray);
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// RGB triple at `(x, y)`; gray images are replicated across the three channels.
    pub fn rgb_at(&self, x: u32, y: u32) -> [u8; 3] {
        let i = y as usize * self.width as usize + x as usize;
        match self.channels {
            Channels::Gray => [self.data[i]; 3],
            Channels::Rgb => [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]],
        }
    }

    /// Iterates pixels as RGB triples in row-major order.
    pub fn rgb_pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        let step = self.channels.count();
        self.data.chunks_exact(step).map(move |p| match p.len() {
            1 => [p[0]; 3],
            _ => [p[0], p[1], p[2]],
        })
    }

    /// Same image rotated 90 degrees clockwise.
    pub fn rotate90(&self) -> Image {
        let (w, h) = (self.width as usize, self.height as usize);
        let c = self.channels.count();
        let mut data = vec![0u8; self.data.len()];
        // new width = h, new height = w; new(x', y') = old(y', h - 1 - x')
        for y in 0..h {
            for x in 0..w {
                let nx = h - 1 - y;
                let ny = x;
                let src = (y * w + x) * c;
                let dst = (ny * h + nx) * c;
                data[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        Image {
            width: self.height,
            height: self.width,
            channels: self.channels,
            data,
        }
    }

    /// Nearest-neighbor upscaling by an integer factor (pixel replication).
    pub fn replicate(&self, factor: u32) -> Image {
        assert!(factor >= 1);
        let c = self.channels.count();
        let (w, h) = (self.width * factor, self.height * factor);
        let mut data = Vec::with_capacity(w as usize * h as usize * c);
        for y in 0..h {
            for x in 0..w {
                let src = ((y / factor) as usize * self.width as usize + (x / factor) as usize) * c;
                data.extend_from_slice(&self.data[src..src + c]);
            }
        }
        Image {
            width: w,
            height: h,
            channels: self.channels,
            data,
        }
    }

    fn require(&self, channels: Channels) -> Result<()> {
        if self.channels != channels {
            return Err(Error::WrongChannels {
                expected: channels.count() as u8,
                actual: self.channels.count() as u8,
            });
        }
        Ok(())
    }
}

/// BT.601 luma, rounded to the nearest integer.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Converts to a single gray channel. Gray input is returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    match img.channels {
        Channels::Gray => img.clone(),
        Channels::Rgb => Image {
            width: img.width,
            height: img.height,
            channels: Channels::Gray,
            data: img.rgb_pixels().map(luma).collect(),
        },
    }
}

/// A pixel in hue/saturation/value coordinates: hue in degrees `[0, 360)`,
/// saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB to HSV. Achromatic pixels get hue 0.
pub fn hsv_from_rgb(rgb: [u8; 3]) -> Hsv {
    let [r, g, b] = rgb.map(|c| c as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { h - 360.0 } else { h };
    Hsv { h, s, v }
}

/// Per-pixel HSV matrix of an RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Hsv>,
}

pub fn rgb_to_hsv(img: &Image) -> Result<HsvImage> {
    img.require(Channels::Rgb)?;
    Ok(HsvImage {
        width: img.width,
        height: img.height,
        pixels: img.rgb_pixels().map(hsv_from_rgb).collect(),
    })
}

/// Opponent color axes `(R - G, 2B - R - G, R + G + B)`; brightness lands on the third axis.
pub fn opponent_from_rgb(rgb: [u8; 3]) -> [i32; 3] {
    let [r, g, b] = rgb.map(i32::from);
    [r - g, 2 * b - r - g, r + g + b]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpponentImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[i32; 3]>,
}

pub fn opponent_transform(img: &Image) -> Result<OpponentImage> {
    img.require(Channels::Rgb)?;
    Ok(OpponentImage {
        width: img.width,
        height: img.height,
        pixels: img.rgb_pixels().map(opponent_from_rgb).collect(),
    })
}

/// Per-level pixel counts of one gray channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    bins: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(bins: Vec<u64>) -> Result<Self> {
        if bins.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "histogram needs at least 2 bins, got {}",
                bins.len()
            )));
        }
        let total = bins.iter().sum();
        Ok(Histogram { bins, total })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Bin of gray value `v` among `bins` equal-width bins over `[0, 256)`.
#[inline]
pub fn quantize(v: u8, bins: usize) -> usize {
    v as usize * bins / 256
}

/// Gray-level histogram with `bins` bins; value `v` goes to `floor(v * bins / 256)`.
pub fn histogram(img: &Image, bins: usize) -> Result<Histogram> {
    img.require(Channels::Gray)?;
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "histogram needs at least 2 bins, got {bins}"
        )));
    }
    let mut counts = vec![0u64; bins];
    for &v in &img.data {
        counts[quantize(v, bins)] += 1;
    }
    Histogram::from_counts(counts)
}

/// Cumulative distribution over histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub values: Vec<f64>,
}

pub fn cdf(h: &Histogram) -> Result<CdfCurve> {
    if h.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = h.total as f64;
    let mut running = 0u64;
    let values = h
        .bins
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / total
        })
        .collect();
    Ok(CdfCurve { values })
}
