//! Texture block: co-occurrence (GLCM) statistics and the Tamura
//! coarseness / contrast / directionality triple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Channels, Image};

/// Normalized, symmetric co-occurrence matrix for one pixel offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub levels: usize,
    pub offset: (i32, i32),
    /// Row-major `levels x levels` probabilities.
    pub p: Vec<f64>,
}

impl CooccurrenceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }
}

/// Requantizes gray values to `levels` levels: `v -> floor(v * levels / 256)`.
pub fn quantize_levels(img: &Image, levels: usize) -> Result<Vec<u16>> {
    if img.channels() != Channels::Gray {
        return Err(Error::WrongChannels {
            expected: 1,
            actual: img.channels().count() as u8,
        });
    }
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidParameter(format!(
            "GLCM needs 2..=256 gray levels, got {levels}"
        )));
    }
    Ok(img
        .data()
        .iter()
        .map(|&v| (v as usize * levels / 256) as u16)
        .collect())
}

/// Co-occurrence matrix of a gray image at `offset = (dx, dy)`, after
/// requantizing to `levels` gray levels.
pub fn glcm(img: &Image, offset: (i32, i32), levels: usize) -> Result<CooccurrenceMatrix> {
    let q = quantize_levels(img, levels)?;
    glcm_from_levels(&q, img.width(), img.height(), offset, levels)
}

/// Co-occurrence matrix of an already-quantized level map (values `< levels`).
/// Every in-bounds pair is counted in both directions.
pub fn glcm_from_levels(
    q: &[u16],
    width: u32,
    height: u32,
    offset: (i32, i32),
    levels: usize,
) -> Result<CooccurrenceMatrix> {
    assert_eq!(q.len(), width as usize * height as usize);
    if levels < 2 {
        return Err(Error::InvalidParameter(format!(
            "GLCM needs at least 2 gray levels, got {levels}"
        )));
    }
    if let Some(&bad) = q.iter().find(|&&v| v as usize >= levels) {
        return Err(Error::InvalidParameter(format!(
            "level {bad} out of range for {levels} levels"
        )));
    }
    let (dx, dy) = offset;
    let (w, h) = (width as i64, height as i64);
    let mut counts = vec![0u64; levels * levels];
    let mut pairs = 0u64;
    for y in 0..h {
        let y2 = y + dy as i64;
        if !(0..h).contains(&y2) {
            continue;
        }
        for x in 0..w {
            let x2 = x + dx as i64;
            if !(0..w).contains(&x2) {
                continue;
            }
            let a = q[(y * w + x) as usize] as usize;
            let b = q[(y2 * w + x2) as usize] as usize;
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
            pairs += 2;
        }
    }
    if pairs == 0 {
        return Err(Error::NoValidPairs { dx, dy });
    }
    let total = pairs as f64;
    Ok(CooccurrenceMatrix {
        levels,
        offset,
        p: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// The five co-occurrence statistics used in the texture block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub dissimilarity: f64,
    pub homogeneity: f64,
    pub angular_second_moment: f64,
    pub entropy: f64,
}

impl GlcmFeatures {
    pub fn to_array(&self) -> [f64; 5] {
        [
            self.contrast,
            self.dissimilarity,
            self.homogeneity,
            self.angular_second_moment,
            self.entropy,
        ]
    }
}

pub fn glcm_features(m: &CooccurrenceMatrix) -> GlcmFeatures {
    let mut f = GlcmFeatures::default();
    for i in 0..m.levels {
        for j in 0..m.levels {
            let p = m.get(i, j);
            if p == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            f.contrast += p * d * d;
            f.dissimilarity += p * d.abs();
            f.homogeneity += p / (1.0 + d * d);
            f.angular_second_moment += p * p;
            f.entropy -= p * p.ln();
        }
    }
    f
}

/// GLCM features averaged over several offsets.
pub fn mean_glcm_features(img: &Image, offsets: &[(i32, i32)], levels: usize) -> Result<GlcmFeatures> {
    if offsets.is_empty() {
        return Err(Error::InvalidParameter("no GLCM offsets given".into()));
    }
    let q = quantize_levels(img, levels)?;
    let mut acc = [0.0; 5];
    for &offset in offsets {
        let m = glcm_from_levels(&q, img.width(), img.height(), offset, levels)?;
        for (a, v) in acc.iter_mut().zip(glcm_features(&m).to_array()) {
            *a += v;
        }
    }
    let n = offsets.len() as f64;
    Ok(GlcmFeatures {
        contrast: acc[0] / n,
        dissimilarity: acc[1] / n,
        homogeneity: acc[2] / n,
        angular_second_moment: acc[3] / n,
        entropy: acc[4] / n,
    })
}

/// Smallest side accepted by [`tamura_features`].
pub const TAMURA_MIN_SIDE: u32 = 32;
/// Largest window exponent used for coarseness (windows up to 32x32).
pub const TAMURA_MAX_SCALE: u32 = 5;
/// Gradient magnitude a pixel must exceed to vote for directionality.
pub const TAMURA_GRADIENT_THRESHOLD: f64 = 12.0;
/// Orientation bins over `[0, pi)`.
pub const TAMURA_DIRECTION_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TamuraFeatures {
    pub coarseness: f64,
    pub contrast: f64,
    pub directionality: f64,
}

impl TamuraFeatures {
    pub fn to_array(&self) -> [f64; 3] {
        [self.coarseness, self.contrast, self.directionality]
    }
}

pub fn tamura_features(img: &Image) -> Result<TamuraFeatures> {
    if img.channels() != Channels::Gray {
        return Err(Error::WrongChannels {
            expected: 1,
            actual: img.channels().count() as u8,
        });
    }
    if img.width() < TAMURA_MIN_SIDE || img.height() < TAMURA_MIN_SIDE {
        return Err(Error::ImageTooSmall(format!(
            "Tamura features need at least {TAMURA_MIN_SIDE}x{TAMURA_MIN_SIDE}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(TamuraFeatures {
        coarseness: tamura_coarseness(img),
        contrast: tamura_contrast(img),
        directionality: tamura_directionality(img),
    })
}

/// Summed-area table over the image padded by `pad` pixels of edge replication
/// on every side, so every window lookup stays in bounds.
struct PaddedIntegral {
    stride: usize,
    pad: i64,
    sums: Vec<u64>,
}

impl PaddedIntegral {
    fn new(img: &Image, pad: u32) -> Self {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let pad = pad as i64;
        let pw = (w + 2 * pad) as usize;
        let ph = (h + 2 * pad) as usize;
        let stride = pw + 1;
        let mut sums = vec![0u64; stride * (ph + 1)];
        for py in 0..ph {
            let sy = (py as i64 - pad).clamp(0, h - 1);
            let mut row = 0u64;
            for px in 0..pw {
                let sx = (px as i64 - pad).clamp(0, w - 1);
                row += img.gray_at(sx as u32, sy as u32) as u64;
                sums[(py + 1) * stride + px + 1] = sums[py * stride + px + 1] + row;
            }
        }
        PaddedIntegral { stride, pad, sums }
    }

    /// Sum over `[x0, x1) x [y0, y1)` in original image coordinates.
    fn sum(&self, x0: i64, y0: i64, x1: i64, y1: i64) -> u64 {
        let s = |x: i64, y: i64| self.sums[(y + self.pad) as usize * self.stride + (x + self.pad) as usize];
        s(x1, y1) + s(x0, y0) - s(x1, y0) - s(x0, y1)
    }
}

/// Mean over pixels of `2^k*`, where `k*` maximizes the difference between
/// the averages of two adjacent `2^k x 2^k` windows (horizontal or vertical).
/// Ties resolve to the smallest `k`.
fn tamura_coarseness(img: &Image) -> f64 {
    let max_side = 1i64 << TAMURA_MAX_SCALE;
    let table = PaddedIntegral::new(img, max_side as u32);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut total = 0u64;
    for y in 0..h {
        for x in 0..w {
            let mut best_k = 0u32;
            let mut best = -1.0f64;
            for k in 0..=TAMURA_MAX_SCALE {
                let s = 1i64 << k;
                let half = s / 2;
                let area = (s * s) as f64;
                // windows meet at the pixel's left / top edge
                let left = table.sum(x - s, y - half, x, y - half + s) as f64 / area;
                let right = table.sum(x, y - half, x + s, y - half + s) as f64 / area;
                let up = table.sum(x - half, y - s, x - half + s, y) as f64 / area;
                let down = table.sum(x - half, y, x - half + s, y + s) as f64 / area;
                let e = (right - left).abs().max((down - up).abs());
                if e > best {
                    best = e;
                    best_k = k;
                }
            }
            total += 1u64 << best_k;
        }
    }
    total as f64 / (w * h) as f64
}

/// `sigma / kurtosis^(1/4)`, 0 for a flat image.
fn tamura_contrast(img: &Image) -> f64 {
    let data = img.data();
    let n = data.len() as f64;
    let mean = data.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in data {
        let d = v as f64 - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return 0.0;
    }
    let kurtosis = m4 / (m2 * m2);
    m2.sqrt() / kurtosis.powf(0.25)
}

/// Mean resultant length of the doubled-angle orientation histogram, i.e.
/// one minus its circular variance. Gradients come from 3x3 Prewitt masks
/// (averaged, so magnitudes are in gray-level units) on interior pixels.
fn tamura_directionality(img: &Image) -> f64 {
    let (w, h) = (img.width(), img.height());
    let g = |x: u32, y: u32| img.gray_at(x, y) as f64;
    let mut hist = [0u64; TAMURA_DIRECTION_BINS];
    let mut votes = 0u64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dh = ((g(x + 1, y - 1) + g(x + 1, y) + g(x + 1, y + 1))
                - (g(x - 1, y - 1) + g(x - 1, y) + g(x - 1, y + 1)))
                / 3.0;
            let dv = ((g(x - 1, y + 1) + g(x, y + 1) + g(x + 1, y + 1))
                - (g(x - 1, y - 1) + g(x, y - 1) + g(x + 1, y - 1)))
                / 3.0;
            let magnitude = (dh.abs() + dv.abs()) / 2.0;
            if magnitude <= TAMURA_GRADIENT_THRESHOLD {
                continue;
            }
            let theta = dv.atan2(dh).rem_euclid(std::f64::consts::PI);
            let bin = ((theta / std::f64::consts::PI * TAMURA_DIRECTION_BINS as f64) as usize)
                .min(TAMURA_DIRECTION_BINS - 1);
            hist[bin] += 1;
            votes += 1;
        }
    }
    if votes == 0 {
        return 0.0;
    }
    let (mut c, mut s) = (0.0, 0.0);
    for (b, &count) in hist.iter().enumerate() {
        let center = (b as f64 + 0.5) * std::f64::consts::PI / TAMURA_DIRECTION_BINS as f64;
        c += count as f64 * (2.0 * center).cos();
        s += count as f64 * (2.0 * center).sin();
    }
    (c * c + s * s).sqrt() / votes as f64
}
