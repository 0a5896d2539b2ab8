//! Color block of the feature vector: quantized HSV histogram, per-channel
//! color moments, and target histograms built from named color proportions.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{hsv_from_rgb, Hsv, Image};

/// Quantization grid over hue, saturation and value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HsvGrid {
    pub hue: usize,
    pub saturation: usize,
    pub value: usize,
}

impl Default for HsvGrid {
    fn default() -> Self {
        HsvGrid {
            hue: 8,
            saturation: 3,
            value: 3,
        }
    }
}

impl HsvGrid {
    pub fn bins(&self) -> usize {
        self.hue * self.saturation * self.value
    }

    pub fn validate(&self) -> Result<()> {
        if self.hue == 0 || self.saturation == 0 || self.value == 0 {
            return Err(Error::InvalidParameter(format!(
                "HSV grid dimensions must be at least 1, got {}x{}x{}",
                self.hue, self.saturation, self.value
            )));
        }
        Ok(())
    }

    /// Flat bin index of an HSV pixel. Hue is the slowest-varying axis.
    pub fn bin_of(&self, p: Hsv) -> usize {
        let h = ((p.h * self.hue as f64 / 360.0).floor() as usize).min(self.hue - 1);
        let s = ((p.s * self.saturation as f64).floor() as usize).min(self.saturation - 1);
        let v = ((p.v * self.value as f64).floor() as usize).min(self.value - 1);
        self.index(h, s, v)
    }

    pub fn index(&self, h: usize, s: usize, v: usize) -> usize {
        (h * self.saturation + s) * self.value + v
    }
}

/// Normalized color histogram over an [`HsvGrid`]; entries sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorHistogramFeature {
    pub grid: HsvGrid,
    pub bins: Vec<f64>,
}

pub fn hsv_histogram(img: &Image, grid: HsvGrid) -> Result<ColorHistogramFeature> {
    grid.validate()?;
    let n = img.pixel_count();
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    let mut counts = vec![0u64; grid.bins()];
    for rgb in img.rgb_pixels() {
        counts[grid.bin_of(hsv_from_rgb(rgb))] += 1;
    }
    Ok(ColorHistogramFeature {
        grid,
        bins: counts.into_iter().map(|c| c as f64 / n as f64).collect(),
    })
}

/// Mean, population standard deviation and cube root of the third central
/// moment of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMoments {
    pub mean: f64,
    pub std_dev: f64,
    pub skew: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorMomentsFeature {
    /// R, G, B in that order.
    pub channels: [ChannelMoments; 3],
}

impl ColorMomentsFeature {
    pub fn to_vec(&self) -> Vec<f64> {
        self.channels
            .iter()
            .flat_map(|c| [c.mean, c.std_dev, c.skew])
            .collect()
    }
}

pub fn color_moments(img: &Image) -> Result<ColorMomentsFeature> {
    let n = img.pixel_count();
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    let mut sums = [0u64; 3];
    for p in img.rgb_pixels() {
        for c in 0..3 {
            sums[c] += p[c] as u64;
        }
    }
    let means = sums.map(|s| s as f64 / n as f64);
    let mut m2 = [0f64; 3];
    let mut m3 = [0f64; 3];
    for p in img.rgb_pixels() {
        for c in 0..3 {
            let d = p[c] as f64 - means[c];
            m2[c] += d * d;
            m3[c] += d * d * d;
        }
    }
    let channels = std::array::from_fn(|c| ChannelMoments {
        mean: means[c],
        std_dev: (m2[c] / n as f64).sqrt(),
        skew: (m3[c] / n as f64).cbrt(),
    });
    Ok(ColorMomentsFeature { channels })
}

/// Color names accepted in proportion queries such as `blue 51%`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorName {
    Red,
    Orange,
    Yellow,
    Green,
    Cyan,
    Blue,
    Purple,
    Magenta,
}

impl ColorName {
    pub const ALL: [ColorName; 8] = [
        ColorName::Red,
        ColorName::Orange,
        ColorName::Yellow,
        ColorName::Green,
        ColorName::Cyan,
        ColorName::Blue,
        ColorName::Purple,
        ColorName::Magenta,
    ];

    /// Representative hue in degrees.
    pub fn hue(self) -> f64 {
        match self {
            ColorName::Red => 0.0,
            ColorName::Orange => 30.0,
            ColorName::Yellow => 60.0,
            ColorName::Green => 120.0,
            ColorName::Cyan => 180.0,
            ColorName::Blue => 240.0,
            ColorName::Purple => 270.0,
            ColorName::Magenta => 300.0,
        }
    }
}

impl FromStr for ColorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "red" => ColorName::Red,
            "orange" => ColorName::Orange,
            "yellow" => ColorName::Yellow,
            "green" => ColorName::Green,
            "cyan" => ColorName::Cyan,
            "blue" => ColorName::Blue,
            "purple" => ColorName::Purple,
            "magenta" => ColorName::Magenta,
            _ => return Err(Error::UnknownColor(s.to_string())),
        })
    }
}

/// Builds a target histogram from `(color, fraction)` pairs. Each fraction is
/// put in the fully saturated, full-value bin of the color's hue; whatever is
/// left of the unit mass is spread evenly over all bins. Colors that share a
/// hue band add up.
pub fn histogram_from_proportions(
    proportions: &[(ColorName, f64)],
    grid: HsvGrid,
) -> Result<ColorHistogramFeature> {
    grid.validate()?;
    if let Some((name, f)) = proportions.iter().find(|(_, f)| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "fraction for {name:?} must be a nonnegative number, got {f}"
        )));
    }
    let total: f64 = proportions.iter().map(|(_, f)| f).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::ProportionOverflow(total));
    }
    let residual = (1.0 - total).max(0.0) / grid.bins() as f64;
    let mut bins = vec![residual; grid.bins()];
    for &(name, fraction) in proportions {
        let bin = grid.bin_of(Hsv {
            h: name.hue(),
            s: 1.0,
            v: 1.0,
        });
        bins[bin] += fraction;
    }
    Ok(ColorHistogramFeature { grid, bins })
}

/// Parses a proportion query like `"blue 51%, red 0.3"`.
pub fn parse_proportions(text: &str) -> Result<Vec<(ColorName, f64)>> {
    text.split(',')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let mut words = part.split_whitespace();
            let (Some(name), Some(amount), None) = (words.next(), words.next(), words.next())
            else {
                return Err(Error::InvalidParameter(format!(
                    "expected `<color> <fraction>`, got `{}`",
                    part.trim()
                )));
            };
            let color = name.parse()?;
            let fraction = match amount.strip_suffix('%') {
                Some(pct) => pct.parse::<f64>().map(|v| v / 100.0),
                None => amount.parse::<f64>(),
            }
            .map_err(|_| Error::InvalidParameter(format!("bad fraction `{amount}`")))?;
            Ok((color, fraction))
        })
        .collect()
}
