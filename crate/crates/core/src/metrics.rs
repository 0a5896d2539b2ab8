//! Distances and similarities between images, histograms and feature vectors,
//! plus the overall similarity metric (OSM) over the three feature blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Channels, Histogram, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelDistanceKind {
    /// Sum of absolute differences.
    Abs,
    /// Sum of squared differences.
    Squared,
    /// Square root of the sum of squared differences.
    Euclidean,
}

fn same_gray_dims(a: &Image, b: &Image) -> Result<()> {
    for img in [a, b] {
        if img.channels() != Channels::Gray {
            return Err(Error::WrongChannels {
                expected: 1,
                actual: img.channels().count() as u8,
            });
        }
    }
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn pixel_values(img: &Image) -> impl Iterator<Item = f64> + '_ {
    img.data().iter().map(|&v| v as f64)
}

/// Pixel-to-pixel distance between two gray images of equal size, using the
/// gray value as the pixel characteristic.
pub fn pixel_distance(a: &Image, b: &Image, kind: PixelDistanceKind) -> Result<f64> {
    same_gray_dims(a, b)?;
    let diffs = pixel_values(a).zip(pixel_values(b)).map(|(x, y)| x - y);
    Ok(match kind {
        PixelDistanceKind::Abs => diffs.map(f64::abs).sum(),
        PixelDistanceKind::Squared => diffs.map(|d| d * d).sum(),
        PixelDistanceKind::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
    })
}

/// Mean and sample standard deviation of per-pixel differences `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub mean_diff: f64,
    pub sample_std: f64,
    pub n: usize,
}

pub fn diff_stats(a: &[f64], b: &[f64]) -> Result<DiffStats> {
    check_len(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample variance needs at least 2 values, got {n}"
        )));
    }
    let mean = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / n as f64;
    let ss: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let e = (x - y) - mean;
            e * e
        })
        .sum();
    Ok(DiffStats {
        mean_diff: mean,
        sample_std: (ss / (n - 1) as f64).sqrt(),
        n,
    })
}

/// `sqrt(n) * |mean diff| / sample std`. Zero when there is no difference at
/// all; `f64::INFINITY` when the difference is a nonzero constant.
pub fn stabilized_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let stats = diff_stats(a, b)?;
    Ok(stabilized_from_stats(&stats))
}

fn stabilized_from_stats(s: &DiffStats) -> f64 {
    if s.sample_std == 0.0 {
        if s.mean_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (s.n as f64).sqrt() * s.mean_diff.abs() / s.sample_std
    }
}

/// Stabilized pixel distance between two gray images of equal size.
pub fn stabilized_pixel_distance(a: &Image, b: &Image) -> Result<f64> {
    same_gray_dims(a, b)?;
    let va: Vec<f64> = pixel_values(a).collect();
    let vb: Vec<f64> = pixel_values(b).collect();
    stabilized_distance(&va, &vb)
}

/// `1 - cos(u, v)`. Errors if either vector is all zeros.
pub fn cosine_disparity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u, v)?;
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedInput(
            "cosine disparity of a zero vector".into(),
        ));
    }
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// Normalized inner-product disparity between the pixel vectors of two gray images.
pub fn vector_disparity(a: &Image, b: &Image) -> Result<f64> {
    same_gray_dims(a, b)?;
    let va: Vec<f64> = pixel_values(a).collect();
    let vb: Vec<f64> = pixel_values(b).collect();
    cosine_disparity(&va, &vb)
}

/// Euclidean distance between two histograms' bin counts.
pub fn histogram_distance(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::LengthMismatch {
            left: h1.len(),
            right: h2.len(),
        });
    }
    Ok(h1
        .bins()
        .iter()
        .zip(h2.bins())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Same as [`histogram_distance`] over real-valued bins.
pub fn histogram_distance_f64(h1: &[f64], h2: &[f64]) -> Result<f64> {
    check_len(h1, h2)?;
    Ok(h1.iter().zip(h2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Tolerance on the unit sum required by [`histogram_intersection`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// `sum_i min(h1[i], h2[i])` of two normalized histograms.
pub fn histogram_intersection(h1: &[f64], h2: &[f64]) -> Result<f64> {
    check_len(h1, h2)?;
    for h in [h1, h2] {
        let s: f64 = h.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized(s));
        }
    }
    Ok(h1.iter().zip(h2).map(|(a, b)| a.min(*b)).sum())
}

/// Minkowski distance of order `p >= 1`.
pub fn minkowski(u: &[f64], v: &[f64], p: f64) -> Result<f64> {
    check_len(u, v)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "Minkowski order must be a finite p >= 1, got {p}"
        )));
    }
    Ok(if p == 1.0 {
        u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum()
    } else if p == 2.0 {
        u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    } else {
        u.iter()
            .zip(v)
            .map(|(a, b)| (a - b).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    })
}

pub(crate) fn check_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// Partial similarities per block and their equal-weight mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBreakdown {
    pub e_texture: f64,
    pub e_intensity: f64,
    pub e_shape: f64,
    pub osm: f64,
}

impl SimilarityBreakdown {
    /// Combines three partial similarities.
    pub fn from_partials(e_texture: f64, e_intensity: f64, e_shape: f64) -> Self {
        SimilarityBreakdown {
            e_texture,
            e_intensity,
            e_shape,
            osm: (e_texture + e_intensity + e_shape) / 3.0,
        }
    }

    /// Maps per-block Euclidean distances through `1 / (1 + d)`.
    pub fn from_distances(d_texture: f64, d_intensity: f64, d_shape: f64) -> Self {
        let e = |d: f64| 1.0 / (1.0 + d);
        Self::from_partials(e(d_texture), e(d_intensity), e(d_shape))
    }
}

/// Where each block sits inside a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockLayout {
    /// HSV histogram bins (start of the color block).
    pub color_histogram: usize,
    /// Color moments following the histogram.
    pub color_moments: usize,
    pub texture: usize,
    pub shape: usize,
}

impl BlockLayout {
    pub fn len(&self) -> usize {
        self.color_len() + self.texture + self.shape
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn color_len(&self) -> usize {
        self.color_histogram + self.color_moments
    }

    pub fn color<'a>(&self, fv: &'a [f64]) -> &'a [f64] {
        &fv[..self.color_len()]
    }

    pub fn color_histogram<'a>(&self, fv: &'a [f64]) -> &'a [f64] {
        &fv[..self.color_histogram]
    }

    pub fn texture<'a>(&self, fv: &'a [f64]) -> &'a [f64] {
        let s = self.color_len();
        &fv[s..s + self.texture]
    }

    pub fn shape<'a>(&self, fv: &'a [f64]) -> &'a [f64] {
        &fv[self.color_len() + self.texture..]
    }

    pub fn check(&self, fv: &[f64]) -> Result<()> {
        if fv.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: fv.len(),
            });
        }
        Ok(())
    }
}

/// Overall similarity of two blocked feature vectors (larger is more similar).
pub fn osm(layout: &BlockLayout, query: &[f64], other: &[f64]) -> Result<SimilarityBreakdown> {
    layout.check(query)?;
    layout.check(other)?;
    let l2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(SimilarityBreakdown::from_distances(
        l2(layout.texture(query), layout.texture(other)),
        l2(layout.color(query), layout.color(other)),
        l2(layout.shape(query), layout.shape(other)),
    ))
}

/// Ranking metric selectable from configuration and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Metric {
    L1,
    L2,
    Minkowski(f64),
    Histogram,
    Intersection,
    Osm,
    Spd,
    Cosine,
}

/// Whether smaller or larger scores rank first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

impl Metric {
    pub const NAMES: &'static str = "l1, l2, minkowski:<p>, histogram, intersection, osm, spd, cosine";

    pub fn direction(self) -> Direction {
        match self {
            Metric::Osm | Metric::Intersection => Direction::Descending,
            _ => Direction::Ascending,
        }
    }

    /// Score a database entry against a query. `raw` vectors are used by the
    /// histogram metrics, `norm` vectors by everything else.
    pub fn score(
        self,
        layout: &BlockLayout,
        query_raw: &[f64],
        query_norm: &[f64],
        raw: &[f64],
        norm: &[f64],
    ) -> Result<f64> {
        match self {
            Metric::L1 => minkowski(query_norm, norm, 1.0),
            Metric::L2 => minkowski(query_norm, norm, 2.0),
            Metric::Minkowski(p) => minkowski(query_norm, norm, p),
            Metric::Histogram => histogram_distance_f64(
                layout.color_histogram(query_raw),
                layout.color_histogram(raw),
            ),
            Metric::Intersection => histogram_intersection(
                &renormalized(layout.color_histogram(query_raw)),
                layout.color_histogram(raw),
            ),
            Metric::Osm => osm(layout, query_norm, norm).map(|b| b.osm),
            Metric::Spd => stabilized_distance(query_norm, norm),
            Metric::Cosine => cosine_disparity(query_norm, norm).or_else(|_| {
                // zero vectors: equal means no disparity, otherwise orthogonal
                check_len(query_norm, norm)?;
                Ok(if query_norm == norm { 0.0 } else { 1.0 })
            }),
        }
    }
}

/// Rescales a nonnegative histogram to unit mass when it is off by more than
/// the intersection tolerance (as after relevance feedback).
fn renormalized(h: &[f64]) -> std::borrow::Cow<'_, [f64]> {
    let s: f64 = h.iter().sum();
    if (s - 1.0).abs() <= NORMALIZATION_TOLERANCE || s <= 0.0 {
        std::borrow::Cow::Borrowed(h)
    } else {
        std::borrow::Cow::Owned(h.iter().map(|v| v / s).collect())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::L1 => f.write_str("l1"),
            Metric::L2 => f.write_str("l2"),
            Metric::Minkowski(p) => write!(f, "minkowski:{p}"),
            Metric::Histogram => f.write_str("histogram"),
            Metric::Intersection => f.write_str("intersection"),
            Metric::Osm => f.write_str("osm"),
            Metric::Spd => f.write_str("spd"),
            Metric::Cosine => f.write_str("cosine"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Metric::L1,
            "l2" => Metric::L2,
            "histogram" => Metric::Histogram,
            "intersection" => Metric::Intersection,
            "osm" => Metric::Osm,
            "spd" => Metric::Spd,
            "cosine" => Metric::Cosine,
            other => {
                let p = other
                    .strip_prefix("minkowski:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::UnknownMetric(s.to_string()))?;
                if !(p.is_finite() && p >= 1.0) {
                    return Err(Error::UnknownMetric(s.to_string()));
                }
                Metric::Minkowski(p)
            }
        };
        Ok(m)
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_pair() -> (Image, Image) {
        (
            Image::gray(3, 3, vec![4, 3, 7, 0, 0, 1, 9, 5, 5]).unwrap(),
            Image::gray(3, 3, vec![5, 3, 5, 0, 0, 0, 8, 5, 1]).unwrap(),
        )
    }

    #[test]
    fn worked_example_distances() {
        let (a, b) = paper_pair();
        assert_eq!(pixel_distance(&a, &b, PixelDistanceKind::Squared).unwrap(), 23.0);
        let e = pixel_distance(&a, &b, PixelDistanceKind::Euclidean).unwrap();
        assert!((e - 23f64.sqrt()).abs() < 1e-12);
        // oracle: explicit sum over the nine cells
        let brute: i32 = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as i32 - y as i32).abs()).sum();
        assert_eq!(brute, 9);
        assert_eq!(pixel_distance(&a, &b, PixelDistanceKind::Abs).unwrap(), 9.0);
        for kind in [PixelDistanceKind::Abs, PixelDistanceKind::Squared, PixelDistanceKind::Euclidean] {
            assert_eq!(pixel_distance(&a, &a, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn pixel_distance_errors() {
        let a = Image::gray(2, 2, vec![0; 4]).unwrap();
        let b = Image::gray(4, 1, vec![0; 4]).unwrap();
        assert!(matches!(pixel_distance(&a, &b, PixelDistanceKind::Abs), Err(Error::DimensionMismatch(_))));
        let rgb = Image::rgb(2, 2, vec![0; 12]).unwrap();
        assert!(pixel_distance(&a, &rgb, PixelDistanceKind::Abs).is_err());
    }

    #[test]
    fn stabilized_examples() {
        let a = Image::gray(2, 2, vec![1, 2, 3, 4]).unwrap();
        let zero = Image::gray(2, 2, vec![0; 4]).unwrap();
        let s = diff_stats(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert_eq!(s.mean_diff, 2.5);
        assert!((s.sample_std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let spd = stabilized_pixel_distance(&a, &zero).unwrap();
        assert!((spd - 2.0 * 2.5 / (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((spd - 3.8730).abs() < 1e-4);

        assert_eq!(stabilized_pixel_distance(&a, &a).unwrap(), 0.0);
        let plus5 = Image::gray(2, 2, vec![6, 7, 8, 9]).unwrap();
        assert_eq!(stabilized_pixel_distance(&plus5, &a).unwrap(), f64::INFINITY);
        let one = Image::gray(1, 1, vec![1]).unwrap();
        assert!(matches!(stabilized_pixel_distance(&one, &one), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn disparity_examples() {
        assert_eq!(cosine_disparity(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let d = cosine_disparity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((d - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-12);
        let (a, _) = paper_pair();
        assert!(vector_disparity(&a, &a).unwrap().abs() < 1e-15);
        let black = Image::gray(3, 3, vec![0; 9]).unwrap();
        assert!(matches!(vector_disparity(&a, &black), Err(Error::UndefinedInput(_))));
    }

    #[test]
    fn histogram_examples() {
        let h1 = Histogram::from_counts(vec![4, 0]).unwrap();
        let h2 = Histogram::from_counts(vec![0, 4]).unwrap();
        assert!((histogram_distance(&h1, &h2).unwrap() - 32f64.sqrt()).abs() < 1e-12);
        assert_eq!(histogram_distance(&h1, &h1).unwrap(), 0.0);
        let h3 = Histogram::from_counts(vec![1, 2, 3]).unwrap();
        assert!(histogram_distance(&h1, &h3).is_err());

        assert_eq!(histogram_intersection(&[0.5, 0.5], &[0.25, 0.75]).unwrap(), 0.75);
        assert_eq!(histogram_intersection(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(histogram_intersection(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0);
        assert!(matches!(histogram_intersection(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotNormalized(_))));
        assert!(histogram_intersection(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski(&[3.0, 4.0], &[0.0, 0.0], 2.0).unwrap(), 5.0);
        assert_eq!(minkowski(&[3.0, 4.0], &[0.0, 0.0], 1.0).unwrap(), 7.0);
        assert_eq!(minkowski(&[3.0, 4.0], &[3.0, 4.0], 3.5).unwrap(), 0.0);
        assert!(minkowski(&[1.0], &[1.0], 0.5).is_err());
        assert!(minkowski(&[1.0], &[1.0, 2.0], 2.0).is_err());
    }

    #[test]
    fn osm_examples() {
        let b = SimilarityBreakdown::from_partials(0.6, 0.9, 0.3);
        assert!((b.osm - 0.6).abs() < 1e-15);
        let b = SimilarityBreakdown::from_distances(1.0, 0.0, 3.0);
        assert_eq!((b.e_texture, b.e_intensity, b.e_shape), (0.5, 1.0, 0.25));
        assert!((b.osm - 0.583333).abs() < 1e-6);

        let layout = BlockLayout {
            color_histogram: 2,
            color_moments: 1,
            texture: 2,
            shape: 1,
        };
        let fv = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let same = osm(&layout, &fv, &fv).unwrap();
        assert_eq!((same.e_texture, same.e_intensity, same.e_shape, same.osm), (1.0, 1.0, 1.0, 1.0));
        // texture block differs by (3, 4): distance 5
        let other = [0.1, 0.2, 0.3, 3.4, 4.5, 0.6];
        let b = osm(&layout, &fv, &other).unwrap();
        assert!((b.e_texture - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(b.e_intensity, 1.0);
        assert!(osm(&layout, &fv, &fv[..5]).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for name in ["l1", "l2", "minkowski:3", "minkowski:1.5", "histogram", "intersection", "osm", "spd", "cosine"] {
            let m: Metric = name.parse().unwrap();
            assert_eq!(m.to_string(), name);
        }
        assert!("minkowski:0.5".parse::<Metric>().is_err());
        assert!("hamming".parse::<Metric>().is_err());
        assert_eq!(Metric::Osm.direction(), Direction::Descending);
        assert_eq!(Metric::L2.direction(), Direction::Ascending);
    }

    fn gray_pair() -> impl Strategy<Value = (Image, Image, Image)> {
        (1u32..6, 1u32..6).prop_flat_map(|(w, h)| {
            let n = (w * h) as usize;
            (
                proptest::collection::vec(any::<u8>(), n),
                proptest::collection::vec(any::<u8>(), n),
                proptest::collection::vec(any::<u8>(), n),
            )
                .prop_map(move |(a, b, c)| {
                    (Image::gray(w, h, a).unwrap(), Image::gray(w, h, b).unwrap(), Image::gray(w, h, c).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn euclidean_matches_minkowski_2((a, b, _) in gray_pair()) {
            let va: Vec<f64> = a.data().iter().map(|&v| v as f64).collect();
            let vb: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
            prop_assert_eq!(
                pixel_distance(&a, &b, PixelDistanceKind::Euclidean).unwrap(),
                minkowski(&va, &vb, 2.0).unwrap()
            );
        }

        #[test]
        fn pixel_metrics_are_metrics((a, b, c) in gray_pair()) {
            for kind in [PixelDistanceKind::Abs, PixelDistanceKind::Euclidean] {
                let ab = pixel_distance(&a, &b, kind).unwrap();
                let ba = pixel_distance(&b, &a, kind).unwrap();
                let ac = pixel_distance(&a, &c, kind).unwrap();
                let cb = pixel_distance(&c, &b, kind).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(ab == 0.0, a == b);
                prop_assert!(ab <= ac + cb + 1e-9);
            }
        }

        #[test]
        fn spd_is_symmetric((a, b, _) in gray_pair()) {
            prop_assume!(a.pixel_count() >= 2);
            let ab = stabilized_pixel_distance(&a, &b).unwrap();
            let ba = stabilized_pixel_distance(&b, &a).unwrap();
            prop_assert!(ab == ba || (ab - ba).abs() <= 1e-9 * ab.abs());
        }

        #[test]
        fn disparity_ignores_positive_scale(v in proptest::collection::vec(0.0f64..255.0, 2..20), s in 0.01f64..100.0) {
            prop_assume!(v.iter().any(|&x| x > 0.0));
            let w: Vec<f64> = v.iter().rev().copied().collect();
            let scaled: Vec<f64> = w.iter().map(|x| x * s).collect();
            let d1 = cosine_disparity(&v, &w).unwrap();
            let d2 = cosine_disparity(&v, &scaled).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-9);
        }

        #[test]
        fn osm_bounded(a in proptest::collection::vec(0.0f64..1.0, 6), b in proptest::collection::vec(0.0f64..1.0, 6)) {
            let layout = BlockLayout { color_histogram: 2, color_moments: 0, texture: 2, shape: 2 };
            let s = osm(&layout, &a, &b).unwrap();
            prop_assert!(s.osm > 0.0 && s.osm <= 1.0);
            prop_assert_eq!(s.osm == 1.0, a == b);
        }
    }
}
