//! Shape block: foreground segmentation, region moment invariants (Hu) and
//! boundary Fourier descriptors.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{histogram, Channels, Image};

/// Binary foreground map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    foreground_count: usize,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "mask of {width}x{height} needs {} cells, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        let foreground_count = bits.iter().filter(|&&b| b).count();
        if foreground_count == 0 {
            return Err(Error::NoShape);
        }
        Ok(Mask {
            width,
            height,
            bits,
            foreground_count,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Mask::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground_count
    }

    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < self.width as i64
            && y < self.height as i64
            && self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Foreground coordinates in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) % w, (i as u32) / w))
    }

    /// Keeps only the largest 4-connected component. On equal sizes the
    /// component reached first in row-major order wins.
    pub fn largest_component(&self) -> Mask {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut label = vec![0u32; w * h];
        let mut best = (0usize, 0u32);
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..w * h {
            if !self.bits[start] || label[start] != 0 {
                continue;
            }
            next += 1;
            label[start] = next;
            queue.push_back(start);
            let mut size = 0usize;
            while let Some(i) = queue.pop_front() {
                size += 1;
                let (x, y) = (i % w, i / w);
                let mut visit = |j: usize| {
                    if self.bits[j] && label[j] == 0 {
                        label[j] = next;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
            if size > best.0 {
                best = (size, next);
            }
        }
        let bits: Vec<bool> = label.iter().map(|&l| l == best.1).collect();
        Mask {
            width: self.width,
            height: self.height,
            bits,
            foreground_count: best.0,
        }
    }
}

/// Otsu threshold: the level `t` maximizing between-class variance when
/// splitting gray values into `<= t` and `> t`. `None` for single-level images.
pub fn otsu_threshold(img: &Image) -> Result<Option<u8>> {
    let h = histogram(img, 256)?;
    let counts = h.bins();
    let total = h.total() as f64;
    let sum_all: f64 = counts.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best: Option<(u8, f64)> = None;
    for (t, &c) in counts.iter().enumerate().take(255) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((t as u8, between));
        }
    }
    Ok(best.map(|(t, _)| t))
}

/// Otsu split of a gray image; the class with fewer pixels is the shape
/// (darker class on a tie), reduced to its largest 4-connected component.
pub fn segment(img: &Image) -> Result<Mask> {
    if img.channels() != Channels::Gray {
        return Err(Error::WrongChannels {
            expected: 1,
            actual: img.channels().count() as u8,
        });
    }
    let t = otsu_threshold(img)?.ok_or(Error::NoShape)?;
    let dark = img.data().iter().filter(|&&v| v <= t).count();
    let bright = img.pixel_count() - dark;
    let foreground_is_dark = dark <= bright;
    let bits = img
        .data()
        .iter()
        .map(|&v| (v <= t) == foreground_is_dark)
        .collect();
    Ok(Mask::new(img.width(), img.height(), bits)?.largest_component())
}

/// Floor applied before taking logarithms of invariants.
const HU_LOG_EPSILON: f64 = 1e-30;

/// Raw central moments `mu_pq` for `p + q <= 3`, treating each foreground
/// pixel as a unit square centered on its integer coordinates.
#[derive(Debug, Clone, Copy)]
struct CentralMoments {
    m00: f64,
    mu20: f64,
    mu02: f64,
    mu11: f64,
    mu30: f64,
    mu03: f64,
    mu21: f64,
    mu12: f64,
}

impl CentralMoments {
    fn of(mask: &Mask) -> Self {
        let n = mask.foreground_count as i128;
        let (sx, sy) = mask
            .points()
            .fold((0i128, 0i128), |(a, b), (x, y)| (a + x as i128, b + y as i128));
        // Exact sums of (n*x - sx)^p (n*y - sy)^q; mu_pq = sum / n^(p+q).
        let exact = (|| {
            let mut s = [0i128; 7];
            for (x, y) in mask.points() {
                let dx = n.checked_mul(x as i128)? - sx;
                let dy = n.checked_mul(y as i128)? - sy;
                let dx2 = dx.checked_mul(dx)?;
                let dy2 = dy.checked_mul(dy)?;
                let terms = [
                    dx2,
                    dy2,
                    dx.checked_mul(dy)?,
                    dx2.checked_mul(dx)?,
                    dy2.checked_mul(dy)?,
                    dx2.checked_mul(dy)?,
                    dx.checked_mul(dy2)?,
                ];
                for (acc, t) in s.iter_mut().zip(terms) {
                    *acc = acc.checked_add(t)?;
                }
            }
            Some(s)
        })();
        let nf = n as f64;
        let [s20, s02, s11, s30, s03, s21, s12] = match exact {
            Some(s) => {
                let n2 = nf * nf;
                let n3 = n2 * nf;
                [
                    s[0] as f64 / n2,
                    s[1] as f64 / n2,
                    s[2] as f64 / n2,
                    s[3] as f64 / n3,
                    s[4] as f64 / n3,
                    s[5] as f64 / n3,
                    s[6] as f64 / n3,
                ]
            }
            None => {
                let (cx, cy) = (sx as f64 / nf, sy as f64 / nf);
                let mut s = [0f64; 7];
                for (x, y) in mask.points() {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    let terms = [dx * dx, dy * dy, dx * dy, dx * dx * dx, dy * dy * dy, dx * dx * dy, dx * dy * dy];
                    for (acc, t) in s.iter_mut().zip(terms) {
                        *acc += t;
                    }
                }
                s
            }
        };
        // A unit square adds 1/12 to its own second moments; the odd-order
        // corrections cancel because first central moments vanish.
        CentralMoments {
            m00: nf,
            mu20: s20 + nf / 12.0,
            mu02: s02 + nf / 12.0,
            mu11: s11,
            mu30: s30,
            mu03: s03,
            mu21: s21,
            mu12: s12,
        }
    }
}

/// The seven Hu invariants before log scaling.
pub fn hu_invariants(mask: &Mask) -> [f64; 7] {
    let m = CentralMoments::of(mask);
    let norm = |mu: f64, order: i32| mu / m.m00.powf(1.0 + order as f64 / 2.0);
    let (n20, n02, n11) = (norm(m.mu20, 2), norm(m.mu02, 2), norm(m.mu11, 2));
    let (n30, n03, n21, n12) = (norm(m.mu30, 3), norm(m.mu03, 3), norm(m.mu21, 3), norm(m.mu12, 3));

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}

/// Hu invariants mapped through `sign(phi) * log10(|phi| + 1e-30)`, with
/// `sign(0) = 0`.
pub fn hu_moments(mask: &Mask) -> [f64; 7] {
    hu_invariants(mask).map(|phi| {
        if phi == 0.0 {
            0.0
        } else {
            phi.signum() * (phi.abs() + HU_LOG_EPSILON).log10()
        }
    })
}

/// Points the boundary is resampled to before the DFT.
pub const BOUNDARY_SAMPLES: usize = 128;
/// Shortest traced boundary accepted for Fourier descriptors.
pub const MIN_BOUNDARY_POINTS: usize = 8;

// clockwise on screen (y grows downward): E, SE, S, SW, W, NW, N, NE
const MOORE: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn direction_of(dx: i64, dy: i64) -> usize {
    MOORE.iter().position(|&d| d == (dx, dy)).expect("unit step")
}

/// Outer boundary by Moore-neighbor tracing, clockwise, starting at the
/// topmost-then-leftmost foreground pixel. Tracing stops when the first
/// step is about to repeat.
pub fn trace_boundary(mask: &Mask) -> Vec<(i64, i64)> {
    let start = mask
        .points()
        .next()
        .map(|(x, y)| (x as i64, y as i64))
        .expect("mask is nonempty");
    // the pixel to the west of the start is background by construction
    let mut backtrack = (start.0 - 1, start.1);
    let mut current = start;
    let mut boundary = vec![start];
    let mut first_step: Option<((i64, i64), (i64, i64))> = None;
    let limit = 4 * (mask.width as usize * mask.height as usize) + 8;
    for _ in 0..limit {
        let from = direction_of(backtrack.0 - current.0, backtrack.1 - current.1);
        let mut found = None;
        for i in 1..=8 {
            let dir = (from + i) % 8;
            let cand = (current.0 + MOORE[dir].0, current.1 + MOORE[dir].1);
            if mask.get(cand.0, cand.1) {
                let prev = (from + i - 1) % 8;
                found = Some((cand, (current.0 + MOORE[prev].0, current.1 + MOORE[prev].1)));
                break;
            }
        }
        let Some((next, new_backtrack)) = found else {
            // isolated pixel
            break;
        };
        match first_step {
            None => first_step = Some((current, next)),
            Some(step) if step == (current, next) => {
                boundary.pop();
                break;
            }
            Some(_) => {}
        }
        boundary.push(next);
        backtrack = new_backtrack;
        current = next;
    }
    boundary
}

/// Resamples a closed polygon to `n` points equally spaced by arc length,
/// starting at its first vertex.
pub fn resample_closed(points: &[(i64, i64)], n: usize) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
    let m = pts.len();
    let seg_len = |i: usize| {
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt()
    };
    let perimeter: f64 = (0..m).map(seg_len).sum();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    let mut seg_start = 0.0;
    for k in 0..n {
        let target = perimeter * k as f64 / n as f64;
        while seg_start + seg_len(seg) < target && seg + 1 < m {
            seg_start += seg_len(seg);
            seg += 1;
        }
        let len = seg_len(seg);
        let t = if len > 0.0 { ((target - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (pts[seg], pts[(seg + 1) % m]);
        out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
    }
    out
}

/// Magnitude of DFT coefficient `k` of the complex sequence `x + iy`,
/// using `F(k) = sum z_n exp(-2 pi i k n / N)`.
fn dft_magnitude(z: &[(f64, f64)], k: usize) -> f64 {
    let n = z.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, &(x, y)) in z.iter().enumerate() {
        let angle = -2.0 * std::f64::consts::PI * (k * j) as f64 / n;
        let (s, c) = angle.sin_cos();
        re += x * c - y * s;
        im += x * s + y * c;
    }
    (re * re + im * im).sqrt()
}

/// `|F(k)| / |F(1)|` for `k = 1..=harmonics` of the resampled outer boundary.
pub fn fourier_descriptors(mask: &Mask, harmonics: usize) -> Result<Vec<f64>> {
    if harmonics < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 harmonics, got {harmonics}"
        )));
    }
    if harmonics >= BOUNDARY_SAMPLES / 2 {
        return Err(Error::InvalidParameter(format!(
            "at most {} harmonics are available",
            BOUNDARY_SAMPLES / 2 - 1
        )));
    }
    let boundary = trace_boundary(mask);
    if boundary.len() < MIN_BOUNDARY_POINTS {
        return Err(Error::BoundaryTooShort(boundary.len()));
    }
    let z = resample_closed(&boundary, BOUNDARY_SAMPLES);
    let reference = dft_magnitude(&z, 1);
    if reference == 0.0 {
        return Err(Error::UndefinedInput("boundary has no first harmonic".into()));
    }
    Ok((1..=harmonics).map(|k| dft_magnitude(&z, k) / reference).collect())
}

/// Both shape descriptors of one mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeature {
    pub hu: [f64; 7],
    pub fourier: Vec<f64>,
}

pub fn shape_features(img: &Image, harmonics: usize) -> Result<ShapeFeature> {
    let mask = segment(img)?;
    Ok(ShapeFeature {
        hu: hu_moments(&mask),
        fourier: fourier_descriptors(&mask, harmonics)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_matches_fft() {
        let z: Vec<(f64, f64)> = (0..BOUNDARY_SAMPLES)
            .map(|n| {
                let t = n as f64 * 0.37;
                (t.sin() * 5.0 + n as f64 * 0.01, (2.0 * t).cos() - 1.5)
            })
            .collect();
        let mut buf: Vec<rustfft::num_complex::Complex<f64>> =
            z.iter().map(|&(x, y)| rustfft::num_complex::Complex::new(x, y)).collect();
        rustfft::FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        for (k, f) in buf.iter().enumerate() {
            assert!((dft_magnitude(&z, k) - f.norm()).abs() < 1e-9, "k = {k}");
        }
    }

    fn disk_image(size: u32, cx: i64, cy: i64, r: i64) -> Image {
        Image::from_gray_fn(size, size, |x, y| {
            let (dx, dy) = (x as i64 - cx, y as i64 - cy);
            if dx * dx + dy * dy <= r * r {
                0
            } else {
                255
            }
        })
        .unwrap()
    }

    fn blob(x: u32, y: u32) -> bool {
        // an asymmetric L with a diagonal notch
        let (x, y) = (x as i64, y as i64);
        ((10..40).contains(&x) && (8..20).contains(&y))
            || ((10..22).contains(&x) && (8..50).contains(&y) && x - 10 + (y - 8) / 3 < 14)
    }

    fn rotate_mask(m: &Mask) -> Mask {
        let (w, h) = (m.width() as i64, m.height() as i64);
        Mask::from_fn(h as u32, w as u32, |nx, ny| m.get(ny as i64, h - 1 - nx as i64)).unwrap()
    }

    #[test]
    fn segments_dark_disk_on_white() {
        let img = disk_image(40, 20, 20, 8);
        let mask = segment(&img).unwrap();
        for y in 0..40 {
            for x in 0..40 {
                assert_eq!(mask.get(x, y), img.gray_at(x as u32, y as u32) == 0);
            }
        }
    }

    #[test]
    fn segmentation_ignores_polarity() {
        let img = disk_image(40, 17, 22, 9);
        let inverted = Image::gray(40, 40, img.data().iter().map(|v| 255 - v).collect()).unwrap();
        assert_eq!(segment(&img).unwrap(), segment(&inverted).unwrap());
    }

    #[test]
    fn constant_image_has_no_shape() {
        let img = Image::gray(10, 10, vec![77; 100]).unwrap();
        assert!(matches!(segment(&img), Err(Error::NoShape)));
    }

    #[test]
    fn keeps_largest_component() {
        let img = Image::from_gray_fn(30, 30, |x, y| {
            let big = (3..12).contains(&x) && (3..12).contains(&y);
            let small = (20..23).contains(&x) && (20..23).contains(&y);
            if big || small {
                10
            } else {
                240
            }
        })
        .unwrap();
        let mask = segment(&img).unwrap();
        assert_eq!(mask.foreground_count(), 81);
        assert!(!mask.get(21, 21));
    }

    #[test]
    fn square_first_invariant_near_continuous_limit() {
        let mask = Mask::from_fn(64, 64, |_, _| true).unwrap();
        // oracle: straightforward double loop over pixel centers
        let (mut mu20, mut mu02) = (0.0, 0.0);
        for y in 0..64 {
            for x in 0..64 {
                mu20 += (x as f64 - 31.5).powi(2);
                mu02 += (y as f64 - 31.5).powi(2);
            }
        }
        let phi1_points = (mu20 + mu02) / (4096f64).powi(2);
        let phi1 = hu_invariants(&mask)[0];
        assert!((phi1_points - 1.0 / 6.0).abs() / (1.0 / 6.0) < 0.01);
        assert!((phi1 - 1.0 / 6.0).abs() / (1.0 / 6.0) < 0.01);
        assert!((hu_moments(&mask)[0] - (1.0f64 / 6.0).log10()).abs() < 1e-3);
    }

    #[test]
    fn hu_translation_rotation_scale() {
        let mask = Mask::from_fn(64, 64, blob).unwrap();
        let base = hu_moments(&mask);
        let moved = Mask::from_fn(64, 70, |x, y| x >= 5 && y >= 9 && blob(x - 5, y - 9)).unwrap();
        for (a, b) in base.iter().zip(hu_moments(&moved)) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in base.iter().zip(hu_moments(&rotate_mask(&mask))) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        let scaled = Mask::from_fn(128, 128, |x, y| blob(x / 2, y / 2)).unwrap();
        for (a, b) in base.iter().zip(hu_moments(&scaled)) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn boundary_of_small_square() {
        let mask = Mask::from_fn(6, 6, |x, y| (1..4).contains(&x) && (1..4).contains(&y)).unwrap();
        let b = trace_boundary(&mask);
        assert_eq!(b, vec![(1, 1), (2, 1), (3, 1), (3, 2), (3, 3), (2, 3), (1, 3), (1, 2)]);
    }

    #[test]
    fn descriptors_of_circle() {
        let mask = segment(&disk_image(60, 30, 30, 20)).unwrap();
        let d = fourier_descriptors(&mask, 10).unwrap();
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|&e| (0.0..0.05).contains(&e)), "{d:?}");
    }

    #[test]
    fn descriptors_rotation_and_scale() {
        let mask = Mask::from_fn(64, 64, blob).unwrap();
        let base = fourier_descriptors(&mask, 10).unwrap();
        let rotated = fourier_descriptors(&rotate_mask(&mask), 10).unwrap();
        let scaled = fourier_descriptors(&Mask::from_fn(128, 128, |x, y| blob(x / 2, y / 2)).unwrap(), 10).unwrap();
        for i in 0..10 {
            assert!((base[i] - rotated[i]).abs() < 0.02, "{base:?} vs {rotated:?}");
            assert!((base[i] - scaled[i]).abs() < 0.02, "{base:?} vs {scaled:?}");
        }
    }

    #[test]
    fn short_boundary_rejected() {
        let tiny = Mask::from_fn(5, 5, |x, y| x == 2 && y == 2).unwrap();
        assert!(matches!(fourier_descriptors(&tiny, 10), Err(Error::BoundaryTooShort(1))));
        let mask = Mask::from_fn(64, 64, blob).unwrap();
        assert!(fourier_descriptors(&mask, 1).is_err());
    }
}
