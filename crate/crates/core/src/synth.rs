//! Deterministic three-class fixture corpus: two-tone color fields,
//! checkerboard textures and filled disks / squares.
//!
//! Every image has a distinct HSV histogram, so no two signatures coincide
//! and every self-query is untied under every metric.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::image::Image;
use crate::io::encode_png;

pub const SYNTH_SIDE: u32 = 64;
/// Largest `per_class` for which the images stay distinct.
pub const MAX_PER_CLASS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthClass {
    Fields,
    Checkerboards,
    Shapes,
}

impl SynthClass {
    pub const ALL: [SynthClass; 3] = [SynthClass::Fields, SynthClass::Checkerboards, SynthClass::Shapes];

    pub fn name(self) -> &'static str {
        match self {
            SynthClass::Fields => "fields",
            SynthClass::Checkerboards => "checkerboards",
            SynthClass::Shapes => "shapes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub id: String,
    pub class: SynthClass,
    pub image: Image,
}

/// Red field with a yellow band of `6 + i` rows across the top.
fn field(i: u32) -> Image {
    let band = 6 + i;
    Image::from_rgb_fn(SYNTH_SIDE, SYNTH_SIDE, |_, y| {
        if y < band {
            [230, 200 - i as u8, 40]
        } else {
            [220, 40, 40 + i as u8]
        }
    })
    .expect("valid size")
}

/// (period, rows of the first phase) per checkerboard. Columns split the
/// period evenly; the row split is uneven so each board has its own
/// dark / green pixel count.
const CHECKER_PARAMS: [(u32, u32); MAX_PER_CLASS] = [
    (10, 6), (12, 7), (14, 8), (18, 10), (10, 4),
    (12, 5), (18, 8), (10, 7), (14, 9), (18, 11),
    (10, 3), (12, 4), (14, 5), (10, 8), (12, 9),
    (14, 10), (18, 12), (10, 2), (12, 3), (18, 6),
];

/// Dark / green checkerboard with rectangular cells.
fn checkerboard(i: u32) -> Image {
    let (period, rows) = CHECKER_PARAMS[i as usize];
    Image::from_rgb_fn(SYNTH_SIDE, SYNTH_SIDE, |x, y| {
        if ((x % period) < period / 2) == ((y % period) < rows) {
            [20, 20 + i as u8, 20]
        } else {
            [40, 180, 60 + i as u8]
        }
    })
    .expect("valid size")
}

/// Blue disk (even `i`) or square (odd `i`) on a pale background; sizes
/// are distinct for every `i`.
fn shape(i: u32) -> Image {
    let c = 32 + (i % 3) as i64 - 1;
    let r = 9 + (i / 2) as i64;
    let side = 17 + i as i64;
    Image::from_rgb_fn(SYNTH_SIDE, SYNTH_SIDE, |x, y| {
        let (dx, dy) = (x as i64 - c, y as i64 - c);
        let inside = if i.is_multiple_of(2) {
            dx * dx + dy * dy <= r * r
        } else {
            dx >= -side / 2 && dx < side - side / 2 && dy >= -side / 2 && dy < side - side / 2
        };
        if inside {
            [40, 60, 200]
        } else {
            [210, 210, 200 - i as u8]
        }
    })
    .expect("valid size")
}

/// `per_class` images of each class, ids `<class>/<class>_NN.png`.
pub fn generate(per_class: usize) -> Result<Vec<SynthImage>> {
    if per_class == 0 || per_class > MAX_PER_CLASS {
        return Err(Error::InvalidParameter(format!(
            "per_class must be in 1..={MAX_PER_CLASS}, got {per_class}"
        )));
    }
    let mut out = Vec::with_capacity(3 * per_class);
    for class in SynthClass::ALL {
        for i in 0..per_class as u32 {
            let image = match class {
                SynthClass::Fields => field(i),
                SynthClass::Checkerboards => checkerboard(i),
                SynthClass::Shapes => shape(i),
            };
            out.push(SynthImage {
                id: format!("{0}/{0}_{1:02}.png", class.name(), i),
                class,
                image,
            });
        }
    }
    Ok(out)
}

/// Each image's relevant set is its whole class, itself included.
pub fn ground_truth(images: &[SynthImage]) -> GroundTruth {
    let mut classes: BTreeMap<SynthClass, BTreeSet<String>> = BTreeMap::new();
    for img in images {
        classes.entry(img.class).or_default().insert(img.id.clone());
    }
    GroundTruth {
        queries: images
            .iter()
            .map(|img| (img.id.clone(), classes[&img.class].clone()))
            .collect(),
    }
}

/// Writes the corpus as PNG files under `dir` plus `ground_truth.json`.
pub fn write_corpus(dir: impl AsRef<Path>, per_class: usize) -> Result<GroundTruth> {
    let dir = dir.as_ref();
    let images = generate(per_class)?;
    for img in &images {
        let path = dir.join(&img.id);
        let parent = path.parent().expect("id has a class directory");
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        std::fs::write(&path, encode_png(&img.image)?).map_err(|e| Error::io(&path, e))?;
    }
    let truth = ground_truth(&images);
    let gt_path = dir.join("ground_truth.json");
    std::fs::write(&gt_path, truth.to_json()).map_err(|e| Error::io(&gt_path, e))?;
    Ok(truth)
}
