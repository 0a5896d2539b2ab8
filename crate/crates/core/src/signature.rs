//! Extraction configuration and per-image signatures (the blocked feature
//! vector `color || texture || shape`).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::color::{color_moments, hsv_histogram, HsvGrid};
use crate::error::{Error, Result};
use crate::image::{to_grayscale, Image};
use crate::metrics::BlockLayout;
use crate::shape::shape_features;
use crate::texture::{mean_glcm_features, tamura_features};

/// Every parameter that shapes a feature vector. Two signatures are only
/// comparable when their configs hash identically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionConfig {
    pub hsv_grid: HsvGrid,
    pub glcm_levels: usize,
    pub glcm_offsets: Vec<(i32, i32)>,
    pub tamura: bool,
    pub shape_harmonics: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            hsv_grid: HsvGrid::default(),
            glcm_levels: 16,
            glcm_offsets: vec![(1, 0), (0, 1), (1, 1), (1, -1)],
            tamura: true,
            shape_harmonics: 10,
        }
    }
}

const COLOR_MOMENT_DIMS: usize = 9;
const GLCM_DIMS: usize = 5;
const TAMURA_DIMS: usize = 3;
const HU_DIMS: usize = 7;

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        self.hsv_grid.validate()?;
        if !(2..=256).contains(&self.glcm_levels) {
            return Err(Error::InvalidParameter(format!(
                "glcm_levels must be in 2..=256, got {}",
                self.glcm_levels
            )));
        }
        if self.glcm_offsets.is_empty() || self.glcm_offsets.contains(&(0, 0)) {
            return Err(Error::InvalidParameter(
                "glcm_offsets must be nonempty and must not contain (0, 0)".into(),
            ));
        }
        if !(2..crate::shape::BOUNDARY_SAMPLES / 2).contains(&self.shape_harmonics) {
            return Err(Error::InvalidParameter(format!(
                "shape_harmonics must be in 2..{}, got {}",
                crate::shape::BOUNDARY_SAMPLES / 2,
                self.shape_harmonics
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout {
            color_histogram: self.hsv_grid.bins(),
            color_moments: COLOR_MOMENT_DIMS,
            texture: GLCM_DIMS + if self.tamura { TAMURA_DIMS } else { 0 },
            shape: HU_DIMS + self.shape_harmonics,
        }
    }

    /// Hex SHA-256 of the canonical JSON form, prefixed with the feature
    /// definition version.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(&(FEATURE_VERSION, self)).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExtractionConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("bad extraction config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Bumped whenever a feature formula changes, so old hashes stop matching.
const FEATURE_VERSION: u32 = 1;

/// Conditions recorded during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureFlag {
    /// Segmentation or boundary tracing failed; the shape block is all zeros.
    ShapeAbsent,
    /// The image is too small for GLCM pairs; those five dims are zeros.
    GlcmAbsent,
    /// The image is smaller than the Tamura window minimum; those dims are zeros.
    TamuraAbsent,
}

/// Feature vector of one image plus identity and config digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub image_id: String,
    pub config_hash: String,
    pub raw_fv: Vec<f64>,
    pub flags: Vec<SignatureFlag>,
}

impl Signature {
    pub fn has_flag(&self, flag: SignatureFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Extracts the blocked feature vector of `img`. Never fails on a valid
/// image: blocks that cannot be computed are zero-filled and flagged.
pub fn extract_signature(
    image_id: impl Into<String>,
    img: &Image,
    cfg: &ExtractionConfig,
) -> Result<Signature> {
    cfg.validate()?;
    let layout = cfg.layout();
    let mut fv = Vec::with_capacity(layout.len());
    let mut flags = Vec::new();

    fv.extend(hsv_histogram(img, cfg.hsv_grid)?.bins);
    fv.extend(color_moments(img)?.to_vec());

    let gray = to_grayscale(img);
    match mean_glcm_features(&gray, &cfg.glcm_offsets, cfg.glcm_levels) {
        Ok(f) => fv.extend(f.to_array()),
        Err(Error::NoValidPairs { .. }) => {
            fv.extend([0.0; GLCM_DIMS]);
            flags.push(SignatureFlag::GlcmAbsent);
        }
        Err(e) => return Err(e),
    }
    if cfg.tamura {
        match tamura_features(&gray) {
            Ok(t) => fv.extend(t.to_array()),
            Err(Error::ImageTooSmall(_)) => {
                fv.extend([0.0; TAMURA_DIMS]);
                flags.push(SignatureFlag::TamuraAbsent);
            }
            Err(e) => return Err(e),
        }
    }

    match shape_features(&gray, cfg.shape_harmonics) {
        Ok(s) => {
            fv.extend(s.hu);
            fv.extend(s.fourier);
        }
        Err(Error::NoShape | Error::BoundaryTooShort(_) | Error::UndefinedInput(_)) => {
            fv.extend(std::iter::repeat_n(0.0, layout.shape));
            flags.push(SignatureFlag::ShapeAbsent);
        }
        Err(e) => return Err(e),
    }

    debug_assert_eq!(fv.len(), layout.len());
    if let Some(i) = fv.iter().position(|v| !v.is_finite()) {
        return Err(Error::UndefinedInput(format!("feature {i} is not finite")));
    }
    Ok(Signature {
        image_id: image_id.into(),
        config_hash: cfg.config_hash(),
        raw_fv: fv,
        flags,
    })
}
