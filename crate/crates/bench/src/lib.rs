//! Fixtures shared by the benchmarks.

use cbir_core::synth::generate;
use cbir_core::{extract_signature, ExtractionConfig, Image, IndexStore};

/// Index over the synthetic corpus with `per_class` images per class.
pub fn synthetic_store(per_class: usize) -> IndexStore {
    let cfg = ExtractionConfig::default();
    let sigs = generate(per_class)
        .expect("synthetic corpus")
        .iter()
        .map(|i| extract_signature(&i.id, &i.image, &cfg).expect("extraction"))
        .collect();
    IndexStore::from_signatures(cfg, sigs, None).expect("store")
}

/// Deterministic textured color image of the given side.
pub fn textured(side: u32) -> Image {
    Image::from_rgb_fn(side, side, |x, y| {
        let r = ((x * 7 + y * 3) % 256) as u8;
        let g = ((x ^ y) % 256) as u8;
        let b = if (x / 8 + y / 8) % 2 == 0 { 40 } else { 200 };
        [r, g, b]
    })
    .expect("valid size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(synthetic_store(2).len(), 6);
        assert_eq!(textured(16).width(), 16);
    }
}
