//! Shared fixtures for the benchmarks.

use clonedetect_core::{plant_clone, synth_base, ForgerySpec, GrayImage, Origin, Rect, Texture};

/// Square noise image of side `side` with a `side/5` clone planted at an
/// even shift, so every pipeline has something to find.
pub fn cloned_noise(side: usize, seed: u64) -> GrayImage {
    let base = synth_base(side, side, seed, Texture::Noise).expect("side >= 16");
    let c = (side / 5) & !1;
    let spec = ForgerySpec::rect(
        Rect::new(8, 8, c, c),
        Origin::new(side - c - 8, side - c - 8),
    );
    plant_clone(&base, &spec).expect("clone fits").image
}
