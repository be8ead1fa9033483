use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::image::{Domain, GrayImage};

/// One-level 2-D Haar subbands.
///
/// For each 2×2 cell `[a b; c d]`: `ll = (a+b+c+d)/2`, `hl = (a-b+c-d)/2`
/// (high-pass along x), `lh = (a+b-c-d)/2` (high-pass along y) and
/// `hh = (a-b-c+d)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DwtQuad {
    pub ll: GrayImage,
    pub lh: GrayImage,
    pub hl: GrayImage,
    pub hh: GrayImage,
}

impl DwtQuad {
    pub fn energy(&self) -> f64 {
        [&self.ll, &self.lh, &self.hl, &self.hh]
            .iter()
            .flat_map(|band| band.pixels())
            .map(|v| v * v)
            .sum()
    }
}

/// Orthonormal one-level Haar transform. An odd trailing row or column is dropped.
pub fn haar_dwt(img: &GrayImage) -> Result<DwtQuad> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::InvalidInput(format!(
            "Haar DWT needs at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width() / 2, img.height() / 2);
    let n = w * h;
    let (mut ll, mut lh, mut hl, mut hh) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for y in 0..h {
        let top = img.row(2 * y);
        let bottom = img.row(2 * y + 1);
        for x in 0..w {
            let (a, b) = (top[2 * x], top[2 * x + 1]);
            let (c, d) = (bottom[2 * x], bottom[2 * x + 1]);
            // row pass then column pass, each scaled by 1/sqrt(2)
            let (lo_t, hi_t) = ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2);
            let (lo_b, hi_b) = ((c + d) * FRAC_1_SQRT_2, (c - d) * FRAC_1_SQRT_2);
            ll.push((lo_t + lo_b) * FRAC_1_SQRT_2);
            lh.push((lo_t - lo_b) * FRAC_1_SQRT_2);
            hl.push((hi_t + hi_b) * FRAC_1_SQRT_2);
            hh.push((hi_t - hi_b) * FRAC_1_SQRT_2);
        }
    }
    let band = |px| GrayImage::new(w, h, px, Domain::Transform);
    Ok(DwtQuad {
        ll: band(ll)?,
        lh: band(lh)?,
        hl: band(hl)?,
        hh: band(hh)?,
    })
}

/// Inverse of [`haar_dwt`] for even-sized inputs.
pub fn haar_idwt(quad: &DwtQuad) -> GrayImage {
    let (w, h) = (quad.ll.width(), quad.ll.height());
    let mut out = GrayImage::from_fn(2 * w, 2 * h, |_, _| 0.0);
    for y in 0..h {
        for x in 0..w {
            let (s, dy, dx, dd) = (
                quad.ll.get(x, y),
                quad.lh.get(x, y),
                quad.hl.get(x, y),
                quad.hh.get(x, y),
            );
            let lo_t = (s + dy) * FRAC_1_SQRT_2;
            let lo_b = (s - dy) * FRAC_1_SQRT_2;
            let hi_t = (dx + dd) * FRAC_1_SQRT_2;
            let hi_b = (dx - dd) * FRAC_1_SQRT_2;
            out.set(2 * x, 2 * y, (lo_t + hi_t) * FRAC_1_SQRT_2);
            out.set(2 * x + 1, 2 * y, (lo_t - hi_t) * FRAC_1_SQRT_2);
            out.set(2 * x, 2 * y + 1, (lo_b + hi_b) * FRAC_1_SQRT_2);
            out.set(2 * x + 1, 2 * y + 1, (lo_b - hi_b) * FRAC_1_SQRT_2);
        }
    }
    out
}
