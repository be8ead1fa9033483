//! Synthetic cloned-image fixtures with pixel-exact ground truth, and
//! scoring of detection masks against that truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Origin};
use crate::matching::{DetectionMask, Label, MatchPair, Shift};

/// Base-image texture for [`synth_base`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Texture {
    /// Independent uniform 8-bit samples.
    Noise,
    /// Diagonal ramp with mild noise.
    Gradient,
    /// Noise that repeats horizontally with the given period.
    Tiled { period: usize },
}

/// Deterministic synthetic base image with integer intensities.
pub fn synth_base(width: usize, height: usize, seed: u64, texture: Texture) -> Result<GrayImage> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidInput(format!(
            "synthetic images must be at least 16x16, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let img = match texture {
        Texture::Noise => GrayImage::from_fn(width, height, |_, _| f64::from(rng.random::<u8>())),
        Texture::Gradient => {
            let span = (width + height - 2) as f64;
            GrayImage::from_fn(width, height, |x, y| {
                let ramp = 40.0 + 170.0 * (x + y) as f64 / span;
                (ramp + f64::from(rng.random_range(-8i32..=8)))
                    .round()
                    .clamp(0.0, 255.0)
            })
        }
        Texture::Tiled { period } => {
            if period == 0 || period >= width {
                return Err(Error::InvalidInput(format!(
                    "tile period {period} must be in 1..{width}"
                )));
            }
            let tile: Vec<u8> = (0..period * height).map(|_| rng.random()).collect();
            GrayImage::from_fn(width, height, |x, y| {
                f64::from(tile[y * period + x % period])
            })
        }
    };
    Ok(img)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

/// Outline of the copied patch inside its bounding rectangle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[default]
    Rect,
    Ellipse,
}

impl Shape {
    /// Whether patch pixel `(i, j)` of a `w×h` patch belongs to the shape.
    pub fn contains(self, i: usize, j: usize, w: usize, h: usize) -> bool {
        match self {
            Shape::Rect => i < w && j < h,
            Shape::Ellipse => {
                let (rx, ry) = (w as f64 / 2.0, h as f64 / 2.0);
                let dx = (i as f64 + 0.5 - rx) / rx;
                let dy = (j as f64 + 0.5 - ry) / ry;
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

/// Recipe for planting one copy-move forgery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgerySpec {
    pub src_rect: Rect,
    pub dst_origin: Origin,
    /// Added to every copied pixel before clamping to [0, 255].
    pub intensity_offset: i32,
    pub shape: Shape,
    /// Seed of the synthetic base image the clone was planted in.
    pub seed: u64,
}

impl ForgerySpec {
    pub fn rect(src: Rect, dst: Origin) -> Self {
        Self {
            src_rect: src,
            dst_origin: dst,
            intensity_offset: 0,
            shape: Shape::Rect,
            seed: 0,
        }
    }

    pub fn dst_rect(&self) -> Rect {
        Rect::new(
            self.dst_origin.x,
            self.dst_origin.y,
            self.src_rect.w,
            self.src_rect.h,
        )
    }

    pub fn shift(&self) -> Shift {
        Shift::between(
            Origin::new(self.src_rect.x, self.src_rect.y),
            self.dst_origin,
        )
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        let src = self.src_rect;
        let dst = self.dst_rect();
        if src.w == 0 || src.h == 0 {
            return Err(Error::InvalidSpec("empty source rectangle".into()));
        }
        for (name, r) in [("source", src), ("destination", dst)] {
            if r.x + r.w > width || r.y + r.h > height {
                return Err(Error::InvalidSpec(format!(
                    "{name} {}x{} at ({}, {}) leaves the {width}x{height} image",
                    r.w, r.h, r.x, r.y
                )));
            }
        }
        if src.intersects(&dst) {
            return Err(Error::InvalidSpec("source and destination overlap".into()));
        }
        Ok(())
    }
}

/// Pixel-exact record of a planted clone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub mask: DetectionMask,
    /// Destination minus source, not sign-normalized.
    pub shift: Shift,
    src_rect: Rect,
    shape: Shape,
}

impl GroundTruth {
    fn in_shape(&self, x: usize, y: usize) -> bool {
        let r = self.src_rect;
        x >= r.x
            && y >= r.y
            && x < r.x + r.w
            && y < r.y + r.h
            && self.shape.contains(x - r.x, y - r.y, r.w, r.h)
    }

    /// Every `b×b` block lying wholly inside the copied shape, paired with
    /// its translated copy.
    pub fn block_pairs(&self, b: usize) -> Vec<MatchPair> {
        let r = self.src_rect;
        if r.w < b || r.h < b {
            return Vec::new();
        }
        let mut pairs = Vec::new();
        for y in r.y..=r.y + r.h - b {
            for x in r.x..=r.x + r.w - b {
                let inside = (0..b).all(|j| (0..b).all(|i| self.in_shape(x + i, y + j)));
                if inside {
                    let a = Origin::new(x, y);
                    let t = Origin::new(
                        (x as i64 + self.shift.dx) as usize,
                        (y as i64 + self.shift.dy) as usize,
                    );
                    pairs.push(MatchPair::new(a, t));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

/// A forged image together with its ground truth.
#[derive(Clone, Debug)]
pub struct Forgery {
    pub image: GrayImage,
    pub truth: GroundTruth,
    /// Target pixels whose offset value had to be clamped.
    pub clamped_pixels: usize,
}

/// Copies the shaped source patch (plus the intensity offset) onto the destination.
pub fn plant_clone(img: &GrayImage, spec: &ForgerySpec) -> Result<Forgery> {
    let (w, h) = (img.width(), img.height());
    spec.validate(w, h)?;
    let src = spec.src_rect;
    let dst = spec.dst_origin;
    let mut out = img.clone();
    let mut mask = DetectionMask::empty(w, h);
    let mut clamped = 0;
    for j in 0..src.h {
        for i in 0..src.w {
            if !spec.shape.contains(i, j, src.w, src.h) {
                continue;
            }
            let v = img.get(src.x + i, src.y + j) + f64::from(spec.intensity_offset);
            let c = v.clamp(0.0, 255.0);
            if c != v {
                clamped += 1;
            }
            out.set(dst.x + i, dst.y + j, c);
            mask.labels[(src.y + j) * w + src.x + i] = Label::Source;
            mask.labels[(dst.y + j) * w + dst.x + i] = Label::Target;
        }
    }
    Ok(Forgery {
        image: out,
        truth: GroundTruth {
            mask,
            shift: spec.shift(),
            src_rect: src,
            shape: spec.shape,
        },
        clamped_pixels: clamped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub pixel_precision: f64,
    pub pixel_recall: f64,
    pub pixel_f1: f64,
    /// Fraction of ground-truth block pairs found, when pairs were supplied.
    pub pair_recall: Option<f64>,
}

/// Pixel precision/recall over labeled pixels; source and target labels
/// are interchangeable.
pub fn score_mask(detected: &DetectionMask, truth: &GroundTruth) -> Result<Score> {
    let t = &truth.mask;
    if (detected.width, detected.height) != (t.width, t.height) {
        return Err(Error::InvalidInput(format!(
            "mask is {}x{}, ground truth is {}x{}",
            detected.width, detected.height, t.width, t.height
        )));
    }
    let (mut tp, mut det, mut pos) = (0usize, 0usize, 0usize);
    for (&d, &g) in detected.labels.iter().zip(&t.labels) {
        let (d, g) = (d != Label::None, g != Label::None);
        det += usize::from(d);
        pos += usize::from(g);
        tp += usize::from(d && g);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, det);
    let recall = ratio(tp, pos);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Score {
        pixel_precision: precision,
        pixel_recall: recall,
        pixel_f1: f1,
        pair_recall: None,
    })
}

/// Fraction of `truth.block_pairs(b)` present in `pairs` (1.0 when the truth has none).
pub fn pair_recall(truth: &GroundTruth, pairs: &[MatchPair], b: usize) -> f64 {
    let expected = truth.block_pairs(b);
    if expected.is_empty() {
        return 1.0;
    }
    let found: std::collections::HashSet<_> = pairs.iter().map(|p| (p.a, p.b)).collect();
    let hit = expected
        .iter()
        .filter(|p| found.contains(&(p.a, p.b)))
        .count();
    hit as f64 / expected.len() as f64
}

/// [`score_mask`] plus pair recall for blocks of side `b`.
pub fn score_detection(
    detected: &DetectionMask,
    pairs: &[MatchPair],
    truth: &GroundTruth,
    b: usize,
) -> Result<Score> {
    let mut score = score_mask(detected, truth)?;
    score.pair_recall = Some(pair_recall(truth, pairs, b));
    Ok(score)
}

/// Run-length encoding of a label raster: `(label, run)` with
/// 0 = none, 1 = source, 2 = target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub runs: Vec<(u8, usize)>,
}

impl RleMask {
    pub fn encode(mask: &DetectionMask) -> Self {
        let mut runs: Vec<(u8, usize)> = Vec::new();
        for &l in &mask.labels {
            let code = match l {
                Label::None => 0,
                Label::Source => 1,
                Label::Target => 2,
            };
            match runs.last_mut() {
                Some((c, n)) if *c == code => *n += 1,
                _ => runs.push((code, 1)),
            }
        }
        Self {
            width: mask.width,
            height: mask.height,
            runs,
        }
    }

    pub fn decode(&self) -> Result<DetectionMask> {
        let mut labels = Vec::with_capacity(self.width * self.height);
        for &(code, n) in &self.runs {
            let l = match code {
                0 => Label::None,
                1 => Label::Source,
                2 => Label::Target,
                other => return Err(Error::InvalidInput(format!("unknown mask label {other}"))),
            };
            labels.extend(std::iter::repeat_n(l, n));
        }
        if labels.len() != self.width * self.height {
            return Err(Error::InvalidInput(format!(
                "mask runs cover {} pixels, expected {}",
                labels.len(),
                self.width * self.height
            )));
        }
        Ok(DetectionMask {
            width: self.width,
            height: self.height,
            labels,
            collisions: 0,
        })
    }
}

/// Ground-truth sidecar written next to a forged fixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: ForgerySpec,
    pub texture: Texture,
    pub shift: Shift,
    pub clamped_pixels: usize,
    pub mask: RleMask,
}

impl Sidecar {
    pub fn new(spec: &ForgerySpec, texture: Texture, forgery: &Forgery) -> Self {
        Self {
            spec: spec.clone(),
            texture,
            shift: forgery.truth.shift,
            clamped_pixels: forgery.clamped_pixels,
            mask: RleMask::encode(&forgery.truth.mask),
        }
    }

    /// Rebuilds the ground truth described by the sidecar.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth {
            mask: self.mask.decode()?,
            shift: self.shift,
            src_rect: self.spec.src_rect,
            shape: self.spec.shape,
        })
    }
}
