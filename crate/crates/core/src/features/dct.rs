use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::{check_step, quantize_into, FeatureVector};
use crate::image::Block;

/// Orthonormal 2-D DCT-II coefficients of a square block.
///
/// `at(u, v)` is the coefficient for horizontal frequency `u` and vertical
/// frequency `v`; storage is row-major with `v` as the row.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffBlock {
    pub size: usize,
    pub coeffs: Vec<f64>,
}

impl CoeffBlock {
    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.coeffs[v * self.size + u]
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Precomputed cosine basis for one block size.
#[derive(Clone, Debug)]
pub struct DctPlan {
    size: usize,
    // basis[k * size + n] = alpha(k) * cos((2n + 1) k pi / 2N)
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(size: usize) -> Self {
        assert!(size > 0);
        let n = size as f64;
        let mut basis = Vec::with_capacity(size * size);
        for k in 0..size {
            let alpha = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            for i in 0..size {
                basis.push(alpha * ((2 * i + 1) as f64 * k as f64 * PI / (2.0 * n)).cos());
            }
        }
        Self { size, basis }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Forward transform of row-major `samples` into row-major `out`.
    /// `scratch` must hold `size * size` values.
    pub fn forward(&self, samples: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let b = self.size;
        // rows: scratch[y][u] = sum_x f[y][x] C[u][x]
        for y in 0..b {
            let row = &samples[y * b..(y + 1) * b];
            for u in 0..b {
                let c = &self.basis[u * b..(u + 1) * b];
                scratch[y * b + u] = row.iter().zip(c).map(|(f, c)| f * c).sum();
            }
        }
        // columns: out[v][u] = sum_y C[v][y] scratch[y][u]
        for v in 0..b {
            let c = &self.basis[v * b..(v + 1) * b];
            for u in 0..b {
                out[v * b + u] = (0..b).map(|y| c[y] * scratch[y * b + u]).sum();
            }
        }
    }

    /// Inverse transform; `forward` followed by `inverse` is the identity.
    pub fn inverse(&self, coeffs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let b = self.size;
        for v in 0..b {
            for x in 0..b {
                scratch[v * b + x] = (0..b)
                    .map(|u| coeffs[v * b + u] * self.basis[u * b + x])
                    .sum();
            }
        }
        for y in 0..b {
            for x in 0..b {
                out[y * b + x] = (0..b)
                    .map(|v| self.basis[v * b + y] * scratch[v * b + x])
                    .sum();
            }
        }
    }
}

pub fn dct2(block: &Block) -> CoeffBlock {
    let b = block.size;
    let plan = DctPlan::new(b);
    let mut coeffs = vec![0.0; b * b];
    let mut scratch = vec![0.0; b * b];
    plan.forward(&block.samples, &mut coeffs, &mut scratch);
    CoeffBlock { size: b, coeffs }
}

pub fn idct2(coeffs: &CoeffBlock) -> Vec<f64> {
    let b = coeffs.size;
    let plan = DctPlan::new(b);
    let mut out = vec![0.0; b * b];
    let mut scratch = vec![0.0; b * b];
    plan.inverse(&coeffs.coeffs, &mut out, &mut scratch);
    out
}

/// What happens to the DC slot of a DCT descriptor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DcPolicy {
    /// Quantize F(0, 0) like every other coefficient.
    Keep,
    /// Zero the DC slot so a uniform intensity offset leaves the descriptor unchanged.
    #[default]
    Suppress,
}

/// Low-frequency descriptor: the top-left `(b/2)×(b/2)` quadrant of the block DCT.
pub fn dct_features(block: &Block, q: f64, dc: DcPolicy) -> Result<FeatureVector> {
    let b = block.size;
    if b < 2 || b % 2 != 0 {
        return Err(Error::InvalidBlockSize {
            size: b,
            reason: "DCT features need an even block size",
        });
    }
    check_step(q)?;
    let coeffs = dct2(block);
    let low = low_frequency_quadrant(&coeffs.coeffs, b);
    let mut values = vec![0; low.len()];
    quantize_into(&low, q, &mut values);
    if dc == DcPolicy::Suppress {
        values[0] = 0;
    }
    Ok(FeatureVector {
        origin: block.origin,
        values,
    })
}

/// Row-major `(b/2)×(b/2)` top-left corner of a row-major `b×b` coefficient array.
pub(crate) fn low_frequency_quadrant(coeffs: &[f64], b: usize) -> Vec<f64> {
    let h = b / 2;
    (0..h)
        .flat_map(|v| coeffs[v * b..v * b + h].iter().copied())
        .collect()
}
