//! The seven end-to-end detection pipelines.
//!
//! Every pipeline turns the image into a [`FeatureMatrix`], then runs the
//! shared chain: lexicographic sort, neighbour matching, shift-vector
//! filtering and mask painting at original resolution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{batch_singular_values, haar_dwt, DcPolicy, DctPlan, Moments, SVD_LANES};
use crate::image::{split_channels, to_gray, BlockGrid, GrayImage, RgbImage};
use crate::matching::{
    build_mask, candidate_pairs, filter_by_shift, lex_sort, matched_block_count, shift_histogram,
    DetectionMask, FeatureMatrix, MatchPair, MatchParams, Shift,
};

/// Shift threshold used when none is configured.
pub const DEFAULT_SHIFT_THRESHOLD: usize = 100;
pub const DEFAULT_BLOCK_SIZE: usize = 4;

/// Rows handled per parallel task during feature extraction.
const ROWS_PER_TASK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Raw overlapped blocks, lexicographically sorted.
    Sobm,
    Dct,
    Pca,
    Svd,
    Dwt,
    DctSvd,
    DwtSvd,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sobm,
        Method::Svd,
        Method::Dct,
        Method::Dwt,
        Method::DctSvd,
        Method::DwtSvd,
        Method::Pca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sobm => "sobm",
            Method::Dct => "dct",
            Method::Pca => "pca",
            Method::Svd => "svd",
            Method::Dwt => "dwt",
            Method::DctSvd => "dctsvd",
            Method::DwtSvd => "dwtsvd",
        }
    }

    /// Blocks are cut from the DWT LL band instead of the image.
    pub fn uses_dwt(self) -> bool {
        matches!(self, Method::Dwt | Method::DwtSvd)
    }

    fn needs_even_block(self) -> bool {
        matches!(self, Method::Dct | Method::DctSvd)
    }

    /// Descriptor length for block side `b`.
    pub fn descriptor_dim(self, b: usize) -> usize {
        match self {
            Method::Sobm | Method::Dwt => b * b,
            Method::Dct => b * b / 4,
            Method::Pca | Method::Svd | Method::DctSvd | Method::DwtSvd => b,
        }
    }

    pub fn default_quant_step(self) -> f64 {
        match self {
            Method::Sobm | Method::Dwt => 1.0,
            _ => 2.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorMode {
    /// Convert to luma first.
    #[default]
    Gray,
    /// Run each of R, G, B separately and merge the results.
    PerChannel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: Method,
    pub block_size: usize,
    /// Quantization step; `None` picks the method default.
    pub quant_step: Option<f64>,
    /// Minimum pairs per shift; `None` gives 100, or 25 for DWT pipelines.
    pub shift_threshold: Option<usize>,
    pub sort_window: usize,
    pub overlap_guard: bool,
    pub color_mode: ColorMode,
    /// Cancel uniform intensity offsets in DCT (DC slot zeroed) and PCA
    /// (block mean removed) descriptors.
    pub offset_invariant: bool,
}

impl DetectorConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            block_size: DEFAULT_BLOCK_SIZE,
            quant_step: None,
            shift_threshold: None,
            sort_window: 1,
            overlap_guard: true,
            color_mode: ColorMode::Gray,
            offset_invariant: true,
        }
    }

    pub fn with_block_size(mut self, b: usize) -> Self {
        self.block_size = b;
        self
    }

    pub fn with_quant_step(mut self, q: f64) -> Self {
        self.quant_step = Some(q);
        self
    }

    pub fn with_shift_threshold(mut self, th: usize) -> Self {
        self.shift_threshold = Some(th);
        self
    }

    pub fn quant_step(&self) -> f64 {
        self.quant_step
            .unwrap_or_else(|| self.method.default_quant_step())
    }

    pub fn shift_threshold(&self) -> usize {
        self.shift_threshold.unwrap_or(if self.method.uses_dwt() {
            DEFAULT_SHIFT_THRESHOLD / 4
        } else {
            DEFAULT_SHIFT_THRESHOLD
        })
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.block_size;
        if b < 2 {
            return Err(Error::InvalidBlockSize {
                size: b,
                reason: "blocks must be at least 2x2",
            });
        }
        if self.method.needs_even_block() && b % 2 != 0 {
            return Err(Error::InvalidBlockSize {
                size: b,
                reason: "DCT pipelines need an even block size",
            });
        }
        let q = self.quant_step();
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "quantization step must be positive, got {q}"
            )));
        }
        if self.shift_threshold == Some(0) {
            return Err(Error::InvalidInput(
                "shift threshold must be at least 1".into(),
            ));
        }
        if self.sort_window == 0 {
            return Err(Error::InvalidInput("sort window must be at least 1".into()));
        }
        Ok(())
    }

    fn match_params(&self) -> MatchParams {
        MatchParams {
            window: self.sort_window,
            overlap_guard: self.overlap_guard,
        }
    }
}

/// Smallest clone side (in pixels) a pipeline can possibly detect.
pub fn min_detectable_clone(cfg: &DetectorConfig) -> usize {
    if cfg.method.uses_dwt() {
        2 * cfg.block_size
    } else {
        cfg.block_size
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub feature: f64,
    pub sort: f64,
    #[serde(rename = "match")]
    pub matching: f64,
    pub filter: f64,
    pub total: f64,
}

impl Timings {
    fn add(&mut self, other: &Timings) {
        self.feature += other.feature;
        self.sort += other.sort;
        self.matching += other.matching;
        self.filter += other.filter;
    }
}

/// Seconds at microsecond resolution.
fn seconds(d: Duration) -> f64 {
    d.as_micros() as f64 / 1e6
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftBin {
    pub dx: i64,
    pub dy: i64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub method: Method,
    pub config: DetectorConfig,
    /// Distinct block origins taking part in accepted pairs.
    pub matched_block_count: usize,
    pub candidate_pair_count: usize,
    pub accepted_shift_bins: Vec<ShiftBin>,
    pub accepted_pairs: Vec<MatchPair>,
    pub mask: DetectionMask,
    pub timings: Timings,
    /// Descriptor length and number of rows in the sorted matrix.
    pub feature_dim: usize,
    pub feature_rows: usize,
    /// Per-channel matched block counts in per-channel mode.
    pub channel_counts: Option<[usize; 3]>,
}

impl DetectionReport {
    pub fn tampering_detected(&self) -> bool {
        !self.accepted_pairs.is_empty()
    }
}

/// Runs the configured pipeline on an image.
pub fn detect(img: &RgbImage, cfg: &DetectorConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.color_mode {
        ColorMode::Gray => detect_gray(&to_gray(img), cfg)?,
        ColorMode::PerChannel => {
            let channels = split_channels(img);
            let reports = channels
                .iter()
                .map(|c| detect_gray(c, cfg))
                .collect::<Result<Vec<_>>>()?;
            merge_channels(reports, cfg)?
        }
    };
    report.timings.total = seconds(start.elapsed());
    Ok(report)
}

/// Runs the configured pipeline on a single-channel raster.
pub fn detect_gray(gray: &GrayImage, cfg: &DetectorConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (width, height) = (gray.width(), gray.height());
    check_size(width, height, cfg)?;

    let t = Instant::now();
    let fm = feature_matrix(gray, cfg)?;
    let feature = seconds(t.elapsed());

    let t = Instant::now();
    let (sorted, _) = lex_sort(&fm);
    let sort = seconds(t.elapsed());

    let t = Instant::now();
    let candidates = candidate_pairs(&sorted, cfg.match_params());
    let matching = seconds(t.elapsed());

    let t = Instant::now();
    let hist = shift_histogram(&candidates);
    let threshold = cfg.shift_threshold();
    let accepted = filter_by_shift(&candidates, &hist, threshold);
    let mask = build_mask(&accepted, &sorted, width, height);
    let filter = seconds(t.elapsed());

    Ok(DetectionReport {
        method: cfg.method,
        config: cfg.clone(),
        matched_block_count: matched_block_count(&accepted),
        candidate_pair_count: candidates.len(),
        accepted_shift_bins: hist
            .bins_at_least(threshold)
            .into_iter()
            .map(|(s, count)| ShiftBin {
                dx: s.dx,
                dy: s.dy,
                count,
            })
            .collect(),
        accepted_pairs: accepted,
        mask,
        timings: Timings {
            feature,
            sort,
            matching,
            filter,
            total: seconds(start.elapsed()),
        },
        feature_dim: fm.dim(),
        feature_rows: fm.len(),
        channel_counts: None,
    })
}

fn check_size(width: usize, height: usize, cfg: &DetectorConfig) -> Result<()> {
    let need = min_detectable_clone(cfg);
    if width.min(height) < need {
        return Err(Error::InvalidInput(format!(
            "{width}x{height} image is too small for {} with {b}x{b} blocks (needs {need}x{need})",
            cfg.method,
            b = cfg.block_size
        )));
    }
    Ok(())
}

fn merge_channels(reports: Vec<DetectionReport>, cfg: &DetectorConfig) -> Result<DetectionReport> {
    let mut iter = reports.into_iter();
    let mut merged = iter.next().expect("three channel reports");
    let mut counts = [merged.matched_block_count, 0, 0];
    let mut bins: BTreeMap<Shift, usize> = BTreeMap::new();
    let mut add_bins = |r: &DetectionReport| {
        for b in &r.accepted_shift_bins {
            *bins.entry(Shift::new(b.dx, b.dy)).or_insert(0) += b.count;
        }
    };
    add_bins(&merged);
    for (i, r) in iter.enumerate() {
        counts[i + 1] = r.matched_block_count;
        add_bins(&r);
        merged.mask = merged.mask.union(&r.mask)?;
        merged.accepted_pairs.extend(r.accepted_pairs);
        merged.candidate_pair_count += r.candidate_pair_count;
        merged.feature_rows += r.feature_rows;
        merged.timings.add(&r.timings);
    }
    merged.accepted_pairs.sort_unstable();
    merged.accepted_pairs.dedup();
    merged.matched_block_count = matched_block_count(&merged.accepted_pairs);
    merged.accepted_shift_bins = bins
        .into_iter()
        .map(|(s, count)| ShiftBin {
            dx: s.dx,
            dy: s.dy,
            count,
        })
        .collect();
    merged.channel_counts = Some(counts);
    merged.config = cfg.clone();
    Ok(merged)
}

/// Builds the descriptor matrix the configured pipeline sorts.
pub fn feature_matrix(gray: &GrayImage, cfg: &DetectorConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    check_size(gray.width(), gray.height(), cfg)?;
    let b = cfg.block_size;
    let q = cfg.quant_step();
    let method = cfg.method;
    let dim = method.descriptor_dim(b);

    let ll;
    let (raster, scale) = if method.uses_dwt() {
        ll = haar_dwt(gray)?.ll;
        (&ll, 2)
    } else {
        (gray, 1)
    };
    let grid = BlockGrid::new(raster.width(), raster.height(), b)?;

    let fm = match method {
        Method::Sobm | Method::Dwt => extract(raster, &grid, dim, scale, |s, _, out| {
            quantize_row(s, q, out)
        }),
        Method::Svd | Method::DwtSvd => {
            extract_singular(raster, &grid, scale, q, |s, out, _| out.copy_from_slice(s))
        }
        Method::Dct => {
            let plan = DctPlan::new(b);
            let dc = if cfg.offset_invariant {
                DcPolicy::Suppress
            } else {
                DcPolicy::Keep
            };
            let h = b / 2;
            extract(raster, &grid, dim, scale, |s, scr, out| {
                plan.forward(s, &mut scr.coeffs, &mut scr.work);
                for v in 0..h {
                    scr.real[v * h..(v + 1) * h].copy_from_slice(&scr.coeffs[v * b..v * b + h]);
                }
                quantize_row(&scr.real[..dim], q, out);
                if dc == DcPolicy::Suppress {
                    out[0] = 0;
                }
            })
        }
        Method::DctSvd => {
            let plan = DctPlan::new(b);
            extract_singular(raster, &grid, scale, q, |s, out, work| {
                plan.forward(s, out, work)
            })
        }
        Method::Pca => {
            let centre = cfg.offset_invariant;
            let load = |k: usize, out: &mut [f64]| {
                raster.copy_window(grid.origin(k), b, out);
                if centre {
                    remove_mean(out);
                }
            };
            let mut reference = vec![0.0; b * b];
            load(0, &mut reference);
            let basis = Moments::accumulate(reference, grid.count, load).into_basis(b)?;
            extract(raster, &grid, dim, scale, |s, scr, out| {
                if centre {
                    remove_mean(s);
                }
                basis.project_into(s, &mut scr.real);
                quantize_row(&scr.real, q, out);
            })
        }
    };
    debug_assert_eq!(fm.dim(), dim);
    Ok(fm)
}

#[inline]
fn quantize_row(values: &[f64], q: f64, out: &mut [i64]) {
    for (o, &v) in out.iter_mut().zip(values) {
        *o = (v / q).round() as i64;
    }
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

struct Scratch {
    window: Vec<f64>,
    coeffs: Vec<f64>,
    work: Vec<f64>,
    real: Vec<f64>,
}

impl Scratch {
    fn new(b: usize) -> Self {
        Self {
            window: vec![0.0; b * b],
            coeffs: vec![0.0; b * b],
            work: vec![0.0; b * b],
            real: vec![0.0; b * b],
        }
    }
}

/// Evaluates `describe(window, scratch, out)` for every block of `grid`,
/// in parallel over fixed row ranges.
fn extract<F>(
    raster: &GrayImage,
    grid: &BlockGrid,
    dim: usize,
    scale: usize,
    describe: F,
) -> FeatureMatrix
where
    F: Fn(&mut [f64], &mut Scratch, &mut [i64]) + Sync,
{
    let b = grid.block_size;
    let mut values = vec![0i64; grid.count * dim];
    values
        .par_chunks_mut(ROWS_PER_TASK * dim)
        .enumerate()
        .for_each(|(task, chunk)| {
            let mut scratch = Scratch::new(b);
            let mut window = std::mem::take(&mut scratch.window);
            for (i, out) in chunk.chunks_exact_mut(dim).enumerate() {
                raster.copy_window(grid.origin(task * ROWS_PER_TASK + i), b, &mut window);
                describe(&mut window, &mut scratch, out);
            }
        });
    let origins = grid.origins().collect();
    FeatureMatrix::from_parts(
        dim,
        values,
        origins,
        (raster.width(), raster.height()),
        b,
        scale,
    )
    .expect("grid-shaped storage")
}

/// Singular-value descriptors, computed [`SVD_LANES`] blocks at a time.
/// `prepare(window, matrix, work)` fills the matrix decomposed for each block.
fn extract_singular<F>(
    raster: &GrayImage,
    grid: &BlockGrid,
    scale: usize,
    q: f64,
    prepare: F,
) -> FeatureMatrix
where
    F: Fn(&[f64], &mut [f64], &mut [f64]) + Sync,
{
    let b = grid.block_size;
    let bb = b * b;
    let mut values = vec![0i64; grid.count * b];
    values
        .par_chunks_mut(ROWS_PER_TASK * b)
        .enumerate()
        .for_each(|(task, chunk)| {
            let mut windows = vec![0.0; SVD_LANES * bb];
            let mut sv = vec![0.0; SVD_LANES * b];
            let mut raw = vec![0.0; bb];
            let mut work = vec![0.0; bb];
            for (g, group) in chunk.chunks_mut(SVD_LANES * b).enumerate() {
                let n = group.len() / b;
                let first = task * ROWS_PER_TASK + g * SVD_LANES;
                for (i, w) in windows.chunks_exact_mut(bb).take(n).enumerate() {
                    raster.copy_window(grid.origin(first + i), b, &mut raw);
                    prepare(&raw, w, &mut work);
                }
                let blocks: Vec<&[f64]> = windows.chunks_exact(bb).take(n).collect();
                let mut outs: Vec<&mut [f64]> = sv.chunks_exact_mut(b).take(n).collect();
                batch_singular_values(&blocks, b, &mut outs);
                quantize_row(&sv[..n * b], q, group);
            }
        });
    let origins = grid.origins().collect();
    FeatureMatrix::from_parts(
        b,
        values,
        origins,
        (raster.width(), raster.height()),
        b,
        scale,
    )
    .expect("grid-shaped storage")
}
