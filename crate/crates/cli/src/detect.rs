use std::path::Path;

use clonedetect_core::{
    detect, load_image, min_detectable_clone, save_rgb_png, to_gray, ColorMode, DetectionMask,
    DetectionReport, DetectorConfig, Label, Method, RgbImage, ShiftBin, Timings,
};
use serde::{Deserialize, Serialize};

use crate::{create_parent, write_file, CliResult, DetectArgs};

pub const SOURCE_RGB: [u8; 3] = [255, 140, 0];
pub const TARGET_RGB: [u8; 3] = [0, 160, 160];

/// Effective configuration, with method defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub block_size: usize,
    pub quant_step: f64,
    pub shift_threshold: usize,
    pub sort_window: usize,
    pub overlap_guard: bool,
    pub color_mode: ColorMode,
    pub offset_invariant: bool,
}

impl From<&DetectorConfig> for ReportConfig {
    fn from(cfg: &DetectorConfig) -> Self {
        Self {
            block_size: cfg.block_size,
            quant_step: cfg.quant_step(),
            shift_threshold: cfg.shift_threshold(),
            sort_window: cfg.sort_window,
            overlap_guard: cfg.overlap_guard,
            color_mode: cfg.color_mode,
            offset_invariant: cfg.offset_invariant,
        }
    }
}

/// On-disk detection report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub method: Method,
    pub config: ReportConfig,
    pub tampering_detected: bool,
    pub matched_block_count: usize,
    pub candidate_pair_count: usize,
    pub shift_bins: Vec<ShiftBin>,
    pub source_pixels: usize,
    pub target_pixels: usize,
    /// Pixels claimed as both source and target (drawn as target).
    pub mask_collisions: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel_counts: Option<[usize; 3]>,
    pub timings: Timings,
    pub mask_path: String,
}

impl JsonReport {
    pub fn new(report: &DetectionReport, mask_path: &Path, deterministic: bool) -> Self {
        Self {
            method: report.method,
            config: ReportConfig::from(&report.config),
            tampering_detected: report.tampering_detected(),
            matched_block_count: report.matched_block_count,
            candidate_pair_count: report.candidate_pair_count,
            shift_bins: report.accepted_shift_bins.clone(),
            source_pixels: report.mask.count(Label::Source),
            target_pixels: report.mask.count(Label::Target),
            mask_collisions: report.mask.collisions,
            channel_counts: report.channel_counts,
            timings: if deterministic {
                Timings::default()
            } else {
                report.timings
            },
            mask_path: mask_path.display().to_string(),
        }
    }
}

/// Luma of `img` with source and target pixels painted over.
pub fn render_mask(img: &RgbImage, mask: &DetectionMask) -> RgbImage {
    let mut out = to_gray(img).to_rgb().to_interleaved();
    for (px, label) in out.chunks_exact_mut(3).zip(&mask.labels) {
        match label {
            Label::Source => px.copy_from_slice(&SOURCE_RGB),
            Label::Target => px.copy_from_slice(&TARGET_RGB),
            Label::None => {}
        }
    }
    RgbImage::from_interleaved(img.width(), img.height(), &out).expect("same dimensions")
}

pub fn cmd_detect(args: &DetectArgs) -> CliResult<()> {
    let cfg = args.tuning.config(args.method)?;
    let min = min_detectable_clone(&cfg);
    if min > cfg.block_size {
        eprintln!(
            "note: {} with b={} only finds clones of at least {min}x{min} pixels",
            cfg.method, cfg.block_size
        );
    }
    let img = load_image(&args.input)?;
    let report = detect(&img, &cfg)?;

    create_parent(&args.out_mask)?;
    save_rgb_png(&render_mask(&img, &report.mask), &args.out_mask)?;
    let json = JsonReport::new(&report, &args.out_mask, args.deterministic_report);
    let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
    text.push('\n');
    write_file(&args.out_report, text.as_bytes())?;

    println!(
        "{}: {} ({} matched blocks, {} shift bins)",
        args.input.display(),
        if json.tampering_detected {
            "clone detected"
        } else {
            "no clone found"
        },
        json.matched_block_count,
        json.shift_bins.len()
    );
    Ok(())
}
