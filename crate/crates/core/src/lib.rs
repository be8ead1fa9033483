//! Copy-move (clone) forgery detection by overlapped block matching.
//!
//! An image is cut into every `b×b` window, each window is reduced to a
//! short integer descriptor (raw pixels, low-frequency DCT, PCA projection,
//! singular values, or any of these on the Haar LL band), descriptors are
//! sorted lexicographically so duplicates become neighbours, and matched
//! pairs are kept only when enough of them share one displacement.
//!
//! ```no_run
//! use clonedetect_core::{detect, load_image, DetectorConfig, Method};
//!
//! let img = load_image("suspect.png")?;
//! let report = detect(&img, &DetectorConfig::new(Method::DwtSvd))?;
//! println!("tampered: {}", report.tampering_detected());
//! # Ok::<(), clonedetect_core::Error>(())
//! ```

pub mod detect;
pub mod error;
pub mod features;
pub mod forgery;
pub mod image;
pub mod matching;

pub use detect::{
    detect, detect_gray, feature_matrix, min_detectable_clone, ColorMode, DetectionReport,
    DetectorConfig, Method, ShiftBin, Timings,
};
pub use error::{Error, Result};
pub use features::FeatureVector;
pub use forgery::{
    plant_clone, score_detection, score_mask, synth_base, Forgery, ForgerySpec, GroundTruth, Rect,
    Score, Shape, Sidecar, Texture,
};
pub use image::{
    extract_blocks, load_image, save_rgb_png, split_channels, to_gray, Block, BlockGrid, Domain,
    GrayImage, Origin, RgbImage,
};
pub use matching::{
    build_mask, candidate_pairs, exhaustive_match, filter_by_shift, lex_sort, shift_histogram,
    DetectionMask, FeatureMatrix, Label, MatchPair, MatchParams, Shift, ShiftHistogram,
};
