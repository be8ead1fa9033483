//! Image containers, grayscale conversion and overlapped block extraction.

use std::path::Path;

use image::{ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Luma weights applied to the R, G and B planes.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Top-left pixel coordinate of a block.
///
/// Ordering is raster order: by row (`y`) first, then column (`x`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Origin {
    pub y: usize,
    pub x: usize,
}

impl Origin {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { y, x }
    }
}

/// An 8-bit three-plane raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    planes: [Vec<u8>; 3],
}

impl RgbImage {
    pub fn from_planes(width: usize, height: usize, planes: [Vec<u8>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("empty image {width}x{height}")));
        }
        if planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::InvalidInput(format!(
                "plane size does not match {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    /// Builds an image from interleaved RGB bytes.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::InvalidInput(format!(
                "expected {} interleaved bytes, got {}",
                width * height * 3,
                rgb.len()
            )));
        }
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for px in rgb.chunks_exact(3) {
            for (plane, &v) in planes.iter_mut().zip(px) {
                plane.push(v);
            }
        }
        Self::from_planes(width, height, planes)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[Vec<u8>; 3] {
        &self.planes
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for i in 0..self.width * self.height {
            out.extend(self.planes.iter().map(|p| p[i]));
        }
        out
    }
}

/// Whether a raster holds camera-domain intensities or transform coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spatial,
    Transform,
}

/// A single-channel raster of real-valued samples, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    domain: Domain,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, domain: Domain) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} samples for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            domain,
        })
    }

    /// Spatial-domain raster filled from `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
            domain: Domain::Spatial,
        }
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            data.iter().map(|&v| f64::from(v)).collect(),
            Domain::Spatial,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Copies the `size`×`size` window at `origin` into `out`, row-major.
    #[inline]
    pub fn copy_window(&self, origin: Origin, size: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), size * size);
        for (r, dst) in out.chunks_exact_mut(size).enumerate() {
            let start = (origin.y + r) * self.width + origin.x;
            dst.copy_from_slice(&self.pixels[start..start + size]);
        }
    }

    /// Samples rounded and clamped to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Three identical planes holding the rounded samples.
    pub fn to_rgb(&self) -> RgbImage {
        let plane = self.to_u8();
        RgbImage {
            width: self.width,
            height: self.height,
            planes: [plane.clone(), plane.clone(), plane],
        }
    }

    /// Writes the raster as an 8-bit grayscale PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        image::save_buffer_with_format(
            path,
            &self.to_u8(),
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::L8,
            ImageFormat::Png,
        )
        .map_err(|e| image_error(path, e))
    }
}

fn image_error(path: &Path, err: image::ImageError) -> Error {
    match err {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format(other.to_string()),
    }
}

/// Decodes a PNG or BMP file into three 8-bit planes.
///
/// Grayscale files yield three identical planes; alpha is discarded.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Bmp) => {}
        Some(other) => {
            return Err(Error::Format(format!(
                "{}: {other:?} input is not supported (PNG or BMP only)",
                path.display()
            )))
        }
        None => {
            return Err(Error::Format(format!(
                "{}: unrecognized image format",
                path.display()
            )))
        }
    }
    // the file opened fine, so a read failure here means truncated data
    let decoded = reader
        .decode()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let rgb = decoded.to_rgb8();
    RgbImage::from_interleaved(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

/// Writes an RGB raster as PNG.
pub fn save_rgb_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer_with_format(
        path,
        &img.to_interleaved(),
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::Rgb8,
        ImageFormat::Png,
    )
    .map_err(|e| image_error(path, e))
}

/// Weighted luma conversion, kept at full precision.
pub fn to_gray(img: &RgbImage) -> GrayImage {
    let [r, g, b] = &img.planes;
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let pixels = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| wr * f64::from(r) + wg * f64::from(g) + wb * f64::from(b))
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
        domain: Domain::Spatial,
    }
}

/// Splits an image into its R, G and B planes.
pub fn split_channels(img: &RgbImage) -> [GrayImage; 3] {
    img.planes.clone().map(|plane| GrayImage {
        width: img.width,
        height: img.height,
        pixels: plane.into_iter().map(f64::from).collect(),
        domain: Domain::Spatial,
    })
}

/// Inverse of [`split_channels`]; samples are rounded to 8 bits.
pub fn merge_channels(channels: &[GrayImage; 3]) -> Result<RgbImage> {
    let (w, h) = (channels[0].width, channels[0].height);
    if channels.iter().any(|c| c.width != w || c.height != h) {
        return Err(Error::InvalidInput("channel dimensions differ".into()));
    }
    RgbImage::from_planes(w, h, channels.clone().map(|c| c.to_u8()))
}

/// A `size`×`size` window copied out of a raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub origin: Origin,
    pub size: usize,
    pub samples: Vec<f64>,
}

impl Block {
    pub fn new(origin: Origin, size: usize, samples: Vec<f64>) -> Result<Self> {
        if size == 0 || samples.len() != size * size {
            return Err(Error::InvalidInput(format!(
                "{} samples for a {size}x{size} block",
                samples.len()
            )));
        }
        Ok(Self {
            origin,
            size,
            samples,
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.size + x]
    }
}

/// Geometry of the overlapped block decomposition of an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub block_size: usize,
    pub image_dims: (usize, usize),
    pub count: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, block_size: usize) -> Result<Self> {
        if block_size < 2 {
            return Err(Error::InvalidBlockSize {
                size: block_size,
                reason: "blocks must be at least 2x2",
            });
        }
        if block_size > width.min(height) {
            return Err(Error::InvalidBlockSize {
                size: block_size,
                reason: "block does not fit inside the image",
            });
        }
        Ok(Self {
            block_size,
            image_dims: (width, height),
            count: (width - block_size + 1) * (height - block_size + 1),
        })
    }

    /// Number of block origins per row.
    pub fn columns(&self) -> usize {
        self.image_dims.0 - self.block_size + 1
    }

    pub fn rows(&self) -> usize {
        self.image_dims.1 - self.block_size + 1
    }

    /// Origin of the `k`-th block in raster order.
    #[inline]
    pub fn origin(&self, k: usize) -> Origin {
        let cols = self.columns();
        Origin::new(k % cols, k / cols)
    }

    pub fn origins(&self) -> impl Iterator<Item = Origin> + '_ {
        (0..self.count).map(|k| self.origin(k))
    }
}

/// Cuts every `b`×`b` window of `img`, left to right then top to bottom.
pub fn extract_blocks(img: &GrayImage, b: usize) -> Result<(BlockGrid, Vec<Block>)> {
    let grid = BlockGrid::new(img.width, img.height, b)?;
    let blocks = grid
        .origins()
        .map(|origin| {
            let mut samples = vec![0.0; b * b];
            img.copy_window(origin, b, &mut samples);
            Block {
                origin,
                size: b,
                samples,
            }
        })
        .collect();
    Ok((grid, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rgb_solid(w: usize, h: usize, px: [u8; 3]) -> RgbImage {
        RgbImage::from_planes(w, h, px.map(|v| vec![v; w * h])).unwrap()
    }

    #[test]
    fn gray_reference_points() {
        let cases = [
            ([255, 255, 255], 255.0),
            ([0, 0, 0], 0.0),
            ([100, 100, 100], 100.0),
            ([255, 0, 0], 54.213),
        ];
        for (px, want) in cases {
            let g = to_gray(&rgb_solid(1, 1, px));
            assert!(
                (g.get(0, 0) - want).abs() < 1e-9,
                "{px:?} -> {}",
                g.get(0, 0)
            );
            assert_eq!(g.domain(), Domain::Spatial);
        }
    }

    #[test]
    fn split_pure_red() {
        let [r, g, b] = split_channels(&rgb_solid(3, 2, [255, 0, 0]));
        assert!(r.pixels().iter().all(|&v| v == 255.0));
        assert!(g.pixels().iter().chain(b.pixels()).all(|&v| v == 0.0));
    }

    #[test]
    fn split_gray_source_gives_identical_planes() {
        let gray = GrayImage::from_fn(5, 4, |x, y| ((x * 37 + y * 11) % 256) as f64);
        let [r, g, b] = split_channels(&gray.to_rgb());
        assert_eq!(r, g);
        assert_eq!(g, b);
        assert_eq!(r, gray);
    }

    #[test]
    fn block_counts_for_128() {
        let img = GrayImage::from_fn(128, 128, |_, _| 0.0);
        for (b, want) in [(8, 14641), (6, 15129), (4, 15625), (3, 15876)] {
            let (grid, blocks) = extract_blocks(&img, b).unwrap();
            assert_eq!(grid.count, want);
            assert_eq!(blocks.len(), want);
        }
    }

    #[test]
    fn whole_image_block() {
        let img = GrayImage::from_fn(6, 6, |x, y| (x + 6 * y) as f64);
        let (grid, blocks) = extract_blocks(&img, 6).unwrap();
        assert_eq!(grid.count, 1);
        assert_eq!(blocks[0].samples, img.pixels());
    }

    #[test]
    fn block_size_errors() {
        let img = GrayImage::from_fn(8, 5, |_, _| 0.0);
        assert!(matches!(
            extract_blocks(&img, 6),
            Err(Error::InvalidBlockSize { size: 6, .. })
        ));
        assert!(matches!(
            extract_blocks(&img, 1),
            Err(Error::InvalidBlockSize { .. })
        ));
    }

    #[test]
    fn raster_order_origins() {
        let grid = BlockGrid::new(10, 7, 4).unwrap();
        assert_eq!(grid.origin(0), Origin::new(0, 0));
        assert_eq!(grid.origin(6), Origin::new(6, 0));
        assert_eq!(grid.origin(7), Origin::new(0, 1));
        assert_eq!(grid.origin(grid.count - 1), Origin::new(6, 3));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image("/nonexistent/definitely/missing.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn png_and_bmp_decode() {
        let dir = tempfile::tempdir().unwrap();
        let png = dir.path().join("white.png");
        image::save_buffer(&png, &[255, 255, 255], 1, 1, image::ExtendedColorType::Rgb8).unwrap();
        let img = load_image(&png).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixel(0, 0), [255, 255, 255]);

        let gray = GrayImage::from_fn(128, 128, |x, y| ((x ^ y) & 0xff) as f64);
        let bmp = dir.path().join("fixture.bmp");
        let rgb = gray.to_rgb();
        image::save_buffer(
            &bmp,
            &rgb.to_interleaved(),
            128,
            128,
            image::ExtendedColorType::Rgb8,
        )
        .unwrap();
        let back = load_image(&bmp).unwrap();
        assert_eq!(back, rgb);
    }

    #[test]
    fn truncated_png_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.png");
        let gray = GrayImage::from_fn(32, 32, |x, y| (x * y % 256) as f64);
        gray.save_png(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&path), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn block_count_formula(w in 2usize..40, h in 2usize..40, b in 2usize..12) {
            prop_assume!(b <= w.min(h));
            let img = GrayImage::from_fn(w, h, |x, y| (x * 3 + y) as f64);
            let (grid, blocks) = extract_blocks(&img, b).unwrap();
            prop_assert_eq!(grid.count, (w - b + 1) * (h - b + 1));
            prop_assert_eq!(blocks.len(), grid.count);
        }

        #[test]
        fn blocks_copy_their_window(seed in any::<u64>(), w in 4usize..30, h in 4usize..30, b in 2usize..5) {
            let img = GrayImage::from_fn(w, h, |x, y| ((seed as usize).wrapping_mul(31).wrapping_add(x * 7 + y * 13) % 256) as f64);
            let (grid, blocks) = extract_blocks(&img, b).unwrap();
            let k = (seed as usize) % grid.count;
            let blk = &blocks[k];
            prop_assert_eq!(blk.origin, grid.origin(k));
            for dy in 0..b {
                for dx in 0..b {
                    prop_assert_eq!(blk.at(dx, dy), img.get(blk.origin.x + dx, blk.origin.y + dy));
                }
            }
        }

        #[test]
        fn gray_axis_is_fixed(v in any::<u8>()) {
            let g = to_gray(&rgb_solid(2, 2, [v, v, v]));
            prop_assert!((g.get(1, 1) - f64::from(v)).abs() < 1e-12);
        }

        #[test]
        fn split_merge_round_trip(data in proptest::collection::vec(any::<u8>(), 3 * 12)) {
            let img = RgbImage::from_interleaved(4, 3, &data).unwrap();
            prop_assert_eq!(merge_channels(&split_channels(&img)).unwrap(), img);
        }
    }
}
