//! From block descriptors to duplicate-region evidence: lexicographic
//! sorting, neighbour matching, shift-vector voting and mask painting.
//!
//! All coordinates carried by [`MatchPair`] are in original-image pixels,
//! i.e. already multiplied by the feature matrix `scale`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::image::{Block, Origin};

/// Block descriptors stored row by row, each tagged with its block origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMatrix {
    dim: usize,
    values: Vec<i64>,
    origins: Vec<Origin>,
    source_dims: (usize, usize),
    block_size: usize,
    scale: usize,
}

impl FeatureMatrix {
    /// An empty matrix for descriptors of length `dim` cut from a
    /// `source_dims` raster. `scale` maps raster coordinates back to the
    /// original image (2 for rasters taken from a DWT LL band).
    pub fn new(dim: usize, source_dims: (usize, usize), block_size: usize, scale: usize) -> Self {
        assert!(scale >= 1, "scale must be at least 1");
        Self {
            dim,
            values: Vec::new(),
            origins: Vec::new(),
            source_dims,
            block_size,
            scale,
        }
    }

    /// Wraps pre-computed flat storage (`origins.len()` rows of `dim` values).
    pub fn from_parts(
        dim: usize,
        values: Vec<i64>,
        origins: Vec<Origin>,
        source_dims: (usize, usize),
        block_size: usize,
        scale: usize,
    ) -> Result<Self> {
        if values.len() != dim * origins.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} rows of dimension {dim}",
                values.len(),
                origins.len()
            )));
        }
        let mut fm = Self::new(dim, source_dims, block_size, scale);
        fm.check_origins(&origins)?;
        fm.values = values;
        fm.origins = origins;
        Ok(fm)
    }

    pub fn from_rows(
        rows: Vec<FeatureVector>,
        source_dims: (usize, usize),
        block_size: usize,
        scale: usize,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, FeatureVector::dim);
        let mut fm = Self::new(dim, source_dims, block_size, scale);
        for row in rows {
            fm.push(row)?;
        }
        Ok(fm)
    }

    fn check_origins(&self, origins: &[Origin]) -> Result<()> {
        let (w, h) = self.source_dims;
        let b = self.block_size;
        match origins.iter().find(|o| o.x + b > w || o.y + b > h) {
            Some(o) => Err(Error::InvalidInput(format!(
                "block at ({}, {}) exceeds the {w}x{h} source raster",
                o.x, o.y
            ))),
            None => Ok(()),
        }
    }

    pub fn push(&mut self, row: FeatureVector) -> Result<()> {
        if row.dim() != self.dim {
            return Err(Error::InvalidInput(format!(
                "row of length {} in a matrix of dimension {}",
                row.dim(),
                self.dim
            )));
        }
        self.check_origins(std::slice::from_ref(&row.origin))?;
        self.values.extend(row.values);
        self.origins.push(row.origin);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    /// Side of a block footprint in original-image pixels.
    pub fn footprint(&self) -> usize {
        self.block_size * self.scale
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn origin(&self, i: usize) -> Origin {
        self.origins[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = FeatureVector> + '_ {
        (0..self.len()).map(|i| FeatureVector {
            origin: self.origins[i],
            values: self.row(i).to_vec(),
        })
    }

    fn permuted(&self, perm: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for &i in perm {
            values.extend_from_slice(self.row(i));
        }
        Self {
            values,
            origins: perm.iter().map(|&i| self.origins[i]).collect(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        Self::new(self.dim, self.source_dims, self.block_size, self.scale)
    }
}

/// Sorts rows lexicographically by descriptor, ties broken by origin in
/// raster order. Returns the sorted matrix and `perm`, where sorted row `i`
/// is original row `perm[i]`.
pub fn lex_sort(fm: &FeatureMatrix) -> (FeatureMatrix, Vec<usize>) {
    let mut perm: Vec<usize> = (0..fm.len()).collect();
    // origins are distinct, so this is a total order and the result is unique
    perm.sort_unstable_by(|&a, &b| {
        fm.row(a)
            .cmp(fm.row(b))
            .then_with(|| fm.origins[a].cmp(&fm.origins[b]))
    });
    (fm.permuted(&perm), perm)
}

/// Displacement between two matched blocks, in original-image pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shift {
    pub dx: i64,
    pub dy: i64,
}

impl Shift {
    pub const fn new(dx: i64, dy: i64) -> Self {
        Self { dx, dy }
    }

    /// Sign-normalized form: `dx > 0`, or `dx == 0 && dy >= 0`.
    pub fn canonical(self) -> Self {
        if self.dx > 0 || (self.dx == 0 && self.dy > 0) {
            self
        } else {
            Self::new(-self.dx, -self.dy)
        }
    }

    pub fn between(a: Origin, b: Origin) -> Self {
        Self::new(b.x as i64 - a.x as i64, b.y as i64 - a.y as i64)
    }
}

/// Two blocks with equal descriptors. `a` precedes `b` in raster order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchPair {
    pub a: Origin,
    pub b: Origin,
    pub shift: Shift,
}

impl MatchPair {
    /// Orders the two origins and computes the canonical shift.
    pub fn new(p: Origin, q: Origin) -> Self {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        Self {
            a,
            b,
            shift: Shift::between(a, b).canonical(),
        }
    }

    /// Whether two `footprint`-sided squares at `a` and `b` intersect.
    pub fn overlaps(&self, footprint: usize) -> bool {
        let f = footprint as i64;
        self.shift.dx.abs() < f && self.shift.dy.abs() < f
    }
}

/// How sorted rows are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchParams {
    /// Rows at most this many positions apart in sorted order are compared.
    pub window: usize,
    /// Drop pairs whose block footprints intersect.
    pub overlap_guard: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            window: 1,
            overlap_guard: true,
        }
    }
}

/// Emits a pair for every two rows within `params.window` positions of
/// each other whose descriptors are identical. Output is sorted by `(a, b)`.
pub fn candidate_pairs(sorted: &FeatureMatrix, params: MatchParams) -> Vec<MatchPair> {
    let n = sorted.len();
    let scale = sorted.scale;
    let footprint = sorted.footprint();
    let to_original = |o: Origin| Origin::new(o.x * scale, o.y * scale);
    let mut pairs = Vec::new();
    for i in 0..n {
        let row = sorted.row(i);
        for j in i + 1..n.min(i + params.window.max(1) + 1) {
            if sorted.row(j) != row {
                continue;
            }
            let pair = MatchPair::new(to_original(sorted.origin(i)), to_original(sorted.origin(j)));
            if params.overlap_guard && pair.overlaps(footprint) {
                continue;
            }
            pairs.push(pair);
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Pair counts per canonical shift.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftHistogram {
    bins: BTreeMap<Shift, usize>,
}

impl ShiftHistogram {
    pub fn count(&self, shift: Shift) -> usize {
        self.bins.get(&shift.canonical()).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bins in `(dx, dy)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Shift, usize)> + '_ {
        self.bins.iter().map(|(&s, &c)| (s, c))
    }

    /// The most populated bin; ties go to the smallest shift.
    pub fn mode(&self) -> Option<(Shift, usize)> {
        self.iter().fold(None, |best, (s, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((s, c)),
        })
    }

    pub fn bins_at_least(&self, threshold: usize) -> Vec<(Shift, usize)> {
        self.iter().filter(|&(_, c)| c >= threshold).collect()
    }
}

impl FromIterator<(Shift, usize)> for ShiftHistogram {
    fn from_iter<I: IntoIterator<Item = (Shift, usize)>>(iter: I) -> Self {
        let mut bins = BTreeMap::new();
        for (s, c) in iter {
            if c > 0 {
                *bins.entry(s.canonical()).or_insert(0) += c;
            }
        }
        Self { bins }
    }
}

pub fn shift_histogram(pairs: &[MatchPair]) -> ShiftHistogram {
    pairs.iter().map(|p| (p.shift, 1)).collect()
}

/// Keeps the pairs whose shift bin holds at least `threshold` pairs.
/// A threshold of 0 behaves like 1.
pub fn filter_by_shift(
    pairs: &[MatchPair],
    hist: &ShiftHistogram,
    threshold: usize,
) -> Vec<MatchPair> {
    let threshold = threshold.max(1);
    pairs
        .iter()
        .filter(|p| hist.count(p.shift) >= threshold)
        .copied()
        .collect()
}

/// Number of distinct block origins taking part in `pairs`.
pub fn matched_block_count(pairs: &[MatchPair]) -> usize {
    pairs
        .iter()
        .flat_map(|p| [p.a, p.b])
        .collect::<BTreeSet<_>>()
        .len()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    #[default]
    None,
    Source,
    Target,
}

/// Per-pixel localization of duplicated regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Label>,
    /// Pixels painted as both source and target (reported as target).
    pub collisions: usize,
}

impl DetectionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![Label::None; width * height],
            collisions: 0,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn labeled(&self) -> usize {
        self.labels.iter().filter(|&&l| l != Label::None).count()
    }

    /// Pixel-wise union. Target wins over source, as in [`build_mask`].
    pub fn union(&self, other: &DetectionMask) -> Result<DetectionMask> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::InvalidInput("mask dimensions differ".into()));
        }
        let mut collisions = 0;
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| match (a, b) {
                (Label::Target, _) | (_, Label::Target) => {
                    if a == Label::Source || b == Label::Source {
                        collisions += 1;
                    }
                    Label::Target
                }
                (Label::Source, _) | (_, Label::Source) => Label::Source,
                _ => Label::None,
            })
            .collect();
        Ok(DetectionMask {
            width: self.width,
            height: self.height,
            labels,
            collisions: self.collisions + other.collisions + collisions,
        })
    }
}

/// Paints each pair's footprints: `a` as source, `b` as target.
pub fn build_mask(
    pairs: &[MatchPair],
    fm: &FeatureMatrix,
    width: usize,
    height: usize,
) -> DetectionMask {
    build_mask_with_footprint(pairs, fm.footprint(), width, height)
}

pub(crate) fn build_mask_with_footprint(
    pairs: &[MatchPair],
    footprint: usize,
    width: usize,
    height: usize,
) -> DetectionMask {
    let mut source = vec![false; width * height];
    let mut target = vec![false; width * height];
    let paint = |plane: &mut [bool], o: Origin| {
        for y in o.y..(o.y + footprint).min(height) {
            let row = &mut plane[y * width..(y + 1) * width];
            row[o.x.min(width)..(o.x + footprint).min(width)].fill(true);
        }
    };
    for p in pairs {
        paint(&mut source, p.a);
        paint(&mut target, p.b);
    }
    let mut collisions = 0;
    let labels = source
        .iter()
        .zip(&target)
        .map(|(&s, &t)| match (s, t) {
            (true, true) => {
                collisions += 1;
                Label::Target
            }
            (_, true) => Label::Target,
            (true, false) => Label::Source,
            _ => Label::None,
        })
        .collect();
    DetectionMask {
        width,
        height,
        labels,
        collisions,
    }
}

/// Brute-force comparison of every block against every other block.
///
/// Returns all pairs with non-overlapping footprints whose samples agree
/// within `eps` per component. Quadratic in the block count; meant as a
/// reference for small images (a few thousand blocks).
pub fn exhaustive_match(blocks: &[Block], eps: f64) -> Vec<MatchPair> {
    let mut pairs = Vec::new();
    for (i, p) in blocks.iter().enumerate() {
        for q in &blocks[i + 1..] {
            if p.size != q.size {
                continue;
            }
            let pair = MatchPair::new(p.origin, q.origin);
            if pair.overlaps(p.size) {
                continue;
            }
            if p.samples
                .iter()
                .zip(&q.samples)
                .all(|(x, y)| (x - y).abs() <= eps)
            {
                pairs.push(pair);
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(x: usize, y: usize, values: &[i64]) -> FeatureVector {
        FeatureVector {
            origin: Origin::new(x, y),
            values: values.to_vec(),
        }
    }

    fn matrix(rows: Vec<FeatureVector>) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, (64, 64), 4, 1).unwrap()
    }

    #[test]
    fn two_key_order() {
        let fm = matrix(vec![
            fv(0, 0, &[5, 1]),
            fv(1, 0, &[3, 9]),
            fv(2, 0, &[3, 2]),
        ]);
        let (sorted, perm) = lex_sort(&fm);
        let rows: Vec<_> = (0..3).map(|i| sorted.row(i).to_vec()).collect();
        assert_eq!(rows, vec![vec![3, 2], vec![3, 9], vec![5, 1]]);
        assert_eq!(perm, vec![2, 1, 0]);
    }

    #[test]
    fn sorted_input_gives_identity() {
        let fm = matrix(vec![
            fv(0, 0, &[1, 1]),
            fv(5, 0, &[1, 2]),
            fv(0, 3, &[2, 0]),
        ]);
        assert_eq!(lex_sort(&fm).1, vec![0, 1, 2]);
    }

    #[test]
    fn ties_follow_raster_order() {
        let fm = matrix(vec![fv(10, 0, &[7]), fv(2, 3, &[7])]);
        let (sorted, _) = lex_sort(&fm);
        assert_eq!(sorted.origin(0), Origin::new(10, 0));
        let fm = matrix(vec![fv(2, 3, &[7]), fv(10, 0, &[7]), fv(1, 3, &[7])]);
        let (sorted, _) = lex_sort(&fm);
        let order: Vec<_> = (0..3).map(|i| sorted.origin(i)).collect();
        assert_eq!(
            order,
            vec![Origin::new(10, 0), Origin::new(1, 3), Origin::new(2, 3)]
        );
    }

    #[test]
    fn rejects_ragged_rows_and_bad_origins() {
        assert!(
            FeatureMatrix::from_rows(vec![fv(0, 0, &[1]), fv(1, 0, &[1, 2])], (8, 8), 4, 1)
                .is_err()
        );
        assert!(FeatureMatrix::from_rows(vec![fv(5, 0, &[1])], (8, 8), 4, 1).is_err());
    }

    #[test]
    fn distinct_rows_give_no_pairs() {
        let fm = matrix((0..10).map(|i| fv(i, 0, &[i as i64])).collect());
        let (sorted, _) = lex_sort(&fm);
        assert!(candidate_pairs(&sorted, MatchParams::default()).is_empty());
    }

    #[test]
    fn overlap_guard_uses_scaled_footprint() {
        let fm =
            FeatureMatrix::from_rows(vec![fv(0, 0, &[1]), fv(5, 0, &[1])], (32, 32), 4, 2).unwrap();
        let (sorted, _) = lex_sort(&fm);
        // shift 10 in original pixels, footprint 8: kept
        let pairs = candidate_pairs(&sorted, MatchParams::default());
        assert_eq!(
            pairs,
            vec![MatchPair::new(Origin::new(0, 0), Origin::new(10, 0))]
        );
        let fm =
            FeatureMatrix::from_rows(vec![fv(0, 0, &[1]), fv(3, 1, &[1])], (32, 32), 4, 2).unwrap();
        let (sorted, _) = lex_sort(&fm);
        assert!(candidate_pairs(&sorted, MatchParams::default()).is_empty());
        let off = MatchParams {
            overlap_guard: false,
            ..Default::default()
        };
        assert_eq!(candidate_pairs(&sorted, off)[0].shift, Shift::new(6, 2));
    }

    #[test]
    fn window_reaches_further_rows() {
        let fm = matrix(vec![fv(0, 0, &[1]), fv(10, 0, &[1]), fv(20, 0, &[1])]);
        let (sorted, _) = lex_sort(&fm);
        assert_eq!(candidate_pairs(&sorted, MatchParams::default()).len(), 2);
        let wide = MatchParams {
            window: 2,
            overlap_guard: true,
        };
        assert_eq!(candidate_pairs(&sorted, wide).len(), 3);
    }

    #[test]
    fn uniform_rows_mostly_guarded() {
        let rows: Vec<_> = (0..10)
            .flat_map(|y| (0..10).map(move |x| fv(x, y, &[0])))
            .collect();
        let fm = FeatureMatrix::from_rows(rows, (13, 13), 4, 1).unwrap();
        let (sorted, _) = lex_sort(&fm);
        let off = MatchParams {
            overlap_guard: false,
            ..Default::default()
        };
        let all = candidate_pairs(&sorted, off);
        let kept = candidate_pairs(&sorted, MatchParams::default());
        assert_eq!(all.len(), 99);
        // only the row wrap-arounds (x: 9 -> 0) jump at least a footprint
        assert_eq!(kept.len(), 9);
        assert!(kept.iter().all(|p| p.shift == Shift::new(9, -1)));
    }

    #[test]
    fn canonical_shift() {
        assert_eq!(Shift::new(-3, 2).canonical(), Shift::new(3, -2));
        assert_eq!(Shift::new(0, -5).canonical(), Shift::new(0, 5));
        assert_eq!(Shift::new(4, -1).canonical(), Shift::new(4, -1));
        let p = MatchPair::new(Origin::new(10, 5), Origin::new(2, 9));
        assert_eq!(p.a, Origin::new(10, 5));
        assert_eq!(p.shift, Shift::new(8, -4));
    }

    fn table_pairs() -> Vec<MatchPair> {
        let mut pairs = Vec::new();
        for i in 0..94 {
            let a = Origin::new(i % 50, i / 50 * 10);
            pairs.push(MatchPair::new(a, Origin::new(a.x + 1, a.y)));
        }
        for i in 0..10 {
            let a = Origin::new(i, 40);
            pairs.push(MatchPair::new(a, Origin::new(a.x + 4, a.y + 1)));
        }
        pairs
    }

    #[test]
    fn histogram_of_sky_matches() {
        let pairs = table_pairs();
        let hist = shift_histogram(&pairs);
        let bins: Vec<_> = hist.iter().collect();
        assert_eq!(bins, vec![(Shift::new(1, 0), 94), (Shift::new(4, 1), 10)]);
        assert_eq!(hist.total(), 104);
        assert!(filter_by_shift(&pairs, &hist, 100).is_empty());
        assert_eq!(filter_by_shift(&pairs, &hist, 94).len(), 94);
        assert_eq!(filter_by_shift(&pairs, &hist, 10).len(), 104);
        assert!(shift_histogram(&[]).is_empty());
    }

    #[test]
    fn mask_footprints() {
        let fm = matrix(vec![]);
        assert_eq!(build_mask(&[], &fm, 20, 20).labeled(), 0);
        let pair = MatchPair::new(Origin::new(0, 0), Origin::new(10, 3));
        let mask = build_mask(&[pair], &fm, 20, 20);
        assert_eq!(mask.labeled(), 32);
        assert_eq!(mask.count(Label::Source), 16);
        assert_eq!(mask.get(0, 0), Label::Source);
        assert_eq!(mask.get(13, 6), Label::Target);
        assert_eq!(mask.collisions, 0);
    }

    #[test]
    fn mask_collision_prefers_target() {
        let fm = matrix(vec![]);
        let pairs = [
            MatchPair::new(Origin::new(0, 0), Origin::new(4, 0)),
            MatchPair::new(Origin::new(4, 0), Origin::new(8, 0)),
        ];
        let mask = build_mask(&pairs, &fm, 16, 8);
        assert_eq!(mask.get(5, 1), Label::Target);
        assert_eq!(mask.collisions, 16);
    }

    #[test]
    fn exhaustive_two_blocks() {
        let a = Block::new(Origin::new(0, 0), 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Block::new(Origin::new(5, 5), 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = Block::new(Origin::new(9, 0), 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        assert_eq!(
            exhaustive_match(&[a.clone(), b.clone(), c.clone()], 0.0).len(),
            1
        );
        assert_eq!(exhaustive_match(&[a, b, c], 0.5).len(), 3);
    }

    proptest! {
        #[test]
        fn sort_is_a_permutation(rows in proptest::collection::vec(proptest::collection::vec(0i64..4, 3), 1..60)) {
            let fm = matrix(rows.iter().enumerate().map(|(i, v)| fv(i % 60, i / 60, v)).collect());
            let (sorted, perm) = lex_sort(&fm);
            let mut seen = perm.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..fm.len()).collect::<Vec<_>>());
            for (i, &p) in perm.iter().enumerate() {
                prop_assert_eq!(sorted.row(i), fm.row(p));
                prop_assert_eq!(sorted.origin(i), fm.origin(p));
            }
            for i in 1..sorted.len() {
                prop_assert!(sorted.row(i - 1) <= sorted.row(i));
            }
        }

        #[test]
        fn histogram_ignores_pair_orientation(coords in proptest::collection::vec((0usize..40, 0usize..40, 0usize..40, 0usize..40), 0..50)) {
            let fwd: Vec<_> = coords.iter().map(|&(a, b, c, d)| MatchPair::new(Origin::new(a, b), Origin::new(c, d))).collect();
            let rev: Vec<_> = coords.iter().map(|&(a, b, c, d)| MatchPair::new(Origin::new(c, d), Origin::new(a, b))).collect();
            prop_assert_eq!(shift_histogram(&fwd), shift_histogram(&rev));
            prop_assert_eq!(shift_histogram(&fwd).total(), fwd.len());
        }

        #[test]
        fn raising_threshold_never_adds(coords in proptest::collection::vec((0usize..6, 0usize..3), 0..80), th in 1usize..20) {
            let pairs: Vec<_> = coords.iter().enumerate().map(|(i, &(dx, dy))| {
                let a = Origin::new(i, 0);
                MatchPair::new(a, Origin::new(a.x + dx + 1, dy))
            }).collect();
            let hist = shift_histogram(&pairs);
            let lo = filter_by_shift(&pairs, &hist, th);
            let hi = filter_by_shift(&pairs, &hist, th + 1);
            prop_assert!(hi.len() <= lo.len());
            prop_assert!(hi.iter().all(|p| lo.contains(p)));
        }
    }
}
