//! Principal component analysis over a population of block vectors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{check_step, quantize_into, FeatureVector};
use crate::image::Block;

/// Vectors per partial accumulator. Fixed so that the reduction tree, and
/// therefore the rounding, does not depend on the number of worker threads.
const CHUNK: usize = 2048;

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: Compensated) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// First and second moments of a vector population, accumulated relative to
/// a fixed reference vector to limit cancellation.
#[derive(Clone, Debug)]
pub struct Moments {
    reference: Vec<f64>,
    count: usize,
    sum: Vec<Compensated>,
    // packed upper triangle, row-major
    cross: Vec<Compensated>,
    diff: Vec<f64>,
}

impl Moments {
    pub fn new(reference: Vec<f64>) -> Self {
        let d = reference.len();
        Self {
            count: 0,
            sum: vec![Compensated::default(); d],
            cross: vec![Compensated::default(); d * (d + 1) / 2],
            diff: vec![0.0; d],
            reference,
        }
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim());
        for ((d, x), r) in self.diff.iter_mut().zip(v).zip(&self.reference) {
            *d = x - r;
        }
        let mut idx = 0;
        for i in 0..self.diff.len() {
            let di = self.diff[i];
            self.sum[i].add(di);
            for j in i..self.diff.len() {
                self.cross[idx].add(di * self.diff[j]);
                idx += 1;
            }
        }
        self.count += 1;
    }

    /// Folds another accumulator built on the same reference vector.
    pub fn merge(&mut self, other: &Moments) {
        assert_eq!(
            self.reference, other.reference,
            "moments use different references"
        );
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            a.merge(*b);
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            a.merge(*b);
        }
        self.count += other.count;
    }

    /// Accumulates `count` vectors produced by `fill(i, out)` in fixed-size
    /// chunks, in parallel, merging partials in chunk order.
    pub fn accumulate<F>(reference: Vec<f64>, count: usize, fill: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let d = reference.len();
        let chunks = count.div_ceil(CHUNK);
        let partials: Vec<Moments> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::new(reference.clone());
                let mut buf = vec![0.0; d];
                for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                    fill(i, &mut buf);
                    m.add(&buf);
                }
                m
            })
            .collect();
        let mut total = Moments::new(reference);
        for p in &partials {
            total.merge(p);
        }
        total
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.reference
            .iter()
            .zip(&self.sum)
            .map(|(r, s)| r + s.value() / n)
            .collect()
    }

    /// Sample covariance (divides by n − 1), row-major d×d.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.count as f64;
        let shifted_mean: Vec<f64> = self.sum.iter().map(|s| s.value() / n).collect();
        let mut cov = vec![0.0; d * d];
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                let c =
                    (self.cross[idx].value() - n * shifted_mean[i] * shifted_mean[j]) / (n - 1.0);
                cov[i * d + j] = c;
                cov[j * d + i] = c;
                idx += 1;
            }
        }
        cov
    }

    pub fn into_basis(self, k: usize) -> Result<PcaBasis> {
        let d = self.dim();
        if self.count < 2 {
            return Err(Error::InvalidInput(format!(
                "PCA needs at least 2 vectors, got {}",
                self.count
            )));
        }
        if k == 0 || k > d {
            return Err(Error::InvalidInput(format!(
                "component count {k} outside 1..={d}"
            )));
        }
        let eig = symmetric_eigen(&self.covariance(), d);
        Ok(PcaBasis {
            mean: self.mean(),
            components: eig.vectors.into_iter().take(k).collect(),
            variances: eig.values.into_iter().take(k).map(|v| v.max(0.0)).collect(),
        })
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Unit eigenvectors, one per value, with the largest-magnitude entry positive.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigensolver for a row-major symmetric `n×n` matrix.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + j]).collect();
            let pivot =
                col.iter().enumerate().fold(
                    0,
                    |best, (i, x)| if x.abs() > col[best].abs() { i } else { best },
                );
            if col[pivot] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Mean and leading principal directions of a vector population.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl PcaBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Coordinates of `v − mean` along each component.
    #[inline]
    pub fn project_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = v
                .iter()
                .zip(&self.mean)
                .zip(c)
                .map(|((x, m), c)| (x - m) * c)
                .sum();
        }
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector of length {} against a basis of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; self.k()];
        self.project_into(v, &mut out);
        Ok(out)
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, comp) in coords.iter().zip(&self.components) {
            for (o, x) in out.iter_mut().zip(comp) {
                *o += c * x;
            }
        }
        out
    }
}

/// Fits a `k`-component basis to `vectors`.
pub fn pca_fit<V: AsRef<[f64]> + Sync>(vectors: &[V], k: usize) -> Result<PcaBasis> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidInput("PCA needs at least 2 vectors, got 0".into()))?
        .as_ref();
    let d = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.as_ref().len() != d) {
        return Err(Error::InvalidInput(format!(
            "mixed vector lengths {d} and {}",
            bad.as_ref().len()
        )));
    }
    if vectors
        .iter()
        .flat_map(|v| v.as_ref())
        .any(|x| !x.is_finite())
    {
        return Err(Error::Numerical("non-finite PCA input".into()));
    }
    Moments::accumulate(first.to_vec(), vectors.len(), |i, out| {
        out.copy_from_slice(vectors[i].as_ref())
    })
    .into_basis(k)
}

/// Projection of a block onto `basis`, quantized with step `q`.
pub fn pca_features(block: &Block, basis: &PcaBasis, q: f64) -> Result<FeatureVector> {
    check_step(q)?;
    let coords = basis.project(&block.samples)?;
    let mut values = vec![0; coords.len()];
    quantize_into(&coords, q, &mut values);
    Ok(FeatureVector {
        origin: block.origin,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Origin;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vectors(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0.0..255.0)).collect())
            .collect()
    }

    #[test]
    fn affine_family_is_rank_one() {
        let dir: Vec<f64> = (0..16).map(|i| (i as f64 - 7.5) / 10.0).collect();
        let base: Vec<f64> = (0..16).map(|i| 100.0 + i as f64).collect();
        let vectors: Vec<Vec<f64>> = (0..40)
            .map(|t| {
                base.iter()
                    .zip(&dir)
                    .map(|(b, d)| b + (t as f64 * 1.7) * d)
                    .collect()
            })
            .collect();
        let basis = pca_fit(&vectors, 16).unwrap();
        let total: f64 = basis.variances.iter().sum();
        assert!(basis.variances[0] >= (1.0 - 1e-9) * total);
    }

    #[test]
    fn identical_vectors_have_zero_variance() {
        let vectors = vec![vec![3.0; 9]; 12];
        let basis = pca_fit(&vectors, 4).unwrap();
        assert!(basis.variances.iter().all(|&v| v == 0.0));
        assert_eq!(basis.mean, vec![3.0; 9]);
    }

    #[test]
    fn full_basis_is_lossless() {
        let vectors = random_vectors(50, 16, 7);
        let basis = pca_fit(&vectors, 16).unwrap();
        for v in &vectors {
            let back = basis.reconstruct(&basis.project(v).unwrap());
            for (a, b) in back.iter().zip(v) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn argument_checks() {
        let vectors = random_vectors(10, 4, 1);
        assert!(matches!(pca_fit(&vectors, 0), Err(Error::InvalidInput(_))));
        assert!(matches!(pca_fit(&vectors, 5), Err(Error::InvalidInput(_))));
        assert!(matches!(
            pca_fit(&vectors[..1], 1),
            Err(Error::InvalidInput(_))
        ));
        let basis = pca_fit(&vectors, 2).unwrap();
        let blk = Block::new(Origin::new(0, 0), 3, vec![0.0; 9]).unwrap();
        assert!(matches!(
            pca_features(&blk, &basis, 2.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn mean_block_projects_to_zero() {
        let vectors = random_vectors(30, 16, 3);
        let basis = pca_fit(&vectors, 4).unwrap();
        let blk = Block::new(Origin::new(1, 1), 4, basis.mean.clone()).unwrap();
        assert_eq!(pca_features(&blk, &basis, 2.0).unwrap().values, vec![0; 4]);
    }

    #[test]
    fn accumulation_order_is_immaterial() {
        let vectors = random_vectors(5000, 16, 11);
        let a = pca_fit(&vectors, 16).unwrap();
        let mut rev = vectors.clone();
        rev.reverse();
        let b = pca_fit(&rev, 16).unwrap();
        for (x, y) in a.mean.iter().zip(&b.mean) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.variances.iter().zip(&b.variances) {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn eigen_solver_diagonal() {
        let m = [2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, -1.0];
        let e = symmetric_eigen(&m, 3);
        assert_eq!(e.values, vec![5.0, 2.0, -1.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn components_are_orthonormal(seed in any::<u64>(), n in 5usize..60) {
            let vectors = random_vectors(n, 16, seed);
            let basis = pca_fit(&vectors, 16).unwrap();
            for (i, a) in basis.components.iter().enumerate() {
                for (j, b) in basis.components.iter().enumerate() {
                    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() <= 1e-8);
                }
            }
            prop_assert!(basis.variances.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
