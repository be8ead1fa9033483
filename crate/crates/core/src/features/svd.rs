//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.

use crate::error::{Error, Result};
use crate::features::{check_step, quantize_into, FeatureVector};
use crate::image::Block;

const MAX_SWEEPS: usize = 64;
const ORTHO_TOL: f64 = 1e-15;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<&Block> for Matrix {
    fn from(block: &Block) -> Self {
        Matrix {
            rows: block.size,
            cols: block.size,
            data: block.samples.clone(),
        }
    }
}

/// `B = U · diag(s) · Vᵀ` with `s` sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Matrix {
        let (m, n) = (self.u.rows, self.v.rows);
        let mut us = Matrix::zeros(m, n);
        for (j, &s) in self.s.iter().enumerate() {
            for i in 0..m {
                us.set(i, j, self.u.get(i, j) * s);
            }
        }
        us.matmul(&self.v.transpose())
    }
}

/// Orthogonalizes `k` contiguous vectors of length `len` in place.
/// Rotations are mirrored onto `partner` (also `k` vectors) when given.
fn jacobi_orthogonalize(
    work: &mut [f64],
    k: usize,
    len: usize,
    mut partner: Option<(&mut [f64], usize)>,
) {
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (head, tail) = work.split_at_mut(q * len);
                let ap = &mut head[p * len..(p + 1) * len];
                let aq = &mut tail[..len];
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in ap.iter().zip(aq.iter()) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= ORTHO_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
                    let tmp = *x;
                    *x = c * tmp - s * *y;
                    *y = s * tmp + c * *y;
                }
                if let Some((vs, vlen)) = partner.as_mut() {
                    let vlen = *vlen;
                    let (head, tail) = vs.split_at_mut(q * vlen);
                    let vp = &mut head[p * vlen..(p + 1) * vlen];
                    let vq = &mut tail[..vlen];
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let tmp = *x;
                        *x = c * tmp - s * *y;
                        *y = s * tmp + c * *y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Singular values of a row-major `m×n` array, descending, written to `out`
/// (`min(m, n)` entries). `work` needs `m * n` slots.
pub fn singular_values_into(data: &[f64], m: usize, n: usize, work: &mut [f64], out: &mut [f64]) {
    if m == n && matches!(n, 2 | 4 | 8) {
        return batch_singular_values(&[data], n, &mut [out]);
    }
    generic_singular_values(data, m, n, work, out);
}

fn generic_singular_values(data: &[f64], m: usize, n: usize, work: &mut [f64], out: &mut [f64]) {
    let (k, len) = if m <= n {
        work[..m * n].copy_from_slice(data);
        (m, n)
    } else {
        for r in 0..m {
            for c in 0..n {
                work[c * m + r] = data[r * n + c];
            }
        }
        (n, m)
    };
    jacobi_orthogonalize(&mut work[..m * n], k, len, None);
    for (j, o) in out[..k].iter_mut().enumerate() {
        *o = work[j * len..(j + 1) * len]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
    }
    out[..k].sort_unstable_by(|a, b| b.total_cmp(a));
}

/// Blocks processed in lockstep by [`batch_singular_values`].
pub const SVD_LANES: usize = 8;

/// Stack-allocated one-sided Jacobi for `L` square `N×N` matrices at once.
///
/// Each lane follows exactly the rotation sequence it would follow on its
/// own: a lane whose pair is already orthogonal gets the identity rotation,
/// so its result does not depend on its batch neighbours.
#[allow(clippy::needless_range_loop)]
fn square_singular_values<const N: usize, const L: usize>(
    blocks: &[&[f64]],
    out: &mut [&mut [f64]],
) {
    debug_assert!(blocks.len() <= L && out.len() == blocks.len());
    // rows[r][i][lane]
    let mut rows = [[[0.0f64; L]; N]; N];
    for (lane, blk) in blocks.iter().enumerate() {
        for r in 0..N {
            for i in 0..N {
                rows[r][i][lane] = blk[r * N + i];
            }
        }
    }
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..N {
            for q in p + 1..N {
                let (mut alpha, mut beta, mut gamma) = ([0.0f64; L], [0.0f64; L], [0.0f64; L]);
                for i in 0..N {
                    for l in 0..L {
                        let (x, y) = (rows[p][i][l], rows[q][i][l]);
                        alpha[l] += x * x;
                        beta[l] += y * y;
                        gamma[l] += x * y;
                    }
                }
                let mut c = [1.0f64; L];
                let mut s = [0.0f64; L];
                let mut any = false;
                for l in 0..L {
                    let active =
                        gamma[l] != 0.0 && gamma[l].abs() > ORTHO_TOL * (alpha[l] * beta[l]).sqrt();
                    any |= active;
                    let g = if active { gamma[l] } else { 1.0 };
                    let zeta = (beta[l] - alpha[l]) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cl = 1.0 / (1.0 + t * t).sqrt();
                    if active {
                        c[l] = cl;
                        s[l] = cl * t;
                    }
                }
                if !any {
                    continue;
                }
                rotated = true;
                for i in 0..N {
                    for l in 0..L {
                        let (x, y) = (rows[p][i][l], rows[q][i][l]);
                        rows[p][i][l] = c[l] * x - s[l] * y;
                        rows[q][i][l] = s[l] * x + c[l] * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    for (lane, o) in out.iter_mut().enumerate() {
        for (r, slot) in o[..N].iter_mut().enumerate() {
            *slot = (0..N)
                .map(|i| rows[r][i][lane] * rows[r][i][lane])
                .sum::<f64>()
                .sqrt();
        }
        o[..N].sort_unstable_by(|a, b| b.total_cmp(a));
    }
}

/// Singular values of several square `n×n` row-major blocks, descending,
/// one output slice per block. Equivalent to calling
/// [`singular_values_into`] on each block.
pub fn batch_singular_values(blocks: &[&[f64]], n: usize, out: &mut [&mut [f64]]) {
    assert_eq!(blocks.len(), out.len());
    let fast = |blocks: &[&[f64]], out: &mut [&mut [f64]]| match n {
        2 => square_singular_values::<2, SVD_LANES>(blocks, out),
        4 => square_singular_values::<4, SVD_LANES>(blocks, out),
        8 => square_singular_values::<8, SVD_LANES>(blocks, out),
        _ => {
            let mut work = vec![0.0; n * n];
            for (b, o) in blocks.iter().zip(out.iter_mut()) {
                generic_singular_values(b, n, n, &mut work, o);
            }
        }
    };
    for (b, o) in blocks.chunks(SVD_LANES).zip(out.chunks_mut(SVD_LANES)) {
        fast(b, o);
    }
}

/// Full decomposition with square orthogonal `U` (m×m) and `V` (n×n).
pub fn svd(mat: &Matrix) -> Result<SvdTriple> {
    if mat.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    if mat.rows < mat.cols {
        let t = svd(&mat.transpose())?;
        return Ok(SvdTriple {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let (m, n) = (mat.rows, mat.cols);
    // columns of A, each contiguous
    let mut cols = mat.transpose().data;
    let mut vcols = Matrix::identity(n).data;
    jacobi_orthogonalize(&mut cols, n, m, Some((&mut vcols, n)));

    let norms: Vec<f64> = (0..n)
        .map(|j| {
            cols[j * m..(j + 1) * m]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let smax = norms.iter().copied().fold(0.0, f64::max);
    let tiny = smax * (m.max(n) as f64) * f64::EPSILON;
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(n);
    let mut v = Matrix::zeros(n, n);
    for (dst, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        for i in 0..n {
            v.set(i, dst, vcols[j * n + i]);
        }
        if norms[j] > tiny && norms[j] > 0.0 {
            ucols.push(
                cols[j * m..(j + 1) * m]
                    .iter()
                    .map(|x| x / norms[j])
                    .collect(),
            );
        } else {
            ucols.push(Vec::new());
        }
    }
    complete_basis(&mut ucols, m);

    let mut u = Matrix::zeros(m, m);
    for (j, col) in ucols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            u.set(i, j, x);
        }
    }
    Ok(SvdTriple { u, s, v })
}

/// Fills empty slots (and extends to `m` columns) with unit vectors
/// orthogonal to the ones already present.
fn complete_basis(cols: &mut Vec<Vec<f64>>, m: usize) {
    cols.resize(m, Vec::new());
    let mut candidate = 0;
    for j in 0..m {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(candidate < m, "failed to complete orthonormal basis");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let d: f64 = e.iter().zip(other).map(|(a, b)| a * b).sum();
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= d * o;
                    }
                }
            }
            let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-6 {
                cols[j] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

/// Singular values of a block, descending.
pub fn block_singular_values(block: &Block) -> Result<Vec<f64>> {
    if block.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("block has non-finite samples".into()));
    }
    let b = block.size;
    let mut work = vec![0.0; b * b];
    let mut out = vec![0.0; b];
    singular_values_into(&block.samples, b, b, &mut work, &mut out);
    Ok(out)
}

/// The `b` singular values of a block, quantized with step `q`.
pub fn svd_features(block: &Block, q: f64) -> Result<FeatureVector> {
    check_step(q)?;
    let s = block_singular_values(block)?;
    let mut values = vec![0; s.len()];
    quantize_into(&s, q, &mut values);
    Ok(FeatureVector {
        origin: block.origin,
        values,
    })
}
