//! Feature-reduction transforms applied to blocks or whole images.
//!
//! Every block descriptor ends up as a [`FeatureVector`] of quantized
//! integers so that rows can be compared exactly after lexicographic sorting.

mod dct;
mod dwt;
mod pca;
mod svd;

pub use dct::{dct2, dct_features, idct2, CoeffBlock, DcPolicy, DctPlan};
pub use dwt::{haar_dwt, haar_idwt, DwtQuad};
pub use pca::{pca_features, pca_fit, symmetric_eigen, Moments, PcaBasis, SymmetricEigen};
pub use svd::{
    batch_singular_values, block_singular_values, singular_values_into, svd, svd_features, Matrix,
    SvdTriple, SVD_LANES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Origin;

/// A quantized block descriptor tagged with the block's origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub origin: Origin,
    pub values: Vec<i64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Maps each value to `round(value / q)`, halves rounding away from zero.
pub fn quantize(values: &[f64], q: f64) -> Result<Vec<i64>> {
    check_step(q)?;
    let mut out = vec![0; values.len()];
    quantize_into(values, q, &mut out);
    Ok(out)
}

pub(crate) fn check_step(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "quantization step must be positive, got {q}"
        )))
    }
}

#[inline]
pub(crate) fn quantize_into(values: &[f64], q: f64, out: &mut [i64]) {
    for (o, &v) in out.iter_mut().zip(values) {
        *o = (v / q).round() as i64;
    }
}
