//! Finite Gaussian mixtures fitted by EM and compared with BIC.

mod em;
mod family;

pub use em::{bic_mixture, em_fit, em_fit_matrix, em_single_start, gaussian_log_density, EmConfig, MixtureFit};
pub use family::{param_count, CovarianceFamily};

pub(crate) use em::bic_value;

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Fits every (K, family) cell of the grid and returns the fit with the
/// largest BIC. Ties go to fewer parameters, then to smaller K.
pub fn best_mixture(
    data: &DataMatrix,
    k_set: &[usize],
    families: &[CovarianceFamily],
    config: &EmConfig,
) -> Result<MixtureFit> {
    best_mixture_matrix(data.values(), k_set, families, config, None)
}

/// Grid search on a raw matrix. When `warm` is given, every cell whose K
/// matches it gets an extra start from its responsibilities.
pub fn best_mixture_matrix(
    y: &DMatrix<f64>,
    k_set: &[usize],
    families: &[CovarianceFamily],
    config: &EmConfig,
    warm: Option<&DMatrix<f64>>,
) -> Result<MixtureFit> {
    if k_set.is_empty() || families.is_empty() {
        return Err(Error::InvalidArgument("empty K set or family list".into()));
    }
    let mut best: Option<MixtureFit> = None;
    let mut last_err = None;
    for &k in k_set {
        for &family in families {
            let warm_k = warm.filter(|w| w.ncols() == k);
            match em_fit_matrix(y, k, family, config, warm_k) {
                Ok(fit) => {
                    if best.as_ref().is_none_or(|b| better(&fit, b)) {
                        best = Some(fit);
                    }
                }
                Err(e @ Error::SingularData(_)) | Err(e @ Error::InvalidArgument(_)) => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::DegenerateFit { starts: 0 }))
}

pub(crate) fn better(a: &MixtureFit, b: &MixtureFit) -> bool {
    if a.bic != b.bic {
        return a.bic > b.bic;
    }
    (a.n_params(), a.k) < (b.n_params(), b.k)
}
