use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Structural constraint on the component covariance matrices.
///
/// Names follow the usual volume/shape/orientation letter codes: `E` equal
/// across components, `V` varying, `I` identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovarianceFamily {
    /// `EII`: λI shared by all components.
    SphericalEqual,
    /// `VII`: λ_k I.
    SphericalVarying,
    /// `EEI`: one diagonal matrix shared by all components.
    DiagonalEqual,
    /// `VVI`: a diagonal matrix per component.
    DiagonalVarying,
    /// `EEE`: one full matrix shared by all components.
    FullEqual,
    /// `VEE`: λ_k C with C shared and det C = 1.
    FullEqualShapeOrientation,
    /// `VVV`: unrestricted.
    FullVarying,
}

impl CovarianceFamily {
    pub const ALL: [CovarianceFamily; 7] = [
        Self::SphericalEqual,
        Self::SphericalVarying,
        Self::DiagonalEqual,
        Self::DiagonalVarying,
        Self::FullEqual,
        Self::FullEqualShapeOrientation,
        Self::FullVarying,
    ];

    /// Spherical and diagonal families.
    pub const AXIS_ALIGNED: [CovarianceFamily; 4] = [
        Self::SphericalEqual,
        Self::SphericalVarying,
        Self::DiagonalEqual,
        Self::DiagonalVarying,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Self::SphericalEqual => "EII",
            Self::SphericalVarying => "VII",
            Self::DiagonalEqual => "EEI",
            Self::DiagonalVarying => "VVI",
            Self::FullEqual => "EEE",
            Self::FullEqualShapeOrientation => "VEE",
            Self::FullVarying => "VVV",
        }
    }

    /// Number of free covariance parameters.
    pub fn cov_params(self, k: usize, p: usize) -> usize {
        let full = p * (p + 1) / 2;
        match self {
            Self::SphericalEqual => 1,
            Self::SphericalVarying => k,
            Self::DiagonalEqual => p,
            Self::DiagonalVarying => k * p,
            Self::FullEqual => full,
            Self::FullEqualShapeOrientation => full + k - 1,
            Self::FullVarying => k * full,
        }
    }

    pub(crate) fn is_full(self) -> bool {
        matches!(self, Self::FullEqual | Self::FullEqualShapeOrientation | Self::FullVarying)
    }
}

/// Free parameters of a K-component mixture in p dimensions: proportions,
/// means and covariances.
pub fn param_count(k: usize, p: usize, family: CovarianceFamily) -> usize {
    (k - 1) + k * p + family.cov_params(k, p)
}

impl fmt::Display for CovarianceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CovarianceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let family = match s.trim().to_ascii_lowercase().as_str() {
            "eii" | "spherical_equal" | "sphericalequal" => Self::SphericalEqual,
            "vii" | "spherical_varying" | "sphericalvarying" => Self::SphericalVarying,
            "eei" | "diagonal_equal" | "diagonalequal" => Self::DiagonalEqual,
            "vvi" | "diagonal_varying" | "diagonalvarying" => Self::DiagonalVarying,
            "eee" | "full_equal" | "fullequal" => Self::FullEqual,
            "vee" => Self::FullEqualShapeOrientation,
            "vvv" | "full_varying" | "fullvarying" => Self::FullVarying,
            other => return Err(Error::InvalidArgument(format!("unknown covariance family `{other}`"))),
        };
        Ok(family)
    }
}
