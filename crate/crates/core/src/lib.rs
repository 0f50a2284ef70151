//! Variable selection for clustering.
//!
//! Two engines live here. The model-selection engine fits Gaussian mixtures
//! by EM ([`gmm`]) and searches over variable roles (relevant, redundant,
//! independent) with a sum of BICs ([`varsel`]). The regularization engine is
//! sparse K-means with a permutation gap statistic for its L1 bound
//! ([`sparse`]). [`simgen`] generates the synthetic benchmark settings and
//! [`metrics`] scores partitions and selected variable sets.
//!
//! Variable and cluster indices are 0-based throughout the API.

pub mod data;
pub mod error;
pub mod gmm;
pub mod kmeans;
pub mod metrics;
pub mod regression;
pub mod rng;
pub mod simgen;
pub mod sparse;
pub mod varsel;

pub use data::DataMatrix;
pub use error::{Error, Result};
