use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use varclust::gmm::CovarianceFamily;
use varclust::simgen::{Experiment, ScenarioSpec};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kmeans,
    SparseKmeans,
    Rdmcm,
}

impl Method {
    pub const ALL: [Method; 3] = [Self::Kmeans, Self::SparseKmeans, Self::Rdmcm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Kmeans => "kmeans",
            Self::SparseKmeans => "sparse_kmeans",
            Self::Rdmcm => "rdmcm",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Self::Kmeans => 1,
            Self::SparseKmeans => 2,
            Self::Rdmcm => 3,
        }
    }

    /// Seed of this method's random streams in replicate `seed`.
    pub fn seed(self, seed: u64) -> u64 {
        varclust::rng::derive_seed(seed, &[0xbe9c, self.tag()])
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "kmeans" => Ok(Self::Kmeans),
            "sparse_kmeans" | "sparsekmeans" | "sparse" => Ok(Self::SparseKmeans),
            "rdmcm" | "rd_mcm" => Ok(Self::Rdmcm),
            other => Err(BenchError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Where the data of each replicate comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Synthetic scenario; the seed of replicate r is `base_seed + r`.
    Scenario { experiment: Experiment, scenario: u32, n: Option<usize> },
    /// The same CSV file for every replicate.
    Csv(PathBuf),
}

impl DataSource {
    pub fn spec(&self, seed: u64) -> Option<Result<ScenarioSpec>> {
        match self {
            Self::Scenario { experiment, scenario, n } => Some(
                ScenarioSpec::new(*experiment, *scenario, seed)
                    .map(|s| match n {
                        Some(n) => s.with_n(*n),
                        None => s,
                    })
                    .map_err(|e| BenchError::Config(e.to_string())),
            ),
            Self::Csv(_) => None,
        }
    }

    pub fn id(&self) -> String {
        match self {
            Self::Scenario { .. } => self.spec(0).and_then(|s| s.ok()).map_or_else(|| "scenario".into(), |s| s.id()),
            Self::Csv(path) => path.file_stem().map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    /// Replicate count used when none is given.
    pub fn default_replicates(&self) -> usize {
        match self {
            Self::Scenario { experiment: Experiment::Exp1, .. } => 25,
            Self::Scenario { experiment: Experiment::Exp2, .. } => 50,
            _ => 1,
        }
    }

    /// Number of clusters used when neither K nor a K set is given.
    pub fn default_k(&self) -> Option<usize> {
        match self {
            Self::Scenario { experiment: Experiment::Exp2, .. } => Some(4),
            Self::Scenario { .. } => Some(3),
            Self::Csv(_) => None,
        }
    }

    /// Mixture families searched by RD-MCM when none are given.
    pub fn default_families(&self) -> Vec<CovarianceFamily> {
        match self {
            Self::Scenario { experiment: Experiment::Exp1, .. } => vec![CovarianceFamily::SphericalEqual],
            Self::Scenario { experiment: Experiment::Waveform, .. } => vec![CovarianceFamily::FullEqual],
            _ => CovarianceFamily::ALL.to_vec(),
        }
    }
}

/// Replicate count of the `--desk` preset.
pub const DESK_REPLICATES: usize = 10;

/// Full description of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// Fixed number of clusters.
    pub k: Option<usize>,
    /// Candidate numbers of clusters for RD-MCM.
    pub k_set: Option<Vec<usize>>,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    /// RD-MCM mixture families; `None` uses the source default.
    pub families: Option<Vec<CovarianceFamily>>,
    /// Permuted datasets in sparse K-means tuning.
    pub n_perm: usize,
    pub t_grid_size: usize,
    /// Restarts of the plain K-means baseline.
    pub kmeans_restarts: usize,
    /// RD-MCM candidate screening; `None` evaluates every move exactly.
    pub screen: Option<usize>,
}

impl RunConfig {
    pub fn new(source: DataSource) -> Self {
        Self {
            replicates: source.default_replicates(),
            source,
            methods: Method::ALL.to_vec(),
            k: None,
            k_set: None,
            base_seed: 0,
            output: None,
            families: None,
            n_perm: 25,
            t_grid_size: 10,
            kmeans_restarts: 1,
            screen: Some(5),
        }
    }

    pub fn scenario(experiment: Experiment, scenario: u32) -> Self {
        Self::new(DataSource::Scenario { experiment, scenario, n: None })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no method requested".into());
        }
        if self.k.is_some() && self.k_set.is_some() {
            return bad("give either a fixed K or a K set, not both".into());
        }
        if self.k == Some(0) || self.k_set.as_ref().is_some_and(|s| s.is_empty() || s.contains(&0)) {
            return bad("cluster counts must be positive".into());
        }
        let fixed = self.fixed_k();
        if self.methods.iter().any(|m| *m != Method::Rdmcm) && fixed.is_none() {
            return bad("kmeans and sparse_kmeans need a fixed K".into());
        }
        if self.methods.contains(&Method::Rdmcm) && self.rdmcm_k_set().is_none() {
            return bad("rdmcm needs K or a K set".into());
        }
        if self.methods.contains(&Method::SparseKmeans) {
            if fixed.is_some_and(|k| k < 2) {
                return bad("sparse_kmeans needs K >= 2".into());
            }
            if self.n_perm < 2 || self.t_grid_size == 0 {
                return bad("tuning needs n_perm >= 2 and a non-empty t grid".into());
            }
        }
        if self.families.as_ref().is_some_and(|f| f.is_empty()) {
            return bad("empty family list".into());
        }
        if self.kmeans_restarts == 0 || self.screen == Some(0) {
            return bad("restart and screening counts must be positive".into());
        }
        if let Some(spec) = self.source.spec(self.base_seed) {
            spec?;
        }
        Ok(())
    }

    /// K for the fixed-K methods.
    pub fn fixed_k(&self) -> Option<usize> {
        if self.k_set.is_some() {
            return None;
        }
        self.k.or(self.source.default_k())
    }

    pub fn rdmcm_k_set(&self) -> Option<Vec<usize>> {
        self.k_set.clone().or_else(|| self.fixed_k().map(|k| vec![k]))
    }

    pub fn rdmcm_families(&self) -> Vec<CovarianceFamily> {
        self.families.clone().unwrap_or_else(|| self.source.default_families())
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}
