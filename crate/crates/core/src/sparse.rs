//! Sparse K-means: K-means on feature-weighted data with the weights
//! maximizing the weighted between-cluster sum of squares under
//! ‖w‖₂ ≤ 1, ‖w‖₁ ≤ t, w ≥ 0; the bound t is tuned by a permutation gap
//! statistic.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, kmeans_from_labels, KMeansConfig};
use crate::rng;

/// Relative L1 change of the weights below which the alternation stops.
const WEIGHT_TOL: f64 = 1e-4;
const BISECTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseKMeansConfig {
    /// Maximum number of cluster/weight alternations.
    pub max_iter: usize,
    /// Independent alternation runs; the best objective wins.
    pub n_starts: usize,
    /// Restarts of the initial K-means clustering.
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub seed: u64,
}

impl Default for SparseKMeansConfig {
    fn default() -> Self {
        Self { max_iter: 20, n_starts: 1, kmeans_restarts: 10, kmeans_max_iter: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SparseFit {
    pub labels: Vec<usize>,
    pub w: Vec<f64>,
    pub t: f64,
    /// Σ_j w_j a_j at the returned labels and weights.
    pub objective: f64,
    pub n_iter: usize,
    /// Objective after every weight update of the winning run.
    pub history: Vec<f64>,
}

impl SparseFit {
    /// Variables with a positive weight.
    pub fn selected(&self) -> BTreeSet<usize> {
        self.w.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(j, _)| j).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GapCurve {
    pub t_grid: Vec<f64>,
    pub gap: Vec<f64>,
    pub se: Vec<f64>,
    /// log objective on the observed data, per t.
    pub log_objective: Vec<f64>,
    pub chosen_t: f64,
}

/// Per-variable between-cluster sum of squares
/// a_j = (1/n)ΣᵢΣᵢ′(y_ij − y_i′j)² − Σ_k (1/n_k)Σ_{i,i′∈k}(y_ij − y_i′j)²,
/// evaluated through the equivalent centroid form 2·(TSS_j − WSS_j).
pub fn bcss_per_variable(data: &DataMatrix, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    bcss_matrix(data.values(), labels, k)
}

pub(crate) fn bcss_matrix(y: &DMatrix<f64>, labels: &[usize], k: usize) -> Result<Vec<f64>> {
    let (n, p) = y.shape();
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        if l >= k {
            return Err(Error::InvalidArgument(format!("label {l} outside 0..{k}")));
        }
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCluster(c));
    }
    let mut out = Vec::with_capacity(p);
    let mut sums = vec![0.0; k];
    for j in 0..p {
        let col = y.column(j);
        let mean = col.mean();
        sums.fill(0.0);
        for (&v, &l) in col.iter().zip(labels) {
            sums[l] += v;
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
        let mut total = 0.0;
        let mut within = 0.0;
        for (&v, &l) in col.iter().zip(labels) {
            total += (v - mean) * (v - mean);
            within += (v - means[l]) * (v - means[l]);
        }
        out.push(2.0 * (total - within));
    }
    Ok(out)
}

fn soft_normalized(a: &[f64], delta: f64) -> Vec<f64> {
    let s: Vec<f64> = a.iter().map(|&x| (x - delta).max(0.0)).collect();
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    s.into_iter().map(|v| v / norm).collect()
}

fn l1(w: &[f64]) -> f64 {
    w.iter().sum()
}

/// Maximizer of Σ w_j a_j over w ≥ 0, ‖w‖₂ ≤ 1, ‖w‖₁ ≤ t.
pub fn update_weights(a: &[f64], t: f64) -> Result<Vec<f64>> {
    update_weights_with_threshold(a, t).map(|(w, _)| w)
}

/// As [`update_weights`], also returning the soft-threshold Δ.
///
/// The solution is s(a₊, Δ)/‖s(a₊, Δ)‖₂ with Δ = 0 when that already meets
/// the L1 bound, otherwise the Δ found by bisection where the bound binds.
pub fn update_weights_with_threshold(a: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    if !(t >= 1.0) {
        return Err(Error::InvalidArgument(format!("L1 bound t = {t} must be at least 1")));
    }
    let pos: Vec<f64> = a.iter().map(|&x| x.max(0.0)).collect();
    let max = pos.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::AllNonpositive);
    }
    let w = soft_normalized(&pos, 0.0);
    if l1(&w) <= t {
        return Ok((w, 0.0));
    }
    // ‖w(Δ)‖₁ is nonincreasing in Δ; just below max only the largest entries survive
    let top: Vec<usize> = (0..pos.len()).filter(|&j| pos[j] == max).collect();
    if (top.len() as f64).sqrt() > t {
        // tied maxima: put equal weight t/m on each, leaving ‖w‖₂ < 1
        let mut w = vec![0.0; pos.len()];
        for &j in &top {
            w[j] = t / top.len() as f64;
        }
        return Ok((w, max));
    }
    let (mut lo, mut hi) = (0.0, max);
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let w = soft_normalized(&pos, mid);
        let norm = l1(&w);
        if norm <= t {
            let done = t - norm < BISECTION_TOL;
            best = Some((w, mid));
            hi = mid;
            if done {
                break;
            }
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * max {
            break;
        }
    }
    let best = best.unwrap_or_else(|| {
        let mut w = vec![0.0; pos.len()];
        for &j in &top {
            w[j] = 1.0 / (top.len() as f64).sqrt();
        }
        (w, max)
    });
    Ok(best)
}

/// Sparse K-means at a fixed L1 bound `t`.
pub fn sparse_kmeans_fit(data: &DataMatrix, k: usize, t: f64, config: &SparseKMeansConfig) -> Result<SparseFit> {
    sparse_kmeans_matrix(data.values(), k, t, config)
}

fn sparse_kmeans_matrix(y: &DMatrix<f64>, k: usize, t: f64, config: &SparseKMeansConfig) -> Result<SparseFit> {
    check_args(y, k, t)?;
    let starts = initial_partitions(y, k, config)?;
    fit_from_partitions(y, k, t, config, &starts)
}

fn check_args(y: &DMatrix<f64>, k: usize, t: f64) -> Result<()> {
    let (n, p) = y.shape();
    if k < 2 {
        return Err(Error::InvalidArgument("sparse K-means needs K >= 2".into()));
    }
    if n <= k {
        return Err(Error::InvalidArgument(format!("n = {n} must exceed K = {k}")));
    }
    if !(t >= 1.0 && t <= (p as f64).sqrt() + 1e-12) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [1, sqrt(p)]")));
    }
    Ok(())
}

/// K-means partitions of the equally weighted data, one per start.
fn initial_partitions(y: &DMatrix<f64>, k: usize, config: &SparseKMeansConfig) -> Result<Vec<Vec<usize>>> {
    (0..config.n_starts.max(1))
        .map(|start| {
            let km = KMeansConfig {
                n_restarts: config.kmeans_restarts,
                max_iter: config.kmeans_max_iter,
                seed: rng::derive_seed(config.seed, &[start as u64]),
            };
            Ok(kmeans(y, k, &km)?.labels)
        })
        .collect()
}

fn fit_from_partitions(
    y: &DMatrix<f64>,
    k: usize,
    t: f64,
    config: &SparseKMeansConfig,
    starts: &[Vec<usize>],
) -> Result<SparseFit> {
    let mut best: Option<SparseFit> = None;
    for labels in starts {
        let fit = alternate(y, k, t, config, labels.clone())?;
        if best.as_ref().is_none_or(|b| fit.objective > b.objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

fn weighted(y: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..w.len()).filter(|&j| w[j] > 0.0).collect();
    DMatrix::from_fn(y.nrows(), keep.len(), |i, c| y[(i, keep[c])] * w[keep[c]].sqrt())
}

fn alternate(y: &DMatrix<f64>, k: usize, t: f64, config: &SparseKMeansConfig, mut labels: Vec<usize>) -> Result<SparseFit> {
    let p = y.ncols();
    let mut w = vec![1.0 / (p as f64).sqrt(); p];
    let mut history = Vec::new();
    let mut objective;
    loop {
        let a = bcss_matrix(y, &labels, k)?;
        let new_w = update_weights(&a, t)?;
        objective = new_w.iter().zip(&a).map(|(w, a)| w * a).sum::<f64>();
        history.push(objective);
        let change = w.iter().zip(&new_w).map(|(o, n)| (o - n).abs()).sum::<f64>() / l1(&w);
        w = new_w;
        if change < WEIGHT_TOL || history.len() >= config.max_iter {
            break;
        }
        // Lloyd from the current centroids cannot lower the weighted objective
        labels = kmeans_from_labels(&weighted(y, &w), k, &labels, config.kmeans_max_iter)?.labels;
    }
    Ok(SparseFit { labels, w, t, objective, n_iter: history.len(), history })
}

/// Ten log-spaced bounds in [1.1, √p] (a single √p when p is too small).
pub fn default_t_grid(p: usize) -> Vec<f64> {
    log_grid(p, 10)
}

pub fn log_grid(p: usize, size: usize) -> Vec<f64> {
    let hi = (p as f64).sqrt();
    let lo = 1.1;
    if hi <= lo || size <= 1 {
        return vec![hi.max(1.0)];
    }
    (0..size)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (size - 1) as f64).exp())
        .collect()
}

/// Gap statistic over `t_grid` against `n_perm` column-permuted copies of
/// the data; the chosen bound maximizes the gap (ties go to smaller t).
/// Each dataset's initial partitions are shared by every bound.
pub fn tune_t(
    data: &DataMatrix,
    k: usize,
    t_grid: &[f64],
    n_perm: usize,
    config: &SparseKMeansConfig,
) -> Result<GapCurve> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    if n_perm < 2 {
        return Err(Error::InvalidArgument("need at least two permutations".into()));
    }
    let y = data.values();
    let (n, p) = y.shape();
    let permuted: Vec<DMatrix<f64>> = (0..n_perm)
        .map(|b| {
            let mut m = y.clone();
            for j in 0..p {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng::stream(config.seed, &[0x9e41, b as u64, j as u64]));
                for (i, &src) in order.iter().enumerate() {
                    m[(i, j)] = y[(src, j)];
                }
            }
            m
        })
        .collect();
    let mut gap = Vec::with_capacity(t_grid.len());
    let mut se = Vec::with_capacity(t_grid.len());
    let mut log_objective = Vec::with_capacity(t_grid.len());
    let dataset_config = |tag: u64| SparseKMeansConfig { seed: rng::derive_seed(config.seed, &[tag]), ..config.clone() };
    let observed_starts = initial_partitions(y, k, &dataset_config(0))?;
    let permuted_starts = permuted
        .iter()
        .enumerate()
        .map(|(b, m)| initial_partitions(m, k, &dataset_config(b as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    for &t in t_grid {
        check_args(y, k, t)?;
        let observed = fit_from_partitions(y, k, t, config, &observed_starts)?.objective.ln();
        let perm_logs = permuted
            .iter()
            .zip(&permuted_starts)
            .map(|(m, starts)| Ok(fit_from_partitions(m, k, t, config, starts)?.objective.ln()))
            .collect::<Result<Vec<f64>>>()?;
        let mean = perm_logs.iter().sum::<f64>() / n_perm as f64;
        let var = perm_logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_perm - 1) as f64;
        gap.push(observed - mean);
        se.push(var.sqrt() * (1.0 + 1.0 / n_perm as f64).sqrt());
        log_objective.push(observed);
    }
    let mut best = 0;
    for i in 1..t_grid.len() {
        if gap[i] > gap[best] || (gap[i] == gap[best] && t_grid[i] < t_grid[best]) {
            best = i;
        }
    }
    Ok(GapCurve { t_grid: t_grid.to_vec(), gap, se, log_objective, chosen_t: t_grid[best] })
}
