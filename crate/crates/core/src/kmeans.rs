//! Lloyd's K-means with k-means++ seeding.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub n_restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { n_restarts: 10, max_iter: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Cluster of each row, in `0..K`.
    pub labels: Vec<usize>,
    /// K×p centroids.
    pub centers: DMatrix<f64>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
    pub n_iter: usize,
}

/// Best of `n_restarts` seeded Lloyd runs by within-cluster sum of squares.
pub fn kmeans(y: &DMatrix<f64>, k: usize, config: &KMeansConfig) -> Result<KMeansFit> {
    check(y, k)?;
    let mut best: Option<KMeansFit> = None;
    for restart in 0..config.n_restarts.max(1) {
        let mut rng = rng::stream(config.seed, &[restart as u64]);
        let centers = plus_plus(y, k, &mut rng);
        let fit = lloyd(y, centers, config.max_iter);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Lloyd iterations started from the centroids of an existing partition.
pub fn kmeans_from_labels(y: &DMatrix<f64>, k: usize, labels: &[usize], max_iter: usize) -> Result<KMeansFit> {
    check(y, k)?;
    let mut fit_labels = labels.to_vec();
    let centers = centroids(y, k, &mut fit_labels);
    Ok(lloyd(y, centers, max_iter))
}

fn check(y: &DMatrix<f64>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if y.nrows() < k {
        return Err(Error::InvalidArgument(format!("{} rows cannot form {k} clusters", y.nrows())));
    }
    Ok(())
}

/// Squared distances from every row to every center, n×K.
fn distances(y: &DMatrix<f64>, centers: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = y.shape();
    let k = centers.nrows();
    let mut d = DMatrix::zeros(n, k);
    for c in 0..k {
        let mut col = d.column_mut(c);
        let out = col.as_mut_slice();
        for j in 0..p {
            let m = centers[(c, j)];
            for (o, &v) in out.iter_mut().zip(y.column(j).iter()) {
                let diff = v - m;
                *o += diff * diff;
            }
        }
    }
    d
}

fn sq_dist_to(y: &DMatrix<f64>, row: usize) -> Vec<f64> {
    let (n, p) = y.shape();
    let mut out = vec![0.0; n];
    for j in 0..p {
        let col = y.column(j);
        let m = col[row];
        for (o, &v) in out.iter_mut().zip(col.iter()) {
            let diff = v - m;
            *o += diff * diff;
        }
    }
    out
}

fn plus_plus(y: &DMatrix<f64>, k: usize, rng: &mut rng::Rng) -> DMatrix<f64> {
    let (n, p) = y.shape();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest = sq_dist_to(y, chosen[0]);
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        chosen.push(next);
        for (cur, d) in nearest.iter_mut().zip(sq_dist_to(y, next)) {
            *cur = cur.min(d);
        }
    }
    DMatrix::from_fn(k, p, |c, j| y[(chosen[c], j)])
}

/// Centroids of a labelling; an empty cluster takes over the point farthest
/// from its current centroid.
fn centroids(y: &DMatrix<f64>, k: usize, labels: &mut [usize]) -> DMatrix<f64> {
    let (n, p) = y.shape();
    loop {
        let mut counts = vec![0usize; k];
        let mut sums = DMatrix::<f64>::zeros(k, p);
        for j in 0..p {
            for (i, &v) in y.column(j).iter().enumerate() {
                sums[(labels[i], j)] += v;
            }
        }
        for &l in labels.iter() {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                sums.row_mut(c).scale_mut(1.0 / counts[c] as f64);
            }
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return sums;
        };
        // farthest point among clusters that can spare one
        let mut far = None;
        let mut far_d = -1.0;
        for i in 0..n {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d: f64 = (0..p).map(|j| (y[(i, j)] - sums[(labels[i], j)]).powi(2)).sum();
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("n >= K leaves a cluster with two points");
        labels[i] = empty;
    }
}

fn lloyd(y: &DMatrix<f64>, mut centers: DMatrix<f64>, max_iter: usize) -> KMeansFit {
    let n = y.nrows();
    let k = centers.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut n_iter = 0;
    loop {
        let d = distances(y, &centers);
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let row = d.row(i);
            let mut best = 0;
            for c in 1..k {
                if row[c] < row[best] {
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        n_iter += 1;
        let before = labels.clone();
        centers = centroids(y, k, &mut labels);
        changed |= before != labels;
        if !changed || n_iter >= max_iter {
            break;
        }
    }
    let wcss = within_ss(y, &labels, &centers);
    KMeansFit { labels, centers, wcss, n_iter }
}

/// Sum of squared distances of every row to its cluster's centroid.
pub fn within_ss(y: &DMatrix<f64>, labels: &[usize], centers: &DMatrix<f64>) -> f64 {
    let p = y.ncols();
    let mut total = 0.0;
    for j in 0..p {
        for (i, &v) in y.column(j).iter().enumerate() {
            let d = v - centers[(labels[i], j)];
            total += d * d;
        }
    }
    total
}

/// Centroids of a labelling with clusters in `0..k` (empty clusters give zero rows).
pub fn label_centroids(y: &DMatrix<f64>, k: usize, labels: &[usize]) -> DMatrix<f64> {
    let p = y.ncols();
    let mut counts = vec![0usize; k];
    let mut sums = DMatrix::<f64>::zeros(k, p);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..p {
            sums[(l, j)] += y[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            sums.row_mut(c).scale_mut(1.0 / counts[c] as f64);
        }
    }
    sums
}
