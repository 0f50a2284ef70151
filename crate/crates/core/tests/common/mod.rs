#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use varclust::rng;
use varclust::DataMatrix;

/// `n` rows of `k` separated spherical clusters in `p` dimensions; the
/// cluster of row i is i mod k.
pub fn clustered(seed: u64, n: usize, p: usize, k: usize, sep: f64) -> DataMatrix {
    let mut r = rng::stream(seed, &[0xda7a]);
    let centers: Vec<Vec<f64>> =
        (0..k).map(|_| (0..p).map(|_| sep * r.sample::<f64, _>(StandardNormal)).collect()).collect();
    let values = DMatrix::from_fn(n, p, |i, j| centers[i % k][j] + r.sample::<f64, _>(StandardNormal));
    DataMatrix::new(values, None).unwrap()
}

pub fn random_labels(seed: u64, n: usize, k: usize) -> Vec<usize> {
    let mut r = rng::stream(seed, &[0x1abe]);
    let mut labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
    // every cluster non-empty
    for (c, l) in labels.iter_mut().take(k).enumerate() {
        *l = c;
    }
    labels
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
