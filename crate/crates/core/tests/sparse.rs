mod common;

use common::{clustered, random_labels, rel_close};
use proptest::prelude::*;
use varclust::sparse::{
    bcss_per_variable, log_grid, sparse_kmeans_fit, tune_t, update_weights, update_weights_with_threshold,
    SparseKMeansConfig,
};
use varclust::DataMatrix;

/// a_j from the pairwise-dispersion definition, O(n²).
fn pairwise_bcss(data: &DataMatrix, labels: &[usize], k: usize) -> Vec<f64> {
    let y = data.values();
    let n = y.nrows();
    (0..y.ncols())
        .map(|j| {
            let mut total = 0.0;
            let mut within = vec![0.0; k];
            let mut counts = vec![0.0; k];
            for i in 0..n {
                counts[labels[i]] += 1.0;
                for i2 in 0..n {
                    let d = (y[(i, j)] - y[(i2, j)]).powi(2);
                    total += d;
                    if labels[i] == labels[i2] {
                        within[labels[i]] += d;
                    }
                }
            }
            total / n as f64 - (0..k).map(|c| within[c] / counts[c]).sum::<f64>()
        })
        .collect()
}

fn soft(a: &[f64], delta: f64) -> Vec<f64> {
    let s: Vec<f64> = a.iter().map(|&x| (x.max(0.0) - delta).max(0.0)).collect();
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    s.into_iter().map(|v| v / norm).collect()
}

/// Exact maximizer: on each active-set interval of the soft threshold Δ,
/// solve the quadratic ‖s‖₁² = t²‖s‖₂² in closed form and keep the root
/// lying inside its interval.
fn oracle_weights(a: &[f64], t: f64) -> Vec<f64> {
    let w0 = soft(a, 0.0);
    if w0.iter().sum::<f64>() <= t {
        return w0;
    }
    let mut pos: Vec<f64> = a.iter().map(|x| x.max(0.0)).filter(|&x| x > 0.0).collect();
    pos.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for m in 1..=pos.len() {
        let a1: f64 = pos[..m].iter().sum();
        let a2: f64 = pos[..m].iter().map(|x| x * x).sum();
        let mf = m as f64;
        let (qa, qb, qc) = (mf * mf - t * t * mf, 2.0 * t * t * a1 - 2.0 * mf * a1, a1 * a1 - t * t * a2);
        let lo = if m < pos.len() { pos[m] } else { 0.0 };
        let hi = pos[m - 1];
        let roots = if qa.abs() < 1e-12 && qb.abs() < 1e-12 {
            // t = 1 with a single active entry: every Δ in the interval binds
            vec![lo]
        } else if qa.abs() < 1e-12 {
            vec![-qc / qb]
        } else {
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
            vec![(-qb - disc) / (2.0 * qa), (-qb + disc) / (2.0 * qa)]
        };
        // squaring admits spurious roots, so check the bound really binds
        let binds = |r: f64| {
            r >= lo - 1e-12 && r < hi * (1.0 - 1e-9) && (soft(a, r.max(0.0)).iter().sum::<f64>() - t).abs() < 1e-9
        };
        if let Some(&root) = roots.iter().find(|&&r| binds(r)) {
            return soft(a, root.max(0.0));
        }
    }
    panic!("no binding threshold for {a:?}, t = {t}");
}

fn objective(w: &[f64], a: &[f64]) -> f64 {
    w.iter().zip(a).map(|(w, a)| w * a).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weights_match_threshold_oracle(
        a in prop::collection::vec(-1.0f64..10.0, 2..12),
        frac in 0.0f64..1.0,
    ) {
        prop_assume!(a.iter().any(|&x| x > 0.05));
        let p = a.len() as f64;
        let t = 1.0 + frac * (p.sqrt() - 1.0);
        let w = update_weights(&a, t).unwrap();
        let expected = oracle_weights(&a, t);
        for (x, y) in w.iter().zip(&expected) {
            prop_assert!((x - y).abs() < 1e-6, "{w:?} vs {expected:?}");
        }
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!(w.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-9);
        prop_assert!(w.iter().sum::<f64>() <= t + 1e-9);
        // no feasible point on a Δ grid does better
        let max = a.iter().copied().fold(0.0, f64::max);
        for g in 0..400 {
            let cand = soft(&a, max * g as f64 / 400.0);
            if cand.iter().sum::<f64>() <= t {
                prop_assert!(objective(&w, &a) >= objective(&cand, &a) - 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn bcss_pairwise_identity(seed in any::<u64>(), n in 6usize..40, p in 1usize..5, k in 1usize..4) {
        let data = clustered(seed, n, p, k, 1.0);
        let labels = random_labels(seed, n, k);
        let fast = bcss_per_variable(&data, &labels, k).unwrap();
        let slow = pairwise_bcss(&data, &labels, k);
        for (x, y) in fast.iter().zip(&slow) {
            prop_assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-6), "{x} vs {y}");
        }
    }

    #[test]
    fn alternation_is_monotone_and_feasible(seed in any::<u64>(), n in 20usize..60, p in 2usize..8, frac in 0.0f64..1.0) {
        let data = clustered(seed, n, p, 2, 1.5);
        let t = 1.0 + frac * ((p as f64).sqrt() - 1.0);
        let config = SparseKMeansConfig { kmeans_restarts: 2, seed, ..SparseKMeansConfig::default() };
        let fit = sparse_kmeans_fit(&data, 2, t, &config).unwrap();
        for h in fit.history.windows(2) {
            prop_assert!(h[1] >= h[0] - 1e-9 * h[0].abs(), "{} -> {}", h[0], h[1]);
        }
        prop_assert!(fit.w.iter().all(|&w| w >= 0.0));
        prop_assert!(fit.w.iter().map(|w| w * w).sum::<f64>() <= 1.0 + 1e-9);
        prop_assert!(fit.w.iter().sum::<f64>() <= t + 1e-6);
        let a = bcss_per_variable(&data, &fit.labels, 2).unwrap();
        prop_assert!(rel_close(objective(&fit.w, &a), fit.objective, 1e-9));
    }
}

#[test]
fn loose_bound_gives_normalized_positive_part() {
    let a = [4.0, -1.0, 3.0];
    let (w, delta) = update_weights_with_threshold(&a, 3f64.sqrt()).unwrap();
    assert_eq!(delta, 0.0);
    assert!((w[0] - 0.8).abs() < 1e-12 && w[1] == 0.0 && (w[2] - 0.6).abs() < 1e-12);
}

#[test]
fn tight_bound_keeps_only_the_largest() {
    let w = update_weights(&[1.0, 5.0, 2.0], 1.0).unwrap();
    assert!((w[1] - 1.0).abs() < 1e-6 && w[0].abs() < 1e-6 && w[2].abs() < 1e-6);
}

#[test]
fn exchangeable_variables_get_equal_weights_at_full_bound() {
    let w = update_weights(&[2.0; 4], 2.0).unwrap();
    assert!(w.iter().all(|&x| (x - 0.5).abs() < 1e-12));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(update_weights(&[1.0, 2.0], 0.5).is_err());
    assert!(update_weights(&[-1.0, 0.0], 1.2).is_err());
    let data = clustered(0, 20, 3, 2, 1.0);
    assert!(sparse_kmeans_fit(&data, 1, 1.5, &SparseKMeansConfig::default()).is_err());
    assert!(sparse_kmeans_fit(&data, 2, 5.0, &SparseKMeansConfig::default()).is_err());
}

#[test]
fn informative_variables_get_the_weight() {
    let spec = varclust::simgen::ScenarioSpec::exp1(4, 3).unwrap();
    let ds = spec.generate().unwrap();
    let fit = sparse_kmeans_fit(&ds.data, 3, 2.0, &SparseKMeansConfig { seed: 3, ..SparseKMeansConfig::default() }).unwrap();
    let top: f64 = fit.w[..5].iter().sum();
    let rest: f64 = fit.w[5..].iter().sum();
    assert!(top > 4.0 * rest, "{:?}", fit.w);
}

#[test]
fn gap_curve_is_reproducible_and_picks_a_grid_point() {
    let ds = varclust::simgen::ScenarioSpec::exp1(2, 4).unwrap().generate().unwrap();
    let grid = log_grid(ds.data.p(), 4);
    let config = SparseKMeansConfig { seed: 8, ..SparseKMeansConfig::default() };
    let a = tune_t(&ds.data, 3, &grid, 5, &config).unwrap();
    let b = tune_t(&ds.data, 3, &grid, 5, &config).unwrap();
    assert_eq!(a.gap, b.gap);
    assert!(grid.contains(&a.chosen_t));
    let best = a.gap.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(a.gap[grid.iter().position(|&t| t == a.chosen_t).unwrap()], best);
    assert!(a.se.iter().all(|&s| s >= 0.0));
}
