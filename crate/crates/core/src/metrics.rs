//! Partition agreement and variable-selection scores.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

fn comb2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand Index (Hubert–Arabie) in percent.
///
/// Partitions identical up to relabeling score 100. Otherwise, when the
/// maximum and expected index coincide (e.g. one side is a single cluster),
/// the score is 0.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if same_partition(a, b) {
        return Ok(100.0);
    }
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
        *cells.entry((x, y)).or_default() += 1;
    }
    // sort before summing so the result does not depend on hash order
    let sum_sorted = |counts: Vec<u64>| {
        let mut c = counts;
        c.sort_unstable();
        c.into_iter().map(comb2).sum::<f64>()
    };
    let index = sum_sorted(cells.into_values().collect());
    let sum_a = sum_sorted(rows.into_values().collect());
    let sum_b = sum_sorted(cols.into_values().collect());
    let total = comb2(a.len() as u64);
    if total == 0.0 {
        return Ok(0.0);
    }
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(100.0 * (index - expected) / denom)
}

/// True when `a` and `b` induce the same partition of the observations.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Variable selection error rate in percent: |selected Δ truth| / p × 100.
pub fn vser(selected: &BTreeSet<usize>, truth: &BTreeSet<usize>, p: usize) -> f64 {
    selected.symmetric_difference(truth).count() as f64 / p as f64 * 100.0
}

pub fn num_selected(selected: &BTreeSet<usize>) -> usize {
    selected.len()
}
