use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use varclust::kmeans::{kmeans, KMeansConfig};
use varclust::metrics::{adjusted_rand_index, vser};
use varclust::sparse::{log_grid, sparse_kmeans_fit, tune_t, GapCurve, SparseKMeansConfig};
use varclust::varsel::{select_roles, RoleSearchConfig, VariableRoles};
use varclust::DataMatrix;

use crate::config::{DataSource, Method, RunConfig};
use crate::data::load_csv;
use crate::error::{BenchError, Result};

/// One method on one replicate. Metrics are empty when the run failed or no
/// ground truth is available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub ari: Option<f64>,
    pub vser: Option<f64>,
    pub n_selected: Option<usize>,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoleFrequency {
    pub scenario: String,
    pub variable: String,
    pub relevant: f64,
    pub redundant: f64,
    pub independent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSummary {
    pub scenario: String,
    pub variable: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// What a method produced on one dataset.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub labels: Vec<usize>,
    pub selected: BTreeSet<usize>,
    pub roles: Option<VariableRoles>,
    pub weights: Option<Vec<f64>>,
    pub gap: Option<GapCurve>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub scenario: String,
    pub variable_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub timings: Vec<TimingRow>,
    /// Roles found by every successful RD-MCM run.
    pub roles: Vec<VariableRoles>,
    /// Weights found by every successful sparse K-means run.
    pub weights: Vec<Vec<f64>>,
}

/// Data of one replicate with whatever ground truth is known.
pub struct Replicate {
    pub data: DataMatrix,
    pub labels: Option<Vec<usize>>,
    pub relevant: Option<BTreeSet<usize>>,
}

pub fn load_replicate(source: &DataSource, seed: u64) -> Result<Replicate> {
    match source.spec(seed) {
        Some(spec) => {
            let ds = spec?.generate().map_err(|e| BenchError::Data(e.to_string()))?;
            Ok(Replicate { data: ds.data, labels: Some(ds.true_labels), relevant: Some(ds.true_relevant) })
        }
        None => {
            let DataSource::Csv(path) = source else { unreachable!("non-scenario source is a CSV") };
            let ds = load_csv(path)?;
            Ok(Replicate { data: ds.data, labels: ds.labels, relevant: None })
        }
    }
}

/// Runs one method with its seed derived from the replicate seed.
pub fn run_method(method: Method, data: &DataMatrix, config: &RunConfig, seed: u64) -> varclust::Result<MethodOutput> {
    let seed = method.seed(seed);
    let missing = || varclust::Error::InvalidArgument("missing K".into());
    match method {
        Method::Kmeans => {
            let k = config.fixed_k().ok_or_else(missing)?;
            let km = KMeansConfig { n_restarts: config.kmeans_restarts, seed, ..KMeansConfig::default() };
            let fit = kmeans(data.values(), k, &km)?;
            Ok(MethodOutput {
                labels: fit.labels,
                selected: (0..data.p()).collect(),
                roles: None,
                weights: None,
                gap: None,
            })
        }
        Method::SparseKmeans => {
            let k = config.fixed_k().ok_or_else(missing)?;
            let sk = SparseKMeansConfig { seed, ..SparseKMeansConfig::default() };
            let gap = tune_t(data, k, &log_grid(data.p(), config.t_grid_size), config.n_perm, &sk)?;
            let fit = sparse_kmeans_fit(data, k, gap.chosen_t, &sk)?;
            Ok(MethodOutput {
                selected: fit.selected(),
                labels: fit.labels,
                roles: None,
                weights: Some(fit.w),
                gap: Some(gap),
            })
        }
        Method::Rdmcm => {
            let mut rs = RoleSearchConfig::new(config.rdmcm_k_set().ok_or_else(missing)?, config.rdmcm_families())
                .with_seed(seed);
            rs.screen = config.screen;
            let search = select_roles(data, &rs)?;
            let model = search.model;
            Ok(MethodOutput {
                labels: model.mixture.labels,
                selected: model.roles.s.clone(),
                roles: Some(model.roles),
                weights: None,
                gap: None,
            })
        }
    }
}

/// Runs every requested method on every replicate and summarizes.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchReport> {
    config.validate()?;
    let scenario = config.source.id();
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut roles = Vec::new();
    let mut weights = Vec::new();
    let mut variable_names = Vec::new();
    for replicate in 0..config.replicates {
        let seed = config.replicate_seed(replicate);
        let rep = load_replicate(&config.source, seed)?;
        variable_names = (0..rep.data.p()).map(|j| rep.data.col_name(j)).collect();
        for &method in &methods {
            let start = Instant::now();
            let outcome = run_method(method, &rep.data, config, seed);
            timings.push(TimingRow {
                scenario: scenario.clone(),
                method,
                replicate,
                runtime_seconds: start.elapsed().as_secs_f64(),
            });
            let row = match outcome {
                Ok(out) => {
                    let ari = match &rep.labels {
                        Some(truth) => Some(adjusted_rand_index(&out.labels, truth).map_err(|e| BenchError::Data(e.to_string()))?),
                        None => None,
                    };
                    let vser = rep.relevant.as_ref().map(|truth| vser(&out.selected, truth, rep.data.p()));
                    let n_selected = Some(out.selected.len());
                    roles.extend(out.roles);
                    weights.extend(out.weights);
                    ResultRow { scenario: scenario.clone(), method, replicate, ari, vser, n_selected, seed, status: "ok".into() }
                }
                Err(e) => ResultRow {
                    scenario: scenario.clone(),
                    method,
                    replicate,
                    ari: None,
                    vser: None,
                    n_selected: None,
                    seed,
                    status: format!("failed: {e}"),
                },
            };
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| (&a.scenario, a.method, a.replicate).cmp(&(&b.scenario, b.method, b.replicate)));
    timings.sort_by(|a, b| (&a.scenario, a.method, a.replicate).cmp(&(&b.scenario, b.method, b.replicate)));
    let summary = summarize(&rows);
    Ok(BenchReport { scenario, variable_names, rows, summary, timings, roles, weights })
}

/// Mean and sample standard deviation of each metric per method, over the
/// rows where the metric is present.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, Method)> = rows.iter().map(|r| (r.scenario.clone(), r.method)).collect();
    keys.dedup();
    let mut out = Vec::new();
    for (scenario, method) in keys {
        let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.scenario == scenario && r.method == method).collect();
        let metrics: [(&str, Vec<f64>); 3] = [
            ("ari", mine.iter().filter_map(|r| r.ari).collect()),
            ("vser", mine.iter().filter_map(|r| r.vser).collect()),
            ("n_selected", mine.iter().filter_map(|r| r.n_selected.map(|v| v as f64)).collect()),
        ];
        for (metric, values) in metrics {
            if values.is_empty() {
                continue;
            }
            let (mean, sd) = mean_sd(&values);
            out.push(SummaryRow { scenario: scenario.clone(), method, metric: metric.into(), mean, sd });
        }
    }
    out
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Share of runs that declared each variable relevant, redundant or
/// independent.
pub fn emit_role_frequencies(scenario: &str, names: &[String], roles: &[VariableRoles]) -> Result<Vec<RoleFrequency>> {
    if roles.is_empty() {
        return Err(BenchError::NoRoleData);
    }
    let runs = roles.len() as f64;
    Ok(names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let count = |f: fn(&VariableRoles) -> &BTreeSet<usize>| roles.iter().filter(|r| f(r).contains(&j)).count();
            let (s, u) = (count(|r| &r.s), count(|r| &r.u));
            let relevant = s as f64 / runs;
            let redundant = u as f64 / runs;
            RoleFrequency {
                scenario: scenario.into(),
                variable: name.clone(),
                relevant,
                redundant,
                independent: (roles.len() - s - u) as f64 / runs,
            }
        })
        .collect())
}

/// Five-number summary of each variable's weight across runs.
pub fn emit_weight_summaries(scenario: &str, names: &[String], weights: &[Vec<f64>]) -> Result<Vec<WeightSummary>> {
    if weights.is_empty() {
        return Err(BenchError::NoWeightData);
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut w: Vec<f64> = weights.iter().map(|run| run[j]).collect();
            w.sort_by(f64::total_cmp);
            WeightSummary {
                scenario: scenario.into(),
                variable: name.clone(),
                min: w[0],
                q1: quantile(&w, 0.25),
                median: quantile(&w, 0.5),
                q3: quantile(&w, 0.75),
                max: w[w.len() - 1],
            }
        })
        .collect())
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
