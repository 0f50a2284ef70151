use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::config::{DataSource, RunConfig};
use crate::error::Result;
use crate::run::{emit_role_frequencies, emit_weight_summaries, BenchReport};

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to rerun `config` and audit its seeds.
pub fn manifest(config: &RunConfig) -> serde_json::Value {
    let source = match &config.source {
        DataSource::Scenario { experiment, scenario, n } => {
            json!({ "kind": "scenario", "experiment": experiment.to_string(), "scenario": scenario, "n": n })
        }
        DataSource::Csv(path) => json!({ "kind": "csv", "path": path.display().to_string() }),
    };
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();
    let replicates: Vec<_> = (0..config.replicates)
        .map(|r| {
            let seed = config.replicate_seed(r);
            let method_seeds: serde_json::Map<_, _> =
                methods.iter().map(|m| (m.name().to_string(), json!(m.seed(seed)))).collect();
            json!({ "replicate": r, "seed": seed, "method_seeds": method_seeds })
        })
        .collect();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": config.source.id(),
        "source": source,
        "methods": methods,
        "replicates": config.replicates,
        "k": config.fixed_k(),
        "k_set": config.rdmcm_k_set(),
        "families": config.rdmcm_families().iter().map(|f| f.code()).collect::<Vec<_>>(),
        "base_seed": config.base_seed,
        "n_perm": config.n_perm,
        "t_grid_size": config.t_grid_size,
        "kmeans_restarts": config.kmeans_restarts,
        "screen": config.screen,
        "replicate_seeds": replicates,
    })
}

/// Writes `results.csv`, `summary.csv`, `timings.csv`, `manifest.json` and,
/// when the methods produced them, `roles.csv` and `weights.csv`.
pub fn write_report(dir: &Path, config: &RunConfig, report: &BenchReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(&dir.join("results.csv"), &report.rows)?;
    write_rows(&dir.join("summary.csv"), &report.summary)?;
    write_rows(&dir.join("timings.csv"), &report.timings)?;
    if !report.roles.is_empty() {
        let freq = emit_role_frequencies(&report.scenario, &report.variable_names, &report.roles)?;
        write_rows(&dir.join("roles.csv"), &freq)?;
    }
    if !report.weights.is_empty() {
        let summ = emit_weight_summaries(&report.scenario, &report.variable_names, &report.weights)?;
        write_rows(&dir.join("weights.csv"), &summ)?;
    }
    let text = serde_json::to_string_pretty(&manifest(config))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
