use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use varclust::gmm::CovarianceFamily;
use varclust::simgen::Experiment;
use varclust::sparse::{log_grid, tune_t, SparseKMeansConfig};
use varclust_bench::data::write_csv;
use varclust_bench::output::write_report;
use varclust_bench::run::{load_replicate, run_method};
use varclust_bench::{run_benchmark, BenchError, DataSource, Method, Result, RunConfig, DESK_REPLICATES};

#[derive(Parser)]
#[command(name = "varclust", version, about = "Variable selection for clustering: benchmarks, fits and tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated benchmark scenarios and write result tables.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Number of replicates (default 25 for exp1, 50 for exp2, 1 for waveform).
        #[arg(long, conflicts_with = "desk")]
        replicates: Option<usize>,
        /// Desk preset: 10 replicates.
        #[arg(long)]
        desk: bool,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Fit the methods once to a CSV dataset and print labels, roles and weights.
    Fit {
        /// Input CSV (header row; an optional `label` column is held out).
        #[arg(long)]
        csv: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the gap curve used to tune the sparse K-means L1 bound.
    Tune {
        #[arg(long, conflicts_with = "experiment")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        scenario: OptScenarioArgs,
        /// Number of clusters (defaults to the scenario's true K).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 25)]
        n_perm: usize,
        #[arg(long, default_value_t = 10)]
        t_grid_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write one simulated dataset as CSV with its labels.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// exp1, exp2 or waveform.
    #[arg(long)]
    experiment: Experiment,
    #[arg(long, default_value_t = 1)]
    scenario: u32,
    /// Override the scenario's sample size.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct OptScenarioArgs {
    #[arg(long)]
    experiment: Option<Experiment>,
    #[arg(long, default_value_t = 1)]
    scenario: u32,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated subset of kmeans, sparse_kmeans, rdmcm.
    #[arg(long, value_delimiter = ',', default_value = "kmeans,sparse_kmeans,rdmcm")]
    methods: Vec<Method>,
    /// Fixed number of clusters.
    #[arg(long, conflicts_with = "k_set")]
    k: Option<usize>,
    /// Candidate numbers of clusters for rdmcm (selection mode).
    #[arg(long, value_delimiter = ',')]
    k_set: Option<Vec<usize>>,
    /// Base seed; replicate r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mixture families for rdmcm, e.g. EII,VVV.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<CovarianceFamily>>,
    #[arg(long, default_value_t = 25)]
    n_perm: usize,
    #[arg(long, default_value_t = 10)]
    t_grid_size: usize,
    /// Restarts of the plain K-means baseline.
    #[arg(long, default_value_t = 1)]
    kmeans_restarts: usize,
    /// Moves fitted exactly per rdmcm step after screening.
    #[arg(long, default_value_t = 5, conflicts_with = "no_screen")]
    screen: usize,
    /// Evaluate every rdmcm move exactly.
    #[arg(long)]
    no_screen: bool,
}

impl RunArgs {
    fn apply(self, config: &mut RunConfig) {
        config.methods = self.methods;
        config.k = self.k;
        config.k_set = self.k_set;
        config.base_seed = self.seed;
        config.families = self.families;
        config.n_perm = self.n_perm;
        config.t_grid_size = self.t_grid_size;
        config.kmeans_restarts = self.kmeans_restarts;
        config.screen = (!self.no_screen).then_some(self.screen);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, run, replicates, desk, out } => {
            let mut config = RunConfig::new(DataSource::Scenario {
                experiment: scenario.experiment,
                scenario: scenario.scenario,
                n: scenario.n,
            });
            run.apply(&mut config);
            if let Some(r) = replicates {
                config.replicates = r;
            } else if desk {
                config.replicates = DESK_REPLICATES;
            }
            config.output = Some(out.clone());
            let report = run_benchmark(&config)?;
            write_report(&out, &config, &report)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{:<10} {:<14} {:<11} {:>10} {:>10}", "scenario", "method", "metric", "mean", "sd")?;
            for s in &report.summary {
                writeln!(stdout, "{:<10} {:<14} {:<11} {:>10.2} {:>10.2}", s.scenario, s.method, s.metric, s.mean, s.sd)?;
            }
            let failed = report.rows.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                writeln!(stdout, "{failed} run(s) failed; see results.csv")?;
            }
            writeln!(stdout, "wrote {}", out.display())?;
            Ok(())
        }
        Command::Fit { csv, run } => {
            let mut config = RunConfig::new(DataSource::Csv(csv));
            run.apply(&mut config);
            config.replicates = 1;
            config.validate()?;
            let rep = load_replicate(&config.source, config.base_seed)?;
            let names: Vec<String> = (0..rep.data.p()).map(|j| rep.data.col_name(j)).collect();
            let join = |set: &std::collections::BTreeSet<usize>| {
                set.iter().map(|&j| names[j].as_str()).collect::<Vec<_>>().join(",")
            };
            let mut stdout = std::io::stdout().lock();
            let mut methods = config.methods.clone();
            methods.sort();
            methods.dedup();
            for method in methods {
                writeln!(stdout, "[{method}]")?;
                match run_method(method, &rep.data, &config, config.base_seed) {
                    Ok(out) => {
                        writeln!(stdout, "selected: {}", join(&out.selected))?;
                        if let Some(roles) = &out.roles {
                            writeln!(stdout, "redundant: {}", join(&roles.u))?;
                            writeln!(stdout, "predictors: {}", join(&roles.r))?;
                            writeln!(stdout, "independent: {}", join(&roles.w))?;
                        }
                        if let Some(w) = &out.weights {
                            let text: Vec<String> = names.iter().zip(w).map(|(n, w)| format!("{n}={w:.4}")).collect();
                            writeln!(stdout, "weights: {}", text.join(","))?;
                        }
                        let labels: Vec<String> = out.labels.iter().map(|l| (l + 1).to_string()).collect();
                        writeln!(stdout, "labels: {}", labels.join(","))?;
                    }
                    Err(e) => writeln!(stdout, "failed: {e}")?,
                }
            }
            Ok(())
        }
        Command::Tune { csv, scenario, k, n_perm, t_grid_size, seed } => {
            let source = match (csv, scenario.experiment) {
                (Some(path), _) => DataSource::Csv(path),
                (None, Some(experiment)) => {
                    DataSource::Scenario { experiment, scenario: scenario.scenario, n: scenario.n }
                }
                (None, None) => return Err(BenchError::Config("give --csv or --experiment".into())),
            };
            let k = k
                .or(source.default_k())
                .ok_or_else(|| BenchError::Config("--k is required for CSV input".into()))?;
            let rep = load_replicate(&source, seed)?;
            let sk = SparseKMeansConfig { seed: Method::SparseKmeans.seed(seed), ..SparseKMeansConfig::default() };
            let gap = tune_t(&rep.data, k, &log_grid(rep.data.p(), t_grid_size), n_perm, &sk)
                .map_err(|e| BenchError::Config(e.to_string()))?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "t,gap,se,log_objective")?;
            for i in 0..gap.t_grid.len() {
                writeln!(stdout, "{},{},{},{}", gap.t_grid[i], gap.gap[i], gap.se[i], gap.log_objective[i])?;
            }
            writeln!(stdout, "# chosen t = {}", gap.chosen_t)?;
            Ok(())
        }
        Command::Generate { scenario, seed, out } => {
            let source = DataSource::Scenario { experiment: scenario.experiment, scenario: scenario.scenario, n: scenario.n };
            let spec = source.spec(seed).expect("scenario source")?;
            let ds = spec.generate().map_err(|e| BenchError::Config(e.to_string()))?;
            let file = std::fs::File::create(&out)?;
            write_csv(std::io::BufWriter::new(file), &ds.data, Some(&ds.true_labels))?;
            Ok(())
        }
    }
}
