use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sartre::graph::evaluate;
use sartre::graph::io::{
    dag_to_string, order_to_string, read_dag, read_order, write_dag, write_order,
};
use sartre::ordering::{estimate_order, BandwidthRule, SteinConfig};
use sartre::prune::{fit_sartre, LossScale, SartreConfig};
use sartre::runner::{
    generate_to_dir, ingest_csv, run_lambda_sweep, run_to_dir, write_sweep, ExperimentConfig,
    GraphFamily, OrderingMode, OUTPUT_DIR_ENV,
};
use sartre::{Dataset, Error};

#[derive(Parser)]
#[command(
    name = "sartre",
    version,
    about = "Order-based causal discovery with tree-embedded group lasso pruning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one synthetic dataset with its true DAG and order.
    Gen {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Which trial's data to write.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Estimate a topological order from a CSV dataset.
    Order {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        stein: SteinArgs,
        /// Order file to write; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prune the full DAG of an order against a CSV dataset.
    Prune {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        order: PathBuf,
        #[command(flatten)]
        sartre: SartreArgs,
        /// DAG file to write; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write intervals, coefficients and edges as JSON.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run all trials of an experiment.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Run an experiment at several λ on shared datasets.
    SweepLambda {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.15,0.2,0.25,0.3")]
        lambdas: Vec<f64>,
    },
    /// Compare an estimated DAG to the truth; prints metrics as JSON.
    Eval { truth: PathBuf, estimate: PathBuf },
    /// Read a CSV dataset, optionally bootstrap it, and write it back out.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Er,
    Sf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingArg {
    Score,
    GroundTruth,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Sum,
    Mean,
}

#[derive(Args)]
struct SartreArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    loss_scale: Option<LossArg>,
    #[arg(long)]
    num_trees: Option<usize>,
    #[arg(long)]
    max_leaves: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// Seed for the randomized trees (prune only; runs derive their own).
    #[arg(long)]
    tree_seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SartreArgs {
    fn apply(&self, c: &mut SartreConfig) {
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.loss_scale {
            c.loss_scale = match v {
                LossArg::Sum => LossScale::Sum,
                LossArg::Mean => LossScale::Mean,
            };
        }
        if let Some(v) = self.num_trees {
            c.trees.num_trees = v;
        }
        if let Some(v) = self.max_leaves {
            c.trees.max_leaves = v;
        }
        if let Some(v) = self.min_samples_leaf {
            c.trees.min_samples_leaf = v;
        }
        if let Some(v) = self.tree_seed {
            c.trees.seed = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
    }
}

#[derive(Args)]
struct SteinArgs {
    /// Fixed kernel bandwidth; median heuristic if omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    subsample_seed: Option<u64>,
}

impl SteinArgs {
    fn apply(&self, c: &mut SteinConfig) {
        if let Some(v) = self.bandwidth {
            c.bandwidth = BandwidthRule::Fixed(v);
        }
        if let Some(v) = self.ridge {
            c.ridge = v;
        }
        if let Some(v) = self.max_samples {
            c.max_samples = v;
        }
        if let Some(v) = self.subsample_seed {
            c.subsample_seed = v;
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    graph: Option<GraphArg>,
    #[arg(short = 'd', long = "d")]
    d: Option<usize>,
    #[arg(long)]
    avg_edges: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(short = 'n', long = "n")]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, conflicts_with = "order_file")]
    ordering: Option<OrderingArg>,
    #[arg(long)]
    order_file: Option<PathBuf>,
    #[arg(long)]
    p_linear: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    sartre: SartreArgs,
    #[command(flatten)]
    stein: SteinArgs,
    /// Output directory; falls back to the config, then $SARTRE_OUTPUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = self.d {
            c.d = d;
        }
        let graph = self.graph.or(match (self.avg_edges, self.m) {
            (Some(_), None) => Some(GraphArg::Er),
            (None, Some(_)) => Some(GraphArg::Sf),
            _ => None,
        });
        match graph {
            Some(GraphArg::Er) => {
                let current = match c.graph {
                    GraphFamily::Er { avg_edges } => avg_edges,
                    GraphFamily::Sf { .. } => c.d,
                };
                c.graph = GraphFamily::Er {
                    avg_edges: self.avg_edges.unwrap_or(current),
                };
            }
            Some(GraphArg::Sf) => {
                let current = match c.graph {
                    GraphFamily::Sf { m } => m,
                    GraphFamily::Er { .. } => 1,
                };
                c.graph = GraphFamily::Sf {
                    m: self.m.unwrap_or(current),
                };
            }
            None => {}
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        match (self.ordering, &self.order_file) {
            (Some(OrderingArg::Score), _) => c.ordering = OrderingMode::Score,
            (Some(OrderingArg::GroundTruth), _) => c.ordering = OrderingMode::GroundTruth,
            (None, Some(p)) => c.ordering = OrderingMode::File(p.clone()),
            (None, None) => {}
        }
        if let Some(v) = self.p_linear {
            c.p_linear = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        self.sartre.apply(&mut c.sartre);
        self.stein.apply(&mut c.stein);
        c.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| c.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("sartre-out"));
        Ok((c, out))
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Gen { exp, trial } => {
            let (cfg, dir) = exp.resolve()?;
            let inst = generate_to_dir(&cfg, trial, &dir)?;
            eprintln!(
                "wrote n={} d={} edges={} to {}",
                inst.data.n(),
                inst.data.d(),
                inst.truth.num_edges(),
                dir.display()
            );
        }
        Command::Order { data, stein, out } => {
            let mut cfg = SteinConfig::default();
            stein.apply(&mut cfg);
            cfg.validate()?;
            let order = estimate_order(&Dataset::read_csv(data)?, &cfg)?;
            match out {
                Some(p) => write_order(p, &order)?,
                None => print!("{}", order_to_string(&order)),
            }
        }
        Command::Prune {
            data,
            order,
            sartre,
            out,
            model,
        } => {
            let mut cfg = SartreConfig::default();
            sartre.apply(&mut cfg);
            cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
            let data = Dataset::read_csv(data)?;
            let order = read_order(order)?;
            let fit = fit_sartre(&data, &order, &cfg)?;
            if let Some(p) = model {
                std::fs::write(p, serde_json::to_string_pretty(&fit.dump())? + "\n")?;
            }
            match out {
                Some(p) => write_dag(p, &fit.dag)?,
                None => print!("{}", dag_to_string(&fit.dag)),
            }
        }
        Command::Run { exp } => {
            let (cfg, dir) = exp.resolve()?;
            let agg = run_to_dir(&cfg, &dir)?;
            eprintln!(
                "{} trials ({} failed) written to {}",
                agg.trials,
                agg.failed,
                dir.display()
            );
            println!("{}", serde_json::to_string_pretty(&agg.metrics)?);
        }
        Command::SweepLambda { exp, lambdas } => {
            let (cfg, dir) = exp.resolve()?;
            let out = run_lambda_sweep(&cfg, &lambdas)?;
            write_sweep(&dir, &cfg, &lambdas, &out)?;
            for (t, msg) in &out.failures {
                eprintln!("trial {t} failed: {msg}");
            }
            eprintln!("{} rows written to {}", out.rows.len(), dir.display());
        }
        Command::Eval { truth, estimate } => {
            let m = evaluate(&read_dag(truth)?, &read_dag(estimate)?)?;
            println!("{}", serde_json::to_string_pretty(&m)?);
        }
        Command::Ingest {
            input,
            bootstrap,
            seed,
            out,
        } => {
            let data = ingest_csv(input, bootstrap.map(|n| (n, seed)))?;
            emit(&data.to_csv_string(), out.as_deref())?;
            eprintln!("n={} d={}", data.n(), data.d());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::NumericalFailure(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
