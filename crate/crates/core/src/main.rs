use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use skelreg::builder::{build_skeleton, BuildConfig, Linkage};
use skelreg::datagen::{generate, Dataset, GenSpec};
use skelreg::harness::ExperimentConfig;
use skelreg::io::{read_points_csv, write_positions_csv, write_predictions_csv, write_sim_csv, write_text};
use skelreg::metric::project_all;
use skelreg::model::{fit_model, FitOptions, FittedModel, MethodKind};
use skelreg::penalty::Penalty;
use skelreg::types::Skeleton;
use skelreg::{Execution, Result};

#[derive(Parser)]
#[command(name = "skelreg", version, about = "Skeleton graph regression")]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a skeleton from a point cloud.
    Build {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to round(sqrt(n)).
        #[arg(long)]
        knots: Option<usize>,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        components: usize,
        #[arg(long, default_value = "single")]
        linkage: Linkage,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drop knots whose cell holds fewer points.
        #[arg(long, default_value_t = 0)]
        min_cell: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Project points onto a skeleton.
    Project {
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit a regressor on the skeleton.
    Fit {
        #[arg(long)]
        method: MethodKind,
        #[arg(long)]
        skeleton: PathBuf,
        #[arg(long)]
        train: PathBuf,
        /// Comma-separated key=value pairs, e.g. "bandwidth=4rhns" or "k=10".
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value = "none")]
        penalty: String,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value = "model.json")]
        output: PathBuf,
    },
    /// Predict with a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a synthetic dataset.
    Simulate {
        #[arg(long)]
        dataset: Dataset,
        #[arg(long)]
        ambient_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Total sample size; defaults to the dataset's standard size.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a cross-validation experiment described by a TOML file.
    Cv {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Long-format per-replicate SSE table.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.cmd {
        Cmd::Build { input, knots, restarts, components, linkage, seed, min_cell, output } => {
            let pc = read_points_csv(&input)?;
            let cfg = BuildConfig {
                n_knots: knots,
                restarts,
                n_components: components,
                linkage,
                seed,
                min_cell,
                execution: exec,
                ..Default::default()
            };
            let sk = build_skeleton(&pc, &cfg)?;
            log::info!("{} knots, {} edges", sk.n_knots(), sk.edges().len());
            write_text(&output, &(sk.to_json()? + "\n"))
        }
        Cmd::Project { skeleton, input, output } => {
            let sk = Skeleton::from_json(&std::fs::read_to_string(skeleton)?)?;
            let pc = read_points_csv(&input)?;
            write_positions_csv(&output, &project_all(&pc, &sk, exec)?)
        }
        Cmd::Fit { method, skeleton, train, params, penalty, order, lambda, output } => {
            let sk = Skeleton::from_json(&std::fs::read_to_string(skeleton)?)?;
            let pc = read_points_csv(&train)?;
            let mut opts = FitOptions::default();
            opts.apply_params(&params)?;
            opts.penalty = Penalty::parse(&penalty, order, lambda)?;
            let model = fit_model(&sk, &pc, method, &opts, exec)?;
            write_text(&output, &(model.to_json()? + "\n"))
        }
        Cmd::Predict { model, input, output } => {
            let model = FittedModel::from_json(&std::fs::read_to_string(model)?)?;
            let pc = read_points_csv(&input)?;
            write_predictions_csv(&output, &model.predict(&pc, exec)?)
        }
        Cmd::Simulate { dataset, ambient_dim, seed, n, output } => {
            let mut spec = GenSpec::new(dataset, ambient_dim, seed);
            if let Some(n) = n {
                spec = spec.with_total(n);
            }
            write_sim_csv(&output, &generate(&spec)?)
        }
        Cmd::Cv { config, output, plot } => {
            let mut cfg = ExperimentConfig::from_toml(&std::fs::read_to_string(config)?)?;
            cfg.sequential |= cli.sequential;
            let report = cfg.run()?;
            write_text(&output, &report.to_json()?)?;
            if let Some(p) = plot {
                write_text(&p, &report.plot_csv())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
