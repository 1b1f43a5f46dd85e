use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use consensus_rank::bootstrap::{
    bootstrap_estimates, interval_table, BootstrapContext, IntervalMethod, Target,
};
use consensus_rank::btmle::{fit_mle, FitError, FitOptions};
use consensus_rank::ingest::{Dataset, Manifest, YearFilter};
use consensus_rank::ranklasso::{
    adaptive_weights, AicBasis, lasso_path, GridSpec, LassoError, LassoOptions,
};
use consensus_rank::report::{
    run_pipeline, write_alasso_csv, write_mle_csv, write_path_csv, PipelineError,
    PipelineOptions, DEFAULT_SEED,
};
use consensus_rank::synth::{generate, SyntheticSpec};
use consensus_rank::tally::build_tally;
use consensus_rank::taux::tau_x_matrix;
use consensus_rank::IngestError;

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 3;
const EXIT_DISCONNECTED: u8 = 4;
const EXIT_DIVERGENT: u8 = 5;
const EXIT_NOT_CONVERGED: u8 = 6;

#[derive(Parser)]
#[command(name = "consensus-rank", version, about = "Consensus scores from partial, tied ranking lists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write every artifact.
    Run {
        #[command(flatten)]
        input: Input,
        /// Bootstrap replicates per estimator.
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Permutations per τx p-value.
        #[arg(long, default_value_t = 1000)]
        taux_replicates: usize,
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
        /// Use accelerated (BCa) instead of plain bias-corrected intervals.
        #[arg(long)]
        bca: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// τx agreement between every pair of lists.
    Taux {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
    },
    /// Maximum likelihood abilities (`mle.csv`).
    Fit {
        #[command(flatten)]
        input: Input,
    },
    /// Penalized path, AIC selection and clusters (`path.csv`, `alasso.csv`).
    Path {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Bootstrap intervals for one estimator (`intervals_<target>.csv`).
    Bootstrap {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = TargetArg::Mle)]
        target: TargetArg,
        #[arg(long)]
        bca: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Write a synthetic dataset with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 58)]
        items: usize,
        #[arg(long, default_value_t = 31)]
        rankings: usize,
        /// Probability that a list rates a given item.
        #[arg(long, default_value_t = 0.6)]
        coverage: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep only lists from this year on.
    #[arg(long)]
    year_min: Option<i32>,
    /// Keep only lists up to this year.
    #[arg(long)]
    year_max: Option<i32>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 100)]
    grid_points: usize,
    #[arg(long, default_value_t = 1e-4)]
    fusion_tol: f64,
    /// Top of the grid; computed from the data when absent.
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Log-likelihood used by AIC: the penalized fit, or a refit tied within clusters.
    #[arg(long, value_enum, default_value_t = AicBasisArg::Penalized)]
    aic_basis: AicBasisArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum AicBasisArg {
    Penalized,
    Refit,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Mle,
    Alasso,
}

impl From<TargetArg> for Target {
    fn from(value: TargetArg) -> Self {
        match value {
            TargetArg::Mle => Target::Mle,
            TargetArg::Alasso => Target::Alasso,
        }
    }
}

impl Input {
    fn years(&self) -> YearFilter {
        YearFilter {
            min: self.year_min,
            max: self.year_max,
        }
    }

    fn load(&self) -> Result<(Dataset, u64)> {
        let manifest = Manifest::load(&self.manifest)?;
        let seed = self.seed.or(manifest.seed).unwrap_or(DEFAULT_SEED);
        let dataset = manifest.load_dataset(self.years())?;
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok((dataset, seed))
    }
}

impl GridArgs {
    fn grid(&self) -> GridSpec {
        GridSpec {
            points: self.grid_points,
            lambda_max: self.lambda_max,
            ..GridSpec::default()
        }
    }

    fn lasso(&self) -> LassoOptions {
        LassoOptions {
            fusion_tol: self.fusion_tol,
            aic_basis: match self.aic_basis {
                AicBasisArg::Penalized => AicBasis::Penalized,
                AicBasisArg::Refit => AicBasis::Refit,
            },
            ..LassoOptions::default()
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn interval_method(bca: bool) -> IntervalMethod {
    if bca {
        IntervalMethod::Bca
    } else {
        IntervalMethod::Bc
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            input,
            replicates,
            taux_replicates,
            alpha,
            bca,
            grid,
        } => {
            let options = PipelineOptions {
                seed: input.seed,
                years: input.years(),
                replicates,
                alpha,
                interval_method: interval_method(bca),
                taux_replicates,
                grid: grid.grid(),
                lasso: grid.lasso(),
                ..PipelineOptions::default()
            };
            let output = run_pipeline(&input.manifest, &input.out, &options)?;
            let meta = &output.report.metadata;
            eprintln!(
                "{} items, {} rankings, {} comparisons; lambda {:.6}, {} clusters",
                meta.n_items,
                meta.n_rankings,
                meta.total_comparisons,
                meta.selected_lambda,
                meta.cluster_count
            );
        }
        Command::Taux { input, replicates } => {
            let (dataset, seed) = input.load()?;
            let matrix = tau_x_matrix(dataset.lists(), Some(replicates), seed)?;
            matrix.write_values_csv(create(&input.out, "taux_matrix.csv")?)?;
            matrix.write_pvalues_csv(create(&input.out, "taux_pvalues.csv")?)?;
        }
        Command::Fit { input } => {
            let (dataset, _) = input.load()?;
            let tally = build_tally(&dataset);
            let constraint = dataset.registry().constraint_index();
            let estimate = fit_mle(&tally, constraint, &FitOptions::default())?;
            write_mle_csv(&estimate, dataset.registry(), create(&input.out, "mle.csv")?)?;
        }
        Command::Path { input, grid } => {
            let (dataset, _) = input.load()?;
            let tally = build_tally(&dataset);
            let constraint = dataset.registry().constraint_index();
            let mle = fit_mle(&tally, constraint, &FitOptions::default())?;
            let weights = adaptive_weights(&mle, 1e8);
            let path = lasso_path(&tally, &weights, constraint, &grid.grid(), &grid.lasso())?;
            write_path_csv(&path, create(&input.out, "path.csv")?)?;
            let selected = path.selected().ok_or(LassoError::EmptyPath)?;
            write_alasso_csv(selected, dataset.registry(), create(&input.out, "alasso.csv")?)?;
            eprintln!(
                "lambda_max {:.6}; selected lambda {:.6} with {} clusters",
                path.lambda_max, selected.lambda, selected.df
            );
        }
        Command::Bootstrap {
            input,
            replicates,
            alpha,
            target,
            bca,
            grid,
        } => {
            let (dataset, seed) = input.load()?;
            let tally = build_tally(&dataset);
            let constraint = dataset.registry().constraint_index();
            let fit_options = FitOptions::default();
            let mle = fit_mle(&tally, constraint, &fit_options)?;
            let target = Target::from(target);
            let weights = adaptive_weights(&mle, 1e8);
            let path = match target {
                Target::Alasso => Some(lasso_path(
                    &tally,
                    &weights,
                    constraint,
                    &grid.grid(),
                    &grid.lasso(),
                )?),
                Target::Mle => None,
            };
            let alasso = match &path {
                Some(path) => Some((path.selected().ok_or(LassoError::EmptyPath)?, &weights)),
                None => None,
            };
            let context = BootstrapContext {
                tally: &tally,
                constraint_index: constraint,
                mle_mu: &mle.mu,
                fit_options,
                alasso,
                lasso_options: grid.lasso(),
            };
            let samples = bootstrap_estimates(&context, replicates, seed, target)?;
            let table = interval_table(&samples, alpha, interval_method(bca))?;
            let name = format!("intervals_{}.csv", target.as_str());
            table.write_csv(dataset.registry(), create(&input.out, &name)?)?;
            if table.failed_replicates > 0 {
                eprintln!("{} of {replicates} replicates failed", table.failed_replicates);
            }
        }
        Command::Synth {
            out,
            items,
            rankings,
            coverage,
            seed,
        } => {
            let spec = SyntheticSpec {
                n_items: items,
                n_rankings: rankings,
                coverage,
                ..SyntheticSpec::journal_scale()
            };
            let manifest = generate(&spec, seed).write(&out, Some(seed))?;
            eprintln!("wrote {}", manifest.display());
        }
    }
    Ok(())
}

fn fit_exit_code(error: &FitError) -> u8 {
    match error {
        FitError::DisconnectedGraph { .. } => EXIT_DISCONNECTED,
        FitError::DivergentEstimate { .. } => EXIT_DIVERGENT,
        FitError::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

fn lasso_exit_code(error: &LassoError) -> u8 {
    match error {
        LassoError::Fit(inner) => fit_exit_code(inner),
        LassoError::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_FAILURE,
    }
}

/// Maps an error to the documented process exit status.
fn exit_code(error: &anyhow::Error) -> u8 {
    if let Some(error) = error.downcast_ref::<FitError>() {
        return fit_exit_code(error);
    }
    if let Some(error) = error.downcast_ref::<LassoError>() {
        return lasso_exit_code(error);
    }
    if error.downcast_ref::<IngestError>().is_some() {
        return EXIT_INPUT;
    }
    match error.downcast_ref::<PipelineError>() {
        Some(PipelineError::Fit(inner)) => fit_exit_code(inner),
        Some(PipelineError::Lasso(inner)) => lasso_exit_code(inner),
        Some(PipelineError::Ingest(_)) => EXIT_INPUT,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            match error.downcast_ref::<PipelineError>() {
                Some(inner) => eprintln!("error [{}]: {error:#}", inner.module()),
                None => eprintln!("error: {error:#}"),
            }
            ExitCode::from(exit_code(&error))
        }
    }
}
