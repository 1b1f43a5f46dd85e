//! End-to-end pipeline and the consensus report.
//!
//! [`run_pipeline`] loads a manifest, fits both estimators, bootstraps their
//! intervals, computes τx diagnostics and writes every artifact into an
//! output directory. Artifacts are first written as `<name>.partial` and only
//! renamed once the whole run succeeds.

mod plot;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bootstrap::{
    bootstrap_estimates, interval_table, BootstrapContext, BootstrapError, IntervalMethod,
    IntervalTable, Target,
};
use crate::btmle::{fit_mle, AbilityEstimate, FitError, FitOptions};
use crate::ingest::{Dataset, Direction, IngestError, ItemRegistry, Manifest, RankingList, YearFilter};
use crate::ranklasso::{
    adaptive_weights, lasso_path, GridSpec, LassoError, LassoFit, LassoOptions, LassoPath,
};
use crate::tally::{build_tally, tally_summary};
use crate::taux::{tau_x_matrix, TauXError, TauXMatrix};

pub use plot::{emit_cluster_plot, render_svg, write_plot_data};

/// Seed used when neither the caller nor the manifest supplies one.
pub const DEFAULT_SEED: u64 = 0;

/// Ranking id of the consensus list appended to the τx diagnostics.
pub const CONSENSUS_LIST_ID: &str = "consensus_mle";

/// Fatal pipeline error, tagged with the module that raised it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("btmle: {0}")]
    Fit(#[from] FitError),
    #[error("ranklasso: {0}")]
    Lasso(#[from] LassoError),
    #[error("bootstrap: {0}")]
    Bootstrap(#[from] BootstrapError),
    #[error("taux: {0}")]
    TauX(#[from] TauXError),
    #[error("report: cannot write {path}: {error}")]
    Io { path: PathBuf, error: io::Error },
}

impl PipelineError {
    /// Name of the module the error originated in.
    pub fn module(&self) -> &'static str {
        match self {
            PipelineError::Ingest(_) => "ingest",
            PipelineError::Fit(_) => "btmle",
            PipelineError::Lasso(_) => "ranklasso",
            PipelineError::Bootstrap(_) => "bootstrap",
            PipelineError::TauX(_) => "taux",
            PipelineError::Io { .. } => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOptions {
    /// Overrides the manifest seed.
    pub seed: Option<u64>,
    #[serde(skip)]
    pub years: YearFilter,
    pub replicates: usize,
    /// Each interval tail; `0.025` gives 95% intervals.
    pub alpha: f64,
    pub interval_method: IntervalMethod,
    /// Permutations per τx p-value.
    pub taux_replicates: usize,
    pub w_max: f64,
    pub grid: GridSpec,
    pub fit: FitOptions,
    pub lasso: LassoOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: None,
            years: YearFilter::default(),
            replicates: 1000,
            alpha: 0.025,
            interval_method: IntervalMethod::Bc,
            taux_replicates: 1000,
            w_max: 1e8,
            grid: GridSpec::default(),
            fit: FitOptions::default(),
            lasso: LassoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    /// 1-based position by decreasing MLE; ties broken by item id.
    pub position: usize,
    pub item_id: String,
    pub label: String,
    pub percent_rated: f64,
    pub mle: f64,
    pub mle_ci: (f64, f64),
    pub alasso: f64,
    pub alasso_ci: (f64, f64),
    /// 1-based; cluster 1 holds the highest ALASSO abilities.
    pub cluster_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub n_items: usize,
    pub n_rankings: usize,
    pub total_comparisons: u64,
    pub mean_comparisons_per_pair: f64,
    pub selected_lambda: f64,
    pub cluster_count: usize,
    pub seed: u64,
}

/// Rows are in position order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusReport {
    pub rows: Vec<ReportRow>,
    pub metadata: ReportMetadata,
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: ConsensusReport,
    pub dataset: Dataset,
    pub mle: AbilityEstimate,
    pub path: LassoPath,
    pub intervals_mle: IntervalTable,
    pub intervals_alasso: IntervalTable,
    pub taux: TauXMatrix,
    pub timings: Vec<(String, f64)>,
}

impl PipelineOutput {
    pub fn selected(&self) -> &LassoFit {
        self.path.selected().expect("pipeline output has a selected fit")
    }
}

/// Formats with six decimals, printing negative zero as zero.
pub fn decimal(value: f64) -> String {
    let text = format!("{value:.6}");
    if text == "-0.000000" {
        "0.000000".to_string()
    } else {
        text
    }
}

/// Standard competition ranks (`1224`) by decreasing value.
pub fn competition_ranks(values: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|v| 1 + values.iter().filter(|other| *other > v).count())
        .collect()
}

/// Item indices by decreasing value, ties broken by item id.
pub fn position_order(values: &[f64], registry: &ItemRegistry) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| registry.item_id(a).cmp(registry.item_id(b)))
    });
    order
}

/// `item_id,mu,rank`.
pub fn write_mle_csv<W: Write>(
    estimate: &AbilityEstimate,
    registry: &ItemRegistry,
    sink: W,
) -> csv::Result<()> {
    let ranks = competition_ranks(&estimate.mu);
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["item_id", "mu", "rank"])?;
    for (index, mu) in estimate.mu.iter().enumerate() {
        writer.write_record([
            registry.item_id(index),
            &decimal(*mu),
            &ranks[index].to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `item_id,mu,cluster_id,rank`.
pub fn write_alasso_csv<W: Write>(
    fit: &LassoFit,
    registry: &ItemRegistry,
    sink: W,
) -> csv::Result<()> {
    let ranks = competition_ranks(&fit.mu);
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["item_id", "mu", "cluster_id", "rank"])?;
    for (index, mu) in fit.mu.iter().enumerate() {
        writer.write_record([
            registry.item_id(index),
            &decimal(*mu),
            &(fit.clusters.label(index) + 1).to_string(),
            &ranks[index].to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `lambda,df,loglik,aic,selected`; failed grid points leave the fit
/// columns empty.
pub fn write_path_csv<W: Write>(path: &LassoPath, sink: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["lambda", "df", "loglik", "aic", "selected"])?;
    for (index, point) in path.points.iter().enumerate() {
        let lambda = format!("{:.9e}", point.lambda);
        let selected = if path.selected_index == Some(index) { "1" } else { "0" };
        match &point.outcome {
            Ok(fit) => writer.write_record([
                lambda.as_str(),
                &fit.df.to_string(),
                &decimal(fit.loglik),
                &decimal(fit.aic),
                selected,
            ])?,
            Err(_) => writer.write_record([lambda.as_str(), "", "", "", selected])?,
        }
    }
    writer.flush()?;
    Ok(())
}

impl ConsensusReport {
    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record([
            "position",
            "item_id",
            "label",
            "percent_rated",
            "mle",
            "mle_lower",
            "mle_upper",
            "alasso",
            "alasso_lower",
            "alasso_upper",
            "cluster_id",
        ])?;
        for row in &self.rows {
            writer.write_record([
                row.position.to_string(),
                row.item_id.clone(),
                row.label.clone(),
                format!("{:.2}", row.percent_rated),
                decimal(row.mle),
                decimal(row.mle_ci.0),
                decimal(row.mle_ci.1),
                decimal(row.alasso),
                decimal(row.alasso_ci.0),
                decimal(row.alasso_ci.1),
                row.cluster_id.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Assembles the report table from finished stages.
pub fn build_report(
    dataset: &Dataset,
    mle: &AbilityEstimate,
    selected: &LassoFit,
    intervals_mle: &IntervalTable,
    intervals_alasso: &IntervalTable,
    seed: u64,
) -> ConsensusReport {
    let registry = dataset.registry();
    let coverage = dataset.coverage_counts();
    let n_lists = dataset.lists().len();
    let rows = position_order(&mle.mu, registry)
        .into_iter()
        .enumerate()
        .map(|(rank, index)| {
            let item = &registry.items()[index];
            let mle_row = intervals_mle.rows[index];
            let alasso_row = intervals_alasso.rows[index];
            ReportRow {
                position: rank + 1,
                item_id: item.item_id.clone(),
                label: item.label.clone(),
                percent_rated: 100.0 * coverage[index] as f64 / n_lists as f64,
                mle: mle.mu[index],
                mle_ci: (mle_row.lower, mle_row.upper),
                alasso: selected.mu[index],
                alasso_ci: (alasso_row.lower, alasso_row.upper),
                cluster_id: selected.clusters.label(index) + 1,
            }
        })
        .collect();
    let tally_stats = tally_summary(&build_tally(dataset));
    ConsensusReport {
        rows,
        metadata: ReportMetadata {
            n_items: dataset.n_items(),
            n_rankings: n_lists,
            total_comparisons: tally_stats.total_comparisons,
            mean_comparisons_per_pair: tally_stats.mean_comparisons_per_pair,
            selected_lambda: selected.lambda,
            cluster_count: selected.clusters.n_blocks(),
            seed,
        },
    }
}

/// The MLE scores as one more ranking list, for agreement diagnostics.
pub fn consensus_list(estimate: &AbilityEstimate, registry: &ItemRegistry) -> RankingList {
    RankingList::new(
        CONSENSUS_LIST_ID,
        0,
        Direction::HigherIsBetter,
        estimate
            .mu
            .iter()
            .enumerate()
            .map(|(index, mu)| (registry.item_id(index).to_string(), *mu)),
    )
    .expect("finite abilities over a non-empty registry")
}

/// Collects artifacts under `<name>.partial` until [`Artifacts::commit`].
struct Artifacts {
    dir: PathBuf,
    names: Vec<&'static str>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(|error| PipelineError::Io {
            path: dir.to_path_buf(),
            error,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    fn partial_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.partial"))
    }

    fn write<F>(&mut self, name: &'static str, body: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
    {
        let path = self.partial_path(name);
        let result = fs::File::create(&path).and_then(|file| {
            let mut sink = io::BufWriter::new(file);
            body(&mut sink)?;
            sink.flush()
        });
        result.map_err(|error| PipelineError::Io { path, error })?;
        self.names.push(name);
        Ok(())
    }

    fn commit(self) -> Result<(), PipelineError> {
        for name in &self.names {
            let target = self.dir.join(name);
            fs::rename(self.partial_path(name), &target)
                .map_err(|error| PipelineError::Io { path: target, error })?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    seed: u64,
    package: &'static str,
    version: &'static str,
    manifest: String,
    year_min: Option<i32>,
    year_max: Option<i32>,
    options: &'a PipelineOptions,
    lambda_max: f64,
    failed_path_points: usize,
    metadata: &'a ReportMetadata,
    timings_seconds: Vec<(String, f64)>,
}

struct Stopwatch {
    start: Instant,
    laps: Vec<(String, f64)>,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            laps: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps
            .push((stage.to_string(), (now - self.start).as_secs_f64()));
        self.start = now;
    }
}

/// Fits everything for an already loaded dataset without touching disk.
pub fn analyze(
    dataset: Dataset,
    seed: u64,
    options: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    run_stages(dataset, seed, options, None)
}

/// Runs the stages in order. With `artifacts`, each stage's files are
/// written as soon as it finishes, so a failure leaves the earlier ones.
fn run_stages(
    dataset: Dataset,
    seed: u64,
    options: &PipelineOptions,
    mut artifacts: Option<&mut Artifacts>,
) -> Result<PipelineOutput, PipelineError> {
    let mut clock = Stopwatch::new();
    let registry = dataset.registry().clone();
    let constraint = registry.constraint_index();
    let tally = build_tally(&dataset);
    clock.lap("tally");

    let mle = fit_mle(&tally, constraint, &options.fit)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("mle.csv", |sink| Ok(write_mle_csv(&mle, &registry, sink)?))?;
    }
    clock.lap("btmle");

    let weights = adaptive_weights(&mle, options.w_max);
    let path = lasso_path(&tally, &weights, constraint, &options.grid, &options.lasso)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("path.csv", |sink| Ok(write_path_csv(&path, sink)?))?;
    }
    let selected = path.selected().ok_or(LassoError::EmptyPath)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("alasso.csv", |sink| Ok(write_alasso_csv(selected, &registry, sink)?))?;
    }
    clock.lap("ranklasso");

    let context = BootstrapContext {
        tally: &tally,
        constraint_index: constraint,
        mle_mu: &mle.mu,
        fit_options: options.fit,
        alasso: Some((selected, &weights)),
        lasso_options: options.lasso,
    };
    let samples = bootstrap_estimates(&context, options.replicates, seed, Target::Mle)?;
    let intervals_mle = interval_table(&samples, options.alpha, options.interval_method)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("intervals_mle.csv", |sink| Ok(intervals_mle.write_csv(&registry, sink)?))?;
    }
    let samples = bootstrap_estimates(&context, options.replicates, seed, Target::Alasso)?;
    let intervals_alasso = interval_table(&samples, options.alpha, options.interval_method)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("intervals_alasso.csv", |sink| {
            Ok(intervals_alasso.write_csv(&registry, sink)?)
        })?;
    }
    clock.lap("bootstrap");

    let mut lists = dataset.lists().to_vec();
    lists.push(consensus_list(&mle, &registry));
    let taux = tau_x_matrix(&lists, Some(options.taux_replicates), seed)?;
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("taux_matrix.csv", |sink| Ok(taux.write_values_csv(sink)?))?;
        out.write("taux_pvalues.csv", |sink| Ok(taux.write_pvalues_csv(sink)?))?;
    }
    clock.lap("taux");

    let report = build_report(&dataset, &mle, selected, &intervals_mle, &intervals_alasso, seed);
    if let Some(out) = artifacts.as_deref_mut() {
        out.write("report.csv", |sink| Ok(report.write_csv(sink)?))?;
        out.write("plot.svg", |sink| sink.write_all(render_svg(&report).as_bytes()))?;
        out.write("plot_data.csv", |sink| Ok(write_plot_data(&report, sink)?))?;
    }
    clock.lap("report");
    Ok(PipelineOutput {
        report,
        dataset,
        mle,
        path,
        intervals_mle,
        intervals_alasso,
        taux,
        timings: clock.laps,
    })
}

/// Runs the whole pipeline for the manifest at `manifest_path` and writes
/// its artifacts into `out_dir`. On failure the artifacts finished so far
/// stay behind with a `.partial` suffix.
pub fn run_pipeline(
    manifest_path: &Path,
    out_dir: &Path,
    options: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    let start = Instant::now();
    let manifest = Manifest::load(manifest_path)?;
    let seed = options.seed.or(manifest.seed).unwrap_or(DEFAULT_SEED);
    let dataset = manifest.load_dataset(options.years)?;
    let ingest_seconds = start.elapsed().as_secs_f64();

    let mut artifacts = Artifacts::new(out_dir)?;
    let output = run_stages(dataset, seed, options, Some(&mut artifacts))?;

    let mut timings = vec![("ingest".to_string(), ingest_seconds)];
    timings.extend(output.timings.iter().cloned());
    timings.push(("total".to_string(), start.elapsed().as_secs_f64()));
    let meta = RunMeta {
        seed,
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        manifest: manifest_path.display().to_string(),
        year_min: options.years.min,
        year_max: options.years.max,
        options,
        lambda_max: output.path.lambda_max,
        failed_path_points: output.path.points.len() - output.path.fits().count(),
        metadata: &output.report.metadata,
        timings_seconds: timings,
    };
    artifacts.write("run_meta.json", |sink| {
        serde_json::to_writer_pretty(&mut *sink, &meta)?;
        writeln!(sink)
    })?;
    artifacts.commit()?;
    Ok(output)
}
