//! Consensus ranking of items rated by many heterogeneous, partially
//! overlapping ranking lists with ties.
//!
//! The pipeline runs `ingest` → `tally` → `btmle` → `ranklasso` →
//! `bootstrap` → `report`, with `taux` providing agreement diagnostics
//! between lists. [`report::run_pipeline`] drives all stages from a JSON
//! manifest.

pub mod bootstrap;
pub mod btmle;
pub mod ingest;
pub mod ranklasso;
pub mod report;
pub mod rng;
pub mod synth;
pub mod tally;
pub mod taux;

pub use bootstrap::{
    bc_interval, bootstrap_estimates, interval_table, simulate_tally, BootstrapContext,
    BootstrapError, IntervalMethod, IntervalTable, Target,
};
pub use btmle::{fit_mle, loglik, AbilityEstimate, FitError, FitOptions};
pub use ingest::{
    Dataset, Direction, IngestError, Item, ItemRegistry, Manifest, RankingList, RankingMeta,
    YearFilter,
};
pub use ranklasso::{
    adaptive_weights, extract_clusters, fit_lasso, lambda_max, lasso_path, select_aic,
    AdaptiveWeights, AicBasis, GridSpec, LassoError, LassoFit, LassoOptions, LassoPath, Partition,
};
pub use report::{
    run_pipeline, ConsensusReport, PipelineError, PipelineOptions, PipelineOutput,
};
pub use tally::{build_tally, tally_summary, ComparisonTally, PairCounts, TallySummary};
pub use taux::{tau_x, tau_x_matrix, tau_x_pvalue, TauXMatrix, TauXResult};
