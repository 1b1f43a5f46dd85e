//! Shared inputs for the solver benchmarks.

use consensus_rank::btmle::{fit_mle, AbilityEstimate, FitOptions};
use consensus_rank::ingest::Dataset;
use consensus_rank::ranklasso::{adaptive_weights, AdaptiveWeights};
use consensus_rank::synth::{generate, SyntheticSpec};
use consensus_rank::tally::{build_tally, ComparisonTally};

pub struct Workload {
    pub dataset: Dataset,
    pub tally: ComparisonTally,
    pub mle: AbilityEstimate,
    pub weights: AdaptiveWeights,
    pub constraint: usize,
}

/// Synthetic data shaped like a journal meta-ranking (58 items, 31 lists).
pub fn journal_scale(seed: u64) -> Workload {
    workload(&SyntheticSpec::journal_scale(), seed)
}

/// Complete strict rankings over `n_items` items with N(0, 1) abilities.
pub fn complete(n_items: usize, n_rankings: usize, seed: u64) -> Workload {
    let spec = SyntheticSpec {
        n_items,
        n_rankings,
        coverage: 1.0,
        graded_fraction: 0.0,
        lower_is_better_fraction: 0.0,
        ..SyntheticSpec::journal_scale()
    };
    workload(&spec, seed)
}

fn workload(spec: &SyntheticSpec, seed: u64) -> Workload {
    let dataset = generate(spec, seed).dataset().expect("synthetic data validates");
    let tally = build_tally(&dataset);
    let constraint = dataset.registry().constraint_index();
    let mle = fit_mle(&tally, constraint, &FitOptions::default()).expect("synthetic data has an MLE");
    let weights = adaptive_weights(&mle, 1e8);
    Workload {
        dataset,
        tally,
        mle,
        weights,
        constraint,
    }
}
