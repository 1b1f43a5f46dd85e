mod common;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use consensus_rank::bootstrap::{bc_interval, bootstrap_estimates, BootstrapContext, Target};
use consensus_rank::btmle::{fit_mle, FitOptions};
use consensus_rank::ingest::{Direction, RankingList};
use consensus_rank::ranklasso::{adaptive_weights, fit_lasso, LassoOptions};
use consensus_rank::rng::{derived_rng, Stream};
use consensus_rank::tally::{ComparisonTally, PairCounts};
use consensus_rank::taux::tau_x_pvalue;

fn context<'a>(tally: &'a ComparisonTally, mle: &'a [f64]) -> BootstrapContext<'a> {
    BootstrapContext {
        tally,
        constraint_index: 1,
        mle_mu: mle,
        fit_options: FitOptions::default(),
        alasso: None,
        lasso_options: LassoOptions::default(),
    }
}

#[test]
fn two_item_bootstrap_centers_on_the_estimate() {
    let mut tally = ComparisonTally::new(2);
    tally.set(0, 1, PairCounts::new(120, 80, 0));
    let mle = fit_mle(&tally, 1, &FitOptions::default()).unwrap();
    let samples = bootstrap_estimates(&context(&tally, &mle.mu), 500, 3, Target::Mle).unwrap();
    let values = samples.item(0);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    assert_eq!(samples.failed, 0);
    assert!((mean - mle.mu[0]).abs() < 0.1, "mean {mean} vs {}", mle.mu[0]);
    assert!(samples.item(1).iter().all(|v| *v == 0.0));
}

#[test]
fn zero_lambda_alasso_replicates_match_mle() {
    let mut rng = derived_rng(21, Stream::MonteCarlo, &[]);
    let tally = common::random_tally(&mut rng, 5);
    let mle = fit_mle(&tally, 1, &FitOptions::default()).unwrap();
    let weights = adaptive_weights(&mle, 1e8);
    let fit = fit_lasso(&tally, 0.0, &weights, 1, &LassoOptions::default()).unwrap();
    let ctx = BootstrapContext {
        alasso: Some((&fit, &weights)),
        ..context(&tally, &mle.mu)
    };
    let plain = bootstrap_estimates(&ctx, 50, 7, Target::Mle).unwrap();
    let penalized = bootstrap_estimates(&ctx, 50, 7, Target::Alasso).unwrap();
    assert_eq!(plain.replicates.len(), penalized.replicates.len());
    for (a, b) in plain.replicates.iter().zip(&penalized.replicates) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
    }
}

#[test]
fn serial_and_parallel_bootstraps_agree() {
    let mut rng = derived_rng(22, Stream::MonteCarlo, &[]);
    let tally = common::random_tally(&mut rng, 6);
    let mle = fit_mle(&tally, 1, &FitOptions::default()).unwrap();
    let ctx = context(&tally, &mle.mu);
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| bootstrap_estimates(&ctx, 200, 5, Target::Mle).unwrap());
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| bootstrap_estimates(&ctx, 200, 5, Target::Mle).unwrap());
    assert_eq!(serial, parallel);
}

#[test]
fn taux_pvalues_are_roughly_uniform_under_the_null() {
    let ids: Vec<String> = (0..12).map(|i| format!("I{i}")).collect();
    let base: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let reference = common::scores_list("r", &ids, &base);
    let mut pvalues = Vec::new();
    for seed in 0..200 {
        let mut rng = derived_rng(seed, Stream::MonteCarlo, &[23]);
        let mut shuffled = base.clone();
        shuffled.shuffle(&mut rng);
        let other = common::scores_list("s", &ids, &shuffled);
        pvalues.push(tau_x_pvalue(&reference, &other, 199, seed).unwrap());
    }
    let mean = pvalues.iter().sum::<f64>() / pvalues.len() as f64;
    let small = pvalues.iter().filter(|p| **p <= 0.1).count() as f64 / pvalues.len() as f64;
    assert!((0.42..=0.58).contains(&mean), "mean p {mean}");
    assert!((0.04..=0.17).contains(&small), "P(p <= 0.1) = {small}");
}

#[test]
fn identical_lists_are_significant() {
    let levels: Vec<(&str, f64)> = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]
        .iter()
        .zip(1..)
        .map(|(id, l)| (*id, l as f64))
        .collect();
    let list = RankingList::from_levels("x", Direction::HigherIsBetter, &levels).unwrap();
    assert!(tau_x_pvalue(&list, &list.clone(), 1000, 4).unwrap() <= 0.01);
    let p = tau_x_pvalue(&list, &list.clone(), 1, 4).unwrap();
    assert!(p == 0.5 || p == 1.0);
}

#[test]
fn bc_interval_on_normal_samples() {
    let mut rng = derived_rng(24, Stream::MonteCarlo, &[]);
    let samples: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    let (lower, upper) = bc_interval(&samples, 0.0, 0.025).unwrap();
    assert!((lower + 1.96).abs() < 0.05, "lower {lower}");
    assert!((upper - 1.96).abs() < 0.05, "upper {upper}");
}
