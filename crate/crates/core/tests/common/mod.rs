//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use consensus_rank::ingest::{Direction, RankingList};
use consensus_rank::tally::{ComparisonTally, PairCounts};
use rand::Rng;

pub fn fixture_manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small/manifest.json")
}

/// Every pair gets at least one win each way, so the MLE exists.
pub fn random_tally<R: Rng>(rng: &mut R, n: usize) -> ComparisonTally {
    let mut t = ComparisonTally::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let counts = PairCounts::new(rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(0..=4));
            t.set(i, j, counts);
        }
    }
    t
}

/// Arbitrary counts up to 20 per pair, zeros included.
pub fn sparse_tally<R: Rng>(rng: &mut R, n: usize) -> ComparisonTally {
    let mut t = ComparisonTally::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let total = rng.random_range(0..=20u32);
            let wins = rng.random_range(0..=total);
            let ties = rng.random_range(0..=total - wins);
            t.set(i, j, PairCounts::new(wins, total - wins - ties, ties));
        }
    }
    t
}

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / choose2(a.len());
    let max = 0.5 * (rows + cols);
    if max == expected {
        1.0
    } else {
        (index - expected) / (max - expected)
    }
}

pub fn scores_list(id: &str, ids: &[String], scores: &[f64]) -> RankingList {
    RankingList::new(id, 0, Direction::HigherIsBetter, ids.iter().cloned().zip(scores.iter().copied())).unwrap()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

