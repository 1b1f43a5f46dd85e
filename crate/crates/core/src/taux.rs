//! Emond–Mason τx rank correlation between weak orderings.
//!
//! For two lists rating items `U` (the union of what either rates), each list
//! scores every ordered pair `(i, j)` with `+1` when it rates `i` above or
//! tied with `j`, `-1` when below, and `0` when `i == j` or it leaves either
//! item unrated. Then
//!
//! ```text
//! τx = 1 - Σ_{i,j ∈ U} |a1(i,j) - a2(i,j)| / (|U| (|U| - 1))
//! ```
//!
//! The discordance sum is integral, so the anchors `1`, `0` and `-1` come out
//! exact.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::RankingList;
use crate::rng::{derived_rng, Stream};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TauXError {
    #[error("τx needs at least two items rated by either list, found {0}")]
    TooFewItems(usize),
    #[error("replicate count must be at least 1")]
    NoReplicates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauXResult {
    pub tau_x: f64,
    /// Items rated by at least one of the two lists.
    pub n_common: usize,
    pub p_value: Option<f64>,
}

/// Preference levels of two lists over the union of their items.
#[derive(Debug, Clone)]
struct Aligned {
    left: Vec<Option<f64>>,
    right: Vec<Option<f64>>,
}

impl Aligned {
    fn new(r1: &RankingList, r2: &RankingList) -> Self {
        let mut ids: Vec<&str> = r1
            .entries
            .keys()
            .chain(r2.entries.keys())
            .map(String::as_str)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        Self {
            left: ids.iter().map(|id| r1.preference(id)).collect(),
            right: ids.iter().map(|id| r2.preference(id)).collect(),
        }
    }

    fn n(&self) -> usize {
        self.left.len()
    }

    /// `N (N - 1)`, the normalizer of the discordance sum.
    fn scale(&self) -> i64 {
        let n = self.n() as i64;
        n * (n - 1)
    }
}

/// Score of ordered pair `(x, y)`: both rated, `x` at least as good as `y`.
#[inline]
fn score(x: Option<f64>, y: Option<f64>) -> i64 {
    match (x, y) {
        (Some(x), Some(y)) if x >= y => 1,
        (Some(_), Some(_)) => -1,
        _ => 0,
    }
}

fn discordance(left: &[Option<f64>], right: &[Option<f64>]) -> i64 {
    let n = left.len();
    let mut total = 0;
    for i in 0..n {
        for j in i + 1..n {
            total += (score(left[i], left[j]) - score(right[i], right[j])).abs();
            total += (score(left[j], left[i]) - score(right[j], right[i])).abs();
        }
    }
    total
}

fn from_discordance(discordance: i64, scale: i64) -> f64 {
    1.0 - discordance as f64 / scale as f64
}

/// τx between two lists; `p_value` is left empty.
pub fn tau_x(r1: &RankingList, r2: &RankingList) -> Result<TauXResult, TauXError> {
    let aligned = Aligned::new(r1, r2);
    if aligned.n() < 2 {
        return Err(TauXError::TooFewItems(aligned.n()));
    }
    Ok(TauXResult {
        tau_x: from_discordance(discordance(&aligned.left, &aligned.right), aligned.scale()),
        n_common: aligned.n(),
        p_value: None,
    })
}

/// Permutation p-value with add-one correction.
///
/// Under the null, the levels `r2` assigns are exchangeable across the items
/// it rates: each replicate shuffles them, recomputes τx, and counts
/// replicates whose `|τx|` is at least the observed one. Replicate `b` draws
/// from its own stream keyed by `(seed, stream, b)`.
fn permutation_pvalue(aligned: &Aligned, replicates: usize, seed: u64, stream: u64) -> f64 {
    let scale = aligned.scale();
    let observed = (scale - discordance(&aligned.left, &aligned.right)).abs();
    let rated: Vec<usize> = (0..aligned.n()).filter(|&i| aligned.right[i].is_some()).collect();
    let extreme: usize = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived_rng(seed, Stream::TauPermutation, &[stream, b as u64]);
            let mut levels: Vec<Option<f64>> = rated.iter().map(|&i| aligned.right[i]).collect();
            levels.shuffle(&mut rng);
            let mut permuted = aligned.right.clone();
            for (&i, level) in rated.iter().zip(levels) {
                permuted[i] = level;
            }
            let stat = (scale - discordance(&aligned.left, &permuted)).abs();
            usize::from(stat >= observed)
        })
        .sum();
    (1 + extreme) as f64 / (replicates + 1) as f64
}

/// Two-sided p-value for no association between `r1` and `r2`, from
/// `replicates` permutations of `r2`'s levels.
pub fn tau_x_pvalue(
    r1: &RankingList,
    r2: &RankingList,
    replicates: usize,
    seed: u64,
) -> Result<f64, TauXError> {
    if replicates == 0 {
        return Err(TauXError::NoReplicates);
    }
    let aligned = Aligned::new(r1, r2);
    if aligned.n() < 2 {
        return Err(TauXError::TooFewItems(aligned.n()));
    }
    Ok(permutation_pvalue(&aligned, replicates, seed, 0))
}

/// Symmetric matrix of τx over a set of lists. `None` marks pairs whose
/// union has fewer than two items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauXMatrix {
    pub ranking_ids: Vec<String>,
    /// Items rated by each list.
    pub n_rated: Vec<usize>,
    pub entries: Vec<Vec<Option<TauXResult>>>,
}

impl TauXMatrix {
    pub fn len(&self) -> usize {
        self.ranking_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking_ids.is_empty()
    }

    pub fn get(&self, k1: usize, k2: usize) -> Option<&TauXResult> {
        self.entries[k1][k2].as_ref()
    }

    fn write_grid<W, F>(&self, sink: W, cell: F) -> csv::Result<()>
    where
        W: Write,
        F: Fn(usize, usize) -> String,
    {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["ranking_id".to_string()];
        header.extend(self.ranking_ids.iter().cloned());
        writer.write_record(&header)?;
        for (k1, id) in self.ranking_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend((0..self.len()).map(|k2| cell(k1, k2)));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// τx values, six decimals; missing entries are empty cells.
    pub fn write_values_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        self.write_grid(sink, |k1, k2| {
            self.get(k1, k2)
                .map(|r| format!("{:.6}", r.tau_x))
                .unwrap_or_default()
        })
    }

    /// Permutation p-values; the diagonal and missing entries are empty.
    pub fn write_pvalues_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        self.write_grid(sink, |k1, k2| {
            self.get(k1, k2)
                .and_then(|r| r.p_value)
                .map(|p| format!("{p:.6}"))
                .unwrap_or_default()
        })
    }
}

/// τx for every pair of lists. With `replicates = Some(B)` each off-diagonal
/// entry also carries a permutation p-value; pair `(k1, k2)`, `k1 < k2`, uses
/// stream index `k1 * K + k2` under `seed`.
pub fn tau_x_matrix(
    lists: &[RankingList],
    replicates: Option<usize>,
    seed: u64,
) -> Result<TauXMatrix, TauXError> {
    if replicates == Some(0) {
        return Err(TauXError::NoReplicates);
    }
    let k = lists.len();
    let mut entries = vec![vec![None; k]; k];
    for (index, list) in lists.iter().enumerate() {
        entries[index][index] = Some(TauXResult {
            tau_x: 1.0,
            n_common: list.len(),
            p_value: None,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|k1| (k1 + 1..k).map(move |k2| (k1, k2)))
        .collect();
    let results: Vec<Option<TauXResult>> = pairs
        .par_iter()
        .map(|&(k1, k2)| {
            let aligned = Aligned::new(&lists[k1], &lists[k2]);
            if aligned.n() < 2 {
                return None;
            }
            let tau = from_discordance(discordance(&aligned.left, &aligned.right), aligned.scale());
            let p_value = replicates
                .map(|b| permutation_pvalue(&aligned, b, seed, (k1 * k + k2) as u64));
            Some(TauXResult {
                tau_x: tau,
                n_common: aligned.n(),
                p_value,
            })
        })
        .collect();
    for ((k1, k2), result) in pairs.into_iter().zip(results) {
        entries[k1][k2] = result;
        entries[k2][k1] = result;
    }
    Ok(TauXMatrix {
        ranking_ids: lists.iter().map(|l| l.ranking_id.clone()).collect(),
        n_rated: lists.iter().map(RankingList::len).collect(),
        entries,
    })
}
