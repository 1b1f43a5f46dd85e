//! Paired-comparison sufficient statistics.
//!
//! Each ranking that rates both items of a pair contributes one comparison:
//! a win for the item it places strictly higher, or a tie. Counts are kept as
//! integers; the half-win coding of ties is applied by the likelihood.

use std::io::{Read, Write};
use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{Dataset, ItemRegistry};

#[derive(Debug, Error)]
pub enum TallyError {
    #[error("tally csv: missing or malformed header, expected `item_i,item_j,wins_ij,wins_ji,ties`")]
    MissingHeader,
    #[error("tally csv row {row}: unknown item `{item_id}`")]
    UnknownItem { row: usize, item_id: String },
    #[error("tally csv row {row}: {message}")]
    InvalidRow { row: usize, message: String },
    #[error("tally csv: pair ({0}, {1}) listed more than once")]
    DuplicatePair(String, String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Outcome counts for an unordered pair `(i, j)` with `i < j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    /// Comparisons placing `i` strictly above `j`.
    pub wins: u32,
    /// Comparisons placing `j` strictly above `i`.
    pub losses: u32,
    pub ties: u32,
}

impl PairCounts {
    pub fn new(wins: u32, losses: u32, ties: u32) -> Self {
        Self { wins, losses, ties }
    }

    pub fn total(&self) -> u32 {
        self.wins + self.losses + self.ties
    }

    /// Success count of `i` with ties coded as half a win.
    pub fn score(&self) -> f64 {
        self.wins as f64 + 0.5 * self.ties as f64
    }

    pub fn swapped(self) -> Self {
        Self {
            wins: self.losses,
            losses: self.wins,
            ties: self.ties,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

impl AddAssign for PairCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.wins += rhs.wins;
        self.losses += rhs.losses;
        self.ties += rhs.ties;
    }
}

/// Upper-triangular table of [`PairCounts`]. Pairs never compared hold zeros
/// and contribute nothing to the likelihood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonTally {
    n_items: usize,
    counts: Vec<PairCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TallySummary {
    pub total_comparisons: u64,
    pub mean_comparisons_per_pair: f64,
}

fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl ComparisonTally {
    pub fn new(n_items: usize) -> Self {
        Self {
            n_items,
            counts: vec![PairCounts::default(); n_items * n_items.saturating_sub(1) / 2],
        }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_pairs(&self) -> usize {
        self.counts.len()
    }

    /// Counts oriented from `i`'s point of view (`i != j`, either order).
    pub fn get(&self, i: usize, j: usize) -> PairCounts {
        assert_ne!(i, j, "no self-comparisons");
        if i < j {
            self.counts[pair_slot(self.n_items, i, j)]
        } else {
            self.counts[pair_slot(self.n_items, j, i)].swapped()
        }
    }

    /// Sets counts oriented from `i`'s point of view.
    pub fn set(&mut self, i: usize, j: usize, counts: PairCounts) {
        assert_ne!(i, j, "no self-comparisons");
        if i < j {
            self.counts[pair_slot(self.n_items, i, j)] = counts;
        } else {
            self.counts[pair_slot(self.n_items, j, i)] = counts.swapped();
        }
    }

    /// Adds counts oriented from `i`'s point of view.
    pub fn add(&mut self, i: usize, j: usize, counts: PairCounts) {
        let mut current = self.get(i, j);
        current += counts;
        self.set(i, j, current);
    }

    /// All pairs `(i, j, counts)` with `i < j`, including empty ones.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, PairCounts)> + '_ {
        let n = self.n_items;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.counts.iter())
            .map(|((i, j), &c)| (i, j, c))
    }

    /// Pairs with at least one comparison.
    pub fn compared_pairs(&self) -> impl Iterator<Item = (usize, usize, PairCounts)> + '_ {
        self.pairs().filter(|(_, _, c)| !c.is_empty())
    }

    pub fn total_comparisons(&self) -> u64 {
        self.counts.iter().map(|c| c.total() as u64).sum()
    }

    pub fn summary(&self) -> TallySummary {
        tally_summary(self)
    }

    /// Adds one preference-oriented weak ordering (`(item index, score)`,
    /// larger score = better).
    pub fn add_ordering(&mut self, ordering: &[(usize, f64)]) {
        for (a, &(i, si)) in ordering.iter().enumerate() {
            for &(j, sj) in &ordering[a + 1..] {
                let outcome = if si > sj {
                    PairCounts::new(1, 0, 0)
                } else if si < sj {
                    PairCounts::new(0, 1, 0)
                } else {
                    PairCounts::new(0, 0, 1)
                };
                self.add(i, j, outcome);
            }
        }
    }
}

impl AddAssign<&ComparisonTally> for ComparisonTally {
    fn add_assign(&mut self, rhs: &ComparisonTally) {
        assert_eq!(self.n_items, rhs.n_items, "tally dimensions differ");
        for (lhs, rhs) in self.counts.iter_mut().zip(&rhs.counts) {
            *lhs += *rhs;
        }
    }
}

/// Folds every ranking of a validated dataset into a tally.
pub fn build_tally(dataset: &Dataset) -> ComparisonTally {
    let mut tally = ComparisonTally::new(dataset.n_items());
    for list_index in 0..dataset.lists().len() {
        tally.add_ordering(&dataset.indexed_list(list_index));
    }
    tally
}

pub fn tally_summary(tally: &ComparisonTally) -> TallySummary {
    let total = tally.total_comparisons();
    let pairs = tally.n_pairs();
    TallySummary {
        total_comparisons: total,
        mean_comparisons_per_pair: if pairs == 0 {
            0.0
        } else {
            total as f64 / pairs as f64
        },
    }
}

/// Writes `item_i,item_j,wins_ij,wins_ji,ties`, one row per nonempty pair.
pub fn write_tally_csv<W: Write>(
    tally: &ComparisonTally,
    registry: &ItemRegistry,
    sink: W,
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["item_i", "item_j", "wins_ij", "wins_ji", "ties"])?;
    for (i, j, c) in tally.compared_pairs() {
        writer.write_record([
            registry.item_id(i),
            registry.item_id(j),
            &c.wins.to_string(),
            &c.losses.to_string(),
            &c.ties.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_tally_csv<R: Read>(
    source: R,
    registry: &ItemRegistry,
) -> Result<ComparisonTally, TallyError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|_| TallyError::MissingHeader)?;
    if headers.iter().collect::<Vec<_>>() != ["item_i", "item_j", "wins_ij", "wins_ji", "ties"] {
        return Err(TallyError::MissingHeader);
    }
    let mut tally = ComparisonTally::new(registry.len());
    let mut seen = std::collections::HashSet::new();
    for (index, record) in reader.records().enumerate() {
        let row = index + 1;
        let record = record?;
        let resolve = |field: usize| {
            let item_id = record.get(field).unwrap_or("");
            registry.index_of(item_id).ok_or_else(|| TallyError::UnknownItem {
                row,
                item_id: item_id.to_string(),
            })
        };
        let (i, j) = (resolve(0)?, resolve(1)?);
        if i == j {
            return Err(TallyError::InvalidRow {
                row,
                message: "self-comparison".into(),
            });
        }
        let count = |field: usize| {
            record
                .get(field)
                .and_then(|v| v.parse::<u32>().ok())
                .ok_or_else(|| TallyError::InvalidRow {
                    row,
                    message: format!("column {} is not a non-negative integer", field + 1),
                })
        };
        let counts = PairCounts::new(count(2)?, count(3)?, count(4)?);
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(TallyError::DuplicatePair(
                registry.item_id(i).to_string(),
                registry.item_id(j).to_string(),
            ));
        }
        tally.set(i, j, counts);
    }
    Ok(tally)
}
