//! Ranking-list ingestion.
//!
//! Turns heterogeneous source files (numeric metrics, ordinal grade scales,
//! either scale direction) into weak orderings over a shared item registry.
//! A [`Dataset`] can only be obtained through [`validate_against_registry`],
//! so downstream stages may assume every referenced item resolves and every
//! registry item is rated by at least one list.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: missing or malformed header, expected `{expected}`")]
    MissingHeader {
        source_name: String,
        expected: &'static str,
    },
    #[error("ranking `{ranking_id}`: item `{item_id}` listed more than once")]
    DuplicateEntry { ranking_id: String, item_id: String },
    #[error("ranking `{ranking_id}`: item `{item_id}` has grade `{grade}` outside the declared grade order")]
    UnknownGrade {
        ranking_id: String,
        item_id: String,
        grade: String,
    },
    #[error("ranking `{ranking_id}`: item `{item_id}` has non-numeric or non-finite level `{level}`")]
    InvalidLevel {
        ranking_id: String,
        item_id: String,
        level: String,
    },
    #[error("ranking `{ranking_id}`: empty item id on data row {row}")]
    EmptyItemId { ranking_id: String, row: usize },
    #[error("ranking `{0}` has no entries")]
    EmptyRanking(String),
    #[error("grade order for ranking `{0}` repeats a grade")]
    DuplicateGrade(String),
    #[error("ranking `{ranking_id}` references item `{item_id}` absent from the registry")]
    UnknownItem { ranking_id: String, item_id: String },
    #[error("registry item `{0}` is not rated by any ranking")]
    UncoveredItem(String),
    #[error("registry lists item `{0}` more than once")]
    DuplicateRegistryItem(String),
    #[error("registry row {0} has an empty item id")]
    EmptyRegistryId(usize),
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("reference item `{0}` is not in the registry")]
    UnknownReferenceItem(String),
    #[error("dataset has no ranking lists")]
    NoRankings,
    #[error("ranking id `{0}` used by more than one list")]
    DuplicateRankingId(String),
    #[error("csv error in {source_name}: {error}")]
    Csv {
        source_name: String,
        #[source]
        error: csv::Error,
    },
    #[error("cannot read {path}: {error}")]
    Io {
        path: PathBuf,
        #[source]
        error: std::io::Error,
    },
    #[error("invalid manifest {path}: {error}")]
    Manifest {
        path: PathBuf,
        #[source]
        error: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub item_id: String,
    pub label: String,
}

/// Canonical item set. The item at `constraint_index` is the reference whose
/// ability is pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemRegistry {
    items: Vec<Item>,
    constraint_index: usize,
    index: HashMap<String, usize>,
}

impl ItemRegistry {
    pub fn new(items: Vec<Item>, constraint_index: usize) -> Result<Self> {
        if items.is_empty() {
            return Err(IngestError::EmptyRegistry);
        }
        let mut index = HashMap::with_capacity(items.len());
        for (row, item) in items.iter().enumerate() {
            if item.item_id.is_empty() {
                return Err(IngestError::EmptyRegistryId(row + 1));
            }
            if index.insert(item.item_id.clone(), row).is_some() {
                return Err(IngestError::DuplicateRegistryItem(item.item_id.clone()));
            }
        }
        if constraint_index >= items.len() {
            return Err(IngestError::UnknownReferenceItem(format!(
                "#{constraint_index}"
            )));
        }
        Ok(Self {
            items,
            constraint_index,
            index,
        })
    }

    /// Registry whose labels equal the ids; the first id is the reference.
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let items = ids
            .iter()
            .map(|id| Item {
                item_id: id.as_ref().to_string(),
                label: id.as_ref().to_string(),
            })
            .collect();
        Self::new(items, 0)
    }

    /// Reads `item_id,label` CSV. The first row is the reference item.
    pub fn from_csv<R: Read>(source: R, source_name: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        check_header(&mut reader, source_name, &["item_id", "label"], "item_id,label")?;
        let mut items = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|error| IngestError::Csv {
                source_name: source_name.to_string(),
                error,
            })?;
            items.push(Item {
                item_id: record.get(0).unwrap_or("").to_string(),
                label: record.get(1).unwrap_or("").to_string(),
            });
        }
        Self::new(items, 0)
    }

    pub fn with_reference(mut self, item_id: &str) -> Result<Self> {
        self.constraint_index = self
            .index_of(item_id)
            .ok_or_else(|| IngestError::UnknownReferenceItem(item_id.to_string()))?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item_id(&self, index: usize) -> &str {
        &self.items[index].item_id
    }

    pub fn constraint_index(&self) -> usize {
        self.constraint_index
    }

    pub fn index_of(&self, item_id: &str) -> Option<usize> {
        self.index.get(item_id).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::HigherIsBetter => Direction::LowerIsBetter,
            Direction::LowerIsBetter => Direction::HigherIsBetter,
        }
    }
}

/// Metadata that accompanies a ranking file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMeta {
    pub ranking_id: String,
    pub year: i32,
    pub direction: Direction,
    /// Grade tokens from worst to best. Grade `k` (0-based) maps to level `k + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade_order: Option<Vec<String>>,
}

/// One source's weak ordering over a subset of the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingList {
    pub ranking_id: String,
    pub year: i32,
    pub direction: Direction,
    pub entries: BTreeMap<String, f64>,
}

impl RankingList {
    pub fn new(
        ranking_id: impl Into<String>,
        year: i32,
        direction: Direction,
        entries: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let ranking_id = ranking_id.into();
        let mut map = BTreeMap::new();
        for (item_id, level) in entries {
            if !level.is_finite() {
                return Err(IngestError::InvalidLevel {
                    ranking_id,
                    item_id,
                    level: level.to_string(),
                });
            }
            if map.insert(item_id.clone(), level).is_some() {
                return Err(IngestError::DuplicateEntry {
                    ranking_id,
                    item_id,
                });
            }
        }
        if map.is_empty() {
            return Err(IngestError::EmptyRanking(ranking_id));
        }
        Ok(Self {
            ranking_id,
            year,
            direction,
            entries: map,
        })
    }

    /// Convenience constructor from `(&str, level)` pairs.
    pub fn from_levels(
        ranking_id: &str,
        direction: Direction,
        levels: &[(&str, f64)],
    ) -> Result<Self> {
        Self::new(
            ranking_id,
            0,
            direction,
            levels.iter().map(|(id, level)| (id.to_string(), *level)),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rates(&self, item_id: &str) -> bool {
        self.entries.contains_key(item_id)
    }

    /// Level oriented so that larger always means better.
    pub fn preference(&self, item_id: &str) -> Option<f64> {
        self.entries.get(item_id).map(|&level| match self.direction {
            Direction::HigherIsBetter => level,
            Direction::LowerIsBetter => -level,
        })
    }

    pub fn reversed(&self) -> Self {
        Self {
            direction: self.direction.reversed(),
            ..self.clone()
        }
    }
}

fn check_header<R: Read>(
    reader: &mut csv::Reader<R>,
    source_name: &str,
    expected: &[&str],
    expected_text: &'static str,
) -> Result<()> {
    let missing = || IngestError::MissingHeader {
        source_name: source_name.to_string(),
        expected: expected_text,
    };
    let headers = reader.headers().map_err(|_| missing())?;
    let matches = headers.len() == expected.len()
        && headers
            .iter()
            .zip(expected)
            .all(|(found, want)| found.trim_start_matches('\u{feff}') == *want);
    if matches {
        Ok(())
    } else {
        Err(missing())
    }
}

/// Parses an `item_id,level` CSV into a [`RankingList`].
///
/// With a grade order, each level token must be one of the grades and is
/// mapped to its 1-based position (worst grade = 1). Without one, levels are
/// parsed as numbers and passed through unchanged.
pub fn parse_ranking_csv<R: Read>(source: R, meta: &RankingMeta) -> Result<RankingList> {
    let ranking_id = meta.ranking_id.as_str();
    let grades: Option<HashMap<&str, f64>> = match &meta.grade_order {
        Some(order) => {
            let mut map = HashMap::with_capacity(order.len());
            for (position, grade) in order.iter().enumerate() {
                if map.insert(grade.as_str(), (position + 1) as f64).is_some() {
                    return Err(IngestError::DuplicateGrade(ranking_id.to_string()));
                }
            }
            Some(map)
        }
        None => None,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    check_header(&mut reader, ranking_id, &["item_id", "level"], "item_id,level")?;

    let mut entries = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|error| IngestError::Csv {
            source_name: ranking_id.to_string(),
            error,
        })?;
        let item_id = record.get(0).unwrap_or("");
        let token = record.get(1).unwrap_or("");
        if item_id.is_empty() {
            return Err(IngestError::EmptyItemId {
                ranking_id: ranking_id.to_string(),
                row: row + 1,
            });
        }
        let level = match &grades {
            Some(grades) => *grades.get(token).ok_or_else(|| IngestError::UnknownGrade {
                ranking_id: ranking_id.to_string(),
                item_id: item_id.to_string(),
                grade: token.to_string(),
            })?,
            None => token
                .parse::<f64>()
                .ok()
                .filter(|level| level.is_finite())
                .ok_or_else(|| IngestError::InvalidLevel {
                    ranking_id: ranking_id.to_string(),
                    item_id: item_id.to_string(),
                    level: token.to_string(),
                })?,
        };
        if entries.insert(item_id.to_string(), level).is_some() {
            return Err(IngestError::DuplicateEntry {
                ranking_id: ranking_id.to_string(),
                item_id: item_id.to_string(),
            });
        }
    }
    if entries.is_empty() {
        return Err(IngestError::EmptyRanking(ranking_id.to_string()));
    }
    Ok(RankingList {
        ranking_id: ranking_id.to_string(),
        year: meta.year,
        direction: meta.direction,
        entries,
    })
}

/// Writes a list back as `item_id,level` CSV with numeric levels.
pub fn write_ranking_csv<W: Write>(list: &RankingList, sink: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["item_id", "level"])?;
    for (item_id, level) in &list.entries {
        writer.write_record([item_id.as_str(), level.to_string().as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// A registry together with ranking lists that have been checked against it.
#[derive(Debug, Clone)]
pub struct Dataset {
    registry: ItemRegistry,
    lists: Vec<RankingList>,
}

impl Dataset {
    pub fn registry(&self) -> &ItemRegistry {
        &self.registry
    }

    pub fn lists(&self) -> &[RankingList] {
        &self.lists
    }

    pub fn n_items(&self) -> usize {
        self.registry.len()
    }

    /// Number of lists rating each registry item, in registry order.
    pub fn coverage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.registry.len()];
        for list in &self.lists {
            for item_id in list.entries.keys() {
                if let Some(index) = self.registry.index_of(item_id) {
                    counts[index] += 1;
                }
            }
        }
        counts
    }

    /// Re-validates the subset of lists accepted by `keep`.
    pub fn filtered<F>(&self, keep: F) -> Result<Dataset>
    where
        F: Fn(&RankingList) -> bool,
    {
        let lists = self.lists.iter().filter(|list| keep(list)).cloned().collect();
        validate_against_registry(lists, self.registry.clone())
    }

    /// Preference-oriented levels of one list, keyed by registry index.
    pub fn indexed_list(&self, list_index: usize) -> Vec<(usize, f64)> {
        let list = &self.lists[list_index];
        list.entries
            .keys()
            .map(|item_id| {
                let index = self
                    .registry
                    .index_of(item_id)
                    .expect("validated dataset resolves every item");
                (index, list.preference(item_id).unwrap_or_default())
            })
            .collect()
    }
}

/// Checks that every referenced item exists and every registry item is rated.
pub fn validate_against_registry(
    lists: Vec<RankingList>,
    registry: ItemRegistry,
) -> Result<Dataset> {
    if lists.is_empty() {
        return Err(IngestError::NoRankings);
    }
    let mut seen_ids = HashSet::new();
    let mut covered = vec![false; registry.len()];
    for list in &lists {
        if !seen_ids.insert(list.ranking_id.as_str()) {
            return Err(IngestError::DuplicateRankingId(list.ranking_id.clone()));
        }
        if list.entries.is_empty() {
            return Err(IngestError::EmptyRanking(list.ranking_id.clone()));
        }
        for item_id in list.entries.keys() {
            match registry.index_of(item_id) {
                Some(index) => covered[index] = true,
                None => {
                    return Err(IngestError::UnknownItem {
                        ranking_id: list.ranking_id.clone(),
                        item_id: item_id.clone(),
                    })
                }
            }
        }
    }
    if let Some(index) = covered.iter().position(|&c| !c) {
        return Err(IngestError::UncoveredItem(registry.item_id(index).to_string()));
    }
    Ok(Dataset { registry, lists })
}

/// One entry of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRanking {
    pub path: PathBuf,
    #[serde(flatten)]
    pub meta: RankingMeta,
}

/// JSON manifest describing a dataset. Relative paths resolve against the
/// manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub registry: PathBuf,
    /// Overrides the reference item (default: first registry row).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_item: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub rankings: Vec<ManifestRanking>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Year window applied to a manifest before validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct YearFilter {
    pub min: Option<i32>,
    pub max: Option<i32>,
}

impl YearFilter {
    pub fn accepts(&self, year: i32) -> bool {
        self.min.is_none_or(|min| year >= min) && self.max.is_none_or(|max| year <= max)
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_none() && self.max.is_none()
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|error| IngestError::Io {
        path: path.to_path_buf(),
        error,
    })
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let file = open(path)?;
        let mut manifest: Manifest =
            serde_json::from_reader(std::io::BufReader::new(file)).map_err(|error| {
                IngestError::Manifest {
                    path: path.to_path_buf(),
                    error,
                }
            })?;
        manifest.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(manifest)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn load_registry(&self) -> Result<ItemRegistry> {
        let path = self.resolve(&self.registry);
        let registry = ItemRegistry::from_csv(open(&path)?, &path.display().to_string())?;
        match &self.reference_item {
            Some(item_id) => registry.with_reference(item_id),
            None => Ok(registry),
        }
    }

    /// Parses every ranking accepted by `filter` and validates the result.
    pub fn load_dataset(&self, filter: YearFilter) -> Result<Dataset> {
        let registry = self.load_registry()?;
        let mut lists = Vec::new();
        for ranking in self.rankings.iter().filter(|r| filter.accepts(r.meta.year)) {
            let path = self.resolve(&ranking.path);
            lists.push(parse_ranking_csv(open(&path)?, &ranking.meta)?);
        }
        validate_against_registry(lists, registry)
    }
}
