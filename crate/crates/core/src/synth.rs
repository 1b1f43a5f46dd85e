//! Seeded synthetic ranking data.
//!
//! Lists are drawn from the Plackett–Luce model with worths `exp(μ)`, whose
//! pairwise marginals are exactly Bradley–Terry: sort items by `μ_i + G_i`
//! with i.i.d. standard Gumbel noise `G_i`. Lists can be partial, graded into
//! ordinal classes (which creates ties), and either scale direction.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};
use serde::Serialize;

use crate::ingest::{
    validate_against_registry, Dataset, Direction, IngestError, Item, ItemRegistry, Manifest,
    ManifestRanking, RankingList, RankingMeta,
};
use crate::rng::{derived_rng, Stream};

/// Items in `subset` ordered best first under Plackett–Luce.
pub fn sample_order<R: Rng + ?Sized>(abilities: &[f64], subset: &[usize], rng: &mut R) -> Vec<usize> {
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
    let mut keyed: Vec<(f64, usize)> = subset
        .iter()
        .map(|&i| (abilities[i] + gumbel.sample(rng), i))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSpec {
    pub n_items: usize,
    pub n_rankings: usize,
    /// True abilities; drawn from N(0, 1) (reference item shifted to 0) when absent.
    pub abilities: Option<Vec<f64>>,
    /// Probability that a list rates a given item.
    pub coverage: f64,
    /// Fraction of lists reported on an ordinal grade scale.
    pub graded_fraction: f64,
    pub grades: usize,
    /// Fraction of lists whose scale has lower = better.
    pub lower_is_better_fraction: f64,
    pub first_year: i32,
    pub years: i32,
}

impl SyntheticSpec {
    /// Complete strict rankings only.
    pub fn complete(abilities: Vec<f64>, n_rankings: usize) -> Self {
        Self {
            n_items: abilities.len(),
            n_rankings,
            abilities: Some(abilities),
            coverage: 1.0,
            graded_fraction: 0.0,
            grades: 5,
            lower_is_better_fraction: 0.0,
            first_year: 2013,
            years: 1,
        }
    }

    /// Roughly the shape of a journal meta-ranking: 58 items, 31 partial,
    /// tie-rich lists of mixed scale.
    pub fn journal_scale() -> Self {
        Self {
            n_items: 58,
            n_rankings: 31,
            abilities: None,
            coverage: 0.6,
            graded_fraction: 0.5,
            grades: 5,
            lower_is_better_fraction: 0.3,
            first_year: 2009,
            years: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub registry: ItemRegistry,
    pub metas: Vec<RankingMeta>,
    /// Raw level tokens per list (grade names for graded lists).
    pub tokens: Vec<Vec<(String, String)>>,
    pub abilities: Vec<f64>,
}

fn item_id(index: usize) -> String {
    format!("J{:03}", index + 1)
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> SyntheticData {
    let mut rng = derived_rng(seed, Stream::Synthetic, &[0]);
    let n = spec.n_items;
    let abilities = spec.abilities.clone().unwrap_or_else(|| {
        let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        raw.iter().map(|m| m - raw[0]).collect()
    });
    assert_eq!(abilities.len(), n, "ability vector length");
    let items = (0..n)
        .map(|i| Item {
            item_id: item_id(i),
            label: format!("Synthetic item {}", i + 1),
        })
        .collect();
    let registry = ItemRegistry::new(items, 0).expect("generated ids are unique");

    let mut subsets: Vec<Vec<usize>> = (0..spec.n_rankings)
        .map(|_| {
            let mut subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(spec.coverage)).collect();
            if subset.len() < 2 && n >= 2 {
                subset = index::sample(&mut rng, n, 2).into_vec();
                subset.sort_unstable();
            }
            subset
        })
        .collect();
    // Every item rated at least once.
    for i in 0..n {
        if spec.n_rankings > 0 && !subsets.iter().any(|s| s.contains(&i)) {
            let k = rng.random_range(0..spec.n_rankings);
            subsets[k].push(i);
            subsets[k].sort_unstable();
        }
    }

    let mut metas = Vec::with_capacity(spec.n_rankings);
    let mut tokens = Vec::with_capacity(spec.n_rankings);
    for (k, subset) in subsets.iter().enumerate() {
        let order = sample_order(&abilities, subset, &mut rng);
        let graded = rng.random_bool(spec.graded_fraction) && spec.grades >= 2;
        let direction = if rng.random_bool(spec.lower_is_better_fraction) {
            Direction::LowerIsBetter
        } else {
            Direction::HigherIsBetter
        };
        let m = order.len();
        let grade_names: Vec<String> = (0..spec.grades).map(|g| format!("G{}", g + 1)).collect();
        let mut rows: Vec<(String, String)> = order
            .iter()
            .enumerate()
            .map(|(position, &item)| {
                // position 0 is best.
                let token = if graded {
                    let class = position * spec.grades / m;
                    let grade = spec.grades - 1 - class;
                    let grade = match direction {
                        Direction::HigherIsBetter => grade,
                        Direction::LowerIsBetter => spec.grades - 1 - grade,
                    };
                    grade_names[grade].clone()
                } else {
                    match direction {
                        Direction::HigherIsBetter => (m - position).to_string(),
                        Direction::LowerIsBetter => (position + 1).to_string(),
                    }
                };
                (item_id(item), token)
            })
            .collect();
        rows.sort();
        metas.push(RankingMeta {
            ranking_id: format!("R{:02}", k + 1),
            year: spec.first_year + (k as i32 % spec.years.max(1)),
            direction,
            grade_order: graded.then_some(grade_names),
        });
        tokens.push(rows);
    }
    SyntheticData {
        registry,
        metas,
        tokens,
        abilities,
    }
}

impl SyntheticData {
    pub fn lists(&self) -> Vec<RankingList> {
        self.metas
            .iter()
            .zip(&self.tokens)
            .map(|(meta, rows)| {
                let mut text = String::from("item_id,level\n");
                for (id, token) in rows {
                    text.push_str(&format!("{id},{token}\n"));
                }
                crate::ingest::parse_ranking_csv(text.as_bytes(), meta)
                    .expect("generated lists parse")
            })
            .collect()
    }

    pub fn dataset(&self) -> Result<Dataset, IngestError> {
        validate_against_registry(self.lists(), self.registry.clone())
    }

    /// Writes `registry.csv`, `rankings/*.csv` and `manifest.json` under `dir`;
    /// returns the manifest path.
    pub fn write(&self, dir: &Path, seed: Option<u64>) -> io::Result<PathBuf> {
        fs::create_dir_all(dir.join("rankings"))?;
        let mut registry = csv::Writer::from_path(dir.join("registry.csv"))?;
        registry.write_record(["item_id", "label"])?;
        for item in self.registry.items() {
            registry.write_record([&item.item_id, &item.label])?;
        }
        registry.flush()?;
        let mut rankings = Vec::new();
        for (meta, rows) in self.metas.iter().zip(&self.tokens) {
            let relative = PathBuf::from("rankings").join(format!("{}.csv", meta.ranking_id));
            let mut writer = csv::Writer::from_path(dir.join(&relative))?;
            writer.write_record(["item_id", "level"])?;
            for (id, token) in rows {
                writer.write_record([id, token])?;
            }
            writer.flush()?;
            rankings.push(ManifestRanking {
                path: relative,
                meta: meta.clone(),
            });
        }
        let manifest = Manifest {
            registry: PathBuf::from("registry.csv"),
            reference_item: None,
            seed,
            rankings,
            base_dir: PathBuf::new(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}
