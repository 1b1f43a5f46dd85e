use serde::Serialize;

/// Partition of items into clusters. Cluster `0` holds the highest abilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_blocks: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering blocks in order
    /// of first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|label| {
                let next = map.len();
                *map.entry(*label).or_insert(next)
            })
            .collect();
        Self {
            labels,
            n_blocks: map.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, item: usize) -> usize {
        self.labels[item]
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn n_items(&self) -> usize {
        self.labels.len()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.n_blocks];
        for (item, &label) in self.labels.iter().enumerate() {
            blocks[label].push(item);
        }
        blocks
    }
}

/// Single-linkage clusters at threshold `fusion_tol`: items whose abilities
/// are chained by gaps `≤ fusion_tol` share a cluster. Clusters are numbered
/// from the highest ability down.
pub fn extract_clusters(mu: &[f64], fusion_tol: f64) -> Partition {
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));
    let mut labels = vec![0; mu.len()];
    let mut block = 0;
    for window in 0..order.len() {
        if window > 0 && mu[order[window - 1]] - mu[order[window]] > fusion_tol {
            block += 1;
        }
        labels[order[window]] = block;
    }
    Partition {
        labels,
        n_blocks: if mu.is_empty() { 0 } else { block + 1 },
    }
}

/// Replaces each ability by its cluster mean; the cluster holding
/// `constraint_index` is set to exactly 0.
pub fn fuse_abilities(mu: &[f64], partition: &Partition, constraint_index: usize) -> Vec<f64> {
    let mut sums = vec![0.0; partition.n_blocks()];
    let mut counts = vec![0usize; partition.n_blocks()];
    for (item, &value) in mu.iter().enumerate() {
        sums[partition.label(item)] += value;
        counts[partition.label(item)] += 1;
    }
    let pinned = partition.label(constraint_index);
    (0..mu.len())
        .map(|item| {
            let label = partition.label(item);
            if label == pinned {
                0.0
            } else {
                sums[label] / counts[label] as f64
            }
        })
        .collect()
}
