//! Dense max-flow (Dinic) over real capacities.

use std::collections::VecDeque;

pub(crate) struct FlowNetwork {
    n: usize,
    residual: Vec<f64>,
}

impl FlowNetwork {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            residual: vec![0.0; n * n],
        }
    }

    pub(crate) fn add_capacity(&mut self, from: usize, to: usize, capacity: f64) {
        self.residual[from * self.n + to] += capacity;
    }

    /// Net flow from `from` to `to` after [`FlowNetwork::max_flow`], for an
    /// edge added with `capacity` in both directions.
    pub(crate) fn net_flow(&self, from: usize, to: usize, capacity: f64) -> f64 {
        capacity - self.residual[from * self.n + to]
    }

    /// Nodes reachable from `source` through residual capacity above `eps`;
    /// after a max flow this is the source side of a minimum cut.
    pub(crate) fn reachable(&self, source: usize, eps: f64) -> Vec<bool> {
        self.levels(source, eps)
            .into_iter()
            .map(|level| level != usize::MAX)
            .collect()
    }

    fn levels(&self, source: usize, eps: f64) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.n];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                if level[v] == usize::MAX && self.residual[u * self.n + v] > eps {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn push(
        &mut self,
        u: usize,
        sink: usize,
        limit: f64,
        level: &[usize],
        next: &mut [usize],
        eps: f64,
    ) -> f64 {
        if u == sink {
            return limit;
        }
        while next[u] < self.n {
            let v = next[u];
            let cap = self.residual[u * self.n + v];
            if cap > eps && level[v] == level[u] + 1 {
                let pushed = self.push(v, sink, limit.min(cap), level, next, eps);
                if pushed > 0.0 {
                    self.residual[u * self.n + v] -= pushed;
                    self.residual[v * self.n + u] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    /// Maximum flow value; residual capacities below `eps` count as saturated.
    pub(crate) fn max_flow(&mut self, source: usize, sink: usize, eps: f64) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(source, eps);
            if level[sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.n];
            loop {
                let pushed = self.push(source, sink, f64::INFINITY, &level, &mut next, eps);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }
}
