//! Tie-modified Bradley-Terry likelihood and its maximizer.
//!
//! With `s_ij = wins_ij + ties_ij / 2` and `n_ij` comparisons for a pair,
//!
//! ```text
//! ℓ(μ) = Σ_{i<j} s_ij (μ_i - μ_j) - n_ij log(1 + exp(μ_i - μ_j))
//! ```
//!
//! Only differences are identified, so fits pin one reference ability to 0.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::tally::ComparisonTally;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("ability vector has length {found}, tally has {expected} items")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("reference index {index} out of range for {n_items} items")]
    InvalidConstraint { index: usize, n_items: usize },
    #[error("item #{item} shares no comparison path with the reference item")]
    DisconnectedGraph { item: usize },
    #[error("ability of item #{item} diverges ({ability}); the comparison data is separated")]
    DivergentEstimate { item: usize, ability: f64 },
    #[error("not converged after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function; the model's probability that `i` beats `j` is
/// `sigmoid(μ_i - μ_j)`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn win_probability(mu: &[f64], i: usize, j: usize) -> f64 {
    sigmoid(mu[i] - mu[j])
}

fn check_dimension(mu: &[f64], tally: &ComparisonTally) -> Result<(), FitError> {
    if mu.len() != tally.n_items() {
        return Err(FitError::DimensionMismatch {
            expected: tally.n_items(),
            found: mu.len(),
        });
    }
    Ok(())
}

fn loglik_unchecked(mu: &[f64], tally: &ComparisonTally) -> f64 {
    tally
        .compared_pairs()
        .map(|(i, j, c)| {
            let d = mu[i] - mu[j];
            c.score() * d - c.total() as f64 * log1p_exp(d)
        })
        .sum()
}

pub fn loglik(mu: &[f64], tally: &ComparisonTally) -> Result<f64, FitError> {
    check_dimension(mu, tally)?;
    Ok(loglik_unchecked(mu, tally))
}

/// Gradient of ℓ into `grad`, and optionally the Hessian of ℓ into `hess`
/// (both overwritten). Returns ℓ(μ).
pub(crate) fn loglik_derivatives(
    mu: &[f64],
    tally: &ComparisonTally,
    grad: &mut [f64],
    mut hess: Option<&mut DMatrix<f64>>,
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    if let Some(h) = hess.as_deref_mut() {
        h.fill(0.0);
    }
    let mut value = 0.0;
    for (i, j, c) in tally.compared_pairs() {
        let d = mu[i] - mu[j];
        let n = c.total() as f64;
        let s = c.score();
        value += s * d - n * log1p_exp(d);
        let p = sigmoid(d);
        let residual = s - n * p;
        grad[i] += residual;
        grad[j] -= residual;
        if let Some(h) = hess.as_deref_mut() {
            let w = n * p * (1.0 - p);
            h[(i, i)] -= w;
            h[(j, j)] -= w;
            h[(i, j)] += w;
            h[(j, i)] += w;
        }
    }
    value
}

/// `∂ℓ/∂μ_i = Σ_{j≠i} s_ij - n_ij σ(μ_i - μ_j)`.
pub fn loglik_gradient(mu: &[f64], tally: &ComparisonTally) -> Result<Vec<f64>, FitError> {
    check_dimension(mu, tally)?;
    let mut grad = vec![0.0; mu.len()];
    loglik_derivatives(mu, tally, &mut grad, None);
    Ok(grad)
}

/// Hessian of ℓ: a negated weighted graph Laplacian, so every row sums to 0.
pub fn loglik_hessian(mu: &[f64], tally: &ComparisonTally) -> Result<DMatrix<f64>, FitError> {
    check_dimension(mu, tally)?;
    let n = mu.len();
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    loglik_derivatives(mu, tally, &mut grad, Some(&mut hess));
    Ok(hess)
}

/// Errors if some item cannot be reached from `root` through compared pairs.
pub fn check_connected(tally: &ComparisonTally, root: usize) -> Result<(), FitError> {
    let n = tally.n_items();
    let mut adjacency = vec![Vec::new(); n];
    for (i, j, _) in tally.compared_pairs() {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    let reached = reach(&adjacency, root);
    match reached.iter().position(|&r| !r) {
        Some(item) => Err(FitError::DisconnectedGraph { item }),
        None => Ok(()),
    }
}

fn reach(adjacency: &[Vec<usize>], root: usize) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(node) = stack.pop() {
        for &next in &adjacency[node] {
            if !seen[next] {
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    seen
}

/// The unpenalized MLE exists only when the "scored at least half a win
/// against" digraph is strongly connected. Otherwise reports an item whose
/// ability runs off to ±∞ relative to `root`.
pub fn check_separation(tally: &ComparisonTally, root: usize) -> Result<(), FitError> {
    let n = tally.n_items();
    let mut beats = vec![Vec::new(); n];
    let mut beaten_by = vec![Vec::new(); n];
    for (i, j, c) in tally.compared_pairs() {
        if c.wins + c.ties > 0 {
            beats[i].push(j);
            beaten_by[j].push(i);
        }
        if c.losses + c.ties > 0 {
            beats[j].push(i);
            beaten_by[i].push(j);
        }
    }
    if let Some(item) = reach(&beats, root).iter().position(|&r| !r) {
        return Err(FitError::DivergentEstimate {
            item,
            ability: f64::INFINITY,
        });
    }
    if let Some(item) = reach(&beaten_by, root).iter().position(|&r| !r) {
        return Err(FitError::DivergentEstimate {
            item,
            ability: f64::NEG_INFINITY,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the reduced gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Adds `-(ridge / 2) ‖μ‖²` to the objective.
    pub ridge: f64,
    /// `|μ_i|` beyond this is reported as divergence.
    pub divergence_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            ridge: 0.0,
            divergence_bound: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbilityEstimate {
    pub mu: Vec<f64>,
    pub constraint_index: usize,
    /// Unpenalized log-likelihood at `mu`.
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

/// Solves `H d = g` for a symmetric positive definite `H`, adding a growing
/// diagonal shift if the factorization fails.
pub(crate) fn solve_spd(mut h: DMatrix<f64>, g: DVector<f64>) -> DVector<f64> {
    let scale = h.diagonal().amax().max(1e-12);
    let mut shift = 0.0;
    loop {
        if let Some(chol) = h.clone().cholesky() {
            return chol.solve(&g);
        }
        let add = if shift == 0.0 { scale * 1e-12 } else { shift * 9.0 };
        for k in 0..h.nrows() {
            h[(k, k)] += add;
        }
        shift += add;
    }
}

/// Copies everything except row and column `skip`.
pub(crate) fn reduce_matrix(full: &DMatrix<f64>, skip: usize) -> DMatrix<f64> {
    let n = full.nrows();
    DMatrix::from_fn(n - 1, n - 1, |r, c| {
        full[(r + usize::from(r >= skip), c + usize::from(c >= skip))]
    })
}

pub(crate) fn reduce_vector(full: &[f64], skip: usize) -> DVector<f64> {
    DVector::from_iterator(
        full.len() - 1,
        full.iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, &v)| v),
    )
}

/// Maximizes ℓ (minus the optional ridge term) with `μ[constraint] = 0`
/// by Newton's method with backtracking.
pub fn fit_mle(
    tally: &ComparisonTally,
    constraint_index: usize,
    options: &FitOptions,
) -> Result<AbilityEstimate, FitError> {
    let n = tally.n_items();
    if constraint_index >= n {
        return Err(FitError::InvalidConstraint {
            index: constraint_index,
            n_items: n,
        });
    }
    check_connected(tally, constraint_index)?;
    if options.ridge == 0.0 {
        check_separation(tally, constraint_index)?;
    }
    let ridge = options.ridge;
    let objective = |mu: &[f64]| {
        -loglik_unchecked(mu, tally) + 0.5 * ridge * mu.iter().map(|m| m * m).sum::<f64>()
    };

    let mut mu = vec![0.0; n];
    if n == 1 {
        return Ok(AbilityEstimate {
            mu,
            constraint_index,
            loglik: 0.0,
            converged: true,
            iterations: 0,
            gradient_norm: 0.0,
        });
    }
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    let mut iterations = 0;
    let mut settled: Option<AbilityEstimate> = None;
    loop {
        // Derivatives of the minimized objective F = -ℓ + ridge/2 ‖μ‖².
        let ll = loglik_derivatives(&mu, tally, &mut grad, Some(&mut hess));
        for k in 0..n {
            grad[k] = -grad[k] + ridge * mu[k];
        }
        hess.neg_mut();
        for k in 0..n {
            hess[(k, k)] += ridge;
        }
        let g = reduce_vector(&grad, constraint_index);
        let gradient_norm = g.amax();
        let estimate = |mu: &[f64]| AbilityEstimate {
            mu: mu.to_vec(),
            constraint_index,
            loglik: ll,
            converged: true,
            iterations,
            gradient_norm,
        };
        // Once within tolerance, one more Newton step is nearly free and
        // takes the estimate to roundoff; it is kept only if it helped.
        if let Some(previous) = settled {
            return Ok(if gradient_norm <= previous.gradient_norm { estimate(&mu) } else { previous });
        }
        if gradient_norm <= options.tol {
            if gradient_norm == 0.0 {
                return Ok(estimate(&mu));
            }
            settled = Some(estimate(&mu));
        } else if iterations >= options.max_iter {
            return Err(FitError::NotConverged {
                iterations,
                gradient_norm,
            });
        }
        iterations += 1;

        let step = -solve_spd(reduce_matrix(&hess, constraint_index), g.clone());
        let slope = g.dot(&step);
        let current = -ll + 0.5 * ridge * mu.iter().map(|m| m * m).sum::<f64>();
        let mut t = 1.0;
        let mut candidate = mu.clone();
        for _ in 0..60 {
            let mut k = 0;
            for (index, value) in candidate.iter_mut().enumerate() {
                if index != constraint_index {
                    *value = mu[index] + t * step[k];
                    k += 1;
                }
            }
            if objective(&candidate) <= current + 1e-4 * t * slope + 4.0 * f64::EPSILON * current.abs() {
                break;
            }
            t *= 0.5;
        }
        mu = candidate;
        if let Some((item, &ability)) = mu
            .iter()
            .enumerate()
            .find(|(_, m)| m.abs() > options.divergence_bound)
        {
            return Err(FitError::DivergentEstimate { item, ability });
        }
    }
}
