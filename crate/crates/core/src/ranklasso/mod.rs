//! Adaptive ranking lasso.
//!
//! Penalizes every pairwise ability difference,
//!
//! ```text
//! μ̂_λ = argmin  -ℓ(μ) + λ Σ_{i<j} w_ij |μ_i - μ_j|,    w_ij = 1 / |μ̂_i - μ̂_j|  (MLE)
//! ```
//!
//! so that items with similar abilities fuse into clusters. A path of fits
//! over a log-spaced grid below `lambda_max` is scored by AIC with the number
//! of clusters as degrees of freedom.

mod admm;
mod clusters;
mod maxflow;

use serde::Serialize;
use thiserror::Error;

use crate::btmle::{
    check_connected, fit_mle, loglik, loglik_gradient, AbilityEstimate, FitError, FitOptions,
};
use crate::tally::ComparisonTally;

pub use admm::{SolverDiagnostics, SolverState};
pub use clusters::{extract_clusters, fuse_abilities, Partition};

use admm::{Problem, Settings};
use maxflow::FlowNetwork;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LassoError {
    #[error("penalty must be a finite non-negative number, got {0}")]
    InvalidLambda(f64),
    #[error("expected {expected} pair weights, got {found}")]
    WeightDimension { expected: usize, found: usize },
    #[error("weights must be positive and finite")]
    InvalidWeights,
    #[error("solver not converged after {cycles} cycles (primal {primal:e}, dual {dual:e})")]
    NotConverged {
        cycles: usize,
        primal: f64,
        dual: f64,
    },
    #[error("path has no successful fit")]
    EmptyPath,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Pair weights stored in row-major upper-triangular order (`(0,1), (0,2), …`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveWeights {
    n_items: usize,
    weights: Vec<f64>,
}

fn pair_slot(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl AdaptiveWeights {
    pub fn from_pairs(n_items: usize, weights: Vec<f64>) -> Result<Self, LassoError> {
        let expected = n_items * n_items.saturating_sub(1) / 2;
        if weights.len() != expected {
            return Err(LassoError::WeightDimension {
                expected,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(LassoError::InvalidWeights);
        }
        Ok(Self { n_items, weights })
    }

    /// Unit weights (the plain, non-adaptive ranking lasso).
    pub fn uniform(n_items: usize) -> Self {
        Self {
            n_items,
            weights: vec![1.0; n_items * n_items.saturating_sub(1) / 2],
        }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert_ne!(i, j);
        self.weights[pair_slot(self.n_items, i, j)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// `w_ij = 1 / |μ̂_i - μ̂_j|`, capped at `w_max` (which also covers equal
/// estimates).
pub fn adaptive_weights(mle: &AbilityEstimate, w_max: f64) -> AdaptiveWeights {
    let mu = &mle.mu;
    let n = mu.len();
    let mut weights = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let gap = (mu[i] - mu[j]).abs();
            weights.push(if gap * w_max <= 1.0 { w_max } else { 1.0 / gap });
        }
    }
    AdaptiveWeights { n_items: n, weights }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LassoOptions {
    /// Primal and dual residual max-norm threshold.
    pub tol: f64,
    pub max_cycles: usize,
    /// Abilities closer than this after convergence are merged.
    pub fusion_tol: f64,
    /// Record the penalized objective after every cycle.
    pub trace_objective: bool,
    pub aic_basis: AicBasis,
}

/// Log-likelihood that enters the AIC of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AicBasis {
    /// The penalized estimate itself.
    #[default]
    Penalized,
    /// Maximum likelihood with abilities tied within each fitted cluster.
    Refit,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_cycles: 5000,
            fusion_tol: 1e-4,
            trace_objective: false,
            aic_basis: AicBasis::Penalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LassoFit {
    pub lambda: f64,
    /// Fused abilities: equal within a cluster, 0 on the reference's cluster.
    pub mu: Vec<f64>,
    pub clusters: Partition,
    pub df: usize,
    /// Log-likelihood entering `aic`, chosen by [`AicBasis`].
    pub loglik: f64,
    /// Log-likelihood at `mu`.
    pub penalized_loglik: f64,
    pub aic: f64,
    /// Penalized objective at `mu`.
    pub objective: f64,
    pub diagnostics: SolverDiagnostics,
    /// Raw solver iterate, usable as a warm start.
    #[serde(skip)]
    pub state: SolverState,
}

fn validate_inputs(
    tally: &ComparisonTally,
    lambda: f64,
    weights: &AdaptiveWeights,
    constraint_index: usize,
) -> Result<(), LassoError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(LassoError::InvalidLambda(lambda));
    }
    if weights.n_items() != tally.n_items() {
        return Err(LassoError::WeightDimension {
            expected: tally.n_items() * tally.n_items().saturating_sub(1) / 2,
            found: weights.as_slice().len(),
        });
    }
    if constraint_index >= tally.n_items() {
        return Err(FitError::InvalidConstraint {
            index: constraint_index,
            n_items: tally.n_items(),
        }
        .into());
    }
    check_connected(tally, constraint_index)?;
    Ok(())
}

/// Minimizes the penalized objective at one `lambda`.
pub fn fit_lasso(
    tally: &ComparisonTally,
    lambda: f64,
    weights: &AdaptiveWeights,
    constraint_index: usize,
    options: &LassoOptions,
) -> Result<LassoFit, LassoError> {
    fit_lasso_warm(tally, lambda, weights, constraint_index, options, None)
}

/// As [`fit_lasso`], starting from a previous solver iterate.
pub fn fit_lasso_warm(
    tally: &ComparisonTally,
    lambda: f64,
    weights: &AdaptiveWeights,
    constraint_index: usize,
    options: &LassoOptions,
    warm: Option<&SolverState>,
) -> Result<LassoFit, LassoError> {
    validate_inputs(tally, lambda, weights, constraint_index)?;
    let problem = Problem {
        tally,
        weights: weights.as_slice(),
        lambda,
        constraint: constraint_index,
    };
    let start = match warm {
        Some(state)
            if state.mu.len() == tally.n_items()
                && state.theta.len() == weights.as_slice().len()
                && state.mu[constraint_index] == 0.0 =>
        {
            state.clone()
        }
        _ => admm::cold_state(&problem),
    };
    let settings = Settings {
        tol: options.tol,
        max_cycles: options.max_cycles,
        trace: options.trace_objective,
    };
    let (state, diagnostics, converged) = admm::solve(&problem, &settings, start);
    if !converged {
        return Err(LassoError::NotConverged {
            cycles: diagnostics.iterations,
            primal: diagnostics.primal_residual,
            dual: diagnostics.dual_residual,
        });
    }
    let clusters = extract_clusters(&state.mu, options.fusion_tol);
    let mu = fuse_abilities(&state.mu, &clusters, constraint_index);
    let penalized_loglik = loglik(&mu, tally)?;
    let ll = match options.aic_basis {
        AicBasis::Penalized => penalized_loglik,
        AicBasis::Refit => partition_loglik(tally, &clusters, constraint_index)?.max(penalized_loglik),
    };
    let df = clusters.n_blocks();
    Ok(LassoFit {
        lambda,
        objective: admm::penalized_objective(&problem, &mu),
        aic: -2.0 * ll + 2.0 * df as f64,
        loglik: ll,
        penalized_loglik,
        df,
        mu,
        clusters,
        diagnostics,
        state,
    })
}

/// Maximum log-likelihood over abilities that are constant on each block of
/// `partition`. Blocks are collapsed into single items; comparisons inside a
/// block contribute the same amount at any tied value.
pub fn partition_loglik(
    tally: &ComparisonTally,
    partition: &Partition,
    constraint_index: usize,
) -> Result<f64, FitError> {
    let k = partition.n_blocks();
    let mut collapsed = ComparisonTally::new(k);
    for (i, j, counts) in tally.pairs() {
        let (a, b) = (partition.label(i), partition.label(j));
        if a != b && !counts.is_empty() {
            collapsed.add(a, b, counts);
        }
    }
    let fixed = partition.label(constraint_index);
    let nu = match fit_mle(&collapsed, fixed, &FitOptions::default()) {
        Ok(fit) => fit.mu,
        // Separated blocks: the supremum is not attained, so approach it
        // through a vanishing ridge.
        Err(FitError::DivergentEstimate { .. }) => {
            let options = FitOptions {
                ridge: 1e-6,
                divergence_bound: f64::INFINITY,
                ..FitOptions::default()
            };
            fit_mle(&collapsed, fixed, &options)?.mu
        }
        Err(error) => return Err(error),
    };
    let mu: Vec<f64> = partition.labels().iter().map(|&a| nu[a]).collect();
    loglik(&mu, tally)
}

/// Exact full-fusion test: the all-equal point `μ = 0` is optimal at `lambda`
/// iff the likelihood gradient there can be routed as a flow through edges of
/// capacity `lambda * w_ij`.
pub fn is_fully_fused(gradient: &[f64], weights: &AdaptiveWeights, lambda: f64) -> bool {
    let n = gradient.len();
    let supply: f64 = gradient.iter().filter(|g| **g > 0.0).sum();
    if supply == 0.0 {
        return true;
    }
    let (source, sink) = (n, n + 1);
    let mut network = FlowNetwork::new(n + 2);
    for (i, &g) in gradient.iter().enumerate() {
        if g > 0.0 {
            network.add_capacity(source, i, g);
        } else if g < 0.0 {
            network.add_capacity(i, sink, -g);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let capacity = lambda * weights.get(i, j);
            network.add_capacity(i, j, capacity);
            network.add_capacity(j, i, capacity);
        }
    }
    let eps = supply * 1e-14;
    network.max_flow(source, sink, eps) >= supply * (1.0 - 1e-12)
}

/// Smallest `lambda` at which every ability fuses, by bisection on
/// [`is_fully_fused`] to relative precision `1e-10`.
pub fn lambda_max(tally: &ComparisonTally, weights: &AdaptiveWeights, constraint_index: usize) -> f64 {
    let n = tally.n_items();
    if n < 2 {
        return 0.0;
    }
    let gradient = loglik_gradient(&vec![0.0; n], tally).expect("dimensions match");
    if gradient.iter().all(|g| *g == 0.0) {
        return 0.0;
    }
    // Singletons give a lower bound; routing everything straight to the
    // reference gives an upper bound.
    let mut lo = (0..n)
        .map(|i| {
            let capacity: f64 = (0..n).filter(|&j| j != i).map(|j| weights.get(i, j)).sum();
            gradient[i].abs() / capacity
        })
        .fold(0.0, f64::max);
    let mut hi = (0..n)
        .filter(|&i| i != constraint_index)
        .map(|i| gradient[i].abs() / weights.get(i, constraint_index))
        .fold(0.0, f64::max)
        .max(lo);
    if is_fully_fused(&gradient, weights, lo) {
        return lo;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if is_fully_fused(&gradient, weights, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// One grid point of a path: the fit or the reason it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub outcome: Result<LassoFit, LassoError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Decreasing in `lambda`.
    pub points: Vec<PathPoint>,
    pub lambda_max: f64,
    pub selected_index: Option<usize>,
}

impl LassoPath {
    pub fn selected(&self) -> Option<&LassoFit> {
        self.selected_index
            .and_then(|index| self.points[index].outcome.as_ref().ok())
    }

    pub fn fits(&self) -> impl Iterator<Item = &LassoFit> {
        self.points.iter().filter_map(|p| p.outcome.as_ref().ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub points: usize,
    /// Smallest grid value as a fraction of the largest.
    pub min_ratio: f64,
    pub lambda_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 100,
            min_ratio: 1e-4,
            lambda_max: None,
        }
    }
}

/// Log-spaced grid from `top` down to `top * min_ratio`.
pub fn lambda_grid(top: f64, points: usize, min_ratio: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![top],
        _ => (0..points)
            .map(|k| top * min_ratio.powf(k as f64 / (points - 1) as f64))
            .collect(),
    }
}

/// Fits the grid from the largest penalty down, warm-starting each point
/// from the previous successful one, and selects the AIC minimizer.
pub fn lasso_path(
    tally: &ComparisonTally,
    weights: &AdaptiveWeights,
    constraint_index: usize,
    grid: &GridSpec,
    options: &LassoOptions,
) -> Result<LassoPath, LassoError> {
    validate_inputs(tally, 0.0, weights, constraint_index)?;
    let top = grid
        .lambda_max
        .unwrap_or_else(|| lambda_max(tally, weights, constraint_index));
    let mut warm: Option<SolverState> = None;
    let mut points = Vec::with_capacity(grid.points);
    for lambda in lambda_grid(top, grid.points, grid.min_ratio) {
        let outcome =
            fit_lasso_warm(tally, lambda, weights, constraint_index, options, warm.as_ref());
        if let Ok(fit) = &outcome {
            warm = Some(fit.state.clone());
        }
        points.push(PathPoint { lambda, outcome });
    }
    let mut path = LassoPath {
        points,
        lambda_max: top,
        selected_index: None,
    };
    path.selected_index = select_aic_index(&path).ok();
    Ok(path)
}

fn select_aic_index(path: &LassoPath) -> Result<usize, LassoError> {
    let mut best: Option<(usize, f64)> = None;
    for (index, point) in path.points.iter().enumerate() {
        if let Ok(fit) = &point.outcome {
            // Strict comparison keeps the earlier (larger) lambda on ties.
            if best.is_none_or(|(_, aic)| fit.aic < aic) {
                best = Some((index, fit.aic));
            }
        }
    }
    best.map(|(index, _)| index).ok_or(LassoError::EmptyPath)
}

/// AIC-minimal fit of a path; ties go to the larger penalty.
pub fn select_aic(path: &LassoPath) -> Result<&LassoFit, LassoError> {
    let index = select_aic_index(path)?;
    Ok(path.points[index].outcome.as_ref().expect("selected point succeeded"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tally::PairCounts;

    fn estimate(mu: Vec<f64>) -> AbilityEstimate {
        AbilityEstimate {
            constraint_index: 0,
            loglik: 0.0,
            converged: true,
            iterations: 0,
            gradient_norm: 0.0,
            mu,
        }
    }

    #[test]
    fn weights_are_reciprocal_gaps() {
        let w = adaptive_weights(&estimate(vec![0.0, 1.0, 0.5, 0.75]), 1e8);
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(0, 2), 2.0);
        assert_eq!(w.get(0, 3), 1.0 / 0.75);
        assert_eq!(w.get(1, 3), 4.0);
        assert_eq!(w.get(3, 1), w.get(1, 3));
    }

    #[test]
    fn zero_gap_hits_the_cap() {
        let w = adaptive_weights(&estimate(vec![0.3, 0.3, 0.3 + 1e-9]), 1e8);
        assert_eq!(w.get(0, 1), 1e8);
        assert_eq!(w.get(0, 2), 1e8);
    }

    #[test]
    fn weight_validation() {
        assert!(AdaptiveWeights::from_pairs(3, vec![1.0; 2]).is_err());
        assert!(AdaptiveWeights::from_pairs(3, vec![1.0, 0.0, 1.0]).is_err());
        assert!(AdaptiveWeights::from_pairs(3, vec![1.0; 3]).is_ok());
    }

    fn path_with(aics: &[(f64, usize)]) -> LassoPath {
        let points = aics
            .iter()
            .enumerate()
            .map(|(k, &(ll, df))| PathPoint {
                lambda: 10.0 - k as f64,
                outcome: Ok(LassoFit {
                    lambda: 10.0 - k as f64,
                    mu: vec![],
                    clusters: Partition::from_labels(&[]),
                    df,
                    loglik: ll,
                    penalized_loglik: ll,
                    aic: -2.0 * ll + 2.0 * df as f64,
                    objective: 0.0,
                    diagnostics: SolverDiagnostics {
                        iterations: 0,
                        primal_residual: 0.0,
                        dual_residual: 0.0,
                        rho: 1.0,
                        objective_trace: None,
                    },
                    state: SolverState {
                        mu: vec![],
                        theta: vec![],
                        dual: vec![],
                        rho: 1.0,
                    },
                }),
            })
            .collect();
        LassoPath {
            points,
            lambda_max: 10.0,
            selected_index: None,
        }
    }

    #[test]
    fn aic_selection_arithmetic() {
        let path = path_with(&[(-10.0, 3), (-11.0, 1)]);
        let fit = select_aic(&path).unwrap();
        assert_eq!(fit.aic, 24.0);
        assert_eq!(fit.df, 1);
    }

    #[test]
    fn aic_ties_prefer_larger_lambda() {
        let path = path_with(&[(-10.0, 2), (-9.0, 1), (-10.0, 2)]);
        assert_eq!(select_aic_index(&path).unwrap(), 1);
        let path = path_with(&[(-10.0, 2), (-10.0, 2)]);
        assert_eq!(select_aic(&path).unwrap().lambda, 10.0);
    }

    #[test]
    fn empty_path_errors() {
        let mut path = path_with(&[]);
        assert_eq!(select_aic(&path).unwrap_err(), LassoError::EmptyPath);
        path.points.push(PathPoint {
            lambda: 1.0,
            outcome: Err(LassoError::InvalidWeights),
        });
        assert_eq!(select_aic(&path).unwrap_err(), LassoError::EmptyPath);
    }

    #[test]
    fn grid_is_log_spaced_and_decreasing() {
        let grid = lambda_grid(2.0, 5, 1e-4);
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0], 2.0);
        assert!((grid[4] - 2e-4).abs() < 1e-15);
        assert!(grid.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(lambda_grid(3.0, 1, 1e-4), vec![3.0]);
    }

    fn small_tally() -> ComparisonTally {
        let mut t = ComparisonTally::new(3);
        t.set(0, 1, PairCounts::new(6, 2, 2));
        t.set(0, 2, PairCounts::new(3, 4, 1));
        t.set(1, 2, PairCounts::new(1, 5, 2));
        t
    }

    #[test]
    fn two_item_lambda_max_is_closed_form() {
        // At μ = 0 the gradient is ±(s - n/2); fusion needs λ w ≥ |s - n/2|.
        let mut t = ComparisonTally::new(2);
        t.set(0, 1, PairCounts::new(7, 2, 1));
        let w = AdaptiveWeights::from_pairs(2, vec![0.5]).unwrap();
        let expected = (7.5 - 5.0) / 0.5;
        assert!((lambda_max(&t, &w, 0) - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn fusion_threshold_brackets_lambda_max() {
        let t = small_tally();
        let mle = fit_mle(&t, 0, &FitOptions::default()).unwrap();
        let w = adaptive_weights(&mle, 1e8);
        let top = lambda_max(&t, &w, 0);
        let gradient = loglik_gradient(&[0.0; 3], &t).unwrap();
        assert!(is_fully_fused(&gradient, &w, top));
        assert!(!is_fully_fused(&gradient, &w, top * (1.0 - 1e-6)));
        let fit = fit_lasso(&t, top, &w, 0, &LassoOptions::default()).unwrap();
        assert_eq!(fit.df, 1);
        assert!(fit.mu.iter().all(|m| *m == 0.0));
        let below = fit_lasso(&t, top * 0.9, &w, 0, &LassoOptions::default()).unwrap();
        assert!(below.df > 1);
    }

    #[test]
    fn partition_loglik_endpoints() {
        let t = small_tally();
        let mle = fit_mle(&t, 0, &FitOptions::default()).unwrap();
        let singletons = Partition::from_labels(&[0, 1, 2]);
        assert!((partition_loglik(&t, &singletons, 0).unwrap() - mle.loglik).abs() < 1e-10);
        let one = Partition::from_labels(&[0, 0, 0]);
        assert_eq!(partition_loglik(&t, &one, 2).unwrap(), loglik(&[0.0; 3], &t).unwrap());
        // Tying items 1 and 2 is a constrained problem between the two.
        let pair = Partition::from_labels(&[0, 1, 1]);
        let tied = partition_loglik(&t, &pair, 0).unwrap();
        assert!(tied < mle.loglik && tied > loglik(&[0.0; 3], &t).unwrap());
    }

    #[test]
    fn refit_basis_keeps_aic_identity() {
        let t = small_tally();
        let mle = fit_mle(&t, 0, &FitOptions::default()).unwrap();
        let w = adaptive_weights(&mle, 1e8);
        let lambda = 0.5 * lambda_max(&t, &w, 0);
        let options = LassoOptions {
            aic_basis: AicBasis::Refit,
            ..LassoOptions::default()
        };
        let refit = fit_lasso(&t, lambda, &w, 0, &options).unwrap();
        let plain = fit_lasso(&t, lambda, &w, 0, &LassoOptions::default()).unwrap();
        assert_eq!(refit.mu, plain.mu);
        assert_eq!(plain.loglik, plain.penalized_loglik);
        assert!(refit.loglik >= refit.penalized_loglik);
        assert_eq!(refit.aic, -2.0 * refit.loglik + 2.0 * refit.df as f64);
    }

    #[test]
    fn zero_lambda_recovers_mle() {
        let t = small_tally();
        let mle = fit_mle(&t, 1, &FitOptions::default()).unwrap();
        let w = adaptive_weights(&mle, 1e8);
        let fit = fit_lasso(&t, 0.0, &w, 1, &LassoOptions::default()).unwrap();
        for (a, b) in fit.mu.iter().zip(&mle.mu) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert_eq!(fit.mu[1], 0.0);
    }

    #[test]
    fn invalid_lambda_and_disconnected() {
        let t = small_tally();
        let w = AdaptiveWeights::uniform(3);
        assert!(matches!(
            fit_lasso(&t, -1.0, &w, 0, &LassoOptions::default()),
            Err(LassoError::InvalidLambda(_))
        ));
        let mut d = ComparisonTally::new(3);
        d.set(0, 1, PairCounts::new(1, 1, 0));
        assert!(matches!(
            fit_lasso(&d, 1.0, &w, 0, &LassoOptions::default()),
            Err(LassoError::Fit(FitError::DisconnectedGraph { item: 2 }))
        ));
    }

    #[test]
    fn cycle_cap_reports_not_converged() {
        let t = small_tally();
        let w = AdaptiveWeights::uniform(3);
        let options = LassoOptions {
            max_cycles: 1,
            ..LassoOptions::default()
        };
        assert!(matches!(
            fit_lasso(&t, 0.5, &w, 0, &options),
            Err(LassoError::NotConverged { cycles: 1, .. })
        ));
    }

    #[test]
    fn single_point_path_selects_it() {
        let t = small_tally();
        let w = AdaptiveWeights::uniform(3);
        let grid = GridSpec {
            points: 1,
            ..GridSpec::default()
        };
        let path = lasso_path(&t, &w, 0, &grid, &LassoOptions::default()).unwrap();
        assert_eq!(path.points.len(), 1);
        assert_eq!(path.selected_index, Some(0));
        assert_eq!(path.selected().unwrap().df, 1);
    }
}
