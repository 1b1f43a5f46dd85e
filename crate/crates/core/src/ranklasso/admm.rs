//! Augmented-Lagrangian splitting for the penalized likelihood
//!
//! ```text
//! minimize  -ℓ(μ) + λ Σ_{i<j} w_ij |θ_ij|   subject to  θ_ij = μ_i - μ_j,  μ_c = 0
//! ```
//!
//! Each cycle runs a damped Newton solve for `μ`, a weighted soft-threshold
//! for `θ`, and a scaled dual ascent step. The penalty parameter `ρ` is
//! rebalanced against the residuals early on. Periodically the solver tries
//! to jump straight to the exact fixed point of the clustering it has found
//! so far (see `polish`).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::btmle::{loglik_derivatives, reduce_matrix, reduce_vector, solve_spd};
use crate::tally::ComparisonTally;

use super::maxflow::FlowNetwork;

/// Iterate of the splitting solver; reusable as a warm start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverState {
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    /// Scaled dual variables (multiplier divided by `rho`).
    pub dual: Vec<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
    /// Penalized objective after each cycle, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
}

pub(crate) struct Problem<'a> {
    pub tally: &'a ComparisonTally,
    pub weights: &'a [f64],
    pub lambda: f64,
    pub constraint: usize,
}

pub(crate) struct Settings {
    pub tol: f64,
    pub max_cycles: usize,
    pub trace: bool,
}

/// Over-relaxation factor for the `θ` and dual steps.
const RELAX: f64 = 1.6;

pub(crate) fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

fn initial_rho(tally: &ComparisonTally) -> f64 {
    let pairs = tally.n_pairs().max(1) as f64;
    (tally.total_comparisons() as f64 / (4.0 * pairs)).max(1e-3)
}

pub(crate) fn penalized_objective(problem: &Problem, mu: &[f64]) -> f64 {
    let n = mu.len();
    let mut grad = vec![0.0; n];
    let ll = loglik_derivatives(mu, problem.tally, &mut grad, None);
    let mut penalty = 0.0;
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            penalty += problem.weights[p] * (mu[i] - mu[j]).abs();
            p += 1;
        }
    }
    -ll + problem.lambda * penalty
}

pub(crate) fn cold_state(problem: &Problem) -> SolverState {
    let n = problem.tally.n_items();
    let pairs = n * n.saturating_sub(1) / 2;
    SolverState {
        mu: vec![0.0; n],
        theta: vec![0.0; pairs],
        dual: vec![0.0; pairs],
        rho: initial_rho(problem.tally),
    }
}

/// Minimizes `-ℓ(μ) + ρ/2 Σ_p (μ_i - μ_j - target_p)²` over free coordinates
/// in place, stopping once the reduced gradient max-norm is at most `tol`.
fn mu_update(problem: &Problem, rho: f64, target: &[f64], mu: &mut [f64], tol: f64) {
    let n = mu.len();
    let c = problem.constraint;
    let nf = n as f64;
    let mut b = vec![0.0; n];
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            b[i] += target[p];
            b[j] -= target[p];
            p += 1;
        }
    }
    let quad = |mu: &[f64]| {
        let mut total = 0.0;
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                let r = mu[i] - mu[j] - target[p];
                total += r * r;
                p += 1;
            }
        }
        0.5 * rho * total
    };
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    let mut candidate = mu.to_vec();
    // Objective, gradient and Hessian at `mu`, refreshed from the accepted
    // line-search point.
    let mut current = -loglik_derivatives(mu, problem.tally, &mut grad, Some(&mut hess)) + quad(mu);
    for _ in 0..50 {
        let sum: f64 = mu.iter().sum();
        for k in 0..n {
            grad[k] = -grad[k] + rho * (nf * mu[k] - sum - b[k]);
        }
        let g = reduce_vector(&grad, c);
        if g.amax() <= tol {
            return;
        }
        hess.neg_mut();
        hess.add_scalar_mut(-rho);
        for k in 0..n {
            hess[(k, k)] += rho * nf;
        }
        let step = -solve_spd(reduce_matrix(&hess, c), g.clone());
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut k = 0;
            for (index, value) in candidate.iter_mut().enumerate() {
                if index != c {
                    *value = mu[index] + t * step[k];
                    k += 1;
                }
            }
            let value = -loglik_derivatives(&candidate, problem.tally, &mut grad, Some(&mut hess))
                + quad(&candidate);
            if value <= current + 1e-4 * t * slope + 4.0 * f64::EPSILON * current.abs() {
                accepted = Some(value);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(value) if candidate.as_slice() != &*mu => {
                mu.copy_from_slice(&candidate);
                current = value;
            }
            _ => return,
        }
    }
}

struct Workspace {
    target: Vec<f64>,
    theta_old: Vec<f64>,
    dual_acc: Vec<f64>,
}

/// One full update of `μ`, `θ` and the dual. Returns the primal and dual
/// residual max-norms.
fn cycle(problem: &Problem, state: &mut SolverState, work: &mut Workspace, inner_tol: f64) -> (f64, f64) {
    let n = problem.tally.n_items();
    let pairs = state.theta.len();
    for p in 0..pairs {
        work.target[p] = state.theta[p] - state.dual[p];
    }
    mu_update(problem, state.rho, &work.target, &mut state.mu, inner_tol);

    work.theta_old.copy_from_slice(&state.theta);
    let mut primal = 0.0f64;
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = state.mu[i] - state.mu[j];
            let relaxed = RELAX * d + (1.0 - RELAX) * work.theta_old[p];
            let threshold = problem.lambda * problem.weights[p] / state.rho;
            state.theta[p] = soft_threshold(relaxed + state.dual[p], threshold);
            state.dual[p] += relaxed - state.theta[p];
            primal = primal.max((d - state.theta[p]).abs());
            p += 1;
        }
    }
    work.dual_acc.iter_mut().for_each(|v| *v = 0.0);
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            let delta = state.theta[p] - work.theta_old[p];
            work.dual_acc[i] += delta;
            work.dual_acc[j] -= delta;
            p += 1;
        }
    }
    let dual = state.rho
        * work
            .dual_acc
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != problem.constraint)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    (primal, dual)
}

/// Runs cycles from `state` until both residuals fall below `settings.tol`.
///
/// Every [`POLISH_EVERY`] cycles the fusion pattern of `θ` is taken as a
/// guess of the final clusters and [`polish`] tries to jump to the exact
/// fixed point for it. The jump is kept only if the cycle run from it meets
/// the stopping rule; otherwise the solver resumes from where it was.
pub(crate) fn solve(
    problem: &Problem,
    settings: &Settings,
    mut state: SolverState,
) -> (SolverState, SolverDiagnostics, bool) {
    let n = problem.tally.n_items();
    let pairs = state.theta.len();
    let mut work = Workspace {
        target: vec![0.0; pairs],
        theta_old: vec![0.0; pairs],
        dual_acc: vec![0.0; n],
    };
    let mut trace = settings.trace.then(Vec::new);
    let mut primal = f64::INFINITY;
    let mut dual_res = f64::INFINITY;
    let adapt_until = settings.max_cycles / 2;
    let floor_tol = (settings.tol * 1e-2).max(1e-12);

    for cycle_index in 1..=settings.max_cycles {
        // Inexact early solves; the accuracy tightens with the residuals.
        let inner_tol = (1e-2 * primal.min(dual_res)).clamp(floor_tol, 1e-3);
        let backup = if cycle_index % POLISH_EVERY == 0 {
            polish(problem, &state).map(|polished| std::mem::replace(&mut state, polished))
        } else {
            None
        };
        let (p, d) = cycle(problem, &mut state, &mut work, inner_tol);
        let converged = p <= settings.tol && d <= settings.tol;
        if let (false, Some(previous)) = (converged, backup) {
            state = previous;
            continue;
        }
        (primal, dual_res) = (p, d);

        if let Some(trace) = trace.as_mut() {
            trace.push(penalized_objective(problem, &state.mu));
        }
        if converged {
            return (
                state.clone(),
                SolverDiagnostics {
                    iterations: cycle_index,
                    primal_residual: primal,
                    dual_residual: dual_res,
                    rho: state.rho,
                    objective_trace: trace,
                },
                true,
            );
        }
        if cycle_index < adapt_until && cycle_index % 5 == 0 {
            let ratio = primal / dual_res.max(f64::MIN_POSITIVE);
            let factor = if !(0.2..=5.0).contains(&ratio) {
                ratio.sqrt().clamp(0.1, 10.0)
            } else {
                1.0
            };
            if factor != 1.0 {
                state.rho *= factor;
                state.dual.iter_mut().for_each(|u| *u /= factor);
            }
        }
    }
    let diagnostics = SolverDiagnostics {
        iterations: settings.max_cycles,
        primal_residual: primal,
        dual_residual: dual_res,
        rho: state.rho,
        objective_trace: trace,
    };
    (state, diagnostics, false)
}

const POLISH_EVERY: usize = 10;

/// Clusters implied by `θ`: components of the graph joining pairs with
/// `θ_ij = 0`.
fn fusion_components(n: usize, theta: &[f64]) -> Vec<usize> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            if theta[p] == 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
            p += 1;
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let label = match roots.iter().position(|&r| r == root) {
            Some(label) => label,
            None => {
                roots.push(root);
                roots.len() - 1
            }
        };
        labels[i] = label;
    }
    labels
}

/// Cluster values minimizing the objective when items sharing a label are
/// tied together and the order of the starting values `nu` is kept. Returns
/// the values and the sign of every between-cluster pair, or `None` if the
/// optimum would reorder the clusters.
fn solve_clusters(problem: &Problem, labels: &[usize], mut nu: Vec<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = labels.len();
    let k = nu.len();
    let fixed = labels[problem.constraint];
    let pair_signs = |nu: &[f64]| -> Vec<f64> {
        let mut signs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (labels[i], labels[j]);
                signs.push(if a == b { 0.0 } else { (nu[a] - nu[b]).signum() });
            }
        }
        signs
    };
    let signs = pair_signs(&nu);
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] != labels[j] && nu[labels[i]] == nu[labels[j]] {
                return None;
            }
            p += 1;
        }
    }
    debug_assert_eq!(p, signs.len());

    // The penalty is linear in ν while the order holds.
    let mut penalty_grad = vec![0.0; k];
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            let w = problem.lambda * problem.weights[p] * signs[p];
            penalty_grad[labels[i]] += w;
            penalty_grad[labels[j]] -= w;
            p += 1;
        }
    }
    let expand = |nu: &[f64]| -> Vec<f64> { labels.iter().map(|&a| nu[a]).collect() };
    let mut scratch = vec![0.0; n];
    let mut objective = |nu: &[f64]| -> f64 {
        let ll = loglik_derivatives(&expand(nu), problem.tally, &mut scratch, None);
        -ll + penalty_grad.iter().zip(nu).map(|(g, v)| g * v).sum::<f64>()
    };
    let scale = penalty_grad.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    let mut current = objective(&nu);
    for _ in 0..50 {
        loglik_derivatives(&expand(&nu), problem.tally, &mut grad, Some(&mut hess));
        let mut g = penalty_grad.clone();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..n {
            g[labels[i]] -= grad[i];
            for j in 0..n {
                h[(labels[i], labels[j])] -= hess[(i, j)];
            }
        }
        let g = reduce_vector(&g, fixed);
        if g.amax() <= 1e-12 * scale {
            break;
        }
        let step = -solve_spd(reduce_matrix(&h, fixed), g.clone());
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut candidate = nu.clone();
            let mut r = 0;
            for (a, value) in candidate.iter_mut().enumerate() {
                if a != fixed {
                    *value += t * step[r];
                    r += 1;
                }
            }
            let value = objective(&candidate);
            if value <= current + 1e-4 * t * slope + 4.0 * f64::EPSILON * current.abs() {
                moved = candidate != nu;
                nu = candidate;
                current = value;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (pair_signs(&nu) == signs).then_some((nu, signs))
}

/// Exact solution for the cluster structure currently suggested by `θ`, as
/// a solver state at which one more cycle leaves everything unchanged.
///
/// With clusters and their order fixed, the objective is smooth in the
/// cluster values, so Newton's method solves it. The duals on fused pairs
/// must then route the remaining likelihood gradient inside each cluster
/// within capacities `λ w_ij`, which is a max-flow problem. When the routing
/// fails, the minimum cut shows which members should leave their cluster
/// upward; those clusters are split and the solve repeats. Returns `None`
/// if the cluster order would change.
fn polish(problem: &Problem, state: &SolverState) -> Option<SolverState> {
    let n = problem.tally.n_items();
    let c = problem.constraint;
    let mut labels = fusion_components(n, &state.theta);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut nu = vec![0.0; k];
    let mut size = vec![0usize; k];
    for i in 0..n {
        nu[labels[i]] += state.mu[i];
        size[labels[i]] += 1;
    }
    for a in 0..k {
        nu[a] /= size[a] as f64;
    }
    nu[labels[c]] = 0.0;

    for _ in 0..n {
        let (solved, signs) = solve_clusters(problem, &labels, nu)?;
        nu = solved;
        let mu: Vec<f64> = labels.iter().map(|&a| nu[a]).collect();

        // Flow y_ij = ρ u_ij whose divergence is the likelihood gradient.
        let mut grad = vec![0.0; n];
        loglik_derivatives(&mu, problem.tally, &mut grad, None);
        let mut flow = vec![0.0; signs.len()];
        let mut supply = grad.clone();
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                if signs[p] != 0.0 {
                    flow[p] = problem.lambda * problem.weights[p] * signs[p];
                    supply[i] -= flow[p];
                    supply[j] += flow[p];
                }
                p += 1;
            }
        }
        let (source, sink) = (n, n + 1);
        let mut network = FlowNetwork::new(n + 2);
        let mut demand = 0.0;
        for (i, &s) in supply.iter().enumerate() {
            if s > 0.0 {
                network.add_capacity(source, i, s);
                demand += s;
            } else if s < 0.0 {
                network.add_capacity(i, sink, -s);
            }
        }
        let mut p = 0;
        for i in 0..n {
            for j in i + 1..n {
                if signs[p] == 0.0 {
                    let capacity = problem.lambda * problem.weights[p];
                    network.add_capacity(i, j, capacity);
                    network.add_capacity(j, i, capacity);
                }
                p += 1;
            }
        }
        let eps = demand * 1e-15;
        let routed = network.max_flow(source, sink, eps);
        let scale = grad.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if demand - routed <= 1e-9 * scale {
            let mut p = 0;
            let mut theta = vec![0.0; signs.len()];
            for i in 0..n {
                for j in i + 1..n {
                    if signs[p] == 0.0 {
                        flow[p] = network.net_flow(i, j, problem.lambda * problem.weights[p]);
                    }
                    theta[p] = mu[i] - mu[j];
                    p += 1;
                }
            }
            return Some(SolverState {
                dual: flow.iter().map(|y| y / state.rho).collect(),
                mu,
                theta,
                rho: state.rho,
            });
        }

        // Split every cluster the cut crosses; the source side moves up.
        let upper = network.reachable(source, eps);
        let spread = nu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let offset = 1e-7 * spread;
        let mut split_label: Vec<Option<usize>> = vec![None; nu.len()];
        let mut split = false;
        for a in 0..nu.len() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == a).collect();
            let up = members.iter().filter(|&&i| upper[i]).count();
            if up == 0 || up == members.len() {
                continue;
            }
            split = true;
            // The part holding the reference item keeps the old label.
            let moving_up = !upper[c] || labels[c] != a;
            split_label[a] = Some(nu.len());
            nu.push(nu[a] + if moving_up { offset } else { -offset });
            for &i in &members {
                if upper[i] == moving_up {
                    labels[i] = split_label[a].expect("just set");
                }
            }
        }
        if !split {
            return None;
        }
    }
    None
}
