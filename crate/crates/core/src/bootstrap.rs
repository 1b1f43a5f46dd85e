//! Parametric bootstrap and bias-corrected percentile intervals.
//!
//! Replicates regenerate every pair's comparisons from the fitted model,
//! keeping each pair's comparison count. The fitted likelihood has no tie
//! probability, so simulated outcomes are pure wins and losses.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::btmle::{fit_mle, sigmoid, FitOptions};
use crate::ingest::ItemRegistry;
use crate::ranklasso::{fit_lasso_warm, AdaptiveWeights, LassoFit, LassoOptions};
use crate::rng::{derived_rng, Stream};
use crate::tally::{ComparisonTally, PairCounts};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BootstrapError {
    #[error("no bootstrap samples")]
    EmptySamples,
    #[error("alpha must lie in (0, 0.5), got {0}")]
    InvalidAlpha(f64),
    #[error("replicate count must be at least 1")]
    NoReplicates,
    #[error("all {0} bootstrap replicates failed to refit")]
    AllReplicatesFailed(usize),
    #[error("ALASSO target requested without a penalized fit")]
    MissingLassoFit,
    #[error("ability vector has length {found}, tally has {expected} items")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Draws a tally with the template's per-pair comparison counts, where `i`
/// beats `j` with probability `σ(μ_i - μ_j)`. Simulated ties are always 0.
pub fn simulate_tally_with<R: Rng + ?Sized>(
    mu: &[f64],
    template: &ComparisonTally,
    rng: &mut R,
) -> ComparisonTally {
    let mut out = ComparisonTally::new(template.n_items());
    for (i, j, counts) in template.compared_pairs() {
        let n = counts.total();
        let p = sigmoid(mu[i] - mu[j]);
        let wins = Binomial::new(n as u64, p)
            .expect("probability in [0, 1]")
            .sample(rng) as u32;
        out.set(i, j, PairCounts::new(wins, n - wins, 0));
    }
    out
}

pub fn simulate_tally(
    mu: &[f64],
    template: &ComparisonTally,
    seed: u64,
) -> Result<ComparisonTally, BootstrapError> {
    if mu.len() != template.n_items() {
        return Err(BootstrapError::DimensionMismatch {
            expected: template.n_items(),
            found: mu.len(),
        });
    }
    let mut rng = derived_rng(seed, Stream::Bootstrap, &[u64::MAX]);
    Ok(simulate_tally_with(mu, template, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Mle,
    Alasso,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Mle => "mle",
            Target::Alasso => "alasso",
        }
    }
}

/// Everything needed to refit either estimator on simulated data.
#[derive(Debug, Clone)]
pub struct BootstrapContext<'a> {
    pub tally: &'a ComparisonTally,
    pub constraint_index: usize,
    pub mle_mu: &'a [f64],
    pub fit_options: FitOptions,
    /// Selected penalized fit and its weights; refits reuse its `lambda`.
    pub alasso: Option<(&'a LassoFit, &'a AdaptiveWeights)>,
    pub lasso_options: LassoOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSamples {
    pub target: Target,
    pub point: Vec<f64>,
    /// Successful replicates in replicate order.
    pub replicates: Vec<Vec<f64>>,
    pub requested: usize,
    pub failed: usize,
}

impl BootstrapSamples {
    /// Replicate values of one item.
    pub fn item(&self, index: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r[index]).collect()
    }
}

/// Simulates `replicates` tallies from the target's point estimate and refits
/// the target on each. Replicate `b` draws from stream `(seed, b)`, so results
/// do not depend on thread scheduling. Failed refits are dropped and counted.
pub fn bootstrap_estimates(
    context: &BootstrapContext,
    replicates: usize,
    seed: u64,
    target: Target,
) -> Result<BootstrapSamples, BootstrapError> {
    if replicates == 0 {
        return Err(BootstrapError::NoReplicates);
    }
    let point: Vec<f64> = match target {
        Target::Mle => context.mle_mu.to_vec(),
        Target::Alasso => context
            .alasso
            .ok_or(BootstrapError::MissingLassoFit)?
            .0
            .mu
            .clone(),
    };
    if point.len() != context.tally.n_items() {
        return Err(BootstrapError::DimensionMismatch {
            expected: context.tally.n_items(),
            found: point.len(),
        });
    }
    let results: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived_rng(seed, Stream::Bootstrap, &[b as u64]);
            let simulated = simulate_tally_with(&point, context.tally, &mut rng);
            match target {
                Target::Mle => fit_mle(&simulated, context.constraint_index, &context.fit_options)
                    .ok()
                    .map(|fit| fit.mu),
                Target::Alasso => {
                    let (fit, weights) = context.alasso.expect("checked above");
                    fit_lasso_warm(
                        &simulated,
                        fit.lambda,
                        weights,
                        context.constraint_index,
                        &context.lasso_options,
                        Some(&fit.state),
                    )
                    .ok()
                    .map(|refit| refit.mu)
                }
            }
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    if failed == replicates {
        return Err(BootstrapError::AllReplicatesFailed(replicates));
    }
    Ok(BootstrapSamples {
        target,
        point,
        replicates: results.into_iter().flatten().collect(),
        requested: replicates,
        failed,
    })
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

/// Empirical quantile of sorted data by linear interpolation between order
/// statistics at `h = (n - 1) p + 1` (1-based).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Acceleration estimate `skewness / 6` of the replicate distribution.
pub fn acceleration_from_skewness(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 3 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5) / 6.0
    }
}

/// Bias-corrected percentile interval at level `1 - 2 alpha`.
///
/// `z0 = Φ⁻¹(#{samples < theta_hat} / n)` shifts the percentile levels to
/// `Φ(2 z0 ∓ z_α)`. The proportion is clamped to `[1/(2n), 1 - 1/(2n)]`.
pub fn bc_interval(samples: &[f64], theta_hat: f64, alpha: f64) -> Result<(f64, f64), BootstrapError> {
    bca_interval(samples, theta_hat, alpha, 0.0)
}

/// Bias-corrected and accelerated interval; `acceleration = 0` gives
/// [`bc_interval`].
pub fn bca_interval(
    samples: &[f64],
    theta_hat: f64,
    alpha: f64,
    acceleration: f64,
) -> Result<(f64, f64), BootstrapError> {
    if samples.is_empty() {
        return Err(BootstrapError::EmptySamples);
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(BootstrapError::InvalidAlpha(alpha));
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok((theta_hat, theta_hat));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let below = sorted.iter().filter(|&&x| x < theta_hat).count() as f64;
    let proportion = (below / n).clamp(0.5 / n, 1.0 - 0.5 / n);
    let z0 = norm_quantile(proportion);
    let z_alpha = norm_quantile(1.0 - alpha);
    let (lower_level, upper_level) = if z0 == 0.0 && acceleration == 0.0 {
        (alpha, 1.0 - alpha)
    } else {
        let level = |z: f64| {
            let shifted = z0 + z;
            norm_cdf(z0 + shifted / (1.0 - acceleration * shifted))
        };
        (level(-z_alpha), level(z_alpha))
    };
    Ok((
        quantile_sorted(&sorted, lower_level),
        quantile_sorted(&sorted, upper_level),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    #[default]
    Bc,
    Bca,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalRow {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalTable {
    pub target: Target,
    /// Nominal coverage `1 - 2 alpha`.
    pub level: f64,
    pub method: IntervalMethod,
    pub replicates_used: usize,
    pub failed_replicates: usize,
    pub rows: Vec<IntervalRow>,
}

/// Per-item intervals from bootstrap replicates.
pub fn interval_table(
    samples: &BootstrapSamples,
    alpha: f64,
    method: IntervalMethod,
) -> Result<IntervalTable, BootstrapError> {
    let rows = (0..samples.point.len())
        .map(|item| {
            let values = samples.item(item);
            let acceleration = match method {
                IntervalMethod::Bc => 0.0,
                IntervalMethod::Bca => acceleration_from_skewness(&values),
            };
            let theta = samples.point[item];
            let (lower, upper) = bca_interval(&values, theta, alpha, acceleration)?;
            Ok(IntervalRow {
                point: theta,
                lower,
                upper,
            })
        })
        .collect::<Result<Vec<_>, BootstrapError>>()?;
    Ok(IntervalTable {
        target: samples.target,
        level: 1.0 - 2.0 * alpha,
        method,
        replicates_used: samples.replicates.len(),
        failed_replicates: samples.failed,
        rows,
    })
}

impl IntervalTable {
    /// `item_id,point,lower,upper,failed_replicates`.
    pub fn write_csv<W: Write>(&self, registry: &ItemRegistry, sink: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["item_id", "point", "lower", "upper", "failed_replicates"])?;
        let failed = self.failed_replicates.to_string();
        for (index, row) in self.rows.iter().enumerate() {
            writer.write_record([
                registry.item_id(index),
                &format!("{:.6}", row.point),
                &format!("{:.6}", row.lower),
                &format!("{:.6}", row.upper),
                &failed,
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}
