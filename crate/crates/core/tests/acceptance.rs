//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built without the libtest harness so every criterion reports even when an
//! earlier one fails. Exits 0 unless `ACCEPTANCE_STRICT` is set and some
//! criterion failed.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use consensus_rank::bootstrap::{
    bc_interval, bootstrap_estimates, quantile_sorted, simulate_tally_with, BootstrapContext, Target,
};
use consensus_rank::btmle::{fit_mle, loglik, loglik_gradient, loglik_hessian, FitOptions};
use consensus_rank::ingest::{Direction, Manifest, RankingList, YearFilter};
use consensus_rank::ranklasso::{adaptive_weights, fit_lasso, lambda_max, lasso_path, LassoOptions};
use consensus_rank::report::{run_pipeline, PipelineOptions};
use consensus_rank::rng::{derived_rng, Stream};
use consensus_rank::synth::{generate, SyntheticSpec};
use consensus_rank::tally::{build_tally, tally_summary, ComparisonTally, PairCounts};
use consensus_rank::taux::tau_x;

const GRADIENT_REL_TOL: f64 = 1e-6;
const HESSIAN_ROW_TOL: f64 = 1e-8;
const CLOSED_FORM_TOL: f64 = 1e-8;
const TAU_TOL: f64 = 1e-12;
const ENDPOINT_TOL: f64 = 1e-4;
const GRID_STEP: f64 = 1e-3;
const GRID_SLACK: f64 = 1e-3;
const MIN_MEDIAN_ARI: f64 = 0.9;
const MIN_MEDIAN_TAU: f64 = 0.9;
const COVERAGE_RANGE: (f64, f64) = (0.90, 0.99);
const MEAN_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: usize, name: &str, limit: Option<Duration>, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = outcome.pass && in_time;
    let budget = limit.map(|l| format!(" of {}s", l.as_secs())).unwrap_or_default();
    println!(
        "{} {id:>2} {name}: {} [{:.2}s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn gradient_and_hessian() -> Outcome {
    let mut rng = derived_rng(1, Stream::MonteCarlo, &[]);
    let (mut worst_gradient, mut worst_row) = (0.0f64, 0.0f64);
    let step = 1e-5;
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let t = common::sparse_tally(&mut rng, n);
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = loglik_gradient(&mu, &t).unwrap();
        let h = loglik_hessian(&mu, &t).unwrap();
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let (mut up, mut down) = (mu.clone(), mu.clone());
            up[k] += step;
            down[k] -= step;
            let fd = (loglik(&up, &t).unwrap() - loglik(&down, &t).unwrap()) / (2.0 * step);
            worst_gradient = worst_gradient.max((g[k] - fd).abs() / scale);
            worst_row = worst_row.max(h.row(k).sum().abs());
        }
    }
    Outcome {
        pass: worst_gradient < GRADIENT_REL_TOL && worst_row < HESSIAN_ROW_TOL,
        detail: format!("max rel gradient error {worst_gradient:.2e}, max |Hessian row sum| {worst_row:.2e}"),
    }
}

fn two_item_fit(w: u32, l: u32, t: u32) -> f64 {
    let mut tally = ComparisonTally::new(2);
    tally.set(0, 1, PairCounts::new(w, l, t));
    let fit = fit_mle(&tally, 1, &FitOptions::default()).unwrap();
    fit.mu[0] - fit.mu[1]
}

fn closed_form_mle() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=15u32 {
        for w in 0..=n {
            for t in 0..=n - w {
                let s = w as f64 + 0.5 * t as f64;
                if s <= 0.0 || s >= n as f64 {
                    continue;
                }
                let logit = (s / (n as f64 - s)).ln();
                worst = worst.max((two_item_fit(w, n - w - t, t) - logit).abs());
                cases += 1;
            }
        }
    }
    let anchors = [(3, 1, 0), (2, 0, 2)]
        .iter()
        .map(|&(w, l, t)| (two_item_fit(w, l, t) - 3f64.ln()).abs())
        .fold(0.0f64, f64::max);
    Outcome {
        pass: worst < CLOSED_FORM_TOL && anchors < CLOSED_FORM_TOL,
        detail: format!("{cases} tallies, max error {worst:.2e}; log 3 anchors {anchors:.2e}"),
    }
}

const ITEMS: [&str; 4] = ["A", "B", "C", "D"];

/// The 75 weak orderings of four items as dense levels.
fn weak_orderings() -> Vec<[u8; 4]> {
    let mut out = BTreeSet::new();
    for code in 0..256u32 {
        let raw: Vec<u8> = (0..4).map(|k| ((code >> (2 * k)) & 3) as u8).collect();
        let distinct: BTreeSet<u8> = raw.iter().copied().collect();
        let dense: Vec<u8> = raw
            .iter()
            .map(|v| distinct.iter().position(|d| d == v).unwrap() as u8)
            .collect();
        out.insert([dense[0], dense[1], dense[2], dense[3]]);
    }
    out.into_iter().collect()
}

/// Levels indexed by item; `None` for unrated.
type Levels = [Option<f64>; 4];

fn to_list(levels: &Levels, direction: Direction) -> RankingList {
    let sign = if direction == Direction::HigherIsBetter { 1.0 } else { -1.0 };
    let entries = ITEMS
        .iter()
        .zip(levels)
        .filter_map(|(id, level)| level.map(|l| (id.to_string(), sign * l)));
    RankingList::new("r", 0, direction, entries).unwrap()
}

/// Direct double sum over ordered pairs of the union of rated items.
fn tau_oracle(a: &Levels, b: &Levels) -> f64 {
    let union: Vec<usize> = (0..4).filter(|&k| a[k].is_some() || b[k].is_some()).collect();
    let score = |levels: &Levels, i: usize, j: usize| -> i64 {
        match (levels[i], levels[j]) {
            _ if i == j => 0,
            (Some(x), Some(y)) if x >= y => 1,
            (Some(_), Some(_)) => -1,
            _ => 0,
        }
    };
    let mut sum = 0i64;
    for &i in &union {
        for &j in &union {
            sum += (score(a, i, j) - score(b, i, j)).abs();
        }
    }
    let n = union.len() as i64;
    1.0 - sum as f64 / (n * (n - 1)) as f64
}

fn taux_brute_force() -> Outcome {
    let orderings = weak_orderings();
    let mut variants: Vec<Levels> = Vec::new();
    for o in &orderings {
        let full: Levels = o.map(|v| Some(v as f64));
        variants.push(full);
        for drop in 0..4 {
            let mut partial = full;
            partial[drop] = None;
            variants.push(partial);
        }
    }
    let lists_a: Vec<RankingList> = variants.iter().map(|v| to_list(v, Direction::HigherIsBetter)).collect();
    let lists_b: Vec<RankingList> = variants.iter().map(|v| to_list(v, Direction::LowerIsBetter)).collect();
    let mut worst = 0.0f64;
    for (a, la) in variants.iter().zip(&lists_a) {
        for (b, lb) in variants.iter().zip(&lists_b) {
            let got = tau_x(la, lb).unwrap().tau_x;
            worst = worst.max((got - tau_oracle(a, b)).abs());
        }
    }
    Outcome {
        pass: orderings.len() == 75 && worst < TAU_TOL,
        detail: format!(
            "{} orderings, {} list pairs with partial variants, max deviation {worst:.1e}",
            orderings.len(),
            variants.len() * variants.len()
        ),
    }
}

fn taux_anchors() -> Outcome {
    let strict: Vec<(&str, f64)> = ["A", "B", "C", "D", "E"].iter().zip(1..).map(|(id, l)| (*id, l as f64)).collect();
    let a = RankingList::from_levels("a", Direction::HigherIsBetter, &strict).unwrap();
    let identical = tau_x(&a, &a.clone()).unwrap().tau_x;
    let four = RankingList::from_levels("f", Direction::HigherIsBetter, &strict[..4]).unwrap();
    let reversed = tau_x(&four, &four.reversed()).unwrap().tau_x;
    let tied = RankingList::from_levels("t", Direction::HigherIsBetter, &[("A", 1.0), ("B", 1.0), ("C", 1.0)]).unwrap();
    let three = RankingList::from_levels("s", Direction::HigherIsBetter, &strict[..3]).unwrap();
    let flat = tau_x(&tied, &three).unwrap().tau_x;
    Outcome {
        pass: identical == 1.0 && reversed == -1.0 && flat == 0.0,
        detail: format!("identical {identical}, reversed {reversed}, all-tied vs strict {flat}"),
    }
}

fn lasso_endpoints() -> Outcome {
    let mut rng = derived_rng(5, Stream::MonteCarlo, &[]);
    let options = LassoOptions::default();
    let (mut worst_zero, mut fused) = (0.0f64, 0);
    for _ in 0..10 {
        let n = rng.random_range(2..=8);
        let constraint = rng.random_range(0..n);
        let t = common::random_tally(&mut rng, n);
        let mle = fit_mle(&t, constraint, &FitOptions::default()).unwrap();
        let w = adaptive_weights(&mle, 1e8);
        let zero = fit_lasso(&t, 0.0, &w, constraint, &options).unwrap();
        let gap = zero.mu.iter().zip(&mle.mu).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        worst_zero = worst_zero.max(gap);
        let top = fit_lasso(&t, lambda_max(&t, &w, constraint), &w, constraint, &options).unwrap();
        if top.df == 1 && top.mu.iter().all(|m| *m == 0.0) {
            fused += 1;
        }
    }
    Outcome {
        pass: worst_zero <= ENDPOINT_TOL && fused == 10,
        detail: format!("lambda=0 max gap to MLE {worst_zero:.2e}; {fused}/10 fully fused at lambda_max"),
    }
}

/// Negative log-likelihood of one pair as a function of `d = μ_i - μ_j`.
fn pair_nll(counts: PairCounts, d: f64) -> f64 {
    let n = counts.total() as f64;
    let s = counts.wins as f64 + 0.5 * counts.ties as f64;
    n * (d.exp().ln_1p()) - s * d
}

fn lasso_grid_oracle() -> Outcome {
    let mut rng = derived_rng(6, Stream::MonteCarlo, &[]);
    let steps = (3.0 / GRID_STEP).round() as i64;
    let grid: Vec<f64> = (-steps..=steps).map(|k| k as f64 * GRID_STEP).collect();
    let (mut worst, mut mismatch, mut instances) = (f64::NEG_INFINITY, 0.0f64, 0);
    while instances < 5 {
        let t = common::random_tally(&mut rng, 3);
        let mle = fit_mle(&t, 0, &FitOptions::default()).unwrap();
        if mle.mu.iter().any(|m| m.abs() > 2.5) {
            continue;
        }
        instances += 1;
        let w = adaptive_weights(&mle, 1e8);
        let top = lambda_max(&t, &w, 0);
        for fraction in [0.05, 0.2, 0.4, 0.7, 0.95] {
            let lambda = fraction * top;
            let objective = |m1: f64, m2: f64| {
                pair_nll(t.get(0, 1), -m1)
                    + pair_nll(t.get(0, 2), -m2)
                    + pair_nll(t.get(1, 2), m1 - m2)
                    + lambda * (w.get(0, 1) * m1.abs() + w.get(0, 2) * m2.abs() + w.get(1, 2) * (m1 - m2).abs())
            };
            // The objective is a sum of terms in μ1, μ2 and μ1 - μ2, so the
            // grid search runs over three tabulated arrays.
            let f: Vec<f64> = grid.iter().map(|&x| pair_nll(t.get(0, 1), -x) + lambda * w.get(0, 1) * x.abs()).collect();
            let g: Vec<f64> = grid.iter().map(|&x| pair_nll(t.get(0, 2), -x) + lambda * w.get(0, 2) * x.abs()).collect();
            let h: Vec<f64> = (-2 * steps..=2 * steps)
                .map(|k| {
                    let d = k as f64 * GRID_STEP;
                    pair_nll(t.get(1, 2), d) + lambda * w.get(1, 2) * d.abs()
                })
                .collect();
            let m = grid.len();
            let mut best = f64::INFINITY;
            for i in 0..m {
                for j in 0..m {
                    best = best.min(f[i] + g[j] + h[i + m - 1 - j]);
                }
            }
            let fit = fit_lasso(&t, lambda, &w, 0, &LassoOptions::default()).unwrap();
            mismatch = mismatch.max((objective(fit.mu[1], fit.mu[2]) - fit.objective).abs());
            worst = worst.max(fit.objective - best);
        }
    }
    Outcome {
        pass: worst <= GRID_SLACK && mismatch < 1e-9,
        detail: format!("max (solver - grid minimum) {worst:.2e} over 25 problems; objective cross-check {mismatch:.1e}"),
    }
}

fn cluster_recovery() -> Outcome {
    let levels: Vec<f64> = (0..20).map(|i| (i / 5) as f64).collect();
    let truth: Vec<usize> = (0..20).map(|i| i / 5).collect();
    let (mut aris, mut taus, mut dfs) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10 {
        let data = generate(&SyntheticSpec::complete(levels.clone(), 25), seed);
        let dataset = data.dataset().unwrap();
        let tally = build_tally(&dataset);
        let constraint = dataset.registry().constraint_index();
        let mle = fit_mle(&tally, constraint, &FitOptions::default()).unwrap();
        let weights = adaptive_weights(&mle, 1e8);
        let path = lasso_path(&tally, &weights, constraint, &Default::default(), &Default::default()).unwrap();
        let fit = path.selected().unwrap();
        let ids: Vec<String> = dataset.registry().items().iter().map(|i| i.item_id.clone()).collect();
        aris.push(common::adjusted_rand(fit.clusters.labels(), &truth));
        let estimate = common::scores_list("estimate", &ids, &fit.mu);
        let true_order = common::scores_list("truth", &ids, &data.abilities);
        taus.push(tau_x(&estimate, &true_order).unwrap().tau_x);
        dfs.push(fit.df);
    }
    let ari = common::median(&mut aris);
    let tau = common::median(&mut taus);
    Outcome {
        pass: ari >= MIN_MEDIAN_ARI && tau >= MIN_MEDIAN_TAU,
        detail: format!("median ARI {ari:.3} (>= {MIN_MEDIAN_ARI}), median tau_x {tau:.3} (>= {MIN_MEDIAN_TAU}); selected df {dfs:?}"),
    }
}

fn bootstrap_coverage() -> Outcome {
    let truth = [1.0, 0.0];
    let mut template = ComparisonTally::new(2);
    template.set(0, 1, PairCounts::new(100, 0, 0));
    let mut covered = 0;
    let reps = 200;
    for rep in 0..reps {
        let mut rng = derived_rng(8, Stream::MonteCarlo, &[rep]);
        let tally = simulate_tally_with(&truth, &template, &mut rng);
        let mle = fit_mle(&tally, 1, &FitOptions::default()).unwrap();
        let context = BootstrapContext {
            tally: &tally,
            constraint_index: 1,
            mle_mu: &mle.mu,
            fit_options: FitOptions::default(),
            alasso: None,
            lasso_options: LassoOptions::default(),
        };
        let samples = bootstrap_estimates(&context, 400, rep, Target::Mle).unwrap();
        let (lower, upper) = bc_interval(&samples.item(0), mle.mu[0], 0.025).unwrap();
        if lower <= truth[0] && truth[0] <= upper {
            covered += 1;
        }
    }
    let coverage = covered as f64 / reps as f64;
    Outcome {
        pass: (COVERAGE_RANGE.0..=COVERAGE_RANGE.1).contains(&coverage),
        detail: format!("coverage {coverage:.3} in [{}, {}]", COVERAGE_RANGE.0, COVERAGE_RANGE.1),
    }
}

fn bc_reduction() -> Outcome {
    let mut rng = derived_rng(9, Stream::MonteCarlo, &[]);
    let mut worst = 0.0f64;
    let mut trials = 0;
    for alpha in [0.025, 0.05, 0.1] {
        for _ in 0..20 {
            let half = rng.random_range(20..=500);
            let mut samples: Vec<f64> = (0..2 * half).map(|_| rng.sample(StandardNormal)).collect();
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            let theta = 0.5 * (sorted[half - 1] + sorted[half]);
            samples.shuffle(&mut rng);
            let (lower, upper) = bc_interval(&samples, theta, alpha).unwrap();
            for (got, p) in [(lower, alpha), (upper, 1.0 - alpha)] {
                let at = ((sorted.len() - 1) as f64 * p).floor() as usize;
                let step = sorted[at + 1] - sorted[at];
                worst = worst.max((got - quantile_sorted(&sorted, p)).abs() / step);
            }
            trials += 1;
        }
    }
    Outcome {
        pass: worst <= 1.0,
        detail: format!("{trials} sample sets, max deviation {worst:.2e} order-statistic steps"),
    }
}

fn read_dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "run_meta.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Comparisons counted straight from the fixture files: a list rating `r`
/// items contributes `r (r - 1) / 2`.
fn hand_counted_comparisons() -> (u64, usize) {
    let root = common::fixture_manifest().parent().unwrap().to_path_buf();
    let items = fs::read_to_string(root.join("registry.csv")).unwrap().lines().count() - 1;
    let mut total = 0u64;
    for entry in fs::read_dir(root.join("rankings")).unwrap() {
        let rated = fs::read_to_string(entry.unwrap().path()).unwrap().lines().skip(1).filter(|l| !l.is_empty()).count() as u64;
        total += rated * (rated - 1) / 2;
    }
    (total, items)
}

fn end_to_end() -> Outcome {
    let scratch = tempfile::tempdir().unwrap();
    let manifest = generate(&SyntheticSpec::journal_scale(), 42).write(&scratch.path().join("data"), Some(42)).unwrap();
    let options = PipelineOptions::default();
    let mut slowest = Duration::ZERO;
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = scratch.path().join(run);
        let start = Instant::now();
        run_pipeline(&manifest, &out, &options).unwrap();
        slowest = slowest.max(start.elapsed());
        outputs.push(read_dir_files(&out));
    }
    let identical = outputs[0] == outputs[1];

    let dataset = Manifest::load(&common::fixture_manifest()).unwrap().load_dataset(YearFilter::default()).unwrap();
    let summary = tally_summary(&build_tally(&dataset));
    let (total, items) = hand_counted_comparisons();
    let mean = total as f64 / (items * (items - 1) / 2) as f64;
    let counts_agree = summary.total_comparisons == total && (summary.mean_comparisons_per_pair - mean).abs() < MEAN_TOL;
    Outcome {
        pass: identical && slowest < Duration::from_secs(600) && counts_agree,
        detail: format!(
            "58x31 with 100-point path and B=1000: slowest run {:.1}s, {} artifacts byte-identical: {identical}; fixture {} comparisons, mean {:.4} vs hand count {total}, {mean:.4}",
            slowest.as_secs_f64(),
            outputs[0].len(),
            summary.total_comparisons,
            summary.mean_comparisons_per_pair,
        ),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check(1, "gradient/Hessian vs finite differences", Some(secs(5)), gradient_and_hessian),
        check(2, "closed-form two-item MLE", Some(secs(1)), closed_form_mle),
        check(3, "tau_x brute force over weak orderings", Some(secs(30)), taux_brute_force),
        check(4, "tau_x anchors", None, taux_anchors),
        check(5, "lasso endpoints", Some(secs(30)), lasso_endpoints),
        check(6, "lasso grid-search oracle", Some(secs(60)), lasso_grid_oracle),
        check(7, "cluster recovery", Some(secs(120)), cluster_recovery),
        check(8, "bootstrap BC coverage", Some(secs(120)), bootstrap_coverage),
        check(9, "BC reduces to percentile at z0 = 0", None, bc_reduction),
        check(10, "end-to-end determinism and scale", Some(secs(600)), end_to_end),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed} of {} criteria passed", results.len());
    if passed < results.len() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
