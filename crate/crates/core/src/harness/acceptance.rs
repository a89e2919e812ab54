//! Scaled-down experiments checking the three limit regimes.
//!
//! Each experiment is a replica ensemble with fixed parameters; each
//! `judge_*` function turns an outcome into a pass/fail line. The `verify`
//! command and the acceptance test target share these definitions.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

use super::{aggregate, estimate_exponent, run_replicas, DriftBucketStat, EnsembleSummary, MeanWithError, ReplicaOptions, ReplicaRun};
use crate::params::ModelParams;
use crate::theory::{self, Regime, TheoryResult};

pub const A1_TOL: f64 = 0.05;
pub const A2_TOL: f64 = 0.07;
pub const A3_FACTOR: f64 = 3.0;
pub const A3_SLOPE_RANGE: (f64, f64) = (0.85, 1.02);
pub const A4_TOL: f64 = 0.1;
pub const A5_MAX_Z: f64 = 4.0;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// Sizes used by the acceptance gate.
    Full,
    /// One tenth of the steps and a quarter of the replicas, for demos.
    Quick,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.id, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub params: ModelParams,
    pub replicas: u64,
    pub exponent_window: (u64, u64),
    pub drift_ranks: usize,
}

fn base(a: f64, alpha: f64, m_dist: Vec<f64>) -> ModelParams {
    ModelParams::new(a, 1.0, alpha, 1.0, 2, m_dist, 8)
        .expect("experiment parameters are valid")
        .with_track_k(2)
}

fn scaled(profile: Profile, steps: u64, replicas: u64) -> (u64, u64) {
    match profile {
        Profile::Full => (steps, replicas),
        Profile::Quick => (steps / 10, (replicas / 4).max(2)),
    }
}

#[allow(clippy::too_many_arguments)]
fn experiment(id: &str, params: ModelParams, profile: Profile, steps: u64, replicas: u64, window: impl Fn(u64) -> (u64, u64), drift_ranks: usize, seed: u64) -> Experiment {
    let (steps, replicas) = scaled(profile, steps, replicas);
    Experiment {
        id: id.into(),
        params: params
            .with_steps(steps)
            .with_checkpoint_stride((steps / 1000).max(1))
            .with_seed(seed),
        replicas,
        exponent_window: window(steps),
        drift_ranks,
    }
}

/// Single condensed vertex: `a = 0.5, alpha = 0.3, d = 2, m = 1`.
pub fn supercritical_single(profile: Profile, seed: u64) -> Experiment {
    experiment("A1", base(0.5, 0.3, vec![1.0]), profile, 200_000, 20, |s| (s / 100, s), 1, seed)
}

/// Two coexisting condensed vertices: as A1 with `m = 2`.
pub fn supercritical_pair(profile: Profile, seed: u64) -> Experiment {
    experiment("A2", base(0.5, 0.3, vec![0.0, 1.0]), profile, 200_000, 20, |s| (s / 100, s), 0, seed)
}

/// Critical line: `a = 0.4, alpha = 0.3, d = 2, m = 1`.
pub fn critical(profile: Profile, seed: u64) -> Experiment {
    experiment("A3", base(0.4, 0.3, vec![1.0]), profile, 1_000_000, 10, |s| (s / 10, s), 1, seed)
}

/// Sublinear growth: `a = 0.2, alpha = 0.2, d = 2, m = 1`.
pub fn subcritical(profile: Profile, seed: u64) -> Experiment {
    experiment("A4", base(0.2, 0.2, vec![1.0]), profile, 100_000, 20, |s| (s / 100, s), 1, seed)
}

pub struct ExperimentOutcome {
    pub experiment: Experiment,
    pub theory: TheoryResult,
    pub runs: Vec<ReplicaRun>,
    pub ensemble: EnsembleSummary,
}

pub fn run_experiment(exp: &Experiment, jobs: usize) -> io::Result<ExperimentOutcome> {
    let options = ReplicaOptions {
        exponent_window: Some(exp.exponent_window),
        drift_ranks: exp.drift_ranks,
    };
    let runs = run_replicas(&exp.params, exp.replicas, jobs, &options)?;
    let ensemble = aggregate(&runs);
    let theory = theory::classify_regime(&exp.params).expect("theory solves for valid parameters");
    Ok(ExperimentOutcome {
        experiment: exp.clone(),
        theory,
        runs,
        ensemble,
    })
}

fn mean_abs_deviation(runs: &[ReplicaRun], rank: usize, target: f64) -> f64 {
    let devs: Vec<f64> = runs.iter().map(|r| (r.summary.ratios[rank - 1] - target).abs()).collect();
    MeanWithError::of(&devs).mean
}

fn report(id: &str, passed: bool, detail: String) -> CriterionReport {
    CriterionReport {
        id: id.into(),
        passed,
        detail,
    }
}

/// Mean over replicas of `|M_1(n)/n - x_1*|` at most [`A1_TOL`].
pub fn judge_a1(outcome: &ExperimentOutcome) -> CriterionReport {
    let Some(&x1) = outcome.theory.x_star.first() else {
        return report("A1", false, "no positive fixed point".into());
    };
    let dev = mean_abs_deviation(&outcome.runs, 1, x1);
    let mean = outcome.ensemble.ratios[0].mean;
    report(
        "A1",
        dev <= A1_TOL,
        format!("x1* = {x1:.6}, mean M_1/n = {mean:.4}, mean |dev| = {dev:.4} (tol {A1_TOL})"),
    )
}

/// `K = 2`, `x_1* = x_2*`, and mean `|M_k(n)/n - x_k*|` at most [`A2_TOL`]
/// for both ranks.
pub fn judge_a2(outcome: &ExperimentOutcome) -> CriterionReport {
    let th = &outcome.theory;
    if th.k != 2 || th.x_star[0] != th.x_star[1] {
        return report("A2", false, format!("solver gave K = {}, x* = {:?}", th.k, th.x_star));
    }
    let d1 = mean_abs_deviation(&outcome.runs, 1, th.x_star[0]);
    let d2 = mean_abs_deviation(&outcome.runs, 2, th.x_star[1]);
    report(
        "A2",
        d1 <= A2_TOL && d2 <= A2_TOL,
        format!(
            "K = 2, x* = {:.6}; mean M_1/n = {:.4}, M_2/n = {:.4}; mean |dev| = {d1:.4}, {d2:.4} (tol {A2_TOL})",
            th.x_star[0], outcome.ensemble.ratios[0].mean, outcome.ensemble.ratios[1].mean
        ),
    )
}

/// Mean `M_1 ln n / n` within a factor [`A3_FACTOR`] of `2/(d alpha)^2`
/// and mean log-log slope over the last decade inside [`A3_SLOPE_RANGE`].
pub fn judge_a3(outcome: &ExperimentOutcome) -> CriterionReport {
    let c = outcome.theory.critical_constant;
    let ratio = outcome.ensemble.m1_log_n_over_n.mean;
    let slope = outcome.ensemble.exponent.mean;
    let regime_ok = outcome.theory.regime == Regime::Critical;
    let ratio_ok = ratio >= c / A3_FACTOR && ratio <= c * A3_FACTOR;
    let slope_ok = slope >= A3_SLOPE_RANGE.0 && slope <= A3_SLOPE_RANGE.1;
    report(
        "A3",
        regime_ok && ratio_ok && slope_ok,
        format!(
            "regime {:?}, 2/(d alpha)^2 = {c:.4}, mean M_1 ln n / n = {ratio:.4} (band [{:.4}, {:.4}]), last-decade slope = {slope:.4} (band [{}, {}])",
            outcome.theory.regime,
            c / A3_FACTOR,
            c * A3_FACTOR,
            A3_SLOPE_RANGE.0,
            A3_SLOPE_RANGE.1
        ),
    )
}

/// Mean per-replica growth exponent within [`A4_TOL`] of `a + d alpha`.
pub fn judge_a4(outcome: &ExperimentOutcome) -> CriterionReport {
    let target = outcome.theory.exponent;
    let est = &outcome.ensemble.exponent;
    let complete = est.count == outcome.runs.len();
    report(
        "A4",
        complete && (est.mean - target).abs() <= A4_TOL && outcome.theory.regime == Regime::Subcritical,
        format!(
            "a + d alpha = {target:.3}, exponent over n in {:?} = {:.4} +- {:.4} from {} replicas (tol {A4_TOL})",
            outcome.experiment.exponent_window, est.mean, est.stderr, est.count
        ),
    )
}

/// Every pooled drift bucket of every given outcome has `|z| <= 4`.
pub fn judge_a5(outcomes: &[&ExperimentOutcome]) -> CriterionReport {
    let mut buckets = 0;
    let mut worst: Option<(String, DriftBucketStat)> = None;
    for o in outcomes {
        for b in &o.ensemble.drift {
            buckets += 1;
            if worst.as_ref().is_none_or(|(_, w)| b.z.abs() > w.z.abs()) {
                worst = Some((o.experiment.id.clone(), b.clone()));
            }
        }
    }
    let Some((id, w)) = worst else {
        return report("A5", false, "no drift buckets with n >= 10^4".into());
    };
    report(
        "A5",
        w.z.abs() <= A5_MAX_Z,
        format!(
            "{buckets} buckets; worst |z| = {:.3} in {id} rank {} n in [{}, {}) (mean increment {:.5} vs drift {:.5})",
            w.z.abs(),
            w.rank,
            w.n_lo,
            w.n_hi,
            w.mean_increment,
            w.mean_drift
        ),
    )
}

/// Re-estimates the exponent of each replica over another window.
pub fn exponents_over(runs: &[ReplicaRun], window: (u64, u64)) -> MeanWithError {
    let slopes: Vec<f64> = runs
        .iter()
        .filter_map(|r| estimate_exponent(&r.series, window).ok().map(|e| e.slope))
        .collect();
    MeanWithError::of(&slopes)
}

/// Runs A1 to A5 and returns one report per criterion.
pub fn verify(profile: Profile, seed: u64, jobs: usize, mut progress: impl FnMut(&CriterionReport)) -> io::Result<Vec<CriterionReport>> {
    let mut reports = Vec::new();
    let mut push = |r: CriterionReport, reports: &mut Vec<CriterionReport>| {
        progress(&r);
        reports.push(r);
    };
    let a1 = run_experiment(&supercritical_single(profile, seed), jobs)?;
    push(judge_a1(&a1), &mut reports);
    let a2 = run_experiment(&supercritical_pair(profile, seed), jobs)?;
    push(judge_a2(&a2), &mut reports);
    drop(a2);
    let a3 = run_experiment(&critical(profile, seed), jobs)?;
    push(judge_a3(&a3), &mut reports);
    let a4 = run_experiment(&subcritical(profile, seed), jobs)?;
    push(judge_a4(&a4), &mut reports);
    push(judge_a5(&[&a1, &a3, &a4]), &mut reports);
    Ok(reports)
}
