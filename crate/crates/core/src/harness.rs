//! Replica ensembles and the estimators that compare them with the theory.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EstimateError;
use crate::model::{run_with_stream, GraphState, Observer, StepReport, TimeSeries};
use crate::params::ModelParams;
use crate::rng::derive_stream;
use crate::theory;

pub mod acceptance;

/// Checkpoints required inside an exponent window.
pub const MIN_WINDOW_POINTS: usize = 10;
/// Drift buckets start here; below it the O(1/n) corrections dominate.
pub const DRIFT_MIN_N: u64 = 10_000;
/// Geometric growth factor of drift bucket boundaries.
pub const DRIFT_BUCKET_FACTOR: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Least-squares slope of `ln M_1` against `ln n` over checkpoints with
/// `n_lo <= n <= n_hi` and `M_1 > 0`.
pub fn estimate_exponent(series: &TimeSeries, window: (u64, u64)) -> Result<ExponentEstimate, EstimateError> {
    loglog_slope(
        series
            .rows
            .iter()
            .filter(|r| r.n > 0 && r.n >= window.0 && r.n <= window.1)
            .map(|r| (r.n as f64, r.top.first().copied().unwrap_or(0) as f64)),
    )
}

/// Least-squares slope of `ln y` against `ln x`; points with a
/// non-positive coordinate are skipped.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Result<ExponentEstimate, EstimateError> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(EstimateError::InsufficientData {
            found: pts.len(),
            needed: MIN_WINDOW_POINTS,
        });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse.max(0.0) / (k - 2.0) / sxx).sqrt();
    Ok(ExponentEstimate {
        slope,
        stderr,
        points: pts.len(),
    })
}

/// Normalization applied by [`check_ratio`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioKind {
    /// `M_k(n) / n`, rank starting at 1.
    MkOverN(usize),
    /// `M_1(n) ln n / n`.
    M1LogNOverN,
}

impl RatioKind {
    pub fn apply(self, n: u64, top: &[u64]) -> f64 {
        let n_f = n as f64;
        match self {
            RatioKind::MkOverN(k) => top[k - 1] as f64 / n_f,
            RatioKind::M1LogNOverN => top[0] as f64 * n_f.ln() / n_f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub kind: RatioKind,
    pub target: f64,
    pub final_value: f64,
    pub deviation: f64,
    /// Fraction of rising minus fraction of falling consecutive ratios over
    /// the last half of the checkpoints, in `[-1, 1]`.
    pub trend: f64,
}

pub fn check_ratio(series: &TimeSeries, target: f64, kind: RatioKind) -> RatioReport {
    let values: Vec<f64> = series
        .rows
        .iter()
        .filter(|r| r.n > 0)
        .map(|r| kind.apply(r.n, &r.top))
        .collect();
    let final_value = values.last().copied().unwrap_or(0.0);
    let tail = &values[values.len() / 2..];
    let trend = if tail.len() < 2 {
        0.0
    } else {
        let (mut up, mut down) = (0usize, 0usize);
        for w in tail.windows(2) {
            if w[1] > w[0] {
                up += 1;
            } else if w[1] < w[0] {
                down += 1;
            }
        }
        (up as f64 - down as f64) / (tail.len() - 1) as f64
    };
    RatioReport {
        kind,
        target,
        final_value,
        deviation: (final_value - target).abs(),
        trend,
    }
}

/// Running sums for one (rank, bucket) cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftAccumulator {
    pub steps: u64,
    pub sum_increment: f64,
    pub sum_drift: f64,
    pub sum_residual: f64,
    pub sum_residual_sq: f64,
}

impl DriftAccumulator {
    fn add(&mut self, increment: f64, drift: f64) {
        let res = increment - drift;
        self.steps += 1;
        self.sum_increment += increment;
        self.sum_drift += drift;
        self.sum_residual += res;
        self.sum_residual_sq += res * res;
    }

    fn merge(&mut self, other: &DriftAccumulator) {
        self.steps += other.steps;
        self.sum_increment += other.sum_increment;
        self.sum_drift += other.sum_drift;
        self.sum_residual += other.sum_residual;
        self.sum_residual_sq += other.sum_residual_sq;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftBucketStat {
    pub rank: usize,
    pub n_lo: u64,
    pub n_hi: u64,
    pub steps: u64,
    pub mean_increment: f64,
    pub mean_drift: f64,
    pub z: f64,
}

/// Observer comparing each step's increment of `M_1..M_ranks` with the
/// predicted drift `g_k` at the pre-step normalized degrees.
///
/// A step counts for rank `k` only when `M_{k-1} > M_k > M_{k+1}` before
/// the step and `n >= min_n`. Steps are grouped into geometric buckets
/// `[min_n * f^j, min_n * f^(j+1))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRecorder {
    pub ranks: usize,
    pub min_n: u64,
    pub factor: f64,
    params: ModelParams,
    previous: Vec<u64>,
    /// `cells[rank - 1][bucket]`.
    cells: Vec<Vec<DriftAccumulator>>,
}

impl DriftRecorder {
    pub fn new(params: &ModelParams, ranks: usize) -> Self {
        Self::with_buckets(params, ranks, DRIFT_MIN_N, DRIFT_BUCKET_FACTOR)
    }

    pub fn with_buckets(params: &ModelParams, ranks: usize, min_n: u64, factor: f64) -> Self {
        assert!(ranks >= 1 && min_n >= 1 && factor > 1.0);
        DriftRecorder {
            ranks,
            min_n,
            factor,
            params: params.clone(),
            previous: Vec::new(),
            cells: vec![Vec::new(); ranks],
        }
    }

    fn bucket_of(&self, n: u64) -> usize {
        let mut j = 0;
        let mut hi = self.min_n as f64 * self.factor;
        while n as f64 >= hi {
            hi *= self.factor;
            j += 1;
        }
        j
    }

    fn bucket_bounds(&self, j: usize) -> (u64, u64) {
        let lo = self.min_n as f64 * self.factor.powi(j as i32);
        (lo.ceil() as u64, (lo * self.factor).ceil() as u64)
    }

    /// Feeds one transition: top degrees before and after a step taken
    /// from a graph with step count `n` and `n_prime` vertices.
    pub fn record(&mut self, n: u64, n_prime: u64, before: &[u64], after: &[u64]) {
        if n < self.min_n {
            return;
        }
        let j = self.bucket_of(n);
        let z: Vec<f64> = before.iter().map(|&m| m as f64 / n_prime as f64).collect();
        for k in 1..=self.ranks {
            let above_ok = k == 1 || before[k - 2] > before[k - 1];
            if !above_ok || before[k - 1] <= before[k] {
                continue;
            }
            let g = theory::drift(k, &z, &self.params).expect("normalized degrees are non-negative");
            let cells = &mut self.cells[k - 1];
            if cells.len() <= j {
                cells.resize(j + 1, DriftAccumulator::default());
            }
            cells[j].add(after[k - 1] as f64 - before[k - 1] as f64, g);
        }
    }

    pub fn merge(&mut self, other: &DriftRecorder) {
        for (mine, theirs) in self.cells.iter_mut().zip(&other.cells) {
            if mine.len() < theirs.len() {
                mine.resize(theirs.len(), DriftAccumulator::default());
            }
            for (m, t) in mine.iter_mut().zip(theirs) {
                m.merge(t);
            }
        }
    }

    /// Standardized deviation per non-empty bucket.
    pub fn stats(&self) -> Vec<DriftBucketStat> {
        let mut out = Vec::new();
        for (r, cells) in self.cells.iter().enumerate() {
            for (j, c) in cells.iter().enumerate() {
                if c.steps < 2 {
                    continue;
                }
                let k = c.steps as f64;
                let mean_res = c.sum_residual / k;
                let var = ((c.sum_residual_sq - k * mean_res * mean_res) / (k - 1.0)).max(0.0);
                let se = (var / k).sqrt();
                let z = if se > 0.0 { mean_res / se } else { 0.0 };
                let (n_lo, n_hi) = self.bucket_bounds(j);
                out.push(DriftBucketStat {
                    rank: r + 1,
                    n_lo,
                    n_hi,
                    steps: c.steps,
                    mean_increment: c.sum_increment / k,
                    mean_drift: c.sum_drift / k,
                    z,
                });
            }
        }
        out
    }
}

impl Observer for DriftRecorder {
    fn on_start(&mut self, state: &GraphState) -> io::Result<()> {
        self.previous = state.top_degrees(self.ranks + 1);
        Ok(())
    }

    fn on_step(&mut self, state: &GraphState, report: &StepReport) -> io::Result<()> {
        let after = state.top_degrees(self.ranks + 1);
        let before = std::mem::replace(&mut self.previous, after.clone());
        self.record(report.step, state.n_prime() - 1, &before, &after);
        Ok(())
    }
}

/// Pools per-replica recorders and reports bucket statistics.
pub fn drift_check<'a>(recorders: impl IntoIterator<Item = &'a DriftRecorder>) -> Vec<DriftBucketStat> {
    let mut iter = recorders.into_iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    let mut pooled = first.clone();
    for r in iter {
        pooled.merge(r);
    }
    pooled.stats()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica_id: u64,
    pub final_n: u64,
    pub final_top: Vec<u64>,
    pub exponent: Option<ExponentEstimate>,
    /// `M_k(n) / n` for each tracked rank.
    pub ratios: Vec<f64>,
    pub m1_log_n_over_n: f64,
    pub drift: Vec<DriftBucketStat>,
}

#[derive(Clone, Debug)]
pub struct ReplicaRun {
    pub summary: ReplicaSummary,
    pub series: TimeSeries,
    pub drift: Option<DriftRecorder>,
}

/// What each replica measures besides its time series.
#[derive(Clone, Debug, Default)]
pub struct ReplicaOptions {
    /// Exponent window; defaults to the last two decades of `n`.
    pub exponent_window: Option<(u64, u64)>,
    /// Ranks checked against the drift, 0 to disable.
    pub drift_ranks: usize,
}

pub fn default_exponent_window(steps: u64) -> (u64, u64) {
    ((steps / 100).max(1), steps)
}

/// One replica on stream `replica_id` of `params.seed`.
pub fn run_replica(params: &ModelParams, replica_id: u64, options: &ReplicaOptions) -> io::Result<ReplicaRun> {
    let mut rng = derive_stream(params.seed, replica_id);
    let mut drift = (options.drift_ranks > 0).then(|| DriftRecorder::new(params, options.drift_ranks));
    let series = match drift.as_mut() {
        Some(rec) => run_with_stream(params, &mut rng, &mut [rec])?,
        None => run_with_stream(params, &mut rng, &mut [])?,
    };
    let last = series.last().expect("series has the initial checkpoint").clone();
    let window = options.exponent_window.unwrap_or_else(|| default_exponent_window(params.steps));
    let final_n = last.n.max(1);
    let summary = ReplicaSummary {
        replica_id,
        final_n: last.n,
        final_top: last.top.clone(),
        exponent: estimate_exponent(&series, window).ok(),
        ratios: (1..=params.track_k).map(|k| RatioKind::MkOverN(k).apply(final_n, &last.top)).collect(),
        m1_log_n_over_n: RatioKind::M1LogNOverN.apply(final_n, &last.top),
        drift: drift.as_ref().map(DriftRecorder::stats).unwrap_or_default(),
    };
    Ok(ReplicaRun { summary, series, drift })
}

/// Runs replicas `0..replica_count` on a pool of `parallelism` threads.
/// Output is ordered by replica id and does not depend on `parallelism`.
pub fn run_replicas(
    params: &ModelParams,
    replica_count: u64,
    parallelism: usize,
    options: &ReplicaOptions,
) -> io::Result<Vec<ReplicaRun>> {
    assert!(replica_count >= 1, "need at least one replica");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(io::Error::other)?;
    pool.install(|| {
        (0..replica_count)
            .into_par_iter()
            .map(|r| run_replica(params, r, options))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanWithError {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanWithError {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return MeanWithError {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let stderr = if k > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        MeanWithError { mean, stderr, count: k }
    }
}

/// Ensemble statistics, a pure function of the summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub replicas: usize,
    pub ratios: Vec<MeanWithError>,
    pub m1_log_n_over_n: MeanWithError,
    pub exponent: MeanWithError,
    pub drift: Vec<DriftBucketStat>,
}

pub fn aggregate(runs: &[ReplicaRun]) -> EnsembleSummary {
    let track = runs.first().map_or(0, |r| r.summary.ratios.len());
    let ratios = (0..track)
        .map(|k| MeanWithError::of(&runs.iter().map(|r| r.summary.ratios[k]).collect::<Vec<_>>()))
        .collect();
    let exps: Vec<f64> = runs.iter().filter_map(|r| r.summary.exponent.map(|e| e.slope)).collect();
    EnsembleSummary {
        replicas: runs.len(),
        ratios,
        m1_log_n_over_n: MeanWithError::of(&runs.iter().map(|r| r.summary.m1_log_n_over_n).collect::<Vec<_>>()),
        exponent: MeanWithError::of(&exps),
        drift: drift_check(runs.iter().filter_map(|r| r.drift.as_ref())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeSeriesRow;
    use crate::rng::derive_stream;
    use rand::Rng;

    fn series_from(f: impl Fn(u64) -> u64, ns: impl Iterator<Item = u64>) -> TimeSeries {
        TimeSeries {
            track_k: 1,
            rows: ns.map(|n| TimeSeriesRow { n, e: 0, top: vec![f(n)] }).collect(),
        }
    }

    #[test]
    fn exponent_of_exact_power_law() {
        let pts = (0..=40).map(|i| {
            let n = 1000.0 * 1.12f64.powi(i);
            (n, n.powf(0.6))
        });
        let est = loglog_slope(pts).unwrap();
        assert!((est.slope - 0.6).abs() < 1e-12, "{est:?}");

        let linear = series_from(|n| 3 * n, (1..=100).map(|i| i * 1000));
        let est = estimate_exponent(&linear, (1000, 100_000)).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-12);
        assert!(est.stderr < 1e-9);
    }

    #[test]
    fn exponent_needs_enough_points() {
        let s = series_from(|n| n, (1..=5).map(|i| i * 10));
        assert!(matches!(
            estimate_exponent(&s, (0, 100)),
            Err(EstimateError::InsufficientData { found: 5, needed: 10 })
        ));
        let zeros = series_from(|_| 0, (1..=50).map(|i| i * 10));
        assert!(estimate_exponent(&zeros, (0, 1000)).is_err());
    }

    #[test]
    fn ratio_on_constant_series() {
        let s = series_from(|n| 2 * n, (0..=20).map(|i| i * 100));
        let rep = check_ratio(&s, 2.0, RatioKind::MkOverN(1));
        assert_eq!(rep.deviation, 0.0);
        assert_eq!(rep.trend, 0.0);
        let rising = series_from(|n| n * n / 1000, (1..=20).map(|i| i * 100));
        assert!(check_ratio(&rising, 0.0, RatioKind::MkOverN(1)).trend > 0.9);
    }

    #[test]
    fn drift_z_scores_are_calibrated() {
        // A process whose increments are Bernoulli(g_1(M / n')) exactly.
        let params = ModelParams::new(0.3, 1.0, 0.2, 1.0, 2, vec![1.0], 8).unwrap();
        let mut rng = derive_stream(99, 0);
        let mut zs = Vec::new();
        for rep in 0..20 {
            let mut rec = DriftRecorder::with_buckets(&params, 1, 100, 1.5);
            let mut m = 30u64 + rep;
            for n in 100..20_000u64 {
                let n_prime = n + 8;
                let g = theory::drift(1, &[m as f64 / n_prime as f64], &params).unwrap();
                let inc = (rng.random::<f64>() < g) as u64;
                rec.record(n, n_prime, &[m, 0], &[m + inc, 0]);
                m += inc;
            }
            zs.extend(rec.stats().into_iter().map(|s| s.z));
        }
        let mean = zs.iter().sum::<f64>() / zs.len() as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (zs.len() - 1) as f64;
        assert!(mean.abs() < 0.4, "mean {mean}");
        assert!((0.5..1.6).contains(&var), "var {var}");
        assert!(zs.iter().all(|z| z.abs() < 5.0));
    }

    #[test]
    fn ties_are_excluded() {
        let params = ModelParams::new(0.3, 1.0, 0.2, 1.0, 2, vec![1.0], 8).unwrap();
        let mut rec = DriftRecorder::with_buckets(&params, 2, 10, 1.5);
        rec.record(20, 28, &[5, 5, 1], &[6, 5, 1]);
        assert!(rec.stats().is_empty());
        rec.record(5, 13, &[5, 4, 1], &[6, 4, 1]);
        assert!(rec.stats().is_empty());
        rec.record(20, 28, &[5, 4, 1], &[6, 4, 1]);
        rec.record(21, 29, &[6, 4, 4], &[6, 4, 4]);
        let stats = rec.stats();
        assert_eq!(stats.len(), 1);
        assert_eq!((stats[0].rank, stats[0].steps), (1, 2));
    }

    #[test]
    fn replicas_independent_of_parallelism() {
        let params = ModelParams::new(0.45, 1.0, 0.3, 1.0, 2, vec![0.5, 0.5], 8)
            .unwrap()
            .with_steps(3000)
            .with_checkpoint_stride(100)
            .with_track_k(2)
            .with_seed(5);
        let opts = ReplicaOptions {
            exponent_window: Some((100, 3000)),
            drift_ranks: 1,
        };
        let serial = run_replicas(&params, 4, 1, &opts).unwrap();
        let parallel = run_replicas(&params, 4, 8, &opts).unwrap();
        let s1: Vec<_> = serial.iter().map(|r| r.summary.clone()).collect();
        let s2: Vec<_> = parallel.iter().map(|r| r.summary.clone()).collect();
        assert_eq!(s1, s2);
        assert_eq!(aggregate(&serial), aggregate(&parallel));
        assert_ne!(serial[0].series, serial[1].series);
        assert_eq!(run_replicas(&params, 1, 1, &opts).unwrap().len(), 1);
    }
}
