//! The growth process.
//!
//! Each step appends a vertex at a uniform position, computes its vertex
//! step (every ball containing the new position) and the edge step (a
//! uniform source linking to the highest-degree members of `d`
//! preferential samples) against the degrees of the current graph, then
//! commits all new edges at once.
//!
//! Wherever the process divides by the graph size it uses
//! `n' = n + n0`, the number of vertices before the step.

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::registry::DegreeClassRegistry;
use crate::rng::{derive_stream, RngStream};
use crate::samplers::{fill_uniform, two_stage_oracle, union_top};
use crate::torus::{TorusIndex, DEFAULT_DELTA};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexRecord {
    pub id: usize,
    pub position: f64,
    pub in_degree: u32,
}

/// Everything that happened during one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Step index `n` of the graph the step was computed against.
    pub step: u64,
    pub new_vertex: usize,
    pub position: f64,
    pub vertex_step_targets: Vec<usize>,
    pub edge_source: usize,
    pub m_n: usize,
    pub edge_step_targets: Vec<usize>,
    /// Edge-step targets supplied by the uniform fill rule.
    pub fill_count: usize,
}

impl StepReport {
    pub fn edges_added(&self) -> u64 {
        (self.vertex_step_targets.len() + self.edge_step_targets.len()) as u64
    }
}

/// Result of an edge step, before commit.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeOutcome {
    pub source: usize,
    pub m_n: usize,
    pub targets: Vec<usize>,
    pub fill_count: usize,
}

/// Serializable pre-step state. Restoring it and replaying a step with
/// the same stream reproduces the step exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub params: ModelParams,
    pub n: u64,
    pub positions: Vec<f64>,
    pub registry: DegreeClassRegistry,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub n: u64,
    pub e: u64,
    /// `M_1(n) >= M_2(n) >= ...`, `track_k` entries.
    pub top: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub track_k: usize,
    pub rows: Vec<TimeSeriesRow>,
}

impl TimeSeries {
    pub fn last(&self) -> Option<&TimeSeriesRow> {
        self.rows.last()
    }
}

/// Hooks invoked synchronously by [`run`].
pub trait Observer {
    fn on_start(&mut self, _state: &GraphState) -> io::Result<()> {
        Ok(())
    }

    fn on_step(&mut self, _state: &GraphState, _report: &StepReport) -> io::Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _row: &TimeSeriesRow) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GraphState {
    params: ModelParams,
    n: u64,
    positions: Vec<f64>,
    registry: DegreeClassRegistry,
    index: TorusIndex,
    m_cdf: Vec<f64>,
}

impl GraphState {
    /// `n0` isolated vertices at uniform positions.
    pub fn init(params: &ModelParams, rng: &mut RngStream) -> Self {
        Self::init_with_delta(params, DEFAULT_DELTA, rng)
    }

    pub fn init_with_delta(params: &ModelParams, delta: f64, rng: &mut RngStream) -> Self {
        let positions: Vec<f64> = (0..params.n0).map(|_| rng.random::<f64>()).collect();
        let degrees = vec![0; params.n0];
        Self::from_parts(params.clone(), 0, positions, DegreeClassRegistry::from_degrees(&degrees), delta)
    }

    /// Builds a state from explicit positions and degrees, e.g. a frozen
    /// test configuration. `n` is the step count, so the graph is expected
    /// to hold `n0 + n` vertices.
    pub fn from_degrees(params: &ModelParams, n: u64, positions: Vec<f64>, degrees: &[u32]) -> Self {
        assert_eq!(positions.len(), degrees.len());
        Self::from_parts(params.clone(), n, positions, DegreeClassRegistry::from_degrees(degrees), DEFAULT_DELTA)
    }

    pub fn from_snapshot(snapshot: GraphSnapshot) -> Self {
        let GraphSnapshot {
            params,
            n,
            positions,
            registry,
            delta,
        } = snapshot;
        Self::from_parts(params, n, positions, registry, delta)
    }

    fn from_parts(
        params: ModelParams,
        n: u64,
        positions: Vec<f64>,
        registry: DegreeClassRegistry,
        delta: f64,
    ) -> Self {
        assert_eq!(positions.len(), registry.len());
        let n_prime = n + params.n0 as u64;
        let mut index = TorusIndex::new(params.a, params.b, delta);
        for (id, &p) in positions.iter().enumerate() {
            index.insert(id, p, n_prime);
            let g = registry.degree(id);
            if g > 0 {
                index.bump_degree(id, g, n_prime);
            }
        }
        let mut acc = 0.0;
        let m_cdf = params
            .m_dist
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        GraphState {
            params,
            n,
            positions,
            registry,
            index,
            m_cdf,
        }
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        GraphSnapshot {
            params: self.params.clone(),
            n: self.n,
            positions: self.positions.clone(),
            registry: self.registry.clone(),
            delta: self.index.delta(),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Steps taken so far.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Denominator used by the dynamics: `n + n0`.
    pub fn n_prime(&self) -> u64 {
        self.n + self.params.n0 as u64
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn vertex(&self, id: usize) -> VertexRecord {
        VertexRecord {
            id,
            position: self.positions[id],
            in_degree: self.registry.degree(id),
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn degrees(&self) -> &[u32] {
        self.registry.degrees()
    }

    pub fn registry(&self) -> &DegreeClassRegistry {
        &self.registry
    }

    pub fn index(&self) -> &TorusIndex {
        &self.index
    }

    /// Total number of edges, `sum_v deg(v)`.
    pub fn total_edges(&self) -> u64 {
        self.registry.total_edges()
    }

    /// `M_1(n), ..., M_k(n)`.
    pub fn top_degrees(&self, k: usize) -> Vec<u64> {
        self.registry.top_degrees(k)
    }

    pub fn checkpoint_row(&self) -> TimeSeriesRow {
        TimeSeriesRow {
            n: self.n,
            e: self.total_edges(),
            top: self.top_degrees(self.params.track_k),
        }
    }

    /// Per-sample inclusion probability of a vertex of degree `g`.
    pub fn inclusion_probability(&self, g: u32) -> f64 {
        inclusion_probability(&self.params, self.n_prime(), g)
    }

    /// Vertices whose ball contains `x`; does not mutate the graph.
    pub fn vertex_step(&self, x: f64) -> Vec<usize> {
        assert!((0.0..1.0).contains(&x), "position {x} outside [0, 1)");
        self.index.query_balls(x, self.n_prime())
    }

    /// Draws the number of edges for one edge step.
    pub fn draw_m<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let dist = &self.params.m_dist;
        self.m_cdf
            .iter()
            .zip(dist)
            .position(|(&c, &p)| p > 0.0 && u < c)
            // u can land in the rounding gap above the last partial sum
            .or_else(|| dist.iter().rposition(|&p| p > 0.0))
            .map(|i| i + 1)
            .expect("law of m has positive mass")
    }

    /// Edge step against the current degrees. `new_vertex` must already be
    /// appended (with degree 0) so that it is both a possible source and a
    /// possible target.
    pub fn edge_step<R: Rng + ?Sized>(&self, new_vertex: usize, rng: &mut R) -> EdgeOutcome {
        debug_assert_eq!(new_vertex + 1, self.vertex_count());
        let m_n = self.draw_m(rng);
        let total = self.vertex_count();
        let source = rng.random_range(0..total);
        let (params, n_prime) = (&self.params, self.n_prime());
        let mut targets = union_top(
            &self.registry,
            source,
            m_n,
            |g| inclusion_probability(params, n_prime, g),
            params.d,
            rng,
        );
        let fill_count = fill_uniform(total, source, &mut targets, m_n, rng);
        EdgeOutcome {
            source,
            m_n,
            targets,
            fill_count,
        }
    }

    /// Edge step computed by the literal two-stage procedure.
    pub fn edge_step_oracle<R: Rng + ?Sized>(&self, new_vertex: usize, rng: &mut R) -> EdgeOutcome {
        debug_assert_eq!(new_vertex + 1, self.vertex_count());
        let m_n = self.draw_m(rng);
        let source = rng.random_range(0..self.vertex_count());
        let (params, n_prime) = (&self.params, self.n_prime());
        let (targets, fill_count) = two_stage_oracle(
            self.registry.degrees(),
            source,
            m_n,
            |g| inclusion_probability(params, n_prime, g),
            params.d,
            rng,
        );
        EdgeOutcome {
            source,
            m_n,
            targets,
            fill_count,
        }
    }

    /// Appends a degree-0 vertex to the registry only, as the edge step
    /// sees it. Used to freeze pre-commit states in tests.
    pub fn append_pending_vertex(&mut self, position: f64) -> usize {
        self.positions.push(position);
        self.registry.push(0)
    }

    /// One growth step.
    pub fn step(&mut self, rng: &mut RngStream) -> StepReport {
        let step = self.n;
        let next_n_prime = self.n_prime() + 1;
        let position: f64 = rng.random();
        let vertex_step_targets = self.vertex_step(position);
        let new_vertex = self.append_pending_vertex(position);
        let edge = self.edge_step(new_vertex, rng);

        self.index.insert(new_vertex, position, next_n_prime);
        for &t in vertex_step_targets.iter().chain(&edge.targets) {
            let g = self.registry.increment(t);
            self.index.bump_degree(t, g, next_n_prime);
        }
        self.n += 1;
        if next_n_prime.is_power_of_two() {
            self.index.demote(next_n_prime);
        }
        StepReport {
            step,
            new_vertex,
            position,
            vertex_step_targets,
            edge_source: edge.source,
            m_n: edge.m_n,
            edge_step_targets: edge.targets,
            fill_count: edge.fill_count,
        }
    }
}

/// `min(1, (alpha * g + beta) / n')`.
pub fn inclusion_probability(params: &ModelParams, n_prime: u64, g: u32) -> f64 {
    ((params.alpha * g as f64 + params.beta) / n_prime as f64).min(1.0)
}

/// Runs `params.steps` steps on stream 0 of `params.seed`.
pub fn run(params: &ModelParams, observers: &mut [&mut dyn Observer]) -> io::Result<TimeSeries> {
    let mut rng = derive_stream(params.seed, 0);
    run_with_stream(params, &mut rng, observers)
}

/// Runs `params.steps` steps on the given stream, emitting a checkpoint at
/// `n = 0`, at every multiple of the stride and at the final step.
pub fn run_with_stream(
    params: &ModelParams,
    rng: &mut RngStream,
    observers: &mut [&mut dyn Observer],
) -> io::Result<TimeSeries> {
    let mut state = GraphState::init(params, rng);
    let mut series = TimeSeries {
        track_k: params.track_k,
        rows: Vec::new(),
    };
    for obs in observers.iter_mut() {
        obs.on_start(&state)?;
    }
    let emit = |state: &GraphState, series: &mut TimeSeries, observers: &mut [&mut dyn Observer]| {
        let row = state.checkpoint_row();
        for obs in observers.iter_mut() {
            obs.on_checkpoint(&row)?;
        }
        series.rows.push(row);
        io::Result::Ok(())
    };
    emit(&state, &mut series, observers)?;
    for _ in 0..params.steps {
        let report = state.step(rng);
        for obs in observers.iter_mut() {
            obs.on_step(&state, &report)?;
        }
        if state.n().is_multiple_of(params.checkpoint_stride) || state.n() == params.steps {
            emit(&state, &mut series, observers)?;
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 1.0, 0.3, 1.0, 2, vec![0.5, 0.5], 5)
            .unwrap()
            .with_track_k(3)
            .with_seed(17)
    }

    #[test]
    fn init_is_empty_graph() {
        let p = params();
        let state = GraphState::init(&p, &mut derive_stream(1, 0));
        assert_eq!(state.vertex_count(), 5);
        assert_eq!(state.total_edges(), 0);
        assert_eq!(state.top_degrees(1), vec![0]);
        assert!(state.positions().iter().all(|x| (0.0..1.0).contains(x)));
        let again = GraphState::init(&p, &mut derive_stream(1, 0));
        assert_eq!(state.positions(), again.positions());
    }

    #[test]
    fn vertex_step_examples() {
        // n' = n0 + n = 10, radius (0.5 * 0 + 1) / 10 / 2 = 0.05
        let p = ModelParams::new(0.5, 1.0, 0.3, 1.0, 2, vec![1.0], 10).unwrap();
        let state = GraphState::from_degrees(&p, 0, vec![0.5, 0.99, 0.2, 0.3, 0.7, 0.75, 0.8, 0.85, 0.9, 0.25], &[0; 10]);
        assert_eq!(state.vertex_step(0.52), vec![0]);
        assert!(state.vertex_step(0.56).is_empty());
        assert_eq!(state.vertex_step(0.01), vec![1]);
    }

    #[test]
    fn saturated_inclusion_picks_global_top() {
        // beta >= n' forces every inclusion probability to 1
        let p = ModelParams::new(0.3, 1.0, 0.3, 20.0, 2, vec![0.0, 1.0], 6).unwrap();
        let mut state = GraphState::from_degrees(&p, 0, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], &[4, 9, 0, 7, 2, 1]);
        let new = state.append_pending_vertex(0.7);
        let mut rng = derive_stream(3, 0);
        for _ in 0..200 {
            let out = state.edge_step(new, &mut rng);
            let expected: Vec<usize> = [1usize, 3, 0, 4].into_iter().filter(|&v| v != out.source).take(2).collect();
            assert_eq!(out.targets, expected);
            assert_eq!(out.fill_count, 0);
        }
    }

    #[test]
    fn empty_union_is_filled() {
        let p = ModelParams::new(0.3, 1.0, 0.3, 1e-300, 2, vec![0.0, 0.0, 1.0], 6).unwrap();
        let mut state = GraphState::from_degrees(&p, 10_000_000, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], &[0; 6]);
        let new = state.append_pending_vertex(0.7);
        let out = state.edge_step(new, &mut derive_stream(4, 0));
        assert_eq!(out.fill_count, 3);
        assert_eq!(out.targets.len(), 3);
    }

    #[test]
    fn draw_m_follows_law() {
        let p = ModelParams::new(0.3, 1.0, 0.3, 1.0, 2, vec![0.0, 0.25, 0.75], 6).unwrap();
        let state = GraphState::init(&p, &mut derive_stream(5, 0));
        let mut rng = derive_stream(5, 1);
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            counts[state.draw_m(&mut rng)] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        assert!((counts[2] as f64 - 10_000.0).abs() < 500.0, "{counts:?}");
    }

    #[test]
    fn step_invariants_hold() {
        let p = params();
        let mut rng = derive_stream(p.seed, 0);
        let mut state = GraphState::init(&p, &mut rng);
        for _ in 0..3000 {
            let before_e = state.total_edges();
            let before_top = state.top_degrees(2);
            let report = state.step(&mut rng);
            assert_eq!(state.total_edges(), before_e + report.edges_added());
            assert_eq!(report.edge_step_targets.len(), report.m_n);
            assert!(!report.edge_step_targets.contains(&report.edge_source));
            let mut t = report.edge_step_targets.clone();
            t.sort_unstable();
            t.dedup();
            assert_eq!(t.len(), report.m_n);
            let after_top = state.top_degrees(2);
            if before_top[0] > before_top[1] {
                assert!(after_top[0] - before_top[0] <= 2);
            }
        }
        assert_eq!(state.vertex_count(), 5 + 3000);
        assert!(state.registry().audit().is_ok());
        let rebuilt = DegreeClassRegistry::from_degrees(state.degrees());
        assert_eq!(rebuilt.canonical(), state.registry().canonical());
    }

    #[test]
    fn snapshot_replays_bit_for_bit() {
        let p = params();
        let mut rng = derive_stream(p.seed, 0);
        let mut state = GraphState::init(&p, &mut rng);
        for _ in 0..500 {
            state.step(&mut rng);
        }
        let json = serde_json::to_string(&state.snapshot()).unwrap();
        let mut replay_rng = rng.clone();
        let expected: Vec<StepReport> = (0..50).map(|_| state.step(&mut rng)).collect();
        let mut restored = GraphState::from_snapshot(serde_json::from_str(&json).unwrap());
        let replayed: Vec<StepReport> = (0..50).map(|_| restored.step(&mut replay_rng)).collect();
        assert_eq!(expected, replayed);
    }

    #[test]
    fn run_emits_checkpoints() {
        let p = params().with_steps(0);
        let series = run(&p, &mut []).unwrap();
        assert_eq!(series.rows.len(), 1);
        assert_eq!(series.rows[0], TimeSeriesRow { n: 0, e: 0, top: vec![0, 0, 0] });

        let p = params().with_steps(1050).with_checkpoint_stride(100);
        let series = run(&p, &mut []).unwrap();
        let ns: Vec<u64> = series.rows.iter().map(|r| r.n).collect();
        assert_eq!(ns.len(), 12);
        assert_eq!(*ns.last().unwrap(), 1050);
        for row in &series.rows {
            assert_eq!(row.top.len(), 3);
            assert!(row.top.windows(2).all(|w| w[0] >= w[1]));
        }
        assert_eq!(series, run(&p, &mut []).unwrap());
    }

    #[test]
    fn edge_count_matches_reports() {
        struct Tally(u64, u64);
        impl Observer for Tally {
            fn on_step(&mut self, state: &GraphState, report: &StepReport) -> io::Result<()> {
                self.0 += report.edges_added();
                assert_eq!(self.0, state.total_edges());
                Ok(())
            }
            fn on_checkpoint(&mut self, row: &TimeSeriesRow) -> io::Result<()> {
                assert_eq!(row.e, self.0);
                self.1 += 1;
                Ok(())
            }
        }
        let p = params().with_steps(400).with_checkpoint_stride(50);
        let mut tally = Tally(0, 0);
        run(&p, &mut [&mut tally]).unwrap();
        assert_eq!(tally.1, 9);
    }
}
