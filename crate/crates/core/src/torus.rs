//! Ball queries on the circle `[0, 1)`.
//!
//! Vertex `i` owns the open ball of radius `min(1, (a * deg_i + b) / n') / 2`
//! around its position. A query returns every vertex whose ball contains
//! the query point.
//!
//! Vertices live in one of two tiers. Heavy vertices (radius above `delta`)
//! are scanned exhaustively. Light vertices are kept in one position-ordered
//! set per dyadic degree level, and each level is range-scanned over a
//! window sized by the largest radius that level can have. Promotion to the
//! heavy tier happens eagerly on insert and degree bumps; demotion is lazy
//! and only done by [`TorusIndex::demote`].

use std::collections::BTreeSet;

use crate::registry::{level_max_degree, level_of};

pub const DEFAULT_DELTA: f64 = 0.01;

/// Distance on the unit circle.
pub fn torus_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// Ball radius of a vertex with in-degree `degree` when the graph has
/// `n_prime` vertices.
pub fn ball_radius(a: f64, b: f64, degree: u32, n_prime: u64) -> f64 {
    ((a * degree as f64 + b) / n_prime as f64).min(1.0) / 2.0
}

/// Reference answer by full scan.
pub fn naive_query(positions: &[f64], degrees: &[u32], x: f64, n_prime: u64, a: f64, b: f64) -> Vec<usize> {
    positions
        .iter()
        .zip(degrees)
        .enumerate()
        .filter(|(_, (&p, &g))| torus_dist(x, p) < ball_radius(a, b, g, n_prime))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tier {
    Light(usize),
    Heavy(usize),
}

type Key = (u64, usize);

fn key(position: f64, id: usize) -> Key {
    // Non-negative floats order like their bit patterns.
    (position.to_bits(), id)
}

#[derive(Clone, Debug)]
pub struct TorusIndex {
    a: f64,
    b: f64,
    delta: f64,
    positions: Vec<f64>,
    degrees: Vec<u32>,
    tier: Vec<Option<Tier>>,
    light: Vec<BTreeSet<Key>>,
    heavy: Vec<usize>,
}

impl TorusIndex {
    pub fn new(a: f64, b: f64, delta: f64) -> Self {
        assert!(delta > 0.0, "delta must be positive");
        TorusIndex {
            a,
            b,
            delta,
            positions: Vec::new(),
            degrees: Vec::new(),
            tier: Vec::new(),
            light: Vec::new(),
            heavy: Vec::new(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.tier.iter().filter(|t| t.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.heavy.is_empty() && self.light.iter().all(BTreeSet::is_empty)
    }

    pub fn heavy(&self) -> &[usize] {
        &self.heavy
    }

    pub fn is_heavy(&self, id: usize) -> bool {
        matches!(self.tier.get(id), Some(Some(Tier::Heavy(_))))
    }

    /// Registers a vertex with in-degree 0.
    ///
    /// Panics if `id` is already present.
    pub fn insert(&mut self, id: usize, position: f64, n_prime: u64) {
        assert!((0.0..1.0).contains(&position), "position {position} outside [0, 1)");
        if self.tier.len() <= id {
            self.tier.resize(id + 1, None);
            self.positions.resize(id + 1, 0.0);
            self.degrees.resize(id + 1, 0);
        }
        assert!(self.tier[id].is_none(), "vertex {id} inserted twice");
        self.positions[id] = position;
        self.degrees[id] = 0;
        self.place(id, n_prime);
    }

    /// Records a new in-degree for `id`.
    pub fn bump_degree(&mut self, id: usize, new_degree: u32, n_prime: u64) {
        let old = self.degrees[id];
        self.degrees[id] = new_degree;
        match self.tier[id].expect("bump of unknown vertex") {
            Tier::Heavy(_) => {}
            Tier::Light(level) => {
                if self.radius(new_degree, n_prime) > self.delta || level != level_of(new_degree) {
                    debug_assert_eq!(level, level_of(old));
                    self.unplace(id);
                    self.place(id, n_prime);
                }
            }
        }
    }

    /// Moves heavy vertices whose radius has shrunk to at most `delta` back
    /// to the light tier.
    pub fn demote(&mut self, n_prime: u64) {
        let stale: Vec<usize> = self
            .heavy
            .iter()
            .copied()
            .filter(|&id| self.radius(self.degrees[id], n_prime) <= self.delta)
            .collect();
        for id in stale {
            self.unplace(id);
            self.place(id, n_prime);
        }
    }

    /// Ids whose ball contains `x`, in increasing order.
    pub fn query_balls(&self, x: f64, n_prime: u64) -> Vec<usize> {
        let mut out = Vec::new();
        self.query_counted(x, n_prime, &mut out);
        out
    }

    /// Like [`Self::query_balls`], appending to `out`; returns the number of
    /// vertices examined.
    pub fn query_counted(&self, x: f64, n_prime: u64, out: &mut Vec<usize>) -> usize {
        let start = out.len();
        let mut touched = 0;
        let mut check = |id: usize, out: &mut Vec<usize>| {
            touched += 1;
            if torus_dist(x, self.positions[id]) < self.radius(self.degrees[id], n_prime) {
                out.push(id);
            }
        };
        for &id in &self.heavy {
            check(id, out);
        }
        for (level, set) in self.light.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let w = self.radius(level_max_degree(level), n_prime).min(self.delta);
            if w >= 0.5 {
                set.iter().for_each(|&(_, id)| check(id, out));
                continue;
            }
            let (lo, hi) = (x - w, x + w);
            let mut scan = |lo: f64, hi: f64, out: &mut Vec<usize>| {
                let lo = lo.max(0.0);
                for &(_, id) in set.range(key(lo, 0)..=key(hi, usize::MAX)) {
                    check(id, out);
                }
            };
            if lo < 0.0 {
                scan(lo + 1.0, 1.0, out);
                scan(0.0, hi, out);
            } else if hi >= 1.0 {
                scan(lo, 1.0, out);
                scan(0.0, hi - 1.0, out);
            } else {
                scan(lo, hi, out);
            }
        }
        out[start..].sort_unstable();
        touched
    }

    fn radius(&self, degree: u32, n_prime: u64) -> f64 {
        ball_radius(self.a, self.b, degree, n_prime)
    }

    fn place(&mut self, id: usize, n_prime: u64) {
        let g = self.degrees[id];
        if self.radius(g, n_prime) > self.delta {
            self.tier[id] = Some(Tier::Heavy(self.heavy.len()));
            self.heavy.push(id);
        } else {
            let level = level_of(g);
            if self.light.len() <= level {
                self.light.resize_with(level + 1, BTreeSet::new);
            }
            self.light[level].insert(key(self.positions[id], id));
            self.tier[id] = Some(Tier::Light(level));
        }
    }

    fn unplace(&mut self, id: usize) {
        match self.tier[id].take().expect("vertex is placed") {
            Tier::Light(level) => {
                self.light[level].remove(&key(self.positions[id], id));
            }
            Tier::Heavy(slot) => {
                self.heavy.swap_remove(slot);
                if let Some(&moved) = self.heavy.get(slot) {
                    self.tier[moved] = Some(Tier::Heavy(slot));
                }
            }
        }
    }
}
