//! Vertices grouped by exact in-degree.
//!
//! Each degree value owns a bucket of vertex ids with O(1) swap-remove.
//! Buckets are additionally grouped into dyadic levels (level 0 holds
//! degree 0, level `l >= 1` holds degrees `2^(l-1) ..= 2^l - 1`) so that the
//! edge-step sampler can thin a whole level at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Dyadic level of a degree.
pub fn level_of(degree: u32) -> usize {
    (u32::BITS - degree.leading_zeros()) as usize
}

/// Largest degree that lands in `level`.
pub fn level_max_degree(level: usize) -> u32 {
    if level == 0 {
        0
    } else if level >= 32 {
        u32::MAX
    } else {
        (1u32 << level) - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DegreeClassRegistry {
    classes: BTreeMap<u32, Vec<usize>>,
    degree: Vec<u32>,
    class_slot: Vec<usize>,
    levels: Vec<Vec<usize>>,
    level_slot: Vec<usize>,
    total_edges: u64,
}

impl DegreeClassRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a registry from a degree sequence indexed by vertex id.
    pub fn from_degrees(degrees: &[u32]) -> Self {
        let mut reg = Self::new();
        for &g in degrees {
            reg.push(g);
        }
        reg
    }

    /// Appends a vertex with the next id and the given degree; returns the id.
    pub fn push(&mut self, degree: u32) -> usize {
        let id = self.degree.len();
        self.degree.push(degree);
        self.class_slot.push(0);
        self.level_slot.push(0);
        self.attach(id, degree);
        self.total_edges += degree as u64;
        id
    }

    /// Adds one to the degree of `id` and returns the new degree.
    pub fn increment(&mut self, id: usize) -> u32 {
        let old = self.degree[id];
        let new = old + 1;
        self.detach_class(id, old);
        self.degree[id] = new;
        self.attach_class(id, new);
        let (lo, hi) = (level_of(old), level_of(new));
        if lo != hi {
            self.detach_level(id, lo);
            self.attach_level(id, hi);
        }
        self.total_edges += 1;
        new
    }

    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    pub fn degree(&self, id: usize) -> u32 {
        self.degree[id]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    /// Sum of all in-degrees.
    pub fn total_edges(&self) -> u64 {
        self.total_edges
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.classes.keys().next_back().copied()
    }

    pub fn distinct_degrees(&self) -> usize {
        self.classes.len()
    }

    /// Buckets in strictly decreasing degree order.
    pub fn classes_desc(&self) -> impl Iterator<Item = (u32, &[usize])> {
        self.classes.iter().rev().map(|(&g, v)| (g, v.as_slice()))
    }

    pub fn class(&self, degree: u32) -> &[usize] {
        self.classes.get(&degree).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Members of one dyadic level, in arbitrary order.
    pub fn level(&self, level: usize) -> &[usize] {
        self.levels.get(level).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Largest degree actually present in `level`.
    pub fn level_top_degree(&self, level: usize) -> Option<u32> {
        let lo = if level == 0 { 0 } else { 1u32 << (level - 1) };
        self.classes
            .range(lo..=level_max_degree(level))
            .next_back()
            .map(|(&g, _)| g)
    }

    /// The `k` largest in-degrees, padded with zeros.
    pub fn top_degrees(&self, k: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(k);
        'outer: for (g, bucket) in self.classes_desc() {
            for _ in 0..bucket.len() {
                if out.len() == k {
                    break 'outer;
                }
                out.push(g as u64);
            }
        }
        out.resize(k, 0);
        out
    }

    /// Canonical form used to compare two registries: sorted bucket contents.
    pub fn canonical(&self) -> BTreeMap<u32, Vec<usize>> {
        self.classes
            .iter()
            .map(|(&g, v)| {
                let mut v = v.clone();
                v.sort_unstable();
                (g, v)
            })
            .collect()
    }

    /// Checks every internal cross-reference; returns a description of the
    /// first inconsistency.
    pub fn audit(&self) -> Result<(), String> {
        let mut sum = 0u64;
        let mut seen = 0usize;
        for (&g, bucket) in &self.classes {
            if bucket.is_empty() {
                return Err(format!("empty bucket for degree {g}"));
            }
            for (slot, &id) in bucket.iter().enumerate() {
                if self.degree[id] != g || self.class_slot[id] != slot {
                    return Err(format!("vertex {id} misfiled in degree bucket {g}"));
                }
            }
            sum += g as u64 * bucket.len() as u64;
            seen += bucket.len();
        }
        if seen != self.degree.len() {
            return Err(format!("{seen} bucketed vertices, {} known", self.degree.len()));
        }
        if sum != self.total_edges {
            return Err(format!("bucket edge sum {sum} != cached {}", self.total_edges));
        }
        let mut level_seen = 0usize;
        for (l, members) in self.levels.iter().enumerate() {
            for (slot, &id) in members.iter().enumerate() {
                if level_of(self.degree[id]) != l || self.level_slot[id] != slot {
                    return Err(format!("vertex {id} misfiled in level {l}"));
                }
            }
            level_seen += members.len();
        }
        if level_seen != self.degree.len() {
            return Err(format!("{level_seen} levelled vertices, {} known", self.degree.len()));
        }
        Ok(())
    }

    fn attach(&mut self, id: usize, degree: u32) {
        self.attach_class(id, degree);
        self.attach_level(id, level_of(degree));
    }

    fn attach_class(&mut self, id: usize, degree: u32) {
        let bucket = self.classes.entry(degree).or_default();
        self.class_slot[id] = bucket.len();
        bucket.push(id);
    }

    fn detach_class(&mut self, id: usize, degree: u32) {
        let bucket = self.classes.get_mut(&degree).expect("vertex degree has a bucket");
        let slot = self.class_slot[id];
        bucket.swap_remove(slot);
        if let Some(&moved) = bucket.get(slot) {
            self.class_slot[moved] = slot;
        }
        if bucket.is_empty() {
            self.classes.remove(&degree);
        }
    }

    fn attach_level(&mut self, id: usize, level: usize) {
        if self.levels.len() <= level {
            self.levels.resize_with(level + 1, Vec::new);
        }
        self.level_slot[id] = self.levels[level].len();
        self.levels[level].push(id);
    }

    fn detach_level(&mut self, id: usize, level: usize) {
        let members = &mut self.levels[level];
        let slot = self.level_slot[id];
        members.swap_remove(slot);
        if let Some(&moved) = members.get(slot) {
            self.level_slot[moved] = slot;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn levels_are_dyadic() {
        assert_eq!(level_of(0), 0);
        assert_eq!(level_of(1), 1);
        assert_eq!(level_of(2), 2);
        assert_eq!(level_of(3), 2);
        assert_eq!(level_of(4), 3);
        assert_eq!(level_max_degree(0), 0);
        assert_eq!(level_max_degree(1), 1);
        assert_eq!(level_max_degree(3), 7);
        for g in 0..1000u32 {
            assert!(g <= level_max_degree(level_of(g)));
        }
    }

    #[test]
    fn top_degrees_pads_and_orders() {
        let reg = DegreeClassRegistry::from_degrees(&[3, 0, 5, 3]);
        assert_eq!(reg.top_degrees(3), vec![5, 3, 3]);
        assert_eq!(reg.top_degrees(6), vec![5, 3, 3, 0, 0, 0]);
        assert_eq!(reg.total_edges(), 11);
        assert_eq!(reg.max_degree(), Some(5));
        assert_eq!(reg.level_top_degree(2), Some(3));
        assert_eq!(reg.level_top_degree(1), None);
    }

    #[test]
    fn classes_iterate_descending() {
        let reg = DegreeClassRegistry::from_degrees(&[1, 4, 2, 4, 0]);
        let order: Vec<u32> = reg.classes_desc().map(|(g, _)| g).collect();
        assert_eq!(order, vec![4, 2, 1, 0]);
    }

    proptest! {
        #[test]
        fn incremental_matches_rebuild(
            init in proptest::collection::vec(0u32..6, 1..40),
            bumps in proptest::collection::vec(any::<prop::sample::Index>(), 0..300),
        ) {
            let mut reg = DegreeClassRegistry::from_degrees(&init);
            let mut degrees = init.clone();
            for ix in bumps {
                let id = ix.index(degrees.len());
                degrees[id] += 1;
                prop_assert_eq!(reg.increment(id), degrees[id]);
            }
            prop_assert!(reg.audit().is_ok(), "{:?}", reg.audit());
            let rebuilt = DegreeClassRegistry::from_degrees(&degrees);
            prop_assert_eq!(reg.canonical(), rebuilt.canonical());
            prop_assert_eq!(reg.total_edges(), degrees.iter().map(|&g| g as u64).sum::<u64>());
        }
    }
}
