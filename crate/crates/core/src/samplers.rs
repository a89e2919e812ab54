//! Samplers for the edge step.
//!
//! Every candidate `v` enters each of the `d` preferential samples
//! independently with probability `p(deg v)`, so it enters their union with
//! probability `1 - (1 - p)^d`. Two exact routes produce the union:
//! [`class_union_sample`] draws one binomial per degree class, while
//! [`union_top`] only looks for the highest-degree members and thins whole
//! dyadic levels, which keeps the per-step cost at O(levels + output).
//! [`two_stage_oracle`] is the literal sample-then-resample procedure and
//! exists to check the fast path.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::Distribution;

use crate::registry::DegreeClassRegistry;

/// Above this mean the binomial sampler hands over to BTPE.
const INVERSION_MAX_MEAN: f64 = 30.0;

/// Exact `Binomial(c, p)` variate.
///
/// Small means use sequential inversion, whose expected cost is
/// `O(1 + c * p)`; this is the common case in the growth process.
pub fn binomial<R: Rng + ?Sized>(c: u64, p: f64, rng: &mut R) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p), "probability {p}");
    if c == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return c;
    }
    if p > 0.5 {
        return c - binomial(c, 1.0 - p, rng);
    }
    let mean = c as f64 * p;
    if mean > INVERSION_MAX_MEAN {
        let dist = rand_distr::Binomial::new(c, p).expect("valid binomial parameters");
        return dist.sample(rng);
    }
    let ratio = p / (1.0 - p);
    let mut pmf = (c as f64 * (-p).ln_1p()).exp();
    let mut u: f64 = rng.random();
    let mut k = 0u64;
    while u >= pmf {
        u -= pmf;
        k += 1;
        if k >= c {
            return c;
        }
        pmf *= ratio * (c - k + 1) as f64 / k as f64;
    }
    k
}

/// Probability of entering at least one of `d` samples.
pub fn union_probability(p: f64, d: u32) -> f64 {
    let p = p.clamp(0.0, 1.0);
    1.0 - (1.0 - p).powi(d as i32)
}

/// Distinct uniform positions `0..len`, `amount` of them.
fn distinct_positions<R: Rng + ?Sized>(len: usize, amount: usize, rng: &mut R) -> Vec<usize> {
    if amount == 0 {
        return Vec::new();
    }
    if amount == len {
        return (0..len).collect();
    }
    index::sample(rng, len, amount).into_vec()
}

/// Union of `d` independent Bernoulli-inclusion samples, computed class by
/// class.
///
/// Vertices in `exclusions` never appear. Vertices listed in
/// `extra_zero_degree` are treated as degree-0 candidates that are not in
/// the registry. The result is ordered by degree, highest first.
pub fn class_union_sample<R, P>(
    registry: &DegreeClassRegistry,
    exclusions: &[usize],
    extra_zero_degree: &[usize],
    p_of_degree: P,
    d: u32,
    rng: &mut R,
) -> Vec<usize>
where
    R: Rng + ?Sized,
    P: Fn(u32) -> f64,
{
    let mut out = Vec::new();
    for (g, bucket) in registry.classes_desc() {
        let q = union_probability(p_of_degree(g), d);
        let mut excluded_slots: Vec<usize> = bucket
            .iter()
            .enumerate()
            .filter(|(_, id)| exclusions.contains(id))
            .map(|(slot, _)| slot)
            .collect();
        excluded_slots.sort_unstable();
        let c = bucket.len() - excluded_slots.len();
        let take = binomial(c as u64, q, rng) as usize;
        for mut pos in distinct_positions(c, take, rng) {
            // Map a position among non-excluded members to a bucket slot.
            for &slot in &excluded_slots {
                if pos >= slot {
                    pos += 1;
                }
            }
            out.push(bucket[pos]);
        }
        if g == 0 {
            push_extra(extra_zero_degree, exclusions, q, rng, &mut out);
        }
    }
    if registry.class(0).is_empty() {
        let q = union_probability(p_of_degree(0), d);
        push_extra(extra_zero_degree, exclusions, q, rng, &mut out);
    }
    out
}

fn push_extra<R: Rng + ?Sized>(
    extra: &[usize],
    exclusions: &[usize],
    q: f64,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    for &id in extra {
        if !exclusions.contains(&id) && rng.random::<f64>() < q {
            out.push(id);
        }
    }
}

/// The `m` highest-degree members of the union of `d` samples, ties broken
/// uniformly. May return fewer than `m` ids when the union is small.
///
/// Levels are scanned from the top. Within a level every member is proposed
/// at the level's largest union probability and kept with probability
/// `q(deg) / q_max`, which is an exact Bernoulli(`q(deg)`) draw per vertex.
/// Scanning stops after the first level that brings the count to `m`.
pub fn union_top<R, P>(
    registry: &DegreeClassRegistry,
    exclude: usize,
    m: usize,
    p_of_degree: P,
    d: u32,
    rng: &mut R,
) -> Vec<usize>
where
    R: Rng + ?Sized,
    P: Fn(u32) -> f64,
{
    let mut found: Vec<(u32, usize)> = Vec::new();
    for level in (0..registry.level_count()).rev() {
        let members = registry.level(level);
        let Some(top) = registry.level_top_degree(level) else {
            continue;
        };
        let q_max = union_probability(p_of_degree(top), d);
        if q_max <= 0.0 {
            continue;
        }
        let take = binomial(members.len() as u64, q_max, rng) as usize;
        for pos in distinct_positions(members.len(), take, rng) {
            let id = members[pos];
            if id == exclude {
                continue;
            }
            let g = registry.degree(id);
            let q = union_probability(p_of_degree(g), d);
            if q >= q_max || rng.random::<f64>() * q_max < q {
                found.push((g, id));
            }
        }
        if found.len() >= m {
            break;
        }
    }
    rank_and_truncate(found, m, rng)
}

/// Sorts by degree descending with uniformly random order among ties and
/// keeps the first `m`.
fn rank_and_truncate<R: Rng + ?Sized>(mut found: Vec<(u32, usize)>, m: usize, rng: &mut R) -> Vec<usize> {
    found.shuffle(rng);
    found.sort_by_key(|x| std::cmp::Reverse(x.0));
    found.truncate(m);
    found.into_iter().map(|(_, id)| id).collect()
}

/// Completes `chosen` to `m` distinct ids drawn uniformly from `0..total`,
/// skipping `exclude` and ids already chosen. Returns how many were added.
pub fn fill_uniform<R: Rng + ?Sized>(
    total: usize,
    exclude: usize,
    chosen: &mut Vec<usize>,
    m: usize,
    rng: &mut R,
) -> usize {
    assert!(total > m, "cannot pick {m} distinct targets among {total} vertices minus the source");
    let before = chosen.len();
    while chosen.len() < m {
        let v = rng.random_range(0..total);
        if v != exclude && !chosen.contains(&v) {
            chosen.push(v);
        }
    }
    chosen.len() - before
}

/// Literal two-stage edge step, O(N * d) per call.
///
/// Draws `d` independent samples over all vertices except `source`, keeps
/// the `m` highest-degree members of each (ties at random) in a secondary
/// sample, then takes the `m` highest-degree distinct members of the
/// secondary sample. When fewer than `m` distinct vertices were found, the
/// rest come from [`fill_uniform`]. Returns `(targets, fill_count)`.
pub fn two_stage_oracle<R, P>(
    degrees: &[u32],
    source: usize,
    m: usize,
    p_of_degree: P,
    d: u32,
    rng: &mut R,
) -> (Vec<usize>, usize)
where
    R: Rng + ?Sized,
    P: Fn(u32) -> f64,
{
    let mut secondary: Vec<usize> = Vec::new();
    for _ in 0..d {
        let sample: Vec<(u32, usize)> = degrees
            .iter()
            .enumerate()
            .filter(|&(v, &g)| v != source && rng.random::<f64>() < p_of_degree(g))
            .map(|(v, &g)| (g, v))
            .collect();
        secondary.extend(rank_and_truncate(sample, m, rng));
    }
    secondary.sort_unstable();
    secondary.dedup();
    let ranked: Vec<(u32, usize)> = secondary.into_iter().map(|v| (degrees[v], v)).collect();
    let mut targets = rank_and_truncate(ranked, m, rng);
    let filled = fill_uniform(degrees.len(), source, &mut targets, m, rng);
    (targets, filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn binomial_degenerate_cases() {
        let mut rng = derive_stream(1, 0);
        for c in [0u64, 1, 7, 1000] {
            assert_eq!(binomial(c, 0.0, &mut rng), 0);
            assert_eq!(binomial(c, 1.0, &mut rng), c);
        }
    }

    #[test]
    fn binomial_mean_c20_p03() {
        let mut rng = derive_stream(2, 0);
        let draws = 1_000_000;
        let sum: u64 = (0..draws).map(|_| binomial(20, 0.3, &mut rng)).sum();
        let mean = sum as f64 / draws as f64;
        // sd of the mean is sqrt(4.2 / 1e6) ~ 0.002
        assert!((mean - 6.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn binomial_large_mean_and_flip() {
        let mut rng = derive_stream(3, 0);
        let draws = 20_000;
        for (c, p) in [(10_000u64, 0.05), (50, 0.9)] {
            let sum: u64 = (0..draws).map(|_| binomial(c, p, &mut rng)).sum();
            let mean = sum as f64 / draws as f64;
            let sd = (c as f64 * p * (1.0 - p) / draws as f64).sqrt();
            assert!((mean - c as f64 * p).abs() < 5.0 * sd, "c={c} p={p} mean={mean}");
        }
    }

    #[test]
    fn union_probability_values() {
        assert_eq!(union_probability(0.0, 3), 0.0);
        assert_eq!(union_probability(1.0, 3), 1.0);
        assert!((union_probability(0.3, 2) - 0.51).abs() < 1e-15);
    }

    #[test]
    fn class_union_extremes() {
        let reg = DegreeClassRegistry::from_degrees(&[4, 0, 2, 2, 1]);
        let mut rng = derive_stream(4, 0);
        assert!(class_union_sample(&reg, &[], &[], |_| 0.0, 2, &mut rng).is_empty());
        let all = class_union_sample(&reg, &[3], &[5], |_| 1.0, 2, &mut rng);
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 4, 5]);
        let degs: Vec<u32> = all.iter().map(|&v| if v == 5 { 0 } else { reg.degree(v) }).collect();
        assert!(degs.windows(2).all(|w| w[0] >= w[1]), "{degs:?}");
    }

    #[test]
    fn union_top_takes_highest_when_everything_is_included() {
        let reg = DegreeClassRegistry::from_degrees(&[4, 0, 9, 2, 7, 1]);
        let mut rng = derive_stream(5, 0);
        assert_eq!(union_top(&reg, 2, 2, |_| 1.0, 1, &mut rng), vec![4, 0]);
        assert_eq!(union_top(&reg, 0, 3, |_| 1.0, 1, &mut rng), vec![2, 4, 3]);
        assert!(union_top(&reg, 0, 3, |_| 0.0, 1, &mut rng).is_empty());
    }

    #[test]
    fn union_top_breaks_ties_uniformly() {
        let reg = DegreeClassRegistry::from_degrees(&[3, 3, 3, 0]);
        let mut rng = derive_stream(6, 0);
        let mut hits = [0u32; 3];
        for _ in 0..30_000 {
            let t = union_top(&reg, 3, 1, |_| 1.0, 1, &mut rng);
            hits[t[0]] += 1;
        }
        for h in hits {
            assert!((h as f64 - 10_000.0).abs() < 400.0, "{hits:?}");
        }
    }

    #[test]
    fn fill_skips_source_and_chosen() {
        let mut rng = derive_stream(7, 0);
        for _ in 0..200 {
            let mut chosen = vec![1];
            let added = fill_uniform(4, 0, &mut chosen, 3, &mut rng);
            assert_eq!(added, 2);
            chosen.sort_unstable();
            assert_eq!(chosen, vec![1, 2, 3]);
        }
    }

    #[test]
    fn oracle_fills_when_samples_are_empty() {
        let mut rng = derive_stream(8, 0);
        let degrees = [0u32; 6];
        let (targets, filled) = two_stage_oracle(&degrees, 0, 3, |_| 0.0, 2, &mut rng);
        assert_eq!(filled, 3);
        assert_eq!(targets.len(), 3);
        assert!(!targets.contains(&0));
    }

    #[test]
    fn oracle_all_included_is_global_top() {
        let mut rng = derive_stream(9, 0);
        let degrees = [5u32, 1, 8, 3, 0];
        let (targets, filled) = two_stage_oracle(&degrees, 2, 2, |_| 1.0, 3, &mut rng);
        assert_eq!(filled, 0);
        assert_eq!(targets, vec![0, 3]);
    }
}
