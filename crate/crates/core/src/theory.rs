//! Limit theory for the normalized maximal degrees.
//!
//! With `h(x) = 1 - (1 - alpha x)^d` the probability that a vertex of
//! normalized degree `x` enters some sample, the `k`-th largest degree
//! `M_k(n)` gains an edge-step edge when it is sampled and at most
//! `m - 1` of the `k - 1` larger ones are. The latter probability is a
//! Poisson-binomial lower tail `Q_{k,m}`; averaging over the law of `m`
//! gives `Q_k`. The expected increment of `M_k(n)` is then
//!
//! ```text
//! g_k(x_1, .., x_k) = a x_k + h(x_k) Q_k(x_1, .., x_{k-1})
//! ```
//!
//! and the limits `x_k*` of `M_k(n) / n` are the positive roots of
//! `f_k = g_k - x_k`, solved rank by rank.

use serde::{Deserialize, Serialize};

use crate::error::TheoryError;
use crate::params::ModelParams;

/// Tolerance for deciding `a + d alpha = 1`.
pub const CRITICAL_TOL: f64 = 1e-12;
/// Below this distance from criticality the classification is flagged as
/// numerically delicate.
pub const DELICATE_TOL: f64 = 1e-9;
/// Absolute bracket width at which bisection stops.
pub const ROOT_TOL: f64 = 1e-12;
pub const DEFAULT_K_MAX: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryResult {
    pub regime: Regime,
    /// `a + d alpha`.
    pub exponent: f64,
    /// `2 / (d alpha)^2`.
    pub critical_constant: f64,
    pub x_star: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub r_m: usize,
    /// True when solving stopped at `k_max` rather than at a rank without
    /// a positive root.
    pub k_max_reached: bool,
}

/// Cached `h(x_1*), h(x_2*), ...`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QEvaluation {
    pub h_values: Vec<f64>,
}

/// `1 - (max(0, 1 - alpha x))^d`, i.e. `h` with the base clamped at 0.
pub fn h_fn(x: f64, alpha: f64, d: u32) -> Result<f64, TheoryError> {
    if x < 0.0 || x.is_nan() {
        return Err(TheoryError::NegativeArgument(x));
    }
    Ok(h_unchecked(x, alpha, d))
}

fn h_unchecked(x: f64, alpha: f64, d: u32) -> f64 {
    1.0 - (1.0 - alpha * x).max(0.0).powi(d as i32)
}

fn check_probabilities(values: &[f64]) -> Result<(), TheoryError> {
    match values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(TheoryError::BadProbability(p)),
        None => Ok(()),
    }
}

/// `Q_{i,r}`: probability that at most `r - 1` of the first `i - 1`
/// independent events (probabilities `h_values`) occur.
pub fn q_poly(i: usize, r: usize, h_values: &[f64]) -> Result<f64, TheoryError> {
    assert!(i >= 1 && r >= 1, "ranks start at 1");
    assert!(h_values.len() >= i - 1, "need {} probabilities, got {}", i - 1, h_values.len());
    let probs = &h_values[..i - 1];
    check_probabilities(probs)?;
    if i <= r {
        return Ok(1.0);
    }
    // dist[j] = Pr(exactly j occurred), truncated at j = r - 1
    let mut dist = vec![0.0; r];
    dist[0] = 1.0;
    for &p in probs {
        for j in (0..r).rev() {
            let carry = if j > 0 { dist[j - 1] * p } else { 0.0 };
            dist[j] = dist[j] * (1.0 - p) + carry;
        }
    }
    Ok(dist.iter().sum())
}

/// `Q_i = E Q_{i,m}` under `m_dist` (`m_dist[r - 1] = Pr(m = r)`).
pub fn q_expected(i: usize, m_dist: &[f64], h_values: &[f64]) -> Result<f64, TheoryError> {
    let mut total = 0.0;
    for (idx, &w) in m_dist.iter().enumerate() {
        if w > 0.0 {
            total += w * q_poly(i, idx + 1, h_values)?;
        }
    }
    Ok(total)
}

/// `f_k(x) = (a - 1) x + h(x) Q_k`, with `Q_k` taken from the first
/// `k - 1` entries of `prefix`.
pub fn f_k(x: f64, prefix: &QEvaluation, k: usize, params: &ModelParams) -> Result<f64, TheoryError> {
    let q = q_expected(k, &params.m_dist, &prefix.h_values)?;
    Ok(f_with_q(x, q, params))
}

fn f_with_q(x: f64, q: f64, params: &ModelParams) -> f64 {
    (params.a - 1.0) * x + h_unchecked(x, params.alpha, params.d) * q
}

/// `g_k(z_1, .., z_k)`: predicted mean increment of `M_k(n)` when the
/// tracked ranks are distinct and `z_i = M_i(n) / n`.
pub fn drift(k: usize, z: &[f64], params: &ModelParams) -> Result<f64, TheoryError> {
    assert!(k >= 1 && z.len() >= k, "need {k} normalized degrees");
    if let Some(&bad) = z[..k].iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(TheoryError::NegativeArgument(bad));
    }
    let h_values: Vec<f64> = z[..k - 1].iter().map(|&v| h_unchecked(v, params.alpha, params.d)).collect();
    let q = q_expected(k, &params.m_dist, &h_values)?;
    let zk = z[k - 1];
    Ok(params.a * zk + h_unchecked(zk, params.alpha, params.d) * q)
}

/// Positive root of a concave `f` with `f(0) = 0`, `f'(0) > 0` and
/// `f(hi) < 0`.
fn bisect_positive_root(f: impl Fn(f64) -> f64, hi: f64, rank: usize) -> Result<f64, TheoryError> {
    let mut hi = hi;
    if f(hi) >= 0.0 {
        return Err(TheoryError::NoConvergence { rank });
    }
    let mut lo = hi / 2.0;
    let mut halvings = 0;
    while f(lo) <= 0.0 {
        hi = lo;
        lo /= 2.0;
        halvings += 1;
        if halvings > 1100 {
            return Err(TheoryError::NoConvergence { rank });
        }
    }
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(TheoryError::NoConvergence { rank })
}

/// Solves `f_1 = 0, f_2 = 0, ...` in sequence for positive roots, stopping
/// at the first rank whose slope at 0 is not positive, or after `k_max`.
pub fn solve_fixed_point(params: &ModelParams, k_max: usize) -> Result<TheoryResult, TheoryError> {
    assert!(k_max >= 1, "k_max must be at least 1");
    let mut prefix = QEvaluation::default();
    let mut x_star = Vec::new();
    let upper = 1.0 / (1.0 - params.a) + 1.0;
    let dalpha = params.d as f64 * params.alpha;
    for k in 1..=k_max {
        let q = q_expected(k, &params.m_dist, &prefix.h_values)?;
        let slope = params.a - 1.0 + dalpha * q;
        if slope <= 0.0 {
            break;
        }
        let root = bisect_positive_root(|x| f_with_q(x, q, params), upper, k)?;
        x_star.push(root);
        prefix.h_values.push(h_unchecked(root, params.alpha, params.d));
    }
    let k = x_star.len();
    Ok(TheoryResult {
        regime: regime_of(params),
        exponent: params.exponent(),
        critical_constant: critical_constant(params),
        x_star,
        k,
        r_m: params.r_m(),
        k_max_reached: k == k_max,
    })
}

pub fn critical_constant(params: &ModelParams) -> f64 {
    let dalpha = params.d as f64 * params.alpha;
    2.0 / (dalpha * dalpha)
}

pub fn regime_of(params: &ModelParams) -> Regime {
    let gap = params.exponent() - 1.0;
    if gap.abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if gap < 0.0 {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// True when `a + d alpha` is within [`DELICATE_TOL`] of 1.
pub fn is_delicate(params: &ModelParams) -> bool {
    (params.exponent() - 1.0).abs() < DELICATE_TOL
}

/// Regime, exponent and constants; the fixed points are only solved in the
/// supercritical regime.
pub fn classify_regime(params: &ModelParams) -> Result<TheoryResult, TheoryError> {
    classify_regime_up_to(params, DEFAULT_K_MAX)
}

pub fn classify_regime_up_to(params: &ModelParams, k_max: usize) -> Result<TheoryResult, TheoryError> {
    match regime_of(params) {
        Regime::Supercritical => solve_fixed_point(params, k_max),
        regime => Ok(TheoryResult {
            regime,
            exponent: params.exponent(),
            critical_constant: critical_constant(params),
            x_star: Vec::new(),
            k: 0,
            r_m: params.r_m(),
            k_max_reached: false,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(a: f64, alpha: f64, d: u32, m_dist: Vec<f64>) -> ModelParams {
        ModelParams::new(a, 1.0, alpha, 1.0, d, m_dist, 8).unwrap()
    }

    /// Pr(at most r-1 events) by enumerating all subsets.
    fn q_by_enumeration(r: usize, probs: &[f64]) -> f64 {
        let n = probs.len();
        (0u32..1 << n)
            .filter(|mask| (mask.count_ones() as usize) < r)
            .map(|mask| {
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { probs[j] } else { 1.0 - probs[j] })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn h_values() {
        assert_eq!(h_fn(0.0, 0.3, 2).unwrap(), 0.0);
        assert_eq!(h_fn(1.0 / 0.3, 0.3, 2).unwrap(), 1.0);
        assert!((h_fn(1.0, 0.3, 2).unwrap() - 0.51).abs() < 1e-15);
        assert_eq!(h_fn(10.0, 0.3, 3).unwrap(), 1.0);
        assert!(h_fn(-0.1, 0.3, 2).is_err());
    }

    #[test]
    fn q_poly_examples() {
        assert_eq!(q_poly(1, 3, &[]).unwrap(), 1.0);
        assert!((q_poly(3, 1, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
        // 1 - 0.5556^2 = 0.69133..., the frozen 0.69135 comes from
        // h = 5/9 exactly: 1 - 25/81
        assert!((q_poly(3, 2, &[0.5556, 0.5556]).unwrap() - (1.0 - 0.5556 * 0.5556)).abs() < 1e-15);
        assert!((q_poly(3, 2, &[5.0 / 9.0, 5.0 / 9.0]).unwrap() - 56.0 / 81.0).abs() < 1e-15);
        assert_eq!(q_poly(2, 2, &[0.9]).unwrap(), 1.0);
        assert!(q_poly(3, 1, &[0.5, 1.5]).is_err());
    }

    #[test]
    fn q_expected_examples() {
        assert!((q_expected(2, &[1.0], &[0.3]).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(q_expected(2, &[0.0, 1.0], &[0.3]).unwrap(), 1.0);
        assert!((q_expected(2, &[0.5, 0.5], &[0.5]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn f_1_expansion() {
        let p = params(0.5, 0.3, 2, vec![1.0]);
        let empty = QEvaluation::default();
        assert_eq!(f_k(0.0, &empty, 1, &p).unwrap(), 0.0);
        for x in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let expected = 0.1 * x - 0.09 * x * x;
            assert!((f_k(x, &empty, 1, &p).unwrap() - expected).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn slope_at_zero() {
        let p = params(0.3, 0.4, 3, vec![0.5, 0.5]);
        let prefix = QEvaluation { h_values: vec![0.6, 0.3] };
        let q = q_expected(3, &p.m_dist, &prefix.h_values).unwrap();
        let eps = 1e-7;
        let numeric = f_k(eps, &prefix, 3, &p).unwrap() / eps;
        assert!((numeric - (p.a - 1.0 + 3.0 * 0.4 * q)).abs() < 1e-5);
    }

    #[test]
    fn solve_single_giant() {
        let res = solve_fixed_point(&params(0.5, 0.3, 2, vec![1.0]), 10).unwrap();
        assert_eq!(res.k, 1);
        assert!((res.x_star[0] - 10.0 / 9.0).abs() < 1e-10);
        assert!(!res.k_max_reached);
    }

    #[test]
    fn solve_two_giants() {
        let res = solve_fixed_point(&params(0.5, 0.3, 2, vec![0.0, 1.0]), 10).unwrap();
        assert_eq!(res.k, 2);
        assert!((res.x_star[0] - 10.0 / 9.0).abs() < 1e-10);
        assert_eq!(res.x_star[0], res.x_star[1]);
    }

    #[test]
    fn subcritical_has_no_roots() {
        let p = params(0.2, 0.2, 2, vec![1.0]);
        let res = solve_fixed_point(&p, 10).unwrap();
        assert_eq!(res.k, 0);
        assert!(res.x_star.is_empty());
        let class = classify_regime(&p).unwrap();
        assert_eq!(class.regime, Regime::Subcritical);
        assert!((class.exponent - 0.6).abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        let crit = classify_regime(&params(0.4, 0.3, 2, vec![1.0])).unwrap();
        assert_eq!(crit.regime, Regime::Critical);
        assert!((crit.critical_constant - 2.0 / 0.36).abs() < 1e-12);
        assert_eq!(crit.k, 0);
        let sup = classify_regime(&params(0.5, 0.3, 2, vec![1.0])).unwrap();
        assert_eq!(sup.regime, Regime::Supercritical);
        assert!((sup.x_star[0] - 1.1111).abs() < 1e-4);
        assert!(is_delicate(&params(0.4, 0.3, 2, vec![1.0])));
        assert!(!is_delicate(&params(0.5, 0.3, 2, vec![1.0])));
    }

    #[test]
    fn drift_examples() {
        let p = params(0.5, 0.3, 2, vec![1.0]);
        assert_eq!(drift(1, &[0.0], &p).unwrap(), 0.0);
        assert!((drift(1, &[0.5], &p).unwrap() - 0.5275).abs() < 1e-15);
        let x1 = solve_fixed_point(&p, 1).unwrap().x_star[0];
        assert!((drift(1, &[x1], &p).unwrap() - x1).abs() < 1e-10);
        // rank 2 under m = 1 needs rank 1 absent
        let g2 = drift(2, &[1.0, 0.5], &p).unwrap();
        assert!((g2 - (0.25 + 0.2775 * 0.49)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn q_poly_matches_enumeration(
            probs in proptest::collection::vec(0.0f64..=1.0, 0..7),
            r in 1usize..5,
        ) {
            let i = probs.len() + 1;
            let dp = q_poly(i, r, &probs).unwrap();
            let brute = if i <= r { 1.0 } else { q_by_enumeration(r, &probs) };
            prop_assert!((dp - brute).abs() < 1e-12, "dp {} brute {}", dp, brute);
        }

        #[test]
        fn q_monotone_pattern(
            mut xs in proptest::collection::vec(0.001f64..2.0, 2..8),
            w in proptest::collection::vec(0.0f64..1.0, 1..4),
            lead_zeros in 0usize..3,
            alpha in 0.01f64..0.49,
            d in 1u32..4,
        ) {
            xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut m_dist = vec![0.0; lead_zeros];
            let total: f64 = w.iter().sum::<f64>() + 1e-9;
            m_dist.extend(w.iter().map(|v| (v + 1e-9 / w.len() as f64) / total));
            let r_m = lead_zeros + 1;
            let h: Vec<f64> = xs.iter().map(|&x| h_fn(x, alpha, d).unwrap()).collect();
            for i in 1..xs.len() {
                let qi = q_expected(i, &m_dist, &h).unwrap();
                let qn = q_expected(i + 1, &m_dist, &h).unwrap();
                if i < r_m {
                    prop_assert_eq!(qi, qn);
                } else {
                    prop_assert!(qi > qn, "i={} r_m={} {} <= {}", i, r_m, qi, qn);
                }
            }
        }

        #[test]
        fn h_is_monotone_and_bounded(x in 0.0f64..10.0, y in 0.0f64..10.0, alpha in 0.01f64..0.49, d in 1u32..6) {
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            let (hl, hh) = (h_fn(lo, alpha, d).unwrap(), h_fn(hi, alpha, d).unwrap());
            prop_assert!(hl <= hh);
            prop_assert!((0.0..=1.0).contains(&hl) && (0.0..=1.0).contains(&hh));
            if alpha * hi <= 1.0 {
                prop_assert_eq!(hh, 1.0 - (1.0 - alpha * hi).powi(d as i32));
            }
        }

        #[test]
        fn f_is_concave(
            mut pts in proptest::collection::vec(0.0f64..3.0, 3),
            a in 0.01f64..0.49, alpha in 0.01f64..0.49, d in 1u32..5, q in 0.0f64..=1.0,
        ) {
            pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let (x, y, z) = (pts[0], pts[1], pts[2]);
            prop_assume!(z - x > 1e-6);
            let p = ModelParams::new(a, 1.0, alpha, 1.0, d, vec![1.0], 8).unwrap();
            let f = |v: f64| f_with_q(v, q, &p);
            let t = (y - x) / (z - x);
            prop_assert!(f(y) >= (1.0 - t) * f(x) + t * f(z) - 1e-12);
        }

        #[test]
        fn roots_are_accurate_and_ordered(
            a in 0.05f64..0.49, alpha in 0.05f64..0.49, d in 1u32..5,
            w in proptest::collection::vec(0.0f64..1.0, 1..4),
        ) {
            let total: f64 = w.iter().sum::<f64>() + 1e-6;
            let m_dist: Vec<f64> = w.iter().map(|v| (v + 1e-6 / w.len() as f64) / total).collect();
            let p = ModelParams::new(a, 1.0, alpha, 1.0, d, m_dist, 8).unwrap();
            let res = solve_fixed_point(&p, 12).unwrap();
            prop_assert_eq!(res.k >= 1, res.regime == Regime::Supercritical);
            let mut prefix = QEvaluation::default();
            for (k, &x) in res.x_star.iter().enumerate() {
                prop_assert!(x > 0.0);
                prop_assert!(f_k(x, &prefix, k + 1, &p).unwrap().abs() <= 1e-10);
                prefix.h_values.push(h_fn(x, alpha, d).unwrap());
            }
            prop_assert!(res.x_star.windows(2).all(|v| v[0] >= v[1]));
        }
    }
}
