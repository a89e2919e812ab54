//! Model parameters and their validation.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Tolerance on the sum of the law of `m`.
const DIST_SUM_TOL: f64 = 1e-12;

/// Parameters of the growth process plus run controls.
///
/// `m_dist[r - 1]` is the probability that an edge step draws `r` edges,
/// so `m_dist.len()` is the largest possible draw `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub d: u32,
    pub m_dist: Vec<f64>,
    pub n0: usize,
    pub steps: u64,
    pub seed: u64,
    pub track_k: usize,
    pub checkpoint_stride: u64,
}

impl ModelParams {
    /// Builds parameters with `steps = 0`, `seed = 0`, `track_k = 1` and
    /// `checkpoint_stride = 1`; use the `with_*` setters for run controls.
    pub fn new(
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        d: u32,
        m_dist: Vec<f64>,
        n0: usize,
    ) -> Result<Self, ParamError> {
        let params = ModelParams {
            a,
            b,
            alpha,
            beta,
            d,
            m_dist,
            n0,
            steps: 0,
            seed: 0,
            track_k: 1,
            checkpoint_stride: 1,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_track_k(mut self, track_k: usize) -> Self {
        self.track_k = track_k;
        self
    }

    pub fn with_checkpoint_stride(mut self, stride: u64) -> Self {
        self.checkpoint_stride = stride;
        self
    }

    /// Largest value `m` can take.
    pub fn max_m(&self) -> usize {
        self.m_dist.len()
    }

    /// Smallest `r` with `Pr(m = r) > 0`.
    pub fn r_m(&self) -> usize {
        self.m_dist
            .iter()
            .position(|&p| p > 0.0)
            .map(|i| i + 1)
            .unwrap_or(0)
    }

    /// `a + d * alpha`, the exponent governing the regime.
    pub fn exponent(&self) -> f64 {
        self.a + self.d as f64 * self.alpha
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let half_open = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 && v <= 0.5 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value: v,
                    expected: "in (0, 1/2]",
                })
            }
        };
        let open_half = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 && v < 0.5 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value: v,
                    expected: "in (0, 1/2)",
                })
            }
        };
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value: v,
                    expected: "> 0",
                })
            }
        };
        half_open("a", self.a)?;
        open_half("alpha", self.alpha)?;
        positive("b", self.b)?;
        positive("beta", self.beta)?;
        if self.d == 0 {
            return Err(ParamError::Integer {
                name: "d",
                expected: ">= 1",
            });
        }
        if self.m_dist.is_empty() {
            return Err(ParamError::MDist("empty distribution".into()));
        }
        if let Some(p) = self.m_dist.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(ParamError::MDist(format!("negative or non-finite entry {p}")));
        }
        let total: f64 = self.m_dist.iter().sum();
        if (total - 1.0).abs() > DIST_SUM_TOL {
            return Err(ParamError::MDist(format!("entries sum to {total}, not 1")));
        }
        if self.n0 <= self.max_m() {
            return Err(ParamError::InitialGraph {
                n0: self.n0,
                max_m: self.max_m(),
            });
        }
        if self.track_k == 0 {
            return Err(ParamError::Integer {
                name: "track_k",
                expected: ">= 1",
            });
        }
        if self.checkpoint_stride == 0 {
            return Err(ParamError::Integer {
                name: "checkpoint_stride",
                expected: ">= 1",
            });
        }
        Ok(())
    }
}

/// Parses a comma separated probability vector such as `0.5,0.5`.
pub fn parse_m_dist(text: &str) -> Result<Vec<f64>, ParamError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ParamError::MDist(format!("cannot parse {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::new(0.5, 1.0, 0.3, 1.0, 2, vec![1.0], 8).unwrap()
    }

    #[test]
    fn rejects_out_of_range_reals() {
        assert!(ModelParams::new(0.5, 1.0, 0.3, 1.0, 2, vec![1.0], 8).is_ok());
        assert!(ModelParams::new(0.500001, 1.0, 0.3, 1.0, 2, vec![1.0], 8).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.3, 1.0, 2, vec![1.0], 8).is_err());
        assert!(ModelParams::new(0.2, 0.0, 0.3, 1.0, 2, vec![1.0], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.5, 1.0, 2, vec![1.0], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.3, -1.0, 2, vec![1.0], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 0, vec![1.0], 8).is_err());
    }

    #[test]
    fn rejects_small_initial_graph() {
        let err = ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![0.5, 0.5], 2).unwrap_err();
        assert!(matches!(err, ParamError::InitialGraph { n0: 2, max_m: 2 }));
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![0.5, 0.5], 3).is_ok());
    }

    #[test]
    fn m_dist_must_be_a_law() {
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![0.5, 0.4], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![1.5, -0.5], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![], 8).is_err());
        assert!(ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![0.0, 1.0], 8).is_ok());
    }

    #[test]
    fn r_m_is_first_supported_value() {
        assert_eq!(base().r_m(), 1);
        let p = ModelParams::new(0.2, 1.0, 0.3, 1.0, 2, vec![0.0, 0.3, 0.7], 8).unwrap();
        assert_eq!(p.r_m(), 2);
        assert_eq!(p.max_m(), 3);
    }

    #[test]
    fn parses_m_dist() {
        assert_eq!(parse_m_dist("0.5, 0.5").unwrap(), vec![0.5, 0.5]);
        assert!(parse_m_dist("0.5,x").is_err());
    }
}
