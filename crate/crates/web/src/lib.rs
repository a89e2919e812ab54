//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Everything crosses the boundary as numbers, strings and JSON text so the
//! page needs no generated TypeScript types. The `*_json` functions and
//! [`Model::build`] are plain Rust and are what the native tests call.

use serde::Serialize;
use spatial_choice::params::parse_m_dist;
use spatial_choice::rng::derive_stream;
use spatial_choice::theory::{self, TheoryResult};
use spatial_choice::{GraphState, ModelParams, RngStream};
use wasm_bindgen::prelude::*;

/// Largest rank the demo solves for; the page only draws a handful.
const K_MAX: usize = 16;
const CURVE_POINTS: usize = 200;

fn params_from(a: f64, b: f64, alpha: f64, beta: f64, d: u32, m_dist: &str, n0: usize) -> Result<ModelParams, String> {
    let m = parse_m_dist(m_dist).map_err(|e| e.to_string())?;
    ModelParams::new(a, b, alpha, beta, d, m, n0).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    k: usize,
    /// `(x, f_k(x))` on an even grid.
    points: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct TheoryView {
    #[serde(flatten)]
    result: TheoryResult,
    delicate: bool,
    curves: Vec<Curve>,
}

/// Fixed-point solution plus `f_k` on `[0, x_max]` for the solved ranks and
/// the first rank without a positive root.
pub fn theory_json(a: f64, alpha: f64, d: u32, m_dist: &str) -> Result<String, String> {
    // b, beta and n0 do not enter the limits; any valid values do.
    let n0 = parse_m_dist(m_dist).map(|m| m.len() + 1).unwrap_or(2);
    let params = params_from(a, 1.0, alpha, 1.0, d, m_dist, n0)?;
    let result = theory::classify_regime_up_to(&params, K_MAX).map_err(|e| e.to_string())?;
    let x_max = 1.0 / (1.0 - a);
    let mut prefix = theory::QEvaluation::default();
    let mut curves = Vec::new();
    for k in 1..=(result.k + 1).min(K_MAX) {
        let mut points = Vec::with_capacity(CURVE_POINTS + 1);
        for i in 0..=CURVE_POINTS {
            let x = x_max * i as f64 / CURVE_POINTS as f64;
            let y = theory::f_k(x, &prefix, k, &params).map_err(|e| e.to_string())?;
            points.push((x, y));
        }
        curves.push(Curve { k, points });
        if let Some(&x) = result.x_star.get(k - 1) {
            prefix.h_values.push(theory::h_fn(x, alpha, d).map_err(|e| e.to_string())?);
        }
    }
    let view = TheoryView {
        delicate: theory::is_delicate(&params),
        result,
        curves,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Solves the fixed-point system; returns JSON with `regime`, `x_star`,
/// `K`, the critical constant and sampled `f_k` curves.
#[wasm_bindgen]
pub fn theory(a: f64, alpha: f64, d: u32, m_dist: &str) -> Result<String, JsError> {
    theory_json(a, alpha, d, m_dist).map_err(|e| JsError::new(&e))
}

#[derive(Serialize)]
struct Frame {
    n: u64,
    edges: u64,
    top: Vec<u64>,
}

#[derive(Serialize)]
struct Vertex {
    position: f64,
    degree: u32,
}

/// A graph that grows in chunks so the page can animate it.
#[wasm_bindgen]
pub struct Model {
    state: GraphState,
    rng: RngStream,
    track_k: usize,
}

impl Model {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        d: u32,
        m_dist: &str,
        n0: usize,
        seed: u64,
        track_k: usize,
    ) -> Result<Model, String> {
        let params = params_from(a, b, alpha, beta, d, m_dist, n0)?.with_seed(seed).with_track_k(track_k.max(1));
        let mut rng = derive_stream(seed, 0);
        let state = GraphState::init(&params, &mut rng);
        Ok(Model {
            state,
            rng,
            track_k: track_k.max(1),
        })
    }

    fn frame(&self) -> Frame {
        Frame {
            n: self.state.n(),
            edges: self.state.total_edges(),
            top: self.state.top_degrees(self.track_k),
        }
    }

    pub fn advance_frame(&mut self, steps: u32) -> String {
        for _ in 0..steps {
            self.state.step(&mut self.rng);
        }
        serde_json::to_string(&self.frame()).expect("frame serializes")
    }
}

#[wasm_bindgen]
impl Model {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        d: u32,
        m_dist: &str,
        n0: usize,
        seed: u64,
        track_k: usize,
    ) -> Result<Model, JsError> {
        Model::build(a, b, alpha, beta, d, m_dist, n0, seed, track_k).map_err(|e| JsError::new(&e))
    }

    /// Runs `steps` more steps; returns `{"n", "edges", "top"}` as JSON.
    pub fn advance(&mut self, steps: u32) -> String {
        self.advance_frame(steps)
    }

    pub fn n(&self) -> u64 {
        self.state.n()
    }

    /// The `count` highest-degree vertices as `[{position, degree}]`,
    /// for drawing on the circle.
    pub fn leaders(&self, count: usize) -> String {
        let degrees = self.state.degrees();
        let mut ids: Vec<usize> = (0..degrees.len()).collect();
        ids.sort_by(|&x, &y| degrees[y].cmp(&degrees[x]).then(x.cmp(&y)));
        ids.truncate(count);
        let out: Vec<Vertex> = ids
            .into_iter()
            .map(|id| Vertex {
                position: self.state.positions()[id],
                degree: degrees[id],
            })
            .collect();
        serde_json::to_string(&out).expect("vertices serialize")
    }
}
